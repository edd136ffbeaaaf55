"""Curved-characteristic geometry, transmission factors and their angular moments.

A characteristic is labelled by its reference altitude z and cosine mu; the
local cosine anywhere else follows from the Snell invariant n(z) sin(theta),
which is conserved along the ray including across the interface.  Where the
invariant exceeds the local index the ray is evanescent and transports
nothing.

Two bookkeeping conventions for the legs that cross the interface are
implemented:

* ``"snell"`` (default, used by the solver): the local cosine is the direct
  continuation sqrt(1 - (n_z/n_y)^2 (1 - mu^2)) on both sides, and boundary
  radiance picked up along a leg is weighted once by the arrival cosine.
* ``"composed"``: the crossed leg re-applies the interface index ratio on
  top of the continued cosine.  Kept selectable so the discrete-ordinates
  reference can adjudicate; tests show "snell" is the consistent reading.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expn

from .fresnel import critical_cosine, refracted_cosine
from .grids import AltitudeGrid, OpticalPaths
from .medium import DensityProfile, RefractiveProfile
from .quadrature import AngularRule, half_range_rule

SNELL = "snell"
COMPOSED = "composed"


@dataclass(frozen=True)
class CharacteristicFrame:
    """Reference point and direction defining one characteristic."""

    z: float
    mu: float
    profile: RefractiveProfile
    above: bool | None = None  # side tag, needed only when z sits on the interface

    def _n_ref(self) -> float:
        return self.profile.n_at(self.z, self.above)

    def direction(self, y):
        """Signed local cosine of the characteristic at altitude y (NaN if evanescent)."""
        y = np.asarray(y, dtype=float)
        n_ratio = self._n_ref() / np.where(y > self.profile.y_interface,
                                           self.profile.n_above, self.profile.n_below)
        rad = 1.0 - n_ratio**2 * (1.0 - self.mu**2)
        with np.errstate(invalid="ignore"):
            mag = np.where(rad >= 0.0, np.sqrt(np.clip(rad, 0.0, None)), np.nan)
        out = np.sign(self.mu) * mag
        return out if out.ndim else float(out)

    def angle_at(self, y):
        """Unsigned local cosine at altitude y (NaN if evanescent)."""
        return np.abs(self.direction(y))


def transmission(z1: float, z2: float, frame: CharacteristicFrame, kappa,
                 rel_tol: float = 1e-8, max_level: int = 14) -> float:
    """exp(-integral of kappa(y)/cosine(y) dy from z1 to z2) along the frame.

    Returns exactly 1.0 when z1 == z2 and 0.0 when any part of the path is
    evanescent.  Composite 8-point Gauss with panels bounded by the medium
    breakpoints, halved until the exponent is stable to `rel_tol`.
    """
    if z2 < z1:
        raise ValueError("need z1 <= z2")
    if z2 == z1:
        return 1.0
    breaks = sorted({z1, z2, frame.profile.y_interface})
    edges = [b for b in breaks if z1 <= b <= z2]

    def exponent(n_half: int) -> float:
        total = 0.0
        for a, b in zip(edges[:-1], edges[1:]):
            sub = np.linspace(a, b, n_half + 1)
            for lo, hi in zip(sub[:-1], sub[1:]):
                x, w = np.polynomial.legendre.leggauss(8)
                y = 0.5 * (hi - lo) * (x + 1.0) + lo
                ang = frame.angle_at(y)
                if np.any(np.isnan(ang)) or np.any(ang <= 0.0):
                    return np.inf
                total += 0.5 * (hi - lo) * float(np.sum(w * kappa(y) / ang))
        return total

    prev = exponent(1)
    for level in range(1, max_level):
        cur = exponent(2**level)
        if np.isinf(cur):
            return 0.0
        if abs(cur - prev) <= rel_tol * max(abs(cur), 1e-300):
            return float(np.exp(-cur))
        prev = cur
    return float(np.exp(-prev))


def profile_criticals(profile: RefractiveProfile) -> tuple[float, ...]:
    """Critical cosines induced by the refractive step (at most one is > 0)."""
    crits = []
    for ratio in (profile.ratio_from_below, profile.ratio_from_above):
        mc = critical_cosine(ratio)
        if mc > 0.0:
            crits.append(mc)
    return tuple(crits)


def angular_rule_for(profile: RefractiveProfile, n_nodes: int = 64) -> AngularRule:
    return half_range_rule(profile_criticals(profile), n_nodes)


def crossed_cosine(ratio: float, mu: np.ndarray, convention: str = SNELL) -> np.ndarray:
    """Local cosine on the far side of the interface for a frame cosine mu."""
    if convention == SNELL:
        return np.asarray(refracted_cosine(ratio, mu))
    if convention == COMPOSED:
        return np.asarray(refracted_cosine(ratio * ratio, mu))
    raise ValueError(f"unknown convention {convention!r}")


def _crossed_block(tau_frame: np.ndarray, tau_far: np.ndarray, kappa_bar: float,
                   rule: AngularRule, ratio: float, k: int, j: int,
                   convention: str) -> np.ndarray:
    """Angular moment of the two-leg attenuation for interface-crossing pairs.

    Rows are frame-side nodes (path tau_frame to the interface, local cosine
    mu), columns far-side nodes (path tau_far, local cosine eta).  Evanescent
    cosines contribute nothing.
    """
    mu = rule.nodes
    eta = crossed_cosine(ratio, mu, convention)
    ok = ~np.isnan(eta) & (eta > 0.0)
    mu, eta, w = mu[ok], eta[ok], rule.weights[ok]
    if mu.size == 0:
        return np.zeros((tau_frame.size, tau_far.size))
    a = np.exp(-kappa_bar * np.outer(1.0 / mu, tau_frame))
    b = np.exp(-kappa_bar * np.outer(1.0 / eta, tau_far))
    f = w * mu**k * eta** j
    return (a * f[:, None]).T @ b


def psi_moment_matrices(grid: AltitudeGrid, paths: OpticalPaths,
                        profile: RefractiveProfile, kappa_bar: float,
                        rule: AngularRule, kinds, convention: str = SNELL) -> dict:
    """Pointwise matrices of the cosine moments of the two-point transmission.

    Entry (i, i') is the integral over (0, 1) of mu^k eta^j times the
    attenuation between nodes i and i' along the characteristic whose
    reference is node i.  Same-side pairs reduce to exponential integrals
    E_{k+j+2}; crossing pairs carry the refracted cosine on the far leg.
    """
    below = np.flatnonzero(grid.below)
    above = np.flatnonzero(grid.above)
    out = {}
    for (k, j) in kinds:
        m = np.zeros((grid.size, grid.size))
        for side in (below, above):
            sep = kappa_bar * np.abs(paths.cumulative[side][:, None] - paths.cumulative[side][None, :])
            with np.errstate(divide="ignore"):
                m[np.ix_(side, side)] = expn(k + j + 2, sep)
        m[np.ix_(below, above)] = _crossed_block(
            paths.to_interface[below], paths.to_interface[above], kappa_bar,
            rule, profile.ratio_from_below, k, j, convention)
        m[np.ix_(above, below)] = _crossed_block(
            paths.to_interface[above], paths.to_interface[below], kappa_bar,
            rule, profile.ratio_from_above, k, j, convention)
        out[(k, j)] = m
    return out


@dataclass
class TransmissionTable:
    """Tabulated angular moments of the transmission factor on the (z, z') grid.

    One matrix per kappa_bar level and per (k, j) moment kind; lookups blend
    linearly between the two bracketing levels.
    """

    grid: AltitudeGrid
    levels: np.ndarray
    kinds: tuple
    matrices: dict = field(repr=False)
    convention: str = SNELL

    @classmethod
    def build(cls, grid: AltitudeGrid, profile: RefractiveProfile, rho: DensityProfile,
              levels: np.ndarray | None = None, rule: AngularRule | None = None,
              kinds=((0, 0), (0, 2), (2, 0), (2, 2)),
              convention: str = SNELL) -> "TransmissionTable":
        if levels is None:
            levels = np.linspace(0.01, 1.2, 60)
        levels = np.asarray(levels, dtype=float)
        if np.any(np.diff(levels) <= 0.0):
            raise ValueError("levels must be ascending")
        if rule is None:
            rule = angular_rule_for(profile)
        paths = grid.optical_paths(rho)
        matrices = {kind: np.empty((levels.size, grid.size, grid.size)) for kind in kinds}
        for il, kb in enumerate(levels):
            per = psi_moment_matrices(grid, paths, profile, float(kb), rule, kinds, convention)
            for kind in kinds:
                matrices[kind][il] = per[kind]
        return cls(grid, levels, tuple(kinds), matrices, convention)

    def _blend(self, kappa_bar: float) -> tuple[int, float]:
        lv = self.levels
        if kappa_bar < lv[0] - 1e-9 or kappa_bar > lv[-1] + 1e-9:
            raise ValueError(f"kappa_bar {kappa_bar} outside tabulated range "
                             f"({lv[0]}, {lv[-1]})")
        if lv.size == 1:
            return 0, 1.0
        kb = float(np.clip(kappa_bar, lv[0], lv[-1]))
        hi = int(np.clip(np.searchsorted(lv, kb), 1, lv.size - 1))
        frac = (kb - lv[hi - 1]) / (lv[hi] - lv[hi - 1])
        return hi, float(frac)

    def moment(self, k: int, j: int, kappa_bar: float) -> np.ndarray:
        """Interpolated (z, z') moment matrix at the requested kappa_bar."""
        hi, frac = self._blend(kappa_bar)
        stack = self.matrices[(k, j)]
        return (1.0 - frac) * stack[hi - 1] + frac * stack[hi]

    # -- binary cache ------------------------------------------------------

    def cache_key(self) -> bytes:
        h = hashlib.sha256()
        h.update(self.grid.z.tobytes())
        h.update(self.grid.above.tobytes())
        h.update(self.levels.tobytes())
        h.update(repr(self.kinds).encode())
        h.update(self.convention.encode())
        return h.digest()

    def save(self, path) -> None:
        arrays = {f"m_{k}_{j}": self.matrices[(k, j)] for (k, j) in self.kinds}
        write_table_blob(path, self.cache_key(), arrays)

    def load_cached(self, path) -> bool:
        """Replace the matrices from a cache file if its key matches."""
        arrays = read_table_blob(path, self.cache_key())
        if arrays is None:
            return False
        for (k, j) in self.kinds:
            self.matrices[(k, j)] = arrays[f"m_{k}_{j}"]
        return True


_MAGIC = b"VRRTAB01"


def write_table_blob(path, key: bytes, arrays: dict) -> None:
    """Versioned binary dump: magic, key, then named row-major float64 arrays."""
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<I", len(key)))
        fh.write(key)
        fh.write(struct.pack("<I", len(arrays)))
        for name in sorted(arrays):
            arr = np.ascontiguousarray(arrays[name], dtype=np.float64)
            nb = name.encode()
            fh.write(struct.pack("<I", len(nb)))
            fh.write(nb)
            fh.write(struct.pack("<I", arr.ndim))
            fh.write(struct.pack(f"<{arr.ndim}q", *arr.shape))
            fh.write(arr.tobytes())


def read_table_blob(path, key: bytes):
    """Read a table blob; returns None if missing or keyed differently."""
    try:
        fh = open(path, "rb")
    except OSError:
        return None
    with fh:
        if fh.read(len(_MAGIC)) != _MAGIC:
            return None
        (klen,) = struct.unpack("<I", fh.read(4))
        if fh.read(klen) != key:
            return None
        (count,) = struct.unpack("<I", fh.read(4))
        arrays = {}
        for _ in range(count):
            (nlen,) = struct.unpack("<I", fh.read(4))
            name = fh.read(nlen).decode()
            (ndim,) = struct.unpack("<I", fh.read(4))
            shape = struct.unpack(f"<{ndim}q", fh.read(8 * ndim))
            n_items = int(np.prod(shape))
            arrays[name] = np.frombuffer(fh.read(8 * n_items), dtype=np.float64).reshape(shape).copy()
        return arrays
