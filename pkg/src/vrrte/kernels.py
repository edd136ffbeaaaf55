"""Interface kernels and boundary moment vectors for the moment equations.

For every kappa_bar level this module tabulates, on the (z, z') grid:

* the cosine moments of the two-point transmission (the kernel coupling
  volume sources to moments with a continuous index),
* the interface kernels, stored per polarization in the (I_l, I_r) basis
  where the interface operators are diagonal,
* the boundary vectors: direct attenuation of the boundary data plus the
  interface-induced correction (reflection of one boundary and the
  transmission deficit of the other).

Moment kind (k, j) means the integrand mu^k eta^j: k is the moment order at
the target altitude and eta^j carries the source evaluation at the local
cosine together with the 1/eta change-of-variables factor, so volume
sources pair with j = -1 (isotropic part) and j = +1 (the mu^2 part).

Numerics: same-side attenuation moments are exponential integrals
E_{k+j+2}(optical distance); they are stored as closed-form averages over
each target cell so the trapezoidal z'-sum integrates the weakly singular
kernel correctly.  Interface reflection kernels split into an
exponential-integral part (same treatment) and a smooth grazing-deficit
remainder under the shared angular rule.  Transmission kernels use the same
angular nodes as the crossing attenuation moments, which makes the
continuation terms of the radiance jump cancel the crossing moments exactly
node-by-node, keeping the combined kernels nonnegative.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expn

from .characteristics import (COMPOSED, SNELL, CharacteristicFrame,
                              angular_rule_for, crossed_cosine, read_table_blob,
                              transmission, write_table_blob)
from .fresnel import reflectance_pair, transmittance_pair
from .grids import AltitudeGrid
from .medium import DensityProfile, RefractiveProfile
from .quadrature import AngularRule

SOLVER_KINDS = ((0, -1), (0, 1), (2, -1), (2, 1))
MOMENT_ORDERS = (0, 2)


def psi(z: float, zp: float, frame: CharacteristicFrame, kappa) -> float:
    """Role-symmetric attenuation between z and z' along the frame."""
    lo, hi = (z, zp) if z <= zp else (zp, z)
    return transmission(lo, hi, frame, kappa)


def _ae(n: int, x) -> np.ndarray:
    """Antiderivative of the exponential integral: integral_0^x E_n(t) dt."""
    return 1.0 / n - expn(n + 1, x)


@dataclass(frozen=True)
class _SideCells:
    """Per-node trapezoid cells of one side, with path values at the edges."""

    z: np.ndarray
    a: np.ndarray            # left cell edge
    b: np.ndarray            # right cell edge
    cum: np.ndarray          # cumulative density path at the nodes
    cum_a: np.ndarray
    cum_b: np.ndarray
    tif: np.ndarray          # density path node -> interface
    tif_a: np.ndarray
    tif_b: np.ndarray
    widths: np.ndarray

    @classmethod
    def build(cls, z: np.ndarray, rho: DensityProfile, cum_y: float) -> "_SideCells":
        a = z.copy()
        b = z.copy()
        if z.size > 1:
            mid = 0.5 * (z[:-1] + z[1:])
            a[1:] = mid
            b[:-1] = mid
        cum = rho.cumulative(z)
        cum_a = rho.cumulative(a)
        cum_b = rho.cumulative(b)
        return cls(z, a, b, cum, cum_a, cum_b,
                   np.abs(cum - cum_y), np.abs(cum_a - cum_y), np.abs(cum_b - cum_y),
                   b - a)


def _avg_band(n_e: int, kb: float, u_a, u_m, u_b, cells: _SideCells) -> np.ndarray:
    """Cell averages of E_{n_e}(kb * u) from the path argument u at the column
    cell's edges and node; u is monotone on each half-cell, so each half is a
    difference of antiderivatives divided by the local density slope."""
    left_w = cells.z - cells.a
    right_w = cells.b - cells.z
    rho_l = np.where(left_w > 0, (cells.cum - cells.cum_a) / np.where(left_w > 0, left_w, 1.0), 1.0)
    rho_r = np.where(right_w > 0, (cells.cum_b - cells.cum) / np.where(right_w > 0, right_w, 1.0), 1.0)
    left = np.abs(_ae(n_e, kb * u_m) - _ae(n_e, kb * u_a)) / (kb * rho_l)[None, :]
    right = np.abs(_ae(n_e, kb * u_b) - _ae(n_e, kb * u_m)) / (kb * rho_r)[None, :]
    left = np.where(left_w[None, :] > 0, left, 0.0)
    right = np.where(right_w[None, :] > 0, right, 0.0)
    return (left + right) / cells.widths[None, :]


def _same_side_moment(n_e: int, kb: float, cells: _SideCells) -> np.ndarray:
    u_a = np.abs(cells.cum[:, None] - cells.cum_a[None, :])
    u_m = np.abs(cells.cum[:, None] - cells.cum[None, :])
    u_b = np.abs(cells.cum[:, None] - cells.cum_b[None, :])
    return _avg_band(n_e, kb, u_a, u_m, u_b, cells)


@dataclass(frozen=True)
class _MuData:
    """Angular-rule samples of the interface operators for one incidence side."""

    ratio: float
    mu: np.ndarray
    w: np.ndarray
    refl: dict               # pol -> reflectance samples
    trans: dict              # pol -> transmittance samples
    eta: np.ndarray          # crossed cosine, active convention (NaN = evanescent)
    eta_snell: np.ndarray

    @classmethod
    def build(cls, ratio: float, rule: AngularRule, convention: str) -> "_MuData":
        xl, xr = reflectance_pair(ratio, rule.nodes)
        yl, yr = transmittance_pair(ratio, rule.nodes)
        return cls(ratio, rule.nodes, rule.weights,
                   {"l": xl, "r": xr}, {"l": yl, "r": yr},
                   crossed_cosine(ratio, rule.nodes, convention),
                   crossed_cosine(ratio, rule.nodes, SNELL))


def _factor(mud: _MuData, k: int, j: int, pol_weight=None, eta=None) -> np.ndarray:
    """Quadrature factor w * mu^k * eta^j (* pol_weight), zero where evanescent."""
    eta = mud.eta if eta is None else eta
    ok = ~np.isnan(eta) & (eta > 0.0)
    f = np.zeros_like(mud.mu)
    f[ok] = mud.w[ok] * mud.mu[ok] ** k * eta[ok] ** j
    if pol_weight is not None:
        f[ok] *= pol_weight[ok]
    return f


def _far_attenuation(kb: float, path: float, eta: np.ndarray) -> np.ndarray:
    """exp(-kb * path / eta) per angular node, zero where evanescent."""
    ok = ~np.isnan(eta) & (eta > 0.0)
    out = np.zeros_like(eta)
    out[ok] = np.exp(-kb * path / eta[ok])
    return out


def _pair_sum(factors: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """sum_m factors[m] * a[m, i] * b[m, i'] as an (i, i') matrix."""
    return (a * factors[:, None]).T @ b


def _exp_leg_avg(kb: float, cells: _SideCells, cosines: np.ndarray) -> np.ndarray:
    """Cell-averaged far-side attenuation exp(-kb * tau_to_interface / cosine)
    as a (cosine, column-node) matrix; 0 where evanescent.

    Averaging over the target cell (closed form per half-cell) is what makes
    the trapezoidal z'-sum a product integration; it also removes the
    1/cosine singularity of the j = -1 moment kinds analytically.
    """
    ok = ~np.isnan(cosines) & (cosines > 0.0)
    eta = cosines[ok]
    out = np.zeros((cosines.size, cells.z.size))

    def half(t_from: np.ndarray, t_to: np.ndarray, width: np.ndarray) -> np.ndarray:
        rho = np.where(width > 0, np.abs(t_to - t_from) / np.where(width > 0, width, 1.0), 1.0)
        ex = np.abs(np.exp(-kb * np.outer(1.0 / eta, t_from))
                    - np.exp(-kb * np.outer(1.0 / eta, t_to)))
        return np.where(width[None, :] > 0, ex * eta[:, None] / (kb * rho)[None, :], 0.0)

    out[ok] = (half(cells.tif_a, cells.tif, cells.z - cells.a)
               + half(cells.tif, cells.tif_b, cells.b - cells.z)) / cells.widths[None, :]
    return out


@dataclass
class KernelTables:
    """All tabulated kernels and boundary vectors, per kappa_bar level."""

    grid: AltitudeGrid
    levels: np.ndarray
    rule: AngularRule
    convention: str
    fresnel_on: bool
    psi_m: dict = field(repr=False)      # (k, j) -> (levels, N, N)
    zk: dict = field(repr=False)         # (pol, k, j) -> (levels, N, N)
    alpha: dict = field(repr=False)      # (boundary, pol, k) -> (levels, N)
    bdir: dict = field(repr=False)       # (boundary, k) -> (levels, N)

    @classmethod
    def build(cls, grid: AltitudeGrid, profile: RefractiveProfile, rho: DensityProfile,
              levels: np.ndarray | None = None, rule: AngularRule | None = None,
              convention: str = SNELL, fresnel_on: bool = True) -> "KernelTables":
        if levels is None:
            levels = np.linspace(0.01, 1.2, 60)
        levels = np.asarray(levels, dtype=float)
        if rule is None:
            rule = angular_rule_for(profile)
        if convention not in (SNELL, COMPOSED):
            raise ValueError(f"unknown convention {convention!r}")

        paths = grid.optical_paths(rho)
        below = np.flatnonzero(grid.below)
        above = np.flatnonzero(grid.above)
        cum_y = float(rho.cumulative(grid.y_interface))
        cells = {"lo": _SideCells.build(grid.z[below], rho, cum_y),
                 "hi": _SideCells.build(grid.z[above], rho, cum_y)}
        mud = {"ab": _MuData.build(profile.ratio_from_above, rule, convention),
               "ba": _MuData.build(profile.ratio_from_below, rule, convention)}

        n_lvl, n = levels.size, grid.size
        tables = cls(grid, levels, rule, convention, fresnel_on,
                     psi_m={kind: np.zeros((n_lvl, n, n)) for kind in SOLVER_KINDS},
                     zk={(pol, k, j): np.zeros((n_lvl, n, n))
                         for pol in "lr" for (k, j) in SOLVER_KINDS},
                     alpha={(bnd, pol, k): np.zeros((n_lvl, n))
                            for bnd in "es" for pol in "lr" for k in MOMENT_ORDERS},
                     bdir={(bnd, k): np.zeros((n_lvl, n)) for bnd in "es" for k in MOMENT_ORDERS})
        for il, kb in enumerate(map(float, levels)):
            tables._fill_level(il, kb, below, above, cells, mud, paths)
        return tables

    def _fill_level(self, il, kb, below, above, cells, mud, paths):
        # row legs are nodal (the moment is evaluated at the row node); the
        # far-side column legs are cell averages so the z'-sum is a product
        # integration even where the crossing kernel is weakly singular
        leg = {"lo_mu": np.exp(-kb * np.outer(1.0 / self.rule.nodes, cells["lo"].tif)),
               "hi_mu": np.exp(-kb * np.outer(1.0 / self.rule.nodes, cells["hi"].tif)),
               "lo_mu_avg": _exp_leg_avg(kb, cells["lo"], self.rule.nodes),
               "hi_mu_avg": _exp_leg_avg(kb, cells["hi"], self.rule.nodes),
               "lo_ab": _exp_leg_avg(kb, cells["lo"], mud["ab"].eta),
               "hi_ba": _exp_leg_avg(kb, cells["hi"], mud["ba"].eta),
               "lo_ab_plain": _exp_leg_avg(kb, cells["lo"], mud["ab"].eta_snell),
               "hi_ba_plain": _exp_leg_avg(kb, cells["hi"], mud["ba"].eta_snell)}

        for (k, j) in SOLVER_KINDS:
            m = self.psi_m[(k, j)][il]
            m[np.ix_(below, below)] = _same_side_moment(k + j + 2, kb, cells["lo"])
            m[np.ix_(above, above)] = _same_side_moment(k + j + 2, kb, cells["hi"])
            m[np.ix_(below, above)] = _pair_sum(
                _factor(mud["ba"], k, j, eta=mud["ba"].eta_snell),
                leg["lo_mu"], leg["hi_ba_plain"])
            m[np.ix_(above, below)] = _pair_sum(
                _factor(mud["ab"], k, j, eta=mud["ab"].eta_snell),
                leg["hi_mu"], leg["lo_ab_plain"])
            if not self.fresnel_on:
                continue
            for pol in "lr":
                z = self.zk[(pol, k, j)][il]
                # reflection at the interface, nodes on one side; the
                # cell-averaged column leg carries an extra factor of mu, so
                # the j = -1 kinds stay bounded down to zero path length
                for side, md, lg, lg_avg in (
                        (above, mud["ab"], leg["hi_mu"], leg["hi_mu_avg"]),
                        (below, mud["ba"], leg["lo_mu"], leg["lo_mu_avg"])):
                    z[np.ix_(side, side)] = _pair_sum(
                        md.w * md.mu ** (k + j) * md.refl[pol], lg, lg_avg)
                # crossing: under snell the continuation cancels against the
                # crossing psi-moment, leaving minus the reflected share
                if self.convention == SNELL:
                    z[np.ix_(above, below)] = -_pair_sum(
                        _factor(mud["ab"], k, j, mud["ab"].refl[pol]),
                        leg["hi_mu"], leg["lo_ab"])
                    z[np.ix_(below, above)] = -_pair_sum(
                        _factor(mud["ba"], k, j, mud["ba"].refl[pol]),
                        leg["lo_mu"], leg["hi_ba"])
                else:
                    z[np.ix_(above, below)] = (
                        _pair_sum(_factor(mud["ab"], k, j, mud["ab"].trans[pol]),
                                  leg["hi_mu"], leg["lo_ab"])
                        - _pair_sum(_factor(mud["ab"], k, j, eta=mud["ab"].eta_snell),
                                    leg["hi_mu"], leg["lo_ab_plain"]))
                    z[np.ix_(below, above)] = (
                        _pair_sum(_factor(mud["ba"], k, j, mud["ba"].trans[pol]),
                                  leg["lo_mu"], leg["hi_ba"])
                        - _pair_sum(_factor(mud["ba"], k, j, eta=mud["ba"].eta_snell),
                                    leg["lo_mu"], leg["hi_ba_plain"]))

        for k in MOMENT_ORDERS:
            self._fill_boundary(il, k, kb, below, above, leg, mud, paths)

    def _fill_boundary(self, il, k, kb, below, above, leg, mud, paths):
        """Boundary moment vectors: direct attenuation and interface corrections.

        The direct vectors weight the boundary datum by its arrival cosine;
        same-side paths collapse to E_{k+3}.  The corrections add the
        interface reflection of the same-side boundary and subtract the
        reflected share of the crossing one.
        """
        b_e = self.bdir[("e", k)][il]
        b_s = self.bdir[("s", k)][il]
        b_e[below] = expn(k + 3, kb * paths.to_bottom[below])
        b_s[above] = expn(k + 3, kb * paths.to_top[above])
        f = _factor(mud["ab"], k, 1, eta=mud["ab"].eta_snell)
        b_e[above] = (f * _far_attenuation(kb, paths.below_total, mud["ab"].eta_snell)) @ leg["hi_mu"]
        f = _factor(mud["ba"], k, 1, eta=mud["ba"].eta_snell)
        b_s[below] = (f * _far_attenuation(kb, paths.above_total, mud["ba"].eta_snell)) @ leg["lo_mu"]

        if not self.fresnel_on:
            return
        for pol in "lr":
            a_e = self.alpha[("e", pol, k)][il]
            a_s = self.alpha[("s", pol, k)][il]
            md = mud["ab"]
            # top datum reflected back down is seen from above
            a_s[above] = (md.w * md.mu ** (k + 1) * md.refl[pol]
                          * np.exp(-kb * paths.above_total / md.mu)) @ leg["hi_mu"]
            if self.convention == SNELL:
                f = _factor(md, k, 1, md.refl[pol], eta=md.eta_snell)
                a_e[above] = -(f * _far_attenuation(kb, paths.below_total, md.eta_snell)) @ leg["hi_mu"]
            else:
                f_y = _factor(md, k, 1, md.trans[pol])
                f_lit = _factor(md, k, 0, eta=md.eta_snell) * md.ratio
                a_e[above] = ((f_y * _far_attenuation(kb, paths.below_total, md.eta))
                              @ leg["hi_mu"]
                              - (f_lit * _far_attenuation(kb, paths.below_total, md.eta_snell))
                              @ leg["hi_mu"])
            md = mud["ba"]
            a_e[below] = (md.w * md.mu ** (k + 1) * md.refl[pol]
                          * np.exp(-kb * paths.below_total / md.mu)) @ leg["lo_mu"]
            if self.convention == SNELL:
                f = _factor(md, k, 1, md.refl[pol], eta=md.eta_snell)
                a_s[below] = -(f * _far_attenuation(kb, paths.above_total, md.eta_snell)) @ leg["lo_mu"]
            else:
                f_y = _factor(md, k, 1, md.trans[pol])
                f_plain = _factor(md, k, 1, eta=md.eta_snell)
                a_s[below] = ((f_y * _far_attenuation(kb, paths.above_total, md.eta))
                              @ leg["lo_mu"]
                              - (f_plain * _far_attenuation(kb, paths.above_total, md.eta_snell))
                              @ leg["lo_mu"])

    # -- lookup ---------------------------------------------------------------

    def _blend(self, kappa_bar: float) -> tuple[int, float]:
        lv = self.levels
        if kappa_bar < lv[0] - 1e-9 or kappa_bar > lv[-1] + 1e-9:
            raise ValueError(f"kappa_bar {kappa_bar} outside tabulated range")
        if lv.size == 1:
            return 0, 1.0
        kb = float(np.clip(kappa_bar, lv[0], lv[-1]))
        hi = int(np.clip(np.searchsorted(lv, kb), 1, lv.size - 1))
        return hi, float((kb - lv[hi - 1]) / (lv[hi] - lv[hi - 1]))

    def at(self, kappa_bar: float) -> "KernelSlice":
        hi, f = self._blend(kappa_bar)

        def mix(stack):
            return (1.0 - f) * stack[hi - 1] + f * stack[hi]

        return KernelSlice(
            psi={kind: mix(stack) for kind, stack in self.psi_m.items()},
            zk={key: mix(stack) for key, stack in self.zk.items()},
            alpha={key: mix(stack) for key, stack in self.alpha.items()},
            bdir={key: mix(stack) for key, stack in self.bdir.items()},
            fresnel_on=self.fresnel_on,
        )

    # -- binary cache -----------------------------------------------------------

    def cache_key(self) -> bytes:
        h = hashlib.sha256()
        for part in (self.grid.z.tobytes(), self.grid.above.tobytes(),
                     self.levels.tobytes(), self.rule.nodes.tobytes(),
                     self.convention.encode(), bytes([self.fresnel_on])):
            h.update(part)
        return h.digest()

    def _named_arrays(self) -> dict:
        arrays = {}
        for (k, j), stack in self.psi_m.items():
            arrays[f"psi_{k}_{j}"] = stack
        for (pol, k, j), stack in self.zk.items():
            arrays[f"zk_{pol}_{k}_{j}"] = stack
        for (bnd, pol, k), stack in self.alpha.items():
            arrays[f"alpha_{bnd}_{pol}_{k}"] = stack
        for (bnd, k), stack in self.bdir.items():
            arrays[f"bdir_{bnd}_{k}"] = stack
        return arrays

    def save(self, path) -> None:
        write_table_blob(path, self.cache_key(), self._named_arrays())

    def load_cached(self, path) -> bool:
        arrays = read_table_blob(path, self.cache_key())
        if arrays is None:
            return False
        for (k, j) in self.psi_m:
            self.psi_m[(k, j)] = arrays[f"psi_{k}_{j}"]
        for (pol, k, j) in self.zk:
            self.zk[(pol, k, j)] = arrays[f"zk_{pol}_{k}_{j}"]
        for (bnd, pol, k) in self.alpha:
            self.alpha[(bnd, pol, k)] = arrays[f"alpha_{bnd}_{pol}_{k}"]
        for (bnd, k) in self.bdir:
            self.bdir[(bnd, k)] = arrays[f"bdir_{bnd}_{k}"]
        return True


@dataclass(frozen=True)
class KernelSlice:
    """Kernels interpolated to one kappa_bar value."""

    psi: dict
    zk: dict
    alpha: dict
    bdir: dict
    fresnel_on: bool

    def combined(self, pol: str, k: int, j: int) -> np.ndarray:
        """psi-moment plus interface kernel for one polarization: the full
        nonnegative transport kernel of the monotone update."""
        return self.psi[(k, j)] + self.zk[(pol, k, j)]
