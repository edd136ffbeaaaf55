"""Material properties of the stratified column.

Holds the refractive step profile, the density profile, the absorption table
and the scattering albedo model.  Conventions:

* altitudes are in units of the column height scale (10 km for the bundled
  scenarios), with a single refractive discontinuity at ``y_interface``;
* absorption is kappa(z, nu) = rho(z) * kappa_bar(nu);
* absorption tables are given per wavelength in micrometres; the rescaled
  frequency is nu = 3 / wavelength_um (i.e. wavelength_um = 3 / nu), which is
  the c/nu conversion after the 1e14 frequency rescaling.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

log = logging.getLogger(__name__)

# kappa_bar values outside this window leave the range the transmission
# tables are built for; queries are clamped to it.
KAPPA_BAR_MIN = 0.01
KAPPA_BAR_MAX = 1.2


@dataclass(frozen=True)
class RefractiveProfile:
    """Piecewise-constant refractive index with one discontinuity."""

    n_below: float
    n_above: float
    y_interface: float
    z_top: float

    def __post_init__(self) -> None:
        if not (0.0 < self.y_interface < self.z_top):
            raise ValueError("interface must sit strictly inside (0, z_top)")
        if self.n_below <= 0.0 or self.n_above <= 0.0:
            raise ValueError("refractive indices must be positive")

    @classmethod
    def from_step(cls, epsilon: float, y_interface: float, z_top: float) -> "RefractiveProfile":
        """n(z) = 1 + epsilon for z above the interface, 1 below."""
        return cls(1.0, 1.0 + epsilon, y_interface, z_top)

    @property
    def ratio_from_below(self) -> float:
        """Index ratio seen by light hitting the interface from below."""
        return self.n_below / self.n_above

    @property
    def ratio_from_above(self) -> float:
        """Index ratio seen by light hitting the interface from above."""
        return self.n_above / self.n_below

    def n_at(self, z: float, above: bool | None = None) -> float:
        if above is None:
            above = z > self.y_interface
        return self.n_above if above else self.n_below


@dataclass(frozen=True)
class DensityProfile:
    """Piecewise-constant density multiplier rho(z)."""

    breaks: tuple[float, ...]
    values: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.values) != len(self.breaks) + 1:
            raise ValueError("need one more value than breakpoints")
        if any(v <= 0.0 for v in self.values):
            raise ValueError("density must be positive everywhere")
        if list(self.breaks) != sorted(self.breaks):
            raise ValueError("breakpoints must be ascending")

    @classmethod
    def constant(cls, value: float) -> "DensityProfile":
        return cls((), (value,))

    @classmethod
    def two_zone(cls, below: float, above: float, y_interface: float) -> "DensityProfile":
        return cls((y_interface,), (below, above))

    def value_at(self, z) -> np.ndarray:
        idx = np.searchsorted(np.asarray(self.breaks), np.asarray(z, dtype=float), side="right")
        return np.asarray(self.values, dtype=float)[idx]

    def cumulative(self, z) -> np.ndarray:
        """Path integral of rho from 0 to z (piecewise linear in z)."""
        z = np.asarray(z, dtype=float)
        edges = np.concatenate(([0.0], self.breaks))
        vals = np.asarray(self.values)
        base = np.concatenate(([0.0], np.cumsum(vals[:-1] * np.diff(np.append(edges, np.inf))[:-1])))
        idx = np.searchsorted(np.asarray(self.breaks), z, side="right")
        return base[idx] + vals[idx] * (z - edges[idx])


class AbsorptionTable:
    """kappa_bar as a function of rescaled frequency, linearly interpolated.

    Built from (wavelength_um, kappa_bar) rows; extrapolation is clamped to
    the end values of the table.
    """

    def __init__(self, nu_nodes: np.ndarray, values: np.ndarray):
        order = np.argsort(nu_nodes)
        self.nu_nodes = np.asarray(nu_nodes, dtype=float)[order]
        self.values = np.asarray(values, dtype=float)[order]
        if self.nu_nodes.size < 2:
            raise ValueError("absorption table needs at least 2 rows")
        if np.any(self.nu_nodes <= 0.0):
            raise ValueError("frequencies must be positive")

    @classmethod
    def from_wavelength_rows(cls, rows) -> "AbsorptionTable":
        rows = list(rows)
        if len(rows) < 2:
            raise ValueError("absorption table needs at least 2 rows")
        lam = np.array([r[0] for r in rows], dtype=float)
        val = np.array([r[1] for r in rows], dtype=float)
        if np.any(lam <= 0.0):
            raise ValueError("wavelengths must be positive")
        return cls(3.0 / lam, val)

    @classmethod
    def from_text(cls, text: str) -> "AbsorptionTable":
        """Parse a two-column table: wavelength_um and kappa_bar.

        Columns may be separated by whitespace or commas; lines starting
        with '#' (and blank lines) are ignored.
        """
        rows = []
        for lineno, line in enumerate(text.splitlines(), start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.replace(",", " ").split()
            if len(parts) != 2:
                raise ValueError(f"malformed table row at line {lineno}: {line!r}")
            try:
                rows.append((float(parts[0]), float(parts[1])))
            except ValueError as exc:
                raise ValueError(f"malformed table row at line {lineno}: {line!r}") from exc
        return cls.from_wavelength_rows(rows)

    @classmethod
    def from_file(cls, path) -> "AbsorptionTable":
        with open(path, "r", encoding="utf-8") as handle:
            return cls.from_text(handle.read())

    @classmethod
    def constant(cls, value: float) -> "AbsorptionTable":
        return cls(np.array([1e-3, 1e3]), np.array([value, value]))

    @property
    def wavelength_range(self) -> tuple[float, float]:
        return 3.0 / self.nu_nodes[-1], 3.0 / self.nu_nodes[0]

    def __call__(self, nu) -> np.ndarray:
        return np.interp(np.asarray(nu, dtype=float), self.nu_nodes, self.values)

    def with_bands(self, bands) -> "BandedAbsorption":
        """Return a new model with kappa_bar set to a fixed value inside
        each wavelength band; the original table is left untouched."""
        return BandedAbsorption(self, bands)


class BandedAbsorption:
    """Absorption table overridden to fixed values inside wavelength bands."""

    def __init__(self, base: AbsorptionTable, bands):
        bands = [(float(lo), float(hi), float(value)) for lo, hi, value in bands]
        lam_lo, lam_hi = base.wavelength_range
        for lo, hi, value in bands:
            if not lo < hi:
                raise ValueError(f"empty band ({lo}, {hi})")
            if lo < lam_lo - 1e-12 or hi > lam_hi + 1e-12:
                raise ValueError(f"band ({lo}, {hi}) outside table range ({lam_lo:.3g}, {lam_hi:.3g})")
            if not 0.0 < value <= KAPPA_BAR_MAX:
                warnings.warn(
                    f"band value {value} outside the tabulated range (0, {KAPPA_BAR_MAX}]",
                    stacklevel=3,
                )
        for (lo1, hi1, _), (lo2, hi2, _) in zip(sorted(bands), sorted(bands)[1:]):
            if hi1 > lo2:
                raise ValueError(f"overlapping bands ({lo1}, {hi1}) and ({lo2}, {hi2})")
        self.base = base
        self.bands = sorted(bands)

    def __call__(self, nu) -> np.ndarray:
        nu = np.asarray(nu, dtype=float)
        out = np.array(self.base(nu), dtype=float, copy=True)
        lam = 3.0 / nu
        for lo, hi, value in self.bands:
            out[(lam >= lo) & (lam <= hi)] = value
        return out


@dataclass(frozen=True)
class AlbedoParams:
    """Scattering albedo a_s = a1*1(z1<z<z2) + a2*1(z>z2)*1(nu1<nu<nu2)*(nu/nu2)^4."""

    a1: float = 0.0
    a2: float = 0.0
    z1: float = 0.0
    z2: float = 0.0
    nu1: float = 0.0
    nu2: float = 1.0

    def __post_init__(self) -> None:
        if not (0.0 <= self.a1 < 1.0 and 0.0 <= self.a2 < 1.0):
            raise ValueError("albedo amplitudes must lie in [0, 1)")


class PropertyTuple(NamedTuple):
    n: float
    kappa: np.ndarray
    kappa_s: np.ndarray
    kappa_a: np.ndarray
    beta: float


@dataclass(frozen=True)
class Medium:
    """All z- and nu-dependent material properties of the column."""

    profile: RefractiveProfile
    rho: DensityProfile
    kappa_bar: object  # AbsorptionTable or BandedAbsorption
    albedo: AlbedoParams = field(default_factory=AlbedoParams)
    beta: float = 0.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.beta <= 1.0:
            raise ValueError("beta must lie in [0, 1]")

    def kappa_bar_at(self, nu) -> np.ndarray:
        """Tabulated kappa_bar clamped into the supported window."""
        raw = np.asarray(self.kappa_bar(nu), dtype=float)
        clamped = np.clip(raw, KAPPA_BAR_MIN, KAPPA_BAR_MAX)
        if np.any(raw < KAPPA_BAR_MIN) or np.any(raw > KAPPA_BAR_MAX):
            log.info("kappa_bar clamped into (%g, %g) for %d of %d frequencies",
                     KAPPA_BAR_MIN, KAPPA_BAR_MAX, int(np.sum(raw != clamped)), clamped.size)
        return clamped

    def scattering_albedo(self, z: float, nu) -> np.ndarray:
        nu = np.asarray(nu, dtype=float)
        a = np.zeros_like(nu)
        p = self.albedo
        if p.z1 < z < p.z2:
            a += p.a1
        if z > p.z2:
            # band closed at nu2 so the (nu/nu2)^4 factor reaches 1 there
            band = (nu > p.nu1) & (nu <= p.nu2)
            a = a + np.where(band, p.a2 * (nu / p.nu2) ** 4, 0.0)
        return a

    def properties(self, z: float, nu, above: bool | None = None) -> PropertyTuple:
        """Consistent (n, kappa, kappa_s, kappa_a, beta) at one altitude.

        kappa_a is computed as kappa - kappa_s so the split is exact.
        """
        if not 0.0 <= z <= self.profile.z_top:
            raise ValueError("altitude outside the column")
        n = self.profile.n_at(z, above)
        rho = float(self.rho.value_at(z if above is None else
                                      np.nextafter(z, np.inf if above else -np.inf)))
        kappa = rho * self.kappa_bar_at(nu)
        a_s = self.scattering_albedo(z, nu)
        if np.any(a_s >= 1.0):
            raise ValueError("scattering albedo must stay below 1")
        kappa_s = kappa * a_s
        return PropertyTuple(n, kappa, kappa_s, kappa - kappa_s, self.beta)
