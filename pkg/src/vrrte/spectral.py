"""Rescaled Planck emission, frequency quadrature and inversion of the Planck mean.

Everything works in nondimensional units: frequencies are physical frequency
divided by 1e14 Hz and temperatures are Kelvin divided by 4798, so the Planck
spectral radiance reduces to B(nu, T) = nu^3 / (exp(nu/T) - 1).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

KELVIN_PER_UNIT = 4798.0

# exp(x) overflows just above x ~ 709; beyond this B underflows to zero anyway.
_EXP_CUTOFF = 700.0


def rescaled_to_kelvin(temp):
    return np.asarray(temp) * KELVIN_PER_UNIT


def kelvin_to_rescaled(temp_kelvin):
    return np.asarray(temp_kelvin) / KELVIN_PER_UNIT


def rescaled_to_celsius(temp):
    return np.asarray(temp) * KELVIN_PER_UNIT - 273.15


def planck(nu, temp: float):
    """Rescaled Planck radiance nu^3 / (expm1(nu/T)); zero for T = 0.

    Continuous limit 0 as T -> 0+, hard underflow to 0 once nu/T > 700.
    """
    nu_arr = np.asarray(nu, dtype=float)
    if np.any(nu_arr <= 0.0):
        raise ValueError("planck requires nu > 0")
    if temp < 0.0:
        raise ValueError("planck requires T >= 0")
    out = np.zeros_like(nu_arr)
    if temp > 0.0:
        x = nu_arr / temp
        ok = x <= _EXP_CUTOFF
        out[ok] = nu_arr[ok] ** 3 / np.expm1(x[ok])
    return out if isinstance(nu, np.ndarray) else float(out)


def planck_dT(nu, temp: float):
    """Temperature derivative of the rescaled Planck radiance."""
    nu_arr = np.asarray(nu, dtype=float)
    out = np.zeros_like(nu_arr)
    if temp > 0.0:
        x = nu_arr / temp
        ok = x <= _EXP_CUTOFF
        xo = x[ok]
        # B * (x/T) / (1 - exp(-x)), stable for both small and large x
        b = nu_arr[ok] ** 3 / np.expm1(xo)
        out[ok] = b * (xo / temp) / (-np.expm1(-xo))
    return out if isinstance(nu, np.ndarray) else float(out)


@dataclass(frozen=True)
class FrequencyGrid:
    """Quadrature nodes/weights for integrals over the rescaled frequency range.

    Composite Gauss-Legendre panels on a log-spaced partition, which resolves
    the Planck peak for the temperatures of interest while keeping the rule
    exact for low-order polynomials on each panel.
    """

    nodes: np.ndarray
    weights: np.ndarray

    def __post_init__(self) -> None:
        if np.any(self.nodes <= 0.0) or np.any(np.diff(self.nodes) <= 0.0):
            raise ValueError("frequency nodes must be positive and strictly increasing")
        if np.any(self.weights <= 0.0):
            raise ValueError("frequency weights must be positive")

    @classmethod
    def build(cls, nu_min: float = 0.01, nu_max: float = 20.0,
              panels: int = 24, order: int = 5) -> "FrequencyGrid":
        from .quadrature import composite_gauss

        edges = np.geomspace(nu_min, nu_max, panels + 1)
        nodes, weights = composite_gauss(edges, order)
        return cls(nodes, weights)

    @property
    def size(self) -> int:
        return self.nodes.size

    def integrate(self, values: np.ndarray) -> float:
        values = np.asarray(values, dtype=float)
        if values.shape[-1] != self.nodes.size:
            raise ValueError("integrand sampled on a different grid")
        return float(values @ self.weights) if values.ndim == 1 else values @ self.weights


def planck_mean(kappa_a: np.ndarray, temp: float, grid: FrequencyGrid) -> float:
    """Integral of kappa_a(nu) * B(nu, T) over the grid's frequency range."""
    return grid.integrate(np.asarray(kappa_a) * planck(grid.nodes, temp))


def invert_planck_mean(target: float, kappa_a: np.ndarray, grid: FrequencyGrid,
                       rtol: float = 1e-10, max_iter: int = 200) -> float:
    """Solve integral(kappa_a * B(nu, T) dnu) = target for T.

    The map T -> integral is strictly increasing so the root is unique.
    Newton iteration with a bisection safeguard on a bracket grown
    geometrically until the residual changes sign; never returns T < 0.
    """
    if target < 0.0:
        raise ValueError("target must be nonnegative")
    kappa_a = np.asarray(kappa_a, dtype=float)
    if np.any(kappa_a < 0.0):
        raise ValueError("kappa_a must be nonnegative")
    if grid.integrate(kappa_a) <= 0.0:
        raise ValueError("kappa_a must have a positive spectral integral")
    if target == 0.0:
        return 0.0

    def g(temp: float) -> float:
        return planck_mean(kappa_a, temp, grid)

    lo, hi = 0.0, 0.25
    for _ in range(200):
        if g(hi) >= target:
            break
        lo, hi = hi, 2.0 * hi
    else:
        raise RuntimeError("failed to bracket the Planck-mean inverse")

    temp = 0.5 * (lo + hi)
    for _ in range(max_iter):
        resid = g(temp) - target
        if abs(resid) <= rtol * target:
            return temp
        if resid > 0.0:
            hi = temp
        else:
            lo = temp
        slope = grid.integrate(kappa_a * planck_dT(grid.nodes, temp)) if temp > 0 else 0.0
        if slope > 0.0:
            step = temp - resid / slope
        else:
            step = 0.5 * (lo + hi)
        # fall back to bisection whenever Newton leaves the bracket
        temp = step if lo < step < hi else 0.5 * (lo + hi)
    raise RuntimeError("Planck-mean inversion did not converge")
