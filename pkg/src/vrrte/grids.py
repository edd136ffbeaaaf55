"""Altitude grid with doubled interface nodes and per-side trapezoid weights."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .medium import DensityProfile


@dataclass(frozen=True)
class AltitudeGrid:
    """Solver grid on [0, z_top] straddling the interface.

    The interface altitude carries two nodes, one tagged to each side, so
    kernels and fields keep their one-sided limits; no node evaluates
    interface quantities ambiguously.
    """

    z: np.ndarray
    above: np.ndarray  # bool per node, True on the upper side of the interface
    weights: np.ndarray  # trapezoid weights, computed per side
    y_interface: float
    z_top: float

    @classmethod
    def build(cls, y_interface: float, z_top: float, n_nodes: int = 100,
              extra_breaks: tuple[float, ...] = ()) -> "AltitudeGrid":
        base = np.linspace(0.0, z_top, n_nodes)
        for b in extra_breaks:
            if 0.0 < b < z_top and np.min(np.abs(base - b)) > 1e-12:
                base = np.sort(np.append(base, b))
        # snap the nearest node onto the interface, then double it
        i_near = int(np.argmin(np.abs(base - y_interface)))
        base[i_near] = y_interface
        base = np.sort(np.append(base, y_interface))
        above = np.zeros(base.size, dtype=bool)
        above[base > y_interface] = True
        dup = np.flatnonzero(base == y_interface)
        above[dup[-1]] = True  # second interface node belongs to the upper side
        weights = np.zeros(base.size)
        for side in (False, True):
            idx = np.flatnonzero(above == side)
            zs = base[idx]
            w = np.zeros(zs.size)
            if zs.size > 1:
                d = np.diff(zs)
                w[:-1] += 0.5 * d
                w[1:] += 0.5 * d
            weights[idx] = w
        return cls(base, above, weights, y_interface, z_top)

    @property
    def size(self) -> int:
        return self.z.size

    @property
    def below(self) -> np.ndarray:
        return ~self.above

    def interface_indices(self) -> tuple[int, int]:
        """Indices of the two interface nodes (below side, above side)."""
        dup = np.flatnonzero(self.z == self.y_interface)
        return int(dup[0]), int(dup[-1])

    def index_at(self, z: float, above: bool | None = None) -> int:
        """Nearest node index, side-disambiguated at the interface."""
        if above is None:
            above = z > self.y_interface
        candidates = np.flatnonzero(self.above == above)
        return int(candidates[np.argmin(np.abs(self.z[candidates] - z))])

    def optical_paths(self, rho: DensityProfile) -> "OpticalPaths":
        cum = rho.cumulative(self.z)
        cum_y = float(rho.cumulative(self.y_interface))
        return OpticalPaths(
            to_interface=np.abs(cum - cum_y),
            to_bottom=cum.copy(),
            to_top=float(rho.cumulative(self.z_top)) - cum,
            cumulative=cum,
            below_total=cum_y,
            above_total=float(rho.cumulative(self.z_top)) - cum_y,
        )


@dataclass(frozen=True)
class OpticalPaths:
    """Density path integrals between grid nodes and the column landmarks."""

    to_interface: np.ndarray
    to_bottom: np.ndarray
    to_top: np.ndarray
    cumulative: np.ndarray
    below_total: float
    above_total: float
