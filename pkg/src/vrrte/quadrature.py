"""Gauss-Legendre panel quadrature shared by the angular and spectral integrals."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def gauss_panel(a: float, b: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights mapped to the open interval (a, b)."""
    x, w = np.polynomial.legendre.leggauss(n)
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


def gauss_panel_sqrt(a: float, b: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss rule on (a, b) under the map x = a + (b-a) t^2.

    Resolves integrands behaving like (x-a)^(-1/2) near the left edge, which
    is how angular moments behave next to a critical cosine.
    """
    t, w = np.polynomial.legendre.leggauss(n)
    t = 0.5 * (t + 1.0)
    w = 0.5 * w
    span = b - a
    return a + span * t**2, w * 2.0 * span * t


def composite_gauss(edges: np.ndarray, order: int) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss rule with `order` nodes on each panel between `edges`."""
    nodes, weights = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        x, w = gauss_panel(float(a), float(b), order)
        nodes.append(x)
        weights.append(w)
    return np.concatenate(nodes), np.concatenate(weights)


@dataclass(frozen=True)
class AngularRule:
    """Quadrature for integrals over the cosine half-range (0, 1).

    Panels are split at every critical cosine of the refractive step so that
    branch kinks of the interface operators never sit inside a panel; the
    panel that starts at a critical cosine uses a square-root map to absorb
    the 1/sqrt kink of the refracted-cosine factors.
    """

    nodes: np.ndarray
    weights: np.ndarray
    splits: tuple[float, ...]

    def integrate(self, values: np.ndarray) -> float:
        return float(self.weights @ values)


def half_range_rule(criticals: tuple[float, ...] = (), n_nodes: int = 64) -> AngularRule:
    """Build the (0, 1) cosine rule, split at the given critical cosines."""
    splits = sorted({float(c) for c in criticals if 0.0 < c < 1.0})
    edges = [0.0] + splits + [1.0]
    per_panel = max(16, n_nodes // (len(edges) - 1))
    nodes, weights = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        if a in splits:
            x, w = gauss_panel_sqrt(a, b, per_panel)
        else:
            x, w = gauss_panel(a, b, per_panel)
        nodes.append(x)
        weights.append(w)
    return AngularRule(np.concatenate(nodes), np.concatenate(weights), tuple(splits))
