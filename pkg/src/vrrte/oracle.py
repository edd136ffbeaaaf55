"""Brute-force reference transport solvers used by the test suite.

`sweep_reference` integrates the characteristic form of the two-polarization
transport equations ordinate by ordinate on a refined grid, applying the
interface operators explicitly at the refractive step, with the refracted
direction mapped between ordinates by linear interpolation.  It solves one
frozen-source monochromatic problem; it exists to check the kernel-based
moment update, not to be fast.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fresnel import (refracted_cosine, reflectance_pair, transmittance_pair)
from .grids import AltitudeGrid
from .medium import DensityProfile, RefractiveProfile
from .quadrature import gauss_panel
from .solver import MomentField, SourceField


@dataclass(frozen=True)
class OrdinateSet:
    """Positive-half cosines and weights; the set is used symmetrically, so
    the full-range weights sum to 2 when both hemispheres are counted."""

    mu: np.ndarray
    w: np.ndarray

    @classmethod
    def build(cls, criticals: tuple[float, ...] = (), n_nodes: int = 48) -> "OrdinateSet":
        splits = sorted({float(c) for c in criticals if 0.0 < c < 1.0})
        edges = [0.0] + splits + [1.0]
        per = max(12, n_nodes // (len(edges) - 1))
        nodes, weights = [], []
        for a, b in zip(edges[:-1], edges[1:]):
            x, w = gauss_panel(a, b, per)
            nodes.append(x)
            weights.append(w)
        return cls(np.concatenate(nodes), np.concatenate(weights))


def analytic_absorption(z: float, mu: float, kappa: float, boundary_value: float,
                        z_top: float = 1.0) -> float:
    """Straight-ray attenuation of a boundary datum in a uniform absorber."""
    if mu == 0.0:
        raise ValueError("mu must be nonzero")
    path = z if mu > 0.0 else z_top - z
    return boundary_value * float(np.exp(-kappa * path / abs(mu)))


def _cell_step(intensity: np.ndarray, s_up: np.ndarray, s_dn: np.ndarray,
               tau_c: float, mu: float, kappa: float, h: float) -> np.ndarray:
    """Advance one ordinate across one cell with a linear-in-z source.

    s_up is the source at the upwind edge, s_dn at the downwind edge.
    """
    att = np.exp(-tau_c)
    grow = -np.expm1(-tau_c)            # 1 - att
    curv = grow - tau_c * att           # 1 - att * (1 + tau_c)
    ds = s_dn - s_up
    return intensity * att + s_dn * grow / kappa - ds * mu * curv / (kappa**2 * h)


def _sweep_zone(z: np.ndarray, kappa: np.ndarray, src0: np.ndarray, src2: np.ndarray,
                mu: np.ndarray, inflow: np.ndarray, upward: bool) -> np.ndarray:
    """Sweep all ordinates through one uniform-index zone.

    src0/src2 are the mu-decomposed source components on the zone nodes;
    kappa is per cell.  Returns intensities with shape (n_nodes, n_mu).
    """
    n, m = z.size, mu.size
    out = np.zeros((n, m))
    order = range(1, n) if upward else range(n - 2, -1, -1)
    start = 0 if upward else n - 1
    out[start] = inflow
    src = src0[:, None] + mu[None, :] ** 2 * src2[:, None]
    for i in order:
        up = i - 1 if upward else i + 1
        h = abs(z[i] - z[up])
        kap = kappa[min(i, up)]
        tau = kap * h / mu
        out[i] = _cell_step(out[up], src[up], src[i], tau, mu, kap, h)
    return out


def sweep_reference(grid: AltitudeGrid, profile: RefractiveProfile, rho: DensityProfile,
                    kappa_bar: float, sources: SourceField, nu_index: int,
                    boundary_bottom: float, boundary_top: float,
                    ordinates: OrdinateSet, refine: int = 4) -> MomentField:
    """Discrete-ordinates solution of one frozen-source monochromatic problem.

    sources holds (n_z, n_nu) arrays; column `nu_index` is used.
    boundary_bottom/boundary_top are the c * B(nu, T) factors of the
    unpolarized, cosine-linear boundary inflows.  Returns moments on the
    solver grid (one column).
    """
    below = np.flatnonzero(grid.below)
    above = np.flatnonzero(grid.above)
    mu, w = ordinates.mu, ordinates.w

    def refine_zone(idx):
        zs = grid.z[idx]
        fine = [zs[0]]
        for a, b in zip(zs[:-1], zs[1:]):
            fine.extend(np.linspace(a, b, refine + 1)[1:])
        return np.asarray(fine)

    z_lo, z_hi = refine_zone(below), refine_zone(above)
    kap_lo = kappa_bar * rho.value_at(0.5 * (z_lo[:-1] + z_lo[1:]))
    kap_hi = kappa_bar * rho.value_at(0.5 * (z_hi[:-1] + z_hi[1:]))

    comp = {}
    for pol, sgn in (("l", 1.0), ("r", -1.0)):
        comp[pol] = {
            "s0_lo": np.interp(z_lo, grid.z[below],
                               0.5 * (sources.i0[below, nu_index] + sgn * sources.q0[below, nu_index])),
            "s2_lo": np.interp(z_lo, grid.z[below],
                               0.5 * (sources.i2[below, nu_index] + sgn * sources.q2[below, nu_index])),
            "s0_hi": np.interp(z_hi, grid.z[above],
                               0.5 * (sources.i0[above, nu_index] + sgn * sources.q0[above, nu_index])),
            "s2_hi": np.interp(z_hi, grid.z[above],
                               0.5 * (sources.i2[above, nu_index] + sgn * sources.q2[above, nu_index])),
        }

    r_ab, r_ba = profile.ratio_from_above, profile.ratio_from_below
    xl_ab, xr_ab = reflectance_pair(r_ab, mu)
    yl_ab, yr_ab = transmittance_pair(r_ab, mu)
    xl_ba, xr_ba = reflectance_pair(r_ba, mu)
    yl_ba, yr_ba = transmittance_pair(r_ba, mu)
    eta_ab = np.asarray(refracted_cosine(r_ab, mu))
    eta_ba = np.asarray(refracted_cosine(r_ba, mu))

    fields = {}
    for pol, x_ab, y_ab, x_ba, y_ba in (("l", xl_ab, yl_ab, xl_ba, yl_ba),
                                        ("r", xr_ab, yr_ab, xr_ba, yr_ba)):
        c = comp[pol]
        inflow_bot = mu * 0.5 * boundary_bottom
        inflow_top = mu * 0.5 * boundary_top
        up_below = _sweep_zone(z_lo, kap_lo, c["s0_lo"], c["s2_lo"], mu, inflow_bot, True)
        dn_above = _sweep_zone(z_hi, kap_hi, c["s0_hi"], c["s2_hi"], mu, inflow_top, False)
        # interface coupling: outgoing = reflection + interpolated transmission
        up_at_interface = up_below[-1]
        dn_at_interface = dn_above[0]
        trans_up = np.where(np.isnan(eta_ab), 0.0,
                            np.interp(np.nan_to_num(eta_ab, nan=1.0), mu, up_at_interface))
        up_above0 = x_ab * dn_at_interface + y_ab * trans_up
        trans_dn = np.where(np.isnan(eta_ba), 0.0,
                            np.interp(np.nan_to_num(eta_ba, nan=1.0), mu, dn_at_interface))
        dn_below0 = x_ba * up_at_interface + y_ba * trans_dn
        up_above = _sweep_zone(z_hi, kap_hi, c["s0_hi"], c["s2_hi"], mu, up_above0, True)
        dn_below = _sweep_zone(z_lo, kap_lo, c["s0_lo"], c["s2_lo"], mu, dn_below0, False)
        fields[pol] = {"up_lo": up_below, "dn_lo": dn_below,
                       "up_hi": up_above, "dn_hi": dn_above}

    # moments on the solver nodes (a subset of the refined grids)
    out = MomentField.zeros((grid.size, 1))
    sel_lo = np.searchsorted(z_lo, grid.z[below])
    sel_hi = np.searchsorted(z_hi, grid.z[above])
    for k, (jname, kname) in {0: ("j0", "k0"), 2: ("j2", "k2")}.items():
        mk = w * mu**k
        jp = {}
        for pol in "lr":
            f = fields[pol]
            lo = 0.5 * ((f["up_lo"][sel_lo] + f["dn_lo"][sel_lo]) @ mk)
            hi = 0.5 * ((f["up_hi"][sel_hi] + f["dn_hi"][sel_hi]) @ mk)
            col = np.zeros(grid.size)
            col[below], col[above] = lo, hi
            jp[pol] = col
        getattr(out, jname)[:, 0] = jp["l"] + jp["r"]
        getattr(out, kname)[:, 0] = jp["l"] - jp["r"]
    return out
