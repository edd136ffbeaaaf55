"""Interface algebra for the refractive discontinuity.

Reflection and transmission operators for the reduced Stokes vector at a
planar dielectric step, written for the radiance divided by n^2 so that the
flux closure per polarization is exactly R + T = 1.  The index argument `n`
is always the ratio (incident side) / (other side).
"""

from __future__ import annotations

import numpy as np


def critical_cosine(n: float) -> float:
    """Cosine below which total internal reflection occurs; 0 for n <= 1."""
    if n <= 0.0:
        raise ValueError("index ratio must be positive")
    return float(np.sqrt(1.0 - 1.0 / n**2)) if n > 1.0 else 0.0


def refracted_cosine(n: float, mu):
    """Snell cosine sqrt(1 - n^2 (1 - mu^2)); NaN marks an evanescent ray.

    Equality at the critical angle counts as refracting (cosine 0), with a
    small tolerance so roundoff at exactly mu_c stays on that branch.
    """
    if n <= 0.0:
        raise ValueError("index ratio must be positive")
    mu = np.asarray(mu, dtype=float)
    if n == 1.0:
        # exact identity, so a flat interface is exactly transparent
        out = np.abs(mu)
        return out if out.ndim else float(out)
    rad = 1.0 - n**2 * (1.0 - mu**2)
    ok = rad >= -1e-14
    out = np.where(ok, np.sqrt(np.clip(rad, 0.0, None)), np.nan)
    return out if out.ndim else float(out)


def _check_mu(mu: float) -> None:
    if not 0.0 < mu <= 1.0:
        raise ValueError("mu must lie in (0, 1]")


def amplitude_coefficients(n: float, mu: float) -> tuple[float, float]:
    """Parallel and perpendicular reflection amplitudes (r_par, r_perp)."""
    _check_mu(mu)
    eta = refracted_cosine(n, mu)
    if np.isnan(eta):
        raise ValueError("no refracted ray: evanescent regime")
    r_par = (mu - n * eta) / (mu + n * eta)
    r_perp = (n * mu - eta) / (n * mu + eta)
    return float(r_par), float(r_perp)


def g_matrix(n: float, mu: float) -> np.ndarray:
    """4x4 partial-reflection operator; only valid where the refracted ray exists."""
    r_par, r_perp = amplitude_coefficients(n, mu)
    g = np.zeros((4, 4))
    g[0, 0] = g[1, 1] = 0.5 * (r_par**2 + r_perp**2)
    g[0, 1] = g[1, 0] = 0.5 * (r_par**2 - r_perp**2)
    g[2, 2] = g[3, 3] = r_par * r_perp
    return g


def d_matrix(n: float, mu: float) -> np.ndarray:
    """4x4 transmission operator; only valid where the refracted ray exists."""
    _check_mu(mu)
    eta = refracted_cosine(n, mu)
    if np.isnan(eta):
        raise ValueError("no refracted ray: evanescent regime")
    t_par = 4.0 * n * mu * eta / (mu + n * eta) ** 2
    t_perp = 4.0 * n * mu * eta / (n * mu + eta) ** 2
    d = np.zeros((4, 4))
    d[0, 0] = d[1, 1] = 0.5 * (t_par + t_perp)
    d[0, 1] = d[1, 0] = 0.5 * (t_par - t_perp)
    d[2, 2] = d[3, 3] = 4.0 * n * mu * eta / ((n * eta + mu) * (n * mu + eta))
    return d


def gamma_matrix(n: float, mu: float) -> np.ndarray:
    """4x4 total-internal-reflection operator for n >= 1, mu <= critical cosine."""
    _check_mu(mu)
    mu_c = critical_cosine(n)
    if n < 1.0 or mu > mu_c:
        raise ValueError("total internal reflection requires n >= 1 and mu <= mu_c")
    gam = np.zeros((4, 4))
    gam[0, 0] = gam[1, 1] = 1.0
    denom = 1.0 - (1.0 + n**-2) * mu**2
    gam[2, 2] = gam[3, 3] = 1.0 - 2.0 * (1.0 - mu**2) ** 2 / denom
    gam[3, 2] = 2.0 * mu * (1.0 - mu**2) * np.sqrt(mu_c**2 - mu**2) / denom
    gam[2, 3] = -gam[3, 2]
    return gam


def interface_operators(n: float, mu: float, basis: str = "full4"):
    """Reflection and transmission operators (X, Y) at the interface.

    For n <= 1 every incidence refracts: X = G and Y = D.  For n >= 1 rays
    below the critical cosine are totally reflected: X switches to the
    unit-intensity operator and Y vanishes; at mu == mu_c the transmitting
    branch is used (the operators are continuous there anyway).

    basis: "full4" for the 4x4 operators, "iq2" for their upper-left 2x2
    block acting on (I, Q), "ilir2" for the diagonal 2x2 operators acting on
    (I_l, I_r).
    """
    _check_mu(mu)
    mu_c = critical_cosine(n)
    if n <= 1.0 or mu >= mu_c:
        x, y = g_matrix(n, mu), d_matrix(n, mu)
    else:
        x, y = gamma_matrix(n, mu), np.zeros((4, 4))
    if basis == "full4":
        return x, y
    if basis == "iq2":
        return x[:2, :2].copy(), y[:2, :2].copy()
    if basis == "ilir2":
        return (np.diag([x[0, 0] + x[0, 1], x[0, 0] - x[0, 1]]),
                np.diag([y[0, 0] + y[0, 1], y[0, 0] - y[0, 1]]))
    raise ValueError(f"unknown basis {basis!r}")


def reflectance_pair(n: float, mu):
    """Vectorized per-polarization reflectances (parallel, perpendicular).

    These are the diagonal entries of X in the (I_l, I_r) basis; in the
    total-internal-reflection cone both equal 1.
    """
    mu = np.asarray(mu, dtype=float)
    eta = np.asarray(refracted_cosine(n, mu))
    ok = ~np.isnan(eta)
    r_par = np.ones_like(mu)
    r_perp = np.ones_like(mu)
    e, m = eta[ok], mu[ok]
    r_par[ok] = ((m - n * e) / (m + n * e)) ** 2
    r_perp[ok] = ((n * m - e) / (n * m + e)) ** 2
    return r_par, r_perp


def transmittance_pair(n: float, mu):
    """Vectorized per-polarization flux transmittances; 0 in the TIR cone.

    Complements reflectance_pair: each pair sums to 1 exactly.
    """
    r_par, r_perp = reflectance_pair(n, mu)
    return 1.0 - r_par, 1.0 - r_perp
