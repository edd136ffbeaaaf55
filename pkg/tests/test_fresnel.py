import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vrrte.fresnel import (amplitude_coefficients, critical_cosine, d_matrix,
                           g_matrix, gamma_matrix, interface_operators,
                           reflectance_pair, refracted_cosine,
                           transmittance_pair)

# frozen oracle values at (n, mu) = (1.5, 0.8), from the amplitude
# coefficients r_par, r_perp squared and flux-combined
ETA_15_08 = 0.43588989435406736
G11_15_08 = 0.11414110022135394
G12_15_08 = -0.10403327838586335
D11_15_08 = 0.88585889977864606
D12_15_08 = 0.10403327838586335


def _valid_pairs(draw_n, draw_mu):
    """strategy helper: (n, mu) with mu strictly above the critical cosine"""
    return draw_n.flatmap(
        lambda n: st.tuples(st.just(n),
                            st.floats(critical_cosine(n) + 1e-3, 1.0)))


ns = st.floats(0.5, 2.0)


def test_normal_incidence_refracts_straight():
    assert refracted_cosine(1.7, 1.0) == pytest.approx(1.0)


def test_critical_cosine_values():
    assert critical_cosine(2.0) == pytest.approx(math.sqrt(3.0) / 2.0, rel=1e-15)
    assert critical_cosine(0.9) == 0.0
    assert critical_cosine(1.0) == 0.0


def test_grazing_refraction_at_critical_angle():
    assert refracted_cosine(2.0, math.sqrt(3.0) / 2.0) == pytest.approx(0.0, abs=1e-7)


def test_evanescent_marker():
    assert math.isnan(refracted_cosine(2.0, 0.5))  # 1 - 4 * 0.75 < 0


def test_flat_interface_is_transparent():
    x, y = interface_operators(1.0, 0.37)
    assert np.array_equal(x, np.zeros((4, 4)))
    assert np.array_equal(y, np.eye(4))


def test_normal_incidence_reflectance():
    for n in (0.7, 1.3, 1.9):
        g = g_matrix(n, 1.0)
        d = d_matrix(n, 1.0)
        assert g[0, 0] == pytest.approx(((1 - n) / (1 + n)) ** 2, rel=1e-14)
        assert g[0, 1] == pytest.approx(0.0, abs=1e-16)
        assert d[0, 0] == pytest.approx(4 * n / (1 + n) ** 2, rel=1e-14)
        assert d[0, 1] == pytest.approx(0.0, abs=1e-16)


def test_frozen_entries_at_15_08():
    assert refracted_cosine(1.5, 0.8) == pytest.approx(ETA_15_08, rel=1e-14)
    g = g_matrix(1.5, 0.8)
    d = d_matrix(1.5, 0.8)
    assert g[0, 0] == pytest.approx(G11_15_08, rel=1e-14)
    assert g[0, 1] == pytest.approx(G12_15_08, rel=1e-14)
    assert d[0, 0] == pytest.approx(D11_15_08, rel=1e-14)
    assert d[0, 1] == pytest.approx(D12_15_08, rel=1e-14)


@settings(max_examples=120, deadline=None)
@given(_valid_pairs(ns, None))
def test_entries_match_amplitude_oracle(pair):
    n, mu = pair
    eta = refracted_cosine(n, mu)
    r_par = (mu - n * eta) / (mu + n * eta)
    r_perp = (n * mu - eta) / (n * mu + eta)
    # flux transmittance: amplitude squared times the (n2 cos_t)/(n1 cos_i) factor
    t_par = (eta / (n * mu)) * (2 * n * mu / (mu + n * eta)) ** 2
    t_perp = (eta / (n * mu)) * (2 * n * mu / (n * mu + eta)) ** 2
    g = g_matrix(n, mu)
    d = d_matrix(n, mu)
    assert g[0, 0] == pytest.approx(0.5 * (r_par**2 + r_perp**2), rel=1e-12)
    assert g[0, 1] == pytest.approx(0.5 * (r_par**2 - r_perp**2), abs=1e-12)
    assert g[2, 2] == pytest.approx(r_par * r_perp, rel=1e-12)
    assert d[0, 0] == pytest.approx(0.5 * (t_par + t_perp), rel=1e-12)
    assert d[0, 1] == pytest.approx(0.5 * (t_par - t_perp), abs=1e-12)


@settings(max_examples=120, deadline=None)
@given(_valid_pairs(ns, None))
def test_energy_closure_per_polarization(pair):
    n, mu = pair
    g = g_matrix(n, mu)
    d = d_matrix(n, mu)
    assert (g[0, 0] + g[0, 1]) + (d[0, 0] + d[0, 1]) == pytest.approx(1.0, abs=1e-12)
    assert (g[0, 0] - g[0, 1]) + (d[0, 0] - d[0, 1]) == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=120, deadline=None)
@given(_valid_pairs(ns, None))
def test_eigenvalues_bounded_by_one(pair):
    n, mu = pair
    x, y = interface_operators(n, mu, basis="iq2")
    for mat in (x, y):
        assert np.max(np.linalg.eigvalsh(mat)) <= 1.0 + 1e-12


def test_total_internal_reflection_branch():
    x, y = interface_operators(2.0, 0.5)
    assert np.array_equal(y, np.zeros((4, 4)))
    assert x[0, 0] == 1.0 and x[1, 1] == 1.0 and x[0, 1] == 0.0
    gam = gamma_matrix(2.0, 0.5)
    assert np.array_equal(x, gam)
    assert gam[2, 3] == -gam[3, 2]


def test_branch_errors():
    with pytest.raises(ValueError):
        g_matrix(2.0, 0.5)       # evanescent
    with pytest.raises(ValueError):
        gamma_matrix(0.9, 0.5)   # no TIR for n < 1
    with pytest.raises(ValueError):
        gamma_matrix(2.0, 0.95)  # above the critical cosine
    with pytest.raises(ValueError):
        g_matrix(1.5, 0.0)       # grazing excluded


def test_stokes_subspace_invariant():
    vec = np.array([1.3, -0.4, 0.0, 0.0])
    for n, mu in ((1.5, 0.8), (0.7, 0.5), (2.0, 0.3)):
        x, y = interface_operators(n, mu)
        assert (x @ vec)[2] == 0.0 and (x @ vec)[3] == 0.0
        assert (y @ vec)[2] == 0.0 and (y @ vec)[3] == 0.0


@settings(max_examples=60, deadline=None)
@given(_valid_pairs(ns, None), st.floats(-1.0, 2.0), st.floats(-1.0, 1.0))
def test_component_basis_consistency(pair, i_l, i_r):
    # acting on (I_l, I_r) diagonally must equal acting on (I, Q) after the
    # change of basis I = I_l + I_r, Q = I_l - I_r
    n, mu = pair
    x_iq, y_iq = interface_operators(n, mu, basis="iq2")
    x_lr, y_lr = interface_operators(n, mu, basis="ilir2")
    p = np.array([[1.0, 1.0], [1.0, -1.0]])
    vec_lr = np.array([i_l, i_r])
    for m_iq, m_lr in ((x_iq, x_lr), (y_iq, y_lr)):
        left = m_iq @ (p @ vec_lr)
        right = p @ (m_lr @ vec_lr)
        assert np.allclose(left, right, atol=1e-13)


def test_component_closure_example():
    x_lr, y_lr = interface_operators(1.5, 0.9, basis="ilir2")
    assert x_lr[0, 0] + y_lr[0, 0] == pytest.approx(1.0, abs=1e-12)
    assert x_lr[1, 1] + y_lr[1, 1] == pytest.approx(1.0, abs=1e-12)


def test_vectorized_pairs_match_operators():
    mu = np.array([0.2, 0.5, 0.8, 1.0])
    for n in (0.7, 1.4):
        xl, xr = reflectance_pair(n, mu)
        yl, yr = transmittance_pair(n, mu)
        for i, m in enumerate(mu):
            x_lr, y_lr = interface_operators(n, float(m), basis="ilir2")
            assert xl[i] == pytest.approx(x_lr[0, 0], rel=1e-13)
            assert xr[i] == pytest.approx(x_lr[1, 1], rel=1e-13)
            assert yl[i] == pytest.approx(y_lr[0, 0], rel=1e-12, abs=1e-13)
            assert yr[i] == pytest.approx(y_lr[1, 1], rel=1e-12, abs=1e-13)


def test_amplitude_coefficients_error_in_evanescent():
    with pytest.raises(ValueError):
        amplitude_coefficients(2.0, 0.5)
