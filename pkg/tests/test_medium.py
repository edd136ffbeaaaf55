import logging

import numpy as np
import pytest

from vrrte.medium import (AbsorptionTable, AlbedoParams, DensityProfile,
                          Medium, RefractiveProfile)


def test_constant_table_from_two_rows():
    table = AbsorptionTable.from_wavelength_rows([(3.0, 0.5), (1.5, 0.5)])
    nu = np.linspace(1.0, 2.0, 7)
    assert np.allclose(table(nu), 0.5)


def test_interpolation_hits_nodes_exactly():
    table = AbsorptionTable.from_wavelength_rows([(3.0, 0.2), (1.5, 0.6)])
    assert table(1.0) == pytest.approx(0.2)   # wavelength 3 um -> nu = 1
    assert table(2.0) == pytest.approx(0.6)   # wavelength 1.5 um -> nu = 2


def test_linear_interpolation_midway():
    table = AbsorptionTable.from_wavelength_rows([(3.0, 0.2), (1.5, 0.6)])
    assert table(1.5) == pytest.approx(0.4)


def test_clamped_extrapolation():
    table = AbsorptionTable.from_wavelength_rows([(3.0, 0.2), (1.5, 0.6)])
    assert table(0.5) == pytest.approx(0.2)
    assert table(5.0) == pytest.approx(0.6)


def test_text_parsing_with_comments_and_commas():
    table = AbsorptionTable.from_text("""
# comment line
3.0, 0.2
1.5  0.6  # trailing comment
""")
    assert table(1.5) == pytest.approx(0.4)


@pytest.mark.parametrize("text", ["3.0 0.2", "3.0 0.2 0.9\n1.5 0.6", "abc 0.2\n1.5 0.6"])
def test_malformed_tables_rejected(text):
    with pytest.raises(ValueError):
        AbsorptionTable.from_text(text)


def test_nonpositive_wavelength_rejected():
    with pytest.raises(ValueError):
        AbsorptionTable.from_wavelength_rows([(-3.0, 0.2), (1.5, 0.6)])


def test_band_override_empty_is_identity():
    table = AbsorptionTable.from_wavelength_rows([(3.0, 0.2), (1.5, 0.6)])
    assert table.with_bands([])(1.5) == pytest.approx(table(1.5))


def test_band_override_whole_range():
    table = AbsorptionTable.from_wavelength_rows([(3.0, 0.2), (1.5, 0.6)])
    full = table.with_bands([(1.5, 3.0, 1.0)])
    assert np.allclose(full(np.linspace(1.0, 2.0, 9)), 1.0)


def test_band_override_inside_only():
    lam = np.arange(10.0, 20.5, 0.5)
    table = AbsorptionTable.from_wavelength_rows([(w, 0.3) for w in lam])
    mod = table.with_bands([(14.0, 16.0, 1.0)])
    assert mod(3.0 / 15.0) == pytest.approx(1.0)
    assert mod(3.0 / 13.0) == pytest.approx(table(3.0 / 13.0))
    assert mod(3.0 / 17.0) == pytest.approx(table(3.0 / 17.0))
    # original untouched
    assert table(3.0 / 15.0) == pytest.approx(0.3)


def test_overlapping_bands_rejected():
    lam = np.arange(10.0, 20.5, 0.5)
    table = AbsorptionTable.from_wavelength_rows([(w, 0.3) for w in lam])
    with pytest.raises(ValueError):
        table.with_bands([(12.0, 15.0, 1.0), (14.0, 16.0, 1.0)])


def test_band_outside_table_range_rejected():
    table = AbsorptionTable.from_wavelength_rows([(3.0, 0.2), (1.5, 0.6)])
    with pytest.raises(ValueError):
        table.with_bands([(10.0, 12.0, 1.0)])


def test_band_value_outside_tabulated_window_warns():
    lam = np.arange(10.0, 20.5, 0.5)
    table = AbsorptionTable.from_wavelength_rows([(w, 0.3) for w in lam])
    with pytest.warns(UserWarning):
        table.with_bands([(14.0, 16.0, 2.0)])


def _medium(epsilon=0.0, beta=0.5):
    return Medium(RefractiveProfile.from_step(epsilon, 0.5, 1.0),
                  DensityProfile.constant(1.0),
                  AbsorptionTable.constant(0.5),
                  AlbedoParams(a1=0.7, a2=0.3, z1=0.4, z2=0.8, nu1=0.6, nu2=1.5),
                  beta)


def test_albedo_zero_below_first_breakpoint():
    med = _medium()
    n, kappa, kappa_s, kappa_a, _ = med.properties(0.2, np.array([1.0]))
    assert kappa_s[0] == 0.0
    assert kappa_a[0] == kappa[0]


def test_albedo_mid_layer_value():
    med = _medium()
    _, _, kappa_s, _, _ = med.properties(0.6, np.array([1.0]))
    assert kappa_s[0] == pytest.approx(0.7 * 0.5)


def test_albedo_top_layer_band_edge():
    # at nu = nu2 the quartic factor is exactly one
    med = _medium()
    assert med.scattering_albedo(0.9, np.array([1.5]))[0] == pytest.approx(0.3)
    assert med.scattering_albedo(0.9, np.array([1.6]))[0] == 0.0


def test_kappa_split_exact():
    med = _medium()
    nu = np.linspace(0.1, 3.0, 11)
    _, kappa, kappa_s, kappa_a, _ = med.properties(0.6, nu)
    assert np.all(kappa_a + kappa_s == kappa)


def test_altitude_out_of_range_rejected():
    with pytest.raises(ValueError):
        _medium().properties(1.5, np.array([1.0]))


def test_albedo_amplitudes_strictly_below_one():
    with pytest.raises(ValueError):
        AlbedoParams(a1=1.0)


def test_unit_ratios_for_flat_profile():
    prof = RefractiveProfile.from_step(0.0, 0.5, 1.0)
    assert prof.ratio_from_below == 1.0
    assert prof.ratio_from_above == 1.0
    assert prof.ratio_from_below * prof.ratio_from_above == 1.0


def test_ratio_product_is_one():
    prof = RefractiveProfile.from_step(-0.3, 0.5, 1.0)
    assert prof.ratio_from_below * prof.ratio_from_above == pytest.approx(1.0, rel=1e-15)


def test_kappa_bar_clamp_logged(caplog):
    table = AbsorptionTable.from_wavelength_rows([(3.0, 0.001), (1.5, 0.001)])
    med = Medium(RefractiveProfile.from_step(0.0, 0.5, 1.0),
                 DensityProfile.constant(1.0), table, AlbedoParams(), 0.0)
    with caplog.at_level(logging.INFO):
        out = med.kappa_bar_at(np.array([1.2]))
    assert out[0] == pytest.approx(0.01)
    assert any("clamped" in rec.message for rec in caplog.records)


def test_density_cumulative_two_zone():
    rho = DensityProfile.two_zone(10.0, 0.1, 0.1)
    assert rho.cumulative(0.05) == pytest.approx(0.5)
    assert rho.cumulative(0.1) == pytest.approx(1.0)
    assert rho.cumulative(1.0) == pytest.approx(1.0 + 0.09)
    assert rho.value_at(0.05) == 10.0
    assert rho.value_at(0.5) == 0.1


def test_density_must_be_positive():
    with pytest.raises(ValueError):
        DensityProfile.constant(0.0)
