import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from spdcsim.filters import (
    FilteredPair,
    FilterError,
    FilterSpec,
    apply_filter,
    conjugate_wavelength_nm,
    eq1_terms,
    heralded_bob_spectrum,
    transmission,
)
from spdcsim.jsa import FrequencyGrid, JointAmplitude

SHAPES = ["gaussian", "rectangular", "super-gaussian"]


@pytest.mark.parametrize("shape", ["gaussian", "super-gaussian"])
def test_half_maximum_at_half_width(shape):
    f = FilterSpec(1560.5, 0.2, shape)
    t = transmission(f, np.array([1560.4, 1560.5, 1560.6]))
    assert np.allclose(t**2, [0.5, 1.0, 0.5], atol=1e-12)


def test_rectangular_edges():
    f = FilterSpec(1560.5, 0.2, "rectangular")
    assert transmission(f, np.array([1560.39, 1560.41, 1560.59, 1560.61])).tolist() == [0, 1, 1, 0]


def test_super_gaussian_flatter_than_gaussian():
    x = np.array([1560.45])
    g = transmission(FilterSpec(1560.5, 0.2, "gaussian"), x)
    s = transmission(FilterSpec(1560.5, 0.2, "super-gaussian", order=3), x)
    assert s > g


def test_peak_transmission_scales_intensity():
    f = FilterSpec(1560.0, 0.2, peak_transmission=0.8)
    assert transmission(f, 1560.0) ** 2 == pytest.approx(0.8)


def test_ghz_width_conversion():
    f = FilterSpec(1550.0, 25.0, unit="GHz")
    assert f.fwhm_nm == pytest.approx(1550e-9**2 * 25e9 / 299792458 * 1e9)
    assert f.fwhm_nm == pytest.approx(0.2003, abs=1e-4)


@pytest.mark.parametrize("kwargs", [
    {"shape": "lorentzian"}, {"unit": "THz"}, {"fwhm": 0.0}, {"peak_transmission": 1.5},
    {"center_nm": -1.0}, {"shape": "super-gaussian", "order": 1},
])
def test_filter_validation(kwargs):
    base = {"center_nm": 1560.0, "fwhm": 0.2}
    base.update(kwargs)
    with pytest.raises(ValueError):
        FilterSpec(**base)


@given(st.floats(1550.0, 1570.0))
def test_conjugate_is_involution(lam):
    assert conjugate_wavelength_nm(conjugate_wavelength_nm(lam, 1560.0), 1560.0) == pytest.approx(lam, rel=1e-12)


def test_conjugate_energy_conservation():
    lam = conjugate_wavelength_nm(1560.5, 1560.0)
    assert 1 / 1560.5 + 1 / lam == pytest.approx(2 / 1560.0, rel=1e-14)
    assert lam == pytest.approx(1559.5, abs=1e-3)


def _toy():
    grid = FrequencyGrid.centered(1560.0, 4.0, 64)
    ws, wi = grid.mesh()
    x = (ws - grid.center) / 1e12
    y = (wi - grid.center) / 1e12
    return JointAmplitude(grid, np.exp(-(x + y) ** 2 - 0.1 * (x - y) ** 2)).normalize()


def test_apply_filter_pass_probability_bounds():
    amp = _toy()
    out = apply_filter(amp, FilterSpec(1560.5, 0.4), "signal")
    assert 0 < out.norm2() < amp.norm2()


def test_filter_off_grid_raises():
    with pytest.raises(FilterError):
        apply_filter(_toy(), FilterSpec(1600.0, 0.2, "rectangular"), "signal")


def test_filter_edge_warns():
    with pytest.warns(UserWarning, match="extends past the grid"):
        apply_filter(_toy(), FilterSpec(1563.9, 1.0), "signal")


def test_bad_axis():
    with pytest.raises(ValueError):
        apply_filter(_toy(), FilterSpec(1560.5), "pump")


def test_symmetric_toy_terms_identical():
    t1, t2 = eq1_terms(_toy(), FilterSpec(1560.5, 0.2))
    assert t1.label == "H" and t2.label == "V"
    assert np.array_equal(t1.amplitude.values, t2.amplitude.values)
    assert t1.pass_probability == t2.pass_probability


def test_asymmetric_grid_rejected():
    grid = FrequencyGrid(np.linspace(1.2e15, 1.21e15, 32), np.linspace(1.2e15, 1.21e15, 48))
    amp = JointAmplitude(grid, np.ones(grid.shape))
    with pytest.raises(FilterError, match="identical"):
        eq1_terms(amp, FilterSpec(1560.5))


def test_degenerate_filter_warns():
    with pytest.warns(UserWarning, match="degeneracy"):
        eq1_terms(_toy(), FilterSpec(1560.0, 0.2))


def test_terms_bookkeeping(default_source):
    alice = FilterSpec(1560.5, 0.2)
    bob = FilterSpec(conjugate_wavelength_nm(1560.5, 1560.0), 0.2)
    t1, t2 = eq1_terms(default_source.amplitude, alice, bob)
    assert isinstance(t1, FilteredPair)
    assert t1.alice_filter == alice
    assert [side for _, side in t1.filters] == ["alice", "bob"]
    n1 = np.sum(np.abs(t1.amplitude.values) ** 2) * t1.amplitude.grid.cell_area
    assert t1.pass_probability == pytest.approx(n1)


def test_v_term_uses_role_swapped_amplitude(default_source):
    amp = default_source.amplitude
    alice = FilterSpec(1560.5, 0.2)
    _, v = eq1_terms(amp, alice)
    t = transmission(alice, amp.grid.signal_nm)
    assert np.allclose(v.amplitude.values, t[:, None] * amp.values.T)


def test_transmitted_port_lowers_rate(default_source):
    alice = FilterSpec(1560.5, 0.2)
    plain = eq1_terms(default_source.amplitude, alice)
    through = eq1_terms(default_source.amplitude, alice, transmitted_port=True)
    for a, b in zip(plain, through):
        assert b.pass_probability < a.pass_probability


def test_filter_extinguishing_term():
    amp = _toy()
    with pytest.raises(FilterError):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            eq1_terms(amp, FilterSpec(1560.5, 0.01, "rectangular"),
                      FilterSpec(1556.5, 0.01, "rectangular"))


def test_heralded_spectrum_unit_area(default_source):
    for term in eq1_terms(default_source.amplitude, FilterSpec(1560.5, 0.2)):
        spec = heralded_bob_spectrum(term)
        grid = term.amplitude.grid
        assert spec.density.sum() * grid.d_idler == pytest.approx(1.0, abs=1e-12)
        assert np.all(spec.density >= 0)


def test_heralded_centroids_below_degeneracy(default_source):
    specs = [heralded_bob_spectrum(t) for t in eq1_terms(default_source.amplitude, FilterSpec(1560.5, 0.2))]
    for spec in specs:
        assert spec.centroid_nm < 1560.0
    # the two terms put Bob's photon on different sides of the energy conjugate
    assert specs[0].centroid_nm < 1559.5 < specs[1].centroid_nm or specs[1].centroid_nm < 1559.5 < specs[0].centroid_nm


@pytest.mark.parametrize("shape", SHAPES)
def test_bob_filter_narrows_heralded_spectra(default_source, shape):
    alice = FilterSpec(1560.5, 0.2, shape)
    bob = FilterSpec(conjugate_wavelength_nm(1560.5, 1560.0), 0.2, shape)
    without = [heralded_bob_spectrum(t) for t in eq1_terms(default_source.amplitude, alice)]
    with_bob = [heralded_bob_spectrum(t) for t in eq1_terms(default_source.amplitude, alice, bob)]
    gap_without = abs(without[0].centroid_nm - without[1].centroid_nm)
    gap_with = abs(with_bob[0].centroid_nm - with_bob[1].centroid_nm)
    assert gap_with < gap_without / 10
    assert max(s.fwhm_nm for s in with_bob) < min(s.fwhm_nm for s in without)


def test_describe_round_trip():
    f = FilterSpec(1560.5, 25.0, "super-gaussian", "GHz", 0.9, 3)
    d = f.describe()
    assert d["order"] == 3 and d["fwhm_nm"] == pytest.approx(f.fwhm_nm)
    assert math.isclose(f.moved(1559.0).center_nm, 1559.0)
