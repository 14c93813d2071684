import pytest

from spdcsim.config import SourceConfig, apply_overrides
from spdcsim.filters import FilterError
from spdcsim.pipeline import build_source, filter_spec, source_filters


def test_default_source(default_source):
    assert default_source.grid.shape == (512, 512)
    assert default_source.crystal.poling_period == pytest.approx(9.6952e-6, rel=1e-4)
    assert default_source.degenerate_nm == pytest.approx(1560.0)


def test_bob_filter_at_conjugate():
    cfg = apply_overrides(SourceConfig(), ["filters.bob={fwhm: 200 pm}"])
    alice, bob = source_filters(cfg, 1560.0)
    assert alice.center_nm == pytest.approx(1560.5)
    assert 1 / alice.center_nm + 1 / bob.center_nm == pytest.approx(2 / 1560.0, rel=1e-14)


def test_explicit_bob_center():
    cfg = apply_overrides(SourceConfig(), ["filters.bob={fwhm: 200 pm, center: 1559.4 nm}"])
    assert source_filters(cfg, 1560.0)[1].center_nm == pytest.approx(1559.4)


def test_frequency_filter_width():
    cfg = apply_overrides(SourceConfig(), ["filters.alice.fwhm=25 GHz"])
    spec = filter_spec(cfg.filters.alice, 1560.5)
    assert spec.unit == "GHz" and spec.fwhm == pytest.approx(25.0)


def test_equal_weights_by_default(default_source):
    assert default_source.state().weights == (0.5, 0.5)


def test_pass_probability_weights():
    cfg = apply_overrides(SourceConfig(), ["analysis.weights=pass", "grid.n_signal=256", "grid.n_idler=256"])
    source = build_source(cfg)
    p1, p2 = source.overlap().term_probabilities
    assert source.state().weights == pytest.approx((p1 / (p1 + p2), p2 / (p1 + p2)))


def test_overlap_override(default_source):
    state = default_source.state(overlap_override=1.0)
    assert state.interference == 1.0


def test_joint_method_selectable():
    cfg = apply_overrides(SourceConfig(), ["analysis.overlap_method=joint"])
    assert build_source(cfg).overlap().magnitude == pytest.approx(0.604, abs=2e-3)


def test_explicit_period_used():
    cfg = apply_overrides(SourceConfig(), ["crystal.poling_period=9.7 um", "grid.n_signal=128",
                                           "grid.n_idler=128"])
    assert build_source(cfg).crystal.poling_period == pytest.approx(9.7e-6)


def test_asymmetric_grid_cannot_form_terms():
    cfg = apply_overrides(SourceConfig(), ["grid.n_idler=256"])
    with pytest.raises(FilterError):
        build_source(cfg).terms()
