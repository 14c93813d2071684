import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spdcsim.config import (
    ConfigError,
    SourceConfig,
    apply_overrides,
    load_config,
    parse_config,
    parse_quantity,
)


@pytest.mark.parametrize("text,kind,expected", [
    ("780 nm", "length", 780e-9),
    ("1.56um", "length", 1.56e-6),
    ("1.56 µm", "length", 1.56e-6),
    ("2 cm", "length", 0.02),
    ("200 pm", "length", 200e-12),
    ("2 ps", "time", 2e-12),
    ("76 MHz", "frequency", 76e6),
    ("89.9 degC", "temperature", 89.9),
    ("-1e-1 nm", "length", -1e-10),
])
def test_parse_quantity(text, kind, expected):
    value, got = parse_quantity(text, kind)
    assert got == kind
    assert value == pytest.approx(expected, rel=1e-15)


@pytest.mark.parametrize("value", [780, 2.0, "780", "780 parsecs", "nm 780", True])
def test_parse_quantity_rejects(value):
    with pytest.raises(ValueError):
        parse_quantity(value, "length")


def test_wrong_dimension():
    with pytest.raises(ValueError, match="not allowed"):
        parse_quantity("2 ps", "length")


def test_defaults_are_experimental_setup():
    cfg = SourceConfig()
    assert cfg.pump.wavelength == 780e-9 and cfg.pump.duration == 2e-12
    assert cfg.pump.repetition_rate == 76e6 and cfg.crystal.length == 0.02
    assert cfg.filters.alice.center == 1560.5e-9 and cfg.filters.alice.fwhm == 200e-12
    assert cfg.filters.bob is None and cfg.crystal.poling_period is None


def test_empty_text_gives_defaults():
    assert parse_config("") == SourceConfig()


def test_round_trip_defaults():
    cfg = SourceConfig()
    assert parse_config(cfg.dump()) == cfg


@settings(max_examples=100, deadline=None)
@given(
    temp=st.floats(20, 200),
    length=st.floats(1e-3, 0.1),
    fwhm=st.floats(1e-12, 2e-9),
    cw=st.booleans(),
    bob=st.booleans(),
    shape=st.sampled_from(["gaussian", "rectangular", "super-gaussian"]),
    n=st.integers(16, 2048),
    period=st.one_of(st.none(), st.floats(1e-6, 1e-4), st.just(math.inf)),
)
def test_round_trip_property(temp, length, fwhm, cw, bob, shape, n, period):
    cfg = SourceConfig()
    cfg.crystal.temperature = temp
    cfg.crystal.length = length
    cfg.crystal.poling_period = period
    cfg.pump.cw = cw
    cfg.filters.alice.fwhm = fwhm
    cfg.filters.alice.shape = shape
    cfg.grid.n_signal = n
    if bob:
        cfg = apply_overrides(cfg, ["filters.bob={fwhm: 25 GHz, shape: rectangular}"])
    again = parse_config(cfg.dump())
    assert again == cfg
    assert again.digest() == cfg.digest()


def test_bare_number_reports_position():
    text = "pump:\n  wavelength: 780 nm\n  duration: 2\n"
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    assert info.value.line == 3
    assert info.value.column == 13
    assert "missing unit" in str(info.value)


def test_bare_number_in_filter():
    text = "filters:\n  alice:\n    center: 1560.5\n"
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    assert info.value.line == 3


def test_dimensionless_values_may_be_bare():
    cfg = parse_config("fibre:\n  group_birefringence: 4.0e-4\n  compensation_fraction: 1\n")
    assert cfg.fibre.group_birefringence == 4e-4
    assert cfg.fibre.compensation_fraction == 1.0


@pytest.mark.parametrize("text,where", [
    ("pumpp: {}\n", (1, 1)),
    ("crystal:\n  colour: red\n", (2, 3)),
    ("crystal:\n  axes: {pump: o, signal: o, idler: o}\n", (2, 9)),
    ("grid:\n  n_signal: 8\n", (2, 13)),
    ("analysis:\n  overlap_method: bures\n", (2, 19)),
    ("filters:\n  alice:\n    shape: lorentzian\n", (3, 12)),
    ("crystal: [1, 2]\n", (1, 10)),
    ("- a\n- b\n", (1, 1)),
    ("crystal:\n  length: [\n", None),
])
def test_validation_errors(text, where):
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    if where is not None:
        assert (info.value.line, info.value.column) == where


def test_bob_center_defaults_to_conjugate():
    cfg = parse_config("filters:\n  bob: {fwhm: 200 pm}\n")
    assert cfg.filters.bob.center is None
    assert cfg.filters.bob.fwhm == pytest.approx(200e-12)


def test_frequency_width():
    cfg = parse_config("filters:\n  alice: {center: 1560.5 nm, fwhm: 25 GHz}\n")
    assert cfg.filters.alice.fwhm_unit == "frequency"
    assert cfg.filters.alice.fwhm == 25e9


def test_overrides():
    cfg = apply_overrides(SourceConfig(), ["crystal.temperature=25 degC", "pump.duration=cw",
                                           "grid.n_signal=256"])
    assert cfg.crystal.temperature == 25.0 and cfg.pump.cw and cfg.grid.n_signal == 256


def test_override_validation():
    with pytest.raises(ConfigError, match="overrides"):
        apply_overrides(SourceConfig(), ["crystal.temperature=25"])
    with pytest.raises(ConfigError):
        apply_overrides(SourceConfig(), ["no-equals-sign"])


def test_load_config_file(tmp_path):
    path = tmp_path / "c.yaml"
    path.write_text("crystal:\n  temperature: 25 degC\n")
    assert load_config(path).crystal.temperature == 25.0
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.yaml")


def test_digest_ignores_output_section():
    a = SourceConfig()
    b = apply_overrides(a, ["output.path=elsewhere"])
    c = apply_overrides(a, ["crystal.temperature=90 degC"])
    assert a.digest() == b.digest() != c.digest()


def test_shipped_config_is_default():
    from pathlib import Path

    path = Path(__file__).resolve().parents[1] / "configs" / "source.yaml"
    assert load_config(path) == SourceConfig()


def test_decimal_unit_scaling():
    assert parse_quantity("1560.5 nm", "length")[0] == 1.5605e-6
    assert parse_quantity("0.2 nm", "length")[0] == 2e-10
