"""Source configuration files.

Configs are YAML mappings. Every physical quantity is a string with an
explicit unit suffix (``"780 nm"``, ``"2 ps"``, ``"76 MHz"``,
``"89.9 degC"``); a bare number for such a field is an error. Dimensionless
settings (grid sizes, fractions, transmissions, birefringence) are plain
numbers. Values are stored internally in SI units (m, s, Hz) and degC.

Schema (all sections and keys optional; the defaults describe a 2 cm
PPLN crystal pumped by 2 ps pulses at 780 nm)::

    crystal:
      material: mgo_cln_gayer2008   # built-in name or path to a material file
      length: 2 cm
      poling_period: solve          # or e.g. "9.7 um", or unpoled
      temperature: 89.9 degC
      axes: {pump: o, signal: e, idler: o}
    pump:
      wavelength: 780 nm
      duration: 2 ps                # or "cw"
      repetition_rate: 76 MHz
    filters:
      alice: {shape: gaussian, center: 1560.5 nm, fwhm: 200 pm, peak_transmission: 1.0}
      bob: null                     # or a filter; center defaults to the conjugate
      transmitted_port: false
    grid: {n_signal: 512, n_idler: 512, center: 1560 nm, span: 4 nm}
    fibre: {group_birefringence: 5.0e-4, length: 1.44 m, compensation_fraction: 0.5}
    analysis:
      overlap_method: spectral      # or joint
      weights: equal                # or pass (term pass probabilities)
      scan: {start: -1 nm, stop: 1 nm, points: 41}
    output: {format: csv, path: out}
"""

from __future__ import annotations

import copy
import hashlib
import json
import math
import re
from dataclasses import dataclass, field
from decimal import Decimal
from pathlib import Path

import yaml

__all__ = [
    "ConfigError",
    "CrystalConfig",
    "PumpConfig",
    "FilterConfig",
    "FiltersConfig",
    "GridConfig",
    "FibreConfig",
    "AnalysisConfig",
    "OutputConfig",
    "SourceConfig",
    "parse_quantity",
    "load_config",
    "parse_config",
    "apply_overrides",
]


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        where = f"line {line}, column {column}: " if line is not None else ""
        super().__init__(where + message)


UNITS = {
    "length": {"pm": "1e-12", "nm": "1e-9", "um": "1e-6", "µm": "1e-6", "mm": "1e-3", "cm": "1e-2", "m": "1"},
    "time": {"fs": "1e-15", "ps": "1e-12", "ns": "1e-9", "us": "1e-6", "s": "1"},
    "frequency": {"Hz": "1", "kHz": "1e3", "MHz": "1e6", "GHz": "1e9", "THz": "1e12"},
    "temperature": {"degC": "1", "°C": "1", "C": "1"},
}
_QUANTITY = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*([^\s\d.+-][^\s]*)\s*$")


def parse_quantity(value, kinds: tuple[str, ...] | str) -> tuple[float, str]:
    """Parse ``"<number> <unit>"`` into an SI value and its dimension.

    Raises:
        ValueError: for bare numbers, unknown units or the wrong dimension.
    """
    kinds = (kinds,) if isinstance(kinds, str) else kinds
    if isinstance(value, bool) or isinstance(value, (int, float)):
        raise ValueError(f"missing unit suffix on {value!r} (expected {'/'.join(kinds)})")
    if not isinstance(value, str):
        raise ValueError(f"expected a quantity string, got {type(value).__name__}")
    match = _QUANTITY.match(value)
    if not match:
        raise ValueError(f"cannot parse quantity {value!r}; write e.g. '780 nm'")
    number, unit = match.group(1), match.group(2)
    for kind in kinds:
        if unit in UNITS[kind]:
            # decimal scaling so "1560.5 nm" gives the float nearest 1.5605e-6
            return float(Decimal(number) * Decimal(UNITS[kind][unit])), kind
    allowed = sorted(u for k in kinds for u in UNITS[k])
    raise ValueError(f"unit {unit!r} not allowed here; use one of {allowed}")


def _q(si: float, unit: str) -> str:
    return f"{si!r} {unit}"


@dataclass
class CrystalConfig:
    material: str = "mgo_cln_gayer2008"
    length: float = 0.02
    poling_period: float | None = None
    temperature: float = 89.9
    pump_axis: str = "o"
    signal_axis: str = "e"
    idler_axis: str = "o"


@dataclass
class PumpConfig:
    wavelength: float = 780e-9
    duration: float = 2e-12
    repetition_rate: float = 76e6
    cw: bool = False


@dataclass
class FilterConfig:
    center: float | None = None
    fwhm: float = 200e-12
    fwhm_unit: str = "length"
    shape: str = "gaussian"
    peak_transmission: float = 1.0
    order: int = 2


@dataclass
class FiltersConfig:
    alice: FilterConfig = field(default_factory=lambda: FilterConfig(center=1560.5e-9))
    bob: FilterConfig | None = None
    transmitted_port: bool = False


@dataclass
class GridConfig:
    n_signal: int = 512
    n_idler: int = 512
    center: float = 1560e-9
    span: float = 4e-9


@dataclass
class FibreConfig:
    group_birefringence: float = 5.0e-4
    length: float = 1.44
    compensation_fraction: float = 0.5


@dataclass
class AnalysisConfig:
    overlap_method: str = "spectral"
    weights: str = "equal"
    scan_start: float = -1e-9
    scan_stop: float = 1e-9
    scan_points: int = 41


@dataclass
class OutputConfig:
    format: str = "csv"
    path: str = "out"


@dataclass
class SourceConfig:
    crystal: CrystalConfig = field(default_factory=CrystalConfig)
    pump: PumpConfig = field(default_factory=PumpConfig)
    filters: FiltersConfig = field(default_factory=FiltersConfig)
    grid: GridConfig = field(default_factory=GridConfig)
    fibre: FibreConfig = field(default_factory=FibreConfig)
    analysis: AnalysisConfig = field(default_factory=AnalysisConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    def to_dict(self) -> dict:
        """Serialize to the file schema (quantities in SI units)."""
        cr, pu, fi, gr, fb, an = (self.crystal, self.pump, self.filters, self.grid,
                                  self.fibre, self.analysis)

        def filt(f: FilterConfig | None):
            if f is None:
                return None
            width = _q(f.fwhm, "m") if f.fwhm_unit == "length" else _q(f.fwhm, "Hz")
            out = {"shape": f.shape, "fwhm": width, "peak_transmission": f.peak_transmission}
            if f.center is not None:
                out["center"] = _q(f.center, "m")
            if f.shape == "super-gaussian":
                out["order"] = f.order
            return out

        return {
            "crystal": {
                "material": cr.material,
                "length": _q(cr.length, "m"),
                "poling_period": ("solve" if cr.poling_period is None
                                  else "unpoled" if math.isinf(cr.poling_period)
                                  else _q(cr.poling_period, "m")),
                "temperature": _q(cr.temperature, "degC"),
                "axes": {"pump": cr.pump_axis, "signal": cr.signal_axis, "idler": cr.idler_axis},
            },
            "pump": {
                "wavelength": _q(pu.wavelength, "m"),
                "duration": "cw" if pu.cw else _q(pu.duration, "s"),
                "repetition_rate": _q(pu.repetition_rate, "Hz"),
            },
            "filters": {"alice": filt(fi.alice), "bob": filt(fi.bob),
                        "transmitted_port": fi.transmitted_port},
            "grid": {"n_signal": gr.n_signal, "n_idler": gr.n_idler,
                     "center": _q(gr.center, "m"), "span": _q(gr.span, "m")},
            "fibre": {"group_birefringence": fb.group_birefringence, "length": _q(fb.length, "m"),
                      "compensation_fraction": fb.compensation_fraction},
            "analysis": {"overlap_method": an.overlap_method, "weights": an.weights,
                         "scan": {"start": _q(an.scan_start, "m"), "stop": _q(an.scan_stop, "m"),
                                  "points": an.scan_points}},
            "output": {"format": self.output.format, "path": self.output.path},
        }

    def dump(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False, allow_unicode=True)

    def digest(self) -> str:
        """Stable hash of the physics-relevant settings (output section excluded)."""
        data = self.to_dict()
        data.pop("output")
        blob = json.dumps(data, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


class _Reader:
    """Walks a parsed YAML mapping while remembering node positions."""

    def __init__(self, text: str):
        try:
            self.root = yaml.compose(text, Loader=yaml.SafeLoader)
            self.data = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            mark = getattr(exc, "problem_mark", None)
            raise ConfigError(f"invalid YAML: {getattr(exc, 'problem', exc)}",
                              mark.line + 1 if mark else None,
                              mark.column + 1 if mark else None) from None
        if self.data is None:
            self.data = {}
        if not isinstance(self.data, dict):
            raise ConfigError("config must be a mapping", 1, 1)

    def mark(self, path: tuple[str, ...], at_key: bool = False):
        node = self.root
        best = node
        for key in path:
            if not isinstance(node, yaml.MappingNode):
                break
            for k, v in node.value:
                if k.value == key:
                    node = v
                    best = k if at_key and key == path[-1] else v
                    break
            else:
                break
        if best is None:
            return None, None
        return best.start_mark.line + 1, best.start_mark.column + 1

    def error(self, path, message, at_key: bool = False):
        line, col = self.mark(path, at_key)
        return ConfigError(f"{'.'.join(path)}: {message}", line, col)


def _section(reader: _Reader, data: dict, path: tuple[str, ...], allowed: set[str]) -> dict:
    section = data.get(path[-1], {}) if data is not None else {}
    if section is None:
        return {}
    if not isinstance(section, dict):
        raise reader.error(path, "must be a mapping")
    unknown = set(section) - allowed
    if unknown:
        raise reader.error(path + (sorted(unknown)[0],), f"unknown key (allowed: {sorted(allowed)})", at_key=True)
    return section


def _parse_filter(reader, raw, path, default_center) -> FilterConfig:
    if not isinstance(raw, dict):
        raise reader.error(path, "must be a mapping")
    allowed = {"shape", "center", "fwhm", "peak_transmission", "order"}
    unknown = set(raw) - allowed
    if unknown:
        raise reader.error(path + (sorted(unknown)[0],), f"unknown key (allowed: {sorted(allowed)})", at_key=True)
    out = FilterConfig(center=default_center)
    try:
        if "shape" in raw:
            out.shape = str(raw["shape"])
            if out.shape not in ("gaussian", "rectangular", "super-gaussian"):
                raise ValueError(f"unknown filter shape {out.shape!r}")
        if "center" in raw and raw["center"] not in (None, "conjugate"):
            out.center = parse_quantity(raw["center"], "length")[0]
        elif "center" in raw:
            out.center = None
        if "fwhm" in raw:
            out.fwhm, out.fwhm_unit = parse_quantity(raw["fwhm"], ("length", "frequency"))
        if "peak_transmission" in raw:
            out.peak_transmission = _number(raw["peak_transmission"])
        if "order" in raw:
            out.order = int(raw["order"])
    except ValueError as exc:
        key = next((k for k in ("shape", "center", "fwhm", "peak_transmission", "order")
                    if k in raw and k in str(exc)), None)
        raise reader.error(path + ((key,) if key else ()), str(exc)) from None
    return out


def _number(value) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValueError(f"expected a plain number, got {value!r}")
    return float(value)


def parse_config(text: str) -> SourceConfig:
    """Parse and validate config text.

    Raises:
        ConfigError: with the line and column of the offending value.
    """
    reader = _Reader(text)
    data = reader.data
    top = {"crystal", "pump", "filters", "grid", "fibre", "analysis", "output"}
    unknown = set(data) - top
    if unknown:
        key = sorted(unknown)[0]
        raise reader.error((key,), f"unknown section (allowed: {sorted(top)})", at_key=True)
    cfg = SourceConfig()

    def field_(path, fn):
        try:
            return fn()
        except (ValueError, TypeError) as exc:
            raise reader.error(path, str(exc)) from None

    sec = _section(reader, data, ("crystal",), {"material", "length", "poling_period", "temperature", "axes"})
    cr = cfg.crystal
    if "material" in sec:
        cr.material = str(sec["material"])
    if "length" in sec:
        cr.length = field_(("crystal", "length"), lambda: parse_quantity(sec["length"], "length")[0])
    if "poling_period" in sec:
        val = sec["poling_period"]
        if val == "solve":
            cr.poling_period = None
        elif val == "unpoled":
            cr.poling_period = math.inf
        else:
            cr.poling_period = field_(("crystal", "poling_period"),
                                      lambda: parse_quantity(val, "length")[0])
    if "temperature" in sec:
        cr.temperature = field_(("crystal", "temperature"),
                                lambda: parse_quantity(sec["temperature"], "temperature")[0])
    if "axes" in sec:
        axes = sec["axes"]
        if not isinstance(axes, dict) or set(axes) - {"pump", "signal", "idler"}:
            raise reader.error(("crystal", "axes"), "must map pump/signal/idler to o or e")
        for role in ("pump", "signal", "idler"):
            if role in axes:
                if axes[role] not in ("o", "e"):
                    raise reader.error(("crystal", "axes", role), "axis must be 'o' or 'e'")
                setattr(cr, f"{role}_axis", axes[role])
        if cr.signal_axis == cr.idler_axis:
            raise reader.error(("crystal", "axes"), "signal and idler must use different axes")

    sec = _section(reader, data, ("pump",), {"wavelength", "duration", "repetition_rate"})
    pu = cfg.pump
    if "wavelength" in sec:
        pu.wavelength = field_(("pump", "wavelength"), lambda: parse_quantity(sec["wavelength"], "length")[0])
    if "duration" in sec:
        if sec["duration"] == "cw":
            pu.cw = True
        else:
            pu.duration = field_(("pump", "duration"), lambda: parse_quantity(sec["duration"], "time")[0])
    if "repetition_rate" in sec:
        pu.repetition_rate = field_(("pump", "repetition_rate"),
                                    lambda: parse_quantity(sec["repetition_rate"], "frequency")[0])

    sec = _section(reader, data, ("filters",), {"alice", "bob", "transmitted_port"})
    fi = cfg.filters
    if "alice" in sec:
        if sec["alice"] is None:
            raise reader.error(("filters", "alice"), "a separating filter is required")
        fi.alice = _parse_filter(reader, sec["alice"], ("filters", "alice"), fi.alice.center)
        if fi.alice.center is None:
            raise reader.error(("filters", "alice"), "separating filter needs a center")
    if sec.get("bob") is not None:
        fi.bob = _parse_filter(reader, sec["bob"], ("filters", "bob"), None)
    if "transmitted_port" in sec:
        if not isinstance(sec["transmitted_port"], bool):
            raise reader.error(("filters", "transmitted_port"), "must be true or false")
        fi.transmitted_port = sec["transmitted_port"]

    sec = _section(reader, data, ("grid",), {"n_signal", "n_idler", "center", "span"})
    gr = cfg.grid
    for key in ("n_signal", "n_idler"):
        if key in sec:
            if isinstance(sec[key], bool) or not isinstance(sec[key], int) or sec[key] < 16:
                raise reader.error(("grid", key), "must be an integer >= 16")
            setattr(gr, key, sec[key])
    for key in ("center", "span"):
        if key in sec:
            setattr(gr, key, field_(("grid", key), lambda: parse_quantity(sec[key], "length")[0]))

    sec = _section(reader, data, ("fibre",), {"group_birefringence", "length", "compensation_fraction"})
    fb = cfg.fibre
    if "group_birefringence" in sec:
        fb.group_birefringence = field_(("fibre", "group_birefringence"),
                                        lambda: _number(sec["group_birefringence"]))
        if not fb.group_birefringence > 0:
            raise reader.error(("fibre", "group_birefringence"), "must be positive")
    if "length" in sec:
        fb.length = field_(("fibre", "length"), lambda: parse_quantity(sec["length"], "length")[0])
    if "compensation_fraction" in sec:
        fb.compensation_fraction = field_(("fibre", "compensation_fraction"),
                                          lambda: _number(sec["compensation_fraction"]))
        if not 0 <= fb.compensation_fraction <= 1:
            raise reader.error(("fibre", "compensation_fraction"), "must lie in [0, 1]")

    sec = _section(reader, data, ("analysis",), {"overlap_method", "weights", "scan"})
    an = cfg.analysis
    if "overlap_method" in sec:
        if sec["overlap_method"] not in ("spectral", "joint"):
            raise reader.error(("analysis", "overlap_method"), "must be 'spectral' or 'joint'")
        an.overlap_method = sec["overlap_method"]
    if "weights" in sec:
        if sec["weights"] not in ("equal", "pass"):
            raise reader.error(("analysis", "weights"), "must be 'equal' or 'pass'")
        an.weights = sec["weights"]
    if "scan" in sec:
        scan = sec["scan"]
        if not isinstance(scan, dict) or set(scan) - {"start", "stop", "points"}:
            raise reader.error(("analysis", "scan"), "must hold start, stop, points")
        if "start" in scan:
            an.scan_start = field_(("analysis", "scan", "start"),
                                   lambda: parse_quantity(scan["start"], "length")[0])
        if "stop" in scan:
            an.scan_stop = field_(("analysis", "scan", "stop"),
                                  lambda: parse_quantity(scan["stop"], "length")[0])
        if "points" in scan:
            if isinstance(scan["points"], bool) or not isinstance(scan["points"], int) or scan["points"] < 2:
                raise reader.error(("analysis", "scan", "points"), "must be an integer >= 2")
            an.scan_points = scan["points"]

    sec = _section(reader, data, ("output",), {"format", "path"})
    if "format" in sec:
        if sec["format"] not in ("csv", "json"):
            raise reader.error(("output", "format"), "must be 'csv' or 'json'")
        cfg.output.format = sec["format"]
    if "path" in sec:
        cfg.output.path = str(sec["path"])
    return cfg


def load_config(path: str | Path) -> SourceConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text)


def apply_overrides(cfg: SourceConfig, overrides: list[str]) -> SourceConfig:
    """Apply ``section.key=value`` overrides using the file syntax.

    The config is re-serialized, patched and re-parsed so overrides pass the
    same validation as file values.
    """
    data = copy.deepcopy(cfg.to_dict())
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} must look like section.key=value")
        key, raw = item.split("=", 1)
        parts = key.strip().split(".")
        try:
            value = yaml.safe_load(raw)
        except yaml.YAMLError:
            value = raw
        node = data
        for part in parts[:-1]:
            if node.get(part) is None:
                node[part] = {}
            node = node[part]
            if not isinstance(node, dict):
                raise ConfigError(f"override {item!r}: {part} is not a section")
        node[parts[-1]] = value
    try:
        return parse_config(yaml.safe_dump(data, sort_keys=False, allow_unicode=True))
    except ConfigError as exc:
        raise ConfigError(f"in overrides: {exc}") from None

