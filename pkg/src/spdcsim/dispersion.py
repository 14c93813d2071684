"""Material dispersion and collinear quasi-phase-matching.

Wavelengths are vacuum wavelengths in micrometres, angular frequencies in
rad/s, wavenumbers in rad/m and temperatures in degrees Celsius unless a
name says otherwise.

Three Sellmeier forms are understood:

``gayer``
    ``n^2 = a1 + b1 f + (a2 + b2 f)/(lam^2 - (a3 + b3 f)^2)
    + (a4 + b4 f)/(lam^2 - a5^2) - a6 lam^2`` with
    ``f = (T - 24.5)(T + 570.82)``; coefficients ``[a1..a6]``, thermal
    coefficients ``[b1..b4]``.
``sellmeier``
    ``n^2 = 1 + sum B_i lam^2/(lam^2 - C_i)``; coefficients
    ``[B1, C1, B2, C2, ...]``, no thermal model.
``constant``
    ``n = n0``; a dispersionless toy medium, coefficients ``[n0]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np
import yaml
from scipy.constants import c
from scipy.optimize import brentq

__all__ = [
    "DispersionError",
    "SellmeierSet",
    "CrystalSpec",
    "PhaseMismatch",
    "load_material",
    "builtin_materials",
    "refractive_index",
    "wavenumber",
    "group_slope",
    "phase_mismatch",
    "poling_period_for_degeneracy",
    "tilt_angle",
    "temperature_for_tilt",
    "omega_from_wavelength",
    "wavelength_from_omega",
]

FORMS = ("gayer", "sellmeier", "constant")
AXES = {"o": "o", "ordinary": "o", "e": "e", "extraordinary": "e"}

# relative frequency step of the central difference used for k'
DEFAULT_REL_STEP = 1e-3
DEFAULT_SLOPE_RTOL = 1e-6


class DispersionError(ValueError):
    """Raised for evaluations outside a material's validity window."""


def omega_from_wavelength(wavelength_um):
    return 2 * np.pi * c / (np.asarray(wavelength_um, dtype=float) * 1e-6)


def wavelength_from_omega(omega):
    """Vacuum wavelength in um for an angular frequency in rad/s."""
    return 2 * np.pi * c / np.asarray(omega, dtype=float) * 1e6


def _axis(axis: str) -> str:
    try:
        return AXES[axis]
    except KeyError:
        raise ValueError(f"unknown crystal axis {axis!r}; use 'o' or 'e'") from None


@dataclass(frozen=True)
class SellmeierSet:
    """Refractive-index data for a uniaxial material.

    Attributes:
        name: human-readable material name.
        form: one of ``gayer``, ``sellmeier`` or ``constant``.
        ordinary: coefficients of the ordinary index.
        extraordinary: coefficients of the extraordinary index.
        thermal_ordinary: thermal coefficients (``gayer`` form only).
        thermal_extraordinary: thermal coefficients (``gayer`` form only).
        wavelength_range_um: closed validity window in micrometres.
        temperature_range_c: closed validity window in degrees Celsius.
        provenance: citation for the coefficients.
    """

    name: str
    form: str
    ordinary: tuple[float, ...]
    extraordinary: tuple[float, ...]
    thermal_ordinary: tuple[float, ...] = ()
    thermal_extraordinary: tuple[float, ...] = ()
    wavelength_range_um: tuple[float, float] = (0.0, math.inf)
    temperature_range_c: tuple[float, float] = (-273.15, math.inf)
    provenance: str = ""

    def __post_init__(self):
        if self.form not in FORMS:
            raise ValueError(f"unknown Sellmeier form {self.form!r}")
        for attr in ("ordinary", "extraordinary", "thermal_ordinary",
                     "thermal_extraordinary", "wavelength_range_um",
                     "temperature_range_c"):
            object.__setattr__(self, attr, tuple(float(v) for v in getattr(self, attr)))
        expected = {"gayer": 6, "constant": 1}.get(self.form)
        for coeffs in (self.ordinary, self.extraordinary):
            if expected is not None and len(coeffs) != expected:
                raise ValueError(f"form {self.form!r} takes {expected} coefficients, got {len(coeffs)}")
            if self.form == "sellmeier" and (len(coeffs) == 0 or len(coeffs) % 2):
                raise ValueError("sellmeier form takes [B1, C1, B2, C2, ...] pairs")
        if self.form == "gayer":
            for coeffs in (self.thermal_ordinary, self.thermal_extraordinary):
                if len(coeffs) != 4:
                    raise ValueError("gayer form takes 4 thermal coefficients per axis")
        lo, hi = self.wavelength_range_um
        if not 0 <= lo < hi:
            raise ValueError(f"bad wavelength window {self.wavelength_range_um}")

    @classmethod
    def constant(cls, n0: float, name: str = "dispersionless") -> "SellmeierSet":
        """Toy medium with the same index on both axes."""
        return cls(name=name, form="constant", ordinary=(n0,), extraordinary=(n0,))

    @classmethod
    def from_dict(cls, data: dict) -> "SellmeierSet":
        known = {
            "name", "form", "ordinary", "extraordinary", "thermal_ordinary",
            "thermal_extraordinary", "wavelength_range_um", "temperature_range_c",
            "provenance",
        }
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown material keys: {sorted(unknown)}")
        return cls(**data)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "form": self.form,
            "ordinary": list(self.ordinary),
            "extraordinary": list(self.extraordinary),
            "thermal_ordinary": list(self.thermal_ordinary),
            "thermal_extraordinary": list(self.thermal_extraordinary),
            "wavelength_range_um": list(self.wavelength_range_um),
            "temperature_range_c": list(self.temperature_range_c),
            "provenance": self.provenance,
        }

    def check(self, wavelength_um, temperature: float) -> None:
        lo, hi = self.wavelength_range_um
        lam = np.asarray(wavelength_um, dtype=float)
        if lam.size and (np.min(lam) < lo or np.max(lam) > hi or not np.all(np.isfinite(lam))):
            bad = lam[(lam < lo) | (lam > hi) | ~np.isfinite(lam)].flat[0]
            raise DispersionError(
                f"{self.name}: wavelength {bad:.6g} um outside validity window [{lo:g}, {hi:g}] um"
            )
        tlo, thi = self.temperature_range_c
        if not tlo <= temperature <= thi:
            raise DispersionError(
                f"{self.name}: temperature {temperature:g} degC outside validity window "
                f"[{tlo:g}, {thi:g}] degC"
            )

    def _n(self, axis: str, lam, temperature: float):
        coeffs = self.ordinary if axis == "o" else self.extraordinary
        if self.form == "constant":
            return np.full_like(lam, coeffs[0])
        l2 = lam * lam
        if self.form == "sellmeier":
            n2 = 1.0
            for b, cc in zip(coeffs[::2], coeffs[1::2]):
                n2 = n2 + b * l2 / (l2 - cc)
            return np.sqrt(n2)
        a1, a2, a3, a4, a5, a6 = coeffs
        b1, b2, b3, b4 = self.thermal_ordinary if axis == "o" else self.thermal_extraordinary
        f = (temperature - 24.5) * (temperature + 570.82)
        n2 = (a1 + b1 * f + (a2 + b2 * f) / (l2 - (a3 + b3 * f) ** 2)
              + (a4 + b4 * f) / (l2 - a5**2) - a6 * l2)
        return np.sqrt(n2)


def load_material(source: str | Path) -> SellmeierSet:
    """Load a material file, or a built-in material by name.

    Built-in names are the stems of the files shipped in
    ``spdcsim/materials`` (see :func:`builtin_materials`).
    """
    path = Path(source)
    if not path.suffix:
        ref = resources.files("spdcsim.materials").joinpath(f"{source}.yaml")
        if not ref.is_file():
            raise FileNotFoundError(
                f"no built-in material {source!r}; available: {builtin_materials()}"
            )
        text = ref.read_text(encoding="utf-8")
    else:
        text = path.read_text(encoding="utf-8")
    data = yaml.safe_load(text)
    if not isinstance(data, dict):
        raise ValueError(f"material file {source} must hold a mapping")
    return SellmeierSet.from_dict(data)


def builtin_materials() -> list[str]:
    root = resources.files("spdcsim.materials")
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".yaml"))


def refractive_index(s: SellmeierSet, axis: str, wavelength_um, temperature: float = 25.0):
    """Refractive index on ``axis`` ('o' or 'e') at the given wavelength(s).

    Raises:
        DispersionError: if any wavelength or the temperature lies outside the
            material's validity window.
    """
    axis = _axis(axis)
    s.check(wavelength_um, temperature)
    lam = np.asarray(wavelength_um, dtype=float)
    n = s._n(axis, lam, temperature)
    return float(n) if n.ndim == 0 else n


def wavenumber(n, wavelength_um):
    """Wavenumber ``2*pi*n/lam`` in rad/m."""
    lam = np.asarray(wavelength_um, dtype=float)
    if np.any(lam <= 0):
        raise DispersionError("wavelength must be positive")
    k = 2 * np.pi * np.asarray(n, dtype=float) / (lam * 1e-6)
    return float(k) if k.ndim == 0 else k


def _k_of_omega(s: SellmeierSet, axis: str, omega, temperature: float):
    lam = wavelength_from_omega(omega)
    return refractive_index(s, axis, lam, temperature) * np.asarray(omega) / c


def group_slope(
    s: SellmeierSet,
    axis: str,
    wavelength_um,
    temperature: float = 25.0,
    rel_step: float = DEFAULT_REL_STEP,
    rtol: float = DEFAULT_SLOPE_RTOL,
):
    """Group slope ``dk/domega`` in s/m by central difference in frequency.

    The derivative is taken with steps ``rel_step*omega`` and half that; the
    half-step value is returned once the two agree to ``rtol``.

    Raises:
        DispersionError: if the difference stencil leaves the validity window
            or the step-halving check fails.
    """
    omega = omega_from_wavelength(wavelength_um)

    def diff(h):
        d = h * omega
        return (_k_of_omega(s, axis, omega + d, temperature)
                - _k_of_omega(s, axis, omega - d, temperature)) / (2 * d)

    coarse = diff(rel_step)
    fine = diff(rel_step / 2)
    if np.any(np.abs(fine - coarse) > rtol * np.abs(fine)):
        raise DispersionError(
            f"group slope not converged at rel_step={rel_step:g} (rtol={rtol:g})"
        )
    return float(fine) if np.ndim(fine) == 0 else fine


@dataclass(frozen=True)
class CrystalSpec:
    """A periodically poled crystal in a collinear type-II configuration.

    ``signal_axis`` carries the H photon and ``idler_axis`` the V photon.
    Setting ``poling_period`` to ``math.inf`` describes an unpoled crystal.
    """

    material: SellmeierSet
    length: float
    poling_period: float
    temperature: float = 25.0
    pump_axis: str = "o"
    signal_axis: str = "e"
    idler_axis: str = "o"

    def __post_init__(self):
        if not self.length > 0:
            raise ValueError(f"crystal length must be positive, got {self.length}")
        if not self.poling_period > 0:
            raise ValueError(f"poling period must be positive, got {self.poling_period}")
        for attr in ("pump_axis", "signal_axis", "idler_axis"):
            object.__setattr__(self, attr, _axis(getattr(self, attr)))
        if self.signal_axis == self.idler_axis:
            raise ValueError("type-II crystal needs signal and idler on different axes")
        lo, hi = self.material.temperature_range_c
        if not lo <= self.temperature <= hi:
            raise DispersionError(
                f"{self.material.name}: temperature {self.temperature:g} degC outside "
                f"validity window [{lo:g}, {hi:g}] degC"
            )

    @property
    def qpm_wavenumber(self) -> float:
        return 2 * np.pi / self.poling_period


@dataclass(frozen=True)
class PhaseMismatch:
    k_pump: np.ndarray | float
    k_signal: np.ndarray | float
    k_idler: np.ndarray | float
    qpm: float

    @property
    def delta_k(self):
        return self.k_pump - self.k_signal - self.k_idler - self.qpm


def phase_mismatch(crystal: CrystalSpec, omega_s, omega_i) -> PhaseMismatch:
    """Collinear mismatch with the pump at ``omega_s + omega_i``."""
    omega_s = np.asarray(omega_s, dtype=float)
    omega_i = np.asarray(omega_i, dtype=float)
    m, t = crystal.material, crystal.temperature
    kp = _k_of_omega(m, crystal.pump_axis, omega_s + omega_i, t)
    ks = _k_of_omega(m, crystal.signal_axis, omega_s, t)
    ki = _k_of_omega(m, crystal.idler_axis, omega_i, t)
    qpm = 0.0 if math.isinf(crystal.poling_period) else crystal.qpm_wavenumber
    return PhaseMismatch(kp, ks, ki, qpm)


def poling_period_for_degeneracy(
    material: SellmeierSet,
    temperature: float,
    pump_wavelength_um: float,
    signal_wavelength_um: float,
    *,
    axes: tuple[str, str, str] = ("o", "e", "o"),
    length: float = 0.02,
    bracket: tuple[float, float] = (1e-7, 1e-2),
) -> float:
    """Poling period in metres that phase-matches the given signal wavelength.

    The idler follows from energy conservation, so passing twice the pump
    wavelength selects the degenerate point. The period is bracketed by
    ``bracket`` (metres) and refined with Brent's method until
    ``|dk * length| < 1e-9``.
    """
    pump_axis, sig_axis, idl_axis = axes
    omega_s = float(omega_from_wavelength(signal_wavelength_um))
    omega_i = float(omega_from_wavelength(pump_wavelength_um)) - omega_s
    if omega_i <= 0:
        raise DispersionError("signal wavelength must be longer than the pump wavelength")
    probe = CrystalSpec(material, length, math.inf, temperature, pump_axis, sig_axis, idl_axis)
    dk0 = float(phase_mismatch(probe, omega_s, omega_i).delta_k)

    def residual(period):
        return dk0 - 2 * np.pi / period

    lo, hi = bracket
    if np.sign(residual(lo)) == np.sign(residual(hi)):
        raise DispersionError(
            f"no QPM solution in range [{lo:g}, {hi:g}] m (unpoled mismatch {dk0:.6g} rad/m)"
        )
    period = brentq(residual, lo, hi, xtol=1e-24, rtol=4 * np.finfo(float).eps, maxiter=500)
    if abs(residual(period) * length) >= 1e-9:
        raise DispersionError("poling-period solve did not reach |dk*L| < 1e-9")
    return float(period)


def tilt_angle(crystal: CrystalSpec, pump_wavelength_um: float, degenerate_wavelength_um: float) -> float:
    """Orientation of the phase-matching ridge in the (omega_s, omega_i) plane.

    Returned in degrees in (-90, 90], measured from the signal-frequency axis
    with positive angles for an anticorrelated ridge (the idler frequency
    falls as the signal frequency rises). Equal photon group slopes give 45;
    ``k'_p == k'_i`` gives exactly 90.
    """
    m, t = crystal.material, crystal.temperature
    kp = group_slope(m, crystal.pump_axis, pump_wavelength_um, t)
    ks = group_slope(m, crystal.signal_axis, degenerate_wavelength_um, t)
    ki = group_slope(m, crystal.idler_axis, degenerate_wavelength_um, t)
    num, den = kp - ks, kp - ki
    if den == 0:
        return 90.0
    theta = math.degrees(math.atan(num / den))
    return 90.0 if theta == -90.0 else theta


def temperature_for_tilt(
    material: SellmeierSet,
    target_deg: float,
    pump_wavelength_um: float = 0.78,
    degenerate_wavelength_um: float = 1.56,
    *,
    axes: tuple[str, str, str] = ("o", "e", "o"),
    bracket: tuple[float, float] | None = None,
) -> float:
    """Crystal temperature at which :func:`tilt_angle` equals ``target_deg``."""
    lo, hi = bracket or material.temperature_range_c

    def residual(temp):
        crystal = CrystalSpec(material, 0.01, math.inf, temp, *axes)
        return tilt_angle(crystal, pump_wavelength_um, degenerate_wavelength_um) - target_deg

    rlo, rhi = residual(lo), residual(hi)
    if np.sign(rlo) == np.sign(rhi):
        raise DispersionError(
            f"tilt angle {target_deg:g} deg not reachable in [{lo:g}, {hi:g}] degC"
        )
    return float(brentq(residual, lo, hi, xtol=1e-6))

