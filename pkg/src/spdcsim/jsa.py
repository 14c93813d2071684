"""Joint spectral amplitude of the first-order (single-pair) SPDC state.

The amplitude is ``F(ws, wi) = pump(ws + wi) * sinc(dk(ws, wi) L / 2)`` on a
uniform angular-frequency grid, signal along axis 0 and idler along axis 1.
The sinc is real: the crystal's exchange phase is assumed to be removed by
walk-off compensation downstream of the crystal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.constants import c

from .dispersion import (
    CrystalSpec,
    group_slope,
    omega_from_wavelength,
    phase_mismatch,
    wavelength_from_omega,
)

__all__ = [
    "GridError",
    "PumpSpec",
    "FrequencyGrid",
    "JointAmplitude",
    "pump_envelope",
    "phase_matching_amplitude",
    "build_jsa",
    "jsi",
    "marginal_spectrum",
    "principal_axis_angle",
    "phase_matching_ridge_angle",
    "fwhm",
    "MIN_POINTS",
]

MIN_POINTS = 16
# time-bandwidth product of a transform-limited Gaussian (intensity FWHMs)
GAUSSIAN_TBP = 2 * math.log(2) / math.pi


class GridError(ValueError):
    """Raised when a frequency grid cannot resolve the requested state."""


@dataclass(frozen=True)
class PumpSpec:
    """Transform-limited Gaussian pump pulse.

    ``duration`` is the intensity FWHM in seconds. ``bandwidth`` is the rms
    width (rad/s) of the pump intensity spectrum, i.e. the parameter in
    ``exp(-(ws + wi - wp)^2 / (4 bandwidth^2))``, and equals
    ``sqrt(2 ln 2) / duration``. With ``cw=True`` the duration is ignored and
    the pump becomes a discrete delta on the energy-conservation line.
    """

    wavelength_um: float = 0.78
    duration: float = 2e-12
    repetition_rate: float = 76e6
    cw: bool = False

    def __post_init__(self):
        if not self.wavelength_um > 0:
            raise ValueError("pump wavelength must be positive")
        if not self.cw and not self.duration > 0:
            raise ValueError("pulse duration must be positive")

    @property
    def omega(self) -> float:
        return float(omega_from_wavelength(self.wavelength_um))

    @property
    def bandwidth(self) -> float:
        if self.cw:
            return 0.0
        return math.sqrt(2 * math.log(2)) / self.duration

    @property
    def fwhm_hz(self) -> float:
        """Intensity-spectrum FWHM in Hz."""
        if self.cw:
            return 0.0
        return GAUSSIAN_TBP / self.duration


@dataclass(frozen=True, eq=False)
class FrequencyGrid:
    """Uniform signal and idler angular-frequency axes (rad/s)."""

    signal: np.ndarray
    idler: np.ndarray
    center: float = field(default=0.0)

    def __post_init__(self):
        for name in ("signal", "idler"):
            axis = np.asarray(getattr(self, name), dtype=float)
            axis.setflags(write=False)
            object.__setattr__(self, name, axis)
            if axis.ndim != 1 or axis.size < MIN_POINTS:
                raise GridError(f"{name} axis needs at least {MIN_POINTS} points")
            if not np.all(np.diff(axis) > 0):
                raise GridError(f"{name} axis must be strictly increasing")
        if not self.center:
            object.__setattr__(self, "center", 0.5 * (self.signal.mean() + self.idler.mean()))

    @classmethod
    def centered(
        cls,
        center_wavelength_nm: float = 1560.0,
        span_nm: float = 4.0,
        n_signal: int = 512,
        n_idler: int | None = None,
    ) -> "FrequencyGrid":
        """Grid symmetric in frequency about ``center_wavelength_nm``.

        The frequency half-span equals half the distance between the
        frequencies of ``center -/+ span_nm``, so both axes reach roughly
        ``span_nm`` either side of the centre in wavelength.
        """
        n_idler = n_signal if n_idler is None else n_idler
        if span_nm <= 0 or span_nm >= center_wavelength_nm:
            raise GridError("span must be positive and below the centre wavelength")
        w0 = float(omega_from_wavelength(center_wavelength_nm * 1e-3))
        w_lo = omega_from_wavelength((center_wavelength_nm + span_nm) * 1e-3)
        w_hi = omega_from_wavelength((center_wavelength_nm - span_nm) * 1e-3)
        half = 0.5 * float(w_hi - w_lo)
        return cls(
            signal=w0 + np.linspace(-half, half, n_signal),
            idler=w0 + np.linspace(-half, half, n_idler),
            center=w0,
        )

    @property
    def shape(self) -> tuple[int, int]:
        return (self.signal.size, self.idler.size)

    @property
    def d_signal(self) -> float:
        return float(self.signal[1] - self.signal[0])

    @property
    def d_idler(self) -> float:
        return float(self.idler[1] - self.idler[0])

    @property
    def cell_area(self) -> float:
        return self.d_signal * self.d_idler

    @property
    def half_spans(self) -> tuple[float, float]:
        """Smallest distance from the centre to either end of each axis."""
        return (
            float(min(self.center - self.signal[0], self.signal[-1] - self.center)),
            float(min(self.center - self.idler[0], self.idler[-1] - self.center)),
        )

    @property
    def signal_nm(self) -> np.ndarray:
        return wavelength_from_omega(self.signal) * 1e3

    @property
    def idler_nm(self) -> np.ndarray:
        return wavelength_from_omega(self.idler) * 1e3

    @property
    def center_wavelength_nm(self) -> float:
        return float(wavelength_from_omega(self.center)) * 1e3

    @property
    def symmetric(self) -> bool:
        """True when the signal and idler axes are identical."""
        return self.signal.shape == self.idler.shape and bool(np.array_equal(self.signal, self.idler))

    def transposed(self) -> "FrequencyGrid":
        return FrequencyGrid(self.idler, self.signal, self.center)

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.signal, self.idler, indexing="ij")

    def metadata(self) -> dict:
        return {
            "n_signal": int(self.signal.size),
            "n_idler": int(self.idler.size),
            "center_nm": self.center_wavelength_nm,
            "signal_nm_range": [float(self.signal_nm.min()), float(self.signal_nm.max())],
            "idler_nm_range": [float(self.idler_nm.min()), float(self.idler_nm.max())],
            "d_omega_signal": self.d_signal,
            "d_omega_idler": self.d_idler,
        }


@dataclass(frozen=True, eq=False)
class JointAmplitude:
    """Complex two-photon amplitude on a :class:`FrequencyGrid`.

    ``values[j, k]`` belongs to ``(grid.signal[j], grid.idler[k])``.
    ``normalized`` records whether ``sum |F|^2 dws dwi`` has been set to 1.
    """

    grid: FrequencyGrid
    values: np.ndarray
    normalized: bool = False

    def __post_init__(self):
        values = np.asarray(self.values, dtype=complex)
        if values.shape != self.grid.shape:
            raise GridError(f"amplitude shape {values.shape} does not match grid {self.grid.shape}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def norm2(self) -> float:
        """``sum |F|^2`` times the cell area."""
        return float(np.sum(np.abs(self.values) ** 2) * self.grid.cell_area)

    def normalize(self) -> "JointAmplitude":
        n2 = self.norm2()
        if n2 == 0:
            raise GridError("cannot normalize an all-zero amplitude")
        return JointAmplitude(self.grid, self.values / math.sqrt(n2), normalized=True)

    def transposed(self) -> "JointAmplitude":
        """Swap the roles of the two photons, ``G(x, y) = F(y, x)``."""
        return JointAmplitude(self.grid.transposed(), np.ascontiguousarray(self.values.T), self.normalized)


def pump_envelope(pump: PumpSpec, omega_s, omega_i):
    """Gaussian pump factor; 1 on the energy-conservation line."""
    if pump.cw:
        raise ValueError("pump_envelope is undefined for a CW pump; build_jsa handles that limit")
    detuning = np.asarray(omega_s) + np.asarray(omega_i) - pump.omega
    return np.exp(-(detuning**2) / (4 * pump.bandwidth**2))


def _sinc(x):
    return np.sinc(np.asarray(x) / np.pi)


def phase_matching_amplitude(crystal: CrystalSpec, omega_s, omega_i):
    """``sinc(dk L / 2)`` with ``sinc(x) = sin(x)/x``."""
    dk = phase_mismatch(crystal, omega_s, omega_i).delta_k
    return _sinc(dk * crystal.length / 2)


def _check_coverage(pump: PumpSpec, crystal: CrystalSpec, grid: FrequencyGrid) -> None:
    half_s, half_i = grid.half_spans
    deg_um = float(wavelength_from_omega(grid.center))
    if not pump.cw:
        need = 3 * pump.bandwidth
        for name, half in (("signal", half_s), ("idler", half_i)):
            if half < need:
                raise GridError(
                    f"{name} half-span {half:.4g} rad/s below 3 pump bandwidths ({need:.4g} rad/s)"
                )
    m, t = crystal.material, crystal.temperature
    kp = group_slope(m, crystal.pump_axis, deg_um / 2, t)
    for name, axis, half in (("signal", crystal.signal_axis, half_s),
                             ("idler", crystal.idler_axis, half_i)):
        slope = abs(kp - group_slope(m, axis, deg_um, t))
        if slope == 0:
            continue
        lobe = 2 * np.pi / (crystal.length * slope)  # first zero of the sinc along this axis
        if half < 3 * lobe:
            raise GridError(
                f"{name} half-span {half:.4g} rad/s below 3 phase-matching lobe widths "
                f"({3 * lobe:.4g} rad/s)"
            )


def build_jsa(pump: PumpSpec, crystal: CrystalSpec, grid: FrequencyGrid, *, check: bool = True) -> JointAmplitude:
    """Unit-norm joint spectral amplitude of the pair.

    For a CW pump the envelope is a discrete delta: in each signal row only
    the idler cell closest to ``ws + wi = wp`` is kept.

    Raises:
        GridError: if ``check`` is set and the grid does not cover three pump
            bandwidths and three phase-matching lobe widths on each axis.
    """
    if check:
        _check_coverage(pump, crystal, grid)
    ws, wi = grid.mesh()
    phi = phase_matching_amplitude(crystal, ws, wi)
    if pump.cw:
        detuning = np.abs(ws + wi - pump.omega)
        nearest = np.argmin(detuning, axis=1)
        envelope = np.zeros(grid.shape)
        rows = np.arange(grid.shape[0])
        # rows whose best cell is still more than half a cell away have no partner
        ok = detuning[rows, nearest] <= 0.5 * grid.d_idler * (1 + 1e-9)
        envelope[rows[ok], nearest[ok]] = 1.0
    else:
        envelope = pump_envelope(pump, ws, wi)
    return JointAmplitude(grid, envelope * phi).normalize()


def jsi(amplitude: JointAmplitude) -> np.ndarray:
    return np.abs(amplitude.values) ** 2


def marginal_spectrum(amplitude: JointAmplitude, axis: str = "signal") -> np.ndarray:
    """Spectral density on one axis, integrating the JSI over the other.

    The result integrates (sum times spacing) to ``amplitude.norm2()``.
    """
    intensity = jsi(amplitude)
    if axis in ("signal", 0):
        return intensity.sum(axis=1) * amplitude.grid.d_idler
    if axis in ("idler", 1):
        return intensity.sum(axis=0) * amplitude.grid.d_signal
    raise ValueError(f"axis must be 'signal' or 'idler', got {axis!r}")


def principal_axis_angle(weights: np.ndarray, grid: FrequencyGrid, *, aperture: bool = True) -> float:
    """Orientation of the weighted second moment of ``weights`` on ``grid``.

    Uses the same convention as :func:`spdcsim.dispersion.tilt_angle`:
    degrees in (-90, 90] from the signal axis, positive when anticorrelated.
    With ``aperture`` only cells inside the largest centred disc are used,
    which removes the bias a square window puts on a tilted ridge.
    """
    ws, wi = grid.mesh()
    x = ws - grid.center
    y = wi - grid.center
    w = np.asarray(weights, dtype=float)
    if aperture:
        radius = min(grid.half_spans)
        w = np.where(x**2 + y**2 <= radius**2, w, 0.0)
    total = w.sum()
    if total <= 0:
        raise ValueError("weights vanish inside the aperture")
    mx, my = (w * x).sum() / total, (w * y).sum() / total
    sxx = (w * (x - mx) ** 2).sum() / total
    syy = (w * (y - my) ** 2).sum() / total
    sxy = (w * (x - mx) * (y - my)).sum() / total
    # major axis direction (cos a, sin a) with a measured counterclockwise
    a = 0.5 * math.degrees(math.atan2(2 * sxy, sxx - syy))
    theta = -a
    if theta <= -90:
        theta += 180
    elif theta > 90:
        theta -= 180
    return theta


def phase_matching_ridge_angle(crystal: CrystalSpec, grid: FrequencyGrid) -> float:
    """Principal-axis angle of the main lobe of ``|sinc(dk L/2)|^2``."""
    ws, wi = grid.mesh()
    x = phase_mismatch(crystal, ws, wi).delta_k * crystal.length / 2
    weights = np.where(np.abs(x) < np.pi, _sinc(x) ** 2, 0.0)
    return principal_axis_angle(weights, grid)


def fwhm(x: np.ndarray, y: np.ndarray) -> float:
    """Full width at half maximum of a single-peaked sampled curve.

    Crossings are located by linear interpolation; ``x`` may be descending.
    Returns ``inf`` when the curve does not fall below half maximum on both
    sides of its peak.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x[0] > x[-1]:
        x, y = x[::-1], y[::-1]
    peak = int(np.argmax(y))
    half = 0.5 * y[peak]
    if half <= 0:
        return math.inf
    left = np.nonzero(y[:peak] < half)[0]
    right = np.nonzero(y[peak:] < half)[0]
    if left.size == 0 or right.size == 0:
        return math.inf
    i = left[-1]
    j = peak + right[0]
    xl = x[i] + (half - y[i]) * (x[i + 1] - x[i]) / (y[i + 1] - y[i])
    xr = x[j - 1] + (half - y[j - 1]) * (x[j] - x[j - 1]) / (y[j] - y[j - 1])
    return float(xr - xl)


def omega_to_nm_width(d_omega: float, center_omega: float) -> float:
    """Convert a small frequency width to a wavelength width in nm."""
    return float(2 * np.pi * c * d_omega / center_omega**2 * 1e9)
