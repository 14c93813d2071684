"""Spectral filters and the two polarisation terms of the entangled state.

A separating filter (an FBG on a circulator) reflects one photon of each pair
to Alice; the other photon continues to Bob. Depending on which photon is
reflected, Alice holds the H (signal) or the V (idler) photon, so the state
is a superposition of two spectral amplitudes. Each is represented as a
:class:`FilteredPair` whose axis 0 is Alice's photon and axis 1 Bob's.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.constants import c

from .jsa import JointAmplitude, fwhm, marginal_spectrum

__all__ = [
    "FilterError",
    "FilterSpec",
    "FilteredPair",
    "HeraldedSpectrum",
    "transmission",
    "apply_filter",
    "eq1_terms",
    "heralded_bob_spectrum",
    "conjugate_wavelength_nm",
]

SHAPES = ("gaussian", "rectangular", "super-gaussian")


class FilterError(ValueError):
    """Raised when a filter removes everything or misses the grid."""


@dataclass(frozen=True)
class FilterSpec:
    """Bandpass filter with an intensity FWHM.

    ``fwhm`` is expressed in ``unit`` ('nm' or 'GHz'); GHz widths are
    converted at the centre wavelength with ``dlam = lam^2 dnu / c``.
    ``order`` only applies to the super-gaussian shape, whose intensity is
    ``exp(-ln2 (2|dlam|/fwhm)^(2 order))``.
    """

    center_nm: float
    fwhm: float = 0.2
    shape: str = "gaussian"
    unit: str = "nm"
    peak_transmission: float = 1.0
    order: int = 2

    def __post_init__(self):
        if self.shape not in SHAPES:
            raise ValueError(f"filter shape must be one of {SHAPES}, got {self.shape!r}")
        if self.unit not in ("nm", "GHz"):
            raise ValueError(f"filter unit must be 'nm' or 'GHz', got {self.unit!r}")
        if not self.fwhm > 0:
            raise ValueError("filter bandwidth must be positive")
        if not 0 < self.peak_transmission <= 1:
            raise ValueError("peak transmission must lie in (0, 1]")
        if not self.center_nm > 0:
            raise ValueError("filter centre must be positive")
        if self.shape == "super-gaussian" and self.order < 2:
            raise ValueError("super-gaussian order must be at least 2")

    @property
    def fwhm_nm(self) -> float:
        if self.unit == "nm":
            return self.fwhm
        return self.center_nm**2 * self.fwhm * 1e9 / c * 1e-9

    def moved(self, center_nm: float) -> "FilterSpec":
        return replace(self, center_nm=center_nm)

    def describe(self) -> dict:
        return {
            "shape": self.shape,
            "center_nm": self.center_nm,
            "fwhm_nm": self.fwhm_nm,
            "peak_transmission": self.peak_transmission,
            **({"order": self.order} if self.shape == "super-gaussian" else {}),
        }


def transmission(f: FilterSpec, wavelength_nm):
    """Amplitude transmission; its square is the intensity profile."""
    lam = np.asarray(wavelength_nm, dtype=float)
    if np.any(lam <= 0):
        raise ValueError("wavelength must be positive")
    x = 2 * (lam - f.center_nm) / f.fwhm_nm
    if f.shape == "gaussian":
        intensity = np.exp(-math.log(2) * x**2)
    elif f.shape == "super-gaussian":
        intensity = np.exp(-math.log(2) * np.abs(x) ** (2 * f.order))
    else:
        intensity = (np.abs(x) <= 1).astype(float)
    return np.sqrt(f.peak_transmission * intensity)


def _axis_index(axis) -> int:
    if axis in ("signal", "alice", 0):
        return 0
    if axis in ("idler", "bob", 1):
        return 1
    raise ValueError(f"axis must be signal/alice or idler/bob, got {axis!r}")


def apply_filter(amplitude: JointAmplitude, f: FilterSpec, axis="signal") -> JointAmplitude:
    """Multiply one axis of ``amplitude`` by the filter's transmission.

    The result is left unnormalised; its ``norm2()`` divided by the input's
    is the pass probability.

    Raises:
        FilterError: if the filter transmits nothing on the grid.
    """
    index = _axis_index(axis)
    omega = amplitude.grid.signal if index == 0 else amplitude.grid.idler
    lam = 2 * np.pi * c / omega * 1e9
    t = transmission(f, lam)
    if not np.any(t > 0):
        raise FilterError(f"filter outside simulated window ({f.center_nm:g} nm)")
    lo, hi = f.center_nm - f.fwhm_nm / 2, f.center_nm + f.fwhm_nm / 2
    if lo < lam.min() or hi > lam.max():
        warnings.warn(
            f"filter passband [{lo:.4f}, {hi:.4f}] nm extends past the grid "
            f"[{lam.min():.4f}, {lam.max():.4f}] nm",
            stacklevel=2,
        )
    values = amplitude.values * (t[:, None] if index == 0 else t[None, :])
    return JointAmplitude(amplitude.grid, values)


@dataclass(frozen=True, eq=False)
class FilteredPair:
    """One term of the state: Alice's photon on axis 0, Bob's on axis 1.

    ``label`` names the polarisation Alice holds ('H' or 'V').
    ``pass_probability`` is the squared norm relative to the unfiltered JSA.
    """

    amplitude: JointAmplitude
    label: str
    filters: tuple[tuple[FilterSpec, str], ...] = field(default_factory=tuple)
    pass_probability: float = 1.0

    @property
    def alice_filter(self) -> FilterSpec | None:
        for spec, side in self.filters:
            if side == "alice":
                return spec
        return None


def conjugate_wavelength_nm(wavelength_nm: float, degenerate_nm: float) -> float:
    """Energy-conserving partner of ``wavelength_nm`` about the degeneracy."""
    return 1.0 / (2.0 / degenerate_nm - 1.0 / wavelength_nm)


def _filter_pair(source: JointAmplitude, label: str, alice: FilterSpec,
                 bob: FilterSpec | None, transmitted_port: bool) -> FilteredPair:
    reference = source.norm2()
    amp = apply_filter(source, alice, "alice")
    applied = [(alice, "alice")]
    if transmitted_port:
        lam = source.grid.idler_nm
        t = transmission(alice, lam)
        complement = np.sqrt(np.clip(1 - t**2, 0, None))
        amp = JointAmplitude(amp.grid, amp.values * complement[None, :])
        applied.append((alice, "bob-complement"))
    if bob is not None:
        amp = apply_filter(amp, bob, "bob")
        applied.append((bob, "bob"))
    return FilteredPair(amp, label, tuple(applied), amp.norm2() / reference)


def eq1_terms(
    amplitude: JointAmplitude,
    alice_filter: FilterSpec,
    bob_filter: FilterSpec | None = None,
    *,
    transmitted_port: bool = False,
) -> tuple[FilteredPair, FilteredPair]:
    """Split the JSA into the H-at-Alice and V-at-Alice terms.

    The H term filters the signal axis of ``F(wH, wV)``; the V term filters
    the same axis of the role-swapped ``F(wV, wH)``. An optional Bob filter
    acts on axis 1 of both. With ``transmitted_port`` Bob's photon also
    passes the separating filter's through-port, ``sqrt(1 - |t|^2)``.

    Raises:
        FilterError: if the grid axes differ (the role swap needs identical
            axes) or a filter extinguishes a term.
    """
    if not amplitude.grid.symmetric:
        raise FilterError("role swap needs identical signal and idler axes")
    if abs(alice_filter.center_nm - amplitude.grid.center_wavelength_nm) < 1e-9:
        warnings.warn("separating filter sits on the degeneracy wavelength", stacklevel=2)
    h_term = _filter_pair(amplitude, "H", alice_filter, bob_filter, transmitted_port)
    v_term = _filter_pair(amplitude.transposed(), "V", alice_filter, bob_filter, transmitted_port)
    for term in (h_term, v_term):
        if term.pass_probability == 0:
            raise FilterError(f"term {term.label} fully extinguished by the filters")
    return h_term, v_term


@dataclass(frozen=True, eq=False)
class HeraldedSpectrum:
    """Bob's spectrum conditioned on Alice's detection, unit area in omega."""

    omega: np.ndarray
    wavelength_nm: np.ndarray
    density: np.ndarray
    centroid_nm: float
    fwhm_nm: float
    label: str = ""


def heralded_bob_spectrum(term: FilteredPair) -> HeraldedSpectrum:
    grid = term.amplitude.grid
    density = marginal_spectrum(term.amplitude, "idler")
    area = density.sum() * grid.d_idler
    if area <= 0:
        raise FilterError(f"term {term.label} fully extinguished")
    density = density / area
    lam = grid.idler_nm
    centroid = float((density * lam).sum() * grid.d_idler)
    return HeraldedSpectrum(grid.idler, lam, density, centroid, fwhm(lam, density), term.label)
