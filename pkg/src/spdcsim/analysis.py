"""Spectral distinguishability of the two polarisation terms and JSA purity."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .filters import FilterSpec, FilteredPair, conjugate_wavelength_nm, eq1_terms
from .jsa import JointAmplitude, marginal_spectrum

__all__ = [
    "AnalysisError",
    "OverlapResult",
    "SchmidtDecomposition",
    "OVERLAP_METHODS",
    "term_overlap",
    "overlap_scan",
    "schmidt",
]

OVERLAP_METHODS = ("spectral", "joint")
CS_TOL = 1e-9


class AnalysisError(ValueError):
    pass


@dataclass(frozen=True)
class OverlapResult:
    """Normalised overlap of the H-at-Alice and V-at-Alice terms.

    ``term_probabilities`` are the pass probabilities of the two terms and
    ``detuning_nm`` the separating filter's offset from degeneracy.
    """

    overlap: complex
    magnitude: float
    term_probabilities: tuple[float, float]
    detuning_nm: float
    method: str


def _check_grids(t1: FilteredPair, t2: FilteredPair) -> None:
    g1, g2 = t1.amplitude.grid, t2.amplitude.grid
    same = (g1.shape == g2.shape and np.array_equal(g1.signal, g2.signal)
            and np.array_equal(g1.idler, g2.idler))
    if not same:
        raise AnalysisError("terms live on different grids")


def term_overlap(t1: FilteredPair, t2: FilteredPair, method: str = "spectral") -> OverlapResult:
    """Overlap of two terms, which sets the D/A-basis fringe visibility.

    ``spectral`` (default) compares the photons Bob receives: with ``S1``,
    ``S2`` the heralded Bob spectra of the two terms it returns
    ``int sqrt(S1 S2) / sqrt(int S1 int S2)``, treating each heralded photon
    as a pure state with a flat spectral phase.

    ``joint`` is the full two-photon inner product
    ``<A1|A2> / sqrt(<A1|A1><A2|A2>)`` over both axes. It keeps the
    frequency correlations inside Alice's passband and so lies below the
    spectral value unless Alice's filter is narrow compared with the JSA.

    Raises:
        AnalysisError: if a term has zero norm or the grids differ.
    """
    if method not in OVERLAP_METHODS:
        raise ValueError(f"method must be one of {OVERLAP_METHODS}, got {method!r}")
    _check_grids(t1, t2)
    grid = t1.amplitude.grid
    if method == "joint":
        a1, a2 = t1.amplitude.values, t2.amplitude.values
        n1 = float(np.sum(np.abs(a1) ** 2))
        n2 = float(np.sum(np.abs(a2) ** 2))
        if n1 == 0 or n2 == 0:
            raise AnalysisError("extinguished term")
        value = complex(np.vdot(a1, a2)) / math.sqrt(n1 * n2)
    else:
        s1 = marginal_spectrum(t1.amplitude, "idler")
        s2 = marginal_spectrum(t2.amplitude, "idler")
        n1, n2 = float(s1.sum()), float(s2.sum())
        if n1 == 0 or n2 == 0:
            raise AnalysisError("extinguished term")
        value = complex(np.sum(np.sqrt(s1 * s2)) / math.sqrt(n1 * n2))
    magnitude = abs(value)
    if magnitude > 1 + CS_TOL:
        raise AnalysisError(f"overlap magnitude {magnitude!r} violates Cauchy-Schwarz")
    alice = t1.alice_filter
    detuning = alice.center_nm - grid.center_wavelength_nm if alice else 0.0
    return OverlapResult(value, min(magnitude, 1.0),
                         (t1.pass_probability, t2.pass_probability), detuning, method)


def overlap_scan(
    amplitude: JointAmplitude,
    alice_template: FilterSpec,
    detunings_nm=None,
    bob_template: FilterSpec | None = None,
    method: str = "spectral",
) -> list[OverlapResult]:
    """Term overlap as the separating filter is tuned across degeneracy.

    ``detunings_nm`` defaults to 41 points over [-1, 1] nm. A Bob filter,
    when given, is re-centred on the energy-conjugate wavelength at each step.
    """
    if detunings_nm is None:
        detunings_nm = np.linspace(-1.0, 1.0, 41)
    degenerate = amplitude.grid.center_wavelength_nm
    results = []
    for delta in np.asarray(detunings_nm, dtype=float):
        alice = alice_template.moved(degenerate + delta)
        bob = None
        if bob_template is not None:
            bob = bob_template.moved(conjugate_wavelength_nm(alice.center_nm, degenerate))
        with warnings.catch_warnings():
            # the sweep crosses degeneracy on purpose
            warnings.filterwarnings("ignore", message="separating filter sits on")
            t1, t2 = eq1_terms(amplitude, alice, bob)
        res = term_overlap(t1, t2, method)
        results.append(OverlapResult(res.overlap, res.magnitude, res.term_probabilities,
                                     float(delta), method))
    return results


@dataclass(frozen=True)
class SchmidtDecomposition:
    """``coefficients`` are descending with unit sum of squares."""

    coefficients: np.ndarray
    schmidt_number: float
    purity: float


def schmidt(source: JointAmplitude | FilteredPair) -> SchmidtDecomposition:
    """Schmidt decomposition of a gridded two-photon amplitude.

    The matrix is weighted by the square root of the cell area so that the
    singular values approximate those of the continuous amplitude. The
    purity ``1/K`` is that of either photon once its partner is traced out.
    """
    amplitude = source.amplitude if isinstance(source, FilteredPair) else source
    matrix = amplitude.values * math.sqrt(amplitude.grid.cell_area)
    if not np.any(matrix):
        raise AnalysisError("cannot decompose an all-zero amplitude")
    try:
        sv = np.linalg.svd(matrix, compute_uv=False)
    except np.linalg.LinAlgError as exc:
        finite = bool(np.all(np.isfinite(matrix)))
        raise AnalysisError(f"SVD failed ({exc}); finite entries: {finite}, "
                            f"max |F| = {np.nanmax(np.abs(matrix)):.3g}") from exc
    coeffs = sv / math.sqrt(np.sum(sv**2))
    weights = coeffs**2
    k = 1.0 / float(np.sum(weights**2))
    return SchmidtDecomposition(coeffs, k, 1.0 / k)
