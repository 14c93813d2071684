"""Source design helpers: walk-off compensation and filter selection."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

from scipy.constants import c

from .analysis import term_overlap
from .dispersion import CrystalSpec, group_slope
from .filters import FilterError, FilterSpec, conjugate_wavelength_nm, eq1_terms, transmission
from .jsa import JointAmplitude, jsi

__all__ = [
    "DEFAULT_GROUP_BIREFRINGENCE",
    "WalkoffReport",
    "Candidate",
    "OptimizationResult",
    "temporal_walkoff",
    "pmf_length",
    "walkoff_report",
    "optimize_filters",
]

# Typical PANDA fibre at 1550 nm: beat length ~3.1 mm, group and phase
# birefringence taken as equal for stress-induced birefringence.
DEFAULT_GROUP_BIREFRINGENCE = 5.0e-4


def temporal_walkoff(crystal: CrystalSpec, degenerate_wavelength_um: float) -> float:
    """Group-delay difference (s) between the H and V photons over the crystal."""
    m, t = crystal.material, crystal.temperature
    kh = group_slope(m, crystal.signal_axis, degenerate_wavelength_um, t)
    kv = group_slope(m, crystal.idler_axis, degenerate_wavelength_um, t)
    return crystal.length * abs(kh - kv)


def pmf_length(walkoff: float, group_birefringence: float, fraction: float = 1.0) -> float:
    """PM-fibre length (m) that cancels ``fraction`` of the walk-off."""
    if not group_birefringence > 0:
        raise ValueError("group birefringence must be positive")
    if not 0 <= fraction <= 1:
        raise ValueError("fraction must lie in [0, 1]")
    return fraction * walkoff * c / group_birefringence


@dataclass(frozen=True)
class WalkoffReport:
    crystal_walkoff: float
    group_birefringence: float
    fraction: float
    required_length: float
    configured_length: float | None = None

    def __post_init__(self):
        expected = self.fraction * self.crystal_walkoff * c / self.group_birefringence
        if not math.isclose(self.required_length, expected, rel_tol=1e-12, abs_tol=1e-15):
            raise ValueError("required length inconsistent with walk-off and birefringence")

    def as_dict(self) -> dict:
        return {
            "crystal_walkoff_s": self.crystal_walkoff,
            "group_birefringence": self.group_birefringence,
            "compensation_fraction": self.fraction,
            "required_length_m": self.required_length,
            "configured_length_m": self.configured_length,
            "ratio_to_configured": (self.required_length / self.configured_length
                                    if self.configured_length else None),
        }


def walkoff_report(crystal: CrystalSpec, degenerate_wavelength_um: float,
                   group_birefringence: float = DEFAULT_GROUP_BIREFRINGENCE,
                   fraction: float = 0.5, configured_length: float | None = None) -> WalkoffReport:
    """Walk-off of ``crystal`` and the fibre length that compensates it.

    The default ``fraction=0.5`` matches the delay that makes the two
    role-swapped amplitudes equal in phase: their relative spectral phase
    is set by half the crystal walk-off.
    """
    walkoff = temporal_walkoff(crystal, degenerate_wavelength_um)
    return WalkoffReport(walkoff, group_birefringence, fraction,
                         pmf_length(walkoff, group_birefringence, fraction), configured_length)


@dataclass(frozen=True)
class Candidate:
    detuning_nm: float
    alice_fwhm_nm: float
    bob_fwhm_nm: float | None
    overlap: float
    pass_probability: float
    exclusivity: float
    feasible: bool
    score: float

    def as_row(self) -> dict:
        return {
            "delta_nm": self.detuning_nm,
            "alice_fwhm_nm": self.alice_fwhm_nm,
            "bob_fwhm_nm": "" if self.bob_fwhm_nm is None else self.bob_fwhm_nm,
            "overlap": self.overlap,
            "pass_prob": self.pass_probability,
            "exclusivity": self.exclusivity,
            "feasible": self.feasible,
            "score": self.score,
        }


@dataclass(frozen=True)
class OptimizationResult:
    best: Candidate
    alice_filter: FilterSpec
    bob_filter: FilterSpec | None
    table: list[Candidate]


def _exclusivity(amplitude: JointAmplitude, alice: FilterSpec) -> float:
    """Worst-case probability that only Alice's photon is reflected.

    For each term, the probability that Bob's photon misses the separating
    filter given that Alice's photon hits it.
    """
    grid = amplitude.grid
    t2 = transmission(alice, grid.signal_nm) ** 2
    intensity = jsi(amplitude)
    worst = 1.0
    for weights in (intensity, intensity.T):
        reflected = t2[:, None] * weights
        total = reflected.sum()
        if total == 0:
            return 0.0
        worst = min(worst, float((reflected * (1 - t2[None, :])).sum() / total))
    return worst


def _sort_key(cand: Candidate):
    bob = math.inf if cand.bob_fwhm_nm is None else cand.bob_fwhm_nm
    return (abs(cand.detuning_nm), cand.detuning_nm, -bob, -cand.alice_fwhm_nm)


def optimize_filters(
    amplitude: JointAmplitude,
    w_visibility: float = 1.0,
    w_rate: float = 0.1,
    detunings_nm=(0.0, 0.25, 0.5, 0.75, 1.0),
    alice_fwhms_nm=(0.1, 0.2, 0.4),
    bob_fwhms_nm=(None, 0.4, 0.2, 0.1),
    *,
    shape: str = "gaussian",
    min_exclusivity: float = 0.9,
    method: str = "spectral",
) -> OptimizationResult:
    """Exhaustive search over separating and Bob filter parameters.

    Each candidate scores ``w_visibility * overlap + w_rate * log(p)`` with
    ``p`` the mean pass probability of the two terms. Candidates whose
    separating filter reflects Bob's photon too (exclusivity below
    ``min_exclusivity`` for either term) are infeasible. Ties go to the
    smaller detuning, then the wider Bob filter (``None`` is widest), then
    the wider Alice filter.

    Raises:
        FilterError: if no candidate is feasible.
    """
    degenerate = amplitude.grid.center_wavelength_nm
    table: list[Candidate] = []
    keys = sorted({(float(d), float(a), None if b is None else float(b))
                   for d in detunings_nm for a in alice_fwhms_nm for b in bob_fwhms_nm},
                  key=lambda k: (k[0], k[1], math.inf if k[2] is None else k[2]))
    for delta, fa, fb in keys:
        alice = FilterSpec(degenerate + delta, fa, shape)
        bob = None if fb is None else FilterSpec(conjugate_wavelength_nm(alice.center_nm, degenerate), fb, shape)
        try:
            with warnings.catch_warnings():
                # degenerate candidates are judged by the exclusivity constraint
                warnings.filterwarnings("ignore", message="separating filter sits on")
                t1, t2 = eq1_terms(amplitude, alice, bob)
        except FilterError:
            table.append(Candidate(delta, fa, fb, 0.0, 0.0, 0.0, False, -math.inf))
            continue
        overlap = term_overlap(t1, t2, method).magnitude
        prob = 0.5 * (t1.pass_probability + t2.pass_probability)
        excl = _exclusivity(amplitude, alice)
        feasible = excl >= min_exclusivity and prob > 0
        if prob > 0:
            score = w_visibility * overlap + (w_rate * math.log(prob) if w_rate else 0.0)
        else:
            score = -math.inf
        table.append(Candidate(delta, fa, fb, overlap, prob, excl, feasible, score))
    feasible = [cand for cand in table if cand.feasible]
    if not feasible:
        raise FilterError("every filter candidate is infeasible or extinguished")
    top = max(cand.score for cand in feasible)
    best = min((cand for cand in feasible if cand.score == top), key=_sort_key)
    alice = FilterSpec(degenerate + best.detuning_nm, best.alice_fwhm_nm, shape)
    bob = None
    if best.bob_fwhm_nm is not None:
        bob = FilterSpec(conjugate_wavelength_nm(alice.center_nm, degenerate), best.bob_fwhm_nm, shape)
    return OptimizationResult(best, alice, bob, table)

