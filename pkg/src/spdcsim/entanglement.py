"""Two-qubit polarisation state, coincidence fringes and the CHSH parameter.

Basis order is (HH, HV, VH, VV) with Alice's qubit first. A linear analyser
at angle ``theta`` from H projects onto ``cos(theta)|H> + sin(theta)|V>``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from itertools import product

import numpy as np

from .analysis import OverlapResult

__all__ = [
    "StateError",
    "FitError",
    "PolarizationState",
    "FringeCurve",
    "VisibilityReport",
    "CHSHResult",
    "VisibilityFit",
    "ALICE_ANGLES",
    "build_state",
    "random_state",
    "coincidence_probability",
    "fringe",
    "analytic_visibility",
    "chsh",
    "chsh_from_visibilities",
    "visibility_report",
    "synthesize_counts",
    "fit_visibility",
]

ALICE_ANGLES = {"H": 0.0, "V": 90.0, "D": 45.0, "A": 135.0}
TSIRELSON = 2 * math.sqrt(2)

_I2 = np.eye(2, dtype=complex)
_PAULI = (
    np.array([[0, 1], [1, 0]], dtype=complex),      # x: D/A
    np.array([[0, -1j], [1j, 0]], dtype=complex),   # y: R/L
    np.array([[1, 0], [0, -1]], dtype=complex),     # z: H/V
)


class StateError(ValueError):
    pass


class FitError(RuntimeError):
    pass


def _check_density(rho: np.ndarray) -> None:
    if rho.shape != (4, 4):
        raise StateError(f"density matrix must be 4x4, got {rho.shape}")
    if not np.allclose(rho, rho.conj().T, atol=1e-12, rtol=0):
        raise StateError("density matrix is not Hermitian")
    tr = np.trace(rho).real
    if abs(tr - 1) > 1e-12:
        raise StateError(f"density matrix trace {tr!r} != 1")
    low = np.linalg.eigvalsh(rho).min()
    if low < -1e-9:
        raise StateError(f"density matrix has negative eigenvalue {low:.3g}")


@dataclass(frozen=True, eq=False)
class PolarizationState:
    rho: np.ndarray
    interference: complex = 1.0
    weights: tuple[float, float] = (0.5, 0.5)

    def __post_init__(self):
        rho = np.array(self.rho, dtype=complex)
        _check_density(rho)
        rho.setflags(write=False)
        object.__setattr__(self, "rho", rho)

    def eigenvalues(self) -> np.ndarray:
        return np.sort(np.linalg.eigvalsh(self.rho))[::-1]

    def fidelity(self, psi) -> float:
        psi = np.asarray(psi, dtype=complex)
        psi = psi / np.linalg.norm(psi)
        return float(np.real(psi.conj() @ self.rho @ psi))


def build_state(overlap: OverlapResult | complex, weights=(1.0, 1.0)) -> PolarizationState:
    """Mixed state of the ``|HV>`` and ``|VH>`` terms with partial coherence.

    ``overlap`` supplies the coherence between the two terms (an
    :class:`OverlapResult` or a bare complex number with ``|v| <= 1``); the
    weights are normalised to probabilities.
    """
    v = overlap.overlap if isinstance(overlap, OverlapResult) else complex(overlap)
    w1, w2 = (float(w) for w in weights)
    if w1 < 0 or w2 < 0 or w1 + w2 == 0:
        raise StateError("term weights must be non-negative and not both zero")
    if abs(v) > 1 + 1e-9:
        raise StateError(f"interference term {abs(v)!r} exceeds 1")
    p1, p2 = w1 / (w1 + w2), w2 / (w1 + w2)
    rho = np.zeros((4, 4), dtype=complex)
    rho[1, 1] = p1
    rho[2, 2] = p2
    rho[1, 2] = math.sqrt(p1 * p2) * v
    rho[2, 1] = np.conj(rho[1, 2])
    try:
        return PolarizationState(rho, v, (p1, p2))
    except StateError as exc:
        raise StateError(f"internal consistency: {exc}") from exc


def random_state(rng: np.random.Generator, rank: int | None = None) -> PolarizationState:
    """Random density matrix from a complex Ginibre draw."""
    rank = 4 if rank is None else rank
    g = rng.normal(size=(4, rank)) + 1j * rng.normal(size=(4, rank))
    rho = g @ g.conj().T
    rho = 0.5 * (rho + rho.conj().T)
    return PolarizationState(rho / np.trace(rho).real, interference=complex("nan"))


def _projector(theta_deg: float) -> np.ndarray:
    t = math.radians(theta_deg)
    v = np.array([math.cos(t), math.sin(t)], dtype=complex)
    return np.outer(v, v.conj())


def coincidence_probability(state: PolarizationState, theta_a: float, theta_b: float) -> float:
    op = np.kron(_projector(theta_a), _projector(theta_b))
    return float(np.real(np.trace(state.rho @ op)))


def analytic_visibility(state: PolarizationState, theta_a: float) -> float:
    """Exact fringe visibility as Bob's analyser turns a full cycle.

    The coincidence curve is ``a + b cos(2t) + s sin(2t)`` in Bob's angle,
    so three samples determine it.
    """
    p0 = coincidence_probability(state, theta_a, 0.0)
    p45 = coincidence_probability(state, theta_a, 45.0)
    p90 = coincidence_probability(state, theta_a, 90.0)
    p135 = coincidence_probability(state, theta_a, 135.0)
    mean = 0.5 * (p0 + p90)
    if mean <= 0:
        return 0.0
    amp = math.hypot(0.5 * (p0 - p90), 0.5 * (p45 - p135))
    return amp / mean


@dataclass(frozen=True, eq=False)
class FringeCurve:
    """Coincidence probability against Bob's analyser angle.

    ``counts`` are filled in by :func:`synthesize_counts`; ``mean_pairs`` is
    the expected number of pairs per analyser setting they were drawn for.
    """

    alice: str
    angles_deg: np.ndarray
    probabilities: np.ndarray
    visibility: float = math.nan
    counts: np.ndarray | None = None
    mean_pairs: float | None = None

    def __post_init__(self):
        angles = np.asarray(self.angles_deg, dtype=float)
        probs = np.asarray(self.probabilities, dtype=float)
        if angles.shape != probs.shape:
            raise ValueError("angles and probabilities differ in length")
        if angles.size > 1 and not np.all(np.diff(angles) > 0):
            raise ValueError("angles must be strictly increasing")
        if np.any(probs < -1e-12) or np.any(probs > 1 + 1e-12):
            raise ValueError("probabilities must lie in [0, 1]")
        object.__setattr__(self, "angles_deg", angles)
        object.__setattr__(self, "probabilities", probs)


def fringe(state: PolarizationState, alice: str, angles_deg=None) -> FringeCurve:
    """Coincidences with Alice fixed at H, V, D or A."""
    if alice not in ALICE_ANGLES:
        raise ValueError(f"alice basis must be one of {tuple(ALICE_ANGLES)}")
    if angles_deg is None:
        angles_deg = np.arange(0.0, 361.0, 10.0)
    theta_a = ALICE_ANGLES[alice]
    probs = [coincidence_probability(state, theta_a, t) for t in np.asarray(angles_deg, float)]
    return FringeCurve(alice, angles_deg, np.clip(probs, 0.0, 1.0),
                       analytic_visibility(state, theta_a))


@dataclass(frozen=True)
class CHSHResult:
    """CHSH values for a state.

    ``s_optimal`` uses the two largest singular values of the correlation
    matrix (optimal settings, possibly elliptical); ``optimal_settings``
    holds the corresponding Bloch vectors. ``s_canonical`` evaluates linear
    analysers at Alice 0/45 deg, Bob 22.5/67.5 deg, taking the sign pattern
    that maximises ``|S|``.
    """

    s_optimal: float
    s_canonical: float
    correlation: np.ndarray
    optimal_settings: dict
    canonical_angles: tuple[float, float, float, float] = (0.0, 45.0, 22.5, 67.5)


def correlation_matrix(state: PolarizationState) -> np.ndarray:
    t = np.empty((3, 3))
    for i, j in product(range(3), range(3)):
        t[i, j] = np.real(np.trace(state.rho @ np.kron(_PAULI[i], _PAULI[j])))
    return t


def _correlation(t: np.ndarray, theta_a: float, theta_b: float) -> float:
    # linear analyser at theta: Bloch vector (sin 2theta, 0, cos 2theta)
    a = np.array([math.sin(math.radians(2 * theta_a)), 0.0, math.cos(math.radians(2 * theta_a))])
    b = np.array([math.sin(math.radians(2 * theta_b)), 0.0, math.cos(math.radians(2 * theta_b))])
    return float(a @ t @ b)


def _linear_angle(vec: np.ndarray) -> float | None:
    if abs(vec[1]) > 1e-9:
        return None
    return 0.5 * math.degrees(math.atan2(vec[0], vec[2]))


def chsh(state: PolarizationState) -> CHSHResult:
    t = correlation_matrix(state)
    u, sv, wt = np.linalg.svd(t)
    s_opt = 2 * math.hypot(sv[0], sv[1])
    if s_opt > TSIRELSON + 1e-9:
        raise StateError(f"S = {s_opt!r} exceeds the Tsirelson bound")
    phi = math.atan2(sv[1], sv[0])
    w1, w2 = wt[0], wt[1]
    vectors = {
        "a": u[:, 0], "a'": u[:, 1],
        "b": math.cos(phi) * w1 + math.sin(phi) * w2,
        "b'": math.cos(phi) * w1 - math.sin(phi) * w2,
    }
    settings = {k: {"bloch": [float(x) for x in v], "linear_deg": _linear_angle(v)}
                for k, v in vectors.items()}
    a0, a1, b0, b1 = 0.0, 45.0, 22.5, 67.5
    e = [_correlation(t, a0, b0), _correlation(t, a0, b1),
         _correlation(t, a1, b0), _correlation(t, a1, b1)]
    s_can = max(abs(sum(-x if k == m else x for k, x in enumerate(e))) for m in range(4))
    return CHSHResult(min(s_opt, TSIRELSON), s_can, t, settings)


def chsh_from_visibilities(v_h, v_v, v_d, v_a, errors=None) -> tuple[float, float]:
    """S and its standard error from the four fringe visibilities.

    For the ``|HV>``/``|VH>`` family the optimal value is
    ``2 sqrt(V_HV^2 + V_DA^2)`` with each basis visibility the mean of its
    two fringes. ``errors`` are the 1-sigma errors of the four inputs.
    """
    vhv = 0.5 * (v_h + v_v)
    vda = 0.5 * (v_d + v_a)
    s = 2 * math.hypot(vhv, vda)
    if errors is None:
        return s, 0.0
    eh, ev, ed, ea = errors
    if s == 0:
        return s, 0.0
    ds_dhv = 4 * vhv / s
    ds_dda = 4 * vda / s
    sigma = math.sqrt((ds_dhv * 0.5) ** 2 * (eh**2 + ev**2) + (ds_dda * 0.5) ** 2 * (ed**2 + ea**2))
    return s, sigma


@dataclass(frozen=True)
class VisibilityReport:
    v_h: float
    v_v: float
    v_d: float
    v_a: float
    s: float
    s_canonical: float | None = None
    method: str = "analytic"
    errors: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.s > TSIRELSON + 1e-9:
            raise StateError(f"S = {self.s!r} exceeds the Tsirelson bound")

    def as_dict(self) -> dict:
        out = {"V_H": self.v_h, "V_V": self.v_v, "V_D": self.v_d, "V_A": self.v_a,
               "S": self.s, "method": self.method}
        if self.s_canonical is not None:
            out["S_canonical"] = self.s_canonical
        if self.errors:
            out["errors"] = dict(self.errors)
        return out


def visibility_report(state: PolarizationState) -> VisibilityReport:
    vis = {k: analytic_visibility(state, a) for k, a in ALICE_ANGLES.items()}
    res = chsh(state)
    return VisibilityReport(vis["H"], vis["V"], vis["D"], vis["A"],
                            res.s_optimal, res.s_canonical, "analytic")


def synthesize_counts(curve: FringeCurve, mean_pairs: float, seed: int) -> FringeCurve:
    """Poisson coincidence counts with mean ``mean_pairs * probability``."""
    if not mean_pairs > 0:
        raise ValueError("mean pairs per setting must be positive")
    rng = np.random.default_rng(seed)
    counts = rng.poisson(mean_pairs * curve.probabilities)
    return replace(curve, counts=counts, mean_pairs=float(mean_pairs))


@dataclass(frozen=True)
class VisibilityFit:
    """Fit of ``a + b cos(2(theta - theta0))``; errors are 1 sigma."""

    visibility: float
    uncertainty: float
    offset: float
    amplitude: float
    phase_deg: float
    residuals: np.ndarray
    covariance: np.ndarray


def fit_visibility(curve: FringeCurve) -> VisibilityFit:
    """Least-squares fringe visibility with propagated uncertainty.

    Counts, when present, are fitted with Poisson weights
    ``sigma = sqrt(max(n, 1))``; otherwise the probabilities are fitted
    unweighted and the covariance is scaled by the residual variance. The
    model ``a + c cos 2t + s sin 2t`` is linear, so the weighted least-squares
    solution is exact and ``visibility = sqrt(c^2 + s^2)/a``.

    Raises:
        ValueError: fewer than 6 angles or less than 180 deg covered.
        FitError: the angles leave the model undetermined or the offset is not positive.
    """
    theta = curve.angles_deg
    if theta.size < 6 or theta.max() - theta.min() < 180:
        raise ValueError("need at least 6 angles spanning 180 degrees")
    if curve.counts is not None:
        y = np.asarray(curve.counts, dtype=float)
        sigma = np.sqrt(np.maximum(y, 1.0))
        absolute = True
    else:
        y = curve.probabilities
        sigma = None
        absolute = False
    t = np.radians(2 * theta)
    design = np.column_stack([np.ones_like(t), np.cos(t), np.sin(t)])
    w = np.ones_like(y) if sigma is None else 1.0 / sigma
    aw, yw = design * w[:, None], y * w
    popt, _, rank, _ = np.linalg.lstsq(aw, yw, rcond=None)
    if rank < 3:
        raise FitError("fringe angles do not determine the harmonic model")
    pcov = np.linalg.inv(aw.T @ aw)
    residuals = y - design @ popt
    if not absolute:
        # scale by the residual variance when no absolute errors are known
        pcov = pcov * float(np.sum((residuals * w) ** 2)) / (y.size - 3)
    a, cc, ss = (float(v) for v in popt)
    if a <= 0:
        raise FitError(f"non-positive fringe offset {a:.3g}")
    amp = math.hypot(cc, ss)
    vis = amp / a
    if amp > 0:
        grad = np.array([-amp / a**2, cc / (amp * a), ss / (amp * a)])
    else:
        grad = np.array([0.0, 1 / a, 1 / a]) / math.sqrt(2)
    err = float(math.sqrt(max(grad @ pcov @ grad, 0.0)))
    phase = 0.5 * math.degrees(math.atan2(ss, cc))
    return VisibilityFit(vis, err, a, amp, phase, residuals, pcov)
