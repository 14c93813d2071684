import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spdcsim.entanglement import (
    ALICE_ANGLES,
    TSIRELSON,
    FitError,
    FringeCurve,
    PolarizationState,
    StateError,
    analytic_visibility,
    build_state,
    chsh,
    chsh_from_visibilities,
    coincidence_probability,
    fit_visibility,
    fringe,
    random_state,
    synthesize_counts,
    visibility_report,
)

PSI_PLUS = np.array([0, 1, 1, 0]) / math.sqrt(2)


def test_hand_diagonalised_eigenvalues():
    # the HV/VH block [[1/2, V/2], [V/2, 1/2]] has eigenvalues (1 +- V)/2
    state = build_state(0.78)
    assert np.allclose(np.sort(state.eigenvalues())[::-1], [0.89, 0.11, 0.0, 0.0], atol=1e-12)


def test_diagonal_coincidence_oracle():
    # P(D, D) = (1 + V) / 4 for the partially coherent Psi+ mixture
    assert coincidence_probability(build_state(0.78), 45.0, 45.0) == pytest.approx(0.445, abs=1e-12)
    assert coincidence_probability(build_state(0.78), 0.0, 90.0) == pytest.approx(0.5, abs=1e-12)
    assert coincidence_probability(build_state(0.78), 0.0, 0.0) == pytest.approx(0.0, abs=1e-12)


def test_ideal_state_fidelity():
    assert build_state(1.0).fidelity(PSI_PLUS) == pytest.approx(1.0, abs=1e-12)
    assert build_state(0.0).fidelity(PSI_PLUS) == pytest.approx(0.5, abs=1e-12)


def test_state_validation():
    with pytest.raises(StateError):
        build_state(1.2)
    with pytest.raises(StateError):
        build_state(0.5, weights=(0, 0))
    with pytest.raises(StateError):
        PolarizationState(np.diag([1.0, 0.5, 0, 0]), 0j)
    with pytest.raises(StateError):
        PolarizationState(np.diag([1.5, -0.5, 0, 0]).astype(complex), 0j)


def test_unequal_weights():
    # Bob's conditional Bloch vector has z = p2 - p1 and x = 2 sqrt(p1 p2) V
    state = build_state(0.5, weights=(3, 1))
    assert state.weights == pytest.approx((0.75, 0.25))
    expected = math.sqrt(0.5**2 + 4 * 0.75 * 0.25 * 0.5**2)
    assert analytic_visibility(state, 45.0) == pytest.approx(expected, abs=1e-12)
    assert analytic_visibility(build_state(1.0, weights=(3, 1)), 45.0) == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=1000, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), rank=st.integers(1, 4))
def test_random_states_valid_and_bounded(seed, rank):
    state = random_state(np.random.default_rng(seed), rank)
    rho = state.rho
    assert np.allclose(rho, rho.conj().T, atol=1e-12)
    assert abs(np.trace(rho).real - 1) < 1e-12
    assert np.linalg.eigvalsh(rho).min() > -1e-9
    res = chsh(state)
    assert res.s_optimal <= TSIRELSON + 1e-9
    assert res.s_canonical <= res.s_optimal + 1e-9


@settings(max_examples=200, deadline=None)
@given(v=st.floats(-1, 1), phase=st.floats(0, 2 * math.pi),
       w=st.tuples(st.floats(0.01, 1), st.floats(0.01, 1)))
def test_built_states_are_valid(v, phase, w):
    state = build_state(v * np.exp(1j * phase), w)
    assert np.linalg.eigvalsh(state.rho).min() > -1e-9


@pytest.mark.parametrize("v", np.linspace(0, 1, 21))
def test_chsh_identity(v):
    assert chsh(build_state(v)).s_optimal == pytest.approx(2 * math.sqrt(1 + v**2), abs=1e-9)


def test_chsh_ideal_is_tsirelson():
    res = chsh(build_state(1.0))
    assert abs(res.s_optimal - 2 * math.sqrt(2)) < 1e-9
    assert abs(res.s_canonical - 2 * math.sqrt(2)) < 1e-9


@pytest.mark.parametrize("v", [0.0, 0.5, 0.78, 1.0])
def test_canonical_linear_settings(v):
    # fixed 0/45 and 22.5/67.5 analysers give sqrt(2) (1 + V)
    assert chsh(build_state(v)).s_canonical == pytest.approx(math.sqrt(2) * (1 + v), abs=1e-12)


def test_chsh_from_measured_visibilities():
    s, sigma = chsh_from_visibilities(0.989, 0.965, 0.780, 0.745, errors=(0.037, 0.027, 0.022, 0.031))
    assert s == pytest.approx(2.46, abs=0.12)
    assert 0 < sigma < 0.12
    s, _ = chsh_from_visibilities(0.989, 0.991, 0.980, 0.983)
    assert s == pytest.approx(2.79, abs=0.02)


def test_chsh_from_visibilities_consistent_with_state():
    state = build_state(0.81)
    rep = visibility_report(state)
    assert chsh_from_visibilities(rep.v_h, rep.v_v, rep.v_d, rep.v_a)[0] == pytest.approx(rep.s, abs=1e-12)


@pytest.mark.parametrize("v", [0.0, 0.3, 0.78, 1.0])
def test_visibility_report(v):
    rep = visibility_report(build_state(v))
    assert rep.v_h == pytest.approx(1.0) and rep.v_v == pytest.approx(1.0)
    assert rep.v_d == pytest.approx(v, abs=1e-12) and rep.v_a == pytest.approx(v, abs=1e-12)
    assert set(rep.as_dict()) >= {"V_H", "V_V", "V_D", "V_A", "S"}


def test_fringe_shape():
    curve = fringe(build_state(0.78), "D")
    assert curve.angles_deg[0] == 0 and curve.angles_deg[-1] == 360 and len(curve.angles_deg) == 37
    fit = fit_visibility(curve)
    assert fit.visibility == pytest.approx(0.78, abs=1e-12)
    assert fit.uncertainty < 1e-12
    assert curve.visibility == pytest.approx(0.78, abs=1e-12)


def test_fringe_rejects_unknown_basis():
    with pytest.raises(ValueError):
        fringe(build_state(0.5), "R")


def test_fringe_curve_validation():
    with pytest.raises(ValueError):
        FringeCurve("H", np.array([0.0, 0.0]), np.array([0.1, 0.2]))
    with pytest.raises(ValueError):
        FringeCurve("H", np.array([0.0, 10.0]), np.array([0.1, 1.2]))


def test_synthetic_counts_deterministic():
    curve = fringe(build_state(0.78), "D")
    a = synthesize_counts(curve, 1000, seed=7)
    b = synthesize_counts(curve, 1000, seed=7)
    assert np.array_equal(a.counts, b.counts)
    assert not np.array_equal(a.counts, synthesize_counts(curve, 1000, seed=8).counts)


def _pulls(basis, v=0.78, mean_pairs=3000, n=40):
    state = build_state(v)
    truth = analytic_visibility(state, ALICE_ANGLES[basis])
    pulls = []
    for seed in range(n):
        fit = fit_visibility(synthesize_counts(fringe(state, basis), mean_pairs, seed))
        pulls.append((fit.visibility - truth) / fit.uncertainty)
    return np.array(pulls)


@pytest.mark.parametrize("basis", ["D", "A"])
def test_fit_error_order_of_magnitude(basis):
    pulls = _pulls(basis)
    # propagated error matches the scatter to within a factor of two
    assert abs(pulls.mean()) < 1.0
    assert 0.5 < pulls.std() < 2.0


@pytest.mark.parametrize("basis", ["H", "V"])
def test_fit_error_conservative_at_full_visibility(basis):
    # zero-mean bins carry sigma = 1 without scatter, so errors are pessimistic
    pulls = _pulls(basis)
    assert np.all(np.abs(pulls) < 3.0)
    assert pulls.std() < 1.0


def test_fit_needs_half_turn():
    curve = FringeCurve("D", np.arange(0.0, 100.0, 10.0), np.full(10, 0.25))
    with pytest.raises(ValueError):
        fit_visibility(curve)


def test_fit_flat_zero_counts_fails():
    curve = FringeCurve("D", np.arange(0.0, 361.0, 10.0), np.zeros(37))
    with pytest.raises(FitError):
        fit_visibility(curve)
