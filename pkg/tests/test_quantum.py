import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import chisquare

from qrlsim.errors import InvalidArgument, InvalidState
from qrlsim.quantum import (
    ActionRegister,
    compute_L,
    grover_angle,
    grover_iterate,
    hadamard,
    iteration_cap,
    measure_collapse,
    measure_many,
    phase_gate,
    qubit_count,
    uniform_superposition,
)

from .conftest import random_register

SQ = 1 / math.sqrt(2)


def dense_grover(dim, target):
    """Explicit (2|a0><a0| - I)(I - 2|a><a|) as a dim x dim matrix."""
    e = np.zeros(dim)
    e[target] = 1.0
    a0 = np.full(dim, 1 / math.sqrt(dim))
    U_a = np.eye(dim) - 2 * np.outer(e, e)
    U_a0 = 2 * np.outer(a0, a0) - np.eye(dim)
    return U_a0 @ U_a


# -- uniform_superposition -------------------------------------------------

def test_uniform_two_qubits():
    reg = uniform_superposition(2)
    np.testing.assert_allclose(reg.amps, [0.5, 0.5, 0.5, 0.5], atol=1e-15)


def test_uniform_one_qubit_matches_hadamard_on_zero():
    reg = uniform_superposition(1)
    np.testing.assert_allclose(reg.amps, [SQ, SQ], atol=1e-15)
    np.testing.assert_allclose(hadamard([1, 0]), reg.amps, atol=1e-15)


def test_uniform_three_qubits_probabilities():
    reg = uniform_superposition(3)
    np.testing.assert_allclose(reg.probabilities, 0.125, atol=1e-15)
    assert reg.probabilities.sum() == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("n", [0, -1, 21])
def test_uniform_rejects_bad_qubit_count(n):
    with pytest.raises(InvalidArgument):
        uniform_superposition(n)


def test_uniform_respects_configured_max():
    with pytest.raises(InvalidArgument):
        uniform_superposition(5, max_qubits=4)


def test_register_validates_length():
    with pytest.raises(InvalidArgument):
        ActionRegister(2, np.ones(3))


def test_register_is_immutable():
    reg = uniform_superposition(2)
    with pytest.raises(ValueError):
        reg.amps[0] = 1.0


# -- gates -----------------------------------------------------------------

def test_hadamard_basis_states():
    np.testing.assert_allclose(hadamard([1, 0]), [SQ, SQ], atol=1e-15)
    np.testing.assert_allclose(hadamard([0, 1]), [SQ, -SQ], atol=1e-15)


def test_hadamard_rejects_unnormalized():
    with pytest.raises(InvalidState):
        hadamard([1, 1])


def test_phase_gate_examples():
    v = np.array([0.6, 0.8j])
    np.testing.assert_array_equal(phase_gate(v, 0.0), v)
    np.testing.assert_allclose(phase_gate([SQ, SQ], math.pi), [SQ, -SQ], atol=1e-15)
    np.testing.assert_allclose(phase_gate([0, 1], math.pi / 2), [0, 1j], atol=1e-15)


def test_phase_gate_rejects_unnormalized():
    with pytest.raises(InvalidState):
        phase_gate([2, 0], 0.3)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(-10, 10))
def test_gates_unitary_and_involutive(seed, phi):
    v = random_register(np.random.default_rng(seed), 1)
    np.testing.assert_allclose(hadamard(hadamard(v)), v, atol=1e-12)
    np.testing.assert_allclose(phase_gate(phase_gate(v, phi), -phi), v, atol=1e-12)
    assert np.linalg.norm(hadamard(v)) == pytest.approx(1.0, abs=1e-12)
    assert np.linalg.norm(phase_gate(v, phi)) == pytest.approx(1.0, abs=1e-12)


# -- Grover ----------------------------------------------------------------

def test_grover_angle():
    assert grover_angle(2) == pytest.approx(math.pi / 6, abs=1e-15)
    assert grover_angle(4) == pytest.approx(0.25268, abs=1e-5)
    for n in range(1, 11):
        assert math.sin(grover_angle(n)) == pytest.approx(2 ** (-n / 2), abs=1e-12)
        assert 0 < grover_angle(n) <= math.pi / 2


def test_grover_n2_single_iteration_matches_dense_matrix():
    reg = uniform_superposition(2)
    expected = dense_grover(4, 3) @ reg.amps.real
    out = grover_iterate(reg, 3, 1)
    np.testing.assert_allclose(out.amps, expected, atol=1e-12)
    assert out.probabilities[3] == pytest.approx(1.0, abs=1e-12)


def test_grover_zero_iterations_is_identity(rng):
    reg = ActionRegister(3, random_register(rng, 3))
    assert grover_iterate(reg, 5, 0) == reg


def test_grover_rejects_bad_target():
    reg = uniform_superposition(2)
    with pytest.raises(InvalidArgument):
        grover_iterate(reg, 4, 1)
    with pytest.raises(InvalidArgument):
        grover_iterate(reg, -1, 1)


def test_grover_rejects_negative_L():
    with pytest.raises(InvalidArgument):
        grover_iterate(uniform_superposition(2), 0, -1)


def test_grover_then_sampling_hits_target():
    reg = grover_iterate(uniform_superposition(2), 0, 1)
    rng = np.random.default_rng(7)
    draws = [measure_collapse(reg, rng) for _ in range(10_000)]
    assert np.mean(np.array(draws) == 0) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("n", range(1, 7))
def test_grover_closed_form(n):
    theta = grover_angle(n)
    dim = 2**n
    for target in {0, dim - 1}:
        for L in range(11):
            out = grover_iterate(uniform_superposition(n), target, L)
            assert out.amps[target].real == pytest.approx(math.sin((2 * L + 1) * theta), abs=1e-9)


@pytest.mark.parametrize("n", range(1, 7))
def test_grover_matches_dense_matrix_power(n):
    rng = np.random.default_rng(n)
    dim = 2**n
    v = random_register(rng, n)
    target = int(rng.integers(dim))
    L = int(rng.integers(1, 9))
    expected = np.linalg.matrix_power(dense_grover(dim, target), L) @ v
    out = grover_iterate(ActionRegister(n, v), target, L)
    np.testing.assert_allclose(out.amps, expected, atol=1e-10)


@settings(max_examples=1000, deadline=None)
@given(st.integers(1, 6), st.integers(0, 8), st.integers(0, 2**32 - 1))
def test_grover_preserves_norm(n, L, seed):
    rng = np.random.default_rng(seed)
    reg = ActionRegister(n, random_register(rng, n))
    out = grover_iterate(reg, int(rng.integers(2**n)), L)
    assert abs(out.norm - 1.0) <= 1e-9


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 6), st.integers(0, 8), st.integers(0, 2**32 - 1))
def test_grover_preserves_reality(n, L, seed):
    rng = np.random.default_rng(seed)
    reg = ActionRegister(n, random_register(rng, n, real=True))
    out = grover_iterate(reg, int(rng.integers(2**n)), L)
    assert np.all(out.amps.imag == 0.0)


def test_grover_does_not_mutate_input():
    reg = uniform_superposition(2)
    before = reg.amps.copy()
    grover_iterate(reg, 1, 1)
    np.testing.assert_array_equal(reg.amps, before)


# -- measurement -----------------------------------------------------------

def test_collapse_pure_state_always_returns_it(rng):
    reg = ActionRegister(2, [0, 0, 1, 0])
    assert {measure_collapse(reg, rng) for _ in range(1000)} == {2}


def test_collapse_uniform_frequencies():
    rng = np.random.default_rng(2024)
    reg = uniform_superposition(2)
    draws = np.array([measure_collapse(reg, rng) for _ in range(100_000)])
    freqs = np.bincount(draws, minlength=4) / len(draws)
    np.testing.assert_allclose(freqs, 0.25, atol=0.01)


def test_collapse_biased_register():
    rng = np.random.default_rng(99)
    reg = ActionRegister(1, [math.sqrt(0.9), math.sqrt(0.1)])
    draws = np.array([measure_collapse(reg, rng) for _ in range(100_000)])
    assert np.mean(draws == 0) == pytest.approx(0.9, abs=0.01)


def test_collapse_does_not_mutate(rng):
    reg = ActionRegister(2, random_register(rng, 2))
    before = reg.amps.copy()
    for _ in range(100):
        measure_collapse(reg, rng)
    np.testing.assert_array_equal(reg.amps, before)


def test_collapse_rejects_degenerate(rng):
    reg = ActionRegister(2, np.zeros(4))
    with pytest.raises(InvalidState):
        measure_collapse(reg, rng)


def test_collapse_chi_square_complex_register():
    rng = np.random.default_rng(5)
    reg = ActionRegister(3, random_register(rng, 3))
    draws = np.array([measure_collapse(reg, rng) for _ in range(100_000)])
    observed = np.bincount(draws, minlength=8)
    assert chisquare(observed, reg.probabilities * len(draws)).pvalue > 0.001


def test_collapse_is_deterministic_per_seed():
    reg = ActionRegister(2, random_register(np.random.default_rng(1), 2))
    r1, r2 = np.random.default_rng(42), np.random.default_rng(42)
    seq1 = [measure_collapse(reg, r1) for _ in range(500)]
    seq2 = [measure_collapse(reg, r2) for _ in range(500)]
    assert seq1 == seq2


# -- iteration count -------------------------------------------------------

def test_compute_L_examples():
    assert compute_L(100, 40, 0.01, math.pi / 6) == 1
    assert compute_L(-1, 0, 0.01, math.pi / 6) == 0
    assert compute_L(100, 100, 0.05, math.asin(0.25)) == 2


def test_iteration_cap_tolerates_float_noise():
    # pi / (4 * asin(1/2)) - 1/2 evaluates to 0.9999999999999998
    assert iteration_cap(grover_angle(2)) == 1
    assert iteration_cap(grover_angle(4)) == 2
    assert iteration_cap(grover_angle(1)) == 0


def test_compute_L_validates_inputs():
    with pytest.raises(InvalidArgument):
        compute_L(1, 1, 0.0, 0.5)
    with pytest.raises(InvalidArgument):
        compute_L(1, 1, 0.1, 0.0)


@settings(max_examples=300, deadline=None)
@given(st.floats(-500, 500), st.floats(-500, 500), st.floats(1e-4, 10), st.integers(1, 10))
def test_compute_L_bounds(r, v, k, n):
    theta = grover_angle(n)
    L = compute_L(r, v, k, theta)
    assert 0 <= L <= iteration_cap(theta)
    if k * (r + v) < 0:
        assert L == 0


@pytest.mark.parametrize("count,m", [(1, 0), (2, 1), (4, 2), (5, 3), (400, 9), (1024, 10)])
def test_qubit_count(count, m):
    assert qubit_count(count) == m
    assert count <= 2**m <= 2 * count


def test_qubit_count_rejects_zero():
    with pytest.raises(InvalidArgument):
        qubit_count(0)


def test_measure_many_matches_repeated_single_draws():
    reg = ActionRegister(3, random_register(np.random.default_rng(3), 3))
    r1, r2 = np.random.default_rng(8), np.random.default_rng(8)
    single = [measure_collapse(reg, r1) for _ in range(2000)]
    np.testing.assert_array_equal(measure_many(reg, r2, 2000), single)
    assert r1.random() == r2.random()
