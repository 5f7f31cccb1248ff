from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from parrondo_qwalk.qmath import H, StateVector, is_unitary, kron, phase
from parrondo_qwalk.walk import (
    COIN_A,
    COIN_A_PRIME,
    COIN_B,
    COIN_B_PRIME,
    CoinParams,
    ParrondoSequence,
    WalkerInit,
    coin_operator,
    decrement,
    diagonal_phase_angles,
    diagonalize_shift,
    diagonalized_translation,
    find_period,
    fourier_walk_power,
    increment,
    initial_state,
    parse_pattern,
    qft_matrix,
    revival_probability,
    sequence_period,
    sequence_unitary,
    shift_operator,
    translation_operator,
    walk_unitary,
)

COINS4 = {"A": COIN_A, "B": COIN_B}
COINS3 = {"A'": COIN_A_PRIME, "B'": COIN_B_PRIME}
coin_params = st.builds(CoinParams, st.floats(0, 1), st.floats(0, np.pi), st.floats(0, np.pi))


def test_coin_hadamard_and_limits():
    assert np.allclose(coin_operator(CoinParams(0.5)), H)
    g, d = 0.3, 1.1
    assert np.allclose(coin_operator(CoinParams(1.0, g, d)), [[1, 0], [0, -np.exp(1j * (g + d))]])
    assert coin_operator(COIN_A)[0, 0] == pytest.approx(0.999244, abs=1e-6)


@pytest.mark.parametrize("bad", [dict(s=-0.1), dict(s=1.1), dict(s=0.5, gamma=4.0), dict(s=0.5, delta=-1.0)])
def test_coin_rejects_out_of_range(bad):
    with pytest.raises(ValueError):
        CoinParams(**bad)


@settings(max_examples=100, deadline=None)
@given(coin_params)
def test_coin_and_walk_unitary(p):
    assert np.allclose(coin_operator(p), oracles.coin(p.s, p.gamma, p.delta))
    w = walk_unitary(p, 4)
    assert np.max(np.abs(w.conj().T @ w - np.eye(8))) <= 1e-12
    assert np.max(np.abs(w - oracles.walk(coin_operator(p), 4))) < 1e-12


def test_shift_blocks_for_four_cycle():
    f0 = np.array([[0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1], [1, 0, 0, 0]])
    f1 = f0.T
    assert np.array_equal(decrement(4), f0)
    assert np.array_equal(increment(4), f1)
    s = shift_operator(4)
    assert np.array_equal(s[:4, :4], f0) and np.array_equal(s[4:, 4:], f1)
    assert not s[:4, 4:].any() and not s[4:, :4].any()
    assert np.array_equal(decrement(4) @ increment(4), np.eye(4))


def test_shift_wraparound_and_bad_size():
    e2 = np.zeros(3)
    e2[2] = 1
    assert np.argmax(increment(3) @ e2) == 0
    with pytest.raises(ValueError):
        shift_operator(1)


def test_one_step_of_coin_b():
    out = walk_unitary(COIN_B, 4) @ initial_state(WalkerInit()).amplitudes
    expected = np.zeros(8, dtype=complex)
    expected[3] = np.sqrt(0.119545)  # coin 0, position 3
    expected[4 + 1] = np.sqrt(0.880455)  # coin 1, position 1
    assert np.max(np.abs(out - expected)) < 1e-12


def test_identity_coin_walk_is_the_shift():
    w = walk_unitary(np.eye(2), 4)
    assert np.array_equal(w, shift_operator(4))
    assert np.allclose(np.linalg.matrix_power(w, 4), np.eye(8))
    assert find_period(w, 10).period == 4


def test_initial_states():
    assert initial_state(WalkerInit()).amplitudes[0] == 1
    assert initial_state(WalkerInit(theta=np.pi)).amplitudes[4] == pytest.approx(1)
    amps = initial_state(WalkerInit(np.pi / 2, np.pi / 2, 2, 4)).amplitudes
    assert amps[2] == pytest.approx(1 / np.sqrt(2))
    assert amps[6] == pytest.approx(1j / np.sqrt(2))
    with pytest.raises(ValueError):
        WalkerInit(x=4, K=4)


def test_parse_pattern_primes():
    assert parse_pattern("AABB") == ("A", "A", "B", "B")
    assert parse_pattern("A'A'B'B'") == ("A'", "A'", "B'", "B'")
    with pytest.raises(ValueError):
        parse_pattern("'A")


def test_sequence_unknown_label_rejected():
    with pytest.raises(ValueError):
        ParrondoSequence(COINS4, ("A", "C"), 4)


@pytest.mark.parametrize("coins,K,pattern", [(COINS4, 4, "AABB"), (COINS3, 3, "A'A'B'B'")])
def test_parrondo_sequence_closes_after_twenty_steps(coins, K, pattern):
    seq = ParrondoSequence(coins, parse_pattern(pattern) * 5, K)
    u = sequence_unitary(seq)
    assert np.max(np.abs(u - np.eye(2 * K))) <= 5e-3
    assert revival_probability(u, StateVector.basis(0, 2 * K)) >= 0.999
    rep = sequence_period(seq)
    assert rep.period == 20


def test_sequence_first_element_acts_first():
    seq = ParrondoSequence(COINS4, ("A", "B"), 4)
    assert np.allclose(sequence_unitary(seq), walk_unitary(COIN_B, 4) @ walk_unitary(COIN_A, 4))
    single = ParrondoSequence(COINS4, ("B",), 4)
    assert np.allclose(sequence_unitary(single), walk_unitary(COIN_B, 4))


def test_cyclic_rotations_of_the_identity_sequence():
    base = parse_pattern("AABB") * 5
    dev0 = np.max(np.abs(sequence_unitary(ParrondoSequence(COINS4, base, 4)) - np.eye(8)))
    for r in range(len(base)):
        rot = base[r:] + base[:r]
        dev = np.max(np.abs(sequence_unitary(ParrondoSequence(COINS4, rot, 4)) - np.eye(8)))
        assert dev <= 10 * max(dev0, 1e-7)


@pytest.mark.parametrize("coin", [COIN_A, COIN_B])
def test_single_parrondo_coins_are_not_periodic(coin):
    rep = find_period(walk_unitary(coin, 4), 1000, 1e-6)
    assert rep.period is None
    assert rep.searched_up_to == 1000


def test_find_period_identity_and_rejection():
    assert find_period(np.eye(4), 5).period == 1
    with pytest.raises(ValueError):
        find_period(np.array([[1, 1], [0, 1]]), 5)
    with pytest.raises(ValueError):
        find_period(np.eye(2), 0)


def test_period_eigenvalue_crosscheck():
    w = walk_unitary(np.eye(2), 4)
    rep = find_period(w, 10, 1e-6)
    assert np.all(np.abs(rep.eigenvalues**rep.period - 1) <= 1e-5)


def test_qft_matrix():
    m = qft_matrix(4)
    assert np.allclose(m * 2, [[1, 1, 1, 1], [1, 1j, -1, -1j], [1, -1, 1, -1], [1, -1j, -1, 1j]])
    assert np.allclose(qft_matrix(2), H)
    for K in (2, 3, 4, 8):
        assert np.max(np.abs(qft_matrix(K) @ qft_matrix(K).conj().T - np.eye(K))) < 1e-12
        assert np.allclose(qft_matrix(K), oracles.dft(K))


def test_diagonalize_shift():
    m = qft_matrix(4)
    r = diagonalize_shift(increment(4), m)
    assert np.allclose(np.diag(r) ** 4, 1)
    assert np.max(np.abs(m.conj().T @ r @ m - increment(4))) < 1e-10
    assert np.allclose(diagonalize_shift(decrement(4), m), r.conj())
    assert np.allclose(diagonalize_shift(increment(2), qft_matrix(2)), np.diag([1, -1]))
    with pytest.raises(ValueError):
        diagonalize_shift(increment(3), m)


def test_translation_operator():
    for k in range(4):
        t = translation_operator(k, 4)
        assert np.array_equal(t, np.linalg.matrix_power(increment(4), k))
        e0 = np.zeros(4)
        e0[0] = 1
        assert np.argmax(t @ e0) == k
    assert np.allclose(translation_operator(1, 4) @ translation_operator(3, 4), np.eye(4))
    with pytest.raises(ValueError):
        translation_operator(4, 4)


@pytest.mark.parametrize("k", range(4))
@pytest.mark.parametrize("coin", [COIN_A, COIN_B])
def test_translation_commutes_with_walk(coin, k):
    w = walk_unitary(coin, 4)
    t = kron(np.eye(2), translation_operator(k, 4))
    assert np.max(np.abs(w @ t - t @ w)) <= 1e-10


# reference diagonal forms of T_k for k = 0..3
REFERENCE_TD = {
    0: np.diag([1, 1, 1, 1]),
    1: np.diag([1, 1j, -1, -1j]),
    2: np.diag([1, -1, 1, -1]),
    3: np.diag([1, -1j, -1, 1j]),
}


@pytest.mark.parametrize("k", range(4))
def test_diagonalized_translation_factors(k):
    hi, lo = diagonalized_translation(k)
    m = qft_matrix(4)
    assert np.max(np.abs(kron(hi, lo) - REFERENCE_TD[k])) <= 1e-12
    # these are the M T_k M^dagger conjugation, not M^dagger T_k M
    assert np.max(np.abs(kron(hi, lo) - m @ translation_operator(k, 4) @ m.conj().T)) <= 1e-12


def test_diagonalized_translation_named_factors():
    hi, lo = diagonalized_translation(1)
    assert np.allclose(hi, phase(np.pi)) and np.allclose(lo, phase(np.pi / 2))
    hi, lo = diagonalized_translation(2)
    assert np.allclose(hi, np.eye(2)) and np.allclose(lo, phase(np.pi))
    hi, lo = diagonalized_translation(3)
    assert np.allclose(hi, phase(np.pi)) and np.allclose(lo, phase(-np.pi / 2))
    with pytest.raises(ValueError):
        diagonalized_translation(4)


def test_diagonal_phase_angles_rejects_non_products():
    with pytest.raises(ValueError):
        diagonal_phase_angles(np.array([1, 1, 1, -1]))
    with pytest.raises(ValueError):
        diagonal_phase_angles(np.array([1j, 1j]))


@pytest.mark.parametrize("t", [0, 1, 2, 18, 20])
@pytest.mark.parametrize("coin", [COIN_A, COIN_B])
def test_single_fourier_pair_matches_direct_power(coin, t):
    direct = np.linalg.matrix_power(walk_unitary(coin, 4), t)
    assert np.max(np.abs(fourier_walk_power(coin, 4, t) - direct)) <= 1e-10


def test_walk_unitary_is_unitary_for_three_cycle():
    assert is_unitary(walk_unitary(COIN_A_PRIME, 3))
