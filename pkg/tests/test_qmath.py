from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import unitary_group

from oracles import embed
from parrondo_qwalk.qmath import (
    H,
    I2,
    X,
    DensityMatrix,
    Distribution,
    StateVector,
    apply_local,
    embed_unitary,
    is_unitary,
    kron,
    partial_trace,
    probabilities,
    sample_counts,
)


def test_kron_identity_and_dims():
    assert np.allclose(kron(I2, I2), np.eye(4))
    assert kron(I2, np.eye(4)).shape == (8, 8)


def test_kron_high_factor_takes_high_bits():
    basis0 = np.zeros(4)
    basis0[0] = 1
    assert np.argmax(np.abs(kron(X, I2) @ basis0)) == 2


def test_kron_associative_and_mixed_product():
    rng = np.random.default_rng(3)
    a, b, c, d = (rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)) for _ in range(4))
    assert np.max(np.abs(kron(kron(a, b), c) - kron(a, kron(b, c)))) < 1e-12
    assert np.allclose(kron(a, b) @ kron(c, d), kron(a @ c, b @ d))


def test_embed_x_on_qubit_zero_is_low_factor():
    assert np.allclose(embed_unitary(X, [0], 2), kron(I2, X))
    assert np.allclose(embed_unitary(I2, [1], 3), np.eye(8))


@pytest.mark.parametrize("targets", [[0, 0], [2], [-1]])
def test_embed_rejects_bad_targets(targets):
    with pytest.raises(ValueError):
        embed_unitary(X if len(targets) == 1 else np.eye(4), targets, 2)


def test_embed_rejects_wrong_matrix_size():
    with pytest.raises(ValueError):
        embed_unitary(np.eye(4), [0], 2)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 4), st.data())
def test_embed_matches_enumeration_oracle(n, data):
    m = data.draw(st.integers(1, 2))
    targets = data.draw(st.permutations(range(n)))[:m]
    u = unitary_group.rvs(1 << m, random_state=data.draw(st.integers(0, 2**31)))
    assert np.max(np.abs(embed_unitary(u, targets, n) - embed(u, targets, n))) < 1e-12


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31))
def test_apply_local_preserves_norm(seed):
    rng = np.random.default_rng(seed)
    psi = rng.normal(size=16) + 1j * rng.normal(size=16)
    psi /= np.linalg.norm(psi)
    u = unitary_group.rvs(4, random_state=rng)
    out = apply_local(psi, u, (3, 1), 4)
    assert abs(np.vdot(out, out).real - 1) < 1e-9


def test_statevector_norm_enforced():
    with pytest.raises(ValueError):
        StateVector(np.array([1.0, 1.0]))


def test_probabilities_plus_state():
    d = probabilities(StateVector(np.array([1, 1]) / np.sqrt(2)), [0])
    assert d.to_dict() == pytest.approx({0: 0.5, 1: 0.5})


def test_probabilities_bell_marginal():
    bell = StateVector(np.array([1, 0, 0, 1]) / np.sqrt(2))
    assert probabilities(bell, [1]).to_dict() == pytest.approx({0: 0.5, 1: 0.5})


def test_probabilities_bit_order_of_outcome():
    # |q2 q1 q0> = |1 0 0>: measuring (q2, q0) gives outcome bit0 = q2 = 1
    psi = StateVector.basis(4, 8)
    assert probabilities(psi, [2, 0]).to_dict() == {0: 0.0, 1: 1.0, 2: 0.0, 3: 0.0}


def test_density_and_statevector_probabilities_agree():
    rng = np.random.default_rng(0)
    psi = rng.normal(size=8) + 1j * rng.normal(size=8)
    psi /= np.linalg.norm(psi)
    a = probabilities(StateVector(psi), [0, 2]).as_array()
    b = probabilities(DensityMatrix.from_state(psi), [0, 2]).as_array()
    assert np.max(np.abs(a - b)) < 1e-10


def test_distribution_clamps_tiny_values():
    d = Distribution({0: 1.0, 1: 1e-14})
    assert d[1] == 0.0 and d[0] == 1.0


def test_sample_counts_contract():
    assert sample_counts(Distribution({0: 1.0}), 100, seed=1) == {0: 100}
    fair = Distribution({0: 0.5, 1: 0.5})
    c = sample_counts(fair, 100_000, seed=7)
    assert sum(c.values()) == 100_000
    assert abs(c[0] - 50_000) <= 474
    assert c == sample_counts(fair, 100_000, seed=7)
    with pytest.raises(ValueError):
        sample_counts(fair, 0)


def test_partial_trace_of_product_state():
    rng = np.random.default_rng(5)

    def rand_rho(d):
        a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        r = a @ a.conj().T
        return r / np.trace(r)

    a, b, c = rand_rho(2), rand_rho(4), rand_rho(2)
    full = kron(c, kron(b, a))
    assert np.allclose(partial_trace(full, [0], 4), a)
    assert np.allclose(partial_trace(full, [1, 2], 4), b)
    assert np.allclose(partial_trace(full, [3, 0], 4), kron(c, a))


def test_is_unitary():
    assert is_unitary(H)
    assert not is_unitary(np.array([[1, 1], [0, 1]]))
