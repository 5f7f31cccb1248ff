from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import unitary_group

import oracles
from parrondo_qwalk import circuit as cm
from parrondo_qwalk.circuit import Circuit
from parrondo_qwalk.metrics import hellinger_fidelity, total_variation
from parrondo_qwalk.noise import NoiseSpec, apply_noise_to_run, depolarize, trajectory_sample
from parrondo_qwalk.protocol import ProtocolConfig, build_protocol_circuit, initial_register_state
from parrondo_qwalk.qmath import DensityMatrix, StateVector, probabilities


def _random_rho(n, seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(1 << n, 1 << n)) + 1j * rng.normal(size=(1 << n, 1 << n))
    r = a @ a.conj().T
    return r / np.trace(r)


def _pure(n, seed):
    psi = unitary_group.rvs(1 << n, random_state=seed)[:, 0]
    return np.outer(psi, psi.conj())


def test_noise_spec_validation():
    assert NoiseSpec(p1=0.1).p2 == 0.1
    with pytest.raises(ValueError):
        NoiseSpec(p1=1.5)
    with pytest.raises(ValueError):
        NoiseSpec(mode="amplitude-damping")


def test_depolarize_zero_is_identity():
    rho = _random_rho(2, 0)
    assert np.allclose(depolarize(rho, [0], 0.0).data, rho)


def test_single_qubit_full_mixing_point():
    out = depolarize(np.diag([1.0, 0.0]), [0], 0.75).data
    assert np.max(np.abs(out - np.eye(2) / 2)) <= 1e-12


def test_two_qubit_full_mixing_point():
    out = depolarize(_pure(2, 9), [0, 1], 15 / 16).data
    assert np.max(np.abs(out - np.eye(4) / 4)) <= 1e-12


def test_depolarize_rejects_three_qubits():
    with pytest.raises(ValueError):
        depolarize(_random_rho(3, 1), [0, 1, 2], 0.1)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31), st.floats(0, 1), st.sampled_from([(0,), (2,), (1, 2), (2, 0)]))
def test_depolarize_matches_kraus_sum(seed, p, qubits):
    rho = _random_rho(3, seed)
    ours = depolarize(rho, qubits, p).data
    assert np.max(np.abs(ours - oracles.depolarize_kraus(rho, qubits, p, 3))) <= 1e-12
    assert abs(np.trace(ours) - 1) <= 1e-9
    assert np.linalg.eigvalsh(ours).min() >= -1e-9


@pytest.mark.parametrize("qubits", [(0,), (0, 1)])
def test_repeated_application_degrades_monotonically(qubits):
    psi = _pure(2, 3)
    once = depolarize(psi, qubits, 0.1).data
    twice = depolarize(once, qubits, 0.1).data
    assert np.trace(psi @ twice).real <= np.trace(psi @ once).real + 1e-12


def _protocol(k=1, K=4):
    cfg = ProtocolConfig(message_k=k)
    pc = build_protocol_circuit(cfg)
    return pc, initial_register_state(cfg, pc.circuit.n_qubits)


def test_zero_noise_density_equals_statevector():
    pc, init = _protocol()
    ideal = probabilities(StateVector(cm.evolve_statevector(pc.circuit, init)), pc.measured).as_array()
    for mode in ("per-gate", "terminal"):
        noisy = apply_noise_to_run(pc.circuit, NoiseSpec(mode, 0.0), init)
        assert np.max(np.abs(probabilities(noisy, pc.measured).as_array() - ideal)) <= 1e-10


def test_terminal_mode_depolarizes_each_qubit_once():
    c = Circuit(2).extend([cm.h(0)])
    rho = apply_noise_to_run(c, NoiseSpec("terminal", 0.2), StateVector.basis(0, 4)).data
    plus = np.array([1, 1]) / np.sqrt(2)
    ref = np.kron(np.diag([1.0, 0.0]), np.outer(plus, plus))
    ref = oracles.depolarize_kraus(oracles.depolarize_kraus(ref, [0], 0.2, 2), [1], 0.2, 2)
    assert np.max(np.abs(rho - ref)) <= 1e-12


def test_per_gate_uses_p2_on_two_qubit_gates():
    c = Circuit(2).extend([cm.cx(0, 1)])
    rho = apply_noise_to_run(c, NoiseSpec("per-gate", 0.0, 0.3), StateVector.basis(1, 4)).data
    ref = oracles.depolarize_kraus(np.diag([0, 0, 0, 1.0]).astype(complex), [1, 0], 0.3, 2)
    assert np.max(np.abs(rho - ref)) <= 1e-12


def test_noise_keeps_density_valid_on_protocol():
    pc, init = _protocol()
    rho = apply_noise_to_run(pc.circuit, NoiseSpec("per-gate", 0.03), init)
    assert isinstance(rho, DensityMatrix)
    assert abs(np.trace(rho.data) - 1) <= 1e-9
    assert np.linalg.eigvalsh(rho.data).min() >= -1e-9


def test_fidelity_decreases_with_noise():
    pc, init = _protocol()
    ideal = probabilities(StateVector(cm.evolve_statevector(pc.circuit, init)), pc.measured)
    fids = [
        hellinger_fidelity(ideal, probabilities(apply_noise_to_run(pc.circuit, NoiseSpec("per-gate", p), init), pc.measured))
        for p in (0.0, 0.005, 0.01, 0.02)
    ]
    assert fids[0] == pytest.approx(1.0)
    assert all(a > b for a, b in zip(fids, fids[1:]))


def test_trajectory_noiseless_is_multinomial():
    c = Circuit(1).extend([cm.h(0)])
    counts = trajectory_sample(c, NoiseSpec("per-gate", 0.0, trajectory=True), StateVector.basis(0, 2), 20_000, seed=2)
    assert sum(counts.values()) == 20_000
    assert abs(counts[0] - 10_000) <= 4 * np.sqrt(5000)


@pytest.mark.parametrize("mode", ["per-gate", "terminal"])
def test_trajectories_converge_to_density(mode):
    pc, init = _protocol()
    spec = NoiseSpec(mode, 0.03, trajectory=True, seed=5)
    exact = probabilities(apply_noise_to_run(pc.circuit, spec, init), pc.measured)
    counts = trajectory_sample(pc.circuit, spec, init, 100_000, pc.measured, seed=5)
    assert total_variation(exact, counts) <= 0.02


def test_trajectories_deterministic_per_seed():
    pc, init = _protocol()
    spec = NoiseSpec("per-gate", 0.05, trajectory=True)
    a = trajectory_sample(pc.circuit, spec, init, 3000, pc.measured, seed=8)
    b = trajectory_sample(pc.circuit, spec, init, 3000, pc.measured, seed=8)
    c = trajectory_sample(pc.circuit, spec, init, 3000, pc.measured, seed=9)
    assert a == b and a != c
    with pytest.raises(ValueError):
        trajectory_sample(pc.circuit, spec, init, 0, pc.measured)
