from __future__ import annotations

import numpy as np
import pytest

from parrondo_qwalk import circuit as cm
from parrondo_qwalk.attacks import (
    Bb84Config,
    EveConfig,
    bb84_run,
    build_eve_circuit,
    eve_campaign,
    measure_and_forget,
    mitm_detection_check,
    run_protocol_with_eve,
    sample_eve_choices,
)
from parrondo_qwalk.circuit import Circuit, evolve_statevector
from parrondo_qwalk.metrics import qber_of
from parrondo_qwalk.noise import NoiseSpec
from parrondo_qwalk.protocol import ProtocolConfig, initial_register_state, protocol_registers, run_protocol
from parrondo_qwalk.qmath import H, X, apply_local, probabilities
from parrondo_qwalk.walk import WalkerInit


def _explicit_eve(cfg: ProtocolConfig, eve: EveConfig) -> np.ndarray:
    """Nine-qubit intercept-resend, one branch per measurement record."""
    choices = sample_eve_choices(eve)
    pc = build_eve_circuit(cfg, choices)
    regs = protocol_registers("swap-only", with_eve=True)
    bob, spy = regs["bob"], regs["eve"]
    n = pc.circuit.n_qubits
    psi = evolve_statevector(Circuit(n).extend(pc.gates_until("encrypt")), initial_register_state(cfg, n))
    for q, b in zip(bob, choices.bases):
        if b:
            psi = apply_local(psi, H, (q,), n)
    out = np.zeros(4)
    tail = Circuit(n).extend(pc.gates_after("encrypt"))
    for record in range(8):
        branch = psi.copy()
        idx = np.arange(1 << n)
        for i, q in enumerate(bob):
            branch[((idx >> q) & 1) != ((record >> i) & 1)] = 0
        weight = np.vdot(branch, branch).real
        if weight < 1e-15:
            continue
        branch /= np.sqrt(weight)
        for i, (q, s, b) in enumerate(zip(bob, spy, choices.bases)):
            if b:
                branch = apply_local(branch, H, (q,), n)
            if (record >> i) & 1:
                branch = apply_local(branch, X, (s,), n)
            if b:
                branch = apply_local(branch, H, (s,), n)
        final = evolve_statevector(tail, branch)
        out += weight * probabilities(final, pc.measured).as_array()
    return out


@pytest.mark.parametrize("seed", [0, 7])
@pytest.mark.parametrize("reencode", ["haar-random-unitary", "measured-state"])
def test_density_shortcut_matches_nine_qubit_simulation(seed, reencode):
    cfg = ProtocolConfig(message_k=1)
    eve = EveConfig(reencode=reencode, seed=seed)
    t = run_protocol_with_eve(cfg, eve)
    assert np.max(np.abs(np.array(t.decryption_distribution) - _explicit_eve(cfg, eve))) <= 1e-10


def test_eve_circuit_layout():
    pc = build_eve_circuit(ProtocolConfig(), sample_eve_choices(EveConfig(seed=3)))
    assert pc.circuit.n_qubits == 9
    names = [s.name for s in pc.stages]
    assert names == ["public-key", "transfer-to-bob", "encrypt", "eve-reencode", "transfer-to-alice", "decrypt", "inverse-qft"]
    assert cm.loads(cm.dumps(pc.circuit)).gates == pc.circuit.gates


def test_eve_campaign_breaks_revival():
    camp = eve_campaign(ProtocolConfig(message_k=1))
    assert len(camp.p_correct) == 200
    assert camp.mean_p_correct <= 0.3
    assert camp.mean_qber >= 0.6
    assert sum(camp.mean_distribution) == pytest.approx(1.0)


@pytest.mark.parametrize("k", range(4))
def test_no_cloning_bound_for_every_message(k):
    camp = eve_campaign(ProtocolConfig(message_k=k))
    assert camp.mean_p_correct <= 0.5


def test_computational_measured_state_eve_still_disturbs():
    t = run_protocol_with_eve(ProtocolConfig(message_k=1), EveConfig("computational", "measured-state", 1))
    assert t.qber > 0
    assert t.p_correct < 0.999


def test_eve_choices_are_seeded():
    a, b = sample_eve_choices(EveConfig(seed=12)), sample_eve_choices(EveConfig(seed=12))
    assert a.bases == b.bases and all(np.array_equal(x, y) for x, y in zip(a.unitaries, b.unitaries))
    assert len(sample_eve_choices(EveConfig(reencode="measured-state")).unitaries) == 0
    assert set(sample_eve_choices(EveConfig("x")).bases) == {1}
    with pytest.raises(ValueError):
        EveConfig(basis_choice="y")


def test_eve_determinism():
    cfg = ProtocolConfig(message_k=2, shots=2000, seed=3)
    eve = EveConfig(seed=5)
    assert run_protocol_with_eve(cfg, eve).to_dict() == run_protocol_with_eve(cfg, eve).to_dict()
    noisy = cfg.with_(noise=NoiseSpec("per-gate", 0.02, trajectory=True))
    assert run_protocol_with_eve(noisy, eve).counts == run_protocol_with_eve(noisy, eve).counts


def test_eve_trajectories_agree_with_density():
    cfg = ProtocolConfig(message_k=1, noise=NoiseSpec("per-gate", 0.02), shots=50_000, seed=1)
    eve = EveConfig(seed=4)
    exact = np.array(run_protocol_with_eve(cfg, eve).decryption_distribution)
    traj = run_protocol_with_eve(cfg.with_(noise=NoiseSpec("per-gate", 0.02, trajectory=True)), eve)
    assert 0.5 * np.abs(np.array(traj.decryption_distribution) - exact).sum() <= 0.02


def test_disabled_eve_is_pass_through():
    cfg = ProtocolConfig(message_k=3, init=WalkerInit(x=1), shots=100, seed=2)
    assert run_protocol_with_eve(cfg, EveConfig(enabled=False)).to_dict() == run_protocol(cfg).to_dict()


def test_eve_events_recorded():
    t = run_protocol_with_eve(ProtocolConfig(), EveConfig(seed=2))
    stages = [e["stage"] for e in t.events]
    assert stages.index("encrypt") + 1 == stages.index("eve-intercept")
    ev = t.events[stages.index("eve-intercept")]
    assert ev["eve_seed"] == 2 and len(ev["unitaries"]) == 3


def test_eve_requires_swap_only():
    with pytest.raises(ValueError):
        run_protocol_with_eve(ProtocolConfig(transfer="swap-then-teleport"), EveConfig())


def test_measure_and_forget_kills_coherence():
    plus = np.full((2, 2), 0.5, dtype=complex)
    assert np.allclose(measure_and_forget(plus, (0,), (0,), 1), np.eye(2) / 2)
    assert np.allclose(measure_and_forget(plus, (0,), (1,), 1), plus)


def test_qber_examples():
    assert qber_of({1: 1.0}, 1) == 0.0
    assert qber_of([0.25] * 4, 1) == pytest.approx(0.75)
    assert qber_of({0: 0.32, 1: 0.04, 2: 0.32, 3: 0.32}, 1) == pytest.approx(0.96)


def test_mitm_detection():
    assert mitm_detection_check(run_protocol(ProtocolConfig()))["detected"] is False
    assert mitm_detection_check(0.96)["detected"] is True
    assert mitm_detection_check(0.96, threshold=0.99)["detected"] is False
    t = run_protocol_with_eve(ProtocolConfig(), EveConfig(seed=1))
    assert mitm_detection_check(t)["qber"] == pytest.approx(t.qber)
    with pytest.raises(ValueError):
        mitm_detection_check(0.5, threshold=1.0)


def test_bb84_without_eve():
    r = bb84_run(Bb84Config(10_000))
    assert r.qber == 0.0
    assert 4700 <= r.sifted_length <= 5300


def test_bb84_with_eve():
    r = bb84_run(Bb84Config(10_000, eve_present=True, seed=1))
    assert 0.22 <= r.qber <= 0.28
    assert 4700 <= r.sifted_length <= 5300


def test_bb84_round_log_and_rejection():
    r = bb84_run(Bb84Config(20, eve_present=True, seed=3))
    lines = r.round_log().splitlines()
    assert lines[0] == "round,alice_bit,alice_basis,eve_basis,bob_basis,bob_bit,sifted,error"
    assert len(lines) == 21
    assert bb84_run(Bb84Config(20, True, 3)).round_log() == r.round_log()
    with pytest.raises(ValueError):
        Bb84Config(0)


def test_dtqw_qber_exceeds_bb84_under_eve():
    dtqw = eve_campaign(ProtocolConfig(message_k=1)).mean_qber
    bb84 = np.mean([bb84_run(Bb84Config(10_000, True, s)).qber for s in range(5)])
    assert dtqw - bb84 >= 0.3
