"""Intercept-resend eavesdropping, MITM detection and the BB84 baseline.

Eve sits on the swap-only layout with her own three-qubit module.  After
Bob's encryption she measures each of Bob's qubits in a basis of her
choice, prepares what she saw on her module, optionally scrambles each
qubit with a Haar-random unitary, and swaps her module into Alice's.

Simulation shortcut: once measured, Bob's qubits are never touched again
and Eve's preparation is a classical copy of the outcome, so Bob's
dephased register can stand in for Eve's module.  After the swap into
Alice only Alice's qubits matter, and decryption runs on their reduced
state.  The explicit nine-qubit construction is kept for reporting (depth,
serialization), and the tests check that both give the same distribution.
"""

from __future__ import annotations

import csv
import io
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import unitary_group

from . import circuit as cm
from .circuit import Circuit, Gate
from .metrics import qber_of
from .noise import evolve_density, evolve_trajectories, finish_trajectories, terminal_noise
from .protocol import (
    ProtocolCircuit,
    ProtocolConfig,
    ProtocolTranscript,
    Stage,
    build_protocol_circuit,
    decrypt_stage,
    finish_transcript,
    initial_register_state,
    protocol_registers,
    run_protocol,
)
from .qmath import H, Z, Distribution, apply_local, conjugate_density, partial_trace, probabilities, sample_counts

__all__ = [
    "EveConfig",
    "EveChoices",
    "sample_eve_choices",
    "build_eve_circuit",
    "run_protocol_with_eve",
    "EveCampaign",
    "eve_campaign",
    "qber_of",
    "mitm_detection_check",
    "Bb84Config",
    "Bb84Result",
    "bb84_run",
]

BASIS_CHOICES = ("random", "computational", "x")
REENCODINGS = ("measured-state", "haar-random-unitary")
# re-encoding is noiseless state preparation; the basis change belongs to the measurement
_ALICE = (0, 1, 2)
_BOB = (3, 4, 5)


@dataclass(frozen=True)
class EveConfig:
    basis_choice: str = "random"
    reencode: str = "haar-random-unitary"
    seed: int = 0
    enabled: bool = True

    def __post_init__(self):
        if self.basis_choice not in BASIS_CHOICES:
            raise ValueError(f"basis_choice must be one of {BASIS_CHOICES}, got {self.basis_choice!r}")
        if self.reencode not in REENCODINGS:
            raise ValueError(f"reencode must be one of {REENCODINGS}, got {self.reencode!r}")

    def to_dict(self) -> dict:
        return {"basis_choice": self.basis_choice, "reencode": self.reencode, "seed": self.seed, "enabled": self.enabled}


@dataclass(frozen=True)
class EveChoices:
    """Per-qubit bases (0 = computational, 1 = X) and re-encoding unitaries."""

    bases: tuple[int, ...]
    unitaries: tuple[np.ndarray, ...] = ()

    def to_dict(self) -> dict:
        return {
            "bases": ["X" if b else "Z" for b in self.bases],
            "unitaries": [[[[float(z.real), float(z.imag)] for z in row] for row in u] for u in self.unitaries],
        }


def sample_eve_choices(eve: EveConfig, n_qubits: int = 3) -> EveChoices:
    """Everything Eve decides, drawn from one generator seeded by ``eve.seed``."""
    rng = np.random.default_rng(eve.seed)
    if eve.basis_choice == "random":
        bases = tuple(int(b) for b in rng.integers(0, 2, size=n_qubits))
    else:
        bases = (int(eve.basis_choice == "x"),) * n_qubits
    unitaries: tuple[np.ndarray, ...] = ()
    if eve.reencode == "haar-random-unitary":
        unitaries = tuple(np.asarray(unitary_group.rvs(2, random_state=rng), dtype=complex) for _ in range(n_qubits))
    return EveChoices(bases, unitaries)


def _reencode_gates(choices: EveChoices, qubits: Sequence[int]) -> list[Gate]:
    return [cm.u(q, m, label="eve") for q, m in zip(qubits, choices.unitaries)]


def _after_intercept_gates(cfg: ProtocolConfig, choices: EveChoices, eve: Sequence[int], alice: Sequence[int], n: int) -> list[Gate]:
    c = Circuit(n).extend(_reencode_gates(choices, eve))
    c = cm.swap_transfer_block(c, eve, alice)
    c = decrypt_stage(c, cfg, alice)
    c = cm.qft_block(c, alice[:2], inverse=True)
    return list(c.gates)


def build_eve_circuit(cfg: ProtocolConfig, choices: EveChoices) -> ProtocolCircuit:
    """Nine-qubit circuit of the attacked run (Eve's measurement excluded)."""
    pc = build_protocol_circuit(cfg, with_eve=True)
    regs = protocol_registers(cfg.transfer, with_eve=True)
    alice, eve = regs["alice"], regs["eve"]
    c = pc.circuit
    stages = list(pc.stages)
    start = len(c)
    c = c.extend(_reencode_gates(choices, eve))
    stages.append(Stage("eve-reencode", start, len(c)))
    start = len(c)
    c = cm.swap_transfer_block(c, eve, alice)
    stages.append(Stage("transfer-to-alice", start, len(c)))
    start = len(c)
    c = decrypt_stage(c, cfg, alice)
    stages.append(Stage("decrypt", start, len(c)))
    start = len(c)
    c = cm.qft_block(c, alice[:2], inverse=True)
    stages.append(Stage("inverse-qft", start, len(c)))
    return ProtocolCircuit(c, tuple(stages), tuple(alice[:2]))


# -- exact (density) path ----------------------------------------------------


def _prefix_circuit(cfg: ProtocolConfig) -> tuple[Gate, ...]:
    return build_protocol_circuit(cfg).gates_until("encrypt")


def _prefix_density(cfg: ProtocolConfig) -> np.ndarray:
    init = initial_register_state(cfg, 6).amplitudes
    rho = np.outer(init, init.conj())
    return evolve_density(rho, _prefix_circuit(cfg), 6, cfg.noise)


def measure_and_forget(rho: np.ndarray, qubits: Sequence[int], bases: Sequence[int], n: int) -> np.ndarray:
    """Nonselective projective measurement of each qubit in Z (0) or X (1)."""
    for q, b in zip(qubits, bases):
        if b:
            rho = conjugate_density(rho, H, (q,), n)
        rho = 0.5 * (rho + conjugate_density(rho, Z, (q,), n))
        if b:
            rho = conjugate_density(rho, H, (q,), n)
    return rho


def _eve_distribution(prefix: np.ndarray, cfg: ProtocolConfig, choices: EveChoices) -> Distribution:
    noise = cfg.noise
    rho = measure_and_forget(prefix, _BOB, choices.bases, 6)
    pre_swap = Circuit(6).extend(_reencode_gates(choices, _BOB))
    pre_swap = cm.swap_transfer_block(pre_swap, _BOB, _ALICE)
    rho = evolve_density(rho, pre_swap.gates, 6, noise)
    rho = partial_trace(rho, _ALICE, 6)
    tail = cm.qft_block(decrypt_stage(Circuit(3), cfg, (0, 1, 2)), (0, 1), inverse=True)
    rho = evolve_density(rho, tail.gates, 3, noise)
    if noise is not None and noise.mode == "terminal":
        rho = terminal_noise(rho, 3, noise.p1)
    return probabilities(rho, (0, 1))


# -- trajectory path -----------------------------------------------------------


def _measure_columns(batch: np.ndarray, qubits: Sequence[int], bases: Sequence[int], n: int, rng: np.random.Generator) -> np.ndarray:
    """Sample and apply one projective outcome per column; return the re-prepared states."""
    for q, b in zip(qubits, bases):
        if b:
            batch = apply_local(batch, H, (q,), n)
        t = batch.reshape((1 << (n - 1 - q), 2, 1 << q, batch.shape[1])).copy()
        p1 = np.sum(np.abs(t[:, 1]) ** 2, axis=(0, 1))
        ones = rng.random(batch.shape[1]) < p1
        t[:, 1, :, ~ones] = 0.0
        t[:, 0, :, ones] = 0.0
        batch = t.reshape(batch.shape)
        batch = batch / np.linalg.norm(batch, axis=0, keepdims=True)
        if b:
            batch = apply_local(batch, H, (q,), n)
    return batch


def _eve_trajectories(cfg: ProtocolConfig, choices: EveChoices, eve_seed: int) -> dict[int, int]:
    noise = cfg.noise
    shots = int(cfg.shots)
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, eve_seed]))
    init = initial_register_state(cfg, 6).amplitudes
    batch = np.repeat(init[:, None], shots, axis=1)
    batch = evolve_trajectories(batch, _prefix_circuit(cfg), 6, noise, rng)
    batch = _measure_columns(batch, _BOB, choices.bases, 6, rng)
    batch = evolve_trajectories(batch, _after_intercept_gates(cfg, choices, _BOB, _ALICE, 6), 6, noise, rng)
    return finish_trajectories(batch, 6, noise, rng, _ALICE[:2])


def _use_trajectories(cfg: ProtocolConfig) -> bool:
    n = cfg.noise
    return n is not None and not n.is_trivial() and n.trajectory and bool(cfg.shots)


def _check_layout(cfg: ProtocolConfig) -> None:
    if cfg.transfer != "swap-only":
        raise ValueError("the intercept-resend attack is modelled on the swap-only layout")


def run_protocol_with_eve(cfg: ProtocolConfig, eve: EveConfig) -> ProtocolTranscript:
    """Protocol run with Eve intercepting the Bob-to-Alice leg."""
    if not eve.enabled:
        return run_protocol(cfg)
    _check_layout(cfg)
    choices = sample_eve_choices(eve)
    pc = build_eve_circuit(cfg, choices)
    counts = None
    if _use_trajectories(cfg):
        counts = _eve_trajectories(cfg, choices, eve.seed)
        final = Distribution.from_counts(counts)
    else:
        final = _eve_distribution(_prefix_density(cfg), cfg, choices)
        if cfg.shots:
            counts = sample_counts(final, cfg.shots, cfg.seed)
    events = []
    for s in pc.stages:
        events.append({"stage": s.name, "gates": s.stop - s.start})
        if s.name == "encrypt":
            events.append({"stage": "eve-intercept", "measured": list(_BOB), "reencode": eve.reencode, "eve_seed": eve.seed, **choices.to_dict()})
    return finish_transcript(cfg, pc, final, counts, events)


@dataclass
class EveCampaign:
    seeds: list[int]
    p_correct: list[float]
    mean_distribution: list[float]

    @property
    def mean_p_correct(self) -> float:
        return float(np.mean(self.p_correct))

    @property
    def mean_qber(self) -> float:
        return 1.0 - self.mean_p_correct

    def to_dict(self) -> dict:
        return {
            "seeds": self.seeds,
            "p_correct": self.p_correct,
            "mean_p_correct": self.mean_p_correct,
            "mean_qber": self.mean_qber,
            "mean_distribution": self.mean_distribution,
        }


def eve_campaign(cfg: ProtocolConfig, template: EveConfig = EveConfig(), seeds: Sequence[int] = range(200)) -> EveCampaign:
    """Average Eve's effect over seeds; the noisy prefix is computed once."""
    _check_layout(cfg)
    seeds = [int(s) for s in seeds]
    if not seeds:
        raise ValueError("no Eve seeds given")
    prefix = None if _use_trajectories(cfg) else _prefix_density(cfg)
    correct = cfg.expected_outcome
    dists = []
    for s in seeds:
        choices = sample_eve_choices(EveConfig(template.basis_choice, template.reencode, s))
        if prefix is None:
            d = Distribution.from_counts(_eve_trajectories(cfg, choices, s))
        else:
            d = _eve_distribution(prefix, cfg, choices)
        dists.append([d[k] if k in d.outcomes else 0.0 for k in range(cfg.K)])
    arr = np.array(dists)
    return EveCampaign(seeds, [float(x) for x in arr[:, correct]], [float(x) for x in arr.mean(axis=0)])


def mitm_detection_check(transcript: ProtocolTranscript | float, threshold: float = 0.5) -> dict:
    """Flag tampering when the observed QBER exceeds ``threshold``."""
    if not 0.0 < threshold < 1.0:
        raise ValueError(f"threshold {threshold} outside (0, 1)")
    qber = float(transcript) if isinstance(transcript, (int, float)) else transcript.qber
    return {"detected": qber > threshold, "qber": qber, "threshold": threshold}


# -- BB84 --------------------------------------------------------------------

# BB84 states indexed [basis, bit]; basis 0 is Z and 1 is X
_BB84_STATES = np.array([[[1, 0], [0, 1]], [[1, 1], [1, -1]]], dtype=complex)
_BB84_STATES[1] /= np.sqrt(2)


@dataclass(frozen=True)
class Bb84Config:
    n_bits: int = 10_000
    eve_present: bool = False
    seed: int = 0
    bit_flip: float = 0.0

    def __post_init__(self):
        if self.n_bits < 1:
            raise ValueError("n_bits must be >= 1")
        if not 0.0 <= self.bit_flip <= 1.0:
            raise ValueError(f"bit_flip {self.bit_flip} outside [0, 1]")

    def to_dict(self) -> dict:
        return {"n_bits": self.n_bits, "eve_present": self.eve_present, "seed": self.seed, "bit_flip": self.bit_flip}


@dataclass
class Bb84Result:
    sifted_length: int
    qber: float
    rounds: dict[str, np.ndarray] = field(default_factory=dict, repr=False)

    def to_dict(self) -> dict:
        return {"sifted_length": self.sifted_length, "qber": self.qber}

    def round_log(self) -> str:
        """Per-round comma-separated log."""
        cols = ("alice_bit", "alice_basis", "eve_basis", "bob_basis", "bob_bit", "sifted", "error")
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("round",) + cols)
        for i in range(len(self.rounds["alice_bit"])):
            w.writerow([i] + [int(self.rounds[c][i]) for c in cols])
        return buf.getvalue()


def _measure_bb84(states: np.ndarray, bases: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Born-rule measurement of single-qubit ``states`` (rows) in the given bases."""
    one = _BB84_STATES[bases, 1]
    p1 = np.abs(np.sum(one.conj() * states, axis=1)) ** 2
    return (rng.random(len(bases)) < p1).astype(np.int64)


def bb84_run(cfg: Bb84Config) -> Bb84Result:
    """Prepare-and-measure BB84 with optional intercept-resend Eve."""
    rng = np.random.default_rng(cfg.seed)
    n = cfg.n_bits
    bits = rng.integers(0, 2, size=n)
    a_bases = rng.integers(0, 2, size=n)
    eve_bases = rng.integers(0, 2, size=n) if cfg.eve_present else np.full(n, -1)
    b_bases = rng.integers(0, 2, size=n)
    sent = _BB84_STATES[a_bases, bits]
    if cfg.eve_present:
        eve_bits = _measure_bb84(sent, eve_bases, rng)
        sent = _BB84_STATES[eve_bases, eve_bits]
    bob = _measure_bb84(sent, b_bases, rng)
    if cfg.bit_flip:
        bob ^= (rng.random(n) < cfg.bit_flip).astype(np.int64)
    sifted = a_bases == b_bases
    errors = sifted & (bob != bits)
    n_sift = int(sifted.sum())
    qber = float(errors.sum() / n_sift) if n_sift else 0.0
    rounds = {
        "alice_bit": bits,
        "alice_basis": a_bases,
        "eve_basis": eve_bases,
        "bob_basis": b_bases,
        "bob_bit": bob,
        "sifted": sifted,
        "error": errors,
    }
    return Bb84Result(n_sift, qber, rounds)
