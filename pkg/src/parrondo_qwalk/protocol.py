"""Parrondo-walk message exchange between Alice and Bob.

Alice publishes ``W_B^2 |l>|x>``; Bob shifts it by the message ``k``;
Alice applies the private continuation ``(AABB)^4 AA`` which closes the
period-20 identity and reads ``k' = k + x mod K`` from the position.

The matrix-level functions here are the semantic reference.  The
circuit-level run uses one QFT pair: everything between the QFT after
state preparation and the final inverse QFT happens in the Fourier frame,
including Bob's encoding as phase gates.
"""

from __future__ import annotations

from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np

from . import circuit as cm
from .circuit import Circuit, DepthReport, Gate, depth_report, evolve_statevector
from .metrics import argmax_outcome, compare, freeze
from .noise import NoiseSpec, apply_noise_to_run, trajectory_sample
from .qmath import Distribution, StateVector, kron, probabilities, sample_counts
from .walk import (
    COIN_A,
    COIN_B,
    TRUNCATED_PERIOD_TOL,
    CoinParams,
    ParrondoSequence,
    WalkerInit,
    diagonal_phase_angles,
    find_period,
    initial_state,
    parse_pattern,
    position_distribution,
    qft_matrix,
    sequence_unitary,
    translation_operator,
)

STRATEGIES = ("swap-only", "swap-then-teleport", "teleport-then-swap")
DEFAULT_DECRYPT = parse_pattern("AABB" * 4 + "AA")


@dataclass(frozen=True)
class ProtocolConfig:
    K: int = 4
    message_k: int = 1
    init: WalkerInit = field(default_factory=WalkerInit)
    coins: Mapping[str, CoinParams] = field(default_factory=lambda: {"A": COIN_A, "B": COIN_B})
    public_key_steps: int = 2
    public_key_coin: str = "B"
    decrypt_pattern: tuple[str, ...] = DEFAULT_DECRYPT
    transfer: str = "swap-only"
    noise: NoiseSpec | None = None
    shots: int | None = None
    seed: int = 0
    closure_tol: float = TRUNCATED_PERIOD_TOL
    check_closure: bool = True

    def __post_init__(self):
        pattern = self.decrypt_pattern
        if isinstance(pattern, str):
            pattern = parse_pattern(pattern)
        object.__setattr__(self, "decrypt_pattern", tuple(pattern))
        object.__setattr__(self, "coins", dict(self.coins))
        if self.init.K != self.K:
            raise ValueError(f"walker initialised on a {self.init.K}-cycle but K={self.K}")
        if not 0 <= self.message_k < self.K:
            raise ValueError(f"message {self.message_k} outside 0..{self.K - 1}")
        if self.transfer not in STRATEGIES:
            raise ValueError(f"transfer must be one of {STRATEGIES}")
        if self.public_key_steps < 0:
            raise ValueError("public_key_steps must be >= 0")
        if self.shots is not None and self.shots < 1:
            raise ValueError("shots must be >= 1")
        unknown = {lab for lab in self.full_pattern if lab not in self.coins}
        if unknown:
            raise ValueError(f"pattern uses undefined coins {sorted(unknown)}")
        if self.check_closure:
            report = find_period(sequence_unitary(self.full_sequence()), t_max=1, tol=self.closure_tol)
            if report.period != 1:
                raise ValueError(
                    "public-key steps followed by the decryption pattern do not close on the identity "
                    f"(deviation {report.deviation_at_period:.3g} > {self.closure_tol})"
                )

    @property
    def public_key_pattern(self) -> tuple[str, ...]:
        return (self.public_key_coin,) * self.public_key_steps

    @property
    def full_pattern(self) -> tuple[str, ...]:
        return self.public_key_pattern + self.decrypt_pattern

    def full_sequence(self) -> ParrondoSequence:
        return ParrondoSequence(self.coins, self.full_pattern, self.K)

    @property
    def expected_outcome(self) -> int:
        return (self.message_k + self.init.x) % self.K

    def with_(self, **changes) -> ProtocolConfig:
        from dataclasses import replace

        return replace(self, **changes)

    def to_dict(self) -> dict:
        return {
            "K": self.K,
            "message_k": self.message_k,
            "init": {"theta": self.init.theta, "omega": self.init.omega, "x": self.init.x},
            "coins": {k: {"s": c.s, "gamma": c.gamma, "delta": c.delta} for k, c in sorted(self.coins.items())},
            "public_key_steps": self.public_key_steps,
            "public_key_coin": self.public_key_coin,
            "decrypt_pattern": "".join(self.decrypt_pattern),
            "transfer": self.transfer,
            "noise": self.noise.to_dict() if self.noise else None,
            "shots": self.shots,
            "seed": self.seed,
        }


# -- matrix level ----------------------------------------------------------


def _apply_pattern(state: np.ndarray, coins: Mapping[str, CoinParams], pattern: Sequence[str], K: int) -> np.ndarray:
    if not pattern:
        return state
    return sequence_unitary(ParrondoSequence(coins, tuple(pattern), K)) @ state


@dataclass(frozen=True)
class PublicKey:
    state: StateVector
    circuit: Circuit
    """Alice-only fragment (position q0 q1, coin q2) ending in the Fourier frame."""

    @property
    def distribution(self) -> np.ndarray:
        return position_distribution(self.state, self.state.dim // 2)


def generate_public_key(cfg: ProtocolConfig) -> PublicKey:
    psi0 = initial_state(cfg.init)
    amps = _apply_pattern(psi0.amplitudes, cfg.coins, cfg.public_key_pattern, cfg.K)
    state = StateVector(amps, ("coin", "position"))
    frag = None
    if _circuit_capable(cfg.K):
        frag = Circuit(3, registers={"alice-position": (0, 1), "alice-coin": (2,)})
        frag = cm.qft_block(frag, (0, 1))
        for lab in cfg.public_key_pattern:
            frag = cm.walk_step_block(frag, cfg.coins[lab], (0, 1), 2, lab)
    return PublicKey(state, frag)


def encrypt_message(state: StateVector | np.ndarray, k: int, cfg: ProtocolConfig) -> StateVector:
    """``(I (x) T_k)`` on a coin(x)position state."""
    amps = state.amplitudes if isinstance(state, StateVector) else np.asarray(state, dtype=complex)
    t = translation_operator(k, cfg.K)
    return StateVector(kron(np.eye(2), t) @ amps, ("coin", "position"))


def decrypt_state(state: StateVector | np.ndarray, cfg: ProtocolConfig) -> StateVector:
    amps = state.amplitudes if isinstance(state, StateVector) else np.asarray(state, dtype=complex)
    return StateVector(_apply_pattern(amps, cfg.coins, cfg.decrypt_pattern, cfg.K), ("coin", "position"))


def decrypt(state: StateVector | np.ndarray, cfg: ProtocolConfig) -> Distribution:
    """Position distribution after the private continuation."""
    return Distribution.from_array(position_distribution(decrypt_state(state, cfg), cfg.K))


def recover_message(k_prime: int, x: int, K: int) -> int:
    if not (0 <= k_prime < K and 0 <= x < K):
        raise ValueError(f"k'={k_prime}, x={x} must lie in 0..{K - 1}")
    return (k_prime - x) % K


def matrix_protocol(cfg: ProtocolConfig) -> Distribution:
    """Reference decryption distribution ``G (I (x) T_k) W^t |Phi(0)>``."""
    pk = generate_public_key(cfg)
    return decrypt(encrypt_message(pk.state, cfg.message_k, cfg), cfg)


# -- circuit level ---------------------------------------------------------


def _circuit_capable(K: int) -> bool:
    return K == 4


MODULE_LAYOUTS = {
    "swap-only": {"alice": (0, 1, 2), "bob": (3, 4, 5)},
    "swap-then-teleport": {"alice": (0, 1, 2), "ancilla": (3, 4, 5), "bob": (6, 7, 8)},
    "teleport-then-swap": {"alice": (0, 1, 2), "ancilla": (3, 4, 5), "bob": (6, 7, 8)},
}


def protocol_registers(strategy: str, with_eve: bool = False) -> dict[str, tuple[int, ...]]:
    """Module registers; each module is (position 0, position 1, coin)."""
    mods = dict(MODULE_LAYOUTS[strategy])
    if with_eve:
        start = 1 + max(q for qs in mods.values() for q in qs)
        mods["eve"] = (start, start + 1, start + 2)
    regs: dict[str, tuple[int, ...]] = {}
    for name, qs in mods.items():
        regs[name] = qs
        if name != "ancilla":
            regs[f"{name}-position"] = qs[:2]
            regs[f"{name}-coin"] = qs[2:]
    return regs


def transfer_state(c: Circuit, strategy: str, registers: Mapping[str, Sequence[int]], leg: str) -> Circuit:
    """Move Alice's module to Bob (``leg="to-bob"``) or back (``leg="to-alice"``)."""
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown transfer strategy {strategy!r}")
    if leg not in ("to-bob", "to-alice"):
        raise ValueError(f"unknown leg {leg!r}")
    alice, bob = registers["alice"], registers["bob"]
    teleport = (strategy == "swap-then-teleport" and leg == "to-alice") or (
        strategy == "teleport-then-swap" and leg == "to-bob"
    )
    if not teleport:
        return cm.swap_transfer_block(c, alice, bob) if leg == "to-bob" else cm.swap_transfer_block(c, bob, alice)
    if "ancilla" not in registers:
        raise ValueError(f"strategy {strategy} needs an ancilla register")
    src, dst = (alice, bob) if leg == "to-bob" else (bob, alice)
    return cm.teleport_block(c, src, registers["ancilla"], dst)


def encoding_gates(k: int, position_qubits: Sequence[int], K: int = 4) -> list[Gate]:
    """Fourier-frame translation ``M T_k M^dagger`` as phase gates."""
    m = qft_matrix(K)
    diag = np.diag(m @ translation_operator(k, K) @ m.conj().T)
    gates = []
    for q, theta in zip(position_qubits, diagonal_phase_angles(diag)):
        if abs(np.exp(1j * theta) - 1) > 1e-12:
            gates.append(cm.p(q, theta))
    return gates


@dataclass(frozen=True)
class Stage:
    name: str
    start: int
    stop: int


@dataclass(frozen=True)
class ProtocolCircuit:
    circuit: Circuit
    stages: tuple[Stage, ...]
    measured: tuple[int, ...]

    def stage(self, name: str) -> Stage:
        for s in self.stages:
            if s.name == name:
                return s
        raise KeyError(name)

    def gates_until(self, name: str) -> tuple[Gate, ...]:
        return self.circuit.gates[: self.stage(name).stop]

    def gates_after(self, name: str) -> tuple[Gate, ...]:
        return self.circuit.gates[self.stage(name).stop :]


class _StageBuilder:
    def __init__(self, n: int, registers):
        self.c = Circuit(n, registers=registers)
        self.stages: list[Stage] = []

    def add(self, name: str, fn) -> None:
        start = len(self.c)
        self.c = fn(self.c)
        self.stages.append(Stage(name, start, len(self.c)))


def public_key_stage(c: Circuit, cfg: ProtocolConfig, alice: Sequence[int]) -> Circuit:
    pos, coin = tuple(alice[:2]), alice[2]
    c = cm.qft_block(c, pos)
    for lab in cfg.public_key_pattern:
        c = cm.walk_step_block(c, cfg.coins[lab], pos, coin, lab)
    return c


def decrypt_stage(c: Circuit, cfg: ProtocolConfig, alice: Sequence[int]) -> Circuit:
    pos, coin = tuple(alice[:2]), alice[2]
    for lab in cfg.decrypt_pattern:
        c = cm.walk_step_block(c, cfg.coins[lab], pos, coin, lab)
    return c


def build_protocol_circuit(cfg: ProtocolConfig, with_eve: bool = False) -> ProtocolCircuit:
    """Algorithm-level circuit for the chosen transfer strategy.

    With ``with_eve`` the swap-only layout gains Eve's module and the
    Bob-to-Alice leg is left out; :mod:`.attacks` splices in the interception.
    """
    if not _circuit_capable(cfg.K):
        raise ValueError("circuit-level protocol is built for the 4-cycle")
    if with_eve and cfg.transfer != "swap-only":
        raise ValueError("the intercept-resend circuit uses the swap-only layout")
    regs = protocol_registers(cfg.transfer, with_eve)
    n = 1 + max(q for qs in regs.values() for q in qs)
    b = _StageBuilder(n, regs)
    alice, bob = regs["alice"], regs["bob"]
    b.add("public-key", lambda c: public_key_stage(c, cfg, alice))
    b.add("transfer-to-bob", lambda c: transfer_state(c, cfg.transfer, regs, "to-bob"))
    b.add("encrypt", lambda c: c.extend(encoding_gates(cfg.message_k, bob[:2], cfg.K)))
    if not with_eve:
        b.add("transfer-to-alice", lambda c: transfer_state(c, cfg.transfer, regs, "to-alice"))
        b.add("decrypt", lambda c: decrypt_stage(c, cfg, alice))
        b.add("inverse-qft", lambda c: cm.qft_block(c, alice[:2], inverse=True))
    return ProtocolCircuit(b.c, tuple(b.stages), tuple(alice[:2]))


def initial_register_state(cfg: ProtocolConfig, n_qubits: int) -> StateVector:
    """Walker state on Alice's module, every other qubit in |0>."""
    alice = initial_state(cfg.init).amplitudes  # coin * K + position == q2 q1 q0
    rest = np.zeros(1 << (n_qubits - 3), dtype=complex)
    rest[0] = 1.0
    return StateVector(kron(rest, alice))


def evolve_protocol(pc: ProtocolCircuit, cfg: ProtocolConfig, noise: NoiseSpec | None):
    """Exact final state: a statevector without noise, a density matrix otherwise."""
    init = initial_register_state(cfg, pc.circuit.n_qubits)
    if noise is None or noise.is_trivial():
        return evolve_statevector(pc.circuit, init)
    return apply_noise_to_run(pc.circuit, noise, init).data


@dataclass
class ProtocolTranscript:
    config: dict
    public_key_distribution: list[float]
    encoded_state_summary: list[float]
    ideal_distribution: list[float]
    decryption_distribution: list[float]
    counts: dict[int, int] | None
    k_prime: int
    recovered_k: int
    metrics: dict
    depth: DepthReport
    events: list[dict] = field(default_factory=list)
    public_key_noisy: list[float] | None = None

    @property
    def qber(self) -> float:
        return self.metrics["qber"]

    @property
    def p_correct(self) -> float:
        return 1.0 - self.metrics["qber"]

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "public_key_distribution": self.public_key_distribution,
            "public_key_noisy": self.public_key_noisy,
            "encoded_state_summary": self.encoded_state_summary,
            "ideal_distribution": self.ideal_distribution,
            "decryption_distribution": self.decryption_distribution,
            "counts": None if self.counts is None else {str(k): v for k, v in self.counts.items()},
            "k_prime": self.k_prime,
            "recovered_k": self.recovered_k,
            "metrics": self.metrics,
            "depth": self.depth.to_dict(),
            "events": self.events,
        }


def _stage_events(pc: ProtocolCircuit) -> list[dict]:
    events = []
    for s in pc.stages:
        gates = pc.circuit.gates[s.start : s.stop]
        kinds: dict[str, int] = {}
        for g in gates:
            kinds[g.kind] = kinds.get(g.kind, 0) + 1
        events.append({"stage": s.name, "gates": len(gates), "kinds": dict(sorted(kinds.items()))})
    return events


def _noisy_public_key(cfg: ProtocolConfig) -> list[float] | None:
    if cfg.noise is None or cfg.noise.is_trivial():
        return None
    frag = public_key_stage(Circuit(3), cfg, (0, 1, 2))
    frag = cm.qft_block(frag, (0, 1), inverse=True)
    rho = apply_noise_to_run(frag, cfg.noise, initial_state(cfg.init).amplitudes).data
    return freeze(probabilities(rho, (0, 1)), cfg.K)


def finish_transcript(
    cfg: ProtocolConfig,
    pc: ProtocolCircuit,
    final_dist: Distribution,
    counts: dict[int, int] | None,
    events: list[dict],
) -> ProtocolTranscript:
    """Compare a final distribution with the ideal circuit run and fill the transcript."""
    pk = generate_public_key(cfg)
    encoded = encrypt_message(pk.state, cfg.message_k, cfg)
    ideal = matrix_protocol(cfg)
    observed = Distribution.from_counts(counts) if counts is not None else final_dist
    report = compare(ideal, observed, correct=cfg.expected_outcome)
    k_prime = argmax_outcome(observed)
    return ProtocolTranscript(
        config=cfg.to_dict(),
        public_key_distribution=freeze(pk.distribution, cfg.K),
        encoded_state_summary=freeze(position_distribution(encoded, cfg.K), cfg.K),
        ideal_distribution=freeze(ideal, cfg.K),
        decryption_distribution=freeze(final_dist, cfg.K),
        counts=counts,
        k_prime=k_prime,
        recovered_k=recover_message(k_prime, cfg.init.x, cfg.K),
        metrics=report.to_dict(),
        depth=depth_report(pc.circuit),
        events=events,
        public_key_noisy=_noisy_public_key(cfg),
    )


def run_protocol(cfg: ProtocolConfig) -> ProtocolTranscript:
    """Public key, transfer, encryption, transfer back, decryption and readout."""
    try:
        pc = build_protocol_circuit(cfg)
    except ValueError as exc:
        raise ValueError(f"circuit construction: {exc}") from exc
    noise = cfg.noise
    counts = None
    if noise is not None and not noise.is_trivial() and noise.trajectory and cfg.shots:
        init = initial_register_state(cfg, pc.circuit.n_qubits)
        counts = trajectory_sample(pc.circuit, noise, init, cfg.shots, pc.measured, cfg.seed)
        final = Distribution.from_counts(counts)
    else:
        final = probabilities(evolve_protocol(pc, cfg, noise), pc.measured)
        if cfg.shots:
            counts = sample_counts(final, cfg.shots, cfg.seed)
    return finish_transcript(cfg, pc, final, counts, _stage_events(pc))
