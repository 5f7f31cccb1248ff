"""Depolarizing noise: per-gate and terminal modes, exact and by trajectories.

The channel is ``(1 - p) rho + p / (4^m - 1) * sum_{P != I} P rho P`` on
``m`` qubits, so ``p`` is the probability that some non-identity Pauli
hits the qubits.
"""

from __future__ import annotations

import itertools
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from .circuit import Circuit, Gate
from .qmath import PAULIS, DensityMatrix, StateVector, apply_local, conjugate_density, kron, twirl

MODES = ("per-gate", "terminal")

# non-identity Paulis as local matrices; bit 0 of the local index is qubits[0]
_PAULI_1 = PAULIS[1:]
_PAULI_2 = tuple(kron(b, a) for a, b in itertools.product(PAULIS, PAULIS))[1:]


@dataclass(frozen=True)
class NoiseSpec:
    mode: str = "per-gate"
    p1: float = 0.0
    p2: float | None = None
    trajectory: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"noise mode must be one of {MODES}, got {self.mode!r}")
        if self.p2 is None:
            object.__setattr__(self, "p2", self.p1)
        for name in ("p1", "p2"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}={v} outside [0, 1]")

    def is_trivial(self) -> bool:
        return self.p1 == 0.0 and (self.p2 == 0.0 or self.mode == "terminal")

    def rate_for(self, gate: Gate) -> float:
        return self.p1 if len(gate.qubits) == 1 else self.p2

    def to_dict(self) -> dict:
        return {"mode": self.mode, "p1": self.p1, "p2": self.p2, "trajectory": self.trajectory, "seed": self.seed}


def _depolarize_array(rho: np.ndarray, qubits: Sequence[int], p: float, n: int) -> np.ndarray:
    if p == 0.0:
        return rho
    m = len(qubits)
    if m not in (1, 2):
        raise ValueError("depolarizing channel acts on one or two qubits")
    d2 = 4**m
    # sum over all P of P rho P equals d^2 * twirl(rho)
    w = p * d2 / (d2 - 1)
    return (1.0 - w) * rho + w * twirl(rho, qubits, n)


def depolarize(rho: DensityMatrix | np.ndarray, qubits: Sequence[int], p: float) -> DensityMatrix:
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p={p} outside [0, 1]")
    arr = rho.data if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=complex)
    n = int(arr.shape[0]).bit_length() - 1
    qubits = tuple(qubits)
    if len(set(qubits)) != len(qubits) or any(not 0 <= q < n for q in qubits):
        raise ValueError(f"invalid qubits {qubits}")
    return DensityMatrix(_depolarize_array(arr, qubits, p, n))


def _initial_density(c: Circuit, init: StateVector | DensityMatrix | np.ndarray) -> np.ndarray:
    if isinstance(init, DensityMatrix):
        rho = init.data
    else:
        amps = init.amplitudes if isinstance(init, StateVector) else np.asarray(init, dtype=complex)
        rho = np.outer(amps, amps.conj())
    if rho.shape[0] != 1 << c.n_qubits:
        raise ValueError(f"initial state of dimension {rho.shape[0]} does not fit {c.n_qubits} qubits")
    return rho


def evolve_density(rho: np.ndarray, gates: Sequence[Gate], n: int, spec: NoiseSpec | None = None) -> np.ndarray:
    """Apply ``gates`` to ``rho``; in per-gate mode each gate is followed by its channel."""
    per_gate = spec is not None and spec.mode == "per-gate"
    for g in gates:
        rho = conjugate_density(rho, g.local_matrix(), g.qubits, n)
        if per_gate:
            rho = _depolarize_array(rho, g.qubits, spec.rate_for(g), n)
    return rho


def terminal_noise(rho: np.ndarray, n: int, p: float, qubits: Sequence[int] | None = None) -> np.ndarray:
    for q in range(n) if qubits is None else qubits:
        rho = _depolarize_array(rho, (q,), p, n)
    return rho


def apply_noise_to_run(c: Circuit, spec: NoiseSpec, init: StateVector | DensityMatrix | np.ndarray) -> DensityMatrix:
    rho = _initial_density(c, init)
    rho = evolve_density(rho, c.gates, c.n_qubits, spec)
    if spec.mode == "terminal":
        rho = terminal_noise(rho, c.n_qubits, spec.p1)
    return DensityMatrix(rho)


# -- trajectories ----------------------------------------------------------


def _inject_paulis(batch: np.ndarray, qubits: Sequence[int], p: float, n: int, rng: np.random.Generator) -> np.ndarray:
    """Hit each column independently with a uniformly chosen non-identity Pauli w.p. ``p``."""
    if p == 0.0:
        return batch
    shots = batch.shape[1]
    pool = _PAULI_1 if len(qubits) == 1 else _PAULI_2
    hit = rng.random(shots) < p
    which = rng.integers(0, len(pool), size=shots)
    for i, pauli in enumerate(pool):
        cols = np.flatnonzero(hit & (which == i))
        if cols.size:
            batch[:, cols] = apply_local(batch[:, cols], pauli, qubits, n)
    return batch


def evolve_trajectories(batch: np.ndarray, gates: Sequence[Gate], n: int, spec: NoiseSpec, rng: np.random.Generator) -> np.ndarray:
    """Evolve a ``(2^n, shots)`` batch of statevectors with sampled gate errors."""
    per_gate = spec.mode == "per-gate"
    for g in gates:
        batch = apply_local(batch, g.local_matrix(), g.qubits, n)
        if per_gate:
            batch = _inject_paulis(batch, g.qubits, spec.rate_for(g), n, rng)
    return batch


def finish_trajectories(batch: np.ndarray, n: int, spec: NoiseSpec, rng: np.random.Generator, measured: Sequence[int] | None) -> dict[int, int]:
    """Apply terminal noise if requested, then draw one outcome per column."""
    if spec.mode == "terminal":
        for q in range(n):
            batch = _inject_paulis(batch, (q,), spec.p1, n, rng)
    probs = np.abs(batch) ** 2
    probs /= probs.sum(axis=0, keepdims=True)
    cum = np.cumsum(probs, axis=0)
    draws = rng.random(batch.shape[1])
    idx = np.minimum((cum < draws).sum(axis=0), batch.shape[0] - 1)
    measured = tuple(range(n)) if measured is None else tuple(measured)
    labels = np.zeros_like(idx)
    for i, q in enumerate(measured):
        labels |= ((idx >> q) & 1) << i
    values, counts = np.unique(labels, return_counts=True)
    out = {k: 0 for k in range(1 << len(measured))}
    out.update({int(v): int(c) for v, c in zip(values, counts)})
    return out


def trajectory_sample(
    c: Circuit,
    spec: NoiseSpec,
    init: StateVector | np.ndarray,
    shots: int,
    measured: Sequence[int] | None = None,
    seed: int | None = None,
    batch_size: int = 4096,
) -> dict[int, int]:
    """Monte-Carlo unraveling of the depolarizing channel, one statevector per shot.

    Shots are processed in fixed-size batches, each with a generator spawned
    from the seed, so counts depend only on ``(seed, shots, batch_size)``.
    """
    if shots < 1:
        raise ValueError("shots must be >= 1")
    amps = init.amplitudes if isinstance(init, StateVector) else np.asarray(init, dtype=complex)
    if amps.size != 1 << c.n_qubits:
        raise ValueError(f"initial state of dimension {amps.size} does not fit {c.n_qubits} qubits")
    seed = spec.seed if seed is None else seed
    n_batches = -(-shots // batch_size)
    rngs = [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(n_batches)]
    total: dict[int, int] = {}
    for b, rng in enumerate(rngs):
        size = min(batch_size, shots - b * batch_size)
        batch = np.repeat(amps[:, None], size, axis=1)
        batch = evolve_trajectories(batch, c.gates, c.n_qubits, spec, rng)
        for k, v in finish_trajectories(batch, c.n_qubits, spec, rng, measured).items():
            total[k] = total.get(k, 0) + v
    return dict(sorted(total.items()))
