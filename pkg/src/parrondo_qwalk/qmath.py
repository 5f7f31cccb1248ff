"""Dense state containers, tensor helpers and Born-rule measurement.

Bit order is global: qubit 0 is the least significant bit of a basis index.
A coin(x)position walk state of a K-cycle is indexed ``coin * K + position``.
"""

from __future__ import annotations

from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np

UNITARY_TOL = 1e-10
NORM_TOL = 1e-9
CLAMP_TOL = 1e-12

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
PAULIS = (I2, X, Y, Z)


def phase(theta: float) -> np.ndarray:
    return np.array([[1, 0], [0, np.exp(1j * theta)]], dtype=complex)


def kron(a, b) -> np.ndarray:
    """Kronecker product; ``a`` occupies the more significant bits."""
    return np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


def is_unitary(u, tol: float = UNITARY_TOL) -> bool:
    u = np.asarray(u)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        return False
    return bool(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))) <= tol)


def max_deviation(a, b) -> float:
    return float(np.max(np.abs(np.asarray(a) - np.asarray(b))))


def n_qubits_of(dim: int) -> int:
    n = int(dim).bit_length() - 1
    if dim < 1 or 1 << n != dim:
        raise ValueError(f"dimension {dim} is not a power of two")
    return n


def _check_qubits(qubits: Sequence[int], n: int) -> tuple[int, ...]:
    qubits = tuple(int(q) for q in qubits)
    if len(set(qubits)) != len(qubits):
        raise ValueError(f"duplicate qubit in {qubits}")
    for q in qubits:
        if not 0 <= q < n:
            raise ValueError(f"qubit {q} out of range for {n} qubits")
    return qubits


def apply_local(tensor: np.ndarray, u: np.ndarray, qubits: Sequence[int], n: int) -> np.ndarray:
    """Left-multiply the first axis of ``tensor`` by ``u`` acting on ``qubits``.

    ``tensor`` has shape ``(2**n, ...)``; trailing axes (density columns,
    trajectory batch, identity columns) ride along untouched.  Bit ``i`` of
    ``u``'s index refers to ``qubits[i]``.
    """
    m = len(qubits)
    rest = tensor.shape[1:]
    t = tensor.reshape((2,) * n + rest)
    ut = np.asarray(u).reshape((2,) * (2 * m))
    # u axis j (C order) is bit m-1-j, i.e. qubit qubits[m-1-j]
    axes = [n - 1 - qubits[m - 1 - j] for j in range(m)]
    out = np.tensordot(ut, t, axes=(list(range(m, 2 * m)), axes))
    out = np.moveaxis(out, list(range(m)), axes)
    return out.reshape(tensor.shape)


def embed_unitary(u, targets: Sequence[int], n_total: int) -> np.ndarray:
    """Full ``2**n_total`` matrix acting as ``u`` on ``targets``."""
    u = np.asarray(u, dtype=complex)
    targets = _check_qubits(targets, n_total)
    if u.shape != (1 << len(targets), 1 << len(targets)):
        raise ValueError(f"matrix of shape {u.shape} does not act on {len(targets)} qubits")
    return apply_local(np.eye(1 << n_total, dtype=complex), u, targets, n_total)


def conjugate_density(rho: np.ndarray, u: np.ndarray, qubits: Sequence[int], n: int) -> np.ndarray:
    """Return ``U rho U^dagger`` with ``u`` acting on ``qubits``."""
    half = apply_local(rho, u, qubits, n)
    return apply_local(half.conj().T, u, qubits, n).conj().T


def twirl(rho: np.ndarray, qubits: Sequence[int], n: int) -> np.ndarray:
    """Replace ``qubits`` by the maximally mixed state: ``I/2^m (x) tr_q(rho)``."""
    t = rho.reshape((2,) * (2 * n))
    for q in qubits:
        r, c = n - 1 - q, 2 * n - 1 - q
        traced = np.take(np.take(t, 0, axis=r), 0, axis=c - 1) + np.take(np.take(t, 1, axis=r), 1, axis=c - 1)
        t = np.expand_dims(np.expand_dims(traced, r), c)
        shape = [1] * (2 * n)
        shape[r] = shape[c] = 2
        t = t * (np.eye(2) / 2).reshape(shape)
    return t.reshape(rho.shape)


def partial_trace(rho: np.ndarray, keep: Sequence[int], n: int) -> np.ndarray:
    """Reduced density matrix on ``keep``; kept qubits are renumbered by rank."""
    keep = sorted(_check_qubits(keep, n))
    t = rho.reshape((2,) * (2 * n))
    m = n
    for q in sorted(set(range(n)) - set(keep), reverse=True):
        # tracing from the top down, every lower qubit is still present, so q has rank q
        t = np.trace(t, axis1=m - 1 - q, axis2=2 * m - 1 - q)
        m -= 1
    d = 1 << len(keep)
    return t.reshape(d, d)


@dataclass(frozen=True)
class StateVector:
    amplitudes: np.ndarray
    register_layout: tuple[str, ...] = ()

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        norm = float(np.vdot(amps, amps).real)
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state norm {norm} differs from 1")
        object.__setattr__(self, "amplitudes", amps)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    @property
    def n_qubits(self) -> int:
        return n_qubits_of(self.dim)

    @classmethod
    def basis(cls, index: int, dim: int, register_layout: tuple[str, ...] = ()) -> StateVector:
        amps = np.zeros(dim, dtype=complex)
        amps[index] = 1.0
        return cls(amps, register_layout)

    @classmethod
    def from_qubits(cls, *factors: Sequence[complex]) -> StateVector:
        """Product state; ``factors[0]`` is qubit 0."""
        amps = np.ones(1, dtype=complex)
        for f in factors:
            amps = kron(np.asarray(f, dtype=complex), amps)
        return cls(amps)

    def evolve(self, u) -> StateVector:
        return StateVector(np.asarray(u) @ self.amplitudes, self.register_layout)

    def tensor(self, other: StateVector) -> StateVector:
        """``other (x) self``: ``self`` keeps the low qubit indices."""
        return StateVector(kron(other.amplitudes, self.amplitudes), self.register_layout + other.register_layout)


@dataclass(frozen=True)
class DensityMatrix:
    data: np.ndarray

    def __post_init__(self):
        rho = np.asarray(self.data, dtype=complex)
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
            raise ValueError("density matrix must be square")
        object.__setattr__(self, "data", rho)

    @property
    def dim(self) -> int:
        return self.data.shape[0]

    @property
    def n_qubits(self) -> int:
        return n_qubits_of(self.dim)

    @classmethod
    def from_state(cls, state: StateVector | np.ndarray) -> DensityMatrix:
        amps = state.amplitudes if isinstance(state, StateVector) else np.asarray(state, dtype=complex)
        return cls(np.outer(amps, amps.conj()))

    def check(self, tol: float = 1e-9) -> None:
        rho = self.data
        if np.max(np.abs(rho - rho.conj().T)) > 10 * UNITARY_TOL:
            raise ValueError("density matrix is not Hermitian")
        if abs(np.trace(rho).real - 1.0) > tol:
            raise ValueError(f"trace {np.trace(rho).real} differs from 1")
        if np.linalg.eigvalsh(rho).min() < -tol:
            raise ValueError("density matrix has a negative eigenvalue")


@dataclass(frozen=True)
class Distribution:
    """Probability distribution over integer outcome labels, sorted by label."""

    probs: Mapping[int, float] = field(default_factory=dict)

    def __post_init__(self):
        items = {int(k): float(v) for k, v in dict(self.probs).items()}
        if any(v < -CLAMP_TOL for v in items.values()):
            raise ValueError("negative probability")
        items = {k: (0.0 if v < CLAMP_TOL else v) for k, v in items.items()}
        total = sum(items.values())
        if total <= 0:
            raise ValueError("distribution has no mass")
        if abs(total - 1.0) > 1e-6:
            raise ValueError(f"probabilities sum to {total}")
        object.__setattr__(self, "probs", {k: items[k] / total for k in sorted(items)})

    @classmethod
    def from_array(cls, p: Iterable[float]) -> Distribution:
        return cls(dict(enumerate(np.asarray(list(p), dtype=float))))

    @classmethod
    def from_counts(cls, counts: Mapping[int, int]) -> Distribution:
        total = sum(counts.values())
        if total <= 0:
            raise ValueError("no counts")
        return cls({k: v / total for k, v in counts.items()})

    @property
    def outcomes(self) -> tuple[int, ...]:
        return tuple(self.probs)

    @property
    def probabilities(self) -> tuple[float, ...]:
        return tuple(self.probs.values())

    def __getitem__(self, outcome: int) -> float:
        return self.probs.get(int(outcome), 0.0)

    def __len__(self) -> int:
        return len(self.probs)

    def __iter__(self):
        return iter(self.probs.items())

    def as_array(self, size: int | None = None) -> np.ndarray:
        size = size if size is not None else max(self.probs) + 1
        out = np.zeros(size)
        for k, v in self.probs.items():
            out[k] = v
        return out

    def to_dict(self) -> dict[int, float]:
        return dict(self.probs)


def _marginal(diag: np.ndarray, measured: Sequence[int], n: int) -> np.ndarray:
    t = diag.reshape((2,) * n)
    keep = [n - 1 - q for q in measured]
    drop = tuple(a for a in range(n) if a not in keep)
    m = t.sum(axis=drop) if drop else t
    # remaining axes are in increasing tensor-axis order; reorder so that measured[i] is bit i
    remaining = sorted(keep)
    order = [remaining.index(n - 1 - measured[len(measured) - 1 - j]) for j in range(len(measured))]
    return np.transpose(m, order).reshape(-1) if measured else np.array([m.sum()])


def probabilities(state: StateVector | DensityMatrix | np.ndarray, measured: Sequence[int] | None = None) -> Distribution:
    """Born-rule marginal over ``measured`` qubits (bit ``i`` of an outcome is ``measured[i]``)."""
    if isinstance(state, DensityMatrix):
        diag = np.real(np.diag(state.data))
    elif isinstance(state, StateVector):
        diag = np.abs(state.amplitudes) ** 2
    else:
        arr = np.asarray(state)
        diag = np.real(np.diag(arr)) if arr.ndim == 2 else np.abs(arr) ** 2
    n = n_qubits_of(diag.size)
    measured = tuple(range(n)) if measured is None else _check_qubits(measured, n)
    return Distribution.from_array(np.clip(_marginal(diag, measured, n), 0.0, None))


def sample_counts(dist: Distribution, shots: int, seed: int = 0) -> dict[int, int]:
    """Multinomial sample of ``shots`` outcomes; zero-count outcomes are kept."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    rng = np.random.default_rng(seed)
    counts = rng.multinomial(shots, np.asarray(dist.probabilities))
    return {k: int(c) for k, c in zip(dist.outcomes, counts)}
