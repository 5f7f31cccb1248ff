"""Matrix-level discrete-time quantum walk on a K-cycle.

Coins, shifts, the single-step operator ``W = S (C (x) I)``, Parrondo
sequences, period search and the Fourier-frame forms of the shift and
translation operators.
"""

from __future__ import annotations

from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np

from .qmath import UNITARY_TOL, StateVector, is_unitary, kron, phase

PERIOD_TOL = 1e-6
TRUNCATED_PERIOD_TOL = 5e-3


@dataclass(frozen=True)
class CoinParams:
    s: float
    gamma: float = 0.0
    delta: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.s <= 1.0:
            raise ValueError(f"s={self.s} outside [0, 1]")
        for name in ("gamma", "delta"):
            v = getattr(self, name)
            if not 0.0 <= v <= np.pi:
                raise ValueError(f"{name}={v} outside [0, pi]")


# Parrondo coin pairs: (A, B) periodic on the 4-cycle, (A', B') on the 3-cycle.
COIN_A = CoinParams(0.998489)
COIN_B = CoinParams(0.119545)
COIN_A_PRIME = CoinParams(0.264734)
COIN_B_PRIME = CoinParams(0.801571)


def coin_operator(p: CoinParams) -> np.ndarray:
    rs, rc = np.sqrt(p.s), np.sqrt(1.0 - p.s)
    return np.array(
        [
            [rs, rc * np.exp(1j * p.gamma)],
            [rc * np.exp(1j * p.delta), -rs * np.exp(1j * (p.gamma + p.delta))],
        ],
        dtype=complex,
    )


def _check_cycle(K: int) -> None:
    if int(K) != K or K < 2:
        raise ValueError(f"cycle length must be an integer >= 2, got {K}")


def decrement(K: int) -> np.ndarray:
    """F0: |x> -> |x-1 mod K>."""
    _check_cycle(K)
    return np.roll(np.eye(K, dtype=complex), -1, axis=0)


def increment(K: int) -> np.ndarray:
    """F1: |x> -> |x+1 mod K>."""
    _check_cycle(K)
    return np.roll(np.eye(K, dtype=complex), 1, axis=0)


def shift_operator(K: int) -> np.ndarray:
    _check_cycle(K)
    s = np.zeros((2 * K, 2 * K), dtype=complex)
    s[:K, :K] = decrement(K)
    s[K:, K:] = increment(K)
    return s


def walk_unitary(coin: CoinParams | np.ndarray, K: int) -> np.ndarray:
    """Single-step operator; accepts coin parameters or an explicit 2x2 coin."""
    c = coin_operator(coin) if isinstance(coin, CoinParams) else np.asarray(coin, dtype=complex)
    if c.shape != (2, 2) or not is_unitary(c):
        raise ValueError("coin must be a 2x2 unitary")
    return shift_operator(K) @ kron(c, np.eye(K))


@dataclass(frozen=True)
class WalkerInit:
    theta: float = 0.0
    omega: float = 0.0
    x: int = 0
    K: int = 4

    def __post_init__(self):
        _check_cycle(self.K)
        if not 0 <= self.x < self.K:
            raise ValueError(f"vertex {self.x} outside 0..{self.K - 1}")
        if not 0.0 <= self.theta <= np.pi:
            raise ValueError("theta outside [0, pi]")
        if not 0.0 <= self.omega < 2 * np.pi:
            raise ValueError("omega outside [0, 2pi)")

    def coin_state(self) -> np.ndarray:
        return np.array([np.cos(self.theta / 2), np.exp(1j * self.omega) * np.sin(self.theta / 2)], dtype=complex)

    @classmethod
    def basis(cls, coin: int, x: int, K: int) -> WalkerInit:
        return cls(theta=np.pi if coin else 0.0, omega=0.0, x=x, K=K)


def initial_state(init: WalkerInit) -> StateVector:
    pos = np.zeros(init.K, dtype=complex)
    pos[init.x] = 1.0
    return StateVector(kron(init.coin_state(), pos), ("coin", "position"))


def position_distribution(state: StateVector | np.ndarray, K: int) -> np.ndarray:
    """Marginal over vertices for a coin(x)position amplitude vector."""
    amps = state.amplitudes if isinstance(state, StateVector) else np.asarray(state)
    return (np.abs(amps.reshape(2, K)) ** 2).sum(axis=0)


@dataclass(frozen=True)
class ParrondoSequence:
    coins: Mapping[str, CoinParams]
    pattern: tuple[str, ...]
    K: int

    def __post_init__(self):
        object.__setattr__(self, "pattern", tuple(self.pattern))
        unknown = [lab for lab in self.pattern if lab not in self.coins]
        if unknown:
            raise ValueError(f"unknown coin labels {sorted(set(unknown))}")


def parse_pattern(text: str) -> tuple[str, ...]:
    """Split ``"AABB"`` or ``"A'A'B'B'"`` into labels; a prime binds to the preceding letter."""
    labels: list[str] = []
    for ch in text.replace(" ", "").replace(",", ""):
        if ch == "'":
            if not labels:
                raise ValueError(f"dangling prime in pattern {text!r}")
            labels[-1] += "'"
        else:
            labels.append(ch)
    return tuple(labels)


def sequence_unitary(seq: ParrondoSequence) -> np.ndarray:
    """Time-ordered product; ``pattern[0]`` acts first."""
    if not seq.pattern:
        raise ValueError("empty pattern")
    cache = {lab: walk_unitary(seq.coins[lab], seq.K) for lab in set(seq.pattern)}
    u = np.eye(2 * seq.K, dtype=complex)
    for lab in seq.pattern:
        u = cache[lab] @ u
    return u


@dataclass
class PeriodicityReport:
    period: int | None
    deviation_at_period: float
    eigenvalues: np.ndarray = field(repr=False)
    searched_up_to: int
    best_deviation: float = float("inf")
    best_t: int | None = None

    def to_dict(self) -> dict:
        return {
            "period": self.period,
            "deviation_at_period": self.deviation_at_period,
            "searched_up_to": self.searched_up_to,
            "best_t": self.best_t,
            "best_deviation": self.best_deviation,
            "eigenvalues": [[float(z.real), float(z.imag)] for z in self.eigenvalues],
        }


def find_period(w: np.ndarray, t_max: int, tol: float = PERIOD_TOL) -> PeriodicityReport:
    """Smallest ``T <= t_max`` with ``max|W^T - I| <= tol`` (no global-phase quotient)."""
    w = np.asarray(w, dtype=complex)
    if not is_unitary(w, 10 * UNITARY_TOL):
        raise ValueError("find_period needs a unitary matrix")
    if t_max < 1:
        raise ValueError("t_max must be >= 1")
    eig = np.linalg.eigvals(w)
    ident = np.eye(w.shape[0])
    u = ident.astype(complex)
    best, best_t = float("inf"), None
    for t in range(1, t_max + 1):
        u = w @ u
        dev = float(np.max(np.abs(u - ident)))
        if dev < best:
            best, best_t = dev, t
        if dev <= tol:
            return PeriodicityReport(t, dev, eig, t, best, best_t)
    return PeriodicityReport(None, best, eig, t_max, best, best_t)


def sequence_period(seq: ParrondoSequence, t_max: int | None = None, tol: float = TRUNCATED_PERIOD_TOL) -> PeriodicityReport:
    """Period search over prefixes of the pattern, cycling the pattern if needed.

    ``T`` counts single walk steps, so ``AABB`` repeated five times closing on
    the identity reports ``T = 20``.
    """
    if not seq.pattern:
        raise ValueError("empty pattern")
    t_max = t_max if t_max is not None else len(seq.pattern)
    cache = {lab: walk_unitary(seq.coins[lab], seq.K) for lab in set(seq.pattern)}
    ident = np.eye(2 * seq.K)
    u = ident.astype(complex)
    best, best_t = float("inf"), None
    for t in range(1, t_max + 1):
        u = cache[seq.pattern[(t - 1) % len(seq.pattern)]] @ u
        dev = float(np.max(np.abs(u - ident)))
        if dev < best:
            best, best_t = dev, t
        if dev <= tol:
            return PeriodicityReport(t, dev, np.linalg.eigvals(u), t, best, best_t)
    return PeriodicityReport(None, best, np.linalg.eigvals(u), t_max, best, best_t)


def revival_probability(u: np.ndarray, state: StateVector) -> float:
    """``|<psi| U |psi>|^2``."""
    return float(np.abs(np.vdot(state.amplitudes, u @ state.amplitudes)) ** 2)


def qft_matrix(K: int) -> np.ndarray:
    """``M[j, k] = r^(jk) / sqrt(K)`` with ``r = exp(2 pi i / K)``."""
    _check_cycle(K)
    j = np.arange(K)
    return np.exp(2j * np.pi * np.outer(j, j) / K) / np.sqrt(K)


def diagonalize_shift(f: np.ndarray, m: np.ndarray) -> np.ndarray:
    """Fourier-frame form ``M f M^dagger``; diagonal for F0 and F1."""
    f, m = np.asarray(f, dtype=complex), np.asarray(m, dtype=complex)
    if f.shape != m.shape or f.ndim != 2:
        raise ValueError(f"shape mismatch: shift {f.shape} vs transform {m.shape}")
    d = m @ f @ m.conj().T
    off = d - np.diag(np.diag(d))
    if np.max(np.abs(off)) > UNITARY_TOL:
        raise ValueError("operator is not diagonalized by this transform")
    return np.diag(np.diag(d))


def translation_operator(k: int, K: int) -> np.ndarray:
    """``T_k |x> = |x + k mod K>``."""
    _check_cycle(K)
    if not 0 <= k < K:
        raise ValueError(f"message {k} outside 0..{K - 1}")
    return np.roll(np.eye(K, dtype=complex), k, axis=0)


def diagonal_phase_angles(diag: np.ndarray) -> tuple[float, ...]:
    """Factor a diagonal ``d_j = prod_b exp(i theta_b bit_b(j))`` into per-bit angles.

    Bit 0 is the least significant.  Raises when the diagonal has a global
    phase or is not a product of single-qubit phases.
    """
    d = np.asarray(diag, dtype=complex)
    if d.ndim == 2:
        d = np.diag(d)
    n = int(d.size).bit_length() - 1
    if 1 << n != d.size:
        raise ValueError("diagonal length is not a power of two")
    if abs(d[0] - 1) > UNITARY_TOL:
        raise ValueError("diagonal carries a global phase")
    angles = tuple(float(np.angle(d[1 << b])) for b in range(n))
    rebuilt = np.ones(1, dtype=complex)
    for b in range(n):
        rebuilt = kron(np.array([1.0, np.exp(1j * angles[b])]), rebuilt)
    if np.max(np.abs(rebuilt - d)) > UNITARY_TOL:
        raise ValueError("diagonal is not a product of single-qubit phases")
    return angles


def diagonalized_translation(k: int, K: int = 4) -> tuple[np.ndarray, np.ndarray]:
    """Fourier-frame ``T_k`` on the 4-cycle as ``(high-bit factor, low-bit factor)``.

    ``kron(high, low) == M T_k M^dagger``, the frame in which the walk step is
    diagonal: ``k=1 -> P(pi) (x) P(pi/2)``.
    """
    if K != 4:
        raise ValueError("diagonalized translation is tabulated for the 4-cycle only")
    t = translation_operator(k, K)
    m = qft_matrix(K)
    low, high = diagonal_phase_angles(np.diag(m @ t @ m.conj().T))
    return phase(high), phase(low)


def fourier_walk_power(coin: CoinParams | np.ndarray, K: int, t: int) -> np.ndarray:
    """``W^t`` assembled with one QFT pair around ``[(P0 (x) I + P1 (x) R^2)(C (x) R^dagger)]^t``."""
    c = coin_operator(coin) if isinstance(coin, CoinParams) else np.asarray(coin, dtype=complex)
    m = qft_matrix(K)
    r = diagonalize_shift(increment(K), m)
    p0 = np.diag([1, 0]).astype(complex)
    p1 = np.diag([0, 1]).astype(complex)
    step = (kron(p0, np.eye(K)) + kron(p1, r @ r)) @ kron(c, r.conj().T)
    frame = kron(np.eye(2), m)
    return frame.conj().T @ np.linalg.matrix_power(step, t) @ frame
