"""Gate-level circuits: representation, building blocks, execution, depth.

A :class:`Circuit` is an immutable gate list over ``n_qubits`` with named
registers.  Building blocks return a new circuit with gates appended.
"""

from __future__ import annotations

from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field, replace

import numpy as np

from . import qmath
from .qmath import UNITARY_TOL, Distribution, StateVector, apply_local, is_unitary
from .walk import CoinParams, coin_operator, diagonal_phase_angles, diagonalize_shift, increment, qft_matrix

MAX_UNITARY_QUBITS = 12

_FIXED = {"h": qmath.H, "x": qmath.X, "y": qmath.Y, "z": qmath.Z}
_KINDS = {"h", "x", "y", "z", "p", "u", "cx", "cz", "cp", "cu", "swap"}
_CONTROLLED = {"cx": "x", "cz": "z", "cp": "p", "cu": "u"}
_SWAP = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex)


@dataclass(frozen=True)
class Gate:
    """One gate.  ``kind`` is one of h, x, y, z, p, u, cx, cz, cp, cu, swap.

    Controlled kinds carry exactly one control.  ``p``/``cp`` take one angle;
    ``u``/``cu`` take an explicit 2x2 unitary.
    """

    kind: str
    targets: tuple[int, ...]
    controls: tuple[int, ...] = ()
    params: tuple[float, ...] = ()
    matrix: np.ndarray | None = field(default=None, compare=False)
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(int(q) for q in self.targets))
        object.__setattr__(self, "controls", tuple(int(q) for q in self.controls))
        object.__setattr__(self, "params", tuple(float(v) for v in self.params))
        if self.kind not in _KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        n_t = 2 if self.kind == "swap" else 1
        n_c = 1 if self.kind in _CONTROLLED else 0
        if len(self.targets) != n_t or len(self.controls) != n_c:
            raise ValueError(f"{self.kind} needs {n_t} target(s) and {n_c} control(s)")
        if len(set(self.qubits)) != len(self.qubits):
            raise ValueError(f"{self.kind} has overlapping qubits {self.qubits}")
        if self.kind in ("p", "cp") and len(self.params) != 1:
            raise ValueError(f"{self.kind} needs one angle")
        if self.kind in ("u", "cu"):
            if self.matrix is None:
                raise ValueError(f"{self.kind} needs a matrix")
            m = np.asarray(self.matrix, dtype=complex)
            if m.shape != (2, 2) or not is_unitary(m, UNITARY_TOL):
                raise ValueError("explicit gate matrix must be a 2x2 unitary")
            object.__setattr__(self, "matrix", m)

    @property
    def qubits(self) -> tuple[int, ...]:
        """Targets first, then controls; bit ``i`` of :meth:`local_matrix` is ``qubits[i]``."""
        return self.targets + self.controls

    def base_matrix(self) -> np.ndarray:
        base = _CONTROLLED.get(self.kind, self.kind)
        if base == "swap":
            return _SWAP
        if base == "p":
            return qmath.phase(self.params[0])
        if base == "u":
            return self.matrix
        return _FIXED[base]

    def local_matrix(self) -> np.ndarray:
        base = self.base_matrix()
        if not self.controls:
            return base
        u = np.eye(4, dtype=complex)
        u[2:, 2:] = base
        return u

    def inverse(self) -> Gate:
        if self.kind in ("p", "cp"):
            return replace(self, params=(-self.params[0],))
        if self.kind in ("u", "cu"):
            return replace(self, matrix=self.matrix.conj().T)
        return self

    def remap(self, mapping: Mapping[int, int] | Sequence[int]) -> Gate:
        return replace(
            self,
            targets=tuple(mapping[q] for q in self.targets),
            controls=tuple(mapping[q] for q in self.controls),
        )


def h(q: int) -> Gate:
    return Gate("h", (q,))


def x(q: int) -> Gate:
    return Gate("x", (q,))


def p(q: int, theta: float) -> Gate:
    return Gate("p", (q,), params=(theta,))


def u(q: int, matrix, label: str = "") -> Gate:
    return Gate("u", (q,), matrix=matrix, label=label)


def cx(control: int, target: int) -> Gate:
    return Gate("cx", (target,), (control,))


def cz(control: int, target: int) -> Gate:
    return Gate("cz", (target,), (control,))


def cp(control: int, target: int, theta: float) -> Gate:
    return Gate("cp", (target,), (control,), (theta,))


def swap(a: int, b: int) -> Gate:
    return Gate("swap", (a, b))


@dataclass(frozen=True)
class Circuit:
    n_qubits: int
    gates: tuple[Gate, ...] = ()
    registers: Mapping[str, tuple[int, ...]] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        object.__setattr__(self, "registers", {k: tuple(v) for k, v in dict(self.registers).items()})
        for g in self.gates:
            self._check(g)
        for name, qs in self.registers.items():
            for q in qs:
                if not 0 <= q < self.n_qubits:
                    raise ValueError(f"register {name} uses qubit {q} outside the circuit")

    def _check(self, g: Gate) -> None:
        for q in g.qubits:
            if not 0 <= q < self.n_qubits:
                raise ValueError(f"gate {g.kind} on qubit {q} outside a {self.n_qubits}-qubit circuit")

    def __len__(self) -> int:
        return len(self.gates)

    def register(self, name: str) -> tuple[int, ...]:
        try:
            return self.registers[name]
        except KeyError:
            raise KeyError(f"no register named {name!r}") from None

    def extend(self, gates: Sequence[Gate]) -> Circuit:
        gates = tuple(gates)
        for g in gates:
            self._check(g)
        return Circuit(self.n_qubits, self.gates + gates, self.registers)

    def compose(self, other: Circuit) -> Circuit:
        if other.n_qubits != self.n_qubits:
            raise ValueError("cannot compose circuits of different widths")
        return self.extend(other.gates)

    def inverse(self) -> Circuit:
        return Circuit(self.n_qubits, tuple(g.inverse() for g in reversed(self.gates)), self.registers)


def append_gate(c: Circuit, g: Gate) -> Circuit:
    return c.extend((g,))


def _apply_gates(tensor: np.ndarray, gates: Sequence[Gate], n: int) -> np.ndarray:
    for g in gates:
        tensor = apply_local(tensor, g.local_matrix(), g.qubits, n)
    return tensor


def unitary_of(c: Circuit) -> np.ndarray:
    """Ordered product of the gates; the first gate is the rightmost factor."""
    if c.n_qubits > MAX_UNITARY_QUBITS:
        raise ValueError(f"unitary_of supports at most {MAX_UNITARY_QUBITS} qubits")
    return _apply_gates(np.eye(1 << c.n_qubits, dtype=complex), c.gates, c.n_qubits)


def evolve_statevector(c: Circuit, init: StateVector | np.ndarray) -> np.ndarray:
    amps = init.amplitudes if isinstance(init, StateVector) else np.asarray(init, dtype=complex)
    if amps.size != 1 << c.n_qubits:
        raise ValueError(f"initial state of dimension {amps.size} does not fit {c.n_qubits} qubits")
    return _apply_gates(amps.copy(), c.gates, c.n_qubits)


# -- building blocks -------------------------------------------------------


def qft_gates(qubits: Sequence[int], inverse: bool = False) -> list[Gate]:
    """QFT on ``qubits`` (``qubits[0]`` least significant), bit reversal included."""
    qubits = list(qubits)
    if not qubits:
        raise ValueError("QFT needs at least one qubit")
    n = len(qubits)
    gates: list[Gate] = []
    for j in range(n - 1, -1, -1):
        gates.append(h(qubits[j]))
        for m in range(j - 1, -1, -1):
            gates.append(cp(qubits[m], qubits[j], np.pi / 2 ** (j - m)))
    for i in range(n // 2):
        gates.append(swap(qubits[i], qubits[n - 1 - i]))
    if inverse:
        gates = [g.inverse() for g in reversed(gates)]
    return gates


def qft_block(c: Circuit, position_qubits: Sequence[int], inverse: bool = False) -> Circuit:
    return c.extend(qft_gates(position_qubits, inverse))


def _phase_gates(diag: np.ndarray, qubits: Sequence[int], control: int | None = None) -> list[Gate]:
    angles = diagonal_phase_angles(diag)
    if len(angles) != len(qubits):
        raise ValueError("diagonal size does not match register")
    gates = []
    for q, theta in zip(qubits, angles):
        if abs(np.exp(1j * theta) - 1) <= UNITARY_TOL:
            continue
        gates.append(p(q, theta) if control is None else cp(control, q, theta))
    return gates


def fourier_step_gates(coin: CoinParams | np.ndarray, position_qubits: Sequence[int], coin_qubit: int, label: str = "") -> list[Gate]:
    """One walk step in the Fourier frame: coin, ``R^dagger`` phases, coin-controlled ``R^2``.

    The phase angles come from diagonalizing the increment shift for this
    register size.
    """
    n = len(position_qubits)
    if n != 2:
        raise ValueError("Fourier-frame walk steps are built for the 4-cycle (2 position qubits)")
    K = 1 << n
    r = diagonalize_shift(increment(K), qft_matrix(K))
    cmat = coin_operator(coin) if isinstance(coin, CoinParams) else np.asarray(coin, dtype=complex)
    gates = [u(coin_qubit, cmat, label)]
    gates += _phase_gates(r.conj(), position_qubits)
    gates += _phase_gates(r @ r, position_qubits, control=coin_qubit)
    return gates


def walk_step_block(c: Circuit, coin: CoinParams | np.ndarray, position_qubits: Sequence[int], coin_qubit: int, label: str = "") -> Circuit:
    return c.extend(fourier_step_gates(coin, position_qubits, coin_qubit, label))


def _check_registers(*regs: Sequence[int]) -> None:
    lengths = {len(r) for r in regs}
    if len(lengths) != 1:
        raise ValueError(f"register lengths differ: {[len(r) for r in regs]}")
    flat = [q for r in regs for q in r]
    if len(set(flat)) != len(flat):
        raise ValueError("registers overlap")


def swap_transfer_gates(src: Sequence[int], dst: Sequence[int]) -> list[Gate]:
    _check_registers(src, dst)
    return [swap(a, b) for a, b in zip(src, dst)]


def swap_transfer_block(c: Circuit, src: Sequence[int], dst: Sequence[int]) -> Circuit:
    return c.extend(swap_transfer_gates(src, dst))


def teleport_gates(source: Sequence[int], ancilla: Sequence[int], target: Sequence[int]) -> list[Gate]:
    """Coherent teleportation ``source -> target``; ancilla and target start in |0>.

    Corrections are CNOT(ancilla -> target) and CZ(source -> target) instead
    of measurement and feed-forward.  Stages run across all qubit triples.
    """
    _check_registers(source, ancilla, target)
    trip = list(zip(source, ancilla, target))
    gates: list[Gate] = []
    gates += [h(a) for _, a, _ in trip]
    gates += [cx(a, t) for _, a, t in trip]
    gates += [cx(s, a) for s, a, _ in trip]
    gates += [h(s) for s, _, _ in trip]
    gates += [cx(a, t) for _, a, t in trip]
    gates += [cz(s, t) for s, _, t in trip]
    return gates


def teleport_block(c: Circuit, source: Sequence[int], ancilla: Sequence[int], target: Sequence[int]) -> Circuit:
    return c.extend(teleport_gates(source, ancilla, target))


# -- depth -----------------------------------------------------------------


@dataclass(frozen=True)
class DepthReport:
    depth: int
    gate_count: int
    two_qubit_count: int
    swap_count: int

    def to_dict(self) -> dict:
        return {
            "depth": self.depth,
            "gate_count": self.gate_count,
            "two_qubit_count": self.two_qubit_count,
            "swap_count": self.swap_count,
        }


def depth_report(c: Circuit) -> DepthReport:
    """Greedy ASAP layering: each gate lands one layer after the latest of its qubits."""
    level = [0] * c.n_qubits
    depth = 0
    for g in c.gates:
        layer = max(level[q] for q in g.qubits) + 1
        for q in g.qubits:
            level[q] = layer
        depth = max(depth, layer)
    two = sum(1 for g in c.gates if len(g.qubits) >= 2)
    swaps = sum(1 for g in c.gates if g.kind == "swap")
    return DepthReport(depth, len(c.gates), two, swaps)


# -- execution -------------------------------------------------------------


def run(
    c: Circuit,
    init: StateVector | np.ndarray,
    noise=None,
    shots: int | None = None,
    seed: int = 0,
    measured: Sequence[int] | None = None,
) -> Distribution | dict[int, int]:
    """Execute ``c`` from ``init`` and return the marginal over ``measured``.

    Noiseless runs evolve the statevector.  With a :class:`~.noise.NoiseSpec`
    the density matrix is evolved exactly, or, when the spec asks for
    trajectories and ``shots`` is given, Pauli errors are sampled per shot.
    With ``shots`` the result is a count dictionary.
    """
    from . import noise as _noise

    if noise is None or noise.is_trivial():
        dist = qmath.probabilities(evolve_statevector(c, init), measured)
    elif noise.trajectory and shots is not None:
        return _noise.trajectory_sample(c, noise, init, shots, measured, seed)
    else:
        dist = qmath.probabilities(_noise.apply_noise_to_run(c, noise, init), measured)
    if shots is None:
        return dist
    return qmath.sample_counts(dist, shots, seed)


# -- text serialization ----------------------------------------------------


def _fmt_complex(z: complex) -> str:
    return f"{float(z.real)!r}{float(z.imag):+.17g}j"


def dumps(c: Circuit) -> str:
    """One gate per line: ``kind t=.. [c=..] [theta=..] [m=..] [label=..]``."""
    lines = [f"qubits {c.n_qubits}"]
    for name, qs in c.registers.items():
        lines.append(f"register {name} {','.join(map(str, qs))}")
    for g in c.gates:
        parts = [g.kind, "t=" + ",".join(map(str, g.targets))]
        if g.controls:
            parts.append("c=" + ",".join(map(str, g.controls)))
        if g.params:
            parts.append("theta=" + ",".join(repr(float(v)) for v in g.params))
        if g.matrix is not None:
            parts.append("m=" + ",".join(_fmt_complex(z) for z in g.matrix.reshape(-1)))
        if g.label:
            parts.append("label=" + g.label)
        lines.append(" ".join(parts))
    return "\n".join(lines) + "\n"


def loads(text: str) -> Circuit:
    n = None
    registers: dict[str, tuple[int, ...]] = {}
    gates: list[Gate] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head, *rest = line.split()
        try:
            if head == "qubits":
                n = int(rest[0])
                continue
            if head == "register":
                registers[rest[0]] = tuple(int(v) for v in rest[1].split(",")) if len(rest) > 1 else ()
                continue
            fields = dict(item.split("=", 1) for item in rest)
            targets = tuple(int(v) for v in fields["t"].split(","))
            controls = tuple(int(v) for v in fields["c"].split(",")) if "c" in fields else ()
            params = tuple(float(v) for v in fields["theta"].split(",")) if "theta" in fields else ()
            matrix = None
            if "m" in fields:
                matrix = np.array([complex(v) for v in fields["m"].split(",")]).reshape(2, 2)
            gates.append(Gate(head, targets, controls, params, matrix, fields.get("label", "")))
        except (KeyError, ValueError, IndexError) as exc:
            raise ValueError(f"line {lineno}: cannot parse {raw!r}: {exc}") from exc
    if n is None:
        raise ValueError("missing 'qubits N' header")
    return Circuit(n, tuple(gates), registers)
