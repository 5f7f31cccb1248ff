"""Coupling graphs and a greedy shortest-path SWAP router.

The router keeps gate order and module tags; for each two-qubit gate whose
operands are not adjacent it walks the first operand toward the second
along a BFS shortest path (lowest-numbered neighbour first), one SWAP per
hop.  It is intentionally simple: depth and SWAP counts are the outputs of
interest, not an emulation of any vendor transpiler.
"""

from __future__ import annotations

import csv
import io
import warnings
from collections import deque
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from pathlib import Path

from . import circuit as cm
from .circuit import Circuit, DepthReport, depth_report

MODULE_TAGS = ("alice", "bob", "ancilla", "eve")


@dataclass(frozen=True)
class CouplingGraph:
    n_physical: int
    edges: tuple[tuple[int, int], ...]
    name: str = "graph"

    def __post_init__(self):
        if self.n_physical < 1:
            raise ValueError("a coupling graph needs at least one node")
        norm = set()
        for u, v in self.edges:
            u, v = int(u), int(v)
            if u == v:
                raise ValueError(f"self-loop on node {u}")
            if not (0 <= u < self.n_physical and 0 <= v < self.n_physical):
                raise ValueError(f"edge ({u}, {v}) references a node outside 0..{self.n_physical - 1}")
            norm.add((min(u, v), max(u, v)))
        object.__setattr__(self, "edges", tuple(sorted(norm)))
        adj: list[list[int]] = [[] for _ in range(self.n_physical)]
        for u, v in self.edges:
            adj[u].append(v)
            adj[v].append(u)
        object.__setattr__(self, "_adj", tuple(tuple(sorted(a)) for a in adj))
        if not self.is_connected():
            warnings.warn(f"coupling graph {self.name!r} is not connected", stacklevel=2)

    def neighbors(self, q: int) -> tuple[int, ...]:
        return self._adj[q]

    def adjacent(self, a: int, b: int) -> bool:
        return b in self._adj[a]

    def degree(self, q: int) -> int:
        return len(self._adj[q])

    def is_connected(self) -> bool:
        seen = {0}
        todo = [0]
        while todo:
            for v in self._adj[todo.pop()]:
                if v not in seen:
                    seen.add(v)
                    todo.append(v)
        return len(seen) == self.n_physical

    def shortest_path(self, src: int, dst: int) -> list[int]:
        """BFS path ``src .. dst``; neighbours are explored in increasing order."""
        parent = {src: src}
        queue = deque([src])
        while queue:
            u = queue.popleft()
            if u == dst:
                break
            for v in self._adj[u]:
                if v not in parent:
                    parent[v] = u
                    queue.append(v)
        if dst not in parent:
            raise ValueError(f"physical qubits {src} and {dst} are not connected")
        path = [dst]
        while path[-1] != src:
            path.append(parent[path[-1]])
        return path[::-1]

    def with_edges(self, extra: Iterable[tuple[int, int]], name: str | None = None) -> CouplingGraph:
        return CouplingGraph(self.n_physical, self.edges + tuple(extra), name or self.name)

    def to_edge_list(self) -> str:
        lines = [f"# {self.name}"] + [f"{u} {v}" for u, v in self.edges]
        return "\n".join(lines) + "\n"


def line(n: int) -> CouplingGraph:
    return CouplingGraph(n, tuple((i, i + 1) for i in range(n - 1)), f"line({n})")


def ring(n: int) -> CouplingGraph:
    if n < 3:
        raise ValueError("a ring needs at least 3 nodes")
    return CouplingGraph(n, tuple((i, (i + 1) % n) for i in range(n)), f"ring({n})")


def complete(n: int) -> CouplingGraph:
    return CouplingGraph(n, tuple((i, j) for i in range(n) for j in range(i + 1, n)), f"complete({n})")


def heavy_hex(rows: int, cols: int) -> CouplingGraph:
    """Heavy-hex style lattice: ``rows`` lines of ``cols`` qubits joined by bridge qubits.

    Between row ``r`` and ``r + 1`` a bridge sits under every column with
    ``c % 4 == 0`` (even ``r``) or ``c % 4 == 2`` (odd ``r``; column 0 when
    the rows are only two wide).  Row qubits are numbered first, row by row;
    bridges follow.
    """
    if rows < 1 or cols < 2:
        raise ValueError("heavy_hex needs rows >= 1 and cols >= 2")
    edges = [(r * cols + c, r * cols + c + 1) for r in range(rows) for c in range(cols - 1)]
    nxt = rows * cols
    for r in range(rows - 1):
        offset = 0 if r % 2 == 0 or cols < 3 else 2
        for c in range(offset, cols, 4):
            edges += [(r * cols + c, nxt), (nxt, (r + 1) * cols + c)]
            nxt += 1
    return CouplingGraph(nxt, tuple(edges), f"heavy-hex({rows},{cols})")


def _numbers(line_no: int, text: str, count: int) -> list[str]:
    parts = text.split()
    if len(parts) != count:
        raise ValueError(f"line {line_no}: expected {count} fields, got {len(parts)}")
    return parts


def _int(line_no: int, token: str) -> int:
    try:
        value = int(token)
    except ValueError:
        raise ValueError(f"line {line_no}: {token!r} is not an integer") from None
    if value < 0:
        raise ValueError(f"line {line_no}: negative qubit index {value}")
    return value


def _content_lines(text: str):
    for i, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0].strip()
        if body:
            yield i, body


def parse_edge_list(text: str, name: str = "edge-list", n_physical: int | None = None) -> CouplingGraph:
    """``u v`` pairs, one per line, ``#`` starts a comment."""
    edges = []
    for i, body in _content_lines(text):
        u, v = (_int(i, t) for t in _numbers(i, body, 2))
        if u == v:
            raise ValueError(f"line {i}: self-loop on node {u}")
        edges.append((u, v))
    if not edges:
        raise ValueError("edge list is empty")
    n = max(max(e) for e in edges) + 1
    return CouplingGraph(max(n, n_physical or 0), tuple(edges), name)


def load_graph(source: str | Path) -> CouplingGraph:
    """Bundled generator spec (``line:5``, ``heavy-hex:3,9``) or an edge-list file."""
    text = str(source)
    kind, sep, args = text.partition(":")
    generators = {"line": line, "ring": ring, "complete": complete, "heavy-hex": heavy_hex}
    if sep and kind in generators:
        try:
            nums = [int(a) for a in args.split(",")]
        except ValueError:
            raise ValueError(f"bad generator arguments in {text!r}") from None
        return generators[kind](*nums)
    path = Path(source)
    return parse_edge_list(path.read_text(), name=path.stem)


@dataclass(frozen=True)
class LayoutAssignment:
    logical_to_physical: tuple[int, ...]
    module_tags: tuple[str, ...] = ()

    def __post_init__(self):
        l2p = tuple(int(p) for p in self.logical_to_physical)
        object.__setattr__(self, "logical_to_physical", l2p)
        if len(set(l2p)) != len(l2p):
            raise ValueError(f"layout is not injective: {l2p}")
        tags = tuple(self.module_tags) or ("",) * len(l2p)
        if len(tags) != len(l2p):
            raise ValueError("one module tag per logical qubit is required")
        object.__setattr__(self, "module_tags", tags)

    def __len__(self) -> int:
        return len(self.logical_to_physical)

    def validate(self, g: CouplingGraph) -> None:
        for p in self.logical_to_physical:
            if not 0 <= p < g.n_physical:
                raise ValueError(f"physical qubit {p} does not exist in {g.name}")

    @classmethod
    def from_modules(cls, modules: Mapping[str, Sequence[int]], registers: Mapping[str, Sequence[int]]) -> LayoutAssignment:
        """Place each named logical register on the given physical qubits."""
        placed: dict[int, tuple[int, str]] = {}
        for name, phys in modules.items():
            logical = registers[name]
            if len(logical) != len(phys):
                raise ValueError(f"module {name}: {len(logical)} logical vs {len(phys)} physical qubits")
            for lq, pq in zip(logical, phys):
                placed[lq] = (pq, name)
        n = 1 + max(placed)
        if sorted(placed) != list(range(n)):
            raise ValueError("modules do not cover logical qubits 0..n-1")
        return cls(tuple(placed[i][0] for i in range(n)), tuple(placed[i][1] for i in range(n)))

    def to_text(self) -> str:
        return "".join(f"{lq} {pq} {tag or '-'}\n" for lq, (pq, tag) in enumerate(zip(self.logical_to_physical, self.module_tags)))


def parse_layout(text: str) -> LayoutAssignment:
    """``logical physical module`` triples, one per line."""
    rows: dict[int, tuple[int, str]] = {}
    for i, body in _content_lines(text):
        lq, pq, tag = _numbers(i, body, 3)
        lq, pq = _int(i, lq), _int(i, pq)
        if lq in rows:
            raise ValueError(f"line {i}: logical qubit {lq} assigned twice")
        rows[lq] = (pq, "" if tag == "-" else tag)
    if sorted(rows) != list(range(len(rows))):
        raise ValueError("layout must cover logical qubits 0..n-1")
    n = len(rows)
    return LayoutAssignment(tuple(rows[i][0] for i in range(n)), tuple(rows[i][1] for i in range(n)))


def load_layout(path: str | Path) -> LayoutAssignment:
    return parse_layout(Path(path).read_text())


@dataclass(frozen=True)
class RoutedCircuit:
    circuit: Circuit
    inserted_swaps: int
    initial_layout: LayoutAssignment
    final_permutation: tuple[int, ...]
    depth: DepthReport
    modularity_preserved: bool = True

    def restore_gates(self) -> list[cm.Gate]:
        """SWAPs that bring every logical qubit back to its initial physical qubit."""
        where = list(self.final_permutation)
        occupant = {p: lq for lq, p in enumerate(where)}
        gates = []
        for lq, target in enumerate(self.initial_layout.logical_to_physical):
            cur = where[lq]
            if cur == target:
                continue
            gates.append(cm.swap(cur, target))
            other = occupant.get(target)
            occupant[cur], occupant[target] = other, lq
            where[lq] = target
            if other is not None:
                where[other] = cur
        return gates

    def to_dict(self) -> dict:
        return {
            "inserted_swaps": self.inserted_swaps,
            "initial_layout": list(self.initial_layout.logical_to_physical),
            "final_permutation": list(self.final_permutation),
            "depth": self.depth.to_dict(),
            "modularity_preserved": self.modularity_preserved,
        }


def route(c: Circuit, g: CouplingGraph, layout: LayoutAssignment) -> RoutedCircuit:
    if c.n_qubits > len(layout):
        raise ValueError(f"circuit has {c.n_qubits} qubits but the layout places only {len(layout)}")
    layout.validate(g)
    where = list(layout.logical_to_physical[: c.n_qubits])
    occupant: dict[int, int] = {p: lq for lq, p in enumerate(where)}
    gates: list[cm.Gate] = []
    swaps = 0
    for gate in c.gates:
        qs = gate.qubits
        if len(qs) == 2:
            a = gate.controls[0] if gate.controls else gate.targets[0]
            b = next(q for q in qs if q != a)
            path = g.shortest_path(where[a], where[b])
            # walk a toward b until they are adjacent
            for u, v in zip(path[:-2], path[1:-1]):
                gates.append(cm.swap(u, v))
                swaps += 1
                lu, lv = occupant.get(u), occupant.get(v)
                occupant[u], occupant[v] = lv, lu
                if lu is not None:
                    where[lu] = v
                if lv is not None:
                    where[lv] = u
        elif len(qs) > 2:
            raise ValueError("only one- and two-qubit gates can be routed")
        gates.append(gate.remap({q: where[q] for q in qs}))
    out = Circuit(g.n_physical).extend(gates)
    # tags travel with logical qubits, so module membership is never reassigned
    return RoutedCircuit(out, swaps, layout, tuple(where), depth_report(out), True)


@dataclass(frozen=True)
class LayoutCase:
    name: str
    layout: LayoutAssignment
    circuit: Circuit | None = None
    graph: CouplingGraph | None = None


@dataclass
class LayoutRow:
    name: str
    graph: str
    inserted_swaps: int
    depth: int
    two_qubit_count: int
    gate_count: int
    modularity_preserved: bool = True

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class LayoutComparison:
    rows: list[LayoutRow] = field(default_factory=list)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=list(LayoutRow.__dataclass_fields__), lineterminator="\n")
        w.writeheader()
        for r in self.rows:
            w.writerow(r.to_dict())
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {"rows": [r.to_dict() for r in self.rows]}


def compare_layouts(c: Circuit, g: CouplingGraph, layouts: Sequence[LayoutCase | tuple[str, LayoutAssignment]]) -> LayoutComparison:
    """Route once per case (a case may bring its own circuit or graph); rows sorted by depth."""
    if len(layouts) < 2:
        raise ValueError("compare_layouts needs at least two layouts")
    rows = []
    for case in layouts:
        if not isinstance(case, LayoutCase):
            case = LayoutCase(*case)
        graph = case.graph or g
        r = route(case.circuit or c, graph, case.layout)
        rows.append(LayoutRow(case.name, graph.name, r.inserted_swaps, r.depth.depth, r.depth.two_qubit_count, r.depth.gate_count, r.modularity_preserved))
    rows.sort(key=lambda r: r.depth)
    return LayoutComparison(rows)


BUNDLED_LAYOUTS = ("compact", "separated")


def bundled_layout(name: str, g: CouplingGraph, registers: Mapping[str, Sequence[int]]) -> LayoutAssignment:
    """Named placements of the protocol modules.

    ``compact`` puts logical qubit ``i`` on physical qubit ``i``.
    ``separated`` stretches the modules along a longest BFS path from node
    0: Alice at its start, Bob at its far end, an ancilla module (if any)
    in the middle.
    """
    modules = {m: registers[m] for m in ("alice", "ancilla", "bob", "eve") if m in registers}
    n_logical = sum(len(q) for q in modules.values())
    if n_logical > g.n_physical:
        raise ValueError(f"{g.name} has {g.n_physical} qubits, the circuit needs {n_logical}")
    if name == "compact":
        return LayoutAssignment.from_modules({m: tuple(registers[m]) for m in modules}, modules)
    if name != "separated":
        raise ValueError(f"unknown layout {name!r}; bundled layouts are {BUNDLED_LAYOUTS}")
    dist = {0: 0}
    queue = deque([0])
    while queue:
        u = queue.popleft()
        for v in g.neighbors(u):
            if v not in dist:
                dist[v] = dist[u] + 1
                queue.append(v)
    far = max(sorted(dist), key=lambda q: dist[q])
    path = g.shortest_path(0, far)
    if len(path) < n_logical:
        raise ValueError(f"{g.name} is too small for a separated layout (longest BFS path has {len(path)} nodes)")
    place: dict[str, tuple[int, ...]] = {"alice": tuple(path[:3]), "bob": tuple(path[-3:])}
    rest = [m for m in modules if m not in place]
    mid = len(path) // 2
    for i, m in enumerate(rest):
        start = mid - 1 + 3 * i
        place[m] = tuple(path[start : start + 3])
    used = [q for qs in place.values() for q in qs]
    if len(set(used)) != len(used):
        raise ValueError(f"{g.name} is too small to separate {len(modules)} modules")
    return LayoutAssignment.from_modules(place, modules)
