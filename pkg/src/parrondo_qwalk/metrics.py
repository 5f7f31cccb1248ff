"""Distances between classical outcome distributions.

Inputs may be :class:`Distribution` objects, ``{outcome: p}`` mappings,
count dictionaries or plain sequences (index = outcome).  Distributions on
different supports are compared over the union with zero fill.
"""

from __future__ import annotations

from collections.abc import Mapping, Sequence
from dataclasses import dataclass

import numpy as np

from .qmath import Distribution


def _as_mapping(d) -> dict[int, float]:
    if isinstance(d, Distribution):
        return d.to_dict()
    if isinstance(d, Mapping):
        items = {int(k): float(v) for k, v in d.items()}
    else:
        items = {i: float(v) for i, v in enumerate(d)}
    if any(v < 0 for v in items.values()):
        raise ValueError("negative probability")
    total = sum(items.values())
    if total <= 0:
        raise ValueError("distribution has no mass")
    # counts are turned into frequencies
    return {k: v / total for k, v in items.items()}


def aligned(x, y) -> tuple[np.ndarray, np.ndarray]:
    a, b = _as_mapping(x), _as_mapping(y)
    keys = sorted(set(a) | set(b))
    return np.array([a.get(k, 0.0) for k in keys]), np.array([b.get(k, 0.0) for k in keys])


def bhattacharyya(x, y) -> float:
    a, b = aligned(x, y)
    return float(np.sum(np.sqrt(a * b)))


def hellinger_distance(x, y) -> float:
    a, b = aligned(x, y)
    h2 = 0.5 * float(np.sum((np.sqrt(a) - np.sqrt(b)) ** 2))
    return float(np.sqrt(min(max(h2, 0.0), 1.0)))


def hellinger_fidelity(x, y) -> float:
    """``(1 - h^2)^2``, i.e. the squared Bhattacharyya coefficient."""
    return min(bhattacharyya(x, y), 1.0) ** 2


def total_variation(x, y) -> float:
    a, b = aligned(x, y)
    return 0.5 * float(np.sum(np.abs(a - b)))


def argmax_outcome(x) -> int:
    """Most probable outcome; ties go to the lowest label."""
    m = _as_mapping(x) if not isinstance(x, Distribution) else x.to_dict()
    if not m:
        raise ValueError("empty distribution")
    best = max(m.values())
    return min(k for k, v in m.items() if v == best)


def qber_of(dist, correct: int) -> float:
    """``1 - P(correct)``."""
    m = _as_mapping(dist)
    if int(correct) not in m:
        raise ValueError(f"outcome {correct} is not in the distribution")
    return 1.0 - m[int(correct)]


@dataclass(frozen=True)
class MetricReport:
    hellinger_distance: float
    hellinger_fidelity: float
    tvd: float
    argmax_outcome: int
    qber: float | None = None

    def to_dict(self) -> dict:
        return {
            "hellinger_distance": self.hellinger_distance,
            "hellinger_fidelity": self.hellinger_fidelity,
            "tvd": self.tvd,
            "argmax_outcome": self.argmax_outcome,
            "qber": self.qber,
        }


def compare(reference, observed, correct: int | None = None) -> MetricReport:
    obs = _as_mapping(observed)
    qber = None
    if correct is not None:
        qber = 1.0 - obs.get(int(correct), 0.0)
    return MetricReport(
        hellinger_distance(reference, observed),
        hellinger_fidelity(reference, observed),
        total_variation(reference, observed),
        argmax_outcome(observed),
        qber,
    )


def freeze(dist, size: int | None = None) -> Sequence[float]:
    """Dense probability list, convenient for report files."""
    m = _as_mapping(dist)
    size = size if size is not None else max(m) + 1
    return [m.get(k, 0.0) for k in range(size)]
