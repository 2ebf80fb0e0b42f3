"""Assignment type, objective, feasibility checks and greedy initialization."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..data import LabelCounts
from ..losses import CostMatrix


class InfeasibleCounts(ValueError):
    """Label counts that cannot be met by the given examples."""


def _values(C) -> np.ndarray:
    if isinstance(C, CostMatrix):
        return C.values
    return np.asarray(C, dtype=np.float64)


def _counts(counts) -> np.ndarray:
    if isinstance(counts, LabelCounts):
        return counts.as_array()
    return np.asarray(counts, dtype=np.int64)


def check_counts(n: int, counts) -> np.ndarray:
    counts = _counts(counts)
    if np.any(counts < 0):
        raise InfeasibleCounts("negative label count")
    if int(counts.sum()) != n:
        raise InfeasibleCounts(f"label counts sum to {int(counts.sum())}, expected {n}")
    return counts


def assignment_objective(C, labels) -> float:
    """Sum of ``C[i, labels[i]]``, added sequentially in ascending i."""
    vals = _values(C)[np.arange(len(labels)), np.asarray(labels, dtype=np.int64)]
    return float(np.cumsum(vals)[-1]) if vals.size else 0.0


@dataclass(frozen=True, eq=False)
class Assignment:
    """Labels of the unlabeled examples plus their summed cost.

    ``info`` carries solver diagnostics (iteration counts, switch logs).
    """

    label_of: np.ndarray
    n_classes: int
    objective: float = float("nan")
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        labels = np.array(self.label_of, dtype=np.int64)
        if labels.ndim != 1:
            raise ValueError("label_of must be 1-d")
        if labels.size and (labels.min() < 0 or labels.max() >= self.n_classes):
            raise ValueError("label out of range")
        labels.setflags(write=False)
        object.__setattr__(self, "label_of", labels)

    @classmethod
    def from_labels(cls, labels, C, n_classes: int | None = None, **info) -> "Assignment":
        vals = _values(C)
        m = vals.shape[1] if n_classes is None else n_classes
        return cls(labels, m, assignment_objective(vals, labels), dict(info))

    @property
    def n(self) -> int:
        return int(self.label_of.size)

    @property
    def class_members(self) -> list[np.ndarray]:
        return [np.flatnonzero(self.label_of == y) for y in range(self.n_classes)]

    @property
    def class_counts(self) -> np.ndarray:
        return np.bincount(self.label_of, minlength=self.n_classes)

    def satisfies(self, counts) -> bool:
        return np.array_equal(self.class_counts, _counts(counts))


def greedy_init(scores, counts) -> Assignment:
    """Rank-and-fill labels that respect the class counts exactly.

    Each round, every unallocated example proposes its best-scoring class
    among those not yet full; proposals are taken in decreasing score order
    until classes fill up; rejected examples try again next round. Classes
    with a zero count are full from the start. Score ties go to the lower
    class, ordering ties to the lower example index.
    """
    S = np.asarray(scores, dtype=np.float64)
    n, m = S.shape
    room = check_counts(n, counts).copy()
    labels = np.full(n, -1, dtype=np.int64)
    pending = np.arange(n)
    rounds = 0
    while pending.size:
        rounds += 1
        open_cls = np.flatnonzero(room > 0)
        sub = S[np.ix_(pending, open_cls)]
        pick = np.argmax(sub, axis=1)
        best = sub[np.arange(pending.size), pick]
        choice = open_cls[pick]
        # allocation to a class depends only on the order among its own proposers
        order = np.argsort(-best, kind="stable")
        for y in open_cls:
            want = order[choice[order] == y]
            take = pending[want[:room[y]]]
            labels[take] = y
            room[y] -= take.size
        pending = pending[labels[pending] < 0]
    return Assignment(labels, m, info={"rounds": rounds})
