"""Per-example losses, their (sub)gradients, and assignment cost matrices.

The large-margin loss uses the 0/1 label loss ``L(y, y') = 1 - [y == y']``:

    xi(w, x, y_true) = max_y [L(y, y_true) + s_y] - s_{y_true}

and the maxent loss is the negative log-likelihood of a softmax over the
leaf scores ``s``. Ties in the margin maximizer go to the lowest leaf.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .data import Dataset, SparseVector
from .model import WeightVector, accumulate_feature, score_all, score_matrix


class LossKind(enum.Enum):
    LargeMargin = "margin"
    Maxent = "maxent"

    @classmethod
    def parse(cls, name) -> "LossKind":
        if isinstance(name, cls):
            return name
        for kind in cls:
            if name in (kind.value, kind.name):
                return kind
        raise ValueError(f"unknown loss {name!r}; expected 'margin' or 'maxent'")


@dataclass(frozen=True, eq=False)
class CostMatrix:
    """``values[i, y]``: loss of giving unlabeled example i the label y."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 2 or v.shape[0] < 1 or v.shape[1] < 1:
            raise ValueError("cost matrix must be a non-empty 2-d array")
        if not np.all(np.isfinite(v)):
            raise ValueError("cost matrix has non-finite entries")
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def m(self) -> int:
        return self.values.shape[1]


# --- losses on precomputed score rows --------------------------------------

def margin_losses(S: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Row-wise margin loss and maximizing label for scores ``S`` (n, m)."""
    S = np.atleast_2d(S)
    y = np.asarray(y, dtype=np.int64)
    rows = np.arange(S.shape[0])
    aug = S + 1.0
    aug[rows, y] = S[rows, y]
    y_star = np.argmax(aug, axis=1)
    return aug[rows, y_star] - S[rows, y], y_star


def logsumexp_rows(S: np.ndarray) -> np.ndarray:
    S = np.atleast_2d(S)
    top = S.max(axis=1)
    return top + np.log(np.exp(S - top[:, None]).sum(axis=1))


def softmax_rows(S: np.ndarray) -> np.ndarray:
    S = np.atleast_2d(S)
    e = np.exp(S - S.max(axis=1)[:, None])
    return e / e.sum(axis=1)[:, None]


def maxent_losses(S: np.ndarray, y: np.ndarray) -> np.ndarray:
    S = np.atleast_2d(S)
    y = np.asarray(y, dtype=np.int64)
    return logsumexp_rows(S) - S[np.arange(S.shape[0]), y]


def losses_from_scores(kind: LossKind, S: np.ndarray, y: np.ndarray) -> np.ndarray:
    if kind is LossKind.LargeMargin:
        return margin_losses(S, y)[0]
    return maxent_losses(S, y)


def costs_from_scores(kind: LossKind, S: np.ndarray) -> np.ndarray:
    """Loss of every candidate label for every row, shape (n, m)."""
    S = np.atleast_2d(S)
    n, m = S.shape
    if kind is LossKind.Maxent:
        return logsumexp_rows(S)[:, None] - S
    aug = S + 1.0
    if m == 1:
        return np.zeros_like(S)
    # best and runner-up of S + 1 give max over y' != y for every candidate y
    order = np.argsort(-aug, axis=1, kind="stable")
    first = aug[np.arange(n), order[:, 0]]
    second = aug[np.arange(n), order[:, 1]]
    other = np.where(np.arange(m)[None, :] == order[:, :1], second[:, None], first[:, None])
    return np.maximum(S, other) - S


# --- single-example API ----------------------------------------------------

def margin_loss(w: WeightVector, x: SparseVector, y_true: int) -> tuple[float, int]:
    xi, y_star = margin_losses(score_all(w, x)[None, :], np.array([y_true]))
    return float(xi[0]), int(y_star[0])


def maxent_loss(w: WeightVector, x: SparseVector, y_true: int) -> float:
    return float(maxent_losses(score_all(w, x)[None, :], np.array([y_true]))[0])


def loss(kind: LossKind, w: WeightVector, x: SparseVector, y_true: int) -> float:
    if kind is LossKind.LargeMargin:
        return margin_loss(w, x, y_true)[0]
    return maxent_loss(w, x, y_true)


def node_coefficients(kind: LossKind, S: np.ndarray, y: np.ndarray, membership: np.ndarray) -> np.ndarray:
    """Per-node multipliers of ``x_i`` in each example's (sub)gradient, shape (n, T).

    Margin: ``f(y*) - f(y_true)``. Maxent: ``sum_y p(y) f(y) - f(y_true)``.
    """
    y = np.asarray(y, dtype=np.int64)
    if kind is LossKind.LargeMargin:
        _, y_star = margin_losses(S, y)
        coef = membership[y_star] - membership[y]
        coef[y_star == y] = 0.0
        return coef
    return softmax_rows(S) @ membership - membership[y]


def loss_subgradient(kind: LossKind, w: WeightVector, x: SparseVector, y_true: int,
                     scale: float, acc: np.ndarray | None = None) -> np.ndarray:
    """Add ``scale`` times a (sub)gradient of the loss at ``w`` into ``acc``."""
    if acc is None:
        acc = np.zeros_like(w.blocks)
    s = score_all(w, x)
    paths = w.pathset
    if kind is LossKind.LargeMargin:
        _, y_star = margin_losses(s[None, :], np.array([y_true]))
        y_star = int(y_star[0])
        if y_star != y_true:
            coef = paths.membership[y_star] - paths.membership[y_true]
            for v in np.flatnonzero(coef):
                acc[v, x.indices] += scale * coef[v] * x.values
        return acc
    p = softmax_rows(s[None, :])[0]
    for y in range(paths.n_classes):
        accumulate_feature(acc, paths, x, y, scale * p[y])
    accumulate_feature(acc, paths, x, y_true, -scale)
    return acc


def batch_gradient(kind: LossKind, w: WeightVector, data: Dataset, labels, weights) -> np.ndarray:
    """``sum_i weights[i] * grad xi(w, x_i, labels[i])`` as a block array."""
    S = score_matrix(w, data)
    coef = node_coefficients(kind, S, labels, w.pathset.membership)
    coef *= np.asarray(weights, dtype=np.float64)[:, None]
    return np.asarray((data.matrix.T @ coef).T)


def cost_matrix(kind: LossKind, w: WeightVector, unlabeled: Dataset) -> CostMatrix:
    return CostMatrix(costs_from_scores(kind, score_matrix(w, unlabeled)))
