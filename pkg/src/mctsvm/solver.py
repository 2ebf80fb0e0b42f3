"""Regularized supervised solver for the weight step.

Minimizes

    lambda/2 ||w||^2 + (1/l) sum_labeled xi + (cu/n) sum_unlabeled xi

with all labels fixed, by stochastic subgradient descent with step
``1 / (lambda (t + t0))`` and per-epoch iterate averaging. Examples are drawn
from a seeded generator with probability proportional to an even mix of
their objective weight and the uniform distribution, and each step is
rescaled by weight/probability. An epoch is ``max(min_epoch_steps, N)``
draws.
The reported iterate is a running average over the whole run with iterate
t weighted by ``t + t0``, which damps the epoch-to-epoch noise of plain
stochastic iterates. Training stops once the objective of that average
changes by no more than ``tolerance`` (relative) over an epoch; a larger
rise is treated as noise and training continues, except on the first epoch
after a warm start, where failing to improve on the start ends the run.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import _sgd
from .data import Dataset, Taxonomy
from .losses import LossKind, losses_from_scores
from .model import WeightVector, score_matrix

log = logging.getLogger(__name__)


class SolverError(RuntimeError):
    """The weight solver could not produce a finite objective."""


@dataclass(frozen=True)
class SolverConfig:
    lam: float = 10.0
    cu: float = 1.0
    max_epochs: int = 100
    tolerance: float = 1e-4
    seed: int = 0
    min_epoch_steps: int = 10000

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError("lambda must be positive")
        if not self.cu >= 0:
            raise ValueError("cu must be non-negative")
        if self.min_epoch_steps < 1:
            raise ValueError("min_epoch_steps must be at least 1")
        if self.max_epochs < 1:
            raise ValueError("max_epochs must be at least 1")
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")

    def replace(self, **changes) -> "SolverConfig":
        return SolverConfig(**{**self.__dict__, **changes})


@dataclass
class TrainResult:
    w: WeightVector
    objective: float
    epochs_used: int
    objective_trace: list[float] = field(default_factory=list)
    converged: bool = True


def _unpack(pseudo_labeled):
    if pseudo_labeled is None:
        return None, None
    if isinstance(pseudo_labeled, Dataset):
        return pseudo_labeled, pseudo_labeled.labels
    data, labels = pseudo_labeled
    return data, (None if labels is None else np.asarray(labels, dtype=np.int64))


def supervised_part(w: WeightVector, labeled: Dataset, lam: float, kind: LossKind) -> float:
    """``lambda/2 ||w||^2 + mean labeled loss``."""
    value = 0.5 * lam * w.sq_norm()
    if len(labeled):
        value += float(np.mean(losses_from_scores(kind, score_matrix(w, labeled), labeled.labels)))
    return value


def combine(base: float, cu: float, n: int, unlabeled_sum: float) -> float:
    """Add the weighted unlabeled term; shared so every caller rounds alike."""
    if n == 0 or cu == 0:
        return base
    return base + cu / n * unlabeled_sum


def objective(w: WeightVector, labeled: Dataset, pseudo_labeled, cfg: SolverConfig,
              kind: LossKind) -> float:
    """Exact value of the regularized (semi-)supervised objective at ``w``.

    Unlabeled losses are summed sequentially in example order, the same way
    :func:`mctsvm.assignment.assignment_objective` sums costs, so the two
    routes agree bit for bit.
    """
    kind = LossKind.parse(kind)
    base = supervised_part(w, labeled, cfg.lam, kind)
    unl, y_u = _unpack(pseudo_labeled)
    if unl is None or len(unl) == 0 or cfg.cu == 0:
        return base
    xi_u = losses_from_scores(kind, score_matrix(w, unl), y_u)
    return combine(base, cfg.cu, len(unl), float(np.cumsum(xi_u)[-1]))


def _stack(parts, dim):
    mats = [sp.csr_matrix(p.matrix, shape=(len(p), dim)) if p.feature_dim != dim
            else p.matrix for p in parts]
    X = sp.vstack(mats, format="csr")
    X.sort_indices()
    return X


def train(labeled: Dataset, pseudo_labeled=None, cfg: SolverConfig = SolverConfig(),
          kind=LossKind.LargeMargin, warm_start: WeightVector | None = None,
          taxonomy: Taxonomy | None = None) -> TrainResult:
    """Fit weights with labels fixed.

    ``pseudo_labeled`` is ``(dataset, labels)`` for the unlabeled part, or
    None. It is ignored when ``cfg.cu == 0``. Without a warm start a
    taxonomy must be given. The returned weights never have a higher
    objective than the starting point.
    """
    kind = LossKind.parse(kind)
    if labeled.labels is None or len(labeled) == 0:
        raise ValueError("train needs a non-empty labeled set")
    unl, y_u = _unpack(pseudo_labeled)
    use_unl = unl is not None and len(unl) > 0 and cfg.cu != 0
    if use_unl and (y_u is None or len(y_u) != len(unl)):
        raise ValueError("pseudo labels missing or of wrong length")
    if warm_start is not None:
        taxonomy = warm_start.taxonomy
    elif taxonomy is None:
        raise ValueError("train needs a taxonomy when no warm start is given")
    labeled.check_labels(taxonomy.n_classes)

    dim = max(labeled.feature_dim, unl.feature_dim if use_unl else 0,
              warm_start.feature_dim if warm_start is not None else 0)
    w0 = WeightVector.zeros(taxonomy, dim)
    if warm_start is not None:
        w0.blocks[:, :warm_start.feature_dim] = warm_start.blocks

    parts, labels, weights = [labeled], [labeled.labels], [np.full(len(labeled), 1.0 / len(labeled))]
    if use_unl:
        parts.append(unl)
        labels.append(y_u)
        weights.append(np.full(len(unl), cfg.cu / len(unl)))
    X = _stack(parts, dim)
    labels = np.concatenate(labels).astype(np.int64)
    weights = np.concatenate(weights)
    n_total = X.shape[0]
    pseudo = (unl, y_u) if use_unl else None

    def full_objective(w):
        return objective(w, labeled, pseudo, cfg, kind)

    paths = w0.pathset
    inner = np.array([v for v in range(taxonomy.n_nodes) if v != taxonomy.root], dtype=np.int64)
    path_index = np.ascontiguousarray(paths.index)
    membership = np.ascontiguousarray(paths.membership)
    loss_code = _sgd.MARGIN if kind is LossKind.LargeMargin else _sgd.MAXENT
    indptr = X.indptr.astype(np.int64)
    indices = X.indices.astype(np.int64)
    data = X.data.astype(np.float64)

    rng = np.random.default_rng(cfg.seed)
    V = w0.blocks.copy()
    epoch_len = max(cfg.min_epoch_steps, n_total)
    # half by objective weight, half uniform: bounded importance weights,
    # and no example is starved when cu is tiny
    prob = 0.5 * weights / weights.sum() + 0.5 / n_total
    prob /= prob.sum()
    step_weight = weights / prob
    # a warm start is treated as if one epoch had already been taken
    t, t0 = 0.0, (float(epoch_len) if warm_start is not None else 1.0)
    best_w, best = w0, full_objective(w0)
    if not np.isfinite(best):
        raise SolverError("objective at the starting point is not finite")
    trace = [best]
    converged = False
    epoch = 0
    prev = best
    U = np.zeros_like(V)
    beta = total = 0.0
    for epoch in range(1, cfg.max_epochs + 1):
        order = rng.choice(n_total, size=epoch_len, p=prob).astype(np.int64)
        t_before = t
        scale, beta, t = _sgd.sgd_epoch(indptr, indices, data, labels, step_weight, order,
                                        path_index, membership, inner, V, U, 1.0, beta,
                                        t, t0, float(cfg.lam), loss_code)
        # sum of the weights t + t0 over this epoch's steps
        total += (t - t_before) * (t_before + t + 1) / 2 + (t - t_before) * t0
        avg = (U + beta * V) / total
        V *= scale
        beta /= scale
        if not np.all(np.isfinite(avg)):
            raise SolverError(f"weights diverged in epoch {epoch} (lambda={cfg.lam})")
        cand = WeightVector(taxonomy, dim, avg)
        value = full_objective(cand)
        if not np.isfinite(value):
            raise SolverError(f"non-finite objective in epoch {epoch} (lambda={cfg.lam})")
        trace.append(value)
        decrease = (prev - value) / max(abs(prev), 1e-12)
        prev = value
        if value < best:
            best, best_w = value, cand
        # A first warm epoch that cannot beat its start means the start is
        # already within the noise floor at this step size. Elsewhere a rise
        # is sampling noise, and the zero vector of a cold start is not an
        # averaged iterate.
        stalled = warm_start is not None and epoch == 1 and value >= trace[0]
        settled = abs(decrease) <= cfg.tolerance and (warm_start is not None or epoch > 1)
        if stalled or settled:
            converged = True
            break
    if not converged:
        log.info("weight solver stopped at max_epochs=%d without reaching tolerance %g",
                 cfg.max_epochs, cfg.tolerance)
    return TrainResult(best_w, best, epoch, trace, converged)
