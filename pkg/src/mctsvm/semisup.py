"""Semi-supervised training by alternating weight and label steps.

1. Train on the labeled set alone.
2. Give the unlabeled examples initial labels by greedy rank-and-fill on the
   classifier scores, respecting the class counts.
3. For each ``cu`` in an increasing schedule, alternate a warm-started
   weight step (labels fixed) and an assignment step (weights fixed) until
   the labels stop changing.
"""

from __future__ import annotations

import logging
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import assignment
from .assignment import Assignment, assignment_objective, greedy_init
from .data import Dataset, LabelCounts, Taxonomy
from .losses import LossKind, cost_matrix
from .model import WeightVector, score_matrix
from .solver import SolverConfig, combine, supervised_part, train

log = logging.getLogger(__name__)

DEFAULT_SCHEDULE = (1e-4, 3e-4, 1e-3, 3e-3, 1e-2, 3e-2, 1e-1, 3e-1, 1.0)


def default_schedule(target: float = 1.0) -> tuple[float, ...]:
    """The 1, 3, 10, 30, ... ladder from ``1e-4 * target`` up to ``target``."""
    if target == 1.0:
        return DEFAULT_SCHEDULE
    return tuple(v * target for v in DEFAULT_SCHEDULE)


def check_schedule(schedule) -> tuple[float, ...]:
    values = tuple(float(v) for v in schedule)
    if not values:
        raise ValueError("empty cu schedule")
    if any(v < 0 or not np.isfinite(v) for v in values):
        raise ValueError("cu values must be finite and non-negative")
    if any(b <= a for a, b in zip(values, values[1:])):
        raise ValueError("cu schedule must be strictly increasing")
    return values


@dataclass(frozen=True)
class SemisupConfig:
    solver: SolverConfig = SolverConfig()
    schedule: tuple[float, ...] | None = None  # None: default ladder ending at solver.cu
    w_epochs: int = 30
    max_inner: int = 20
    assignment_solver: str = "switching"

    def resolved_schedule(self) -> tuple[float, ...]:
        if self.schedule is None:
            return default_schedule(self.solver.cu)
        return check_schedule(self.schedule)


@dataclass
class TraceRecord:
    cu: float
    iteration: int
    obj_before_w: float
    obj_after_w: float
    obj_before_y: float
    obj_after_y: float
    labels_changed: int
    wall_time: float
    w_epochs: int = 0
    assign_info: dict = field(default_factory=dict)

    def to_record(self) -> dict:
        rec = asdict(self)
        rec["assign_info"] = {k: v for k, v in self.assign_info.items() if k != "switches"}
        return rec


@dataclass
class SemisupResult:
    w: WeightVector
    assignment: Assignment
    trace: list[TraceRecord]
    supervised_w: WeightVector
    initial_labels: np.ndarray

    @property
    def final_objective(self) -> float:
        return self.trace[-1].obj_after_y if self.trace else float("nan")


def _step_seed(base: int, stage: int, it: int) -> int:
    return int(np.random.SeedSequence([base, stage, it]).generate_state(1)[0])


def train_semisup(labeled: Dataset, unlabeled: Dataset, counts, cfg: SemisupConfig = SemisupConfig(),
                  kind=LossKind.LargeMargin, assignment_solver: str | None = None,
                  taxonomy: Taxonomy | None = None) -> SemisupResult:
    """Run the full alternating procedure; see the module docstring.

    Every intermediate label vector satisfies ``counts`` exactly. The label
    step never raises the objective: a solver result that sums higher on the
    cached cost matrix than the current labels is discarded.
    """
    kind = LossKind.parse(kind)
    solver_name = assignment_solver or cfg.assignment_solver
    if solver_name not in assignment.SOLVERS:
        raise ValueError(f"unknown assignment solver {solver_name!r}")
    schedule = cfg.resolved_schedule()
    if isinstance(counts, LabelCounts):
        counts = counts.as_array()
    counts = assignment.check_counts(len(unlabeled), counts)
    if taxonomy is None:
        taxonomy = Taxonomy.flat(len(counts))
    if taxonomy.n_classes != len(counts):
        raise ValueError(f"{len(counts)} label counts for {taxonomy.n_classes} classes")

    sup = train(labeled, None, cfg.solver, kind, taxonomy=taxonomy)
    w = sup.w
    m = taxonomy.n_classes
    current = greedy_init(score_matrix(w, unlabeled), counts)
    initial = current.label_of.copy()
    n = len(unlabeled)
    trace: list[TraceRecord] = []

    for stage, cu in enumerate(schedule):
        step_cfg = cfg.solver.replace(cu=cu, max_epochs=cfg.w_epochs)
        for it in range(1, cfg.max_inner + 1):
            start = time.perf_counter()
            y_old = current.label_of
            before_w = combine(supervised_part(w, labeled, step_cfg.lam, kind), cu, n,
                               assignment_objective(cost_matrix(kind, w, unlabeled), y_old))
            epochs = 0
            if cu > 0:
                res = train(labeled, (unlabeled, y_old), step_cfg.replace(seed=_step_seed(cfg.solver.seed, stage, it)),
                            kind, warm_start=w)
                w, epochs = res.w, res.epochs_used
            # with cu == 0 the weight problem is the labeled-only one already solved
            base = supervised_part(w, labeled, step_cfg.lam, kind)
            C = cost_matrix(kind, w, unlabeled)
            old_sum = assignment_objective(C, y_old)
            after_w = combine(base, cu, n, old_sum)
            proposal = assignment.solve(C, counts, Assignment(y_old, m), solver_name)
            if not proposal.satisfies(counts):
                raise AssertionError("assignment solver violated the label counts")
            if proposal.objective <= old_sum:
                current = proposal
            else:
                current = Assignment(y_old, m, old_sum, {"rejected": True})
            changed = int(np.count_nonzero(current.label_of != y_old))
            trace.append(TraceRecord(cu, it, before_w, after_w, after_w,
                                     combine(base, cu, n, current.objective), changed,
                                     time.perf_counter() - start, epochs, dict(proposal.info)))
            log.debug("cu=%g it=%d obj %.6g -> %.6g -> %.6g, %d labels changed",
                      cu, it, before_w, after_w, trace[-1].obj_after_y, changed)
            if changed == 0:
                break
        else:
            log.warning("inner loop hit the cap of %d iterations at cu=%g", cfg.max_inner, cu)
    return SemisupResult(w, current, trace, sup.w, initial)


def run_no_anneal(labeled: Dataset, unlabeled: Dataset, counts, cfg: SemisupConfig = SemisupConfig(),
                  kind=LossKind.LargeMargin, assignment_solver: str | None = None,
                  taxonomy: Taxonomy | None = None) -> SemisupResult:
    """The same procedure with the schedule collapsed to its final value."""
    final = cfg.resolved_schedule()[-1]
    cfg = SemisupConfig(cfg.solver, (final,), cfg.w_epochs, cfg.max_inner, cfg.assignment_solver)
    return train_semisup(labeled, unlabeled, counts, cfg, kind, assignment_solver, taxonomy)
