"""Assignment-solver benchmarks and learning-curve sweeps.

Both return plain dict records so the CLI can stream them as JSON lines or
flatten them into TSV tables.
"""

from __future__ import annotations

import time

import numpy as np

from . import assignment
from .assignment import Assignment, brute_force, greedy_init, n_feasible
from .data import Dataset, LabelCounts, Taxonomy
from .losses import LossKind, costs_from_scores
from .metrics import evaluate
from .model import predict_many
from .semisup import SemisupConfig, train_semisup
from .solver import train
from .synth import make_task

DISTRIBUTIONS = ("uniform", "loss")
ARMS = ("supervised", "semisup", "ceiling")
BRUTE_FORCE_LIMIT = 200_000


def random_instance(n: int, m: int, distribution: str, rng):
    """Cost matrix and multinomial class counts for one benchmark instance.

    ``uniform`` draws i.i.d. U[0,1] costs. ``loss`` draws random class
    scores and converts them to large-margin costs, which gives the
    correlated structure the label step actually sees.
    """
    if distribution == "uniform":
        C = rng.random((n, m))
    elif distribution == "loss":
        C = costs_from_scores(LossKind.LargeMargin, rng.normal(scale=0.5, size=(n, m)))
    else:
        raise ValueError(f"unknown cost distribution {distribution!r}; expected one of {DISTRIBUTIONS}")
    counts = rng.multinomial(n, np.full(m, 1.0 / m))
    return C, counts


def _timed(fn, *args, **kwargs):
    start = time.perf_counter()
    out = fn(*args, **kwargs)
    return out, time.perf_counter() - start


def _iterations(a: Assignment) -> int:
    return int(a.info.get("pivots", a.info.get("rounds", 0)))


def bench_assign(n: int, m: int, seeds, distribution: str = "uniform") -> list[dict]:
    """Run switching and simplex (and brute force when tiny) on random instances.

    One record per (seed, solver). ``gap`` is the relative excess over the
    simplex optimum.
    """
    records = []
    for seed in seeds:
        rng = np.random.default_rng(seed)
        C, counts = random_instance(n, m, distribution, rng)
        init, t_init = _timed(greedy_init, -C, counts)
        init = Assignment.from_labels(init.label_of, C, m)
        runs = {}
        runs["simplex"] = _timed(assignment.solve_simplex, C, counts, init=init)
        sw, t_sw = _timed(assignment.solve_switching, C, counts, init)
        runs["switching"] = (sw, t_sw + t_init)
        if n_feasible(counts) <= BRUTE_FORCE_LIMIT:
            runs["brute_force"] = _timed(brute_force, C, counts)
        opt = runs["simplex"][0].objective
        for name, (res, wall) in runs.items():
            records.append({
                "seed": int(seed), "n": n, "m": m, "distribution": distribution,
                "solver": name,
                "objective": float(res.objective),
                "init_objective": float(init.objective),
                "gap": float((res.objective - opt) / max(abs(opt), 1e-12)),
                "wall_time": float(wall),
                "iterations": _iterations(res),
                "feasible": bool(res.satisfies(counts)),
            })
    return records


def bench_summary(records: list[dict]) -> dict:
    """Mean/max switching gap and the median simplex/switching time ratio."""
    by = {}
    for r in records:
        by.setdefault(r["solver"], {})[r["seed"]] = r
    sw, sx = by.get("switching", {}), by.get("simplex", {})
    seeds = sorted(set(sw) & set(sx))
    if not seeds:
        return {}
    gaps = np.array([sw[s]["gap"] for s in seeds])
    ratio = np.array([sx[s]["wall_time"] / max(sw[s]["wall_time"], 1e-12) for s in seeds])
    out = {
        "instances": len(seeds),
        "switching_gap_mean": float(gaps.mean()),
        "switching_gap_max": float(gaps.max()),
        "within_1pct": float(np.mean(gaps <= 0.01)),
        "median_speed_ratio": float(np.median(ratio)),
        "median_switching_time": float(np.median([sw[s]["wall_time"] for s in seeds])),
        "median_simplex_time": float(np.median([sx[s]["wall_time"] for s in seeds])),
    }
    bf = by.get("brute_force", {})
    if bf:
        out["simplex_matches_brute_force"] = all(
            sx[s]["objective"] == bf[s]["objective"] for s in seeds if s in bf)
    return out


def _macro_f(w, test: Dataset, m: int) -> float:
    return evaluate(predict_many(w, test), test.labels, m).macro_f


def learning_curve_runs(d: Dataset, sizes, seeds, n_unlabeled: int, cfg: SemisupConfig,
                        kind=LossKind.LargeMargin, taxonomy: Taxonomy | None = None,
                        assignment_solver: str | None = None) -> list[dict]:
    """Per-seed test macro-F of the three arms at each labeled size.

    Splits are stratified, so the unlabeled class counts are the true ones.
    The ceiling arm trains on labeled and unlabeled data with all labels
    known.
    """
    m = int(d.labels.max()) + 1 if taxonomy is None else taxonomy.n_classes
    taxonomy = taxonomy or Taxonomy.flat(m)
    runs = []
    for size in sizes:
        for seed in seeds:
            lab, unl, test = make_task(d, int(size), n_unlabeled, seed)
            counts = LabelCounts.from_labels(unl.gold, m)
            run_cfg = SemisupConfig(cfg.solver.replace(seed=int(seed)), cfg.schedule,
                                    cfg.w_epochs, cfg.max_inner, cfg.assignment_solver)
            res = train_semisup(lab, unl, counts, run_cfg, kind, assignment_solver, taxonomy)
            full = Dataset(lab.examples + unl.examples, np.r_[lab.labels, unl.gold], d.feature_dim)
            ceil = train(full, None, run_cfg.solver, kind, taxonomy=taxonomy)
            scores = {
                "supervised": _macro_f(res.supervised_w, test, m),
                "semisup": _macro_f(res.w, test, m),
                "ceiling": _macro_f(ceil.w, test, m),
            }
            transduction = float(np.mean(res.assignment.label_of == unl.gold))
            for arm in ARMS:
                runs.append({"n_labeled": int(size), "seed": int(seed), "arm": arm,
                             "macro_f": scores[arm], "transduction_accuracy": transduction})
    return runs


def learning_curve_table(runs: list[dict]) -> list[dict]:
    """Mean and standard deviation of macro-F per (size, arm)."""
    rows = []
    for size in sorted({r["n_labeled"] for r in runs}):
        for arm in ARMS:
            vals = np.array([r["macro_f"] for r in runs if r["n_labeled"] == size and r["arm"] == arm])
            if vals.size:
                rows.append({"n_labeled": size, "arm": arm, "mean": float(vals.mean()),
                             "std": float(vals.std()), "seeds": int(vals.size)})
    return rows
