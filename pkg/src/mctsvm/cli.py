"""Command-line interface.

Subcommands: ``synth``, ``train``, ``predict``, ``eval``, ``semisup``,
``bench-assign`` and ``learning-curve``. Every output file starts with the
resolved run configuration (``# config:`` header lines in text files, a
leading ``{"record": "config"}`` line in JSON-lines files, the metadata
block in model files).

Exit codes: 0 success, 2 configuration or input error, 3 solver failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import tempfile
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .assignment import SOLVERS, SimplexError
from .data import (
    DataFormatError,
    Dataset,
    LabelCounts,
    Taxonomy,
    derive_label_counts,
    estimate_phi,
    format_dataset,
    load_dataset,
    load_taxonomy,
)
from .experiments import (
    DISTRIBUTIONS,
    bench_assign,
    bench_summary,
    learning_curve_runs,
    learning_curve_table,
)
from .losses import LossKind
from .metrics import evaluate
from .model import load_model, predict_many, save_model
from .semisup import SemisupConfig, check_schedule, default_schedule, train_semisup
from .solver import SolverConfig, SolverError, train
from .synth import ClusterParams, TextParams, make_clusters, make_sparse_text, make_task

log = logging.getLogger("mctsvm")

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER = 0, 2, 3


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    paths: dict = field(default_factory=dict)
    taxonomy: str | None = None
    loss: str = "margin"
    lam: float | None = None
    cu: float = 1.0
    phi: list | None = None
    counts: list | None = None
    seed: int = 0
    schedule: list | None = None
    solver: str = "switching"
    out: str = "."
    options: dict = field(default_factory=dict)

    def header(self) -> list[str]:
        return [f"config: {json.dumps(asdict(self), sort_keys=True)}", f"version: {__version__}"]

    def record(self) -> dict:
        return {"record": "config", **asdict(self)}


# --- small I/O helpers -----------------------------------------------------

def _atomic_write(path: Path, data: str | bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    mode = "wb" if isinstance(data, bytes) else "w"
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    with os.fdopen(fd, mode) as fh:
        fh.write(data)
    os.replace(tmp, path)


def _text_with_header(cfg: RunConfig, body: str) -> str:
    return "".join(f"# {h}\n" for h in cfg.header()) + body


def _jsonl(cfg: RunConfig, records) -> str:
    lines = [json.dumps(cfg.record(), sort_keys=True)]
    lines += [json.dumps(r, sort_keys=True) for r in records]
    return "\n".join(lines) + "\n"


def _tsv(rows: list[dict]) -> str:
    if not rows:
        return ""
    cols = list(rows[0])
    out = ["\t".join(cols)]
    for r in rows:
        out.append("\t".join(f"{r[c]:.6g}" if isinstance(r[c], float) else str(r[c]) for c in cols))
    return "\n".join(out) + "\n"


def read_labels(path) -> np.ndarray:
    """Labels one per line; ``#`` lines skipped. A labeled dataset file also works."""
    labels = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            head = text.split()[0]
            try:
                labels.append(int(head))
            except ValueError:
                raise DataFormatError(f"bad label {head!r}", lineno) from None
    return np.array(labels, dtype=np.int64)


def _floats(text: str | None, name: str) -> list[float] | None:
    if text is None:
        return None
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"--{name}: expected comma-separated numbers, got {text!r}") from None
    if not vals:
        raise ConfigError(f"--{name} is empty")
    return vals


def _ints(text: str | None, name: str) -> list[int] | None:
    vals = _floats(text, name)
    if vals is None:
        return None
    if any(v != int(v) for v in vals):
        raise ConfigError(f"--{name}: expected integers, got {text!r}")
    return [int(v) for v in vals]


def _taxonomy(args, n_classes: int | None) -> Taxonomy:
    if args.taxonomy:
        tax = load_taxonomy(args.taxonomy)
        if n_classes is not None and n_classes > tax.n_classes:
            raise ConfigError(f"labels use {n_classes} classes, taxonomy has {tax.n_classes}")
        return tax
    m = args.classes or n_classes
    if not m:
        raise ConfigError("cannot infer the number of classes; pass --classes or --taxonomy")
    if n_classes is not None and n_classes > m:
        raise ConfigError(f"labels use {n_classes} classes, --classes is {m}")
    return Taxonomy.flat(m)


def _default_lambda(kind: LossKind, m: int) -> float:
    return 1e-3 if kind is LossKind.Maxent and m == 2 else 10.0


def _n_classes(*label_arrays) -> int | None:
    found = [int(a.max()) + 1 for a in label_arrays if a is not None and a.size]
    return max(found) if found else None


def _solver_config(args, lam: float) -> SolverConfig:
    return SolverConfig(lam=lam, cu=args.cu, max_epochs=args.max_epochs,
                        tolerance=args.tolerance, seed=args.seed)


# --- commands --------------------------------------------------------------

def cmd_synth(args) -> int:
    out = Path(args.out)
    if args.kind == "clusters":
        params = ClusterParams(n_classes=args.classes, per_class=args.per_class)
        d = make_clusters(params, seed=args.seed)
    else:
        params = TextParams(n_classes=args.classes, per_class=args.per_class)
        d = make_sparse_text(params, seed=args.seed)
    lab, unl, test = make_task(d, args.n_labeled, args.n_unlabeled, args.seed)
    counts = LabelCounts.from_labels(unl.gold, args.classes)
    cfg = RunConfig("synth", {"out": str(out)}, seed=args.seed, out=str(out),
                    counts=list(counts.counts),
                    options={"kind": args.kind, "params": asdict(params),
                             "n_labeled": args.n_labeled, "n_unlabeled": args.n_unlabeled})
    header = cfg.header()
    _atomic_write(out / "data.txt", format_dataset(d, header))
    _atomic_write(out / "labeled.txt", format_dataset(lab, header))
    _atomic_write(out / "unlabeled.txt", format_dataset(unl, header))
    _atomic_write(out / "test.txt", format_dataset(test, header))
    _atomic_write(out / "unlabeled_gold.txt",
                  _text_with_header(cfg, "".join(f"{y}\n" for y in unl.gold)))
    meta = {"config": asdict(cfg), "feature_dim": d.feature_dim, "n_classes": args.classes,
            "counts": list(counts.counts),
            "sizes": {"labeled": len(lab), "unlabeled": len(unl), "test": len(test)}}
    _atomic_write(out / "meta.json", json.dumps(meta, indent=2, sort_keys=True) + "\n")
    print(f"wrote {len(lab)} labeled, {len(unl)} unlabeled, {len(test)} test examples to {out}")
    return EXIT_OK


def cmd_train(args) -> int:
    kind = LossKind.parse(args.loss)
    d = load_dataset(args.data)
    if d.labels is None:
        raise ConfigError(f"{args.data}: training data has no labels")
    tax = _taxonomy(args, _n_classes(d.labels))
    lam = args.lam if args.lam is not None else _default_lambda(kind, tax.n_classes)
    cfg = RunConfig("train", {"data": args.data}, args.taxonomy, kind.value, lam, 0.0,
                    seed=args.seed, out=args.out, options={"max_epochs": args.max_epochs})
    res = train(d, None, _solver_config(args, lam).replace(cu=0.0), kind, taxonomy=tax)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    name = "model.json" if args.text_model else "model.bin"
    save_model(res.w, out / name, asdict(cfg), text=args.text_model)
    record = {"record": "train", "objective": res.objective, "epochs": res.epochs_used,
              "converged": res.converged, "objective_trace": res.objective_trace}
    _atomic_write(out / "train.jsonl", _jsonl(cfg, [record]))
    print(f"objective\t{res.objective:.6f}\nepochs\t{res.epochs_used}\nmodel\t{out / name}")
    return EXIT_OK


def cmd_predict(args) -> int:
    w, _ = load_model(args.model)
    d = load_dataset(args.data)
    pred = predict_many(w, d)
    cfg = RunConfig("predict", {"model": args.model, "data": args.data}, out=args.out)
    out = Path(args.out)
    _atomic_write(out / "predictions.txt", _text_with_header(cfg, "".join(f"{y}\n" for y in pred)))
    if d.labels is not None:
        rep = evaluate(pred, d.labels, w.n_classes)
        print(f"macro_f\t{rep.macro_f:.6f}\naccuracy\t{rep.accuracy:.6f}")
    return EXIT_OK


def cmd_eval(args) -> int:
    pred, gold = read_labels(args.pred), read_labels(args.gold)
    m = args.classes or _n_classes(pred, gold) or 1
    rep = evaluate(pred, gold, m)
    cfg = RunConfig("eval", {"pred": args.pred, "gold": args.gold}, out=args.out,
                    options={"classes": m})
    out = Path(args.out)
    _atomic_write(out / "report.txt", _text_with_header(cfg, rep.to_text()))
    _atomic_write(out / "report.jsonl", _jsonl(cfg, [{"record": "report", **rep.to_record()}]))
    sys.stdout.write(rep.to_text())
    return EXIT_OK


def _resolve_counts(args, labeled: Dataset, n: int, m: int, gold) -> tuple[LabelCounts, str]:
    given = [x for x in (args.phi, args.counts, args.estimate_phi or None) if x is not None]
    if len(given) > 1:
        raise ConfigError("give at most one of --phi, --counts, --estimate-phi")
    if args.counts is not None:
        counts = _ints(args.counts, "counts")
        if len(counts) != m:
            raise ConfigError(f"--counts has {len(counts)} entries for {m} classes")
        if sum(counts) != n:
            raise ConfigError(f"--counts sums to {sum(counts)}, unlabeled set has {n} examples")
        return LabelCounts(tuple(counts)), "counts"
    if args.phi is not None:
        phi = _floats(args.phi, "phi")
        if len(phi) != m:
            raise ConfigError(f"--phi has {len(phi)} entries for {m} classes")
        return derive_label_counts(phi, n), "phi"
    if args.estimate_phi:
        return derive_label_counts(estimate_phi(labeled.labels, m), n), "estimated"
    if gold is not None:
        return LabelCounts.from_labels(gold, m), "gold"
    raise ConfigError("class proportions unknown: pass --phi, --counts, --estimate-phi or --gold")


def cmd_semisup(args) -> int:
    kind = LossKind.parse(args.loss)
    lab = load_dataset(args.labeled)
    unl = load_dataset(args.unlabeled)
    if lab.labels is None:
        raise ConfigError(f"{args.labeled}: labeled file has no labels")
    if unl.labels is not None:
        # a labeled file may be passed as unlabeled; its labels become gold
        unl = unl.hide_labels()
    test = load_dataset(args.test) if args.test else None
    gold = read_labels(args.gold) if args.gold else unl.gold
    if gold is not None and len(gold) != len(unl):
        raise ConfigError(f"--gold has {len(gold)} labels for {len(unl)} unlabeled examples")
    tax = _taxonomy(args, _n_classes(lab.labels, gold, None if test is None else test.labels))
    m = tax.n_classes
    dim = max(lab.feature_dim, unl.feature_dim, test.feature_dim if test is not None else 0)
    lab, unl = lab.with_feature_dim(dim), unl.with_feature_dim(dim)
    counts, source = _resolve_counts(args, lab, len(unl), m, gold)
    lam = args.lam if args.lam is not None else _default_lambda(kind, m)
    schedule = _floats(args.schedule, "schedule")
    schedule = check_schedule(schedule) if schedule is not None else default_schedule(args.cu)
    cfg = RunConfig("semisup", {"labeled": args.labeled, "unlabeled": args.unlabeled,
                                "test": args.test, "gold": args.gold},
                    args.taxonomy, kind.value, lam, args.cu, _floats(args.phi, "phi"),
                    list(counts.counts), args.seed, list(schedule), args.solver, args.out,
                    {"counts_source": source, "w_epochs": args.w_epochs,
                     "max_inner": args.max_inner, "tolerance": args.tolerance})
    log.info("cu schedule: %s", ", ".join(f"{c:g}" for c in schedule))
    scfg = SemisupConfig(_solver_config(args, lam), tuple(schedule), args.w_epochs,
                         args.max_inner, args.solver)
    res = train_semisup(lab, unl, counts, scfg, kind, taxonomy=tax)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_model(res.w, out / "model.bin", asdict(cfg))
    save_model(res.supervised_w, out / "supervised_model.bin", asdict(cfg))
    _atomic_write(out / "transduced.txt",
                  _text_with_header(cfg, "".join(f"{y}\n" for y in res.assignment.label_of)))
    trace = [t.to_record() for t in res.trace]
    _atomic_write(out / "trace.jsonl", _jsonl(cfg, [{"record": "trace", **t} for t in trace]))

    rows = []
    if gold is not None:
        sup_pred = predict_many(res.supervised_w, unl)
        rows.append(("unlabeled (transduction)",
                     evaluate(sup_pred, gold, m), evaluate(res.assignment.label_of, gold, m)))
    if test is not None and test.labels is not None:
        rows.append(("test", evaluate(predict_many(res.supervised_w, test), test.labels, m),
                     evaluate(predict_many(res.w, test), test.labels, m)))
    lines = ["set\tsupervised_macro_f\tsemisup_macro_f\tsupervised_acc\tsemisup_acc"]
    lines += [f"{name}\t{a.macro_f:.6f}\t{b.macro_f:.6f}\t{a.accuracy:.6f}\t{b.accuracy:.6f}"
              for name, a, b in rows]
    body = "\n".join(lines) + "\n" + f"final_objective\t{res.final_objective:.6f}\n"
    _atomic_write(out / "report.txt", _text_with_header(cfg, body))
    report_records = [{"record": "report", "set": name, "supervised": a.to_record(),
                       "semisup": b.to_record()} for name, a, b in rows]
    _atomic_write(out / "report.jsonl", _jsonl(cfg, report_records))
    if not args.no_plot and trace:
        from .plotting import plot_trace
        plot_trace(trace, out / "trace.png")
    sys.stdout.write(body)
    return EXIT_OK


def cmd_bench_assign(args) -> int:
    seeds = range(args.seed, args.seed + args.seeds)
    records = bench_assign(args.n, args.m, seeds, args.distribution)
    summary = bench_summary(records)
    cfg = RunConfig("bench-assign", seed=args.seed, out=args.out,
                    options={"n": args.n, "m": args.m, "seeds": args.seeds,
                             "distribution": args.distribution})
    out = Path(args.out)
    _atomic_write(out / "bench.jsonl",
                  _jsonl(cfg, [{"record": "run", **r} for r in records]
                         + [{"record": "summary", **summary}]))
    _atomic_write(out / "bench.tsv", _text_with_header(cfg, _tsv(records)))
    if not args.no_plot:
        from .plotting import plot_bench
        plot_bench(records, out / "bench.png")
    for k, v in summary.items():
        print(f"{k}\t{v:.6g}" if isinstance(v, float) else f"{k}\t{v}")
    return EXIT_OK


def cmd_learning_curve(args) -> int:
    kind = LossKind.parse(args.loss)
    d = load_dataset(args.data)
    if d.labels is None:
        raise ConfigError(f"{args.data}: learning curves need a fully labeled dataset")
    tax = _taxonomy(args, _n_classes(d.labels))
    lam = args.lam if args.lam is not None else _default_lambda(kind, tax.n_classes)
    sizes = _ints(args.sizes, "sizes")
    if any(s < tax.n_classes for s in sizes):
        raise ConfigError("every labeled size must give each class at least one example")
    schedule = _floats(args.schedule, "schedule")
    schedule = check_schedule(schedule) if schedule is not None else default_schedule(args.cu)
    seeds = list(range(args.seed, args.seed + args.seeds))
    cfg = RunConfig("learning-curve", {"data": args.data}, args.taxonomy, kind.value, lam,
                    args.cu, seed=args.seed, schedule=list(schedule), solver=args.solver,
                    out=args.out, options={"sizes": sizes, "seeds": args.seeds,
                                           "n_unlabeled": args.n_unlabeled})
    scfg = SemisupConfig(_solver_config(args, lam), tuple(schedule), args.w_epochs,
                         args.max_inner, args.solver)
    runs = learning_curve_runs(d, sizes, seeds, args.n_unlabeled, scfg, kind, tax)
    table = learning_curve_table(runs)
    out = Path(args.out)
    _atomic_write(out / "curve.jsonl", _jsonl(cfg, [{"record": "run", **r} for r in runs]
                                             + [{"record": "summary", **r} for r in table]))
    _atomic_write(out / "curve.tsv", _text_with_header(cfg, _tsv(table)))
    if not args.no_plot:
        from .plotting import plot_learning_curve
        plot_learning_curve(table, out / "curve.png")
    sys.stdout.write(_tsv(table))
    return EXIT_OK


# --- argument parsing ------------------------------------------------------

def _model_flags(p, semisup: bool):
    p.add_argument("--loss", choices=[k.value for k in LossKind], default="margin")
    p.add_argument("--lambda", dest="lam", type=float, default=None,
                   help="regularization (default 10; 1e-3 for two-class maxent)")
    p.add_argument("--taxonomy", default=None, help="taxonomy file; flat classes if omitted")
    p.add_argument("--classes", type=int, default=None, help="class count when no taxonomy is given")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-epochs", type=int, default=100)
    p.add_argument("--tolerance", type=float, default=1e-4)
    if semisup:
        p.add_argument("--cu", type=float, default=1.0, help="final unlabeled weight")
        p.add_argument("--schedule", default=None, help="comma-separated cu values")
        p.add_argument("--solver", choices=SOLVERS, default="switching")
        p.add_argument("--w-epochs", type=int, default=30)
        p.add_argument("--max-inner", type=int, default=20)
    else:
        p.set_defaults(cu=0.0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mctsvm", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="count", default=0)
    # accepted after the subcommand too; SUPPRESS keeps the top-level count
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-v", "--verbose", action="count", default=argparse.SUPPRESS)
    sub = parser.add_subparsers(dest="command", required=True)
    add = sub.add_parser

    p = add("synth", parents=[common], help="write a synthetic labeled/unlabeled/test task")
    p.add_argument("--kind", choices=("clusters", "sparse-text"), default="clusters")
    p.add_argument("--classes", type=int, default=4)
    p.add_argument("--per-class", type=int, default=100)
    p.add_argument("--n-labeled", type=int, default=8)
    p.add_argument("--n-unlabeled", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = add("train", parents=[common], help="supervised training on a labeled file")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--text-model", action="store_true", help="write the model as JSON")
    _model_flags(p, semisup=False)
    p.set_defaults(func=cmd_train)

    p = add("predict", parents=[common], help="label a dataset with a saved model")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_predict)

    p = add("eval", parents=[common], help="score predictions against gold labels")
    p.add_argument("--pred", required=True)
    p.add_argument("--gold", required=True)
    p.add_argument("--classes", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_eval)

    p = add("semisup", parents=[common], help="semi-supervised training with label counts")
    p.add_argument("--labeled", required=True)
    p.add_argument("--unlabeled", required=True)
    p.add_argument("--test", default=None, help="labeled test file for the side-by-side report")
    p.add_argument("--gold", default=None, help="true labels of the unlabeled file")
    p.add_argument("--phi", default=None, help="class proportions p1,p2,...")
    p.add_argument("--counts", default=None, help="exact unlabeled class counts n1,n2,...")
    p.add_argument("--estimate-phi", action="store_true",
                   help="take class proportions from the labeled set")
    p.add_argument("--out", required=True)
    p.add_argument("--no-plot", action="store_true")
    _model_flags(p, semisup=True)
    p.set_defaults(func=cmd_semisup)

    p = add("bench-assign", parents=[common], help="compare switching and simplex on random instances")
    p.add_argument("--n", type=int, default=200)
    p.add_argument("--m", type=int, default=5)
    p.add_argument("--distribution", choices=DISTRIBUTIONS, default="uniform")
    p.add_argument("--seeds", type=int, default=5, help="number of instances")
    p.add_argument("--seed", type=int, default=0, help="first seed")
    p.add_argument("--out", required=True)
    p.add_argument("--no-plot", action="store_true")
    p.set_defaults(func=cmd_bench_assign)

    p = add("learning-curve", parents=[common], help="supervised vs semi-supervised vs ceiling sweep")
    p.add_argument("--data", required=True, help="fully labeled dataset to split")
    p.add_argument("--sizes", default="4,8,16,32")
    p.add_argument("--seeds", type=int, default=5, help="number of seeds per size")
    p.add_argument("--n-unlabeled", type=int, default=200)
    p.add_argument("--out", required=True)
    p.add_argument("--no-plot", action="store_true")
    _model_flags(p, semisup=True)
    p.set_defaults(func=cmd_learning_curve)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (SolverError, SimplexError, AssertionError) as exc:
        print(f"error: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (ValueError, OSError) as exc:
        # DataFormatError, ConfigError and infeasible counts are ValueErrors
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
