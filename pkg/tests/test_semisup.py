import numpy as np
import pytest

from mctsvm.assignment import InfeasibleCounts
from mctsvm.data import LabelCounts, Taxonomy
from mctsvm.losses import LossKind, cost_matrix
from mctsvm.model import predict_many
from mctsvm.semisup import (
    DEFAULT_SCHEDULE,
    SemisupConfig,
    check_schedule,
    default_schedule,
    run_no_anneal,
    train_semisup,
)
from mctsvm.solver import SolverConfig, train
from mctsvm.synth import ClusterParams, make_clusters, make_task

TAX = Taxonomy.flat(4)


def task(seed, n_labeled=8, n_unlabeled=400):
    d = make_clusters(ClusterParams(per_class=152), seed=seed)
    lab, unl, test = make_task(d, n_labeled, n_unlabeled, seed)
    return lab, unl, test, LabelCounts.from_labels(unl.gold, 4)


def cfg(seed=0, **kw):
    return SemisupConfig(solver=SolverConfig(seed=seed), **kw)


@pytest.fixture(scope="module")
def run0():
    lab, unl, test, counts = task(0)
    return lab, unl, counts, train_semisup(lab, unl, counts, cfg(0), taxonomy=TAX)


class TestSchedule:
    def test_default(self):
        assert DEFAULT_SCHEDULE == (1e-4, 3e-4, 1e-3, 3e-3, 1e-2, 3e-2, 1e-1, 3e-1, 1.0)
        assert cfg().resolved_schedule() == DEFAULT_SCHEDULE

    def test_scaled_target(self):
        s = default_schedule(0.5)
        assert s[-1] == 0.5 and len(s) == 9

    @pytest.mark.parametrize("bad", [(), (1.0, 0.5), (0.1, 0.1), (-1.0, 1.0), (0.1, float("inf"))])
    def test_invalid(self, bad):
        with pytest.raises(ValueError):
            check_schedule(bad)


class TestDriver:
    def test_zero_cu_returns_supervised_model(self):
        lab, unl, _, counts = task(1, n_unlabeled=100)
        res = train_semisup(lab, unl, counts, cfg(1, schedule=(0.0,)), taxonomy=TAX)
        sup = train(lab, None, SolverConfig(seed=1), taxonomy=TAX)
        assert res.w == sup.w == res.supervised_w

    def test_trace_ends_at_unit_cu(self, run0):
        *_, res = run0
        assert res.trace[-1].cu == 1.0
        assert [t.cu for t in res.trace] == sorted(t.cu for t in res.trace)
        assert set(t.cu for t in res.trace) == set(DEFAULT_SCHEDULE)

    def test_trace_steps_never_increase(self, run0):
        *_, res = run0
        for t in res.trace:
            assert t.obj_after_w <= t.obj_before_w + 1e-6
            assert t.obj_after_y <= t.obj_before_y

    def test_stages_end_when_labels_settle(self, run0):
        *_, res = run0
        last = {}
        for t in res.trace:
            last[t.cu] = t
        assert all(t.labels_changed == 0 or t.iteration == 20 for t in last.values())

    def test_labels_feasible(self, run0):
        lab, unl, counts, res = run0
        assert res.assignment.satisfies(counts.as_array())
        assert np.array_equal(np.bincount(res.initial_labels, minlength=4), counts.as_array())

    def test_final_objective_consistent(self, run0):
        lab, unl, counts, res = run0
        C = cost_matrix(LossKind.LargeMargin, res.w, unl)
        assert res.assignment.objective == pytest.approx(
            float(np.sum(C.values[np.arange(len(unl)), res.assignment.label_of])), rel=1e-12)

    def test_deterministic(self, run0):
        lab, unl, counts, res = run0
        again = train_semisup(lab, unl, counts, cfg(0), taxonomy=TAX)
        assert np.array_equal(again.assignment.label_of, res.assignment.label_of)
        assert again.w == res.w

    def test_transduction_beats_supervised_predictions(self):
        wins = 0
        for seed in range(10):
            lab, unl, _, counts = task(seed)
            res = train_semisup(lab, unl, counts, cfg(seed), taxonomy=TAX)
            sup_acc = np.mean(predict_many(res.supervised_w, unl) == unl.gold)
            wins += np.mean(res.assignment.label_of == unl.gold) >= sup_acc
        assert wins >= 8

    def test_solvers_agree_within_one_percent(self):
        for seed in range(3):
            lab, unl, _, counts = task(seed, n_unlabeled=200)
            a = train_semisup(lab, unl, counts, cfg(seed), assignment_solver="switching", taxonomy=TAX)
            b = train_semisup(lab, unl, counts, cfg(seed), assignment_solver="simplex", taxonomy=TAX)
            assert b.assignment.satisfies(counts.as_array())
            assert abs(a.final_objective - b.final_objective) <= 0.01 * abs(b.final_objective)

    def test_maxent_and_hierarchy(self):
        lab, unl, _, counts = task(2, n_unlabeled=120)
        tax = Taxonomy((0, 0, 0, 1, 1, 2, 2), (3, 4, 5, 6))
        res = train_semisup(lab, unl, counts, cfg(2, schedule=(0.1, 1.0)), LossKind.Maxent, taxonomy=tax)
        assert res.assignment.satisfies(counts.as_array())
        assert res.w.taxonomy == tax

    def test_bad_inputs(self):
        lab, unl, _, counts = task(3, n_unlabeled=40)
        with pytest.raises(InfeasibleCounts):
            train_semisup(lab, unl, [10, 10, 10, 11], cfg(), taxonomy=TAX)
        with pytest.raises(ValueError):
            train_semisup(lab, unl, counts, cfg(), assignment_solver="lp", taxonomy=TAX)
        with pytest.raises(ValueError):
            train_semisup(lab, unl, [20, 20], cfg(), taxonomy=TAX)


class TestNoAnneal:
    def test_single_stage_at_final_cu(self):
        lab, unl, _, counts = task(4, n_unlabeled=120)
        res = run_no_anneal(lab, unl, counts, cfg(4), taxonomy=TAX)
        assert {t.cu for t in res.trace} == {1.0}

    def test_equals_one_element_schedule(self):
        lab, unl, _, counts = task(5, n_unlabeled=120)
        a = run_no_anneal(lab, unl, counts, cfg(5), taxonomy=TAX)
        b = train_semisup(lab, unl, counts, cfg(5, schedule=(1.0,)), taxonomy=TAX)
        assert np.array_equal(a.assignment.label_of, b.assignment.label_of)
        assert a.w == b.w
