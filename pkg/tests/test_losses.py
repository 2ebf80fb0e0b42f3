import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mctsvm.data import SparseVector, Taxonomy
from mctsvm.losses import (
    CostMatrix,
    LossKind,
    batch_gradient,
    cost_matrix,
    costs_from_scores,
    loss,
    loss_subgradient,
    margin_loss,
    maxent_loss,
)
from mctsvm.model import WeightVector

from conftest import random_dataset, random_sparse, random_weights, two_level_taxonomy

ONE = SparseVector(np.array([0]), np.array([1.0]))


def flat_w(scores):
    """Flat model whose scores on the unit vector ONE are ``scores``."""
    m = len(scores)
    blocks = np.zeros((m + 1, 1))
    blocks[1:, 0] = scores
    return WeightVector(Taxonomy.flat(m), 1, blocks)


class TestMargin:
    def test_zero_weights(self, rng):
        for m in (2, 3, 7):
            w = WeightVector.zeros(Taxonomy.flat(m), 4)
            assert margin_loss(w, random_sparse(rng, 4), m - 1)[0] == 1.0

    def test_satisfied_margin(self):
        assert margin_loss(flat_w([2.0, 0.5]), ONE, 0) == (0.0, 0)

    def test_violated_margin(self):
        assert margin_loss(flat_w([0.5, 2.0]), ONE, 0) == (2.5, 1)

    def test_argmax_tie_lowest(self):
        # s + L = (1, 1.5, 1.5): tie between 1 and 2
        assert margin_loss(flat_w([1.0, 0.5, 0.5]), ONE, 0)[1] == 1

    @given(st.integers(0, 10_000))
    def test_nonnegative(self, seed):
        rng = np.random.default_rng(seed)
        w = random_weights(rng, two_level_taxonomy(), 5, scale=3)
        x = random_sparse(rng, 5)
        assert all(margin_loss(w, x, y)[0] >= 0 for y in range(4))


class TestMaxent:
    def test_zero_weights(self, rng):
        for m in (2, 3, 5):
            w = WeightVector.zeros(Taxonomy.flat(m), 3)
            assert maxent_loss(w, random_sparse(rng, 3), 0) == pytest.approx(math.log(m), rel=1e-15)

    def test_two_class_value(self):
        assert maxent_loss(flat_w([1.0, 0.0]), ONE, 0) == pytest.approx(0.31326168751822286, abs=1e-12)
        assert maxent_loss(flat_w([1.0, 0.0]), ONE, 0) == pytest.approx(math.log1p(math.exp(-1)), rel=1e-14)

    def test_three_class_uniform(self):
        assert maxent_loss(flat_w([0.0, 0.0, 0.0]), ONE, 2) == pytest.approx(1.0986122886681098, rel=1e-14)

    def test_large_scores_do_not_overflow(self):
        v = maxent_loss(flat_w([1000.0, 0.0]), ONE, 1)
        assert v == pytest.approx(1000.0)

    @given(st.integers(0, 10_000))
    def test_strictly_positive(self, seed):
        rng = np.random.default_rng(seed)
        w = random_weights(rng, two_level_taxonomy(), 5, scale=2)
        x = random_sparse(rng, 5)
        assert all(maxent_loss(w, x, y) > 0 for y in range(4))


@pytest.mark.parametrize("kind", list(LossKind))
@given(seed=st.integers(0, 10_000), t=st.floats(0, 1))
def test_convexity(kind, seed, t):
    rng = np.random.default_rng(seed)
    tax = two_level_taxonomy()
    w1, w2 = random_weights(rng, tax, 5), random_weights(rng, tax, 5)
    x = random_sparse(rng, 5)
    y = int(rng.integers(4))
    mix = WeightVector(tax, 5, t * w1.blocks + (1 - t) * w2.blocks)
    assert loss(kind, mix, x, y) <= t * loss(kind, w1, x, y) + (1 - t) * loss(kind, w2, x, y) + 1e-9


class TestGradients:
    def test_zero_when_margin_met(self):
        w = flat_w([3.0, 0.0, 0.5])
        assert np.count_nonzero(loss_subgradient(LossKind.LargeMargin, w, ONE, 0, 1.0)) == 0

    def test_maxent_uniform_two_class(self, rng):
        w = WeightVector.zeros(Taxonomy.flat(2), 4)
        x = random_sparse(rng, 4, density=1.0)
        g = loss_subgradient(LossKind.Maxent, w, x, 1, 2.0)
        assert np.allclose(g[2], (0.5 - 1) * 2.0 * x.to_dense(4))
        assert np.allclose(g[1], 0.5 * 2.0 * x.to_dense(4))
        assert np.array_equal(g[0], np.zeros(4))

    @given(st.integers(0, 10_000))
    def test_maxent_finite_differences(self, seed):
        rng = np.random.default_rng(seed)
        tax = two_level_taxonomy() if seed % 2 else Taxonomy.flat(int(rng.integers(2, 6)))
        d = int(rng.integers(1, 21))
        w = random_weights(rng, tax, d)
        x = random_sparse(rng, d, density=0.7)
        y = int(rng.integers(tax.n_classes))
        g = loss_subgradient(LossKind.Maxent, w, x, y, 1.0)
        h = 1e-6
        num = np.zeros_like(w.blocks)
        for idx in np.ndindex(*w.blocks.shape):
            wp, wm = w.copy(), w.copy()
            wp.blocks[idx] += h
            wm.blocks[idx] -= h
            num[idx] = (maxent_loss(wp, x, y) - maxent_loss(wm, x, y)) / (2 * h)
        err = np.linalg.norm(g - num) / max(np.linalg.norm(num), 1e-8)
        assert err <= 1e-5 or np.linalg.norm(g - num) <= 1e-9

    @given(st.integers(0, 10_000))
    def test_margin_subgradient_inequality(self, seed):
        rng = np.random.default_rng(seed)
        tax = two_level_taxonomy()
        w = random_weights(rng, tax, 6)
        x = random_sparse(rng, 6)
        y = int(rng.integers(4))
        g = loss_subgradient(LossKind.LargeMargin, w, x, y, 1.0)
        base = margin_loss(w, x, y)[0]
        for _ in range(5):
            w2 = WeightVector(tax, 6, w.blocks + rng.normal(scale=0.3, size=w.blocks.shape))
            assert margin_loss(w2, x, y)[0] >= base + np.sum(g * (w2.blocks - w.blocks)) - 1e-9

    @pytest.mark.parametrize("kind", list(LossKind))
    def test_batch_matches_per_example(self, kind, rng):
        tax = two_level_taxonomy()
        w = random_weights(rng, tax, 7)
        d = random_dataset(rng, 15, 7, m=4)
        weights = rng.random(15)
        acc = np.zeros_like(w.blocks)
        for i, x in enumerate(d.examples):
            loss_subgradient(kind, w, x, int(d.labels[i]), weights[i], acc)
        assert np.allclose(batch_gradient(kind, w, d, d.labels, weights), acc, atol=1e-12)


class TestCostMatrix:
    def test_zero_weights(self, rng):
        d = random_dataset(rng, 6, 4)
        w = WeightVector.zeros(Taxonomy.flat(3), 4)
        assert np.array_equal(cost_matrix(LossKind.LargeMargin, w, d).values, np.ones((6, 3)))
        assert np.allclose(cost_matrix(LossKind.Maxent, w, d).values, math.log(3), rtol=1e-15)

    @pytest.mark.parametrize("kind", list(LossKind))
    def test_rows_match_per_entry_losses(self, kind, rng):
        tax = two_level_taxonomy()
        w = random_weights(rng, tax, 6)
        d = random_dataset(rng, 12, 6)
        C = cost_matrix(kind, w, d).values
        per_entry = np.array([[loss(kind, w, x, y) for y in range(4)] for x in d.examples])
        assert np.allclose(C, per_entry, rtol=0, atol=1e-12)

    def test_margin_costs_exact_with_ties(self):
        S = np.array([[1.0, 1.0, 0.0], [0.0, 0.0, 0.0], [2.0, -1.0, 2.0]])
        brute = np.array([[max([S[i, y]] + [S[i, k] + 1 for k in range(3) if k != y]) - S[i, y]
                           for y in range(3)] for i in range(3)])
        assert np.array_equal(costs_from_scores(LossKind.LargeMargin, S), brute)

    def test_validation(self):
        with pytest.raises(ValueError):
            CostMatrix(np.array([[np.nan, 1.0]]))
        with pytest.raises(ValueError):
            CostMatrix(np.zeros((0, 2)))


def test_parse_kind():
    assert LossKind.parse("margin") is LossKind.LargeMargin
    assert LossKind.parse("Maxent") is LossKind.Maxent
    with pytest.raises(ValueError):
        LossKind.parse("hinge")
