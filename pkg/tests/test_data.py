import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mctsvm.data import (
    DataFormatError,
    Dataset,
    LabelCounts,
    SparseVector,
    Taxonomy,
    derive_label_counts,
    estimate_phi,
    format_dataset,
    load_dataset,
    load_taxonomy,
    parse_dataset,
    save_dataset,
    save_taxonomy,
    split_dataset,
)

from conftest import random_dataset


def parse(text, **kw):
    return parse_dataset(text.splitlines(), **kw)


class TestParse:
    def test_labeled_line(self):
        d = parse("2 1:0.5 7:1.0", n_classes=3)
        assert d.labels.tolist() == [2]
        assert d.examples[0].entries() == [(1, 0.5), (7, 1.0)]

    def test_unlabeled_line(self):
        d = parse("? 3:1.0")
        assert d.labels is None
        assert d.examples[0].entries() == [(3, 1.0)]

    def test_entries_are_sorted(self):
        d = parse("0 5:1.0 3:2.0")
        assert d.examples[0].entries() == [(3, 2.0), (5, 1.0)]

    def test_comments_and_blank_lines_skipped(self):
        d = parse("# header\n\n1 0:1\n# another\n0 2:3\n")
        assert len(d) == 2 and d.feature_dim == 3

    @pytest.mark.parametrize("text, lineno", [
        ("0 1:1\n0 1:1 1:2", 2),
        ("0 1:nan", 1),
        ("0 1:inf", 1),
        ("0 x:1", 1),
        ("0 1=2", 1),
        ("zz 1:1", 1),
        ("0 -1:1", 1),
        ("# c\n5 1:1", 2),
    ])
    def test_errors_carry_line_numbers(self, text, lineno):
        with pytest.raises(DataFormatError) as err:
            parse(text, n_classes=3)
        assert err.value.line == lineno
        assert f"line {lineno}" in str(err.value)

    def test_mixed_labeled_and_unlabeled_rejected(self):
        with pytest.raises(DataFormatError):
            parse("0 1:1\n? 2:1")

    def test_feature_dim_too_small(self):
        with pytest.raises(DataFormatError):
            parse("0 9:1", feature_dim=5)

    def test_explicit_zero_values_are_dropped(self):
        d = parse("0 1:0 2:3")
        assert d.examples[0].entries() == [(2, 3.0)]


class TestSparseVector:
    def test_rejects_unsorted(self):
        with pytest.raises(ValueError):
            SparseVector(np.array([3, 1]), np.array([1.0, 1.0]))

    def test_rejects_zero_and_nonfinite(self):
        with pytest.raises(ValueError):
            SparseVector(np.array([1]), np.array([0.0]))
        with pytest.raises(ValueError):
            SparseVector(np.array([1]), np.array([np.inf]))

    def test_dense_round_trip(self, rng):
        x = rng.normal(size=8) * (rng.random(8) < 0.5)
        assert np.array_equal(SparseVector.from_dense(x).to_dense(8), x)


class TestRoundTrip:
    @given(st.integers(0, 10_000), st.integers(1, 15), st.integers(1, 12), st.booleans())
    def test_serialize_and_reload(self, seed, n, d, labeled):
        rng = np.random.default_rng(seed)
        ds = random_dataset(rng, n, d, m=3 if labeled else None)
        back = parse_dataset(format_dataset(ds, ["note"]).splitlines(), feature_dim=d)
        assert back == ds

    def test_file_round_trip(self, tmp_path, rng):
        ds = random_dataset(rng, 20, 10, m=4)
        save_dataset(ds, tmp_path / "d.txt", ["config: {}"])
        assert load_dataset(tmp_path / "d.txt", n_classes=4, feature_dim=10) == ds

    def test_taxonomy_round_trip(self, tmp_path):
        tax = Taxonomy((0, 0, 0, 1, 1, 2, 2), (3, 4, 5, 6))
        save_taxonomy(tax, tmp_path / "t.txt")
        assert load_taxonomy(tmp_path / "t.txt") == tax


class TestTaxonomy:
    def test_flat(self):
        tax = Taxonomy.flat(3)
        assert tax.root == 0 and tax.leaves == (1, 2, 3) and tax.is_flat
        assert [tax.path(y) for y in range(3)] == [[1], [2], [3]]

    def test_paths_exclude_root(self):
        tax = Taxonomy((0, 0, 1, 1), (2, 3))
        assert tax.path(0) == [1, 2] and not tax.is_flat

    @pytest.mark.parametrize("parent, leaves", [
        ((0, 1), (1,)),              # two roots
        ((1, 0), (1,)),              # no root, cycle
        ((0, 0, 1), (1,)),           # leaf with a child
        ((0, 0, 0), (1,)),           # childless internal node
        ((0, 0), (1, 1)),            # duplicate leaf
        ((0, 3), (1,)),              # parent out of range
    ])
    def test_invalid(self, parent, leaves):
        with pytest.raises(ValueError):
            Taxonomy(parent, leaves)

    def test_file_errors(self, tmp_path):
        p = tmp_path / "t.txt"
        p.write_text("0 0 0\n1 0 2\n")
        with pytest.raises(DataFormatError):
            load_taxonomy(p)
        p.write_text("0 0 0\n2 0 1\n")
        with pytest.raises(DataFormatError):
            load_taxonomy(p)


class TestSplit:
    def labeled(self, n):
        rng = np.random.default_rng(0)
        return random_dataset(rng, n, 5, m=2)

    def test_sizes_fifty_twenty(self):
        lab, unl, test = split_dataset(self.labeled(100), (0.5, 0.2), seed=3)
        assert (len(lab), len(unl), len(test)) == (20, 50, 30)

    def test_sizes_small(self):
        lab, unl, test = split_dataset(self.labeled(10), (0.5, 0.2), seed=3)
        assert (len(lab), len(unl), len(test)) == (2, 5, 3)

    def test_deterministic(self):
        d = self.labeled(40)
        a = split_dataset(d, (0.5, 0.2), seed=7)
        b = split_dataset(d, (0.5, 0.2), seed=7)
        assert all(x == y for x, y in zip(a, b))

    @given(st.integers(0, 1000), st.integers(5, 60))
    def test_partition_is_disjoint_and_covering(self, seed, n):
        # tag each example with its index through a unique feature
        ds = Dataset(tuple(SparseVector(np.array([i]), np.array([1.0])) for i in range(n)),
                     np.zeros(n, dtype=int), n)
        lab, unl, test = split_dataset(ds, (0.5, 0.2), seed)
        ids = [int(x.indices[0]) for part in (lab, unl, test) for x in part.examples]
        assert sorted(ids) == list(range(n))

    def test_unlabeled_keeps_gold_only(self):
        d = self.labeled(30)
        _, unl, _ = split_dataset(d, (0.5, 0.2), seed=1)
        assert unl.labels is None and unl.gold is not None and len(unl.gold) == len(unl)

    @pytest.mark.parametrize("fr", [(0.0, 0.2), (0.5, 0.0), (0.6, 0.4), (0.7, 0.5)])
    def test_bad_fractions(self, fr):
        with pytest.raises(ValueError):
            split_dataset(self.labeled(50), fr, seed=0)

    def test_too_small(self):
        with pytest.raises(ValueError):
            split_dataset(self.labeled(3), (0.5, 0.2), seed=0)


class TestLabelCounts:
    def test_even(self):
        assert derive_label_counts([0.5, 0.5], 10).counts == (5, 5)

    def test_largest_remainder(self):
        assert derive_label_counts([0.5, 0.3, 0.2], 7).counts == (4, 2, 1)

    def test_single_class(self):
        assert derive_label_counts([1.0], 9).counts == (9,)

    def test_tie_goes_to_lower_index(self):
        assert derive_label_counts([0.25, 0.25, 0.25, 0.25], 2).counts == (1, 1, 0, 0)

    def test_bad_sum(self):
        with pytest.raises(ValueError):
            derive_label_counts([0.5, 0.4], 10)

    def test_sum_tolerance(self):
        assert derive_label_counts([0.5, 0.5 + 5e-10], 10).n == 10

    def test_property_1000_draws(self):
        rng = np.random.default_rng(99)
        for _ in range(1000):
            m = int(rng.integers(1, 12))
            n = int(rng.integers(0, 500))
            phi = rng.dirichlet(np.ones(m))
            phi = phi / phi.sum()
            c = np.array(derive_label_counts(phi, n).counts)
            assert c.sum() == n
            assert np.all(np.abs(c - phi * n) < 1 + 1e-9)

    def test_estimate_phi(self):
        assert estimate_phi([0, 0, 1, 2], 4).tolist() == [0.5, 0.25, 0.25, 0.0]

    def test_from_labels(self):
        assert LabelCounts.from_labels([2, 0, 2], 3).counts == (1, 0, 2)
