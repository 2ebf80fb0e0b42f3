"""Datasets, taxonomies and label-count bookkeeping.

Datasets are stored in a plain-text sparse format, one example per line::

    <label> <id>:<val> <id>:<val> ...

where ``<label>`` is a leaf index or ``?`` for an unlabeled example. Lines
starting with ``#`` are comments. Taxonomy files hold one node per line,
``<node_id> <parent_id> <leaf_flag>``, with the root as its own parent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp


class DataFormatError(ValueError):
    """Malformed dataset or taxonomy input."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass(frozen=True, eq=False)
class SparseVector:
    """Feature vector as parallel arrays of strictly increasing ids and nonzero values."""

    indices: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64)
        val = np.asarray(self.values, dtype=np.float64)
        if idx.ndim != 1 or idx.shape != val.shape:
            raise ValueError("indices and values must be 1-d arrays of equal length")
        if idx.size and (idx[0] < 0 or np.any(np.diff(idx) <= 0)):
            raise ValueError("feature ids must be non-negative and strictly increasing")
        if not np.all(np.isfinite(val)):
            raise ValueError("feature values must be finite")
        if np.any(val == 0):
            raise ValueError("zero-valued entries are not stored")
        idx.setflags(write=False)
        val.setflags(write=False)
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "values", val)

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[int, float]]) -> "SparseVector":
        """Build from unordered (id, value) pairs; zeros are dropped, duplicate ids rejected."""
        pairs = sorted((int(i), float(v)) for i, v in pairs)
        ids = [i for i, _ in pairs]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate feature id")
        kept = [(i, v) for i, v in pairs if v != 0.0]
        return cls(np.array([i for i, _ in kept], dtype=np.int64),
                   np.array([v for _, v in kept], dtype=np.float64))

    @classmethod
    def from_dense(cls, x: Sequence[float]) -> "SparseVector":
        x = np.asarray(x, dtype=np.float64)
        nz = np.flatnonzero(x)
        return cls(nz, x[nz])

    @property
    def nnz(self) -> int:
        return int(self.indices.size)

    def entries(self) -> list[tuple[int, float]]:
        return list(zip(self.indices.tolist(), self.values.tolist()))

    def to_dense(self, dim: int) -> np.ndarray:
        out = np.zeros(dim)
        out[self.indices] = self.values
        return out

    def __eq__(self, other):
        if not isinstance(other, SparseVector):
            return NotImplemented
        return (np.array_equal(self.indices, other.indices)
                and np.array_equal(self.values, other.values))

    def __repr__(self):
        return f"SparseVector({self.entries()!r})"


@dataclass(frozen=True, eq=False)
class Taxonomy:
    """Rooted tree over class nodes; the ordered leaves are the label set.

    ``parent[root] == root``. Leaf index ``y`` refers to node ``leaves[y]``.
    """

    parent: tuple[int, ...]
    leaves: tuple[int, ...]

    def __post_init__(self):
        parent = tuple(int(p) for p in self.parent)
        leaves = tuple(int(v) for v in self.leaves)
        object.__setattr__(self, "parent", parent)
        object.__setattr__(self, "leaves", leaves)
        n_nodes = len(parent)
        if n_nodes == 0:
            raise ValueError("empty taxonomy")
        if any(p < 0 or p >= n_nodes for p in parent):
            raise ValueError("parent id out of range")
        roots = [v for v, p in enumerate(parent) if p == v]
        if len(roots) != 1:
            raise ValueError(f"expected exactly one root, found {len(roots)}")
        if len(set(leaves)) != len(leaves):
            raise ValueError("duplicate leaf")
        children = self.children
        for v in leaves:
            if not 0 <= v < n_nodes:
                raise ValueError(f"leaf {v} out of range")
            if children[v]:
                raise ValueError(f"leaf node {v} has children")
        leaf_set = set(leaves)
        for v in range(n_nodes):
            if v not in leaf_set and not children[v]:
                raise ValueError(f"internal node {v} has no children")
        # Walking up from every node must hit the root within n_nodes steps.
        for v in range(n_nodes):
            u, steps = v, 0
            while u != self.root:
                u = parent[u]
                steps += 1
                if steps > n_nodes:
                    raise ValueError("taxonomy contains a cycle")

    @classmethod
    def flat(cls, n_classes: int) -> "Taxonomy":
        """Depth-1 taxonomy: node 0 is the root, node ``y + 1`` is class ``y``."""
        if n_classes < 1:
            raise ValueError("need at least one class")
        return cls((0,) * (n_classes + 1), tuple(range(1, n_classes + 1)))

    @cached_property
    def root(self) -> int:
        return next(v for v, p in enumerate(self.parent) if p == v)

    @cached_property
    def children(self) -> list[list[int]]:
        kids: list[list[int]] = [[] for _ in self.parent]
        for v, p in enumerate(self.parent):
            if p != v:
                kids[p].append(v)
        return kids

    @property
    def n_nodes(self) -> int:
        return len(self.parent)

    @property
    def n_classes(self) -> int:
        return len(self.leaves)

    @property
    def is_flat(self) -> bool:
        return all(self.parent[v] == self.root for v in self.leaves)

    def path(self, leaf_index: int) -> list[int]:
        """Node ids from just below the root down to the leaf."""
        v = self.leaves[leaf_index]
        out = []
        while v != self.root:
            out.append(v)
            v = self.parent[v]
        return out[::-1]

    def depth(self) -> int:
        return max(len(self.path(y)) for y in range(self.n_classes))

    def __eq__(self, other):
        if not isinstance(other, Taxonomy):
            return NotImplemented
        return self.parent == other.parent and self.leaves == other.leaves


def load_taxonomy(path) -> Taxonomy:
    rows = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 3:
                raise DataFormatError("expected '<node_id> <parent_id> <leaf_flag>'", lineno)
            try:
                node, parent, flag = (int(p) for p in parts)
            except ValueError:
                raise DataFormatError("non-integer field", lineno) from None
            if flag not in (0, 1):
                raise DataFormatError("leaf flag must be 0 or 1", lineno)
            if node in rows:
                raise DataFormatError(f"duplicate node {node}", lineno)
            rows[node] = (parent, flag)
    n_nodes = len(rows)
    if sorted(rows) != list(range(n_nodes)):
        raise DataFormatError("node ids must be contiguous from 0")
    parent = [rows[v][0] for v in range(n_nodes)]
    leaves = [v for v in range(n_nodes) if rows[v][1] == 1]
    try:
        return Taxonomy(tuple(parent), tuple(leaves))
    except ValueError as exc:
        raise DataFormatError(str(exc)) from None


def save_taxonomy(tax: Taxonomy, path) -> None:
    leaf_set = set(tax.leaves)
    with open(path, "w") as fh:
        for v, p in enumerate(tax.parent):
            fh.write(f"{v} {p} {int(v in leaf_set)}\n")


@dataclass(frozen=True, eq=False)
class Dataset:
    """A list of sparse examples with optional leaf-index labels.

    ``gold`` carries held-back labels of an unlabeled split. It exists for
    evaluation only; training code never reads it.
    """

    examples: tuple[SparseVector, ...]
    labels: np.ndarray | None
    feature_dim: int
    gold: np.ndarray | None = field(default=None)

    def __post_init__(self):
        object.__setattr__(self, "examples", tuple(self.examples))
        for name in ("labels", "gold"):
            arr = getattr(self, name)
            if arr is not None:
                arr = np.asarray(arr, dtype=np.int64)
                if arr.shape != (len(self.examples),):
                    raise ValueError(f"{name} length does not match number of examples")
                if arr.size and arr.min() < 0:
                    raise ValueError(f"negative entry in {name}")
                arr.setflags(write=False)
                object.__setattr__(self, name, arr)
        for x in self.examples:
            if x.nnz and x.indices[-1] >= self.feature_dim:
                raise ValueError("feature id beyond feature_dim")

    def __len__(self):
        return len(self.examples)

    @property
    def is_labeled(self) -> bool:
        return self.labels is not None

    @cached_property
    def matrix(self) -> sp.csr_matrix:
        """Examples stacked as a CSR matrix of shape (len, feature_dim)."""
        indptr = np.zeros(len(self.examples) + 1, dtype=np.int64)
        if self.examples:
            np.cumsum([x.nnz for x in self.examples], out=indptr[1:])
            indices = np.concatenate([x.indices for x in self.examples])
            data = np.concatenate([x.values for x in self.examples])
        else:
            indices = np.zeros(0, dtype=np.int64)
            data = np.zeros(0)
        return sp.csr_matrix((data, indices, indptr), shape=(len(self.examples), self.feature_dim))

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx, dtype=np.int64)
        return Dataset(
            tuple(self.examples[i] for i in idx),
            None if self.labels is None else self.labels[idx],
            self.feature_dim,
            None if self.gold is None else self.gold[idx],
        )

    def with_labels(self, labels) -> "Dataset":
        return Dataset(self.examples, labels, self.feature_dim, self.gold)

    def hide_labels(self) -> "Dataset":
        """Unlabeled copy; current labels move to ``gold``."""
        return Dataset(self.examples, None, self.feature_dim, self.labels)

    def with_feature_dim(self, dim: int) -> "Dataset":
        return Dataset(self.examples, self.labels, dim, self.gold)

    def check_labels(self, n_classes: int) -> None:
        if self.labels is not None and self.labels.size and self.labels.max() >= n_classes:
            raise ValueError(f"label {int(self.labels.max())} out of range for {n_classes} classes")

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        if self.feature_dim != other.feature_dim or len(self) != len(other):
            return False
        if (self.labels is None) != (other.labels is None):
            return False
        if self.labels is not None and not np.array_equal(self.labels, other.labels):
            return False
        return all(a == b for a, b in zip(self.examples, other.examples))


@dataclass(frozen=True)
class LabelCounts:
    """Required number of unlabeled examples per class."""

    counts: tuple[int, ...]

    def __post_init__(self):
        counts = tuple(int(c) for c in self.counts)
        if any(c < 0 for c in counts):
            raise ValueError("label counts must be non-negative")
        object.__setattr__(self, "counts", counts)

    @property
    def n(self) -> int:
        return sum(self.counts)

    @property
    def m(self) -> int:
        return len(self.counts)

    def as_array(self) -> np.ndarray:
        return np.array(self.counts, dtype=np.int64)

    @classmethod
    def from_labels(cls, labels, n_classes: int) -> "LabelCounts":
        return cls(tuple(np.bincount(np.asarray(labels, dtype=np.int64), minlength=n_classes)))


def _parse_line(text: str, lineno: int, n_classes: int | None):
    parts = text.split()
    head, feats = parts[0], parts[1:]
    if head == "?":
        label = None
    else:
        try:
            label = int(head)
        except ValueError:
            raise DataFormatError(f"bad label {head!r}", lineno) from None
        if label < 0 or (n_classes is not None and label >= n_classes):
            raise DataFormatError(f"label {label} out of range", lineno)
    pairs = []
    for tok in feats:
        fid, sep, val = tok.partition(":")
        if not sep:
            raise DataFormatError(f"bad feature token {tok!r}", lineno)
        try:
            fid_i, val_f = int(fid), float(val)
        except ValueError:
            raise DataFormatError(f"bad feature token {tok!r}", lineno) from None
        if fid_i < 0:
            raise DataFormatError(f"negative feature id {fid_i}", lineno)
        if not math.isfinite(val_f):
            raise DataFormatError(f"non-finite value for feature {fid_i}", lineno)
        pairs.append((fid_i, val_f))
    try:
        x = SparseVector.from_pairs(pairs)
    except ValueError as exc:
        raise DataFormatError(str(exc), lineno) from None
    return label, x


def parse_dataset(lines: Iterable[str], n_classes: int | None = None,
                  feature_dim: int | None = None) -> Dataset:
    examples, labels = [], []
    for lineno, raw in enumerate(lines, 1):
        text = raw.strip()
        if not text or text.startswith("#"):
            continue
        label, x = _parse_line(text, lineno, n_classes)
        examples.append(x)
        labels.append(label)
    n_unl = sum(lab is None for lab in labels)
    if 0 < n_unl < len(labels):
        raise DataFormatError("file mixes labeled and unlabeled examples")
    max_id = max((int(x.indices[-1]) for x in examples if x.nnz), default=-1)
    if feature_dim is None:
        feature_dim = max_id + 1
    elif max_id >= feature_dim:
        raise DataFormatError(f"feature id {max_id} >= feature_dim {feature_dim}")
    if labels and n_unl == len(labels):
        arr = None
    else:
        arr = np.array(labels, dtype=np.int64)
    return Dataset(tuple(examples), arr, feature_dim)


def load_dataset(path, n_classes: int | None = None, feature_dim: int | None = None,
                 format: str = "sparse-label") -> Dataset:
    """Read a ``sparse-label`` file.

    Raises :class:`DataFormatError` (with the offending line number) on
    malformed tokens, duplicate feature ids, out-of-range labels and
    non-finite values.
    """
    if format != "sparse-label":
        raise ValueError(f"unsupported format {format!r}")
    with open(path) as fh:
        return parse_dataset(fh, n_classes=n_classes, feature_dim=feature_dim)


def format_dataset(d: Dataset, header: Sequence[str] = ()) -> str:
    out = [f"# {h}" for h in header]
    for k, x in enumerate(d.examples):
        label = "?" if d.labels is None else str(int(d.labels[k]))
        feats = " ".join(f"{i}:{v!r}" for i, v in x.entries())
        out.append(f"{label} {feats}".rstrip())
    return "\n".join(out) + "\n"


def save_dataset(d: Dataset, path, header: Sequence[str] = ()) -> None:
    Path(path).write_text(format_dataset(d, header))


def split_dataset(d: Dataset, fractions: tuple[float, float], seed: int):
    """Random (labeled, unlabeled, test) split.

    ``fractions`` is ``(unlabeled, labeled)``. Both sizes are floored and the
    remainder goes to the test set. The unlabeled split keeps its true labels
    in ``gold`` only.
    """
    f_unl, f_lab = (float(f) for f in fractions)
    if f_unl <= 0 or f_lab <= 0 or f_unl + f_lab >= 1:
        raise ValueError("fractions must be positive with sum < 1")
    if d.labels is None:
        raise ValueError("split_dataset needs a fully labeled dataset")
    n_total = len(d)
    n_unl = math.floor(f_unl * n_total)
    n_lab = math.floor(f_lab * n_total)
    n_test = n_total - n_unl - n_lab
    if min(n_unl, n_lab, n_test) < 1:
        raise ValueError(f"dataset of size {n_total} too small for fractions {fractions}")
    perm = np.random.default_rng(seed).permutation(n_total)
    unl = np.sort(perm[:n_unl])
    lab = np.sort(perm[n_unl:n_unl + n_lab])
    test = np.sort(perm[n_unl + n_lab:])
    return d.subset(lab), d.subset(unl).hide_labels(), d.subset(test)


def derive_label_counts(phi, n: int, tol: float = 1e-9) -> LabelCounts:
    """Round ``phi * n`` to integers summing to ``n`` by largest remainders.

    Ties in the remainder go to the lower class index.
    """
    phi = np.asarray(phi, dtype=np.float64)
    if phi.ndim != 1 or phi.size == 0:
        raise ValueError("phi must be a non-empty vector")
    if np.any(phi < 0) or not np.all(np.isfinite(phi)):
        raise ValueError("phi must be finite and non-negative")
    if abs(phi.sum() - 1.0) > tol:
        raise ValueError(f"phi sums to {phi.sum()!r}, expected 1")
    if n < 0:
        raise ValueError("n must be non-negative")
    raw = phi * n
    base = np.floor(raw).astype(np.int64)
    # floor can overshoot by one unit when phi sums to 1 + tol
    while base.sum() > n:
        base[np.argmax(base)] -= 1
    short = n - int(base.sum())
    order = np.lexsort((np.arange(phi.size), -(raw - base)))
    base[order[:short]] += 1
    return LabelCounts(tuple(base))


def estimate_phi(labels, n_classes: int) -> np.ndarray:
    """Class fractions observed in a labeled set."""
    counts = np.bincount(np.asarray(labels, dtype=np.int64), minlength=n_classes).astype(float)
    return counts / counts.sum()
