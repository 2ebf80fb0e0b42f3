"""Joint feature map, weight storage and scoring.

A weight vector holds one dense block per taxonomy node. The score of leaf
``y`` for input ``x`` is the sum of ``<block_v, x>`` over the nodes ``v`` on
the path from the root (excluded) down to ``y``. A flat multi-class problem
is the depth-1 case where each path is a single node.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .data import Dataset, SparseVector, Taxonomy

MAGIC = b"MCTSVMW1"


@dataclass(frozen=True, eq=False)
class PathSet:
    """Per-leaf root-to-leaf node paths, root excluded.

    ``index`` is an (m, depth) array padded with -1; ``membership`` is the
    (m, T) 0/1 matrix with ``membership[y, v] = 1`` iff ``v`` is on path(y).
    """

    paths: tuple[tuple[int, ...], ...]
    n_nodes: int

    @classmethod
    def from_taxonomy(cls, tax: Taxonomy) -> "PathSet":
        return cls(tuple(tuple(tax.path(y)) for y in range(tax.n_classes)), tax.n_nodes)

    @property
    def n_classes(self) -> int:
        return len(self.paths)

    @cached_property
    def depth(self) -> int:
        return max(len(p) for p in self.paths)

    @cached_property
    def is_flat(self) -> bool:
        return self.depth == 1

    @cached_property
    def index(self) -> np.ndarray:
        out = np.full((self.n_classes, self.depth), -1, dtype=np.int64)
        for y, p in enumerate(self.paths):
            out[y, :len(p)] = p
        return out

    @cached_property
    def lengths(self) -> np.ndarray:
        return np.array([len(p) for p in self.paths], dtype=np.int64)

    @cached_property
    def membership(self) -> np.ndarray:
        out = np.zeros((self.n_classes, self.n_nodes))
        for y, p in enumerate(self.paths):
            out[y, list(p)] = 1.0
        return out


class WeightVector:
    """Dense per-node weight blocks, shape (n_nodes, feature_dim).

    The root block is kept for layout regularity and is always zero.
    """

    def __init__(self, taxonomy: Taxonomy, feature_dim: int, blocks: np.ndarray | None = None):
        self.taxonomy = taxonomy
        self.feature_dim = int(feature_dim)
        if blocks is None:
            blocks = np.zeros((taxonomy.n_nodes, self.feature_dim))
        blocks = np.array(blocks, dtype=np.float64)
        if blocks.shape != (taxonomy.n_nodes, self.feature_dim):
            raise ValueError(f"blocks shape {blocks.shape} does not match "
                             f"({taxonomy.n_nodes}, {self.feature_dim})")
        if not np.all(np.isfinite(blocks)):
            raise ValueError("non-finite weights")
        self.blocks = blocks

    @classmethod
    def zeros(cls, taxonomy: Taxonomy, feature_dim: int) -> "WeightVector":
        return cls(taxonomy, feature_dim)

    @cached_property
    def pathset(self) -> PathSet:
        return PathSet.from_taxonomy(self.taxonomy)

    @property
    def n_classes(self) -> int:
        return self.taxonomy.n_classes

    def copy(self) -> "WeightVector":
        return WeightVector(self.taxonomy, self.feature_dim, self.blocks.copy())

    def sq_norm(self) -> float:
        return float(np.dot(self.blocks.ravel(), self.blocks.ravel()))

    def __eq__(self, other):
        if not isinstance(other, WeightVector):
            return NotImplemented
        return (self.taxonomy == other.taxonomy and self.feature_dim == other.feature_dim
                and np.array_equal(self.blocks, other.blocks))

    def __repr__(self):
        return (f"WeightVector(nodes={self.taxonomy.n_nodes}, classes={self.n_classes}, "
                f"feature_dim={self.feature_dim})")


def _as_matrix(x, feature_dim: int) -> sp.csr_matrix:
    if isinstance(x, Dataset):
        return x.matrix
    if isinstance(x, SparseVector):
        return sp.csr_matrix((x.values, x.indices, [0, x.nnz]), shape=(1, feature_dim))
    return sp.csr_matrix(x)


def node_dots(w: WeightVector, X: sp.csr_matrix) -> np.ndarray:
    """``<block_v, x_i>`` for every row i and node v, shape (n, T).

    Each row is accumulated independently over its stored entries in order,
    so a row's values do not depend on which other rows are in the batch.
    """
    if X.shape[1] > w.feature_dim:
        # features unseen at training time carry zero weight
        X = X[:, :w.feature_dim]
    B = w.blocks.T if X.shape[1] == w.feature_dim else w.blocks[:, :X.shape[1]].T
    return np.asarray(X @ B)


def leaf_scores_from_nodes(nd: np.ndarray, paths: PathSet, generic: bool = False) -> np.ndarray:
    """Sum node dots along each leaf path, in root-to-leaf order."""
    idx = paths.index
    if paths.is_flat and not generic:
        return nd[:, idx[:, 0]]
    out = nd[:, idx[:, 0]].copy()
    for k in range(1, paths.depth):
        col = idx[:, k]
        live = col >= 0
        out[:, live] += nd[:, col[live]]
    return out


def score_matrix(w: WeightVector, X) -> np.ndarray:
    """Scores of every leaf for every row of ``X``, shape (n, m)."""
    return leaf_scores_from_nodes(node_dots(w, _as_matrix(X, w.feature_dim)), w.pathset)


def score_all(w: WeightVector, x: SparseVector) -> np.ndarray:
    return score_matrix(w, x)[0]


def score(w: WeightVector, x: SparseVector, y: int) -> float:
    nd = node_dots(w, _as_matrix(x, w.feature_dim))[0]
    path = w.pathset.paths[y]
    total = nd[path[0]]
    for v in path[1:]:
        total = total + nd[v]
    return float(total)


def argmax_lowest(scores: np.ndarray) -> np.ndarray:
    """Row-wise argmax; ``np.argmax`` already returns the first maximum."""
    return np.argmax(scores, axis=-1)


def predict(w: WeightVector, x: SparseVector) -> int:
    return int(argmax_lowest(score_all(w, x)))


def predict_many(w: WeightVector, X) -> np.ndarray:
    return argmax_lowest(score_matrix(w, X))


def accumulate_feature(acc: np.ndarray, pathset: PathSet, x: SparseVector, y: int,
                       scale: float) -> np.ndarray:
    """Add ``scale * x`` into every node block on path(y), in place."""
    if scale != 0.0:
        for v in pathset.paths[y]:
            acc[v, x.indices] += scale * x.values
    return acc


# --- serialization ---------------------------------------------------------

def save_model(w: WeightVector, path, meta: dict | None = None, text: bool = False) -> None:
    """Write ``w`` in the binary layout, or as JSON when ``text`` is set.

    Binary layout, all little-endian::

        8s   magic b"MCTSVMW1"
        u32  metadata length L, then L bytes of UTF-8 JSON (run config)
        u64  feature_dim d
        u32  node count T, then T x i32 parent ids
        u32  leaf count m, then m x i32 leaf node ids
        f64  T*d block entries, row-major (block 0 first)
    """
    tax = w.taxonomy
    meta_bytes = json.dumps(meta or {}, sort_keys=True).encode()
    if text:
        doc = {
            "format": "mctsvm-model",
            "version": 1,
            "meta": meta or {},
            "feature_dim": w.feature_dim,
            "parent": list(tax.parent),
            "leaves": list(tax.leaves),
            "blocks": w.blocks.tolist(),
        }
        Path(path).write_text(json.dumps(doc) + "\n")
        return
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(meta_bytes)))
        fh.write(meta_bytes)
        fh.write(struct.pack("<QI", w.feature_dim, tax.n_nodes))
        fh.write(np.asarray(tax.parent, dtype="<i4").tobytes())
        fh.write(struct.pack("<I", tax.n_classes))
        fh.write(np.asarray(tax.leaves, dtype="<i4").tobytes())
        fh.write(np.ascontiguousarray(w.blocks, dtype="<f8").tobytes())


def load_model(path) -> tuple[WeightVector, dict]:
    """Read either layout written by :func:`save_model`; returns (weights, metadata)."""
    raw = Path(path).read_bytes()
    if raw[:8] != MAGIC:
        doc = json.loads(raw.decode())
        if doc.get("format") != "mctsvm-model":
            raise ValueError(f"{path}: not a model file")
        tax = Taxonomy(tuple(doc["parent"]), tuple(doc["leaves"]))
        w = WeightVector(tax, doc["feature_dim"],
                         np.array(doc["blocks"], dtype=np.float64).reshape(tax.n_nodes, -1))
        return w, doc.get("meta", {})
    pos = 8
    (meta_len,) = struct.unpack_from("<I", raw, pos)
    pos += 4
    meta = json.loads(raw[pos:pos + meta_len].decode() or "{}")
    pos += meta_len
    dim, n_nodes = struct.unpack_from("<QI", raw, pos)
    pos += 12
    parent = np.frombuffer(raw, dtype="<i4", count=n_nodes, offset=pos)
    pos += 4 * n_nodes
    (n_leaves,) = struct.unpack_from("<I", raw, pos)
    pos += 4
    leaves = np.frombuffer(raw, dtype="<i4", count=n_leaves, offset=pos)
    pos += 4 * n_leaves
    blocks = np.frombuffer(raw, dtype="<f8", count=n_nodes * dim, offset=pos)
    if pos + 8 * n_nodes * dim != len(raw):
        raise ValueError(f"{path}: truncated or oversized model file")
    tax = Taxonomy(tuple(parent.tolist()), tuple(leaves.tolist()))
    return WeightVector(tax, dim, blocks.reshape(n_nodes, dim)), meta
