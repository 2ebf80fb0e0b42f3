"""Transportation simplex for the unit-supply assignment problem.

Every example (source) ships one unit; class ``y`` (sink) receives exactly
``counts[y]`` units. A basis is a spanning tree with ``n + m - 1`` cells.
Because each source has exactly one unit-flow cell, the tree has a compact
shape: every source owns a *home* cell (flow 1), and the ``m - 1`` remaining
basic cells carry zero flow and are owned by a handful of *bridge* sources
that tie the sinks together. Pivots walk the small core tree of sinks and
bridges, so each iteration costs O(m) bookkeeping plus one O(nm) pricing
pass.

Entering and leaving cells follow Bland's rule on the cell index
``i * m + y``, which rules out cycling under the heavy degeneracy of this
problem.
"""

from __future__ import annotations

import logging
from collections import deque

import numpy as np

from .core import Assignment, _values, assignment_objective, check_counts, greedy_init

log = logging.getLogger(__name__)


class SimplexError(RuntimeError):
    pass


class _Basis:
    def __init__(self, C: np.ndarray, home: np.ndarray):
        self.C = C
        self.n, self.m = C.shape
        self.home = home
        # zero-flow basic cells, source -> set of sinks
        self.extra: dict[int, set[int]] = {}
        # connect every other sink through the lexicographically first cells
        first = {y for y in range(self.m) if y != home[0]}
        if first:
            self.extra[0] = first

    def cells(self, b: int) -> set[int]:
        return {int(self.home[b])} | self.extra.get(b, set())

    def n_basic(self) -> int:
        return self.n + sum(len(s) for s in self.extra.values())

    def sink_adjacency(self) -> list[list[int]]:
        adj: list[list[int]] = [[] for _ in range(self.m)]
        for b in sorted(self.extra):
            for s in sorted(self.cells(b)):
                adj[s].append(b)
        return adj

    def potentials(self) -> tuple[np.ndarray, np.ndarray]:
        C, m = self.C, self.m
        v = np.full(m, np.nan)
        v[0] = 0.0
        adj = self.sink_adjacency()
        seen: set[int] = set()
        queue = deque([0])
        while queue:
            s = queue.popleft()
            for b in adj[s]:
                if b in seen:
                    continue
                seen.add(b)
                u_b = C[b, s] - v[s]
                for s2 in sorted(self.cells(b)):
                    if np.isnan(v[s2]):
                        v[s2] = C[b, s2] - u_b
                        queue.append(s2)
        if np.isnan(v).any():
            raise SimplexError("basis is not a spanning tree")
        u = C[np.arange(self.n), self.home] - v[self.home]
        return u, v

    def path(self, i: int, y: int) -> list[int]:
        """Alternating source/sink node list from source ``i`` to sink ``y``."""
        adj = self.sink_adjacency()
        # core nodes: ("s", sink) and ("b", bridge source)
        if i in self.extra:
            start = ("b", i)
            prefix: list[int] = []
        else:
            start = ("s", int(self.home[i]))
            prefix = [i]
        target = ("s", y)
        parent = {start: None}
        queue = deque([start])
        while queue:
            node = queue.popleft()
            if node == target:
                break
            kind, k = node
            nbrs = [("b", b) for b in adj[k]] if kind == "s" else [("s", s) for s in sorted(self.cells(k))]
            for nb in nbrs:
                if nb not in parent:
                    parent[nb] = node
                    queue.append(nb)
        if target not in parent:
            raise SimplexError("sink unreachable in basis tree")
        walk = []
        node = target
        while node is not None:
            walk.append(node[1])
            node = parent[node]
        return prefix + walk[::-1]

    def pivot(self, i: int, y: int) -> int:
        """Bring cell (i, y) into the basis; returns the flow moved (0 or 1)."""
        p = self.path(i, y)
        k = (len(p) - 2) // 2
        minus = [(p[2 * j], p[2 * j + 1]) for j in range(k + 1)]
        flow = [int(self.home[b] == s) for b, s in minus]
        theta = min(flow)
        leave = min((b * self.m + s, (b, s)) for (b, s), f in zip(minus, flow) if f == theta)[1]
        if theta == 1:
            for j, (b, s) in enumerate(minus):
                new_home = y if j == 0 else p[2 * j - 1]
                if j > 0:
                    self.extra[b].discard(new_home)
                self.home[b] = new_home
                if (b, s) != leave:
                    self.extra.setdefault(b, set()).add(s)
        else:
            self.extra.setdefault(i, set()).add(y)
            self.extra[leave[0]].discard(leave[1])
        for b in [b for b, s in self.extra.items() if not s]:
            del self.extra[b]
        return theta


def solve_simplex(C, counts, init: Assignment | None = None, max_iter: int | None = None,
                  tol: float | None = None) -> Assignment:
    """Globally optimal assignment by the transportation simplex method.

    The starting basis is ``init`` (or a greedy assignment on ``-C``)
    completed to a spanning tree with zero-flow cells. ``info`` reports
    pivots and how many of them were degenerate.
    """
    vals = _values(C)
    n, m = vals.shape
    counts = check_counts(n, counts)
    if init is None:
        labels = greedy_init(-vals, counts).label_of.copy()
    else:
        if not init.satisfies(counts):
            raise ValueError("initial assignment violates the label counts")
        labels = init.label_of.copy()
    if m == 1 or n == 0:
        return Assignment.from_labels(labels, vals, m, pivots=0, degenerate=0)
    if tol is None:
        tol = 1e-12 * max(1.0, float(np.abs(vals).max()))
    if max_iter is None:
        max_iter = 50 * n * m + 1000
    basis = _Basis(vals, labels)
    pivots = degenerate = 0
    while True:
        u, v = basis.potentials()
        reduced = vals - u[:, None] - v[None, :]
        flat = reduced.ravel()
        cand = np.flatnonzero(flat < -tol)
        if cand.size == 0:
            break
        if pivots >= max_iter:
            raise SimplexError(f"no optimum after {max_iter} pivots")
        cell = int(cand[0])
        moved = basis.pivot(cell // m, cell % m)
        pivots += 1
        degenerate += moved == 0
    if basis.n_basic() != n + m - 1:
        raise SimplexError("basis size drifted")
    labels = basis.home.astype(np.int64)
    return Assignment(labels, m, assignment_objective(vals, labels),
                      {"pivots": pivots, "degenerate": degenerate})
