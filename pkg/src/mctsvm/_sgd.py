"""Compiled inner loop for the stochastic subgradient solver.

Weights are kept as ``W = scale * V`` so the shrink step of the L2 term is
O(1). The weighted running sum of iterates, with iterate t weighted by
``t + t0``, is kept as ``U + beta * V`` so that averaging also touches only
the coordinates an update touches.

``step_weight[i]`` is the importance weight of example i: its objective
weight divided by its sampling probability, which keeps each step an
unbiased estimate of the full subgradient.
"""

import numpy as np
from numba import njit

MARGIN = 0
MAXENT = 1


@njit(cache=True)
def sgd_epoch(indptr, indices, data, labels, step_weight, order, path_index, membership,
              inner_nodes, V, U, scale, beta, t, t0, lam, loss_kind):
    n_classes, depth = path_index.shape
    n_nodes = membership.shape[1]
    nd = np.zeros(n_nodes)
    sc = np.zeros(n_classes)
    coef = np.zeros(n_nodes)
    for k in range(order.shape[0]):
        i = order[k]
        t += 1.0
        eta = 1.0 / (lam * (t + t0))
        start = indptr[i]
        end = indptr[i + 1]
        for v in inner_nodes:
            acc = 0.0
            for p in range(start, end):
                acc += V[v, indices[p]] * data[p]
            nd[v] = acc * scale
        for y in range(n_classes):
            acc = nd[path_index[y, 0]]
            for j in range(1, depth):
                v = path_index[y, j]
                if v >= 0:
                    acc += nd[v]
            sc[y] = acc
        yt = labels[i]
        active = True
        if loss_kind == MARGIN:
            best = -np.inf
            y_star = 0
            for y in range(n_classes):
                val = sc[y] if y == yt else sc[y] + 1.0
                if val > best:
                    best = val
                    y_star = y
            if y_star == yt:
                active = False
            else:
                for v in range(n_nodes):
                    coef[v] = membership[y_star, v] - membership[yt, v]
        else:
            top = sc.max()
            z = 0.0
            for y in range(n_classes):
                sc[y] = np.exp(sc[y] - top)
                z += sc[y]
            for v in range(n_nodes):
                coef[v] = -membership[yt, v]
            for y in range(n_classes):
                py = sc[y] / z
                for v in range(n_nodes):
                    coef[v] += py * membership[y, v]
        new_scale = scale * (1.0 - eta * lam)
        if active:
            g = eta * step_weight[i] / new_scale
            for v in inner_nodes:
                c = coef[v]
                if c != 0.0:
                    for p in range(start, end):
                        delta = -g * c * data[p]
                        j = indices[p]
                        V[v, j] += delta
                        U[v, j] -= beta * delta
        beta += (t + t0) * new_scale
        scale = new_scale
        if scale < 1e-9:
            V *= scale
            beta /= scale
            scale = 1.0
    return scale, beta, t
