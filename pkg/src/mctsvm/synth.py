"""Desk-scale synthetic datasets.

``clusters``: each class owns a small block of signal features carrying a
Gaussian bump; every example also switches on a random sparse subset of
shared noise features. With few labels the noise dominates class centroids;
with many labels it averages out, which is the regime where transduction
helps.

``sparse-text``: bag-of-words counts drawn from a per-class multinomial
that mixes a shared background vocabulary with class-specific topic words,
L2-normalized per document.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset, SparseVector


@dataclass(frozen=True)
class ClusterParams:
    n_classes: int = 4
    per_class: int = 100
    feats_per_class: int = 2
    signal_mean: float = 1.0
    signal_std: float = 0.3
    n_noise: int = 400
    noise_rate: float = 0.1
    noise_std: float = 1.0


@dataclass(frozen=True)
class TextParams:
    n_classes: int = 4
    per_class: int = 100
    vocab: int = 2000
    topic_words: int = 40
    topic_weight: float = 0.15
    doc_length: float = 60.0


def make_clusters(params: ClusterParams = ClusterParams(), seed: int = 0) -> Dataset:
    p = params
    rng = np.random.default_rng(seed)
    n_signal = p.n_classes * p.feats_per_class
    dim = n_signal + p.n_noise
    examples, labels = [], []
    for y in range(p.n_classes):
        for _ in range(p.per_class):
            sig = p.signal_mean + p.signal_std * rng.standard_normal(p.feats_per_class)
            sig_ids = np.arange(y * p.feats_per_class, (y + 1) * p.feats_per_class)
            on = np.flatnonzero(rng.random(p.n_noise) < p.noise_rate)
            noise = p.noise_std * rng.standard_normal(on.size)
            ids = np.concatenate([sig_ids, n_signal + on])
            vals = np.concatenate([sig, noise])
            keep = vals != 0
            examples.append(SparseVector(ids[keep], vals[keep]))
            labels.append(y)
    return Dataset(tuple(examples), np.array(labels), dim)


def make_sparse_text(params: TextParams = TextParams(), seed: int = 0) -> Dataset:
    p = params
    rng = np.random.default_rng(seed)
    background = rng.dirichlet(np.full(p.vocab, 0.5))
    examples, labels = [], []
    for y in range(p.n_classes):
        topic = np.zeros(p.vocab)
        words = rng.choice(p.vocab, size=p.topic_words, replace=False)
        topic[words] = rng.dirichlet(np.ones(p.topic_words))
        dist = (1 - p.topic_weight) * background + p.topic_weight * topic
        for _ in range(p.per_class):
            length = max(1, rng.poisson(p.doc_length))
            counts = rng.multinomial(length, dist).astype(float)
            ids = np.flatnonzero(counts)
            vals = counts[ids] / np.linalg.norm(counts[ids])
            examples.append(SparseVector(ids, vals))
            labels.append(y)
    return Dataset(tuple(examples), np.array(labels), p.vocab)


def stratified_indices(labels, n_per_class, rng) -> tuple[np.ndarray, np.ndarray]:
    """Pick ``n_per_class[y]`` random members of each class; returns (picked, rest)."""
    labels = np.asarray(labels)
    picked = []
    for y, k in enumerate(n_per_class):
        members = np.flatnonzero(labels == y)
        if k > members.size:
            raise ValueError(f"class {y} has {members.size} examples, {k} requested")
        picked.append(rng.choice(members, size=k, replace=False))
    picked = np.sort(np.concatenate(picked)) if picked else np.zeros(0, dtype=np.int64)
    rest = np.setdiff1d(np.arange(labels.size), picked)
    return picked, rest


def spread(total: int, n_classes: int) -> list[int]:
    """Split ``total`` as evenly as possible, extras to the lower classes."""
    base, extra = divmod(total, n_classes)
    return [base + (y < extra) for y in range(n_classes)]


def make_task(d: Dataset, n_labeled: int, n_unlabeled: int, seed: int):
    """Class-balanced (labeled, unlabeled, test) split of a labeled dataset.

    Labeled and unlabeled sets are stratified so their class counts are
    exactly known; everything left over is the test set.
    """
    m = int(d.labels.max()) + 1
    rng = np.random.default_rng(seed)
    lab, rest = stratified_indices(d.labels, spread(n_labeled, m), rng)
    unl_local, test_local = stratified_indices(d.labels[rest], spread(n_unlabeled, m), rng)
    return d.subset(lab), d.subset(rest[unl_local]).hide_labels(), d.subset(rest[test_local])
