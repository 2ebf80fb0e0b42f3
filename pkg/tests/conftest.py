import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from mctsvm.data import Dataset, SparseVector, Taxonomy
from mctsvm.model import WeightVector

settings.register_profile("repo", deadline=None, derandomize=True, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("repo")


def random_sparse(rng, d, density=0.5, scale=1.0):
    x = rng.normal(scale=scale, size=d) * (rng.random(d) < density)
    return SparseVector.from_dense(x)


def random_dataset(rng, n, d, m=None, density=0.5):
    xs = tuple(random_sparse(rng, d, density) for _ in range(n))
    labels = None if m is None else rng.integers(0, m, size=n)
    return Dataset(xs, labels, d)


def two_level_taxonomy():
    # root 0 -> A 1 -> leaves 3, 4 ; root -> B 2 -> leaves 5, 6
    return Taxonomy((0, 0, 0, 1, 1, 2, 2), (3, 4, 5, 6))


def random_weights(rng, tax, d, scale=1.0):
    return WeightVector(tax, d, rng.normal(scale=scale, size=(tax.n_nodes, d)))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
