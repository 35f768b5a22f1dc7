import numpy as np
import pytest

from otnn.data import Dataset, normalize_embeddings


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def unit_rows(rng, n, dim):
    X = rng.normal(size=(n, dim))
    return X / np.linalg.norm(X, axis=1, keepdims=True)


def make_dataset(rng, n=8, dim=4, role=None, labels=None):
    if labels is None:
        labels = rng.integers(0, 2, size=n)
    return Dataset(
        np.arange(n, dtype=np.int64),
        np.asarray(labels, dtype=np.int64),
        unit_rows(rng, n, dim),
        role=role,
    )


@pytest.fixture
def small_dataset(rng):
    return make_dataset(rng)
