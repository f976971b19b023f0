import numpy as np
import pytest

from sbrkit.data import LabeledMatrix


def make_matrix(features, labels, names=None):
    features = np.asarray(features, dtype=np.float64)
    if features.ndim == 1:
        features = features[:, None]
    if names is None:
        names = tuple(f"f{j}" for j in range(features.shape[1]))
    return LabeledMatrix(features, np.asarray(labels, dtype=np.int64), names)


def imbalanced_blobs(
    n=600, minority_frac=1 / 21, n_features=10, separation=2.0, noise=1.0, seed=0
):
    """Two Gaussian blobs with a rare positive class, shuffled."""
    rng = np.random.default_rng(seed)
    n_min = max(2, int(round(n * minority_frac)))
    n_maj = n - n_min
    center = np.full(n_features, separation / np.sqrt(n_features))
    maj = rng.normal(0.0, noise, (n_maj, n_features))
    mino = rng.normal(0.0, noise, (n_min, n_features)) + center
    X = np.vstack([maj, mino])
    y = np.concatenate([np.zeros(n_maj, dtype=np.int64), np.ones(n_min, dtype=np.int64)])
    perm = rng.permutation(n)
    return make_matrix(X[perm], y[perm])


def split_matrix(m, test_frac=0.5, seed=0):
    """Stratified train/test split of a LabeledMatrix."""
    rng = np.random.default_rng(seed)
    train_idx, test_idx = [], []
    for cls in (0, 1):
        idx = np.flatnonzero(m.labels == cls)
        rng.shuffle(idx)
        cut = int(round(idx.size * (1.0 - test_frac)))
        cut = min(max(cut, 1), idx.size - 1)
        train_idx.extend(idx[:cut])
        test_idx.extend(idx[cut:])
    return m.subset(np.asarray(sorted(train_idx))), m.subset(np.asarray(sorted(test_idx)))


@pytest.fixture
def tiny_matrix():
    return make_matrix(
        [[1.0, 0.0], [0.0, 1.0], [2.0, 0.5], [0.5, 2.0]], [1, 0, 1, 0]
    )
