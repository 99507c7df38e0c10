"""Oversampling (SMOTE) and per-class Gaussian-copula augmentation."""

from __future__ import annotations

import math

import numpy as np
from scipy import stats
from scipy.spatial import cKDTree

from ..errors import ConfigurationError, DataError
from .dataset import Dataset


def minority_neighbors(x: np.ndarray, k: int) -> np.ndarray:
    """Indices of the ``k`` nearest other rows of ``x`` (Euclidean), shape (n, k)."""
    tree = cKDTree(x)
    _, idx = tree.query(x, k=k + 1)
    idx = np.atleast_2d(idx)
    out = np.empty((x.shape[0], k), dtype=np.int64)
    for i, row in enumerate(idx):
        # with exact duplicates the row itself need not come back first
        others = row[row != i]
        out[i] = others[:k]
    return out


def smote(ds: Dataset, k: int = 5, seed=0) -> Dataset:
    """Balance the classes by interpolating minority rows toward minority neighbours.

    Synthetic rows are ``x + u * (x_nn - x)`` with ``u ~ U[0, 1)``, ``x`` a uniformly
    chosen minority row and ``x_nn`` one of its ``min(k, m - 1)`` nearest minority
    neighbours.  They are appended after the original rows.
    """
    if k < 1:
        raise ConfigurationError("k must be >= 1")
    n0, n1 = ds.class_counts()
    if n0 == n1:
        return ds
    minority = 0 if n0 < n1 else 1
    m, n_new = min(n0, n1), abs(n0 - n1)
    if m < 2:
        raise DataError(f"minority class {minority} has {m} rows; SMOTE needs at least 2")
    x = ds.features[ds.labels == minority]
    k_eff = min(k, m - 1)
    nbrs = minority_neighbors(x, k_eff)

    rng = np.random.default_rng(seed)
    base = rng.integers(0, m, n_new)
    pick = nbrs[base, rng.integers(0, k_eff, n_new)]
    u = rng.random(n_new)[:, None]
    synthetic = x[base] + u * (x[pick] - x[base])
    return Dataset(
        np.vstack([ds.features, synthetic]),
        np.concatenate([ds.labels, np.full(n_new, minority)]),
        ds.feature_names,
    )


def _normal_scores(x: np.ndarray) -> np.ndarray:
    n = x.shape[0]
    ranks = stats.rankdata(x, axis=0)
    return stats.norm.ppf(ranks / (n + 1))


def _correlation(z: np.ndarray) -> np.ndarray:
    d = z.shape[1]
    sd = z.std(axis=0)
    live = sd > 0
    corr = np.eye(d)
    if live.sum() > 1:
        corr[np.ix_(live, live)] = np.corrcoef(z[:, live], rowvar=False)
    return corr


def _cholesky(corr: np.ndarray) -> np.ndarray:
    delta = 1e-6
    while delta <= 1e-2 * (1 + 1e-9):
        try:
            return np.linalg.cholesky(corr + delta * np.eye(corr.shape[0]))
        except np.linalg.LinAlgError:
            delta *= 10
    raise DataError("correlation matrix is not factorable even with 1e-2 regularization")


def fit_sample_copula(x: np.ndarray, n_samples: int, rng: np.random.Generator) -> np.ndarray:
    """Draw rows sharing ``x``'s rank correlation and empirical marginals.

    Marginals are inverted by linear interpolation between order statistics placed
    at probabilities i/(n+1), so samples never leave the observed range.
    """
    n, d = x.shape
    corr = _correlation(_normal_scores(x))
    chol = _cholesky(corr)
    z = rng.standard_normal((n_samples, d)) @ chol.T
    # the regularized diagonal is 1 + delta; rescale back to unit variance
    z /= np.sqrt(np.sum(chol**2, axis=1))
    u = stats.norm.cdf(z)
    grid = np.arange(1, n + 1) / (n + 1)
    ordered = np.sort(x, axis=0)
    out = np.empty((n_samples, d))
    for j in range(d):
        out[:, j] = np.interp(u[:, j], grid, ordered[:, j])
    return out


def copula_augment(ds: Dataset, fraction: float = 0.5, seed=0) -> Dataset:
    """Append ``ceil(fraction * n_class)`` copula samples per class, labels preserved."""
    if not 0 < fraction <= 1:
        raise ConfigurationError("fraction must lie in (0, 1]")
    rng = np.random.default_rng(seed)
    feats, labels = [ds.features], [ds.labels]
    for cls in (0, 1):
        x = ds.features[ds.labels == cls]
        if x.shape[0] < 10:
            raise DataError(f"class {cls} has {x.shape[0]} rows; copula fit needs at least 10")
        n_new = math.ceil(round(fraction * x.shape[0], 9))
        feats.append(fit_sample_copula(x, n_new, rng))
        labels.append(np.full(n_new, cls))
    return Dataset(np.vstack(feats), np.concatenate(labels), ds.feature_names)
