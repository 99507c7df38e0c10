"""Imputation, categorical encoding, standardization and the stratified split."""

from __future__ import annotations

import math
import warnings
from collections import Counter
from dataclasses import dataclass

import numpy as np

from ..errors import ConfigurationError, DataError, ShapeError
from .dataset import Dataset
from .ingest import FeatureSchema, RawTable, freeze_categories


def impute(table: RawTable) -> RawTable:
    """Numeric gaps get the column mean; categorical gaps get the mode.

    Mode ties go to the lexicographically smallest value.
    """
    out = {}
    for name, col in table.columns.items():
        kind = table.kinds[name]
        if kind == "numeric":
            miss = np.isnan(col)
            if miss.all():
                raise ConfigurationError(f"column {name!r} has no observed values")
            col = col.copy()
            col[miss] = col[~miss].mean()
        elif kind == "categorical":
            observed = [v for v in col if v is not None]
            if not observed:
                raise ConfigurationError(f"column {name!r} has no observed values")
            if len(observed) < len(col):
                counts = Counter(observed)
                top = max(counts.values())
                mode = min(v for v, c in counts.items() if c == top)
                col = np.array([mode if v is None else v for v in col], dtype=object)
        out[name] = col
    return RawTable(out, dict(table.kinds), table.label_column, table.source,
                    table.duplicates_removed)


def encode(table: RawTable, schema: FeatureSchema) -> Dataset:
    """Ordinal columns become one-hot blocks; nominal columns become integer codes.

    Category order comes from the schema; unset category lists are frozen from the
    table first (sorted).
    """
    schema = freeze_categories(table, schema)
    blocks: list[np.ndarray] = []
    names: list[str] = []
    for name, col in schema.columns.items():
        values = table.columns[name]
        if col.role == "numeric":
            if np.isnan(values).any():
                raise DataError(f"column {name!r} still has missing values; impute first")
            blocks.append(values[:, None])
            names.append(name)
        elif col.categorical:
            index = {c: i for i, c in enumerate(col.categories)}
            try:
                codes = np.array([index[v] for v in values], dtype=np.int64)
            except KeyError as exc:
                raise DataError(
                    f"column {name!r}: unseen category {exc.args[0]!r}"
                ) from None
            if col.role == "ordinal-categorical":
                onehot = np.zeros((len(values), len(index)))
                onehot[np.arange(len(values)), codes] = 1.0
                blocks.append(onehot)
                names.extend(f"{name}={c}" for c in col.categories)
            else:
                blocks.append(codes[:, None].astype(np.float64))
                names.append(name)
    n = len(table)
    features = np.hstack(blocks) if blocks else np.zeros((n, 0))
    return Dataset(features, table.columns[table.label_column], names)


@dataclass(frozen=True)
class ScalerParams:
    """Per-feature mean and population standard deviation.

    Columns whose standard deviation is zero are stored with ``std = 1`` and marked
    in ``flagged``; they standardize to all zeros on the training data.
    """

    mean: np.ndarray
    std: np.ndarray
    flagged: np.ndarray


def fit_standardize(train: Dataset) -> ScalerParams:
    mean = train.features.mean(axis=0)
    std = train.features.std(axis=0)
    flagged = std <= 1e-12 * np.maximum(1.0, np.abs(mean))
    return ScalerParams(mean, np.where(flagged, 1.0, std), flagged)


def apply_standardize(ds: Dataset, sp: ScalerParams) -> Dataset:
    if ds.n_features != sp.mean.shape[0]:
        raise ShapeError(f"scaler fitted on {sp.mean.shape[0]} features, got {ds.n_features}")
    return Dataset((ds.features - sp.mean) / sp.std, ds.labels, ds.feature_names)


def split(ds: Dataset, train_fraction: float = 0.8, seed=0) -> tuple[Dataset, Dataset]:
    """Stratified shuffle split; each class keeps floor(n_c * train_fraction) train rows."""
    if len(ds) == 0:
        raise ConfigurationError("cannot split an empty dataset")
    if not 0 < train_fraction < 1:
        raise ConfigurationError("train_fraction must lie in (0, 1)")
    rng = np.random.default_rng(seed)
    train_idx, test_idx = [], []
    for cls in (0, 1):
        idx = np.flatnonzero(ds.labels == cls)
        if 0 < idx.size < 5:
            warnings.warn(f"class {cls} has only {idx.size} rows; stratification is degenerate")
        idx = rng.permutation(idx)
        n_train = math.floor(idx.size * train_fraction + 1e-9)
        train_idx.append(idx[:n_train])
        test_idx.append(idx[n_train:])
    train = rng.permutation(np.concatenate(train_idx))
    test = rng.permutation(np.concatenate(test_idx))
    return ds.subset(train), ds.subset(test)
