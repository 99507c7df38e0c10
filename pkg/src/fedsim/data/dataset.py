from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ShapeError
from ..nn import Batch

BENIGN = 0
ATTACK = 1


@dataclass
class Dataset:
    """Dense feature matrix with binary labels (0 = benign, 1 = attack)."""

    features: np.ndarray
    labels: np.ndarray
    feature_names: tuple[str, ...]

    def __post_init__(self) -> None:
        self.features = np.asarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        self.feature_names = tuple(self.feature_names)
        if self.features.ndim != 2:
            raise ShapeError("features must be 2-D")
        if self.features.shape[0] != self.labels.shape[0]:
            raise ShapeError(
                f"{self.features.shape[0]} rows but {self.labels.shape[0]} labels"
            )
        if self.features.shape[1] != len(self.feature_names):
            raise ShapeError(
                f"{self.features.shape[1]} columns but {len(self.feature_names)} names"
            )
        if np.isnan(self.features).any():
            raise ShapeError("features contain missing values")
        if not np.isin(self.labels, (BENIGN, ATTACK)).all():
            raise ShapeError("labels must be 0 or 1")

    def __len__(self) -> int:
        return self.labels.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def subset(self, idx) -> Dataset:
        idx = np.asarray(idx, dtype=np.int64)
        return Dataset(self.features[idx], self.labels[idx], self.feature_names)

    def class_counts(self) -> tuple[int, int]:
        ones = int(self.labels.sum())
        return len(self) - ones, ones

    def as_batch(self) -> Batch:
        return Batch(self.features, self.labels)

    @classmethod
    def concat(cls, parts: list[Dataset]) -> Dataset:
        return cls(
            np.concatenate([p.features for p in parts]),
            np.concatenate([p.labels for p in parts]),
            parts[0].feature_names,
        )
