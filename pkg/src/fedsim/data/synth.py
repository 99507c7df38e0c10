"""Synthetic two-class tabular data standing in for charging-station telemetry.

Each class is an equal mixture of two Gaussian components.  The class means sit
``SEPARATION`` apart along one direction; the two components of a class are
offset along directions orthogonal to it, so the mixture structure does not
change linear separability.  Features are then affinely rescaled to unequal
units so that standardization matters.

The geometry (directions, per-feature scales and offsets) is drawn from a fixed
design seed and depends only on ``n_features``; ``seed`` drives sampling only.
"""

from __future__ import annotations

import numpy as np

from ..errors import ConfigurationError
from .dataset import Dataset

DESIGN_SEED = 20240611
# distance between class centroids in noise-std units: linear accuracy ~ Phi(SEPARATION / 2)
SEPARATION = 3.2
COMPONENT_OFFSET = 1.5


def _design(n_features: int):
    rng = np.random.default_rng([DESIGN_SEED, n_features])
    q, _ = np.linalg.qr(rng.standard_normal((n_features, min(n_features, 3))))
    axis = q[:, 0]
    offsets = [q[:, j % q.shape[1]] for j in (1, 2)] if q.shape[1] > 1 else [axis * 0, axis * 0]
    scales = np.exp(rng.uniform(np.log(0.2), np.log(50.0), n_features))
    shifts = rng.uniform(-100.0, 100.0, n_features)
    return axis, offsets, scales, shifts


def synth_evcs_dataset(n_rows: int, n_features: int = 20, seed=0) -> Dataset:
    if n_rows < 100:
        raise ConfigurationError("n_rows must be >= 100")
    if n_features < 2:
        raise ConfigurationError("n_features must be >= 2")
    axis, offsets, scales, shifts = _design(n_features)
    rng = np.random.default_rng(seed)

    counts = (n_rows - n_rows // 2, n_rows // 2)
    feats, labels = [], []
    for cls, count in enumerate(counts):
        centre = (cls - 0.5) * SEPARATION * axis
        comp = rng.integers(0, 2, count)
        sign = np.where(comp == 0, -1.0, 1.0)[:, None]
        x = centre + sign * COMPONENT_OFFSET * offsets[cls] + rng.standard_normal((count, n_features))
        feats.append(x)
        labels.append(np.full(count, cls))
    x = np.vstack(feats) * scales + shifts
    y = np.concatenate(labels)
    order = rng.permutation(n_rows)
    names = [f"feature_{j:02d}" for j in range(n_features)]
    return Dataset(x[order], y[order], names)
