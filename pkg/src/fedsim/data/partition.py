"""Splitting a training set into client shards."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import ConfigurationError, InfeasiblePartitionError
from .dataset import Dataset


@dataclass
class Partition:
    assignments: list[np.ndarray]
    strategy: str
    proportions: list[float] | None = None

    @property
    def n_clients(self) -> int:
        return len(self.assignments)

    def shards(self, train: Dataset) -> list[Dataset]:
        return [train.subset(idx) for idx in self.assignments]

    def validate(self, n_rows: int) -> None:
        """Raise unless the assignments form an exact partition of range(n_rows)."""
        allidx = np.concatenate(self.assignments) if self.assignments else np.array([], int)
        if allidx.size != n_rows or not np.array_equal(np.sort(allidx), np.arange(n_rows)):
            raise InfeasiblePartitionError("assignments are not a partition of the training rows")


def shard_sizes(n_rows: int, n_clients: int) -> list[int]:
    base, extra = divmod(n_rows, n_clients)
    return [base + (i < extra) for i in range(n_clients)]


def partition_iid(train: Dataset, n_clients: int, seed=0) -> Partition:
    """Shuffle, then deal rows round-robin so shard sizes differ by at most one."""
    if n_clients < 1:
        raise ConfigurationError("n_clients must be >= 1")
    if len(train) < n_clients:
        raise ConfigurationError(f"{len(train)} rows cannot cover {n_clients} clients")
    perm = np.random.default_rng(seed).permutation(len(train))
    return Partition([perm[i::n_clients] for i in range(n_clients)], "iid")


def linear_ramp(n_clients: int, low: float = 0.1, high: float = 0.9) -> list[float]:
    if n_clients == 1:
        return [(low + high) / 2]
    return [float(f) for f in np.linspace(low, high, n_clients)]


def allocate_benign(sizes: list[int], fractions: list[float], n_benign: int) -> list[int]:
    """Per-client benign counts summing to ``n_benign``, by largest remainder.

    Each client starts at floor(fraction * size); the leftover benign rows go one
    apiece to the clients with the largest fractional remainders (lower index wins
    ties).  Raises if the leftover cannot be absorbed by rounding.
    """
    targets = [f * s for f, s in zip(fractions, sizes)]
    counts = [math.floor(t + 1e-9) for t in targets]
    leftover = n_benign - sum(counts)
    if leftover < 0:
        raise InfeasiblePartitionError(
            f"benign pool short by {-leftover} rows "
            f"(targets need {sum(counts)}, pool has {n_benign})"
        )
    if leftover > len(sizes):
        n_attack = sum(sizes) - n_benign
        need = sum(sizes) - sum(counts) - len(sizes)
        raise InfeasiblePartitionError(
            f"attack pool short by {need - n_attack} rows "
            f"(targets need at least {need}, pool has {n_attack})"
        )
    order = sorted(range(len(sizes)), key=lambda i: (-(targets[i] - counts[i]), i))
    for i in order[:leftover]:
        counts[i] += 1
    return counts


def partition_noniid(
    train: Dataset, n_clients: int, benign_fractions=None, seed=0
) -> Partition:
    """Equal-size shards whose benign share follows ``benign_fractions``.

    Defaults to a linear ramp from 0.1 to 0.9 across clients.  Every client gets at
    least two rows of each class.
    """
    if n_clients < 1:
        raise ConfigurationError("n_clients must be >= 1")
    fractions = linear_ramp(n_clients) if benign_fractions is None else list(benign_fractions)
    if len(fractions) != n_clients:
        raise ConfigurationError(f"{len(fractions)} fractions for {n_clients} clients")
    if any(not 0.05 <= f <= 0.95 for f in fractions):
        raise ConfigurationError("benign fractions must lie in [0.05, 0.95]")

    n_benign, _ = train.class_counts()
    sizes = shard_sizes(len(train), n_clients)
    benign_counts = allocate_benign(sizes, fractions, n_benign)
    for i, (b, s) in enumerate(zip(benign_counts, sizes)):
        if b < 2 or s - b < 2:
            raise InfeasiblePartitionError(
                f"client {i} would get {b} benign / {s - b} attack rows; need >= 2 of each"
            )

    rng = np.random.default_rng(seed)
    benign = rng.permutation(np.flatnonzero(train.labels == 0))
    attack = rng.permutation(np.flatnonzero(train.labels == 1))
    assignments = []
    bpos = apos = 0
    for b, s in zip(benign_counts, sizes):
        a = s - b
        shard = np.concatenate([benign[bpos : bpos + b], attack[apos : apos + a]])
        assignments.append(rng.permutation(shard))
        bpos += b
        apos += a
    return Partition(assignments, "noniid-proportion", fractions)
