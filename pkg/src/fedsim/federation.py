"""Server/client simulation: FedAvg and FedAvgM (plain and EMA server momentum).

One round samples clients, trains a copy of the global model on each client's
shard, aggregates the sample-weighted parameter deltas and applies the server
step.  All randomness is keyed on ``(seed, round)`` for sampling and
``(seed, client_id, round)`` for local training, and client results are always
combined in ascending client-id order, so the outcome does not depend on how
client work is scheduled.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Literal, Sequence

import numpy as np

from . import nn
from .data import Dataset, Partition
from .errors import ConfigurationError
from .metrics import evaluate

Strategy = Literal["fedavg", "fedavgm_plain", "fedavgm_ema"]
STRATEGIES = ("fedavg", "fedavgm_plain", "fedavgm_ema")

# domain tags keep the sampling and client-training streams apart
_SAMPLE_TAG = 1
_CLIENT_TAG = 2


@dataclass(frozen=True)
class AggregationConfig:
    """Server aggregation settings.  ``fedavg`` always runs with beta 0 and eta 1."""

    strategy: Strategy = "fedavgm_ema"
    beta: float = 0.2
    eta: float = 1.0
    participation_fraction: float = 1.0

    def __post_init__(self) -> None:
        if self.strategy not in STRATEGIES:
            raise ConfigurationError(f"unknown strategy {self.strategy!r}")
        if self.strategy == "fedavg":
            object.__setattr__(self, "beta", 0.0)
            object.__setattr__(self, "eta", 1.0)
        if not 0.0 <= self.beta < 1.0:
            raise ConfigurationError("beta must lie in [0, 1)")
        if not self.eta > 0:
            raise ConfigurationError("eta must be positive")
        if not 0.0 < self.participation_fraction <= 1.0:
            raise ConfigurationError("participation_fraction must lie in (0, 1]")


@dataclass(frozen=True)
class ServerState:
    round: int
    global_params: nn.ParamVector
    momentum: nn.ParamVector
    config: AggregationConfig

    @classmethod
    def initial(cls, params: nn.ParamVector, config: AggregationConfig) -> ServerState:
        return cls(0, params.copy(), params.zeros_like(), config)


@dataclass
class ClientUpdateResult:
    client_id: int
    local_params: nn.ParamVector
    n_k: int
    local_epochs_used: int
    train_loss: float


@dataclass(frozen=True)
class EpochSchedule:
    mode: Literal["uniform", "round_robin"] = "uniform"
    uniform_epochs: int = 5
    cycle: tuple[int, ...] = (1, 2, 3, 4, 5)

    def __post_init__(self) -> None:
        if self.mode not in ("uniform", "round_robin"):
            raise ConfigurationError(f"unknown schedule mode {self.mode!r}")
        object.__setattr__(self, "cycle", tuple(int(c) for c in self.cycle))
        if self.uniform_epochs < 1 or not self.cycle or min(self.cycle) < 1:
            raise ConfigurationError("epoch counts must be >= 1")


@dataclass
class RoundReport:
    round: int
    loss: float
    accuracy: float
    precision: float
    recall: float
    f1: float
    clients: list[tuple[int, int, int, float]] = field(default_factory=list)
    wall_time: float = 0.0
    degenerate: tuple[str, ...] = ()


def epochs_for(schedule: EpochSchedule, client_id: int, n_clients: int) -> int:
    if not 0 <= client_id < n_clients:
        raise ConfigurationError(f"client_id {client_id} outside [0, {n_clients})")
    if schedule.mode == "uniform":
        return schedule.uniform_epochs
    return schedule.cycle[client_id % len(schedule.cycle)]


def sample_clients(n_clients: int, fraction: float, round: int, seed) -> list[int]:
    if not 0 < fraction <= 1:
        raise ConfigurationError("fraction must lie in (0, 1]")
    m = max(1, int(np.floor(fraction * n_clients + 0.5)))
    if m >= n_clients:
        return list(range(n_clients))
    rng = np.random.default_rng([int(seed), _SAMPLE_TAG, round])
    return sorted(int(i) for i in rng.choice(n_clients, m, replace=False))


def client_seed(seed, client_id: int, round: int) -> list[int]:
    """Entropy for the RNG a client uses in a given round."""
    return [int(seed), _CLIENT_TAG, client_id, round]


def client_update(
    client_id: int,
    global_params: nn.ParamVector,
    shard: Dataset,
    epochs: int,
    batch_size: int,
    seed,
    *,
    spec: Sequence[nn.LayerSpec],
    round: int = 0,
    lr: float = 1e-3,
) -> ClientUpdateResult:
    """Train a fresh copy of the global model (new Adam state) on one shard."""
    if len(shard) == 0:
        raise ConfigurationError(f"client {client_id} has an empty shard")
    model = nn.model_from_params(spec, global_params, client_seed(seed, client_id, round), lr=lr)
    nn.train_epochs(model, shard.as_batch(), epochs, batch_size)
    return ClientUpdateResult(
        client_id, model.params, len(shard), epochs, model.loss_history[-1]
    )


def _sorted_updates(updates, global_params):
    if not updates:
        raise ConfigurationError("no client updates to aggregate")
    for u in updates:
        global_params.check_compatible(u.local_params)
    return sorted(updates, key=lambda u: u.client_id)


def aggregate_delta(
    updates: Sequence[ClientUpdateResult], global_params: nn.ParamVector
) -> nn.ParamVector:
    """Sample-weighted mean of ``w_t - w_t^k``, summed in ascending client-id order."""
    ordered = _sorted_updates(updates, global_params)
    n = sum(u.n_k for u in ordered)
    delta = np.zeros_like(global_params.values)
    for u in ordered:
        delta += (u.n_k / n) * (global_params.values - u.local_params.values)
    return nn.ParamVector(delta, global_params.layout)


def weighted_average(
    updates: Sequence[ClientUpdateResult], global_params: nn.ParamVector
) -> nn.ParamVector:
    """Sample-weighted mean of the client parameters themselves."""
    ordered = _sorted_updates(updates, global_params)
    n = sum(u.n_k for u in ordered)
    avg = (ordered[0].n_k / n) * ordered[0].local_params.values
    for u in ordered[1:]:
        avg = avg + (u.n_k / n) * u.local_params.values
    return nn.ParamVector(avg, global_params.layout)


def server_step(
    state: ServerState,
    delta: nn.ParamVector,
    client_average: nn.ParamVector | None = None,
) -> ServerState:
    """Apply one server update and return the next state.

    * fedavg: ``w <- w - delta``
    * fedavgm_plain: ``v <- beta * v + delta``, ``w <- w - eta * v``
    * fedavgm_ema: ``v <- beta * v + (1 - beta) * delta``, ``w <- w - eta * v``

    For fedavg, passing ``client_average`` (the weighted mean of client parameters,
    algebraically ``w - delta``) uses it directly as the new global model.  The
    round loop does this only when a single client participated, where the mean
    is that client's model and ``w - (w - w_k)`` would lose low-order bits.
    """
    w = state.global_params
    w.check_compatible(delta)
    cfg = state.config
    if cfg.strategy == "fedavg":
        if client_average is not None:
            w.check_compatible(client_average)
            new_w = client_average.values.copy()
        else:
            new_w = w.values - delta.values
        v = state.momentum.values
    else:
        if cfg.strategy == "fedavgm_plain":
            v = cfg.beta * state.momentum.values + delta.values
        else:
            v = cfg.beta * state.momentum.values + (1.0 - cfg.beta) * delta.values
        new_w = w.values - cfg.eta * v
    return replace(
        state,
        round=state.round + 1,
        global_params=nn.ParamVector(new_w, w.layout),
        momentum=nn.ParamVector(v.copy(), w.layout),
    )


def evaluate_params(spec, params: nn.ParamVector, test: Dataset):
    model = nn.model_from_params(spec, params, 0)
    probs = nn.predict(model, test.features)
    return nn.bce_loss(probs, test.labels), evaluate(probs, test.labels)


def run_training(
    config: AggregationConfig,
    partition: Partition,
    train: Dataset,
    rounds: int,
    schedule: EpochSchedule,
    test: Dataset,
    seed,
    *,
    spec: Sequence[nn.LayerSpec] | None = None,
    initial_params: nn.ParamVector | None = None,
    batch_size: int = 32,
    lr: float = 1e-3,
    max_workers: int = 1,
) -> tuple[nn.ParamVector, list[RoundReport]]:
    """Run ``rounds`` communication rounds and evaluate on ``test`` after each.

    The initial global model is ``init_model(spec, seed)`` unless
    ``initial_params`` is given.  ``max_workers > 1`` trains clients of a round on
    a thread pool; the results are identical either way.
    """
    if rounds < 1:
        raise ConfigurationError("rounds must be >= 1")
    partition.validate(len(train))
    spec = tuple(spec or nn.canonical_stack(train.n_features))
    if initial_params is None:
        initial_params = nn.init_model(spec, seed).params
    shards = partition.shards(train)
    n_clients = partition.n_clients
    state = ServerState.initial(initial_params, config)
    reports: list[RoundReport] = []

    pool = ThreadPoolExecutor(max_workers) if max_workers > 1 else None
    try:
        for t in range(rounds):
            start = time.perf_counter()
            selected = sample_clients(n_clients, config.participation_fraction, t, seed)

            def work(k: int) -> ClientUpdateResult:
                return client_update(
                    k, state.global_params, shards[k], epochs_for(schedule, k, n_clients),
                    batch_size, seed, spec=spec, round=t, lr=lr,
                )

            updates = list(pool.map(work, selected)) if pool else [work(k) for k in selected]
            delta = aggregate_delta(updates, state.global_params)
            average = (
                updates[0].local_params
                if config.strategy == "fedavg" and len(updates) == 1
                else None
            )
            state = server_step(state, delta, average)
            loss, m = evaluate_params(spec, state.global_params, test)
            reports.append(
                RoundReport(
                    t + 1, loss, m.accuracy, m.precision, m.recall, m.f1,
                    [(u.client_id, u.n_k, u.local_epochs_used, u.train_loss) for u in updates],
                    time.perf_counter() - start,
                    m.degenerate,
                )
            )
    finally:
        if pool:
            pool.shutdown()
    return state.global_params, reports

