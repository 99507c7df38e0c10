"""Experiment configuration: YAML files parsed into validated dataclasses.

Relative paths in a config (``output_dir``, ``data.path``, ``data.schema``) are
resolved against the directory containing the config file.
"""

from __future__ import annotations

import copy
import os
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any

import yaml

from ..errors import ConfigurationError


@dataclass
class DataConfig:
    source: str = "synthetic"
    n_rows: int = 4000
    n_features: int = 20
    path: str | None = None
    schema: str | None = None


@dataclass
class PipelineConfig:
    augment: bool = False
    augment_fraction: float = 0.5
    smote: bool = True
    smote_k: int = 5
    train_fraction: float = 0.8


@dataclass
class TrainingConfig:
    batch_size: int = 32
    lr: float = 0.001
    # centralized epochs, and local epochs under the uniform schedule
    epochs: int = 5


@dataclass
class FederatedConfig:
    n_clients: int = 10
    partition: str = "iid"
    benign_fractions: list[float] | None = None
    strategy: str = "fedavgm_ema"
    beta: float = 0.2
    eta: float = 1.0
    participation: float = 1.0
    rounds: int = 10
    schedule: str = "uniform"
    epoch_cycle: list[int] = field(default_factory=lambda: [1, 2, 3, 4, 5])


@dataclass
class ExperimentConfig:
    seed: int = 0
    mode: str = "federated"
    output_dir: str = "runs/default"
    data: DataConfig = field(default_factory=DataConfig)
    pipeline: PipelineConfig = field(default_factory=PipelineConfig)
    training: TrainingConfig = field(default_factory=TrainingConfig)
    federated: FederatedConfig | None = None

    def to_dict(self) -> dict:
        return asdict(self)

    def validate(self) -> None:
        errs = []
        if self.mode not in ("centralized", "federated"):
            errs.append(f"mode: expected centralized or federated, got {self.mode!r}")
        d = self.data
        if d.source == "synthetic":
            if d.n_rows < 100:
                errs.append("data.n_rows: must be >= 100")
            if d.n_features < 2:
                errs.append("data.n_features: must be >= 2")
        elif d.source == "csv":
            if not d.path:
                errs.append("data.path: required for csv source")
            if not d.schema:
                errs.append("data.schema: required for csv source")
        else:
            errs.append(f"data.source: expected synthetic or csv, got {d.source!r}")
        p = self.pipeline
        if not 0 < p.augment_fraction <= 1:
            errs.append("pipeline.augment_fraction: must lie in (0, 1]")
        if p.smote_k < 1:
            errs.append("pipeline.smote_k: must be >= 1")
        if not 0 < p.train_fraction < 1:
            errs.append("pipeline.train_fraction: must lie in (0, 1)")
        t = self.training
        if t.batch_size < 2:
            errs.append("training.batch_size: must be >= 2")
        if not t.lr >= 0:
            errs.append("training.lr: must be >= 0")
        if t.epochs < 1:
            errs.append("training.epochs: must be >= 1")
        f = self.federated
        if self.mode == "federated" and f is None:
            errs.append("federated: block required when mode is federated")
        if self.mode == "centralized" and f is not None:
            errs.append("federated: block not allowed when mode is centralized")
        if f is not None:
            if f.n_clients < 1:
                errs.append("federated.n_clients: must be >= 1")
            if f.partition not in ("iid", "noniid"):
                errs.append(f"federated.partition: expected iid or noniid, got {f.partition!r}")
            if f.benign_fractions is not None and len(f.benign_fractions) != f.n_clients:
                errs.append("federated.benign_fractions: need one entry per client")
            if f.strategy not in ("fedavg", "fedavgm_plain", "fedavgm_ema"):
                errs.append(f"federated.strategy: unknown strategy {f.strategy!r}")
            if not 0 <= f.beta < 1:
                errs.append("federated.beta: must lie in [0, 1)")
            if not f.eta > 0:
                errs.append("federated.eta: must be positive")
            if not 0 < f.participation <= 1:
                errs.append("federated.participation: must lie in (0, 1]")
            if f.rounds < 1:
                errs.append("federated.rounds: must be >= 1")
            if f.schedule not in ("uniform", "round_robin"):
                errs.append(f"federated.schedule: expected uniform or round_robin, got {f.schedule!r}")
            if not f.epoch_cycle or min(f.epoch_cycle) < 1:
                errs.append("federated.epoch_cycle: counts must be >= 1")
        if errs:
            raise ConfigurationError("invalid config:\n  " + "\n  ".join(errs))


_SECTIONS = {
    "data": DataConfig,
    "pipeline": PipelineConfig,
    "training": TrainingConfig,
    "federated": FederatedConfig,
}


def _coerce(name: str, value: Any, annotation: str) -> Any:
    """Light type checking so that e.g. ``rounds: ten`` fails with a field name."""
    if value is None:
        if "None" in annotation:
            return None
        raise ConfigurationError(f"{name}: must not be null")
    if "bool" in annotation:
        if not isinstance(value, bool):
            raise ConfigurationError(f"{name}: expected true/false, got {value!r}")
        return value
    if annotation.startswith("int"):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigurationError(f"{name}: expected an integer, got {value!r}")
        return value
    if annotation.startswith("float"):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigurationError(f"{name}: expected a number, got {value!r}")
        return float(value)
    if annotation.startswith("list"):
        if not isinstance(value, list):
            raise ConfigurationError(f"{name}: expected a list, got {value!r}")
        inner = float if "float" in annotation else int
        out = []
        for v in value:
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise ConfigurationError(f"{name}: expected numbers, got {v!r}")
            if inner is int and not isinstance(v, int):
                raise ConfigurationError(f"{name}: expected integers, got {v!r}")
            out.append(inner(v))
        return out
    if annotation.startswith("str"):
        if not isinstance(value, str):
            raise ConfigurationError(f"{name}: expected a string, got {value!r}")
        return value
    return value


def _build(cls, raw: dict, prefix: str):
    if not isinstance(raw, dict):
        raise ConfigurationError(f"{prefix.rstrip('.') or 'config'}: expected a mapping")
    known = {f.name: f for f in fields(cls)}
    unknown = sorted(set(raw) - set(known))
    if unknown:
        raise ConfigurationError(
            "unknown config keys: " + ", ".join(prefix + k for k in unknown)
        )
    kwargs = {}
    for key, value in raw.items():
        f = known[key]
        if key in _SECTIONS and cls is ExperimentConfig:
            if value is None and key != "federated":
                raise ConfigurationError(f"{key}: must be a mapping, not null")
            kwargs[key] = None if value is None else _build(_SECTIONS[key], value, key + ".")
        else:
            kwargs[key] = _coerce(prefix + key, value, str(f.type))
    return cls(**kwargs)


def config_from_dict(raw: dict, base_dir: Path | None = None) -> ExperimentConfig:
    raw = copy.deepcopy(raw)
    # a federated run with no explicit block gets the defaults
    if raw.get("mode", "federated") == "federated" and "federated" not in raw:
        raw["federated"] = {}
    cfg = _build(ExperimentConfig, raw, "")
    if base_dir is not None:
        cfg.output_dir = _resolve(cfg.output_dir, base_dir)
        cfg.data.path = _resolve(cfg.data.path, base_dir)
        cfg.data.schema = _resolve(cfg.data.schema, base_dir)
    cfg.validate()
    return cfg


def _resolve(path: str | None, base_dir: Path) -> str | None:
    if path is None:
        return None
    p = Path(path)
    return os.path.normpath(p if p.is_absolute() else (base_dir / p))


def read_yaml(path) -> dict:
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"{path}: invalid YAML: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigurationError(f"{path}: top level must be a mapping")
    return raw


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    return config_from_dict(read_yaml(path), path.parent)


# --------------------------------------------------------------------------
# Grids


@dataclass
class GridConfig:
    base: dict
    axes: dict[str, list]
    output_dir: str
    base_dir: Path | None = None

    def cells(self) -> list[tuple[dict[str, Any], dict]]:
        """Cartesian product of the axes, first axis varying slowest."""
        import itertools

        keys = list(self.axes)
        out = []
        for combo in itertools.product(*(self.axes[k] for k in keys)):
            raw = copy.deepcopy(self.base)
            for key, value in zip(keys, combo):
                set_dotted(raw, key, value)
            out.append((dict(zip(keys, combo)), raw))
        return out


def set_dotted(raw: dict, key: str, value: Any) -> None:
    parts = key.split(".")
    node = raw
    for part in parts[:-1]:
        child = node.get(part)
        if child is None:
            child = node[part] = {}
        if not isinstance(child, dict):
            raise ConfigurationError(f"grid key {key!r}: {part!r} is not a section")
        node = child
    node[parts[-1]] = value


def load_grid(path) -> GridConfig:
    path = Path(path)
    raw = read_yaml(path)
    return grid_from_dict(raw, path.parent)


def grid_from_dict(raw: dict, base_dir: Path | None = None) -> GridConfig:
    unknown = sorted(set(raw) - {"base", "grid", "output_dir"})
    if unknown:
        raise ConfigurationError(f"unknown grid keys: {', '.join(unknown)}")
    base = raw.get("base", {})
    cell_dir = base_dir
    if isinstance(base, str):
        base_path = Path(base)
        if base_dir is not None and not base_path.is_absolute():
            base_path = base_dir / base_path
        base = read_yaml(base_path)
        cell_dir = base_path.parent
    if not isinstance(base, dict):
        raise ConfigurationError("base: expected a mapping or a path to a config file")
    axes = raw.get("grid")
    if not axes or not isinstance(axes, dict):
        raise ConfigurationError("grid: must map at least one config field to a list of values")
    for key, values in axes.items():
        if not isinstance(values, list) or not values:
            raise ConfigurationError(f"grid.{key}: expected a non-empty list of values")
    out = raw.get("output_dir", base.get("output_dir", "runs/grid"))
    if base_dir is not None:
        out = _resolve(out, base_dir)
    grid = GridConfig(base, dict(axes), out, cell_dir)
    for _, cell in grid.cells():
        config_from_dict(cell, cell_dir)
    return grid
