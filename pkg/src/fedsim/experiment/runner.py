"""End-to-end experiment execution and artifact writing.

A run directory holds:

``summary.json``   final metrics, resolved config echo, runtime
``rounds.csv``     one row per communication round (federated mode only)
``clients.csv``    per-round, per-client sample count, epochs and train loss
``manifest.json``  top-level seed, derived per-stage seeds, resolved config

``rounds.csv``, ``clients.csv`` and ``manifest.json`` are byte-identical across
repeated runs of the same config; ``summary.json`` differs only in runtime.
"""

from __future__ import annotations

import csv
import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import __version__, nn
from ..data import (
    Dataset,
    apply_standardize,
    copula_augment,
    encode,
    fit_standardize,
    impute,
    load_csv,
    load_schema,
    partition_iid,
    partition_noniid,
    smote,
    split,
    synth_evcs_dataset,
)
from ..federation import AggregationConfig, EpochSchedule, RoundReport, run_training
from ..metrics import evaluate
from .config import ExperimentConfig, GridConfig, config_from_dict, load_config, load_grid

log = logging.getLogger(__name__)

SEED_STAGES = ("data", "augment", "split", "smote", "partition", "model")
METRIC_COLUMNS = ("accuracy", "precision", "recall", "f1", "loss")


def stage_seeds(seed: int) -> dict[str, int]:
    """Independent integer seeds for each randomized pipeline stage."""
    return {
        name: int(np.random.SeedSequence([seed, i]).generate_state(1)[0])
        for i, name in enumerate(SEED_STAGES)
    }


@dataclass
class PreparedData:
    train: Dataset
    test: Dataset
    info: dict = field(default_factory=dict)


def prepare_data(cfg: ExperimentConfig, seeds: dict[str, int]) -> PreparedData:
    """source -> (impute, encode) -> augment? -> split -> standardize -> SMOTE? on train."""
    info: dict = {}
    if cfg.data.source == "synthetic":
        ds = synth_evcs_dataset(cfg.data.n_rows, cfg.data.n_features, seeds["data"])
    else:
        schema = load_schema(cfg.data.schema)
        table = load_csv(cfg.data.path, schema)
        info["duplicates_removed"] = table.duplicates_removed
        ds = encode(impute(table), schema)
    info["rows_loaded"] = len(ds)
    if cfg.pipeline.augment:
        ds = copula_augment(ds, cfg.pipeline.augment_fraction, seeds["augment"])
        info["rows_after_augment"] = len(ds)
    train, test = split(ds, cfg.pipeline.train_fraction, seeds["split"])
    scaler = fit_standardize(train)
    train, test = apply_standardize(train, scaler), apply_standardize(test, scaler)
    info["constant_features"] = [
        n for n, flag in zip(train.feature_names, scaler.flagged) if flag
    ]
    if cfg.pipeline.smote:
        train = smote(train, cfg.pipeline.smote_k, seeds["smote"])
    info["train_class_counts"] = list(train.class_counts())
    info["test_class_counts"] = list(test.class_counts())
    return PreparedData(train, test, info)


@dataclass
class RunArtifacts:
    summary: dict
    rounds: list[RoundReport]
    manifest: dict
    output_dir: Path

    @property
    def final(self) -> dict:
        return self.summary["final"]


def _round_rows(reports: list[RoundReport]):
    for r in reports:
        yield [r.round, r.loss, r.accuracy, r.precision, r.recall, r.f1, len(r.clients)]


def _write_csv(path: Path, header, rows) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def run(config, output_dir=None) -> RunArtifacts:
    """Execute one experiment from a config path or an :class:`ExperimentConfig`."""
    cfg = config if isinstance(config, ExperimentConfig) else load_config(config)
    if output_dir is not None:
        cfg.output_dir = str(output_dir)
    cfg.validate()
    start = time.perf_counter()
    seeds = stage_seeds(cfg.seed)
    data = prepare_data(cfg, seeds)
    spec = nn.canonical_stack(data.train.n_features)
    t = cfg.training

    reports: list[RoundReport] = []
    if cfg.mode == "centralized":
        model = nn.init_model(spec, seeds["model"], lr=t.lr)
        nn.train_epochs(model, data.train.as_batch(), t.epochs, t.batch_size)
        probs = nn.predict(model, data.test.features)
        m = evaluate(probs, data.test.labels)
        final = {"accuracy": m.accuracy, "precision": m.precision, "recall": m.recall,
                 "f1": m.f1, "loss": nn.bce_loss(probs, data.test.labels),
                 "degenerate": list(m.degenerate)}
    else:
        f = cfg.federated
        if f.partition == "iid":
            part = partition_iid(data.train, f.n_clients, seeds["partition"])
        else:
            part = partition_noniid(data.train, f.n_clients, f.benign_fractions, seeds["partition"])
        agg = AggregationConfig(f.strategy, f.beta, f.eta, f.participation)
        schedule = EpochSchedule(f.schedule, t.epochs, tuple(f.epoch_cycle))
        _, reports = run_training(
            agg, part, data.train, f.rounds, schedule, data.test, seeds["model"],
            spec=spec, batch_size=t.batch_size, lr=t.lr,
        )
        for r in reports:
            log.info("round %d: loss=%.4f acc=%.4f f1=%.4f", r.round, r.loss, r.accuracy, r.f1)
        last = reports[-1]
        final = {"accuracy": last.accuracy, "precision": last.precision, "recall": last.recall,
                 "f1": last.f1, "loss": last.loss, "degenerate": list(last.degenerate)}

    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = {
        "seed": cfg.seed,
        "stage_seeds": seeds,
        "config": cfg.to_dict(),
        "fedsim_version": __version__,
        "numpy_version": np.__version__,
    }
    summary = {
        "mode": cfg.mode,
        "final": final,
        "config": cfg.to_dict(),
        "data": data.info,
        "rounds_completed": len(reports),
        "runtime_sec": time.perf_counter() - start,
    }
    _write_json(out / "manifest.json", manifest)
    _write_json(out / "summary.json", summary)
    if reports:
        _write_csv(out / "rounds.csv",
                   ["round", "loss", "accuracy", "precision", "recall", "f1", "n_clients"],
                   _round_rows(reports))
        _write_csv(out / "clients.csv",
                   ["round", "client_id", "n_k", "epochs", "train_loss"],
                   ([r.round, *c] for r in reports for c in r.clients))
    return RunArtifacts(summary, reports, manifest, out)


def _run_cell(args) -> RunArtifacts:
    raw, base_dir = args
    return run(config_from_dict(raw, base_dir))


def run_grid(grid, jobs: int = 1, output_dir=None) -> list[RunArtifacts]:
    """Run every cell of a grid and write ``comparison.csv`` next to the cell dirs."""
    grid = grid if isinstance(grid, GridConfig) else load_grid(grid)
    root = Path(output_dir or grid.output_dir)
    cells = grid.cells()
    jobs_args = []
    for i, (_, raw) in enumerate(cells):
        raw["output_dir"] = str((root / f"cell_{i:03d}").resolve())
        jobs_args.append((raw, grid.base_dir))
    if jobs > 1:
        with ProcessPoolExecutor(jobs) as pool:
            results = list(pool.map(_run_cell, jobs_args))
    else:
        results = [_run_cell(a) for a in jobs_args]

    keys = list(grid.axes)
    rows = []
    for i, ((values, _), res) in enumerate(zip(cells, results)):
        rows.append([f"cell_{i:03d}", *(values[k] for k in keys),
                     *(res.final[m] for m in METRIC_COLUMNS)])
    root.mkdir(parents=True, exist_ok=True)
    _write_csv(root / "comparison.csv", ["cell", *keys, *METRIC_COLUMNS], rows)
    _write_json(root / "grid.json", {"axes": grid.axes, "base": grid.base,
                                     "cells": [f"cell_{i:03d}" for i in range(len(cells))]})
    return results
