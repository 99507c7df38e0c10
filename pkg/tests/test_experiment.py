import csv
import json

import pytest
import yaml

from fedsim.errors import ConfigurationError
from fedsim.experiment import (
    config_from_dict,
    grid_from_dict,
    load_config,
    run,
    run_grid,
    stage_seeds,
)
from fedsim.experiment.cli import main

SMALL = {
    "seed": 3,
    "mode": "federated",
    "data": {"source": "synthetic", "n_rows": 400, "n_features": 6},
    "training": {"epochs": 1},
    "federated": {"n_clients": 3, "rounds": 3, "strategy": "fedavg"},
}


def write_yaml(path, obj):
    path.write_text(yaml.safe_dump(obj))
    return path


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


class TestConfig:
    def test_defaults(self):
        cfg = config_from_dict({})
        assert cfg.mode == "federated"
        assert cfg.federated.beta == 0.2 and cfg.federated.eta == 1.0
        assert cfg.federated.n_clients == 10 and cfg.federated.rounds == 10

    def test_unknown_key(self):
        with pytest.raises(ConfigurationError, match="federated.betta"):
            config_from_dict({"federated": {"betta": 0.2}})

    def test_field_level_message(self):
        with pytest.raises(ConfigurationError, match="federated.beta"):
            config_from_dict({"federated": {"beta": 1.0}})

    def test_type_error_names_field(self):
        with pytest.raises(ConfigurationError, match="federated.rounds"):
            config_from_dict({"federated": {"rounds": "ten"}})

    def test_centralized_rejects_federated_block(self):
        with pytest.raises(ConfigurationError):
            config_from_dict({"mode": "centralized", "federated": {"rounds": 2}})

    def test_relative_paths(self, tmp_path):
        p = write_yaml(tmp_path / "c.yaml", {"output_dir": "out", "mode": "centralized"})
        assert load_config(p).output_dir == str(tmp_path / "out")

    def test_stage_seeds_distinct(self):
        s = stage_seeds(0)
        assert len(set(s.values())) == len(s)
        assert s == stage_seeds(0) and s != stage_seeds(1)


class TestRun:
    def test_centralized_has_no_round_series(self, tmp_path):
        cfg = config_from_dict({**SMALL, "mode": "centralized", "federated": None})
        res = run(cfg, tmp_path / "c")
        assert (tmp_path / "c" / "summary.json").exists()
        assert not (tmp_path / "c" / "rounds.csv").exists()
        assert res.rounds == []

    def test_federated_round_series(self, tmp_path):
        raw = {**SMALL, "federated": {**SMALL["federated"], "rounds": 10, "n_clients": 10}}
        res = run(config_from_dict(raw), tmp_path / "f")
        rows = read_rows(tmp_path / "f" / "rounds.csv")
        assert [int(r["round"]) for r in rows] == list(range(1, 11))
        assert len(read_rows(tmp_path / "f" / "clients.csv")) == 100
        # summary final equals the last round
        assert res.final["accuracy"] == float(rows[-1]["accuracy"])
        summary = json.loads((tmp_path / "f" / "summary.json").read_text())
        assert summary["final"]["f1"] == res.rounds[-1].f1

    def test_byte_identical_rerun(self, tmp_path):
        raw = {**SMALL, "federated": {**SMALL["federated"], "partition": "noniid",
                                      "schedule": "round_robin", "strategy": "fedavgm_ema"}}
        run(config_from_dict(raw), tmp_path / "a")
        run(config_from_dict(raw), tmp_path / "b")
        for name in ("rounds.csv", "clients.csv"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
        ma, mb = (json.loads((tmp_path / d / "manifest.json").read_text()) for d in "ab")
        ma["config"].pop("output_dir"), mb["config"].pop("output_dir")
        assert ma == mb

    def test_manifest_records_seeds(self, tmp_path):
        res = run(config_from_dict(SMALL), tmp_path / "m")
        assert res.manifest["seed"] == 3
        assert res.manifest["stage_seeds"] == stage_seeds(3)
        assert res.manifest["config"]["federated"]["n_clients"] == 3

    def test_csv_source(self, tmp_path):
        assert main(["synth", "--rows", "300", "--seed", "1", "--features", "4",
                     "--out", str(tmp_path / "d.csv")]) == 0
        schema = {"label_column": "label",
                  "columns": {f"feature_{j:02d}": "numeric" for j in range(4)}}
        write_yaml(tmp_path / "schema.yaml", schema)
        cfg = write_yaml(tmp_path / "run.yaml", {
            "seed": 0, "output_dir": "out",
            "data": {"source": "csv", "path": "d.csv", "schema": "schema.yaml"},
            "pipeline": {"augment": True},
            "federated": {"n_clients": 2, "rounds": 2},
        })
        res = run(cfg)
        assert res.summary["data"]["rows_loaded"] == 300
        assert res.summary["data"]["rows_after_augment"] == 450
        assert (tmp_path / "out" / "rounds.csv").exists()


class TestGrid:
    def test_beta_grid_expands_to_nine(self):
        g = grid_from_dict({"base": SMALL,
                            "grid": {"federated.beta": [round(0.1 * i, 1) for i in range(1, 10)]}})
        assert len(g.cells()) == 9

    def test_table_structure_grid(self):
        g = grid_from_dict({"base": SMALL, "grid": {
            "federated.n_clients": [10, 15, 20],
            "federated.strategy": ["fedavg", "fedavgm_ema"],
            "federated.partition": ["iid", "noniid"],
        }})
        cells = g.cells()
        assert len(cells) == 12
        assert cells[0][0] == {"federated.n_clients": 10, "federated.strategy": "fedavg",
                               "federated.partition": "iid"}
        assert cells[-1][1]["federated"]["n_clients"] == 20

    def test_empty_grid(self):
        with pytest.raises(ConfigurationError):
            grid_from_dict({"base": SMALL, "grid": {}})
        with pytest.raises(ConfigurationError):
            grid_from_dict({"base": SMALL, "grid": {"federated.beta": []}})

    def test_bad_cell_rejected_up_front(self):
        with pytest.raises(ConfigurationError, match="beta"):
            grid_from_dict({"base": SMALL, "grid": {"federated.beta": [0.5, 1.5]}})

    def test_single_cell_matches_run(self, tmp_path):
        g = grid_from_dict({"base": SMALL, "grid": {"federated.beta": [0.0]},
                            "output_dir": str(tmp_path / "g")})
        (res,) = run_grid(g)
        solo = run(config_from_dict({**SMALL, "federated": {**SMALL["federated"], "beta": 0.0}}),
                   tmp_path / "solo")
        assert res.final == solo.final
        assert (tmp_path / "g" / "cell_000" / "rounds.csv").read_bytes() == (
            tmp_path / "solo" / "rounds.csv").read_bytes()
        (row,) = read_rows(tmp_path / "g" / "comparison.csv")
        assert float(row["accuracy"]) == solo.final["accuracy"]

    def test_parallel_grid_matches_sequential(self, tmp_path):
        raw = {"base": SMALL, "grid": {"seed": [1, 2]}}
        run_grid(grid_from_dict(raw), output_dir=tmp_path / "s")
        run_grid(grid_from_dict(raw), jobs=2, output_dir=tmp_path / "p")
        assert (tmp_path / "s" / "comparison.csv").read_bytes() == (
            tmp_path / "p" / "comparison.csv").read_bytes()


class TestCli:
    def test_validate_ok(self, tmp_path, capsys):
        p = write_yaml(tmp_path / "c.yaml", SMALL)
        assert main(["validate", str(p)]) == 0
        assert "ok" in capsys.readouterr().out

    def test_validate_grid(self, tmp_path, capsys):
        p = write_yaml(tmp_path / "g.yaml", {"base": SMALL, "grid": {"seed": [0, 1, 2]}})
        assert main(["validate", str(p)]) == 0
        assert "3 cells" in capsys.readouterr().out

    def test_config_error_exit_2(self, tmp_path, capsys):
        p = write_yaml(tmp_path / "c.yaml", {**SMALL, "bogus": 1})
        assert main(["validate", str(p)]) == 2
        assert "bogus" in capsys.readouterr().err

    def test_missing_config_exit_2(self, tmp_path):
        assert main(["run", str(tmp_path / "absent.yaml")]) == 2

    def test_infeasible_partition_exit_3(self, tmp_path):
        raw = {**SMALL, "federated": {**SMALL["federated"], "partition": "noniid",
                                      "n_clients": 2, "benign_fractions": [0.95, 0.95]}}
        p = write_yaml(tmp_path / "c.yaml", raw)
        assert main(["run", str(p), "--out", str(tmp_path / "o")]) == 3

    def test_run_exit_0(self, tmp_path, capsys):
        p = write_yaml(tmp_path / "c.yaml", SMALL)
        assert main(["run", str(p), "--out", str(tmp_path / "o")]) == 0
        assert "accuracy=" in capsys.readouterr().out
        assert (tmp_path / "o" / "rounds.csv").exists()

    def test_synth_writes_csv(self, tmp_path):
        out = tmp_path / "s.csv"
        assert main(["synth", "--rows", "120", "--seed", "2", "--out", str(out)]) == 0
        rows = read_rows(out)
        assert len(rows) == 120
        assert {r["label"] for r in rows} == {"benign", "attack"}
