"""CLI and config: schema validation, round trips, exit codes, manifests,
and byte-identical reruns."""

import json
import os

import numpy as np
import pytest

from tdqec.cli import main
from tdqec.config import (
    ConfigError,
    ExperimentConfig,
    check_manifest_complete,
    dump_config,
    load_config,
)


def write_config(path, **overrides):
    data = {
        "codes": [3],
        "schemes": [{"kind": "lookup"}],
        "gamma_e": [0.1],
        "engine": "chain",
        "t_points": 60,
        "seed": 11,
    }
    data.update(overrides)
    path.write_text(json.dumps(data))
    return str(path)


class TestConfig:
    def test_round_trip_is_identity(self, tmp_path):
        cfg = ExperimentConfig.from_dict(
            {
                "codes": [5, 7],
                "schemes": [{"kind": "trickle", "m": 2}],
                "gamma_e": [0.01, 0.1],
                "n_traj": 500,
                "ion": {"omega": 1.0, "delta_big": 4.0, "delta_small": 3.46,
                        "kappa_eng": 1.0, "tones": [1]},
            }
        )
        path = tmp_path / "cfg.json"
        dump_config(cfg, str(path))
        again = load_config(str(path))
        assert again.to_dict() == cfg.to_dict()
        assert again.content_hash() == cfg.content_hash()

    def test_unknown_top_level_key_rejected(self):
        with pytest.raises(ConfigError, match="unknown config keys"):
            ExperimentConfig.from_dict({"codez": [3]})

    def test_unknown_scheme_kind_rejected(self):
        with pytest.raises(ConfigError, match="scheme kind"):
            ExperimentConfig.from_dict({"schemes": [{"kind": "magic"}]})

    def test_unknown_scheme_key_rejected(self):
        with pytest.raises(ConfigError, match="unknown config keys"):
            ExperimentConfig.from_dict({"schemes": [{"kind": "lookup", "n": 3}]})

    def test_nonpositive_rate_rejected(self):
        with pytest.raises(ConfigError, match="rates"):
            ExperimentConfig.from_dict({"gamma_e": [0.0]})

    def test_bad_schema_version(self):
        with pytest.raises(ConfigError, match="schema_version"):
            ExperimentConfig.from_dict({"schema_version": 99})


class TestExitCodes:
    def test_success(self, tmp_path):
        cfg = write_config(tmp_path / "c.json")
        assert main(["simulate", "--config", cfg, "--out", str(tmp_path / "o")]) == 0

    def test_config_error_is_one(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        assert main(["simulate", "--config", str(bad)]) == 1

    def test_usage_error_is_one(self, tmp_path):
        assert main(["simulate", "--engine", "warp", "--out", str(tmp_path)]) == 1

    def test_engine_guard_is_two(self, tmp_path):
        cfg = write_config(tmp_path / "c.json", codes=[13], engine="dense")
        assert main(["simulate", "--config", cfg, "--out", str(tmp_path / "o")]) == 2

    def test_verify_ok_is_zero(self, capsys):
        assert main(["verify", "--sizes", "3"]) == 0
        out = capsys.readouterr().out
        assert "FAIL" not in out


class TestSimulateOutputs:
    def test_deterministic_rerun_bytes(self, tmp_path):
        cfg = write_config(tmp_path / "c.json", engine="mcwf", n_traj=200, t_points=30)
        out1, out2 = tmp_path / "a", tmp_path / "b"
        assert main(["simulate", "--config", cfg, "--out", str(out1)]) == 0
        assert main(["simulate", "--config", cfg, "--out", str(out2)]) == 0
        name = "sim_n3_lookup_ge0.1.csv"
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()

    def test_seed_changes_stochastic_output(self, tmp_path):
        cfg = write_config(tmp_path / "c.json", engine="gillespie", n_traj=200, t_points=30)
        out1, out2 = tmp_path / "a", tmp_path / "b"
        assert main(["simulate", "--config", cfg, "--out", str(out1)]) == 0
        assert main(["simulate", "--config", cfg, "--out", str(out2), "--seed", "999"]) == 0
        name = "sim_n3_lookup_ge0.1.csv"
        assert (out1 / name).read_bytes() != (out2 / name).read_bytes()

    def test_manifest_registers_everything(self, tmp_path):
        cfg = write_config(tmp_path / "c.json")
        out = tmp_path / "o"
        assert main(["simulate", "--config", cfg, "--out", str(out)]) == 0
        check_manifest_complete(str(out))
        (out / "stray.txt").write_text("orphan")
        with pytest.raises(RuntimeError, match="orphan"):
            check_manifest_complete(str(out))

    def test_csv_is_rfc4180_like(self, tmp_path):
        cfg = write_config(tmp_path / "c.json")
        out = tmp_path / "o"
        main(["simulate", "--config", cfg, "--out", str(out)])
        raw = (out / "sim_n3_lookup_ge0.1.csv").read_bytes()
        assert raw.startswith(b"time,infidelity,stderr\r\n")
        assert b";" not in raw


class TestSweepOutputs:
    def test_small_sweep_table(self, tmp_path):
        cfg = write_config(
            tmp_path / "c.json",
            codes=[3, 5, 7],
            schemes=[{"kind": "trickle", "m": "ell"}],
            gamma_e=list(np.geomspace(0.02, 0.5, 7)),
            t_points=120,
        )
        out = tmp_path / "o"
        assert main(["sweep", "--config", cfg, "--out", str(out), "--threads", "2"]) == 0
        rows = [json.loads(l) for l in (out / "sweep.ndjson").read_text().splitlines()]
        cells = [r for r in rows if "p_l" in r]
        assert len(cells) == 3 * 7
        assert all(r["scheme"] == "trickle" for r in cells)
        summaries = [r for r in rows if r.get("kind") == "summary"]
        assert len(summaries) == 1
        check_manifest_complete(str(out))

    def test_env_thread_fallback(self, tmp_path, monkeypatch):
        monkeypatch.setenv("TDQEC_THREADS", "2")
        cfg = write_config(tmp_path / "c.json", codes=[3], gamma_e=[0.05, 0.1])
        assert main(["sweep", "--config", cfg, "--out", str(tmp_path / "o")]) == 0

    def test_bad_env_thread_value(self, tmp_path, monkeypatch):
        monkeypatch.setenv("TDQEC_THREADS", "lots")
        cfg = write_config(tmp_path / "c.json")
        assert main(["sweep", "--config", cfg, "--out", str(tmp_path / "o")]) == 1


class TestRates:
    def test_default_invocation_reproduces_published_profile(self, tmp_path):
        out = tmp_path / "r"
        assert main(["rates", "--out", str(out)]) == 0
        lines = (out / "rates_n21.csv").read_text().splitlines()
        assert lines[0] == "c,desired_rate,undesired_rate,desired_norm,undesired_norm,active"
        rows = [l.split(",") for l in lines[1:]]
        assert len(rows) == 20
        norms = [float(r[3]) for r in rows]
        assert max(range(20), key=lambda i: norms[i]) == 4  # peak at c = 5
        active = [int(r[5]) for r in rows]
        assert active == [1] * 10 + [0] * 10

    def test_rates_requires_ion_block(self, tmp_path):
        cfg = write_config(tmp_path / "c.json")
        assert main(["rates", "--config", cfg, "--out", str(tmp_path / "o")]) == 1
