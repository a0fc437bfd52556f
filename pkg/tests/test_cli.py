"""End-to-end command tests driven through main(argv) in process."""

import hashlib
import json
import math
import os

import pytest

from cecap.channel import Channel, DiscreteCircularDistribution, distribution_to_json
from cecap.cli import main, payload_checksum


def read_envelope(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def checksum_of(payload):
    canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


class TestEnvelope:
    def test_solve_writes_valid_envelope(self, tmp_path, capsys):
        rc = main(
            [
                "solve",
                "--lambda", "1.6",
                "--radius", "0.4",
                "--output-dir", str(tmp_path),
            ]
        )
        assert rc == 0
        out = capsys.readouterr().out
        assert "capacity" in out and "nats" in out
        env = read_envelope(tmp_path / "solve.json")
        assert env["tool"] == "cecap"
        assert env["command"] == "solve"
        assert env["config"]["lambda"] == 1.6
        assert env["config"]["radius"] == 0.4
        # defaults are echoed, not left implicit
        assert "kkt_tol" in env["config"]
        assert "warm_start" in env["config"]
        assert env["payload_sha256"] == checksum_of(env["payload"])
        atoms = env["payload"]["atoms"]
        assert len(atoms) == 2
        assert env["payload"]["kkt"]["satisfied"] is True

    def test_checksum_helper_matches_manual(self):
        payload = {"b": 1.5, "a": [1, 2]}
        assert payload_checksum(payload) == checksum_of(payload)

    def test_bits_flag_changes_print_not_payload(self, tmp_path, capsys):
        rc = main(
            [
                "waterfill",
                "--lambda", "2",
                "--radius", "1",
                "--bits",
                "--output-dir", str(tmp_path),
            ]
        )
        assert rc == 0
        out = capsys.readouterr().out
        assert "bits" in out
        env = read_envelope(tmp_path / "waterfill.json")
        # stored value stays in nats regardless of the display unit
        assert math.isclose(env["payload"]["capacity_nats"], 0.8109302162163288, rel_tol=1e-9)

    def test_output_dir_env_fallback(self, tmp_path, capsys, monkeypatch):
        monkeypatch.setenv("CECAP_OUTPUT_DIR", str(tmp_path))
        rc = main(["waterfill", "--lambda", "2", "--radius", "1"])
        assert rc == 0
        assert (tmp_path / "waterfill.json").exists()


class TestSolve:
    def test_identity_channel_rejected(self, tmp_path, capsys):
        rc = main(
            ["solve", "--lambda", "1", "--radius", "0.5", "--output-dir", str(tmp_path)]
        )
        assert rc == 1
        err = capsys.readouterr().err
        assert "error:" in err and "uniform" in err

    def test_missing_radius_rejected(self, tmp_path, capsys):
        rc = main(["solve", "--lambda", "2", "--output-dir", str(tmp_path)])
        assert rc == 1
        assert "--radius" in capsys.readouterr().err

    def test_failure_persists_best_iterate(self, tmp_path, capsys):
        # atom budget too small for this radius: exit 2 but keep the best point
        rc = main(
            [
                "solve",
                "--lambda", "2",
                "--radius", "0.65",
                "--max-atoms", "2",
                "--output-dir", str(tmp_path),
            ]
        )
        assert rc == 2
        err = capsys.readouterr().err
        assert "solve failed" in err
        env = read_envelope(tmp_path / "solve.json")
        payload = env["payload"]
        assert "error" in payload
        assert len(payload["best"]["atoms"]) == 2
        assert payload["kkt"]["satisfied"] is False
        assert env["payload_sha256"] == checksum_of(payload)


class TestSweep:
    def test_csv_and_envelope(self, tmp_path, capsys):
        rc = main(
            [
                "sweep",
                "--lambda", "2",
                "--radii", "0.05,0.1",
                "--format", "csv",
                "--output-dir", str(tmp_path),
            ]
        )
        assert rc == 0
        lines = (tmp_path / "sweep.csv").read_text().splitlines()
        assert lines[0] == "radius,capacity,n_atoms,max_violation"
        assert len(lines) == 3
        first = lines[1].split(",")
        assert float(first[0]) == 0.05
        assert int(first[2]) == 2
        env = read_envelope(tmp_path / "sweep.json")
        assert env["payload"]["failures"] == 0
        assert len(env["payload"]["rows"]) == 2

    def test_partial_failure_blank_cells_exit_2(self, tmp_path, capsys):
        rc = main(
            [
                "sweep",
                "--lambda", "2",
                "--radii", "0.1,0.65",
                "--max-atoms", "2",
                "--format", "csv",
                "--output-dir", str(tmp_path),
            ]
        )
        assert rc == 2
        assert "failed" in capsys.readouterr().err
        lines = (tmp_path / "sweep.csv").read_text().splitlines()
        good, bad = lines[1], lines[2]
        assert good.count(",") == 3 and "" not in good.split(",")
        assert bad.split(",")[1:] == ["", "", ""]
        env = read_envelope(tmp_path / "sweep.json")
        assert env["payload"]["failures"] == 1
        assert "error" in env["payload"]["rows"][1]

    def test_descending_radii_rejected(self, tmp_path, capsys):
        rc = main(
            [
                "sweep",
                "--lambda", "2",
                "--radii", "0.2,0.1",
                "--output-dir", str(tmp_path),
            ]
        )
        assert rc == 1
        assert "ascending" in capsys.readouterr().err

    def test_grid_trio_conflicts_with_radii(self, tmp_path, capsys):
        rc = main(
            [
                "sweep",
                "--lambda", "2",
                "--radii", "0.1",
                "--r-min", "0.1",
                "--r-max", "0.2",
                "--r-count", "2",
                "--output-dir", str(tmp_path),
            ]
        )
        assert rc == 1


class TestThreshold:
    def test_csv_headers_and_values(self, tmp_path, capsys):
        rc = main(
            [
                "threshold",
                "--lambda", "2,10",
                "--format", "csv",
                "--output-dir", str(tmp_path),
            ]
        )
        assert rc == 0
        lines = (tmp_path / "threshold.csv").read_text().splitlines()
        assert lines[0] == "lambda,r_threshold,wf_level,gap"
        row10 = lines[2].split(",")
        assert abs(float(row10[1]) - 0.1647) < 2e-3
        assert abs(float(row10[2]) - math.sqrt(0.99)) < 1e-9
        env = read_envelope(tmp_path / "threshold.json")
        assert env["payload"]["rows"][0]["lambda"] == 2.0
        assert env["payload"]["rows"][0]["error"] is None

    def test_lambda_at_most_one_rejected(self, tmp_path, capsys):
        rc = main(
            ["threshold", "--lambda", "2,1", "--output-dir", str(tmp_path)]
        )
        assert rc == 1


class TestBounds:
    def test_slope_in_payload_not_csv(self, tmp_path, capsys):
        rc = main(
            [
                "bounds",
                "--n", "3",
                "--det", "2",
                "--radius", "10",
                "--radius", "100",
                "--format", "csv",
                "--output-dir", str(tmp_path),
            ]
        )
        assert rc == 0
        out = capsys.readouterr().out
        assert "upper-bound slope" in out
        lines = (tmp_path / "bounds.csv").read_text().splitlines()
        assert lines[0] == "n,det_h,radius,lower,upper"
        env = read_envelope(tmp_path / "bounds.json")
        slopes = env["payload"]["upper_slope_vs_ln_r"]
        assert len(slopes) == 1
        assert math.isclose(slopes[0], 2.0, rel_tol=1e-9)

    def test_bad_dimension_rejected(self, tmp_path, capsys):
        rc = main(
            ["bounds", "--n", "1", "--det", "2", "--radius", "10",
             "--output-dir", str(tmp_path)]
        )
        assert rc == 1


class TestDof:
    def test_csv_and_determinism(self, tmp_path, capsys):
        args = [
            "dof",
            "--n", "2",
            "--lambda", "2",
            "--radii", "5,10",
            "--samples", "2000",
            "--seed", "7",
            "--format", "csv",
            "--output-dir", str(tmp_path),
        ]
        assert main(args) == 0
        env_a = read_envelope(tmp_path / "dof.json")
        assert main(args) == 0
        env_b = read_envelope(tmp_path / "dof.json")
        # same seed, same payload; only the timestamp may differ
        assert env_a["payload_sha256"] == env_b["payload_sha256"]
        lines = (tmp_path / "dof.csv").read_text().splitlines()
        assert lines[0] == "radius,mi_nats,std_error,samples"
        assert int(lines[1].split(",")[3]) == 2000
        assert env_a["payload"]["slope_vs_ln_r"] is not None

    def test_svals_count_must_match_n(self, tmp_path, capsys):
        rc = main(
            [
                "dof",
                "--n", "3",
                "--svals", "2,1",
                "--radii", "5",
                "--samples", "2000",
                "--output-dir", str(tmp_path),
            ]
        )
        assert rc == 1

    def test_tiny_sample_count_rejected(self, tmp_path, capsys):
        rc = main(
            [
                "dof",
                "--n", "2",
                "--lambda", "2",
                "--radii", "5",
                "--samples", "10",
                "--output-dir", str(tmp_path),
            ]
        )
        assert rc == 1


class TestVerify:
    def test_optimal_distribution_passes(self, tmp_path, capsys):
        dist = DiscreteCircularDistribution.two_point()
        ch = Channel(lam=2.0, radius=0.1)
        path = tmp_path / "dist.json"
        path.write_text(distribution_to_json(dist, ch))
        rc = main(["verify", str(path), "--output-dir", str(tmp_path)])
        assert rc == 0
        assert "satisfied" in capsys.readouterr().out
        env = read_envelope(tmp_path / "verify.json")
        assert env["payload"]["kkt"]["satisfied"] is True

    def test_suboptimal_distribution_fails(self, tmp_path, capsys):
        # two atoms cannot be optimal above the norm threshold
        dist = DiscreteCircularDistribution.two_point()
        ch = Channel(lam=2.0, radius=1.0)
        path = tmp_path / "dist.json"
        path.write_text(distribution_to_json(dist, ch))
        rc = main(["verify", str(path), "--output-dir", str(tmp_path)])
        assert rc == 1
        assert "violated" in capsys.readouterr().out

    def test_malformed_file_rejected(self, tmp_path, capsys):
        path = tmp_path / "dist.json"
        path.write_text("{not json")
        rc = main(["verify", str(path), "--output-dir", str(tmp_path)])
        assert rc == 1
        assert "invalid distribution file" in capsys.readouterr().err

    def test_missing_file_rejected(self, tmp_path, capsys):
        rc = main(
            ["verify", str(tmp_path / "nope.json"), "--output-dir", str(tmp_path)]
        )
        assert rc == 1


class TestConfigFile:
    def test_flags_win_over_config(self, tmp_path, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("lambda = 2.0\nradius = 1.0\nkkt-tol = 1e-5\n")
        rc = main(
            [
                "solve",
                "--config", str(cfg),
                "--radius", "0.05",
                "--output-dir", str(tmp_path),
            ]
        )
        assert rc == 0
        env = read_envelope(tmp_path / "solve.json")
        assert env["config"]["lambda"] == 2.0
        assert env["config"]["radius"] == 0.05
        assert env["config"]["kkt_tol"] == 1e-5

    def test_unknown_key_names_the_key(self, tmp_path, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("lambda = 2.0\nradiis = 0.1\n")
        rc = main(["solve", "--config", str(cfg), "--output-dir", str(tmp_path)])
        assert rc == 1
        assert "radiis" in capsys.readouterr().err

    def test_comments_and_blanks_skipped(self, tmp_path, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("# water-filling point\n\nlambda = 2.0\nradius = 1.0\n")
        rc = main(["waterfill", "--config", str(cfg), "--output-dir", str(tmp_path)])
        assert rc == 0

    def test_bad_value_reports_line(self, tmp_path, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("lambda = two\n")
        rc = main(["waterfill", "--config", str(cfg), "--output-dir", str(tmp_path)])
        assert rc == 1
        assert ":1:" in capsys.readouterr().err

    def test_unreadable_config_rejected(self, tmp_path, capsys):
        rc = main(
            ["waterfill", "--config", str(tmp_path / "absent.cfg"),
             "--output-dir", str(tmp_path)]
        )
        assert rc == 1


class TestArgParsing:
    def test_unknown_flag_exits_1(self, tmp_path, capsys):
        rc = main(["solve", "--lambdaa", "2"])
        assert rc == 1

    def test_unknown_command_exits_1(self, capsys):
        rc = main(["frobnicate"])
        assert rc == 1

    def test_bad_float_list_exits_1(self, tmp_path, capsys):
        rc = main(
            ["sweep", "--lambda", "2", "--radii", "0.1,abc",
             "--output-dir", str(tmp_path)]
        )
        assert rc == 1
