import json

import numpy as np
import pytest

from geohull.cli import main
from geohull.config import (
    ConfigError,
    canonical_json,
    config_hash,
    git_blob_sha1,
    load_config_text,
    read_json,
    read_points,
    read_summaries,
    write_summaries,
)
from geohull.montecarlo import EstimatorSummary

BALL = {"geometry": "spherical", "dim": 2, "shape": "ball", "radius": 0.8}


def config(**overrides):
    cfg = {
        "schema_version": 1,
        "body": BALL,
        "model": "inscribed",
        "n_grid": [8, 16],
        "replications": 4,
        "master_seed": 42,
    }
    cfg.update(overrides)
    return cfg


def write_config(tmp_path, name="config.json", **overrides):
    p = tmp_path / name
    p.write_text(json.dumps(config(**overrides)))
    return p


class TestConfigParsing:
    def test_minimal(self):
        _, cfg = load_config_text(json.dumps(config()))
        assert cfg.n_grid == (8, 16) and cfg.replications == 4

    @pytest.mark.parametrize("overrides, field", [
        (dict(replications=1), "replications"),
        (dict(n_grid=[16, 8]), "n_grid"),
        (dict(extra=1), "extra"),
        (dict(model="outer"), "model"),
        (dict(schema_version=2), "schema_version"),
        (dict(body=dict(BALL, colour="red")), "body.colour"),
        (dict(body=dict(BALL, radius="big")), "body.radius"),
        (dict(statistics=["f0", "f0"]), "statistics"),
        (dict(master_seed=-3), "master_seed"),
    ])
    def test_errors_name_field(self, overrides, field):
        with pytest.raises(ConfigError) as e:
            load_config_text(json.dumps(config(**overrides)))
        assert e.value.field == field

    def test_invalid_json(self):
        with pytest.raises(ConfigError):
            load_config_text("{not json")

    def test_hash_is_git_blob_sha(self):
        assert git_blob_sha1(b"hello\n") == "ce013625030ba8dba906f756967f9e9ca394464a"

    def test_hash_ignores_key_order_and_whitespace(self):
        a = config()
        b = json.loads(json.dumps(dict(reversed(list(a.items())))))
        assert canonical_json(a) == canonical_json(b)
        assert config_hash(a) == config_hash(b)
        assert config_hash(a) != config_hash(config(master_seed=43))

    def test_summaries_round_trip(self, tmp_path):
        rows = [EstimatorSummary(8, "f0", 0.1 + 0.2, 1e-17, 3.3e-9, float("nan"), 4, 42)]
        write_summaries(tmp_path / "s.csv", "inscribed", rows)
        assert read_summaries(tmp_path / "s.csv")[0][1].mean == 0.1 + 0.2
        assert b"\r" not in (tmp_path / "s.csv").read_bytes()


class TestSimulate:
    def test_rows_and_manifest(self, tmp_path):
        out = tmp_path / "out"
        assert main(["simulate", "-c", str(write_config(tmp_path)), "-o", str(out)]) == 0
        rows = read_summaries(out / "summaries.csv")
        assert len(rows) == 4
        assert sorted((s.statistic, s.n) for _, s in rows) == [
            ("f0", 8), ("f0", 16), ("missed_volume", 8), ("missed_volume", 16)
        ]
        man = read_json(out / "manifest.json")
        assert man["config_hash"] == config_hash(config())
        assert set(man) >= {"config", "started", "finished", "version", "outputs"}
        header = (out / "summaries.csv").read_text().splitlines()[0]
        assert header == "model,statistic,n,mean,var,stderr_mean,stderr_var,replications,seed"

    def test_byte_identical(self, tmp_path):
        cfg = write_config(tmp_path)
        main(["simulate", "-c", str(cfg), "-o", str(tmp_path / "a")])
        main(["simulate", "-c", str(cfg), "-o", str(tmp_path / "b"), "--threads", "2"])
        assert (tmp_path / "a/summaries.csv").read_bytes() == (tmp_path / "b/summaries.csv").read_bytes()

    def test_env_threads(self, tmp_path, monkeypatch):
        cfg = write_config(tmp_path)
        main(["simulate", "-c", str(cfg), "-o", str(tmp_path / "a")])
        monkeypatch.setenv("GEOHULL_THREADS", "2")
        main(["simulate", "-c", str(cfg), "-o", str(tmp_path / "b")])
        assert (tmp_path / "a/summaries.csv").read_bytes() == (tmp_path / "b/summaries.csv").read_bytes()

    def test_seed_override_changes_hash(self, tmp_path):
        cfg = write_config(tmp_path)
        main(["simulate", "-c", str(cfg), "-o", str(tmp_path / "a")])
        main(["simulate", "-c", str(cfg), "-o", str(tmp_path / "b"), "--seed", "7"])
        ha = read_json(tmp_path / "a/manifest.json")["config_hash"]
        hb = read_json(tmp_path / "b/manifest.json")["config_hash"]
        assert ha != hb
        assert read_json(tmp_path / "b/manifest.json")["config"]["master_seed"] == 7

    def test_replications_one(self, tmp_path, capsys):
        assert main(["simulate", "-c", str(write_config(tmp_path, replications=1)), "-o", str(tmp_path)]) == 1
        assert "replications" in capsys.readouterr().err

    def test_missing_file(self, tmp_path):
        assert main(["simulate", "-c", str(tmp_path / "nope.json"), "-o", str(tmp_path)]) == 1

    def test_runtime_failure_reports_stream(self, tmp_path, capsys, monkeypatch):
        def boom(*args, **kwargs):
            raise RuntimeError("boom")

        monkeypatch.setattr("geohull.montecarlo.polytope_volume", boom)
        assert main(["simulate", "-c", str(write_config(tmp_path)), "-o", str(tmp_path)]) == 2
        assert "stream id" in capsys.readouterr().err

    def test_circumscribed(self, tmp_path):
        cfg = write_config(tmp_path, model="circumscribed", n_grid=[8, 16], u1_samples=20_000)
        assert main(["simulate", "-c", str(cfg), "-o", str(tmp_path / "c")]) == 0
        stats = {s.statistic for _, s in read_summaries(tmp_path / "c/summaries.csv")}
        assert stats == {"fd1", "mean_width_excess"}


class TestScaling:
    def synthetic(self, tmp_path, exponent=-5 / 3, k=6):
        rows = [EstimatorSummary(n, "missed_volume", 3.0 * n**exponent, 2.0 * n**(2 * exponent), 0, 0, 10, 0)
                for n in 2 ** np.arange(7, 7 + k)]
        path = tmp_path / "summaries.csv"
        write_summaries(path, "inscribed", rows)
        return path

    def test_exact_power_law(self, tmp_path):
        path = self.synthetic(tmp_path)
        assert main(["scaling", str(path), "--stat", "missed_volume"]) == 0
        res = read_json(tmp_path / "scaling.json")
        assert res["slope"] == pytest.approx(-5 / 3, abs=1e-12)
        assert set(res) >= {"slope", "ci95", "intercept", "points"}

    def test_variance_target(self, tmp_path):
        path = self.synthetic(tmp_path)
        assert main(["scaling", str(path), "--stat", "missed_volume", "--target", "variance",
                     "-o", str(tmp_path / "v.json")]) == 0
        assert read_json(tmp_path / "v.json")["slope"] == pytest.approx(-10 / 3, abs=1e-12)

    def test_expected_mismatch(self, tmp_path):
        path = self.synthetic(tmp_path)
        assert main(["scaling", str(path), "--stat", "missed_volume", "--expected", "-1", "--slack", "0.1"]) == 3

    def test_two_rows(self, tmp_path):
        path = self.synthetic(tmp_path, k=2)
        assert main(["scaling", str(path), "--stat", "missed_volume"]) == 1

    def test_missing_statistic(self, tmp_path):
        path = self.synthetic(tmp_path)
        assert main(["scaling", str(path), "--stat", "f0"]) == 1

    def test_end_to_end_variance_slope(self, tmp_path):
        cfg = write_config(tmp_path, n_grid=[128, 256, 512, 1024, 2048], replications=400,
                           statistics=["missed_volume"])
        assert main(["simulate", "-c", str(cfg), "-o", str(tmp_path)]) == 0
        assert main(["scaling", str(tmp_path / "summaries.csv"), "--stat", "missed_volume",
                     "--target", "variance", "--expected", "-1.6667", "--slack", "0.2"]) == 0


class TestGeometryCommands:
    def test_floating_empty(self, tmp_path, capsys):
        assert main(["floating", "--t-fraction", "1.0", "-o", str(tmp_path)]) == 0
        assert "empty" in capsys.readouterr().out
        assert read_json(tmp_path / "floating.json")["empty"]

    def test_floating_round_trip(self, tmp_path):
        assert main(["floating", "--square", "0.5", "--t-fraction", "0.01", "--directions", "256",
                     "-o", str(tmp_path)]) == 0
        header, pts = read_points(tmp_path / "floating.csv")
        info = read_json(tmp_path / "floating.json")
        assert header == ("x", "y") and len(pts) == info["vertices"]
        assert np.all(np.abs(pts) <= 0.5)
        assert 0 < info["wet_part_volume"] < info["volume"]

    def test_meanwidth(self, capsys):
        assert main(["meanwidth", "--radius", "0.5", "--samples", "1000000", "--seed", "1"]) == 0
        line = capsys.readouterr().out
        est, se = (float(v) for v in line.split("=")[1].split("±"))
        assert abs(est - np.sin(0.5) / 2) < 3 * se

    def test_polar_ball(self, tmp_path):
        assert main(["polar", "--radius", "0.3", "-o", str(tmp_path)]) == 0
        info = read_json(tmp_path / "polar.json")
        assert info["radius"] == pytest.approx(np.pi / 2 - 0.3)
        assert np.allclose(info["center"], [0, 0, -1])

    def test_polar_polytope_round_trip(self, tmp_path):
        body = json.dumps({"geometry": "spherical", "dim": 2, "shape": "square", "half_side": 0.4})
        assert main(["polar", "--body", body, "-o", str(tmp_path)]) == 0
        info = read_json(tmp_path / "polar.json")
        _, verts = read_points(tmp_path / "polar.csv")
        assert info["vertices"] == len(verts) == 4
        again = json.dumps({"geometry": "spherical", "dim": 2, "shape": "polytope",
                            "vertices": verts.tolist(), "frame": info["frame"]})
        assert main(["polar", "--body", again, "-o", str(tmp_path / "back")]) == 0
        _, back = read_points(tmp_path / "back/polar.csv")
        ref = np.array([[-0.4, -0.4], [0.4, -0.4], [0.4, 0.4], [-0.4, 0.4]])
        # the double polar is the square again, up to the chart frame
        frame = np.array(read_json(tmp_path / "back/polar.json")["frame"])
        amb = np.column_stack([back, np.ones(len(back))]) @ frame
        amb = amb[:, :2] / amb[:, 2:]
        assert sorted(map(tuple, np.round(amb, 9))) == sorted(map(tuple, ref))

    def test_polar_hyperbolic_is_input_error(self, tmp_path):
        assert main(["polar", "--geometry", "hyperbolic", "-o", str(tmp_path)]) == 1

    def test_bad_body(self, tmp_path, capsys):
        assert main(["polar", "--body", '{"geometry": "spherical", "dim": 2, "shape": "ball"}',
                     "-o", str(tmp_path)]) == 1
        assert "radius" in capsys.readouterr().err

    def test_capcover(self, tmp_path):
        assert main(["capcover", "--t-fraction", str(1 / 300), "-o", str(tmp_path)]) == 0
        rep = read_json(tmp_path / "capcover_report.json")
        assert rep["passed"] and set(rep["clauses"]) == {"i", "ii", "iii", "iv"}
        _, caps = read_points(tmp_path / "caps.csv")
        _, cells = read_points(tmp_path / "inner_sets.csv")
        assert len(caps) == rep["m"] and len(np.unique(cells[:, 0])) == rep["m_inner"]

    def test_capcover_above_threshold(self, tmp_path):
        assert main(["capcover", "--t-fraction", "0.01", "-o", str(tmp_path)]) == 1

    def test_capcover_clause_failure(self, tmp_path, capsys, monkeypatch):
        from geohull.capcover import CapCoverError

        def fail(*args, **kwargs):
            raise CapCoverError("iii", "synthetic")

        monkeypatch.setattr("geohull.cli.cap_cover_2d", fail)
        assert main(["capcover", "--t-fraction", "0.001", "-o", str(tmp_path)]) == 2
        assert "(iii)" in capsys.readouterr().err
        assert read_json(tmp_path / "capcover_report.json")["violated"] == "iii"


def test_body_from_file(tmp_path):
    p = tmp_path / "body.json"
    p.write_text(json.dumps(dict(BALL, radius=0.3)))
    assert main(["polar", "--body", str(p), "-o", str(tmp_path)]) == 0
    assert read_json(tmp_path / "polar.json")["radius"] == pytest.approx(np.pi / 2 - 0.3)
    assert main(["polar", "--body", str(tmp_path / "missing.json"), "-o", str(tmp_path)]) == 1
