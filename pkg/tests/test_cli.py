import json
from dataclasses import replace

import pytest

from socialgame.cli import EXIT_OK, EXIT_VALIDATION, main
from socialgame.events import save_events
from socialgame.expert import save_library
from socialgame.orientation import TendencyCategory
from socialgame.synth import synth_population


@pytest.fixture(scope="module")
def events_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "events.jsonl"
    events = []
    for cat in TendencyCategory:
        events.extend(synth_population(8, cat, seed=51))
    save_events(events, path)
    return path


@pytest.fixture(scope="module")
def library_file(tmp_path_factory, small_library):
    path = tmp_path_factory.mktemp("lib") / "library.json"
    save_library(small_library, path)
    return path


def read_bytes(path):
    with open(path, "rb") as fh:
        return fh.read()


class TestSolve:
    def scenario(self, tmp_path):
        path = tmp_path / "scenario.json"
        path.write_text(json.dumps({
            "left": {"d": 20.0, "v": 4.0},
            "straight": {"d": 30.0, "v": 8.0},
            "seed": 7,
        }))
        return path

    def test_solve_writes_solution(self, tmp_path, capsys):
        scenario = self.scenario(tmp_path)
        out = tmp_path / "solution.json"
        assert main(["solve", "--scenario", str(scenario), "--out", str(out)]) == EXIT_OK
        doc = json.loads(out.read_text())
        assert abs(sum(doc["p_l"]) - 1.0) < 1e-9
        assert doc["decisions"]["left"] in ("proceed", "yield")
        printed = capsys.readouterr().out
        assert "equilibrium" in printed

    def test_solve_reruns_byte_identical(self, tmp_path):
        scenario = self.scenario(tmp_path)
        out = tmp_path / "solution.json"
        main(["solve", "--scenario", str(scenario), "--out", str(out)])
        first = read_bytes(out)
        main(["solve", "--scenario", str(scenario), "--out", str(out)])
        assert read_bytes(out) == first

    def test_missing_scenario_is_validation_failure(self, tmp_path):
        code = main(["solve", "--scenario", str(tmp_path / "nope.json")])
        assert code == EXIT_VALIDATION


class TestPredictEval:
    def test_predict_report(self, tmp_path, events_file, library_file, capsys):
        out = tmp_path / "report.csv"
        code = main([
            "predict", "--events", str(events_file),
            "--library", str(library_file), "--out", str(out),
        ])
        assert code == EXIT_OK
        lines = out.read_text().splitlines()
        assert lines[0] == "event_id,label_l,predicted_l,mean_p_l,mean_p_s,correct"
        assert len(lines) == 25  # 24 events + header
        assert "overall" in capsys.readouterr().out

    def test_predict_baseline_mode(self, tmp_path, events_file, library_file):
        out = tmp_path / "report.csv"
        code = main([
            "predict", "--events", str(events_file),
            "--library", str(library_file), "--out", str(out), "--baseline",
        ])
        assert code == EXIT_OK

    def test_eval_emits_both_columns(self, tmp_path, events_file, library_file, capsys):
        out = tmp_path / "timing.csv"
        code = main([
            "eval", "--events", str(events_file),
            "--library", str(library_file), "--out", str(out),
        ])
        assert code == EXIT_OK
        header = out.read_text().splitlines()[0]
        assert header == "event_id,label_l,expert_distance,baseline_distance"
        assert "decision distance" in capsys.readouterr().out

    def test_empty_events_is_validation_failure(self, tmp_path, library_file):
        empty = tmp_path / "empty.jsonl"
        empty.write_text("")
        code = main([
            "predict", "--events", str(empty),
            "--library", str(library_file), "--out", str(tmp_path / "r.csv"),
        ])
        assert code == EXIT_VALIDATION


class TestIoAnalyze:
    def test_exact_header_and_manifest(self, tmp_path, events_file):
        out = tmp_path / "io.csv"
        code = main(["io-analyze", "--events", str(events_file), "--out", str(out)])
        assert code == EXIT_OK
        assert out.read_text().splitlines()[0] == "t,itsi,s_norm,io,delta_ttcp,a_c"
        manifest = json.loads((tmp_path / "io.csv.manifest.json").read_text())
        assert manifest["command"] == "io-analyze"
        assert str(out) in manifest["outputs"]

    def test_unknown_event_id_fails_validation(self, tmp_path, events_file):
        code = main([
            "io-analyze", "--events", str(events_file),
            "--out", str(tmp_path / "io.csv"), "--event-id", "nope",
        ])
        assert code == EXIT_VALIDATION


class TestSimulate:
    def test_batch_csv_and_rerun_determinism(self, tmp_path, library_file):
        out = tmp_path / "metrics.csv"
        args = [
            "simulate", "--episodes", "3", "--seed", "5",
            "--out", str(out), "--library", str(library_file),
        ]
        assert main(args) == EXIT_OK
        first = read_bytes(out)
        manifest_path = tmp_path / "metrics.csv.manifest.json"
        assert manifest_path.exists()
        # Re-run from the manifest: outputs must be byte-identical.
        assert main(["rerun", "--manifest", str(manifest_path)]) == EXIT_OK
        assert read_bytes(out) == first

    def test_baseline_flag_requires_global_entry(self, tmp_path, small_library):
        lib = replace(small_library)
        lib.global_entry = None
        path = tmp_path / "nolib.json"
        save_library(lib, path)
        code = main([
            "simulate", "--episodes", "1", "--out", str(tmp_path / "m.csv"),
            "--library", str(path), "--baseline",
        ])
        assert code == EXIT_VALIDATION

    def test_episode_logs_written(self, tmp_path, library_file):
        out = tmp_path / "metrics.csv"
        logs = tmp_path / "logs"
        code = main([
            "simulate", "--episodes", "2", "--seed", "3", "--out", str(out),
            "--library", str(library_file), "--logs", str(logs),
        ])
        assert code == EXIT_OK
        assert sorted(p.name for p in logs.iterdir()) == [
            "episode-0000.jsonl", "episode-0001.jsonl",
        ]


class TestLearn:
    def test_learn_small_dataset(self, tmp_path, events_file, capsys):
        out = tmp_path / "library.json"
        trace = tmp_path / "trace.csv"
        code = main([
            "learn", "--data", str(events_file), "--out", str(out),
            "--seed", "2", "--population", "16", "--generations", "5",
            "--trace", str(trace),
        ])
        assert code == EXIT_OK
        doc = json.loads(out.read_text())
        assert doc["format_version"] == 1
        assert set(doc["entries"]) <= {"precedence", "ambiguous", "yielding"}
        assert "global" in doc
        lines = trace.read_text().splitlines()
        assert lines[0] == "model,generation,best_loss"
        assert "global" in capsys.readouterr().out

    def test_learn_rerun_byte_identical(self, tmp_path, events_file):
        out = tmp_path / "library.json"
        args = ["learn", "--data", str(events_file), "--out", str(out),
                "--seed", "2", "--population", "16", "--generations", "4"]
        main(args)
        first = read_bytes(out)
        main(args)
        assert read_bytes(out) == first


class TestIngest:
    def test_ingest_pipeline(self, tmp_path):
        import math

        import numpy as np

        from socialgame.geometry import IntersectionGeometry
        from socialgame.ingest import TrackRecord, write_trajectory_csv

        geo = IntersectionGeometry()

        def track(role, tid, s0, speed):
            path = geo.path_for(role)
            n = 150
            s = s0 + speed * 0.1 * np.arange(n)
            pts = [path.point_at(si) for si in s]
            hs = [path.heading_at(si) for si in s]
            return TrackRecord(
                tid, "car", 0.1 * np.arange(n),
                np.array([p.x for p in pts]), np.array([p.y for p in pts]),
                np.array([speed * math.cos(h) for h in hs]),
                np.array([speed * math.sin(h) for h in hs]),
                np.array(hs), 4.5, 2.0,
            )

        csv_path = tmp_path / "raw.csv"
        write_trajectory_csv([track("left", "L", 4.0, 4.0), track("straight", "S", 0.0, 7.0)], csv_path)
        out = tmp_path / "events.jsonl"
        code = main(["ingest", "--csv", str(csv_path), "--out", str(out)])
        assert code == EXIT_OK
        assert out.read_text().count("\n") == 1

    def test_bad_csv_is_validation_failure(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("a,b,c\n1,2,3\n")
        code = main(["ingest", "--csv", str(bad), "--out", str(tmp_path / "e.jsonl")])
        assert code == EXIT_VALIDATION
