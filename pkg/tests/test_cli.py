import csv
import json

import numpy as np
import pytest

from tksmooth.cli import EXIT_IO, EXIT_OK, EXIT_RUNTIME, EXIT_USAGE, main


def read_csv(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_table1_csv_contract(tmp_path):
    out = tmp_path / "t.csv"
    rc = main(["experiment", "table1", "--scheme", "normal", "--p", "0.1", "--phi", "100",
               "--runs", "12", "--seed", "1", "--out", str(out)])
    assert rc == EXIT_OK
    rows = read_csv(out)
    assert list(rows[0]) == ["scheme", "p", "phi", "smoother", "median_mse", "q025", "q975", "runs"]
    assert [r["smoother"] for r in rows] == ["l2", "trobust"]
    assert all(r["runs"] == "12" and r["scheme"] == "normal" for r in rows)
    raw = read_csv(tmp_path / "t.runs.csv")
    assert len(raw) == 24 and {r["status"] for r in raw} == {"converged_delta"}


def test_simulate_then_smooth_round_trip(tmp_path):
    data, est = tmp_path / "d.json", tmp_path / "e.csv"
    assert main(["simulate", "--scheme", "nominal", "--seed", "7", "--out", str(data)]) == EXIT_OK
    doc = json.loads(data.read_text())
    assert doc["N"] == 100 and len(doc["z"]) == 100 and len(doc["truth"]) == 100
    assert main(["smooth", "--in", str(data), "--smoother", "trobust", "--out", str(est)]) == EXIT_OK
    rows = read_csv(est)
    assert len(rows) == 100 and list(rows[0]) == ["t", "x1", "x2"]
    x = np.array([[float(r["x1"]), float(r["x2"])] for r in rows])
    assert np.mean(np.sum((x - np.array(doc["truth"])) ** 2, axis=1)) < 0.2


def test_smooth_json_output(tmp_path):
    data, est = tmp_path / "d.json", tmp_path / "e.json"
    main(["simulate", "--experiment", "ttrend", "--jump", "--seed", "2", "--out", str(data)])
    assert main(["smooth", "--in", str(data), "--smoother", "ttrend", "--out", str(est)]) == EXIT_OK
    doc = json.loads(est.read_text())
    assert doc["status"] == "converged_delta" and np.shape(doc["x"]) == (20, 2)


def test_same_seed_same_bytes(tmp_path):
    outs = []
    for i in range(2):
        out = tmp_path / f"v{i}.json"
        assert main(["experiment", "ttrend", "--jump", "--runs", "5", "--seed", "3", "--out", str(out)]) == EXIT_OK
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]
    for i in range(2):
        out = tmp_path / f"s{i}.csv"
        main(["simulate", "--experiment", "vdp", "--p", "0.4", "--seed", "5", "--out", str(out)])
    assert (tmp_path / "s0.csv").read_bytes() == (tmp_path / "s1.csv").read_bytes()


def test_workers_env_does_not_change_output(tmp_path, monkeypatch):
    args = ["experiment", "table1", "--scheme", "uniform", "--p", "0.2", "--runs", "6", "--seed", "8"]
    main(args + ["--out", str(tmp_path / "a.csv")])
    monkeypatch.setenv("TKSMOOTH_WORKERS", "2")
    main(args + ["--out", str(tmp_path / "b.csv")])
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_trajectory_dump(tmp_path):
    dump = tmp_path / "traj.json"
    rc = main(["experiment", "ttrend", "--runs", "2", "--out", str(tmp_path / "s.csv"), "--dump", str(dump)])
    assert rc == EXIT_OK
    doc = json.loads(dump.read_text())
    assert len(doc["runs"]) == 2 and set(doc["runs"][0]["estimates"]) == {"l2", "trobust", "ttrend"}


@pytest.mark.parametrize("argv", [[], ["experiment", "bogus"], ["experiment", "table1", "--scheme", "normal"],
                                  ["smooth"], ["experiment", "vdp", "--runs", "0"],
                                  ["experiment", "table1", "--smoother", "huber"]])
def test_usage_errors(argv, capsys):
    assert main(argv) == EXIT_USAGE
    assert "error" in capsys.readouterr().err


def test_io_errors(tmp_path, capsys):
    assert main(["smooth", "--in", str(tmp_path / "missing.json")]) == EXIT_IO
    assert "missing.json" in capsys.readouterr().err
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["smooth", "--in", str(bad)]) == EXIT_IO
    bad.write_text(json.dumps({"format": "other"}))
    assert main(["smooth", "--in", str(bad)]) == EXIT_IO
    assert main(["simulate", "--out", str(tmp_path / "nodir" / "x.json")]) == EXIT_IO


def test_solver_failure_exit_code(tmp_path, capsys):
    rc = main(["experiment", "vdp", "--runs", "2", "--max-iter", "2", "--out", str(tmp_path / "v.csv")])
    assert rc == EXIT_RUNTIME
    assert "did not converge" in capsys.readouterr().err
    assert (tmp_path / "v.runs.csv").exists()
