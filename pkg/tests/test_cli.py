import csv
import json

import pytest

from svqnhe.cli import CSV_COLUMNS, METRIC_COLUMNS, ExperimentSuite, main
from svqnhe.driver import ConfigError, RunConfig, compute_metrics, run
from svqnhe.pauli import erdos_renyi, write_edge_list

HEIS3 = {"name": "heisenberg2d", "params": {"rows": 1, "cols": 3}}


def write(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_gs_ising(capsys):
    assert main(["gs", "--model", "ising1d", "--n", "3", "--J", "1"]) == 0
    assert capsys.readouterr().out.strip() == "-2.0"


def test_plan_j1j2(capsys):
    assert main(["plan", "--model", "j1j2", "--n", "6", "--J2", "0.6"]) == 0
    assert capsys.readouterr().out.strip().endswith("circuits per iteration: 28")


def test_plan_from_config(tmp_path, capsys):
    cfg = write(tmp_path / "c.json", {"model": HEIS3})
    assert main(["plan", cfg, "--json"]) == 0
    out = capsys.readouterr().out
    assert json.loads(out[: out.rindex("circuits")])
    assert out.strip().endswith("circuits per iteration: 7")


def test_plan_capacity_table(capsys):
    assert main(["plan", "--capacity"]) == 0
    rows = [line.split() for line in capsys.readouterr().out.strip().splitlines()[1:]]
    assert [int(r[2]) for r in rows] == [408, 1305, 2040, 12180]
    svq, bw = [int(r[3]) for r in rows], [int(r[4]) for r in rows]
    assert all(a < b for a, b in zip(svq, bw))


def test_dla(capsys):
    assert main(["dla", "--n", "3", "--m", "2"]) == 0
    assert capsys.readouterr().out.strip().splitlines()[1].split()[:3] == ["3", "2", "30"]


def test_input_errors_exit_one(tmp_path, capsys):
    assert main(["frobnicate"]) == 1
    assert main(["run", str(tmp_path / "missing.json")]) == 1
    (tmp_path / "bad.json").write_text("{oops")
    assert main(["run", str(tmp_path / "bad.json")]) == 1
    assert main(["run", write(tmp_path / "k.json", {"nope": 1})]) == 1
    assert main(["dla", "--n", "3", "--m", "7"]) == 1
    assert main(["gs", "--model", "nope"]) == 1


def test_empty_suite_writes_header_only(tmp_path):
    cfg = write(tmp_path / "s.json", {"name": "empty", "runs": []})
    assert main(["run", cfg, "--out", str(tmp_path / "out")]) == 0
    lines = (tmp_path / "out" / "results.csv").read_text().splitlines()
    assert lines == [",".join(CSV_COLUMNS)]


def test_suite_ids_unique_and_baseline_known():
    with pytest.raises(ConfigError):
        ExperimentSuite.from_dict({"runs": [{"model": HEIS3}, {"model": HEIS3}]})
    with pytest.raises(ConfigError):
        ExperimentSuite.from_dict({"runs": [{"model": HEIS3}], "baseline": "nn"})
    with pytest.raises(ConfigError):
        ExperimentSuite.from_dict({"runs": [], "extra": 1})


SUITE = {
    "name": "demo",
    "baseline": "nn",
    "runs": [
        {"method": "svqnhe", "model": HEIS3, "max_iter": 30, "seeds": [0, 1]},
        {"method": "nn", "label": "nn", "model": HEIS3, "max_iter": 30, "seeds": [0, 1]},
    ],
}


def test_run_suite_outputs(tmp_path, capsys):
    cfg = write(tmp_path / "s.json", SUITE)
    out = tmp_path / "out"
    assert main(["run", cfg, "--out", str(out)]) == 0
    rows = read_csv(out / "results.csv")
    assert [r["method"] for r in rows] == ["svqnhe", "svqnhe", "nn", "nn"]
    assert list(rows[0]) == CSV_COLUMNS
    assert len(list((out / "traces").glob("*.jsonl"))) == 4
    metrics = read_csv(out / "metrics.csv")
    assert list(metrics[0]) == METRIC_COLUMNS
    svq = [run(RunConfig.from_dict(SUITE["runs"][0]), s) for s in (0, 1)]
    nn = [run(RunConfig.from_dict(SUITE["runs"][1]), s) for s in (0, 1)]
    row = next(m for m in metrics if m["method"] == "svqnhe")
    assert float(row["r_mae"]) == pytest.approx(compute_metrics(svq, nn).r_mae, rel=1e-12)
    assert "svqnhe" in (out / "summary.txt").read_text()


def test_rerun_is_byte_identical(tmp_path):
    cfg = write(tmp_path / "s.json", SUITE)
    main(["run", cfg, "--out", str(tmp_path / "a")])
    main(["run", cfg, "--out", str(tmp_path / "b")])
    assert (tmp_path / "a" / "results.csv").read_bytes() == (tmp_path / "b" / "results.csv").read_bytes()


def test_single_config_run(tmp_path):
    cfg = write(tmp_path / "c.json", {"model": HEIS3, "max_iter": 5, "mode": "shot_protocol", "shots": 100})
    assert main(["run", cfg, "--out", str(tmp_path / "o")]) == 0
    (row,) = read_csv(tmp_path / "o" / "results.csv")
    assert row["mode"] == "shot_protocol" and row["circuits_per_iter"] == "7"


def test_maxcut_command(tmp_path, capsys):
    g = tmp_path / "g.txt"
    write_edge_list(erdos_renyi(6, 0.5, seed=0), g)
    cfg = write(tmp_path / "c.json", {"model": {"name": "maxcut", "params": {"n_qubits": 3, "k": 2}}, "mode": "shot_protocol", "max_iter": 10, "shots": 100})
    assert main(["maxcut", str(g), cfg, "--out", str(tmp_path / "o")]) == 0
    rows = read_csv(tmp_path / "o" / "maxcut.csv")
    assert {r["method"] for r in rows} == {"svqnhe", "sign_vqe", "brickwork_vqe"}
    assert main(["maxcut", str(tmp_path / "none.txt"), cfg]) == 1
