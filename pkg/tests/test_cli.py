import csv
import json
import subprocess
import sys

import pytest

from dynhomophily import io
from dynhomophily.cli import PRESETS, main


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def run(*argv):
    return main([str(a) for a in argv])


def test_presets():
    assert PRESETS == {"uci": 2000, "bitcoin": 1000, "math": 12000}


def test_ingest(tmp_path):
    (tmp_path / "e.txt").write_text("u v 0\nu x 5\n")
    assert run("ingest", "--edges", tmp_path / "e.txt", "--window", 5, "--out", tmp_path / "o") == 0
    g = io.load_graph_dir(tmp_path / "o")
    assert g.horizon == 2
    meta = json.loads((tmp_path / "o" / "meta.json").read_text())
    assert meta["schema_version"] == 1 and meta["window"] == 5


def test_ingest_preset(tmp_path):
    (tmp_path / "e.txt").write_text("1 2 0\n2 3 1999\n3 4 2000\n")
    assert run("ingest", "--edges", tmp_path / "e.txt", "--preset", "uci", "--out", tmp_path / "o") == 0
    assert io.load_graph_dir(tmp_path / "o").horizon == 2


def test_ingest_errors(tmp_path, capsys):
    (tmp_path / "e.txt").write_text("u v 0\nu v\n")
    assert run("ingest", "--edges", tmp_path / "e.txt", "--window", 1, "--out", tmp_path / "o") == 1
    assert "e.txt:2:" in capsys.readouterr().err
    assert run("ingest", "--edges", tmp_path / "missing.txt", "--window", 1, "--out", tmp_path / "o") == 1
    assert run("ingest", "--out", tmp_path / "o") == 1


def test_simulate_deterministic(tmp_path):
    args = ["simulate", "--n", 60, "--timesteps", 5, "--replicates", 2, "--seed", 11]
    assert run(*args, "--out", tmp_path / "a", "--threads", 2) == 0
    assert run(*args, "--out", tmp_path / "b") == 0
    for name in ("edges.txt", "labels.txt", "features.csv", "nodes.csv"):
        for r in ("replicate_000", "replicate_001"):
            assert (tmp_path / "a" / r / name).read_bytes() == (tmp_path / "b" / r / name).read_bytes()
    assert (tmp_path / "a" / "replicate_000" / "edges.txt").read_bytes() != (
        tmp_path / "a" / "replicate_001" / "edges.txt"
    ).read_bytes()
    assert run(*args, "--out", tmp_path / "a") == 0
    meta = json.loads((tmp_path / "a" / "meta.json").read_text())
    assert meta["seed"] == 11 and meta["si"]["theta_inf"] == [3.4, 0.6]
    assert len(meta["replicates"]) == 2
    g = io.load_graph_dir(tmp_path / "a" / "replicate_000")
    assert g.horizon == 6 and g[0].num_nodes == 60


def test_simulate_all_infected(tmp_path):
    assert run("simulate", "--n", 20, "--timesteps", 2, "--p-init", 1, "--out", tmp_path) == 0
    assert json.loads((tmp_path / "meta.json").read_text())["replicates"][0]["fully_infected"]


def test_simulate_calibrate(tmp_path):
    assert run("simulate", "--n", 30, "--timesteps", 15, "--p-init", 0.1, "--calibrate",
               "--calibration-runs", 5, "--out", tmp_path) == 0
    meta = json.loads((tmp_path / "meta.json").read_text())
    assert meta["calibration_rate"] >= 0.99


def test_measure_and_propagate(tmp_path):
    run("simulate", "--n", 100, "--timesteps", 6, "--seed", 3, "--p-init", 0.05, "--out", tmp_path / "s")
    graph = tmp_path / "s" / "replicate_000"
    assert run("measure", "--graph", graph, "--out", tmp_path / "m") == 0
    h = rows(tmp_path / "m" / "homophily.csv")
    assert [r["t"] for r in h] == [str(t) for t in range(6)]
    comp = json.loads((tmp_path / "m" / "compatibility.json").read_text())
    assert comp["schema_version"] == 1 and len(comp["data"]) == 6
    assert run("propagate", "--graph", graph, "--layers", 1, 2, "--mask", "unreached", "--representations", 0,
               "--out", tmp_path / "p") == 0
    rec = rows(tmp_path / "p" / "records.csv")
    assert len(rec) == 12 and {r["layer"] for r in rec} == {"1", "2"}
    reps = rows(tmp_path / "p" / "representations.csv")
    assert len(reps) == 100 * 3 * 3
    assert run("correlate", "--records", tmp_path / "p" / "records.csv", "--out", tmp_path / "c") == 0
    assert len(rows(tmp_path / "c" / "correlations.csv")) == 2


def test_measure_single_snapshot(tmp_path, capsys):
    (tmp_path / "edges.txt").write_text("a b 0\n")
    (tmp_path / "labels.txt").write_text("a 0 1\nb 0 1\n")
    assert run("measure", "--graph", tmp_path, "--out", tmp_path / "m") == 0
    assert (tmp_path / "m" / "homophily.csv").read_text() == "t,h_static,h_dynamic,h_plus,h_minus\n"
    assert "undefined" in capsys.readouterr().err


def test_correlate_identity(tmp_path):
    header = "t,layer,h_static,h_dynamic,h_plus,h_minus,auroc,bound,n_plus,n_minus,mu,sigma2\n"
    body = "".join(f"{t},1,0.5,{h},,,{h},,1,1,,\n" for t, h in enumerate([0.2, 0.9, 0.4, 0.6]))
    (tmp_path / "r.csv").write_text(header + body)
    assert run("correlate", "--records", tmp_path / "r.csv", "--measure", "h_dynamic", "--out", tmp_path) == 0
    (row,) = rows(tmp_path / "correlations.csv")
    assert float(row["spearman"]) == 1.0
    (tmp_path / "bad.csv").write_text("a,b\n1,2\n")
    assert run("correlate", "--records", tmp_path / "bad.csv", "--out", tmp_path) == 1


def test_bound_grid(tmp_path):
    assert run("bound-grid", "--resolution", 101, "--out", tmp_path) == 0
    data = rows(tmp_path / "bound_grid.csv")
    assert len(data) == 4 * 101 * 101
    cell = {(r["h_plus"], r["h_minus"], r["layers"]): float(r["bound"]) for r in data}
    assert cell[("0.5", "0.5", "1")] == 0.5
    assert cell[("0.05", "0.05", "2")] > cell[("0.5", "0.5", "2")]


def test_validate(tmp_path):
    assert run("validate", "--n-per-class", 200, "--h-plus", 0.2, 0.8, "--h-minus", 0.6,
               "--layers", 1, 2, "--out", tmp_path) == 0
    assert len(rows(tmp_path / "validation.csv")) == 4
    doc = json.loads((tmp_path / "validation.json").read_text())
    assert doc["schema_version"] == 1 and len(doc["data"]) == 2


def test_config_defaults(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"resolution": 3, "layers": [2]}))
    assert run("bound-grid", "--config", cfg, "--out", tmp_path) == 0
    assert len(rows(tmp_path / "bound_grid.csv")) == 9
    assert run("bound-grid", "--config", cfg, "--resolution", 4, "--out", tmp_path) == 0
    assert len(rows(tmp_path / "bound_grid.csv")) == 16
    cfg.write_text(json.dumps({"bogus": 1}))
    assert run("bound-grid", "--config", cfg, "--out", tmp_path) == 1


def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "dynhomophily", "bound-grid", "--resolution", "2", "--layers", "1", "--out", str(tmp_path)],
        capture_output=True,
    )
    assert proc.returncode == 0
    bad = subprocess.run([sys.executable, "-m", "dynhomophily", "measure", "--graph", str(tmp_path / "nope")],
                         capture_output=True)
    assert bad.returncode != 0
