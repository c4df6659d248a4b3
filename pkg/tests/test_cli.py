import csv
import json
import subprocess
import sys

import pytest

from perspective_rsa.cli import EXIT_CONFIG, EXIT_OK, EXIT_RUNTIME, main


def files(d):
    return {p.name: p.read_bytes() for p in sorted(d.iterdir()) if not p.name.endswith(".manifest.json")}


def rows(path):
    with open(path) as fh:
        return list(csv.DictReader(line for line in fh if not line.startswith("#")))


def run(tmp_path, name, *argv):
    out = tmp_path / name
    code = main([*argv, "--out", str(out), "--quiet"])
    return code, out


def test_sweep_outputs_and_manifest(tmp_path):
    code, out = run(tmp_path, "a", "sweep", "--beta", "0,0.1", "--grid-step", "0.05")
    assert code == EXIT_OK
    opt = rows(out / "optima.csv")
    assert [r["beta"] for r in opt] == ["0", "0.1"]
    assert float(opt[0]["ws_star"]) == 1.0 and float(opt[0]["wl_star"]) == 1.0
    man = json.loads((out / "sweep.manifest.json").read_text())
    assert man["command"] == "sweep" and man["seed"] == 0
    assert {"sweep.csv", "optima.csv"} <= {p.rsplit("/", 1)[-1] for p in man["outputs"]}
    for name in ("sweep.csv", "optima.csv"):
        assert (out / name).read_text().startswith("# manifest=sweep.manifest.json")


def test_sweep_is_byte_identical_on_rerun(tmp_path):
    argv = ("sweep", "--beta", "0.1,1", "--grid-step", "0.005", "--side", "speaker")
    _, a = run(tmp_path, "a", *argv)
    _, b = run(tmp_path, "b", *argv)
    assert files(a) == files(b)
    assert "breakpoints.csv" in files(a)


def test_adapt_zero_rounds_and_seeds(tmp_path):
    code, out = run(tmp_path, "z", "adapt", "--rounds", "0")
    assert code == EXIT_OK
    prior_only = rows(out / "adapt.csv")
    assert len(prior_only) == 1 and prior_only[0]["round"] == "0"
    assert float(prior_only[0]["posterior_mean_ws"]) == 0.5
    argv = ("adapt", "--rounds", "4", "--policy", "model:0.2", "--beta", "0.5")
    _, a = run(tmp_path, "a", "--seed", "1", *argv)
    _, b = run(tmp_path, "b", "--seed", "2", *argv)
    ra, rb = rows(a / "adapt.csv"), rows(b / "adapt.csv")
    assert len(ra) == 5
    strip = lambda rs: [{k: v for k, v in r.items() if k not in ("error", "seed")} for r in rs]
    assert strip(ra) == strip(rb)


def test_synthetic_fit_evidence_pipeline(tmp_path):
    code, g = run(tmp_path, "g", "gen-synthetic", "--speakers", "4")
    assert code == EXIT_OK
    truth = json.loads((g / "truth.json").read_text())
    assert truth["theta"]["alpha"] == 5.0
    data = str(g / "trials.csv")
    code, f = run(tmp_path, "f", "fit", "--data", data, "--samples", "50", "--burn-in", "50", "--predictive")
    assert code == EXIT_OK
    fit = json.loads((f / "fit.json").read_text())
    assert set(fit) >= {"model", "map", "hdi95", "samples_path", "seed", "acceptance_rate"}
    assert len(rows(f / "samples.csv")) == 50
    assert len(rows(f / "predictive.csv")) == 4
    _, f2 = run(tmp_path, "f2", "fit", "--data", data, "--samples", "50", "--burn-in", "50", "--predictive")
    assert files(f)["samples.csv"] == files(f2)["samples.csv"]
    code, e = run(tmp_path, "e", "evidence", "--data", data, "--runs", "2", "--steps", "20")
    assert code == EXIT_OK
    assert len(json.loads((e / "evidence.json").read_text())["per_run"]) == 2


def test_evidence_on_empty_data_is_zero(tmp_path):
    empty = tmp_path / "empty.csv"
    empty.write_text("speaker_id,condition,occluded,mention_shape,mention_color,mention_texture\n")
    code, e = run(tmp_path, "e", "evidence", "--data", str(empty), "--runs", "1", "--steps", "2")
    assert code == EXIT_OK
    assert json.loads((e / "evidence.json").read_text())["log_z"] == 0.0


def test_bootstrap_and_theorem(tmp_path):
    _, g = run(tmp_path, "g", "gen-synthetic", "--kind", "ratings")
    code, b = run(tmp_path, "b", "bootstrap", "--data", str(g / "ratings.csv"), "--replicates", "100")
    assert code == EXIT_OK
    res = json.loads((b / "bootstrap.json").read_text())
    assert res["ci"][0] <= res["difference"] <= res["ci"][1]
    code, t = run(tmp_path, "t", "check-theorem", "--n", "300", "--hypothesis", "corrected")
    assert code == EXIT_OK
    assert json.loads((t / "theorem.json").read_text())["violations"] == 0


@pytest.mark.parametrize("argv", [
    ("sweep", "--beta", "-1"),
    ("sweep", "--cost", "cheap"),
    ("sweep", "--grid-step", "0.3"),
    ("adapt", "--policy", "chatty"),
    ("gen-synthetic", "--alpha", "5000"),
    ("fit", "--data", "missing.csv"),
    ("fit", "--data", "x.csv", "--model", "bogus"),
    ("nosuchcommand",),
])
def test_config_errors_exit_2(tmp_path, argv):
    code, _ = run(tmp_path, "x", *argv)
    assert code == EXIT_CONFIG


def test_malformed_csv_exits_2(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("speaker_id,condition,occluded,mention_shape,mention_color,mention_texture\n"
                   "s1,weird,1,1,0,0\n")
    code, _ = run(tmp_path, "x", "fit", "--data", str(bad))
    assert code == EXIT_CONFIG
    assert "bad.csv" in capsys.readouterr().err


def test_runtime_failure_exits_1(tmp_path):
    # near-deterministic speakers never produce the full description, so observing it is impossible
    code, _ = run(tmp_path, "x", "adapt", "--rounds", "2", "--alpha", "100000", "--cost", "0.01,0.01,0.01",
                  "--policy", "exhaustive")
    assert code == EXIT_RUNTIME


def test_console_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "perspective_rsa.cli", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and "perspective-rsa" in res.stdout
