import json
import subprocess
import sys

import pytest

from tradenet import __version__
from tradenet.analysis import csv_to_table, histogram_from_csv
from tradenet.cli import main

TINY = """\
n_traders = 64
alpha = 1
beta = 1
n_lambda_sets = 2
networks_per_set = 2
target_degree = 1
checkpoints = 0.25, 0.5, 1
checkpoint_unit = mean_degree
master_seed = 5
"""


@pytest.fixture
def cfg_file(tmp_path):
    p = tmp_path / "tiny.cfg"
    p.write_text(TINY)
    return p


def run(cfg, out, *extra):
    return main([extra[0], "--config", str(cfg), "--out", str(out), "--threads", "1",
                 *extra[1:]])


def files(d):
    return {p.relative_to(d).as_posix(): p.read_bytes() for p in sorted(d.rglob("*")) if p.is_file()}


def test_simulate_writes_outputs(cfg_file, tmp_path):
    out = tmp_path / "sim"
    assert run(cfg_file, out, "simulate", "--edges") == 0
    d = out / "N64"
    for name in ("wealth_hist.csv", "degree_hist.csv", "weight_hist.csv", "strength_hist.csv",
                 "percolation.csv", "lambda_wealth.csv", "graph_0_0.edges"):
        assert (d / name).exists(), name
    doc = json.loads((out / "manifest.json").read_text())
    assert doc["artifact_version"] == __version__ and doc["master_seed"] == 5
    assert doc["runs"]["64"]["realizations_used"] == 4
    h = histogram_from_csv((d / "degree_hist.csv").read_text())
    assert h.counts.sum() > 0
    perc = csv_to_table((d / "percolation.csv").read_text())
    assert perc["rho"].size == 3 and perc["n_realizations"][0] == 4


def test_manifest_replay_is_bit_identical(cfg_file, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run(cfg_file, a, "simulate") == 0
    assert run(a / "manifest.json", b, "simulate") == 0
    assert files(a) == files(b)


def test_refuses_overwrite_without_force(cfg_file, tmp_path, capsys):
    out = tmp_path / "o"
    assert run(cfg_file, out, "simulate") == 0
    assert run(cfg_file, out, "simulate") == 1
    assert "--force" in capsys.readouterr().err
    assert run(cfg_file, out, "simulate", "--force") == 0


def test_seed_and_set_overrides(cfg_file, tmp_path):
    out = tmp_path / "o"
    assert run(cfg_file, out, "simulate", "--seed", "9", "--set", "n_traders=32") == 0
    doc = json.loads((out / "manifest.json").read_text())
    assert doc["master_seed"] == 9 and "32" in doc["runs"]
    assert "n_traders = 32" in doc["config"]


@pytest.mark.parametrize("text,extra", [
    (TINY + "bogus = 1\n", ()),
    (TINY.replace("n_traders = 64", "n_traders = 1"), ()),
    (TINY, ("--set", "alpha=-1")),
    (TINY, ("--threads", "0")),
])
def test_config_errors_exit_one(tmp_path, capsys, text, extra):
    p = tmp_path / "bad.cfg"
    p.write_text(text)
    assert main(["simulate", "--config", str(p), "--out", str(tmp_path / "o"), *extra]) == 1
    assert "error" in capsys.readouterr().err


def test_usage_errors_exit_one(tmp_path):
    assert main(["nonsense", "--config", "x", "--out", str(tmp_path)]) == 1
    assert main(["simulate", "--config", str(tmp_path / "missing.cfg"), "--out",
                 str(tmp_path / "o")]) == 1


def test_non_convergence_exits_three(cfg_file, tmp_path, capsys):
    assert run(cfg_file, tmp_path / "o", "simulate", "--set", "qss_max_trades=5") == 3
    assert "not converged" in capsys.readouterr().err


def test_runtime_error_exits_two(cfg_file, tmp_path, capsys):
    # a mean degree larger than N - 1 cannot be reached
    assert run(cfg_file, tmp_path / "o", "simulate", "--set", "target_degree=100") == 2


def test_percolation_subcommand(cfg_file, tmp_path):
    out = tmp_path / "p"
    assert run(cfg_file, out, "percolation", "--set", "sizes=32,64,128", "--set",
               "n_lambda_sets=3", "--set", "target_degree=4", "--set", "checkpoints=") == 0
    doc = json.loads((out / "manifest.json").read_text())
    assert set(doc["thresholds"]) == {"32", "64", "128"}
    assert doc["theta"]["theta"] > 0
    table = csv_to_table((out / "percolation.csv").read_text())
    assert set(table["n"].tolist()) == {32, 64, 128}


def test_collapse_and_sweep_subcommands(cfg_file, tmp_path):
    c = tmp_path / "c"
    assert run(cfg_file, c, "collapse", "--set", "sizes=64,128,256", "--set",
               "target_degree=3") == 0
    doc = json.loads((c / "manifest.json").read_text())
    assert doc["degree_collapse"]["eta"] > 0
    s = tmp_path / "s"
    assert run(cfg_file, s, "sweep", "--set", "alphas=0,1", "--set", "sizes=32,64") == 0
    rows = csv_to_table((s / "sweep.csv").read_text())
    assert rows["alpha"].tolist() == [0.0, 0.0, 1.0, 1.0]


def test_clique_subcommand(cfg_file, tmp_path):
    out = tmp_path / "q"
    assert run(cfg_file, out, "clique", "--set", "n_traders=12", "--set", "alphas=0,0.5") == 0
    doc = json.loads((out / "manifest.json").read_text())
    assert set(doc["runs"]) == {"alpha0", "alpha0.5"}
    assert (out / "alpha0" / "log_weight.csv").exists()
    for r in doc["runs"].values():
        assert all(t is not None for t in r["t_clique"])


def test_corners_subcommand(cfg_file, tmp_path):
    out = tmp_path / "k"
    assert run(cfg_file, out, "corners", "--set", "n_traders=32") == 0
    text = (out / "topology.txt").read_text()
    assert "alpha=inf" not in text and "dimer=True" in text
    doc = json.loads((out / "manifest.json").read_text())
    assert doc["runs"]["alphainf_betainf"]["dimer"] is True


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "tradenet", "--version"], capture_output=True,
                         text=True)
    assert res.returncode == 0 and __version__ in res.stdout
