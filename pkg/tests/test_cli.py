import json
import subprocess
import sys
from pathlib import Path

import pytest

from oscfluct.cli import main


def run_cli(args):
    return main(args)


def test_malformed_config_exits_2_no_partial_files(tmp_path):
    cfgf = tmp_path / "bad.cfg"
    cfgf.write_text("chain.n 512\n")  # missing '='
    out = tmp_path / "out"
    rc = run_cli(["sample", "--config", str(cfgf), "--out", str(out)])
    assert rc == 2
    assert not out.exists() or not list(out.iterdir())


def test_unknown_key_rejected(tmp_path):
    cfgf = tmp_path / "bad.cfg"
    cfgf.write_text("chain.n = 64\nmystery.key = 3\n")
    rc = run_cli(["sample", "--config", str(cfgf), "--out", str(tmp_path / "o")])
    assert rc == 2


def test_numeric_error_exit_3(tmp_path):
    cfgf = tmp_path / "c.cfg"
    # Toda with beta far outside the validity region: divergent measure
    cfgf.write_text(
        "potential.family = toda\ngibbs.beta_exponent = -0.4\n"
        "gibbs.lambda = 1.0\nchain.n = 64\nrun.samples = 10\n"
    )
    rc = run_cli(["sample", "--config", str(cfgf), "--out", str(tmp_path / "o")])
    assert rc == 3


def test_sample_and_manifest_roundtrip(tmp_path):
    cfgf = tmp_path / "c.cfg"
    cfgf.write_text("chain.n = 64\nrun.samples = 500\n")
    out = tmp_path / "out"
    rc = run_cli(["sample", "--config", str(cfgf), "--seed", "7", "--out", str(out)])
    assert rc == 0
    man = json.loads((out / "manifest.json").read_text())
    assert man["experiment"] == "sample"
    assert man["seed"] == 7
    assert man["config"]["run.samples"] == 500
    lines = (out / "samples.csv").read_text().splitlines()
    assert lines[0] == "index,eta"
    assert len(lines) == 501


def test_determinism_same_seed_byte_identical(tmp_path):
    cfgf = tmp_path / "c.cfg"
    cfgf.write_text(
        "chain.n = 32\nchain.a = 1.5\nchain.kappa = 0.5\nrun.T = 0.05\n"
        "run.ensemble = 5\nrun.snapshots = 3\n"
    )
    outs = []
    for name in ("o1", "o2"):
        out = tmp_path / name
        rc = run_cli(["simulate", "--config", str(cfgf), "--seed", "3",
                      "--out", str(out)])
        assert rc == 0
        outs.append((out / "snapshots.csv").read_bytes())
    assert outs[0] == outs[1]


def test_nlfh_json_report(tmp_path):
    cfgf = tmp_path / "c.cfg"
    cfgf.write_text("nlfh.v = 0.0\nnlfh.e = 0.5\nnlfh.beta = 0.0\n")
    out = tmp_path / "out"
    rc = run_cli(["nlfh", "--config", str(cfgf), "--out", str(out)])
    assert rc == 0
    doc = json.loads((out / "nlfh.json").read_text())
    assert doc["class_pair"] == ["diffusive", "3/2-Levy"]
    assert doc["v_plus"] == pytest.approx(2.0)


def test_kernel_csv(tmp_path):
    cfgf = tmp_path / "c.cfg"
    cfgf.write_text("kernel.kappa = 1.0\nkernel.times = 0.3\n")
    out = tmp_path / "out"
    rc = run_cli(["kernel", "--config", str(cfgf), "--out", str(out)])
    assert rc == 0
    lines = (out / "kernel_t0.3.csv").read_text().splitlines()
    assert lines[0] == "x,P"


def test_spde_spectrum_csv(tmp_path):
    cfgf = tmp_path / "c.cfg"
    cfgf.write_text("spde.m = 32\nspde.dt = 0.0001\nrun.T = 0.1\nrun.ensemble = 20\n")
    out = tmp_path / "out"
    rc = run_cli(["spde", "--config", str(cfgf), "--out", str(out)])
    assert rc == 0
    lines = (out / "spectrum.csv").read_text().splitlines()
    assert lines[0] == "k,variance,stderr"
    assert len(lines) == 16  # modes 1..15


def test_validate_potential_csv(tmp_path):
    out = tmp_path / "out"
    cfgf = tmp_path / "c.cfg"
    cfgf.write_text("potential.family = fpu\npotential.alpha = 0.7\n")
    rc = run_cli(["validate-potential", "--config", str(cfgf), "--out", str(out)])
    assert rc == 0
    man = json.loads((out / "manifest.json").read_text())
    assert man["all_pass"] is False  # 3 alpha^2 > 1 breaks convexity


def test_console_entry_point(tmp_path):
    res = subprocess.run(
        [sys.executable, "-m", "oscfluct.cli", "kernel", "--out", str(tmp_path)],
        capture_output=True, text=True,
    )
    assert res.returncode == 0, res.stderr
