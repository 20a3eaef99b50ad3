import json
import os
import subprocess
import sys
from pathlib import Path

import pytest

from ssg import fixtures
from ssg.cli import main
from ssg.config import ExperimentConfig

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def run_cli(*args, env_extra=None):
    env = dict(os.environ, **(env_extra or {}))
    return subprocess.run([sys.executable, "-m", "ssg.cli", *args], capture_output=True, text=True, env=env)


def test_shipped_configs_match_fixtures():
    for name in ("e1", "e1_small", "hyperplane", "geometric_pair", "axis"):
        cfg = ExperimentConfig.load(CONFIGS / f"{name}.json")
        assert cfg.subspace.to_dict() == fixtures.FIXTURES[name]().to_dict()


def test_slice_e1(tmp_path):
    out = tmp_path / "s.json"
    assert main(["slice", str(CONFIGS / "e1.json"), "--n-mc", "200000", "--seed", "3", "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert set(doc) >= {"mc", "quadrature", "gaussian"}
    assert abs(doc["mc"]["value"] - doc["quadrature"]) <= 3 * doc["mc"]["stderr"]
    assert doc["gaussian"] == pytest.approx(fixtures.E1_COS_TARGET)
    assert doc["mc"]["seed"] == 3 and doc["mc"]["n_samples"] == 200000


def test_slice_is_byte_identical_across_threads(tmp_path):
    outs = []
    for threads in ("1", "8"):
        out = tmp_path / f"s{threads}.json"
        r = run_cli("slice", str(CONFIGS / "e1.json"), "--n-mc", "300000", "--seed", "5", "--out", str(out),
                    env_extra={"SSG_THREADS": threads})
        assert r.returncode == 0, r.stderr
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]


def test_malformed_json_exits_2(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["slice", str(bad)]) == 2
    assert "ConfigError" in capsys.readouterr().err
    assert main(["slice", str(tmp_path / "missing.json")]) == 2


def test_unknown_keys_exit_2(tmp_path):
    doc = json.loads((CONFIGS / "e1.json").read_text())
    doc["surprise"] = 1
    p = tmp_path / "c.json"
    p.write_text(json.dumps(doc))
    assert main(["slice", str(p)]) == 2


def test_empty_slice_exits_3(tmp_path, capsys):
    doc = json.loads((CONFIGS / "e1.json").read_text())
    doc["N"] = 20
    p = tmp_path / "c.json"
    p.write_text(json.dumps(doc))
    assert main(["slice", str(p)]) == 3
    assert "EmptySlice" in capsys.readouterr().err


def test_converge_pass(tmp_path):
    out = tmp_path / "c.csv"
    doc = json.loads((CONFIGS / "e1.json").read_text())
    doc["n_mc"] = 100_000
    p = tmp_path / "c.json"
    p.write_text(json.dumps(doc))
    assert main(["converge", str(p), "--n-list", "50,100,200,400,800,1600,3200", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "N,quad,mc,mc_stderr,gauss,gap_quad,gap_mc_z"
    assert len(lines) == 8


def test_converge_constant_zero_gaps(tmp_path):
    doc = json.loads((CONFIGS / "e1.json").read_text())
    doc.update(phi={"kind": "constant", "c": 1.0}, n_mc=1000)
    p = tmp_path / "c.json"
    p.write_text(json.dumps(doc))
    out = tmp_path / "c.csv"
    assert main(["converge", str(p), "--n-list", "30,60,120", "--out", str(out)]) == 0
    for line in out.read_text().splitlines()[1:]:
        assert float(line.split(",")[5]) < 1e-12 and float(line.split(",")[6]) == 0.0


def test_converge_failing_verdict_exits_1(tmp_path):
    assert main(["converge", str(CONFIGS / "e1.json"), "--n-list", "30,40", "--out", str(tmp_path / "x.csv")]) == 1


def test_converge_nontransversal_exits_3(capsys):
    assert main(["converge", str(CONFIGS / "axis.json")]) == 3
    assert "NotTransversal" in capsys.readouterr().err


def test_converge_bad_n_list_exits_2(tmp_path):
    r = run_cli("converge", str(CONFIGS / "e1.json"), "--n-list", "a,b")
    assert r.returncode == 2
    assert main(["converge", str(CONFIGS / "e1.json"), "--n-list", "100,50"]) == 2


def test_verify_unknown_suite_exits_2():
    r = run_cli("verify", "--suite", "nope")
    assert r.returncode == 2


def test_verify_onsets_byte_identical():
    a = run_cli("verify", "--suite", "onsets", "--seed", "4")
    b = run_cli("verify", "--suite", "onsets", "--seed", "4", env_extra={"SSG_THREADS": "8"})
    assert a.returncode == 0, a.stdout + a.stderr
    assert a.stdout == b.stdout
    assert "PASS onsets" in a.stdout


@pytest.mark.slow
def test_verify_all_passes():
    r = run_cli("verify", "--suite", "all")
    assert r.returncode == 0, r.stdout + r.stderr
    assert r.stdout.splitlines()[0].startswith("PASS all")
