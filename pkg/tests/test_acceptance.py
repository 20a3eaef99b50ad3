"""Acceptance criteria, one test each, at the stated tolerances and time limits.

Each test prints (and records for the terminal summary) one line::

    [PASS] 1 disintegration identity: ...

Run alone with ``pytest tests/test_acceptance.py -v`` or as a script.
"""
import os
import subprocess
import sys
import time
from pathlib import Path

import pytest

from ssg import lab

RESULTS = []
CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def record(num, title, passed, detail, elapsed, limit=None):
    timing = f"{elapsed:.1f}s" + (f" (limit {limit:g}s)" if limit else "")
    line = f"[{'PASS' if passed else 'FAIL'}] {num} {title}: {detail}; {timing}"
    RESULTS.append(line)
    print(line)
    return line


def timed(fn):
    t0 = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t0


def test_criterion_1_disintegration_identity():
    res, dt = timed(lambda: lab.check_disintegration(n_mc=1_000_000, abs_tol=1e-6))
    ok = res.passed and dt <= 60
    record(1, "disintegration identity (N in {10, 41, 100}; cos, box[2,4], bump)", ok, res.detail, dt, 60)
    assert res.passed, res.table
    assert dt <= 60


def test_criterion_2_main_limit():
    res, dt = timed(lambda: lab.check_main_limit(n_mc=1_000_000))
    ok = res.passed and dt <= 120
    detail = "; ".join(c.detail.split(";")[0] for c in res.children)
    record(2, "main limit, E1 and hyperplane", ok, detail, dt, 120)
    assert res.passed, [c.table for c in res.children]
    assert dt <= 120


def test_criterion_3_normalization():
    res, dt = timed(lambda: lab.check_normalization(tol=1e-8))
    ok = res.passed and len(res.table) == 10
    record(3, "muN normalization", ok, res.detail, dt)
    assert ok, res.table


def test_criterion_4_constant_asymptotics():
    pairs = [(k, m) for k in range(1, 4) for m in range(1, 4)]
    res, dt = timed(lambda: lab.check_constant_limit(pairs, N=100_000, tol=1e-3))
    ok = res.passed and dt < 1
    record(4, "constant asymptotics, k,m <= 3", ok, res.detail, dt, 1)
    assert res.passed and dt < 1


def test_criterion_5_pushforward():
    res, dt = timed(lambda: lab.check_pushforward(n_t=20, tol=1e-12))
    ok = res.passed and len(res.table) == 5
    record(5, "pushforward characteristic identity", ok, res.detail, dt)
    assert ok, res.table


def test_criterion_6_lemma_suite():
    def run():
        return lab.group("lemmas", lab.onset_checks() + lab.lemma_checks())
    res, dt = timed(run)
    guards = [g for c in res.children for g in c.children if g.expected_fail]
    ok = res.passed and dt <= 30 and guards and all(g.passed for g in guards)
    record(6, "limit-lemma suite (onsets, projections + guard, z0, covariance; r = 0.9)", ok,
           f"{res.detail}, {len(guards)} expected-fail guards held", dt, 30)
    assert res.passed, "\n".join(res.lines())
    assert guards and dt <= 30


def test_criterion_7_two_routes():
    res, dt = timed(lambda: lab.check_two_routes(tol=1e-10))
    ok = res.passed and len(res.table) == 50
    record(7, "two-route covariance equality", ok, res.detail, dt)
    assert ok


def test_criterion_8_sampler_validity(tmp_path):
    def run():
        res = lab.check_sampler(n_member=100_000)
        outs = []
        for threads in ("1", "8"):
            out = tmp_path / f"slice_{threads}.json"
            env = dict(os.environ, SSG_THREADS=threads)
            subprocess.run([sys.executable, "-m", "ssg.cli", "slice", str(CONFIGS / "e1.json"),
                            "--n-mc", "400000", "--seed", "8", "--out", str(out)], env=env, check=True)
            outs.append(out.read_bytes())
        return res, outs[0] == outs[1]
    (res, same), dt = timed(run)
    ok = res.passed and same
    record(8, "sampler validity", ok, f"{res.detail}; CLI output byte-identical for SSG_THREADS 1 vs 8: {same}", dt)
    assert res.passed, "\n".join(res.lines())
    assert same


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
