import csv
import io
import json
import math

import numpy as np
import pytest

from ssg import fixtures, lab
from ssg.errors import NotTransversal
from ssg.geometry import AffineConstraintSet, DirectionVector
from ssg.measures import TestFunction


def test_monotone_tail():
    assert lab.monotone_tail([5, 3, 2, 1])
    assert not lab.monotone_tail([5, 1, 2, 1.5])
    assert lab.monotone_tail([1, 3e-15, 5e-14, 1e-16])  # below the floor everything is zero
    assert not lab.monotone_tail([1, 1e-3, 2e-3])


def test_run_convergence_constant_has_zero_gaps(e1):
    rep = lab.run_convergence(e1, TestFunction.constant(), [30, 60, 120], 1000, 1)
    assert rep.verdict
    for r in rep.rows:
        assert r.gap_quad < 1e-12 and r.gap_mc_z == 0.0 and r.mc.stderr == 0.0


def test_run_convergence_cosine(e1):
    rep = lab.run_convergence(e1, fixtures.cos_x1(), [50, 100, 200, 400, 800, 1600, 3200], 100_000, 2)
    assert rep.verdict
    assert [r.N for r in rep.rows] == sorted(r.N for r in rep.rows)
    assert rep.rows[-1].gap_quad <= 5e-3
    assert rep.rows[-1].gauss == pytest.approx(-0.718882, abs=5e-7)


def test_run_convergence_hyperplane():
    rep = lab.run_convergence(fixtures.hyperplane(), fixtures.cos_x1(), [100, 400, 1600, 3200], 100_000, 3)
    assert rep.verdict
    assert rep.rows[-1].gauss == pytest.approx(0.606531, abs=5e-7)


def test_run_convergence_bad_row_fails_report(e1):
    rep = lab.run_convergence(e1, fixtures.cos_x1(), [20, 400, 800, 1600], 1000, 4)
    assert not rep.verdict
    assert rep.rows[0].error == "EmptySlice" and math.isnan(rep.rows[0].quad)


def test_run_convergence_rejects_unsorted(e1):
    with pytest.raises(ValueError):
        lab.run_convergence(e1, fixtures.cos_x1(), [100, 50], 1000, 1)


def test_run_convergence_nontransversal():
    with pytest.raises(NotTransversal):
        lab.run_convergence(fixtures.axis(), fixtures.cos_x1(), [50, 100], 1000, 1)


def test_report_serialization(e1):
    rep = lab.run_convergence(e1, fixtures.cos_x1(), [50, 100, 200], 1000, 5, tol=0.1)
    rows = list(csv.reader(io.StringIO(rep.to_csv())))
    assert rows[0] == ["N", "quad", "mc", "mc_stderr", "gauss", "gap_quad", "gap_mc_z"]
    assert [int(r[0]) for r in rows[1:]] == [50, 100, 200]
    doc = json.loads(rep.to_json())
    assert doc["verdict"] == "pass" and len(doc["rows"]) == 3
    assert rep.to_csv() == lab.run_convergence(e1, fixtures.cos_x1(), [50, 100, 200], 1000, 5, tol=0.1).to_csv()


def test_z0_limit_geometric_and_finite():
    r = lab.check_z0_limit(fixtures.geometric_single(), (20, 40, 80, 160, 320))
    assert r.passed
    gaps = [row["gap"] for row in r.table if row["probe"] == 0]
    assert gaps[0] > 1e-4 and gaps[-1] < 1e-8
    # r = 0.9: the gap decays like r^N, so by the N where r^{2N} < 1e-9 it is tiny
    n_star = math.ceil(math.log(1e-9) / (2 * math.log(0.9)))
    assert lab.check_z0_limit(fixtures.geometric_single(), (10, 50, n_star), [[1.0]]).table[-1]["gap"] < 1e-8
    fin = lab.check_z0_limit(fixtures.e1(), (2, 5, 10), tol=1e-14)
    assert fin.passed and max(row["gap"] for row in fin.table) < 1e-14
    # probes beyond the support of everything see nothing
    far = lab.check_z0_limit(fixtures.e1(), (10, 20), [np.eye(9)[8]], tol=0.0)
    assert far.passed


def test_z0_limit_fails_when_not_converged():
    assert not lab.check_z0_limit(fixtures.geometric_single(), (5, 10, 20)).passed


def test_covariance_limit():
    r = lab.check_covariance_limit(fixtures.geometric_pair(), (10, 20, 40, 80, 160))
    assert r.passed and r.table[0]["cov_gap"] > 1e-6
    assert lab.check_covariance_limit(fixtures.e1(), (2, 3, 10)).table[-1]["cov_gap"] < 1e-15
    # 1x1 determinant by hand: det = cov
    r = lab.check_covariance_limit(fixtures.geometric_single(), (5, 10, 20))
    assert all(abs(row["cov_gap"] - row["det_gap"]) < 1e-15 for row in r.table)


def test_projection_limits_and_guard():
    r = lab.check_projection_limits(fixtures.geometric_pair())
    assert r.passed
    names = {c.name: c for c in r.children}
    guard = names["limproj_infinite_dim_counterexample"]
    assert guard.expected_fail and guard.passed
    assert guard.table[-1]["gap"] == pytest.approx(math.sqrt(6) / math.pi, rel=1e-12)
    assert names["limproj_finite_dim_contrast"].passed


def test_projection_of_kernel_vector_is_itself():
    # z in ker Q already (z = e_3 for E1): both projections return z
    r = lab.check_projection_limits(fixtures.e1(), [np.array([0.0, 0.0, 1.0])], N_list=(5, 10, 20))
    assert r.passed
    assert max(row["gap"] for row in r.children[0].table) < 1e-15


def test_onsets_examples():
    r = lab.check_onsets(fixtures.hyperplane())
    assert r.passed and r.data == {"independent": 2, "onto": 2, "transversal": 2, "status": "ok"}
    r = lab.check_onsets(fixtures.axis(), expect_transversal=False)
    assert r.passed and r.data["status"] == "NotTransversal" and r.data["transversal"] is None
    r = lab.check_onsets(fixtures.geometric_pair(), expect_transversal=True)
    assert r.passed and r.data["transversal"] >= r.data["independent"]
    late = AffineConstraintSet([DirectionVector.basis(7)], [0.0], 1)
    assert lab.check_onsets(late).data["independent"] == 7


def test_constant_limit():
    assert lab.check_constant_limit().passed
    r = lab.check_constant_limit([(0, 2)], N=1000, tol=1e-14)
    assert r.passed


def test_suite_names():
    with pytest.raises(ValueError):
        lab.run_suite("nope")


def test_onsets_suite_passes_and_is_deterministic():
    a = lab.run_suite("onsets", 7)
    b = lab.run_suite("onsets", 7)
    assert a.passed
    assert a.lines() == b.lines()
    assert json.dumps(a.to_dict(), sort_keys=True) == json.dumps(b.to_dict(), sort_keys=True)
