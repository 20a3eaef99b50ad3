import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ssg import kernels
from ssg.measures import KIND_CODES, TestFunction

needs_ext = pytest.mark.skipif("cython" not in kernels.BACKENDS, reason="compiled extension not built")


def make_phi(kind, k, rng):
    if kind == "constant":
        return TestFunction.constant(rng.normal())
    if kind in ("cosine_character", "sine_character"):
        return TestFunction(kind, a=rng.normal(size=k))
    if kind == "box_indicator":
        lo = rng.normal(size=k) - 0.5
        return TestFunction.box(lo, lo + rng.uniform(0.2, 2.0, size=k))
    if kind == "gaussian_bump":
        return TestFunction.bump(rng.normal(size=k), rng.uniform(0.2, 2.0))
    return TestFunction.clamped_monomial(rng.integers(0, 4, size=k), rng.uniform(0.5, 5.0))


def spd(k, rng):
    a = rng.normal(size=(k, k))
    return a @ a.T / k + 0.3 * np.eye(k)


@needs_ext
@given(st.sampled_from(sorted(KIND_CODES)), st.integers(1, 4), st.integers(0, 2**31), st.booleans())
def test_mc_block_backends_agree(kind, k, seed, slice_mode):
    rng = np.random.default_rng(seed)
    phi = make_phi(kind, k, rng)
    h = rng.normal(size=(300, k))
    s = rng.chisquare(7.0, 300) if slice_mode else np.zeros(0)
    mean = rng.normal(size=k)
    chol = np.linalg.cholesky(spd(k, rng))
    args = (h, s, mean, chol, 2.5, phi.code, phi.a, phi.b, phi.s)
    py = kernels.get_backend("python").mc_block(*args)
    cy = kernels.get_backend("cython").mc_block(*args)
    assert np.allclose(py, cy, rtol=1e-11, atol=1e-12)


@needs_ext
@given(st.sampled_from(sorted(KIND_CODES)), st.integers(1, 3), st.integers(0, 2**31), st.booleans())
def test_density_grid_backends_agree(kind, k, seed, gaussian):
    rng = np.random.default_rng(seed)
    phi = make_phi(kind, k, rng)
    x = rng.normal(size=(500, k)) * 2
    mean = rng.normal(size=k)
    linv = np.ascontiguousarray(np.linalg.inv(np.linalg.cholesky(spd(k, rng))))
    a2 = 0.0 if gaussian else 6.0
    args = (x, mean, linv, a2, -1.3, 2.5, phi.code, phi.a, phi.b, phi.s)
    py = kernels.get_backend("python").density_grid(*args)
    cy = np.asarray(kernels.get_backend("cython").density_grid(*args))
    assert np.allclose(py, cy, rtol=1e-12, atol=1e-13 * max(np.abs(py).max(), 1e-300))


def test_default_backend_is_compiled_when_available():
    assert kernels.BACKEND == ("cython" if "cython" in kernels.BACKENDS else "python")
    assert kernels.get_backend() is kernels.BACKENDS[kernels.BACKEND]


def test_pure_python_switch():
    env = dict(os.environ, SSG_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "from ssg import kernels; print(kernels.BACKEND)"],
                         capture_output=True, text=True, env=env, check=True)
    assert out.stdout.strip() == "python"


def test_results_do_not_depend_on_backend():
    code = ("from ssg import fixtures; from ssg.montecarlo import estimate_slice_mean;"
            "print(repr(estimate_slice_mean(fixtures.e1(), 41, fixtures.cos_x1(), 100000, 3).value))")
    vals = set()
    for flag in ("0", "1"):
        env = dict(os.environ, SSG_PURE_PYTHON=flag)
        vals.add(float(subprocess.run([sys.executable, "-c", code], capture_output=True, text=True,
                                      env=env, check=True).stdout))
    a, b = sorted(vals) if len(vals) == 2 else (vals.pop(),) * 2
    assert abs(a - b) < 1e-12
