import math

import numpy as np
import pytest
from scipy.special import erf

from ssg import fixtures
from ssg.errors import ConfigError, ToleranceNotReached
from ssg.geometry import AffineConstraintSet, DirectionVector, GaussianLimit, gaussian_limit
from ssg.measures import TestFunction, gaussian_expectation, slice_density
from ssg.quadrature import (
    GAUSS,
    KRONROD,
    NODES,
    adaptive_integrate,
    integrate_muInf,
    integrate_muN,
)

STD1 = GaussianLimit.from_moments([0.0], [[1.0]])


def test_embedded_gauss_rule_matches_legendre():
    x, w = np.polynomial.legendre.leggauss(7)
    assert np.array_equal(NODES[1::2], x) or np.allclose(NODES[1::2], x, atol=1e-15)
    assert np.allclose(GAUSS[1::2], w, atol=1e-15)
    assert np.all(GAUSS[0::2] == 0.0)


def test_kronrod_polynomial_exactness():
    # K15 is exact through degree 22, G7 through degree 13
    for deg in range(23):
        exact = (1 - (-1) ** (deg + 1)) / (deg + 1)
        assert KRONROD @ NODES**deg == pytest.approx(exact, abs=1e-14)
    for deg in range(14):
        exact = (1 - (-1) ** (deg + 1)) / (deg + 1)
        assert GAUSS @ NODES**deg == pytest.approx(exact, abs=1e-14)


def test_adaptive_integrate_smooth_and_tensor():
    r = adaptive_integrate(lambda x: np.exp(x[:, 0]), [np.array([0.0, 1.0])], 1e-12)
    assert r.value == pytest.approx(math.e - 1, abs=1e-13)
    r = adaptive_integrate(lambda x: np.cos(x[:, 0]) * x[:, 1] ** 2 * np.exp(x[:, 2]),
                           [np.array([0.0, 1.0])] * 3, 1e-10)
    assert r.value == pytest.approx(math.sin(1) * (1 / 3) * (math.e - 1), abs=1e-12)


def test_adaptive_integrate_refines_kinks():
    r = adaptive_integrate(lambda x: np.abs(x[:, 0] - 0.3) * np.abs(x[:, 1] + 0.1),
                           [np.array([-1.0, 1.0])] * 2, 1e-9)
    fx = (1.3**2 + 0.7**2) / 2
    fy = (0.9**2 + 1.1**2) / 2
    assert r.value == pytest.approx(fx * fy, abs=1e-9)
    assert r.n_boxes > 4


def test_budget_exhaustion_raises():
    with pytest.raises(ToleranceNotReached):
        adaptive_integrate(lambda x: (x[:, 0] > 0.3).astype(float), [np.array([0.0, 1.0])], 1e-14,
                           max_points=300)


def test_dimension_limit():
    with pytest.raises(ConfigError):
        adaptive_integrate(lambda x: x[:, 0], [np.array([0.0, 1.0])] * 4, 1e-6)
    L = AffineConstraintSet([DirectionVector.basis(9)], [0.0], 4)
    with pytest.raises(ConfigError):
        integrate_muN(slice_density(L, 30), TestFunction.constant())


def test_muN_normalization_e1(e1):
    for N in (10, 41, 100, 3200):
        L = fixtures.e1_small() if N == 10 else e1
        assert integrate_muN(slice_density(L, N), TestFunction.constant(), 1e-10) == pytest.approx(1.0, abs=1e-8)


def test_muN_full_mass_box(e1):
    D = slice_density(e1, 41)
    lo, hi = D.mean_k - D.bounding_halfwidths - 0.1, D.mean_k + D.bounding_halfwidths + 0.1
    assert integrate_muN(D, TestFunction.box(lo, hi)) == pytest.approx(1.0, abs=1e-8)


@pytest.mark.parametrize("k,m,N", [(1, 1, 9), (1, 3, 20), (2, 1, 9), (2, 2, 30), (2, 3, 60), (3, 1, 30)])
def test_muN_normalization_random(k, m, N):
    L = fixtures.random_constraints(np.random.default_rng(k * 10 + m), k, m, tail=True, offset_scale=0.4)
    assert integrate_muN(slice_density(L, N), TestFunction.constant(), 1e-8) == pytest.approx(1.0, abs=1e-8)


def test_muInf_examples(e1):
    G = gaussian_limit(e1)
    assert integrate_muInf(STD1, TestFunction.constant()) == pytest.approx(1.0, abs=1e-10)
    assert integrate_muInf(G, TestFunction.cosine([1.0])) == pytest.approx(math.exp(-0.32) * math.cos(3), abs=1e-8)
    assert integrate_muInf(STD1, TestFunction.box([-1.0], [1.0])) == pytest.approx(erf(2**-0.5), abs=1e-8)


@pytest.mark.parametrize("phi", [
    TestFunction.constant(0.7),
    TestFunction.cosine([1.0, -0.5]),
    TestFunction.sine([0.3, 2.0]),
    TestFunction.bump([1.0, 0.2], 0.4),
])
def test_oracle_triangle_two_dimensional(phi):
    G = gaussian_limit(fixtures.geometric_pair())
    assert integrate_muInf(G, phi, 1e-10) == pytest.approx(gaussian_expectation(G, phi), abs=1e-10)


def test_oracle_triangle_diagonal_box_three_dimensional():
    G = GaussianLimit.from_moments([0.5, -1.0, 0.0], np.diag([1.0, 0.25, 4.0]))
    phi = TestFunction.box([0.0, -1.5, -1.0], [1.0, 0.0, 3.0])
    assert integrate_muInf(G, phi, 1e-9) == pytest.approx(gaussian_expectation(G, phi), abs=1e-9)


def test_muN_density_integral_matches_marginal_moment(e1):
    # E x_1 on the slice is the center 3; the slice variance is a^2 cov / (N - m)
    D = slice_density(e1, 41)
    m1 = integrate_muN(D, TestFunction.clamped_monomial([1], 1e6))
    m2 = integrate_muN(D, TestFunction.clamped_monomial([2], 1e6))
    assert m1 == pytest.approx(3.0, abs=1e-9)
    assert m2 - m1**2 == pytest.approx(16 * 0.64 / 40, abs=1e-9)


def test_backends_give_same_integral(e1):
    D = slice_density(fixtures.geometric_pair(), 40)
    phi = TestFunction.bump([1.0, 0.0], 0.6)
    a = integrate_muN(D, phi, backend="python")
    b = integrate_muN(D, phi, backend="cython")
    assert a == pytest.approx(b, abs=1e-13)
