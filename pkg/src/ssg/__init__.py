"""Means over sphere slices cut by finite-codimension affine subspaces.

The k-coordinate marginal of the uniform measure on a slice of the sphere
of radius sqrt(N) in R^N has a closed-form density; as N grows it tends to
a Gaussian whose mean and covariance come from the limiting subspace in
sequence space. This package evaluates both sides, samples the slices,
integrates deterministically and checks the supporting limit lemmas.
"""
from .errors import (
    ConfigError,
    EmptySlice,
    FormulaMismatch,
    MembershipError,
    NotTransversal,
    NumericalError,
    SingularGram,
    SSGError,
    ToleranceNotReached,
)
from .geometry import (
    INF,
    AffineConstraintSet,
    DirectionVector,
    GaussianLimit,
    GeometricTail,
    TruncatedSlice,
    closest_point,
    gaussian_limit,
    kernel_basis,
    l0_inverse_point,
    l0_inverse_sq_norm,
    marginal_covariance,
    truncated_slice,
)
from .measures import (
    SliceDensity,
    TestFunction,
    charfn_muInf,
    charfn_muL,
    constant_ratio,
    density_muInf,
    density_muN,
    gaussian_expectation,
    slice_density,
    surface_constant,
)
from .montecarlo import MCEstimate, estimate_gaussian_mean, estimate_slice_mean, sample_slice, sample_sphere
from .quadrature import QuadResult, integrate_muInf, integrate_muN

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "EmptySlice",
    "FormulaMismatch",
    "MembershipError",
    "NotTransversal",
    "NumericalError",
    "SingularGram",
    "SSGError",
    "ToleranceNotReached",
    "INF",
    "AffineConstraintSet",
    "DirectionVector",
    "GaussianLimit",
    "GeometricTail",
    "TruncatedSlice",
    "closest_point",
    "gaussian_limit",
    "kernel_basis",
    "l0_inverse_point",
    "l0_inverse_sq_norm",
    "marginal_covariance",
    "truncated_slice",
    "SliceDensity",
    "TestFunction",
    "charfn_muInf",
    "charfn_muL",
    "constant_ratio",
    "density_muInf",
    "density_muN",
    "gaussian_expectation",
    "slice_density",
    "surface_constant",
    "MCEstimate",
    "estimate_gaussian_mean",
    "estimate_slice_mean",
    "sample_slice",
    "sample_sphere",
    "QuadResult",
    "integrate_muInf",
    "integrate_muN",
]
