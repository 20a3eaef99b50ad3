"""Closed-form slice-marginal density, its Gaussian limit and test functions."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import erf, gammaln

from ._fallback import eval_phi
from .errors import ConfigError, FormulaMismatch
from .geometry import (
    INF,
    AffineConstraintSet,
    GaussianLimit,
    TruncatedSlice,
    _l2_orthonormal_coefficients,
    closest_point,
    gaussian_limit,
    l0_inverse_sq_norm,
    truncated_slice,
)

LOG_2PI = math.log(2.0 * math.pi)


def log_surface_constant(j) -> float:
    """log of the area of the unit j-sphere, ``2 pi^{(j+1)/2} / Gamma((j+1)/2)``."""
    if j < 0:
        raise ValueError(f"sphere dimension must be >= 0, got {j}")
    h = 0.5 * (j + 1)
    return math.log(2.0) + h * math.log(math.pi) - float(gammaln(h))


def surface_constant(j) -> float:
    return math.exp(log_surface_constant(j))


def constant_ratio(N: int, k: int, m: int) -> float:
    """``c_{N-1-k-m} / (N^{k/2} c_{N-1-m})``; tends to ``(2 pi)^{-k/2}``."""
    if N <= k + m + 2:
        raise ValueError(f"need N > k + m + 2, got N={N}, k={k}, m={m}")
    return math.exp(
        log_surface_constant(N - 1 - k - m) - log_surface_constant(N - 1 - m) - 0.5 * k * math.log(N)
    )


# ---------------------------------------------------------------------------
# test functions

KIND_CODES = {
    "constant": 0,
    "cosine_character": 1,
    "sine_character": 2,
    "box_indicator": 3,
    "gaussian_bump": 4,
    "clamped_monomial": 5,
}


@dataclass(frozen=True)
class TestFunction:
    """A catalogued bounded function on R^k.

    ``a``, ``b`` and ``s`` hold the kind's parameters in a flat layout
    shared with the compiled kernels:

    ==================  ==========  ======  =======
    kind                a           b       s
    ==================  ==========  ======  =======
    constant            --          --      c
    cosine_character    t           --      --
    sine_character      t           --      --
    box_indicator       lo          hi      --
    gaussian_bump       center      --      width
    clamped_monomial    powers      --      clamp
    ==================  ==========  ======  =======
    """

    __test__ = False  # keep pytest from collecting this as a test class

    kind: str
    a: np.ndarray = field(default_factory=lambda: np.zeros(0))
    b: np.ndarray = field(default_factory=lambda: np.zeros(0))
    s: float = 0.0

    def __post_init__(self):
        if self.kind not in KIND_CODES:
            raise ConfigError(f"unknown test function kind {self.kind!r}")
        object.__setattr__(self, "a", np.atleast_1d(np.asarray(self.a, dtype=float)))
        object.__setattr__(self, "b", np.atleast_1d(np.asarray(self.b, dtype=float)))
        object.__setattr__(self, "s", float(self.s))
        if self.kind == "box_indicator" and (self.a.shape != self.b.shape or np.any(self.a > self.b)):
            raise ConfigError("box_indicator needs lo <= hi of equal length")
        if self.kind == "gaussian_bump" and not self.s > 0:
            raise ConfigError("gaussian_bump width must be positive")
        if self.kind == "clamped_monomial" and (not self.s > 0 or np.any(self.a < 0)
                                                or np.any(self.a != np.round(self.a))):
            raise ConfigError("clamped_monomial needs nonnegative integer powers and clamp > 0")

    @classmethod
    def constant(cls, c: float = 1.0):
        return cls("constant", s=c)

    @classmethod
    def cosine(cls, t):
        return cls("cosine_character", a=t)

    @classmethod
    def sine(cls, t):
        return cls("sine_character", a=t)

    @classmethod
    def box(cls, lo, hi):
        return cls("box_indicator", a=lo, b=hi)

    @classmethod
    def bump(cls, center, width: float):
        return cls("gaussian_bump", a=center, s=width)

    @classmethod
    def clamped_monomial(cls, powers, clamp: float):
        return cls("clamped_monomial", a=powers, s=clamp)

    @property
    def code(self) -> int:
        return KIND_CODES[self.kind]

    @property
    def dim(self) -> int | None:
        return None if self.kind == "constant" else self.a.size

    @property
    def bound(self) -> float:
        if self.kind == "constant":
            return abs(self.s)
        if self.kind == "clamped_monomial":
            return self.s
        return 1.0

    def check_dim(self, k: int) -> None:
        if self.dim is not None and self.dim != k:
            raise ConfigError(f"{self.kind} is defined on R^{self.dim}, marginal is R^{k}")

    def __call__(self, x) -> np.ndarray:
        """Evaluate at points ``x`` of shape (n, k) (or a single point)."""
        x = np.asarray(x, dtype=float)
        single = x.ndim <= 1
        k = 1 if self.dim is None else self.dim
        xs = x.reshape(-1, k) if self.dim is not None or x.ndim <= 1 else x.reshape(x.shape[0], -1)
        out = eval_phi(self.code, self.a, self.b, self.s, xs)
        return float(out[0]) if single else out

    def breakpoints(self, axis: int) -> tuple[float, ...]:
        """Coordinates along ``axis`` where the function jumps."""
        if self.kind == "box_indicator":
            return (float(self.a[axis]), float(self.b[axis]))
        return ()

    def to_dict(self) -> dict:
        if self.kind == "constant":
            return {"kind": self.kind, "c": self.s}
        if self.kind in ("cosine_character", "sine_character"):
            return {"kind": self.kind, "t": self.a.tolist()}
        if self.kind == "box_indicator":
            return {"kind": self.kind, "lo": self.a.tolist(), "hi": self.b.tolist()}
        if self.kind == "gaussian_bump":
            return {"kind": self.kind, "center": self.a.tolist(), "width": self.s}
        return {"kind": self.kind, "powers": [int(p) for p in self.a], "clamp": self.s}

    @classmethod
    def from_dict(cls, doc: dict) -> "TestFunction":
        try:
            kind = doc["kind"]
            if kind == "constant":
                return cls.constant(doc.get("c", 1.0))
            if kind in ("cosine_character", "sine_character"):
                return cls(kind, a=doc["t"])
            if kind == "box_indicator":
                return cls.box(doc["lo"], doc["hi"])
            if kind == "gaussian_bump":
                return cls.bump(doc["center"], doc["width"])
            if kind == "clamped_monomial":
                return cls.clamped_monomial(doc["powers"], doc["clamp"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"malformed test function: {exc!r}") from exc
        raise ConfigError(f"unknown test function kind {doc.get('kind')!r}")


# ---------------------------------------------------------------------------
# finite-N density


@dataclass(frozen=True)
class SliceDensity:
    """Density of the first-k-coordinate marginal of the normalized slice measure."""

    N: int
    k: int
    m: int
    radius: float
    mean_k: np.ndarray
    cov_k: np.ndarray
    det_factor: float
    log_norm_const: float

    @property
    def d(self) -> int:
        return self.N - 1

    @property
    def exponent(self) -> float:
        return 0.5 * (self.d - self.k - self.m - 1)

    @classmethod
    def from_slice(cls, S: TruncatedSlice) -> "SliceDensity":
        N, k, m = S.N, S.k, S.m
        if N < k + m + 4:
            raise ConfigError(f"density needs N >= k + m + 4 = {k + m + 4}, got {N}")
        d = N - 1
        lnc = (
            log_surface_constant(d - k - m)
            - log_surface_constant(d - m)
            - k * math.log(S.radius)
            - math.log(S.det_factor)
        )
        return cls(N, k, m, S.radius, S.mean_k, S.cov_k, S.det_factor, lnc)

    @property
    def bounding_halfwidths(self) -> np.ndarray:
        """Half-widths of the smallest axis box containing the ellipsoid D_N."""
        return self.radius * np.sqrt(np.diag(self.cov_k))


def slice_density(L: AffineConstraintSet, N: int) -> SliceDensity:
    return SliceDensity.from_slice(truncated_slice(L, N))


def density_muN(D: SliceDensity, x) -> np.ndarray | float:
    x = np.asarray(x, dtype=float)
    single = x.ndim <= 1
    xs = x.reshape(-1, D.k)
    u = l0_inverse_sq_norm(D.cov_k, xs - D.mean_k) / D.radius**2
    u = np.atleast_1d(u)
    out = np.zeros_like(u)
    inside = u < 1.0
    out[inside] = np.exp(D.log_norm_const + D.exponent * np.log1p(-u[inside]))
    return float(out[0]) if single else out


def density_muInf(G: GaussianLimit, x) -> np.ndarray | float:
    x = np.asarray(x, dtype=float)
    single = x.ndim <= 1
    q = np.atleast_1d(l0_inverse_sq_norm(G.cov, x.reshape(-1, G.k) - G.mean))
    out = np.exp(-0.5 * G.k * LOG_2PI - math.log(G.det_factor) - 0.5 * q)
    return float(out[0]) if single else out


def charfn_muInf(G: GaussianLimit, t) -> complex | np.ndarray:
    t = np.asarray(t, dtype=float)
    ts = t.reshape(-1, G.k)
    val = np.exp(1j * (ts @ G.mean) - 0.5 * np.einsum("ij,jl,il->i", ts, G.cov, ts))
    return complex(val[0]) if t.ndim <= 1 else val


def charfn_muL(L: AffineConstraintSet, t) -> complex:
    """Characteristic function of the limit measure on sequence space.

    ``t`` is a finitely supported sequence given by its leading entries.
    The Gaussian part uses ``|P_{ker Q} t|^2 = |t|^2 - sum_a <t, u_a>^2``
    with u_a orthonormalized in l^2.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    z0 = closest_point(L, INF)
    tdotw = np.array([w.dot_array(t) for w in L.directions])
    coeffs = _l2_orthonormal_coefficients(L.gram())
    tdotu = coeffs.T @ tdotw
    pt2 = max(float(t @ t - tdotu @ tdotu), 0.0)
    val = complex(np.exp(1j * z0.dot_array(t) - 0.5 * pt2))

    nz = np.flatnonzero(t)
    if nz.size == 0 or nz[-1] < L.k:
        tk = np.zeros(L.k)
        tk[: min(t.size, L.k)] = t[: L.k]
        pushed = charfn_muInf(gaussian_limit(L), tk)
        if abs(pushed - val) > 1e-12:
            raise FormulaMismatch(f"pushforward identity off by {abs(pushed - val):.3e}")
    return val


def gaussian_expectation(G: GaussianLimit, phi: TestFunction) -> float | None:
    """Closed-form expectation of ``phi`` under the Gaussian limit.

    Returns None when no closed form is implemented for the kind (clamped
    monomials, and boxes under non-diagonal covariance).
    """
    phi.check_dim(G.k)
    if phi.kind == "constant":
        return phi.s
    if phi.kind == "cosine_character":
        return charfn_muInf(G, phi.a).real
    if phi.kind == "sine_character":
        return charfn_muInf(G, phi.a).imag
    if phi.kind == "box_indicator":
        off = G.cov - np.diag(np.diag(G.cov))
        if np.any(off != 0.0):
            return None
        sd = np.sqrt(np.diag(G.cov)) * math.sqrt(2.0)
        hi = erf((phi.b - G.mean) / sd)
        lo = erf((phi.a - G.mean) / sd)
        return float(np.prod(0.5 * (hi - lo)))
    if phi.kind == "gaussian_bump":
        w2 = phi.s**2
        d = G.mean - phi.a
        k = G.k
        quad = float(d @ np.linalg.solve(G.cov + w2 * np.eye(k), d))
        return float(np.linalg.det(np.eye(k) + G.cov / w2) ** -0.5 * math.exp(-0.5 * quad))
    return None
