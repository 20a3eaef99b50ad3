"""Affine subspaces of l^2 of finite codimension and their truncations.

A subspace is given by orthonormal directions ``w_1..w_m`` and offsets
``p_1..p_m``::

    L = {v in l^2 : <v, w_i> = p_i}

Directions are finite prefixes optionally continued by a geometric tail, so
every inner product, norm and tail sum has a closed form and the N -> inf
limits can be evaluated exactly instead of by taking N "large".
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np
import scipy.linalg

from .errors import ConfigError, FormulaMismatch, NotTransversal, SingularGram, EmptySlice

ORTHONORMAL_TOL = 1e-8
GRAM_SINGULAR_RTOL = 1e-10
TRANSVERSAL_EIG_TOL = 1e-10
ROUTE_TOL = 1e-10

INF = math.inf


@dataclass(frozen=True)
class GeometricTail:
    """Components ``alpha * ratio**i`` for i = 0, 1, ... after the prefix."""

    alpha: float
    ratio: float

    def __post_init__(self):
        if not abs(self.ratio) < 1.0:
            raise ConfigError(f"geometric tail needs |ratio| < 1, got {self.ratio}")


@dataclass(frozen=True)
class DirectionVector:
    """An element of l^2: explicit prefix plus optional geometric tail.

    Component ``j`` (1-based) is ``prefix[j-1]`` for ``j <= D`` and
    ``alpha * ratio**(j-D-1)`` for ``j > D`` where ``D = len(prefix)``.
    """

    prefix: tuple[float, ...]
    tail: GeometricTail | None = None

    def __post_init__(self):
        object.__setattr__(self, "prefix", tuple(float(v) for v in self.prefix))

    @classmethod
    def basis(cls, j: int, scale: float = 1.0) -> "DirectionVector":
        """``scale * e_j`` with 1-based ``j``."""
        return cls(tuple([0.0] * (j - 1) + [scale]))

    @property
    def support_length(self) -> float:
        if self.tail is not None and self.tail.alpha != 0.0:
            return INF
        nz = np.flatnonzero(self.prefix)
        return int(nz[-1]) + 1 if nz.size else 0

    def head(self, n: int) -> np.ndarray:
        """First ``n`` components as an array."""
        n = int(n)
        out = np.zeros(n)
        d = len(self.prefix)
        out[: min(n, d)] = self.prefix[:n]
        if self.tail is not None and n > d:
            out[d:] = self.tail.alpha * self.tail.ratio ** np.arange(n - d)
        return out

    def tail_dot(self, other: "DirectionVector", n: int = 0) -> float:
        """``sum_{j > n} self_j * other_j`` in closed form."""
        d = max(int(n), len(self.prefix), len(other.prefix))
        explicit = float(self.head(d)[n:] @ other.head(d)[n:]) if d > n else 0.0
        if self.tail is None or other.tail is None:
            return explicit
        a, b = self.tail, other.tail
        lead_a = a.alpha * a.ratio ** (d - len(self.prefix))
        lead_b = b.alpha * b.ratio ** (d - len(other.prefix))
        return explicit + lead_a * lead_b / (1.0 - a.ratio * b.ratio)

    def dot(self, other: "DirectionVector") -> float:
        return self.tail_dot(other, 0)

    def norm_sq(self) -> float:
        return self.dot(self)

    def dot_array(self, t: Sequence[float]) -> float:
        """Inner product with the finitely supported sequence ``t``."""
        t = np.asarray(t, dtype=float)
        return float(t @ self.head(t.size))

    def to_dict(self) -> dict:
        tail = None if self.tail is None else {"alpha": self.tail.alpha, "ratio": self.tail.ratio}
        return {"prefix": list(self.prefix), "tail": tail}


def combine(coefficients: Sequence[float], vectors: Sequence[DirectionVector]) -> DirectionVector:
    """Linear combination of directions whose tails share one ratio.

    Geometric tails with a common ratio stay geometric under linear
    combination once the prefixes are padded to a common length.
    """
    ratios = {v.tail.ratio for v in vectors if v.tail is not None}
    if len(ratios) > 1:
        raise ConfigError("cannot combine geometric tails with different ratios")
    d = max(len(v.prefix) for v in vectors)
    prefix = sum(c * v.head(d) for c, v in zip(coefficients, vectors))
    if not ratios:
        return DirectionVector(tuple(prefix))
    r = ratios.pop()
    alpha = sum(
        c * v.tail.alpha * r ** (d - len(v.prefix))
        for c, v in zip(coefficients, vectors)
        if v.tail is not None
    )
    return DirectionVector(tuple(prefix), GeometricTail(float(alpha), r))


def orthonormalize(vectors: Sequence[DirectionVector]) -> list[DirectionVector]:
    """Modified Gram-Schmidt in l^2 (all tails must share one ratio)."""
    out: list[DirectionVector] = []
    for v in vectors:
        for u in out:
            v = combine([1.0, -v.dot(u)], [v, u])
        nrm = math.sqrt(v.norm_sq())
        if nrm < 1e-14:
            raise SingularGram("vectors are linearly dependent")
        out.append(combine([1.0 / nrm], [v]))
    return out


def mgs(a: np.ndarray, rtol: float = GRAM_SINGULAR_RTOL) -> np.ndarray:
    """Orthonormal columns spanning ``a`` by modified Gram-Schmidt.

    Raises SingularGram when a column loses all but ``sqrt(rtol)`` of its
    norm, the column-norm analogue of the Gram eigenvalue threshold.
    """
    q = np.array(a, dtype=float, copy=True)
    ncol = q.shape[1]
    for j in range(ncol):
        orig = np.linalg.norm(q[:, j])
        for i in range(j):
            q[:, j] -= (q[:, i] @ q[:, j]) * q[:, i]
        nrm = np.linalg.norm(q[:, j])
        if orig == 0.0 or nrm <= math.sqrt(rtol) * orig:
            raise SingularGram(f"column {j} is dependent on the previous ones")
        q[:, j] /= nrm
    return q


def _check_gram(g: np.ndarray) -> None:
    scale = float(np.max(np.diag(g))) if g.size else 0.0
    if scale <= 0.0:
        raise SingularGram("truncated directions vanish")
    lam = float(np.linalg.eigvalsh(g)[0])
    if lam < GRAM_SINGULAR_RTOL * scale:
        raise SingularGram(f"Gram matrix singular: min eigenvalue {lam:.3e} (scale {scale:.3e})")


def _gram_solve(g: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    _check_gram(g)
    return scipy.linalg.cho_solve(scipy.linalg.cho_factor(g, lower=True), rhs)


@dataclass(frozen=True)
class AffineConstraintSet:
    """``L = {v : <v, w_i> = p_i, i = 1..m}`` together with the marginal dimension k."""

    directions: tuple[DirectionVector, ...]
    offsets: tuple[float, ...]
    k: int

    def __post_init__(self):
        object.__setattr__(self, "directions", tuple(self.directions))
        object.__setattr__(self, "offsets", tuple(float(p) for p in self.offsets))
        if len(self.directions) < 1:
            raise ConfigError("need at least one constraint")
        if len(self.directions) != len(self.offsets):
            raise ConfigError("directions and offsets differ in length")
        if int(self.k) != self.k or self.k < 1:
            raise ConfigError(f"marginal dimension k must be a positive integer, got {self.k}")
        dev = np.abs(self.gram() - np.eye(self.m))
        if dev.max() >= ORTHONORMAL_TOL:
            raise ConfigError(f"directions are not orthonormal (max Gram deviation {dev.max():.2e})")

    @property
    def m(self) -> int:
        return len(self.directions)

    @property
    def p(self) -> np.ndarray:
        return np.array(self.offsets)

    def gram(self) -> np.ndarray:
        """Exact l^2 Gram matrix of the directions."""
        m = len(self.directions)
        g = np.empty((m, m))
        for i in range(m):
            for j in range(i, m):
                g[i, j] = g[j, i] = self.directions[i].dot(self.directions[j])
        return g

    def truncated(self, n: int) -> np.ndarray:
        """``n x m`` matrix whose columns are the truncations (w_i)_(n)."""
        return np.column_stack([w.head(n) for w in self.directions])

    @property
    def finite_support(self) -> float:
        return max(w.support_length for w in self.directions)

    def to_dict(self) -> dict:
        cons = []
        for w, p in zip(self.directions, self.offsets):
            d = w.to_dict()
            d["offset"] = p
            cons.append(d)
        return {"k": self.k, "constraints": cons}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, doc: dict) -> "AffineConstraintSet":
        try:
            k = doc["k"]
            dirs, offs = [], []
            for c in doc["constraints"]:
                tail = c.get("tail")
                if tail is not None:
                    tail = GeometricTail(float(tail["alpha"]), float(tail["ratio"]))
                dirs.append(DirectionVector(tuple(c["prefix"]), tail))
                offs.append(float(c["offset"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"malformed constraint set: {exc!r}") from exc
        if not isinstance(k, int) or isinstance(k, bool):
            raise ConfigError(f"k must be an integer, got {k!r}")
        return cls(tuple(dirs), tuple(offs), k)

    @classmethod
    def from_json(cls, text: str) -> "AffineConstraintSet":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc}") from exc
        return cls.from_dict(doc)


@dataclass(frozen=True)
class LimitPoint:
    """A point of l^2 written as ``sum_i coefficients[i] * directions[i]``."""

    coefficients: np.ndarray
    directions: tuple[DirectionVector, ...]

    def head(self, n: int) -> np.ndarray:
        return sum(c * w.head(n) for c, w in zip(self.coefficients, self.directions))

    def dot_array(self, t) -> float:
        return float(sum(c * w.dot_array(t) for c, w in zip(self.coefficients, self.directions)))

    def tail_norm_sq(self, n: int) -> float:
        c = self.coefficients
        return float(
            sum(c[i] * c[j] * wi.tail_dot(wj, n)
                for i, wi in enumerate(self.directions)
                for j, wj in enumerate(self.directions))
        )

    def norm_sq(self) -> float:
        return self.tail_norm_sq(0)


def _require_n(n, minimum: int = 1):
    if n == INF:
        return INF
    if int(n) != n or n < minimum:
        raise ConfigError(f"N must be an integer >= {minimum}, got {n}")
    return int(n)


def closest_point(L: AffineConstraintSet, N):
    """Point of L_N (or of L when ``N`` is ``math.inf``) nearest the origin.

    Finite N returns an array in R^N; N = inf returns a :class:`LimitPoint`.
    """
    N = _require_n(N)
    if N == INF:
        c = _gram_solve(L.gram(), L.p)
        return LimitPoint(np.asarray(c), L.directions)
    w = L.truncated(N)
    return w @ _gram_solve(w.T @ w, L.p)


def kernel_basis(L: AffineConstraintSet, N: int) -> np.ndarray:
    """``N x (N-m)`` orthonormal columns spanning ker Q_N.

    Uses column-pivoted Householder QR so the output is a deterministic
    function of the input.
    """
    N = _require_n(N, L.m + 2)
    w = L.truncated(N)
    _check_gram(w.T @ w)
    q, _, _ = scipy.linalg.qr(w, mode="full", pivoting=True)
    return q[:, L.m:]


def _l2_orthonormal_coefficients(g: np.ndarray) -> np.ndarray:
    """Modified Gram-Schmidt in coefficient space under the Gram inner product.

    Returns ``T`` with ``T.T @ g @ T = I``, so the columns of ``W @ T`` are
    an orthonormal basis of span(W).
    """
    m = g.shape[0]
    t = np.eye(m)
    for j in range(m):
        for i in range(j):
            t[:, j] -= (t[:, i] @ g @ t[:, j]) * t[:, i]
        nrm2 = t[:, j] @ g @ t[:, j]
        if nrm2 <= GRAM_SINGULAR_RTOL * g[j, j]:
            raise SingularGram("directions are linearly dependent")
        t[:, j] /= math.sqrt(nrm2)
    return t


def _orthonormal_heads(L: AffineConstraintSet, N) -> tuple[np.ndarray, np.ndarray]:
    """(u_a)_(k) and (u_a)_(k)' for an orthonormal basis u of (ker Q_N)^perp.

    For finite N the truncated directions are re-orthonormalized by MGS; for
    N = inf the same is done in l^2 with closed-form inner products.
    """
    k = L.k
    if N == INF:
        t = _l2_orthonormal_coefficients(L.gram())
        wk = L.truncated(k)
        return wk @ t, None
    u = mgs(L.truncated(N))
    return u[:k], u[k:]


def _rank_one_route(uk: np.ndarray, k: int) -> np.ndarray:
    c = np.eye(k)
    for a in range(uk.shape[1]):
        v = uk[:, a]
        nrm2 = float(v @ v)
        if nrm2 == 0.0:
            continue
        vhat = v / math.sqrt(nrm2)
        c -= nrm2 * np.outer(vhat, vhat)
    return c


def _projector_route(L: AffineConstraintSet, N) -> np.ndarray:
    k = L.k
    if N == INF:
        g = L.gram()
        wk = L.truncated(k)
    else:
        w = L.truncated(N)
        g = w.T @ w
        wk = w[:k]
    return np.eye(k) - wk @ _gram_solve(g, wk.T)


def covariance_routes(L: AffineConstraintSet, N) -> tuple[np.ndarray, np.ndarray]:
    """L0 L0* by the rank-one update formula and by the projector sandwich."""
    N = _require_n(N, L.k)
    uk, _ = _orthonormal_heads(L, N)
    return _rank_one_route(uk, L.k), _projector_route(L, N)


def marginal_covariance(L: AffineConstraintSet, N, tol: float = ROUTE_TOL) -> np.ndarray:
    """Covariance ``L0 L0*`` of the k-marginal at truncation N (or N = inf).

    Computed as ``I - sum_a |(u_a)_(k)|^2 P_{k,a}`` with re-orthonormalized
    u_a, and independently as ``P_(k) P_{ker Q} P_(k)*`` through a Cholesky
    solve with the Gram matrix; the routes must agree within ``tol``.
    """
    a, b = covariance_routes(L, N)
    gap = float(np.max(np.abs(a - b)))
    if gap > tol:
        raise FormulaMismatch(f"covariance routes disagree by {gap:.3e}")
    c = 0.5 * (a + a.T)
    lam = float(np.linalg.eigvalsh(c)[0])
    if lam <= TRANSVERSAL_EIG_TOL:
        raise NotTransversal(
            f"first {L.k} coordinates do not map ker Q onto R^{L.k} (min eigenvalue {lam:.3e})"
        )
    return c


def l0_inverse_sq_norm(C, y) -> np.ndarray | float:
    """``y^T C^{-1} y`` for SPD ``C``; ``y`` may be a single point or an (n, k) batch."""
    C = np.atleast_2d(np.asarray(C, dtype=float))
    y = np.asarray(y, dtype=float)
    lam = float(np.linalg.eigvalsh(C)[0])
    if lam <= TRANSVERSAL_EIG_TOL * max(1.0, float(np.max(np.diag(C)))):
        raise NotTransversal(f"covariance singular (min eigenvalue {lam:.3e})")
    chol = np.linalg.cholesky(C)
    batch = y.reshape(-1, C.shape[0])
    z = scipy.linalg.solve_triangular(chol, batch.T, lower=True)
    q = np.einsum("ij,ij->j", z, z)
    return float(q[0]) if y.ndim <= 1 else q


def l0_inverse_point(L: AffineConstraintSet, N: int, y) -> np.ndarray:
    """The minimal-norm ``z`` in ker Q_N with ``z_(k) = y``.

    Solves ``U c = -x`` with ``U_ab = <(u_a)_(k)', (u_b)_(k)'>`` and
    ``x_a = <(u_a)_(k), y>``; then ``z = (y, sum_a c_a (u_a)_(k)')``.
    """
    N = _require_n(N, L.k + 1)
    y = np.atleast_1d(np.asarray(y, dtype=float))
    uk, ukp = _orthonormal_heads(L, N)
    umat = ukp.T @ ukp
    lam = float(np.linalg.eigvalsh(umat)[0])
    if lam <= TRANSVERSAL_EIG_TOL:
        raise NotTransversal("Q does not map ker P_(k) onto R^m")
    c = -np.linalg.solve(umat, uk.T @ y)
    z = np.concatenate([y, ukp @ c])

    w = L.truncated(N)
    resid = float(np.max(np.abs(w.T @ z))) if z.size else 0.0
    expected = l0_inverse_sq_norm(marginal_covariance(L, N), y)
    if resid > 1e-9 * max(1.0, float(np.linalg.norm(y))) or not math.isclose(
        float(z @ z), expected, rel_tol=1e-9, abs_tol=1e-12
    ):
        raise FormulaMismatch("L0^{-1} postconditions violated")
    return z


@dataclass(frozen=True)
class TruncatedSlice:
    """All N-dependent geometry of ``L_N ∩ S^{N-1}(sqrt N)``."""

    L: AffineConstraintSet = field(repr=False)
    N: int
    z0N: np.ndarray = field(repr=False)
    radius: float
    mean_k: np.ndarray
    cov_k: np.ndarray
    det_factor: float

    @property
    def k(self) -> int:
        return self.L.k

    @property
    def m(self) -> int:
        return self.L.m

    @cached_property
    def kernel_basis(self) -> np.ndarray:
        return kernel_basis(self.L, self.N)


def truncated_slice(L: AffineConstraintSet, N: int) -> TruncatedSlice:
    N = _require_n(N, max(L.k, L.m) + 2)
    z0 = closest_point(L, N)
    r2 = N - float(z0 @ z0)
    if r2 <= 0.0:
        raise EmptySlice(f"L_N misses the sphere of radius sqrt({N}): |z0N|^2 = {z0 @ z0:.6g}")
    cov = marginal_covariance(L, N)
    return TruncatedSlice(
        L=L,
        N=N,
        z0N=z0,
        radius=math.sqrt(r2),
        mean_k=z0[: L.k].copy(),
        cov_k=cov,
        det_factor=math.sqrt(float(np.linalg.det(cov))),
    )


@dataclass(frozen=True)
class GaussianLimit:
    mean: np.ndarray
    cov: np.ndarray
    det_factor: float

    @property
    def k(self) -> int:
        return self.mean.size

    @classmethod
    def from_moments(cls, mean, cov) -> "GaussianLimit":
        mean = np.atleast_1d(np.asarray(mean, dtype=float))
        cov = np.atleast_2d(np.asarray(cov, dtype=float))
        if cov.shape != (mean.size, mean.size):
            raise ConfigError("mean and covariance shapes disagree")
        lam = float(np.linalg.eigvalsh(cov)[0])
        if lam <= TRANSVERSAL_EIG_TOL:
            raise NotTransversal(f"covariance singular (min eigenvalue {lam:.3e})")
        return cls(mean, cov, math.sqrt(float(np.linalg.det(cov))))


def gaussian_limit(L: AffineConstraintSet) -> GaussianLimit:
    """Mean ``z^0_(k)`` and covariance ``L0 L0*`` of the N -> inf marginal."""
    z0 = closest_point(L, INF)
    return GaussianLimit.from_moments(z0.head(L.k), marginal_covariance(L, INF))


def transversality_predicates(L: AffineConstraintSet, N: int, tol: float = TRANSVERSAL_EIG_TOL):
    """Three equivalent forms of transversality at truncation N.

    (i) P_(k) maps ker Q_N onto R^k, (ii) L0 L0* is nonsingular,
    (iii) ker P_(k) + ker Q_N = R^N. Returned as a tuple of bools. Works
    below the independence onset, where ker Q_N comes from an SVD null space.
    """
    k = L.k
    N = _require_n(N, k)
    w = L.truncated(N)
    basis = scipy.linalg.null_space(w.T)
    sv_tol = math.sqrt(tol)

    sv = np.linalg.svd(basis[:k], compute_uv=False) if basis.size else np.zeros(0)
    onto = sv.size == k and bool(sv[-1] > sv_tol)

    try:
        _, cov = covariance_routes(L, N)
    except SingularGram:
        cov = basis[:k] @ basis[:k].T
    nonsingular = bool(np.linalg.eigvalsh(0.5 * (cov + cov.T))[0] > tol)

    stacked = np.hstack([np.eye(N)[:, k:], basis])
    sv_sum = np.linalg.svd(stacked, compute_uv=False) if stacked.size else np.zeros(0)
    spans = bool(np.sum(sv_sum > sv_tol) == N)
    return onto, nonsingular, spans
