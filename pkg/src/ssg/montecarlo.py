"""Uniform sampling on spheres and sphere slices, and Monte Carlo slice means.

Samples are drawn in fixed-size blocks. Block ``j`` of a run with seed ``s``
draws from a Philox counter-based generator keyed by ``(j << 64) | s``, so
each block's stream is fixed by ``(seed, j)`` alone. Block statistics are
merged in block order, so results are bit-identical for any worker count
(``SSG_THREADS``).
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from . import kernels
from .errors import ConfigError, MembershipError
from .geometry import AffineConstraintSet, GaussianLimit, TruncatedSlice, truncated_slice
from .measures import TestFunction

BLOCK_SIZE = 1 << 16
MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class MCEstimate:
    value: float
    stderr: float
    n_samples: int
    seed: int

    def to_dict(self) -> dict:
        return asdict(self)


def block_generator(seed: int, block: int) -> np.random.Generator:
    """Independent Philox stream for one block of one run."""
    return np.random.Generator(np.random.Philox(key=(int(block) << 64) | (int(seed) & MASK64)))


def worker_count() -> int:
    raw = os.environ.get("SSG_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"SSG_THREADS must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise ConfigError(f"SSG_THREADS must be a positive integer, got {raw!r}")
    return n


def sample_sphere(d: int, a: float, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Uniform point(s) on the sphere of radius ``a`` in R^{d+1}."""
    if d < 1 or not a > 0:
        raise ValueError(f"need d >= 1 and a > 0, got d={d}, a={a}")
    rows = 1 if size is None else int(size)
    g = rng.standard_normal((rows, d + 1))
    nrm = np.linalg.norm(g, axis=1)
    while np.any(nrm == 0.0):
        bad = nrm == 0.0
        g[bad] = rng.standard_normal((int(bad.sum()), d + 1))
        nrm = np.linalg.norm(g, axis=1)
    x = a * g / nrm[:, None]
    return x[0] if size is None else x


def membership_residuals(S: TruncatedSlice, x: np.ndarray) -> tuple[float, float]:
    """Max of ``| |x|^2 - N |`` and of ``|Q_N x - p|`` over the rows of ``x``."""
    x = np.atleast_2d(x)
    sphere = float(np.max(np.abs(np.einsum("ij,ij->i", x, x) - S.N)))
    plane = float(np.max(np.abs(x @ S.L.truncated(S.N) - S.L.p)))
    return sphere, plane


def sample_slice(S: TruncatedSlice, rng: np.random.Generator, size: int | None = None,
                 check: bool = True) -> np.ndarray:
    """Uniform point(s) on ``L_N ∩ S^{N-1}(sqrt N)`` as ``z0N + radius * B u``."""
    basis = S.kernel_basis
    u = sample_sphere(basis.shape[1] - 1, 1.0, rng, 1 if size is None else size)
    x = S.z0N + S.radius * (u @ basis.T)
    if check:
        sphere, plane = membership_residuals(S, x)
        if sphere > 1e-9 * S.N or plane > 1e-9:
            raise MembershipError(f"slice sample off by {sphere:.2e} (sphere), {plane:.2e} (plane)")
    return x[0] if size is None else x


def _merge(stats):
    """Merge (count, mean, M2) block statistics in block order."""
    n, mean, m2 = 0, 0.0, 0.0
    for nb, mb, m2b in stats:
        tot = n + nb
        delta = mb - mean
        mean = mean + delta * (nb / tot)
        m2 = m2 + m2b + delta * delta * (n * nb / tot)
        n = tot
    return n, mean, m2


def _run_blocks(fn, n: int, block_size: int, workers: int | None = None):
    sizes = [min(block_size, n - j * block_size) for j in range(math.ceil(n / block_size))]
    workers = worker_count() if workers is None else int(workers)
    jobs = list(enumerate(sizes))
    if workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda jb: fn(*jb), jobs))
    else:
        results = [fn(j, b) for j, b in jobs]
    return _merge((b, mu, m2) for b, (mu, m2) in zip(sizes, results))


def _estimate(n, seed, fn, block_size=BLOCK_SIZE, workers=None) -> MCEstimate:
    if int(n) != n or n < 100:
        raise ConfigError(f"need at least 100 samples, got {n}")
    count, mean, m2 = _run_blocks(fn, int(n), block_size, workers)
    stderr = math.sqrt(max(m2, 0.0) / (count - 1) / count)
    return MCEstimate(float(mean), stderr, count, int(seed))


def _phi_args(phi: TestFunction):
    return phi.code, np.ascontiguousarray(phi.a), np.ascontiguousarray(phi.b), phi.s


def estimate_slice_mean(L: AffineConstraintSet, N: int, phi: TestFunction, n: int, seed: int,
                        method: str = "marginal", workers: int | None = None) -> MCEstimate:
    """Monte Carlo mean of ``phi(x_1..x_k)`` under the normalized slice measure.

    ``method="marginal"`` draws the first k coordinates of a uniform slice
    point directly: with ``h ~ N(0, I_k)`` and ``s ~ chi2(N-m-k)``
    independent, ``mean_k + radius * C h / sqrt(|h|^2 + s)`` (``C C^T =
    cov_k``) has the law of ``(z0N + radius B u)_(k)``. ``method="full"``
    materializes every point through :func:`sample_slice`.

    ``workers`` overrides ``SSG_THREADS``; it never changes the result.
    """
    S = truncated_slice(L, N)
    phi.check_dim(S.k)
    if method == "marginal":
        chol = np.ascontiguousarray(np.linalg.cholesky(S.cov_k))
        mean = np.ascontiguousarray(S.mean_k)
        df = S.N - S.m - S.k
        args = _phi_args(phi)

        def block(j, size):
            rng = block_generator(seed, j)
            h = rng.standard_normal((size, S.k))
            s = rng.chisquare(df, size)
            return kernels.mc_block(h, s, mean, chol, S.radius, *args)

        return _estimate(n, seed, block, workers=workers)
    if method == "full":
        S.kernel_basis  # build once, outside the workers

        def block(j, size):
            vals = phi(sample_slice(S, block_generator(seed, j), size)[:, : S.k])
            mu = float(vals.mean())
            return mu, float(((vals - mu) ** 2).sum())

        return _estimate(n, seed, block, block_size=max(256, (1 << 21) // S.N), workers=workers)
    raise ConfigError(f"unknown sampling method {method!r}")


def estimate_gaussian_mean(G: GaussianLimit, phi: TestFunction, n: int, seed: int,
                           workers: int | None = None) -> MCEstimate:
    """Monte Carlo mean of ``phi`` under ``N(mean, cov)``."""
    phi.check_dim(G.k)
    chol = np.ascontiguousarray(np.linalg.cholesky(G.cov))
    mean = np.ascontiguousarray(G.mean)
    empty = np.zeros(0)
    args = _phi_args(phi)

    def block(j, size):
        h = block_generator(seed, j).standard_normal((size, G.k))
        return kernels.mc_block(h, empty, mean, chol, 1.0, *args)

    return _estimate(n, seed, block, workers=workers)
