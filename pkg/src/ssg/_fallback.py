"""Pure-numpy implementations of the hot kernels.

Signatures mirror ``_kernels.pyx``; test-function parameters use the flat
``(kind, a, b, s)`` layout documented on :class:`ssg.measures.TestFunction`.
"""
import numpy as np


def eval_phi(kind, a, b, s, x):
    if kind == 0:
        return np.full(x.shape[0], s)
    if kind == 1:
        return np.cos(x @ a)
    if kind == 2:
        return np.sin(x @ a)
    if kind == 3:
        return np.all((x >= a) & (x <= b), axis=1).astype(float)
    if kind == 4:
        d = x - a
        return np.exp(-0.5 * np.einsum("ij,ij->i", d, d) / (s * s))
    if kind == 5:
        return np.clip(np.prod(x ** a, axis=1), -s, s)
    raise ValueError(f"unknown kind code {kind}")


def mc_block(h, s, mean, chol, radius, kind, a, b, sc):
    """Mean and centred sum of squares of phi over one block of samples.

    With chi-square draws ``s`` the points are
    ``mean + radius * chol @ h / sqrt(|h|^2 + s)``; with ``s`` empty they
    are ``mean + chol @ h`` (Gaussian mode).
    """
    y = h @ chol.T
    if s.size:
        y *= (radius / np.sqrt(np.einsum("ij,ij->i", h, h) + s))[:, None]
    vals = eval_phi(kind, a, b, sc, y + mean)
    mu = vals.mean()
    return float(mu), float(((vals - mu) ** 2).sum())


def density_grid(x, mean, linv, a2, lognorm, expo, kind, a, b, sc):
    """``phi(x) * density(x)`` at the rows of ``x``.

    ``linv`` is the inverse Cholesky factor of the covariance, so the
    quadratic form is ``|linv (x - mean)|^2``. ``a2 > 0`` selects the slice
    density ``exp(lognorm + expo * log1p(-q / a2))`` on ``q < a2``;
    ``a2 <= 0`` selects the Gaussian ``exp(lognorm - q / 2)``.
    """
    z = (x - mean) @ linv.T
    q = np.einsum("ij,ij->i", z, z)
    if a2 > 0:
        u = q / a2
        dens = np.zeros_like(q)
        inside = u < 1.0
        dens[inside] = np.exp(lognorm + expo * np.log1p(-u[inside]))
    else:
        dens = np.exp(lognorm - 0.5 * q)
    return dens * eval_phi(kind, a, b, sc, x)
