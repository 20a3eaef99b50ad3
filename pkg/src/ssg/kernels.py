"""Kernel backend selection.

The compiled ``_kernels`` extension is used when it imports; otherwise, or
when ``SSG_PURE_PYTHON=1``, the numpy versions in ``_fallback`` are used.
"""
import os

from . import _fallback

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

BACKENDS = {"python": _fallback}
if _compiled is not None:
    BACKENDS["cython"] = _compiled

if _compiled is not None and os.environ.get("SSG_PURE_PYTHON", "") != "1":
    BACKEND = "cython"
else:
    BACKEND = "python"

_impl = BACKENDS[BACKEND]
mc_block = _impl.mc_block
density_grid = _impl.density_grid


def get_backend(name: str | None = None):
    """Kernel module by name (``"cython"`` or ``"python"``); default is the active one."""
    return BACKENDS[name or BACKEND]
