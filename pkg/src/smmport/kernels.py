"""Numerical kernel backend selection.

The two inner loops that dominate runtime (Monte Carlo signal-to-noise
evaluation and kernel-regression weight sums) live in a compiled
extension when it was built; otherwise a NumPy fallback with identical
semantics is used. Set ``SMMPORT_PURE_PYTHON=1`` in the environment to
force the fallback even when the extension is present.

``BACKEND`` names the active implementation ("cython" or "python").
"""

import os

import numpy as np

from . import _kernels_py

_compiled = None
if not os.environ.get("SMMPORT_PURE_PYTHON"):
    try:
        from . import _smm_kernels as _compiled
    except ImportError:
        _compiled = None

if _compiled is not None:
    _impl = _compiled
    BACKEND = "cython"
else:
    _impl = _kernels_py
    BACKEND = "python"


def available_backends():
    """Importable kernel implementations, keyed by name."""
    out = {"python": _kernels_py}
    if _compiled is not None:
        out["cython"] = _compiled
    return out


def _c64(x):
    return np.ascontiguousarray(x, dtype=np.float64)


def lcem_s_values(feats, b_mat, chol_lower, impl=None):
    """Per-row s = (B f)' inv(Sigma) (B f), Sigma via lower Cholesky factor."""
    impl = impl or _impl
    return impl.lcem_s_values(_c64(feats), _c64(b_mat), _c64(chol_lower))


def nw_sums(xs, ys, grid, bandwidth, impl=None):
    """Gaussian kernel mass and weighted response sums on a grid."""
    impl = impl or _impl
    ys = _c64(ys)
    if ys.ndim == 1:
        ys = ys[None, :]
    return impl.nw_sums(_c64(xs), ys, _c64(grid), float(bandwidth))
