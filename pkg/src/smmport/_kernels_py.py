"""NumPy implementations of the numerical kernels.

Used when the compiled extension is unavailable or disabled. Signatures
mirror ``smmport._smm_kernels``; inputs are C-contiguous float64 arrays
(the dispatcher in :mod:`smmport.kernels` guarantees this).
"""

import numpy as np
from scipy.linalg import solve_triangular


def lcem_s_values(feats, b_mat, chol_lower):
    """Squared conditional signal-to-noise per feature row.

    For each row f of ``feats`` computes s = (B f)' inv(Sigma) (B f),
    with Sigma given through its lower Cholesky factor.
    """
    signal = feats @ b_mat.T
    y = solve_triangular(chol_lower, signal.T, lower=True)
    return np.einsum("ij,ij->j", y, y)


def nw_sums(xs, ys, grid, bandwidth):
    """Gaussian-kernel weight sums for Nadaraya-Watson regression.

    Returns ``(den, num)`` where ``den[j]`` is the total kernel mass at
    grid point j and ``num[r, j]`` the mass-weighted sum of response
    row r. ``ys`` has shape (n_responses, n_samples).
    """
    u = (grid[None, :] - xs[:, None]) / bandwidth
    w = np.exp(-0.5 * u * u)
    return w.sum(axis=0), ys @ w
