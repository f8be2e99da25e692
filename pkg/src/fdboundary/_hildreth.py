"""Cyclic dual coordinate ascent for ``min sum a_c rho_c^2  s.t.  L rho >= 1``.

The primal iterate is kept equal to ``A^{-1} L^T mu``; each step projects onto
one constraint half-space in the ``A``-weighted norm.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def hildreth_sweeps(indptr, indices, data, ainv, norms, mu, rho, n_sweeps):
    m = indptr.shape[0] - 1
    for _ in range(n_sweeps):
        for k in range(m):
            s = 0.0
            for p in range(indptr[k], indptr[k + 1]):
                s += data[p] * rho[indices[p]]
            new = mu[k] + (1.0 - s) / norms[k]
            if new < 0.0:
                new = 0.0
            d = new - mu[k]
            if d != 0.0:
                for p in range(indptr[k], indptr[k + 1]):
                    c = indices[p]
                    rho[c] += d * data[p] * ainv[c]
                mu[k] = new


def row_norms(indptr, indices, data, ainv):
    """``L_k A^{-1} L_k^T`` for every row."""
    rows = np.repeat(np.arange(len(indptr) - 1), np.diff(indptr))
    return np.bincount(rows, weights=data * data * ainv[indices], minlength=len(indptr) - 1)
