"""NumPy implementations of the permutation kernels.

Used when the compiled ``_kernels_c`` extension is unavailable, and as the
reference the compiled versions are tested against.
"""

import numpy as np


def moran_numerators(z, indptr, indices, values, perms):
    """``sum_ij w_ij z[p_i] z[p_j]`` for every permutation row ``p``."""
    n = len(z)
    w = np.zeros((n, n))
    w[np.repeat(np.arange(n), np.diff(indptr)), indices] = values
    zp = z[perms]
    return np.einsum("mi,mi->m", zp, zp @ w.T)


def conditional_lags(z, indptr, indices, values, draws):
    """Conditionally permuted spatial lags.

    For region ``i`` and draw ``m`` the neighbors of ``i`` receive the values
    ``z[others[draws[m, :k_i]]]`` where ``others`` is every index but ``i``.
    Returns an ``(n, M)`` array.
    """
    n = len(z)
    m = draws.shape[0]
    out = np.zeros((n, m))
    for i in range(n):
        lo, hi = indptr[i], indptr[i + 1]
        k = hi - lo
        if k == 0:
            continue
        idx = draws[:, :k]
        idx = idx + (idx >= i)
        out[i] = z[idx] @ values[lo:hi]
    return out
