"""Backend selection for the permutation kernels.

The compiled extension is preferred when it imports; otherwise the NumPy
fallback is used. ``use_backend`` switches explicitly (tests, benchmarks).
"""

import numpy as np

from . import _kernels_py

try:
    from . import _kernels_c
except ImportError:  # extension not built
    _kernels_c = None

__all__ = ["BACKEND", "available_backends", "use_backend", "moran_numerators", "conditional_lags"]

_BACKENDS = {"python": _kernels_py}
if _kernels_c is not None:
    _BACKENDS["compiled"] = _kernels_c

BACKEND = "compiled" if _kernels_c is not None else "python"


def available_backends():
    return tuple(_BACKENDS)


def use_backend(name: str) -> str:
    """Select a backend by name; returns the previously active one."""
    global BACKEND
    if name not in _BACKENDS:
        raise ValueError(f"unknown or unavailable kernel backend {name!r}")
    previous, BACKEND = BACKEND, name
    return previous


def _csr(w):
    return (
        np.ascontiguousarray(w.indptr, dtype=np.int64),
        np.ascontiguousarray(w.indices, dtype=np.int64),
        np.ascontiguousarray(w.values, dtype=float),
    )


def moran_numerators(z, w, perms):
    indptr, indices, values = _csr(w)
    return _BACKENDS[BACKEND].moran_numerators(
        np.ascontiguousarray(z, dtype=float), indptr, indices, values,
        np.ascontiguousarray(perms, dtype=np.int64),
    )


def conditional_lags(z, w, draws):
    indptr, indices, values = _csr(w)
    return _BACKENDS[BACKEND].conditional_lags(
        np.ascontiguousarray(z, dtype=float), indptr, indices, values,
        np.ascontiguousarray(draws, dtype=np.int64),
    )
