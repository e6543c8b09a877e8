"""Hot numeric kernels with a numba path and a pure-numpy fallback.

The backend is picked once at import from ``BISMOOTH_BACKEND``
(``numba`` or ``numpy``); ``numba`` is the default when it imports.
:func:`use_backend` switches temporarily, for benchmarks and tests.

Both paths accumulate strictly left to right starting from ``0.0`` so
they produce bit-identical results.
"""

from __future__ import annotations

import contextlib
import os

import numpy as np

try:
    import numba

    HAS_NUMBA = True
except ImportError:  # pragma: no cover
    HAS_NUMBA = False


def _dot_numpy(u, v):
    if u.shape[0] == 0:
        return 0.0
    # accumulate is a sequential scan; reduce/np.dot are not
    return float(np.add.accumulate(u * v)[-1]) + 0.0


def _csr_matvec_numpy(row_offsets, col_indices, values, v):
    n_rows = row_offsets.shape[0] - 1
    out = np.zeros(n_rows)
    if values.shape[0] == 0:
        return out
    lengths = np.diff(row_offsets)
    products = values * v[col_indices]
    starts = row_offsets[:-1]
    for j in range(int(lengths.max())):
        rows = np.nonzero(lengths > j)[0]
        out[rows] += products[starts[rows] + j]
    return out


if HAS_NUMBA:

    @numba.njit(cache=True)
    def _dot_numba(u, v):
        s = 0.0
        for i in range(u.shape[0]):
            s += u[i] * v[i]
        return s

    @numba.njit(cache=True)
    def _csr_matvec_numba(row_offsets, col_indices, values, v):
        n_rows = row_offsets.shape[0] - 1
        out = np.empty(n_rows)
        for i in range(n_rows):
            s = 0.0
            for jj in range(row_offsets[i], row_offsets[i + 1]):
                s += values[jj] * v[col_indices[jj]]
            out[i] = s
        return out


_IMPLS = {"numpy": (_dot_numpy, _csr_matvec_numpy)}
if HAS_NUMBA:
    _IMPLS["numba"] = (_dot_numba, _csr_matvec_numba)


def _initial_backend():
    name = os.environ.get("BISMOOTH_BACKEND", "numba" if HAS_NUMBA else "numpy")
    name = name.strip().lower()
    if name not in ("numba", "numpy"):
        raise ValueError(f"BISMOOTH_BACKEND must be 'numba' or 'numpy', got {name!r}")
    if name == "numba" and not HAS_NUMBA:
        name = "numpy"
    return name


BACKEND = _initial_backend()
_dot, _csr_matvec = _IMPLS[BACKEND]


def available_backends():
    return tuple(_IMPLS)


def set_backend(name):
    global BACKEND, _dot, _csr_matvec
    if name not in _IMPLS:
        raise ValueError(f"backend {name!r} not available; choose from {available_backends()}")
    BACKEND = name
    _dot, _csr_matvec = _IMPLS[name]


@contextlib.contextmanager
def use_backend(name):
    previous = BACKEND
    set_backend(name)
    try:
        yield
    finally:
        set_backend(previous)


def dot(u, v):
    return _dot(u, v)


def csr_matvec(row_offsets, col_indices, values, v):
    return _csr_matvec(row_offsets, col_indices, values, v)
