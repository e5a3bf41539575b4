"""Hot loops: escape-time grids and batched Newton steps for ray tracing.

Each kernel has a numba version and a plain numpy version.  The backend is
chosen once from ``PUZZLE_FORGE_BACKEND`` (``numba``, the default, or
``numpy``); if numba cannot be imported the numpy kernels are used.
``PUZZLE_FORGE_THREADS`` caps the numba worker count.  Every output element
depends on its own input only, so results do not depend on the thread count.
"""
from __future__ import annotations

import os

import numpy as np

BACKEND = os.environ.get("PUZZLE_FORGE_BACKEND", "numba").strip().lower()
if BACKEND not in ("numba", "numpy"):
    raise ValueError(f"PUZZLE_FORGE_BACKEND must be 'numba' or 'numpy', not {BACKEND!r}")

try:
    if BACKEND == "numba":
        import numba
        from numba import njit, prange

        if os.environ.get("NUMBA_THREADING_LAYER") is None:
            # the portable layer; avoids probing for a matching TBB
            numba.config.THREADING_LAYER = "workqueue"
    else:
        numba = None
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    BACKEND = "numpy"


def _set_threads() -> None:
    n = os.environ.get("PUZZLE_FORGE_THREADS")
    if numba is None or not n:
        return
    numba.set_num_threads(max(1, min(int(n), numba.config.NUMBA_NUM_THREADS)))


# -- numpy kernels ------------------------------------------------------------


def _escape_numpy(z0, c, max_iter, bailout):
    """Smooth potential ``2^-n log|z_n|`` at the first exit beyond ``bailout``."""
    z = z0.astype(np.complex128).copy()
    cc = np.broadcast_to(np.asarray(c, dtype=np.complex128), z.shape).copy()
    pot = np.zeros(z.shape, dtype=np.float64)
    alive = np.ones(z.shape, dtype=bool)
    scale = 1.0
    b2 = bailout * bailout
    for _ in range(max_iter):
        if not alive.any():
            break
        za = z[alive]
        out = (za.real * za.real + za.imag * za.imag) > b2
        if out.any():
            idx = np.flatnonzero(alive)[out]
            pot.flat[idx] = np.log(np.abs(za[out])) * scale
            alive.flat[idx] = False
        z[alive] = z[alive] * z[alive] + cc[alive]
        scale *= 0.5
    return pot


def _newton_numpy(z, w, c, n, param, max_iter, tol):
    """Solve ``f^n(z) = w`` (or ``f_c^n(c) = w`` for ``param``) for each lane."""
    z = z.astype(np.complex128).copy()
    ok = np.zeros(z.shape, dtype=bool)
    active = np.ones(z.shape, dtype=bool)
    for _ in range(max_iter):
        if not active.any():
            break
        x = z[active]
        cc = x if param else np.full(x.shape, c, dtype=np.complex128)
        y = x.copy() if param else x.copy()
        dy = np.ones(x.shape, dtype=np.complex128)
        for _k in range(n):
            dy = 2.0 * y * dy + (1.0 if param else 0.0)
            y = y * y + cc
        step = (y - w[active]) / dy
        bad = ~np.isfinite(step)
        step[bad] = 0.0
        z[active] = x - step
        done = (np.abs(step) <= tol * np.maximum(1.0, np.abs(x))) & ~bad
        idx = np.flatnonzero(active)
        ok[idx[done]] = True
        active[idx[done | bad]] = False
    return z, ok


# -- numba kernels ------------------------------------------------------------

if numba is not None:

    @njit(parallel=True, cache=True)
    def _escape_numba(z0, c, max_iter, bailout):
        flat = z0.ravel()
        cf = c.ravel()
        pot = np.zeros(flat.size, dtype=np.float64)
        b2 = bailout * bailout
        for i in prange(flat.size):
            z = flat[i]
            cc = cf[i]
            scale = 1.0
            for _ in range(max_iter):
                if z.real * z.real + z.imag * z.imag > b2:
                    pot[i] = np.log(abs(z)) * scale
                    break
                z = z * z + cc
                scale *= 0.5
        return pot.reshape(z0.shape)

    @njit(parallel=True, cache=True)
    def _newton_numba(z, w, c, n, param, max_iter, tol):
        out = z.copy()
        ok = np.zeros(z.size, dtype=np.bool_)
        for i in prange(z.size):
            x = out[i]
            for _ in range(max_iter):
                cc = x if param else c
                y = x
                dy = 1.0 + 0.0j
                for _k in range(n):
                    dy = 2.0 * y * dy + (1.0 if param else 0.0)
                    y = y * y + cc
                step = (y - w[i]) / dy
                if not (np.isfinite(step.real) and np.isfinite(step.imag)):
                    break
                x = x - step
                if abs(step) <= tol * max(1.0, abs(x + step)):
                    ok[i] = True
                    break
            out[i] = x
        return out, ok


# -- dispatch -------------------------------------------------------------------


def escape_potential(z0, c, max_iter: int = 1000, bailout: float = 1e10) -> np.ndarray:
    """Smooth escape potential for each start point (0 where no escape).

    ``c`` is a scalar (Julia plane) or an array of the same shape as ``z0``
    (parameter plane, with ``z0 = c``).
    """
    z0 = np.ascontiguousarray(z0, dtype=np.complex128)
    c_arr = np.ascontiguousarray(np.broadcast_to(np.asarray(c, dtype=np.complex128), z0.shape))
    if numba is not None:
        _set_threads()
        return _escape_numba(z0, c_arr, int(max_iter), float(bailout))
    return _escape_numpy(z0, c_arr, int(max_iter), float(bailout))


def newton_bundle(z, w, c, n: int, param: bool = False, max_iter: int = 60, tol: float = 1e-14):
    """One batched Newton solve per lane; returns ``(solutions, converged)``."""
    z = np.ascontiguousarray(z, dtype=np.complex128)
    w = np.ascontiguousarray(w, dtype=np.complex128)
    if numba is not None:
        _set_threads()
        return _newton_numba(z, w, complex(c), int(n), bool(param), int(max_iter), float(tol))
    return _newton_numpy(z, w, complex(c), int(n), bool(param), int(max_iter), float(tol))
