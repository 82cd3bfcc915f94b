"""Backend selection and the cyclic-Jacobi eigensolver.

Every subequation margin starts from the ordered spectrum of a small
symmetric matrix, so the eigensolver is the hot kernel of the whole
package (bisection solves and property suites run it tens of thousands
of times).  Two twin implementations of the same sweep schedule are
provided:

* a numba ``@njit`` version (default when numba imports), and
* a pure-numpy version, vectorized across a batch of matrices.

Set ``RIESZLAB_BACKEND=numpy`` or ``RIESZLAB_BACKEND=numba`` to force a
path; the default is ``auto``.  ``RIESZLAB_THREADS`` caps the worker
count used by sample-parallel property checks.

The solver is a cyclic Jacobi iteration: off-diagonal threshold 1e-12
(relative to the input Frobenius norm) and a hard cap of 100 sweeps.
It is deterministic for a given input, which keeps seeded experiment
output byte-stable.
"""

from __future__ import annotations

import os

import numpy as np

from .errors import SolverError

JACOBI_TOL = 1e-12
JACOBI_MAX_SWEEPS = 100

_ENV_BACKEND = "RIESZLAB_BACKEND"
_ENV_THREADS = "RIESZLAB_THREADS"


def _requested_backend() -> str:
    value = os.environ.get(_ENV_BACKEND, "auto").strip().lower()
    if value in ("", "auto"):
        return "auto"
    if value in ("numba", "numpy"):
        return value
    raise ValueError(f"{_ENV_BACKEND} must be 'numba', 'numpy' or 'auto', got {value!r}")


def worker_count() -> int:
    """Worker cap for sample-parallel checks (RIESZLAB_THREADS, default 1)."""
    raw = os.environ.get(_ENV_THREADS, "").strip()
    if not raw:
        return 1
    count = int(raw)
    if count < 1:
        raise ValueError(f"{_ENV_THREADS} must be >= 1, got {count}")
    return count


# ---------------------------------------------------------------------------
# pure-numpy twin: vectorized over a batch of matrices
# ---------------------------------------------------------------------------


def _jacobi_batch_numpy(mats: np.ndarray, want_vectors: bool):
    """Cyclic Jacobi on a stack of symmetric matrices, shape (m, n, n).

    Returns (values, vectors_or_None, sweeps_used).  Raises SolverError
    when the sweep budget is exhausted before the off-diagonal mass
    drops below threshold.
    """
    a = np.array(mats, dtype=float)
    m, n = a.shape[0], a.shape[1]
    vecs = np.broadcast_to(np.eye(n), (m, n, n)).copy() if want_vectors else None
    if n == 1:
        vals = a[:, 0, 0].copy()
        return vals.reshape(m, 1), vecs, 0

    scale = 1.0 + np.sqrt((a * a).sum(axis=(1, 2)))
    tol = JACOBI_TOL * scale

    iu = np.triu_indices(n, k=1)
    for sweep in range(JACOBI_MAX_SWEEPS):
        off = np.sqrt(2.0 * (a[:, iu[0], iu[1]] ** 2).sum(axis=1))
        if np.all(off <= tol):
            vals = np.sort(np.diagonal(a, axis1=1, axis2=2), axis=1)
            if want_vectors:
                order = np.argsort(np.diagonal(a, axis1=1, axis2=2), axis=1)
                vecs = np.take_along_axis(vecs, order[:, None, :], axis=2)
            return vals, vecs, sweep
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[:, p, q]
                active = apq != 0.0
                if not active.any():
                    continue
                diff = a[:, q, q] - a[:, p, p]
                with np.errstate(divide="ignore", invalid="ignore"):
                    tau = np.where(active, diff / np.where(active, 2.0 * apq, 1.0), 0.0)
                t = np.sign(tau) / (np.abs(tau) + np.hypot(1.0, tau))
                t = np.where(tau == 0.0, 1.0, t)
                t = np.where(active, t, 0.0)
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                # rows p, q
                rp = a[:, p, :].copy()
                rq = a[:, q, :].copy()
                a[:, p, :] = c[:, None] * rp - s[:, None] * rq
                a[:, q, :] = s[:, None] * rp + c[:, None] * rq
                # columns p, q
                cp = a[:, :, p].copy()
                cq = a[:, :, q].copy()
                a[:, :, p] = c[:, None] * cp - s[:, None] * cq
                a[:, :, q] = s[:, None] * cp + c[:, None] * cq
                a[:, p, q] = np.where(active, 0.0, a[:, p, q])
                a[:, q, p] = a[:, p, q]
                if want_vectors:
                    vp = vecs[:, :, p].copy()
                    vq = vecs[:, :, q].copy()
                    vecs[:, :, p] = c[:, None] * vp - s[:, None] * vq
                    vecs[:, :, q] = s[:, None] * vp + c[:, None] * vq
    raise SolverError(
        f"Jacobi eigensolver did not converge within {JACOBI_MAX_SWEEPS} sweeps"
    )


def _eigvals_numpy(mat: np.ndarray) -> np.ndarray:
    vals, _, _ = _jacobi_batch_numpy(mat[None, :, :], want_vectors=False)
    return vals[0]


def _eigh_numpy(mat: np.ndarray):
    vals, vecs, _ = _jacobi_batch_numpy(mat[None, :, :], want_vectors=True)
    return vals[0], vecs[0]


def _eigvals_batch_numpy(mats: np.ndarray) -> np.ndarray:
    vals, _, _ = _jacobi_batch_numpy(mats, want_vectors=False)
    return vals


# ---------------------------------------------------------------------------
# numba twin
# ---------------------------------------------------------------------------

_backend = "numpy"
_eigvals_numba = None
_eigh_numba = None
_eigvals_batch_numba = None

if _requested_backend() in ("auto", "numba"):
    try:
        from numba import njit

        @njit(cache=True, nogil=True)
        def _jacobi_core_nb(a, v, want_vectors, tol, max_sweeps):  # pragma: no cover
            n = a.shape[0]
            if n == 1:
                return 0
            for sweep in range(max_sweeps):
                off = 0.0
                for i in range(n - 1):
                    for j in range(i + 1, n):
                        off += a[i, j] * a[i, j]
                if np.sqrt(2.0 * off) <= tol:
                    return sweep
                for p in range(n - 1):
                    for q in range(p + 1, n):
                        apq = a[p, q]
                        if apq == 0.0:
                            continue
                        tau = (a[q, q] - a[p, p]) / (2.0 * apq)
                        if tau == 0.0:
                            t = 1.0
                        elif tau > 0.0:
                            t = 1.0 / (tau + np.hypot(1.0, tau))
                        else:
                            t = -1.0 / (-tau + np.hypot(1.0, tau))
                        c = 1.0 / np.sqrt(1.0 + t * t)
                        s = t * c
                        for k in range(n):
                            akp = a[p, k]
                            akq = a[q, k]
                            a[p, k] = c * akp - s * akq
                            a[q, k] = s * akp + c * akq
                        for k in range(n):
                            akp = a[k, p]
                            akq = a[k, q]
                            a[k, p] = c * akp - s * akq
                            a[k, q] = s * akp + c * akq
                        a[p, q] = 0.0
                        a[q, p] = 0.0
                        if want_vectors:
                            for k in range(n):
                                vkp = v[k, p]
                                vkq = v[k, q]
                                v[k, p] = c * vkp - s * vkq
                                v[k, q] = s * vkp + c * vkq
            off = 0.0
            for i in range(n - 1):
                for j in range(i + 1, n):
                    off += a[i, j] * a[i, j]
            if np.sqrt(2.0 * off) <= tol:
                return max_sweeps
            return -1

        @njit(cache=True, nogil=True)
        def _eigvals_batch_core_nb(mats, tols, max_sweeps):  # pragma: no cover
            m = mats.shape[0]
            n = mats.shape[1]
            out = np.empty((m, n))
            dummy = np.empty((1, 1))
            ok = True
            for i in range(m):
                a = mats[i].copy()
                status = _jacobi_core_nb(a, dummy, False, tols[i], max_sweeps)
                if status < 0:
                    ok = False
                vals = np.empty(n)
                for k in range(n):
                    vals[k] = a[k, k]
                out[i] = np.sort(vals)
            return out, ok

        def _eigvals_nb(mat: np.ndarray) -> np.ndarray:
            a = np.array(mat, dtype=float)
            tol = JACOBI_TOL * (1.0 + np.sqrt((a * a).sum()))
            status = _jacobi_core_nb(a, np.empty((1, 1)), False, tol, JACOBI_MAX_SWEEPS)
            if status < 0:
                raise SolverError(
                    f"Jacobi eigensolver did not converge within {JACOBI_MAX_SWEEPS} sweeps"
                )
            return np.sort(np.diag(a))

        def _eigh_nb(mat: np.ndarray):
            a = np.array(mat, dtype=float)
            n = a.shape[0]
            v = np.eye(n)
            tol = JACOBI_TOL * (1.0 + np.sqrt((a * a).sum()))
            status = _jacobi_core_nb(a, v, True, tol, JACOBI_MAX_SWEEPS)
            if status < 0:
                raise SolverError(
                    f"Jacobi eigensolver did not converge within {JACOBI_MAX_SWEEPS} sweeps"
                )
            diag = np.diag(a)
            order = np.argsort(diag)
            return diag[order], v[:, order]

        def _eigvals_batch_nb(mats: np.ndarray) -> np.ndarray:
            mats = np.asarray(mats, dtype=float)
            tols = JACOBI_TOL * (1.0 + np.sqrt((mats * mats).sum(axis=(1, 2))))
            vals, ok = _eigvals_batch_core_nb(mats, tols, JACOBI_MAX_SWEEPS)
            if not ok:
                raise SolverError(
                    f"Jacobi eigensolver did not converge within {JACOBI_MAX_SWEEPS} sweeps"
                )
            return vals

        _eigvals_numba = _eigvals_nb
        _eigh_numba = _eigh_nb
        _eigvals_batch_numba = _eigvals_batch_nb
        _backend = "numba"
    except ImportError:
        if _requested_backend() == "numba":
            raise
        _backend = "numpy"


def backend_name() -> str:
    return _backend


def eigvals_ascending(mat: np.ndarray) -> np.ndarray:
    """Ascending eigenvalues of one symmetric matrix."""
    if _backend == "numba":
        return _eigvals_numba(mat)
    return _eigvals_numpy(np.asarray(mat, dtype=float))


def eigh_ascending(mat: np.ndarray):
    """(values, vectors) with ascending values; columns of `vectors` match."""
    if _backend == "numba":
        return _eigh_numba(mat)
    return _eigh_numpy(np.asarray(mat, dtype=float))


def eigvals_batch(mats: np.ndarray) -> np.ndarray:
    """Ascending eigenvalues for a stack of symmetric matrices (m, n, n)."""
    mats = np.asarray(mats, dtype=float)
    if _backend == "numba":
        return _eigvals_batch_numba(mats)
    return _eigvals_batch_numpy(mats)


# exposed for the backend benchmark
IMPLEMENTATIONS = {
    "numpy": {
        "eigvals": _eigvals_numpy,
        "eigvals_batch": _eigvals_batch_numpy,
    },
    "numba": None
    if _eigvals_numba is None
    else {
        "eigvals": _eigvals_numba,
        "eigvals_batch": _eigvals_batch_numba,
    },
}
