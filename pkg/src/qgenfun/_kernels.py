"""Batched numeric kernels with a numba path and a pure-numpy fallback.

The numba kernels are used when numba imports cleanly and the environment
variable ``QGENFUN_DISABLE_NUMBA`` is unset (or set to ``0``/``false``).
Both variants are always importable as ``numpy_kernels`` and
``numba_kernels`` (the latter is ``None`` without numba) so the benchmark
and the tests can compare them directly.
"""

import math
import os
from types import SimpleNamespace

import numpy as np


def _flag(name):
    return os.environ.get(name, "").strip().lower() not in ("", "0", "false", "no")


# ---------------------------------------------------------------------------
# numpy reference path

def _np_bloch_fidelity_pairs(ra, rb):
    ra = np.asarray(ra, dtype=float)
    rb = np.asarray(rb, dtype=float)
    qa = np.sqrt(np.clip(1.0 - np.einsum("ij,ij->i", ra, ra), 0.0, None))
    qb = np.sqrt(np.clip(1.0 - np.einsum("ij,ij->i", rb, rb), 0.0, None))
    inner = 0.5 * (1.0 + np.einsum("ij,ij->i", ra, rb)) + 0.5 * qa * qb
    return np.sqrt(np.clip(inner, 0.0, None))


def _np_bloch_fidelity_matrix(ra, rb):
    ra = np.asarray(ra, dtype=float)
    rb = np.asarray(rb, dtype=float)
    qa = np.sqrt(np.clip(1.0 - np.einsum("ij,ij->i", ra, ra), 0.0, None))
    qb = np.sqrt(np.clip(1.0 - np.einsum("ij,ij->i", rb, rb), 0.0, None))
    inner = 0.5 * (1.0 + ra @ rb.T) + 0.5 * np.outer(qa, qb)
    return np.sqrt(np.clip(inner, 0.0, None))


def _np_sqrt2x2_batch(m, t_min):
    m = np.asarray(m, dtype=complex)
    a = m[:, 0, 0]
    b = m[:, 0, 1]
    c = m[:, 1, 0]
    d = m[:, 1, 1]
    s = np.sqrt(a * d - b * c)
    t = np.sqrt(a + d + 2.0 * s)
    ok = np.abs(t) > t_min
    safe_t = np.where(ok, t, 1.0)
    out = np.empty_like(m)
    out[:, 0, 0] = (a + s) / safe_t
    out[:, 0, 1] = b / safe_t
    out[:, 1, 0] = c / safe_t
    out[:, 1, 1] = (d + s) / safe_t
    out[~ok] = np.nan
    return out, ok


def _np_bloch_qfim_batch(r, dr, purity_tol):
    # r: (N, 3); dr: (N, D, 3)
    r = np.asarray(r, dtype=float)
    dr = np.asarray(dr, dtype=float)
    first = np.einsum("nai,nbi->nab", dr, dr)
    proj = np.einsum("ni,nai->na", r, dr)
    gap = 1.0 - np.einsum("ni,ni->n", r, r)
    mixed = gap > purity_tol
    safe_gap = np.where(mixed, gap, 1.0)
    second = np.einsum("na,nb->nab", proj, proj) / safe_gap[:, None, None]
    second[~mixed] = 0.0
    return first + second


numpy_kernels = SimpleNamespace(
    name="numpy",
    bloch_fidelity_pairs=_np_bloch_fidelity_pairs,
    bloch_fidelity_matrix=_np_bloch_fidelity_matrix,
    sqrt2x2_batch=_np_sqrt2x2_batch,
    bloch_qfim_batch=_np_bloch_qfim_batch,
)


# ---------------------------------------------------------------------------
# numba path

def _build_numba_kernels():
    import numba

    njit = numba.njit(cache=False, fastmath=False)

    @njit
    def _fid(ax, ay, az, bx, by, bz):
        qa = 1.0 - (ax * ax + ay * ay + az * az)
        qb = 1.0 - (bx * bx + by * by + bz * bz)
        if qa < 0.0:
            qa = 0.0
        if qb < 0.0:
            qb = 0.0
        inner = 0.5 * (1.0 + ax * bx + ay * by + az * bz) + 0.5 * math.sqrt(qa) * math.sqrt(qb)
        if inner < 0.0:
            inner = 0.0
        return math.sqrt(inner)

    @njit
    def bloch_fidelity_pairs(ra, rb):
        n = ra.shape[0]
        out = np.empty(n)
        for i in range(n):
            out[i] = _fid(ra[i, 0], ra[i, 1], ra[i, 2], rb[i, 0], rb[i, 1], rb[i, 2])
        return out

    @njit
    def bloch_fidelity_matrix(ra, rb):
        n = ra.shape[0]
        m = rb.shape[0]
        out = np.empty((n, m))
        for i in range(n):
            for j in range(m):
                out[i, j] = _fid(ra[i, 0], ra[i, 1], ra[i, 2], rb[j, 0], rb[j, 1], rb[j, 2])
        return out

    @njit
    def sqrt2x2_batch(m, t_min):
        n = m.shape[0]
        out = np.empty_like(m)
        ok = np.empty(n, dtype=np.bool_)
        for i in range(n):
            a = m[i, 0, 0]
            b = m[i, 0, 1]
            c = m[i, 1, 0]
            d = m[i, 1, 1]
            s = np.sqrt(a * d - b * c)
            t = np.sqrt(a + d + 2.0 * s)
            if abs(t) > t_min:
                ok[i] = True
                out[i, 0, 0] = (a + s) / t
                out[i, 0, 1] = b / t
                out[i, 1, 0] = c / t
                out[i, 1, 1] = (d + s) / t
            else:
                ok[i] = False
                for p in range(2):
                    for q in range(2):
                        out[i, p, q] = np.nan
        return out, ok

    @njit
    def bloch_qfim_batch(r, dr, purity_tol):
        n = dr.shape[0]
        dim = dr.shape[1]
        out = np.zeros((n, dim, dim))
        proj = np.empty(dim)
        for i in range(n):
            gap = 1.0 - (r[i, 0] * r[i, 0] + r[i, 1] * r[i, 1] + r[i, 2] * r[i, 2])
            for a in range(dim):
                proj[a] = r[i, 0] * dr[i, a, 0] + r[i, 1] * dr[i, a, 1] + r[i, 2] * dr[i, a, 2]
            for a in range(dim):
                for b in range(dim):
                    v = dr[i, a, 0] * dr[i, b, 0] + dr[i, a, 1] * dr[i, b, 1] + dr[i, a, 2] * dr[i, b, 2]
                    if gap > purity_tol:
                        v += proj[a] * proj[b] / gap
                    out[i, a, b] = v
        return out

    def _wrap_pairs(ra, rb):
        return bloch_fidelity_pairs(np.ascontiguousarray(ra, dtype=np.float64),
                                    np.ascontiguousarray(rb, dtype=np.float64))

    def _wrap_matrix(ra, rb):
        return bloch_fidelity_matrix(np.ascontiguousarray(ra, dtype=np.float64),
                                     np.ascontiguousarray(rb, dtype=np.float64))

    def _wrap_sqrt(m, t_min):
        return sqrt2x2_batch(np.ascontiguousarray(m, dtype=np.complex128), float(t_min))

    def _wrap_qfim(r, dr, purity_tol):
        return bloch_qfim_batch(np.ascontiguousarray(r, dtype=np.float64),
                                np.ascontiguousarray(dr, dtype=np.float64),
                                float(purity_tol))

    return SimpleNamespace(
        name="numba",
        bloch_fidelity_pairs=_wrap_pairs,
        bloch_fidelity_matrix=_wrap_matrix,
        sqrt2x2_batch=_wrap_sqrt,
        bloch_qfim_batch=_wrap_qfim,
    )


try:
    numba_kernels = _build_numba_kernels()
except ImportError:  # pragma: no cover - numba is an optional accelerator
    numba_kernels = None

NUMBA_AVAILABLE = numba_kernels is not None
NUMBA_ENABLED = NUMBA_AVAILABLE and not _flag("QGENFUN_DISABLE_NUMBA")

active = numba_kernels if NUMBA_ENABLED else numpy_kernels


def backend():
    """Name of the kernel set in use (``"numba"`` or ``"numpy"``)."""
    return active.name


def bloch_fidelity_pairs(ra, rb):
    """Closed-form two-level fidelity for row-paired Bloch vectors, shape (N,)."""
    return active.bloch_fidelity_pairs(np.atleast_2d(ra), np.atleast_2d(rb))


def bloch_fidelity_matrix(ra, rb):
    """Closed-form fidelity for every pair ``(ra[i], rb[j])``, shape (N, M)."""
    return active.bloch_fidelity_matrix(np.atleast_2d(ra), np.atleast_2d(rb))


def sqrt2x2_batch(m, t_min=1e-12):
    """Positive-branch 2x2 square roots; rows with ``|t| <= t_min`` are NaN and flagged."""
    return active.sqrt2x2_batch(np.asarray(m, dtype=complex).reshape(-1, 2, 2), t_min)


def bloch_qfim_batch(r, dr, purity_tol=1e-8):
    return active.bloch_qfim_batch(np.atleast_2d(r), np.asarray(dr, dtype=float), purity_tol)
