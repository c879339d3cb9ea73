"""Two-point generating functions.

Uhlmann fidelity between density matrices, the ket overlap with its modulus
and phase, and the classical divergence ``sum_i sqrt(p_i p'_i)``. Every
function of two parameter points here is evaluated as ``f(x, x')`` with the
primed point in the second slot.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    BlochOutOfBall,
    DimensionMismatch,
    DomainError,
    GaugePole,
    NotNormalized,
    UnsupportedKind,
)
from .matcore import DensityMatrix, as_matrix, sqrt_psd
from .states import POLE_TOL

OVERSHOOT_TOL = 1e-9
NORM_TOL = 1e-10

KINDS = (
    "fidelity",
    "log_fidelity",
    "overlap_modulus",
    "overlap_log_modulus",
    "overlap_phase",
    "overlap_neg2im",
    "divergence",
    "log_divergence",
)


def _clamp_unit(value, what):
    if value > 1.0 + OVERSHOOT_TOL:
        raise DomainError(f"{what} {value!r} exceeds 1 beyond rounding")
    return min(max(value, 0.0), 1.0)


def _mat(rho):
    return rho.mat if isinstance(rho, DensityMatrix) else as_matrix(rho)


def uhlmann_fidelity(rho, rho_prime):
    """``Tr sqrt(sqrt(rho) rho' sqrt(rho))`` for any dimension.

    Evaluated as the trace norm of ``sqrt(rho) sqrt(rho')``, which is the same
    quantity but stays accurate for rank-deficient states: the eigenvalues of
    ``sqrt(rho) rho' sqrt(rho)`` would carry rounding noise of order 1e-16
    whose square root pollutes the result at 1e-8.
    """
    a = _mat(rho)
    b = _mat(rho_prime)
    if a.shape != b.shape:
        raise DimensionMismatch(f"{a.shape} vs {b.shape}")
    sv = np.linalg.svd(sqrt_psd(a) @ sqrt_psd(b), compute_uv=False)
    return _clamp_unit(float(np.sum(sv)), "fidelity")


def fidelity_2x2_closed(r, r_prime):
    """Closed-form qubit fidelity from Bloch vectors (all-positive branch)."""
    ax, ay, az = (float(v) for v in r)
    bx, by, bz = (float(v) for v in r_prime)
    na = ax * ax + ay * ay + az * az
    nb = bx * bx + by * by + bz * bz
    if na > 1.0 + 2e-9 or nb > 1.0 + 2e-9:
        raise BlochOutOfBall(f"|r|^2 = {max(na, nb):.12g} > 1")
    qa = math.sqrt(max(1.0 - na, 0.0))
    qb = math.sqrt(max(1.0 - nb, 0.0))
    inner = 0.5 * (1.0 + ax * bx + ay * by + az * bz) + 0.5 * qa * qb
    return _clamp_unit(math.sqrt(max(inner, 0.0)), "fidelity")


@dataclass(frozen=True)
class OverlapValue:
    c: complex

    @property
    def modulus(self):
        return abs(self.c)

    @property
    def phase(self):
        """Argument in ``(-pi, pi]``."""
        phi = math.atan2(self.c.imag, self.c.real)
        return math.pi if phi == -math.pi else phi


def pure_overlap(psi_prime, psi, tol=NORM_TOL):
    """``<psi'|psi>``; both kets must be normalized."""
    a = np.asarray(psi_prime, dtype=complex).ravel()
    b = np.asarray(psi, dtype=complex).ravel()
    if a.shape != b.shape:
        raise DimensionMismatch(f"{a.shape} vs {b.shape}")
    for v in (a, b):
        if abs(np.vdot(v, v).real - 1.0) > tol:
            raise NotNormalized(f"<psi|psi> = {np.vdot(v, v).real!r}")
    return OverlapValue(complex(np.vdot(a, b)))


def dirac_overlap_closed(n, n_prime, pole_tol=POLE_TOL):
    """Overlap data of two-level ground states from unit vectors ``n``, ``n'``.

    Returns ``(modulus, -2 phi, -2 Im<psi'|psi>)`` for kets in the gauge
    ``(n3 - 1, n1 + i n2)/sqrt(2(1 - n3))``. The phase uses ``atan2`` so it
    holds on the whole sphere minus the pole, not just where the real part
    of the overlap is positive.
    """
    n = np.asarray(n, dtype=float)
    m = np.asarray(n_prime, dtype=float)
    dot = float(n @ m)
    modulus = math.sqrt(max(0.5 * (1.0 + dot), 0.0))
    if n[2] >= 1.0 - pole_tol or m[2] >= 1.0 - pole_tol:
        raise GaugePole("phase branch undefined at n3 = 1")
    num = m[0] * n[1] - m[1] * n[0]
    den = 1.0 - n[2] - m[2] + dot
    phi = math.atan2(num, den)
    if phi == -math.pi:
        phi = math.pi
    neg2im = (m[1] * n[0] - m[0] * n[1]) / (math.sqrt(1.0 - m[2]) * math.sqrt(1.0 - n[2]))
    return modulus, -2.0 * phi, neg2im


def classical_divergence(p, p_prime):
    """``sum_i sqrt(p_i p'_i)`` between two probability vectors."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(p_prime, dtype=float)
    if p.shape != q.shape:
        raise DimensionMismatch(f"{p.shape} vs {q.shape}")
    return _clamp_unit(float(np.sum(np.sqrt(np.clip(p, 0, None) * np.clip(q, 0, None)))),
                       "divergence")


def _log(value, kind):
    if value <= 0.0:
        raise DomainError(f"log of {kind} = {value!r}")
    return math.log(value)


def fidelity(family, x, x_prime):
    """Best available fidelity oracle for ``family`` between ``x`` and ``x'``."""
    if family.has_bloch:
        return fidelity_2x2_closed(family.bloch(x), family.bloch(x_prime))
    if family.has_ket:
        return _clamp_unit(abs(np.vdot(family.ket(x_prime), family.ket(x))), "fidelity")
    return uhlmann_fidelity(family.rho(x), family.rho(x_prime))


def genfun_eval(family, x, x_prime, kind):
    """Evaluate the generating function ``kind`` at the point pair ``(x, x')``.

    ``overlap_*`` kinds use ``<psi(x')|psi(x)>`` and need a ket path;
    divergence kinds need a real-ket family.
    """
    if kind not in KINDS:
        raise UnsupportedKind(f"unknown kind {kind!r}")
    if kind in ("fidelity", "log_fidelity"):
        f = fidelity(family, x, x_prime)
        return f if kind == "fidelity" else _log(f, "fidelity")
    if kind.startswith("overlap"):
        if not family.has_ket:
            raise UnsupportedKind(f"{kind} needs a pure family with a ket path")
        c = complex(np.vdot(family.ket(x_prime), family.ket(x)))
        if kind == "overlap_modulus":
            return abs(c)
        if kind == "overlap_log_modulus":
            return _log(abs(c), "overlap modulus")
        if kind == "overlap_phase":
            return OverlapValue(c).phase
        return -2.0 * c.imag
    if not family.real_ket:
        raise UnsupportedKind(f"{kind} needs a real-ket family")
    p = np.abs(family.ket(x)) ** 2
    q = np.abs(family.ket(x_prime)) ** 2
    div = classical_divergence(p, q)
    return div if kind == "divergence" else _log(div, "divergence")


def two_slot(family, kind):
    """``f(x, x')`` closure over :func:`genfun_eval` for the stencil code."""
    def f(x, x_prime):
        return genfun_eval(family, x, x_prime, kind)
    f.kind = kind
    return f
