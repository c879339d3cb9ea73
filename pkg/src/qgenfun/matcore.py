"""Dense complex matrix primitives.

Hermitian eigendecomposition, square roots of positive semidefinite
matrices (spectral for any size, closed form for 2x2) and density-matrix
validation.
"""

import cmath
from dataclasses import dataclass

import numpy as np

from .errors import (
    ConvergenceFailure,
    DegenerateBranch,
    NegativeEigenvalue,
    NonHermitianInput,
    NotHermitian,
    NotPositiveSemidefinite,
    TraceNotOne,
    WrongDimension,
)

HERMITIAN_TOL = 1e-10
CLAMP_TOL = 1e-10
T_MIN = 1e-12


def as_matrix(m):
    """Coerce to a finite square complex ndarray."""
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise WrongDimension(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    return a


def hermitian_defect(m):
    return float(np.max(np.abs(m - m.conj().T))) if m.size else 0.0


@dataclass(frozen=True)
class HermitianEigen:
    values: np.ndarray
    vectors: np.ndarray

    def reconstruct(self):
        v = self.vectors
        return (v * self.values) @ v.conj().T


def eig_hermitian(h, tol=HERMITIAN_TOL):
    """Eigendecomposition of a Hermitian matrix, eigenvalues ascending.

    The input is symmetrized as ``(H + H^dagger)/2`` before the solver runs;
    an asymmetry larger than ``tol * max(1, |H|_F)`` is rejected.
    """
    h = as_matrix(h)
    scale = max(1.0, float(np.linalg.norm(h)))
    if hermitian_defect(h) > tol * scale:
        raise NonHermitianInput(f"asymmetry {hermitian_defect(h):.3e} exceeds {tol:.1e}")
    h = 0.5 * (h + h.conj().T)
    try:
        values, vectors = np.linalg.eigh(h)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise ConvergenceFailure(str(exc)) from exc
    return HermitianEigen(values=values, vectors=vectors)


def sqrt_psd(m, clamp_tol=CLAMP_TOL):
    """Principal square root ``V diag(sqrt(max(l, 0))) V^dagger``.

    Eigenvalues in ``[-clamp_tol, 0)`` are treated as rounding and clamped;
    anything more negative raises :class:`NotPositiveSemidefinite`.
    """
    eig = eig_hermitian(m)
    lo = eig.values[0] if eig.values.size else 0.0
    if lo < -clamp_tol:
        raise NotPositiveSemidefinite(f"smallest eigenvalue {lo:.3e} < -{clamp_tol:.1e}")
    root = np.sqrt(np.clip(eig.values, 0.0, None))
    v = eig.vectors
    out = (v * root) @ v.conj().T
    return 0.5 * (out + out.conj().T)


def sqrt_2x2(m, t_min=T_MIN):
    """Closed-form square root of a 2x2 matrix on the all-positive branch.

    With ``s = sqrt(AD - BC)`` and ``t = sqrt(A + D + 2s)`` the root is
    ``(M + s I) / t``. Raises :class:`DegenerateBranch` when ``|t| <= t_min``
    (e.g. ``M`` close to zero); callers fall back to :func:`sqrt_psd`.
    """
    m = as_matrix(m)
    if m.shape != (2, 2):
        raise WrongDimension(f"sqrt_2x2 needs a 2x2 matrix, got {m.shape}")
    a, b = complex(m[0, 0]), complex(m[0, 1])
    c, d = complex(m[1, 0]), complex(m[1, 1])
    s = cmath.sqrt(a * d - b * c)
    t = cmath.sqrt(a + d + 2.0 * s)
    if abs(t) <= t_min:
        raise DegenerateBranch(f"|t| = {abs(t):.3e} <= {t_min:.1e}")
    return np.array([[a + s, b], [c, d + s]], dtype=complex) / t


def sqrt_2x2_or_psd(m, t_min=T_MIN, clamp_tol=CLAMP_TOL):
    try:
        return sqrt_2x2(m, t_min=t_min)
    except DegenerateBranch:
        return sqrt_psd(m, clamp_tol=clamp_tol)


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian, unit-trace, positive semidefinite matrix."""

    mat: np.ndarray

    @property
    def n(self):
        return self.mat.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self.mat if dtype is None else self.mat.astype(dtype)


def validate_density(m, herm_tol=1e-12, trace_tol=1e-12, eig_tol=1e-10):
    """Check the density-matrix invariants and wrap ``m``.

    Raises the subclass of :class:`~qgenfun.errors.DensityError` naming the
    first violated invariant.
    """
    if isinstance(m, DensityMatrix):
        m = m.mat
    m = as_matrix(m)
    defect = hermitian_defect(m)
    if defect > herm_tol:
        raise NotHermitian(f"Hermitian defect {defect:.3e} > {herm_tol:.1e}")
    tr = np.trace(m)
    if abs(tr - 1.0) > trace_tol:
        raise TraceNotOne(f"trace {tr.real:.15g}{tr.imag:+.3g}j")
    lo = float(np.linalg.eigvalsh(0.5 * (m + m.conj().T))[0])
    if lo < -eig_tol:
        raise NegativeEigenvalue(f"smallest eigenvalue {lo:.3e}")
    return DensityMatrix(mat=m)
