"""Direct route to the geometric tensors.

QFIM from the symmetric logarithmic derivative, Bloch-vector closed forms,
the projector form of the quantum geometric tensor for pure states, the
unit-vector forms for two-level Hamiltonians, the classical Fisher matrix of
real wave functions, and Christoffel symbols of the first kind.

Christoffel tensors are stored in the QFIM convention,
``Gamma[l, m, n] = (d_n F_lm + d_m F_ln - d_l F_mn) / 2``; pass
``convention="metric"`` to :meth:`GeometryReport.christoffel_in` for the
version built from ``g = F / 4``.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _kernels
from .errors import (
    GapClosure,
    NotPure,
    PuritySingularity,
    SignFlipAtStencil,
)
from .matcore import eig_hermitian

H_FIRST = 1e-6
H_SECOND = 1e-4
H_SLD = 1e-5
H_PROJECTOR = 1e-5
H_METRIC_FD = 1e-3
RANK_TOL = 1e-10
PURITY_TOL = 1e-8
PURE_DOT_TOL = 1e-6
KET_FLOOR = 1e-8
GAP_MIN = 1e-10

CONVENTIONS = ("qfim", "metric")


@dataclass(frozen=True)
class GeometryReport:
    at: np.ndarray
    qfim: np.ndarray
    method: str
    berry: Optional[np.ndarray] = None
    qgt: Optional[np.ndarray] = None
    christoffel: Optional[np.ndarray] = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def metric(self):
        return self.qfim / 4.0

    def christoffel_in(self, convention="qfim"):
        if self.christoffel is None:
            return None
        return convert_christoffel(self.christoffel, convention)


def convert_christoffel(gamma, convention="qfim"):
    """Rescale a QFIM-convention Christoffel tensor to ``convention``."""
    if convention not in CONVENTIONS:
        raise ValueError(f"convention must be one of {CONVENTIONS}")
    return gamma if convention == "qfim" else gamma / 4.0


def _unit(dim, mu):
    e = np.zeros(dim)
    e[mu] = 1.0
    return e


def first_derivatives(fn, x, h):
    """Central differences ``d_mu fn`` stacked along axis 0."""
    x = np.asarray(x, dtype=float)
    return np.stack([(np.asarray(fn(x + h * _unit(x.size, m)))
                      - np.asarray(fn(x - h * _unit(x.size, m)))) / (2 * h)
                     for m in range(x.size)])


def second_derivatives(fn, x, h):
    """Central second differences ``d_mu d_nu fn``, shape ``(D, D, ...)``."""
    x = np.asarray(x, dtype=float)
    dim = x.size
    f0 = np.asarray(fn(x))
    out = np.empty((dim, dim) + f0.shape, dtype=f0.dtype)
    for m in range(dim):
        em = h * _unit(dim, m)
        out[m, m] = (np.asarray(fn(x + em)) - 2 * f0 + np.asarray(fn(x - em))) / h ** 2
        for n in range(m + 1, dim):
            en = h * _unit(dim, n)
            val = (np.asarray(fn(x + em + en)) - np.asarray(fn(x + em - en))
                   - np.asarray(fn(x - em + en)) + np.asarray(fn(x - em - en))) / (4 * h ** 2)
            out[m, n] = val
            out[n, m] = val
    return out


def _sym(m):
    return 0.5 * (m + m.T)


# ---------------------------------------------------------------------------
# SLD route

@dataclass(frozen=True)
class SLDMatrix:
    L: np.ndarray
    dropped: int


def sld(family, x, mu, h=H_SLD, rank_tol=RANK_TOL):
    """Symmetric logarithmic derivative along ``mu``.

    Built in the eigenbasis of ``rho(x)`` as ``2 <i|d rho|j> / (l_i + l_j)``
    with a central-difference ``d rho``; elements with ``l_i + l_j <= rank_tol``
    are set to zero and counted in ``dropped``.
    """
    x = family.point(x)
    e = h * _unit(x.size, mu)
    drho = (family.rho(x + e) - family.rho(x - e)) / (2 * h)
    eig = eig_hermitian(family.rho(x))
    v = eig.vectors
    lam = eig.values
    d_eig = v.conj().T @ drho @ v
    denom = lam[:, None] + lam[None, :]
    keep = denom > rank_tol
    l_eig = np.where(keep, 2.0 * d_eig / np.where(keep, denom, 1.0), 0.0)
    L = v @ l_eig @ v.conj().T
    return SLDMatrix(L=0.5 * (L + L.conj().T), dropped=int(np.count_nonzero(~keep)))


def qfim_sld(family, x, h=H_SLD, rank_tol=RANK_TOL):
    """QFIM ``F_mn = Tr rho {L_m, L_n} / 2`` from the SLDs."""
    x = family.point(x)
    rho = family.rho(x)
    slds = [sld(family, x, m, h=h, rank_tol=rank_tol) for m in range(x.size)]
    dim = x.size
    F = np.empty((dim, dim))
    for m in range(dim):
        for n in range(m, dim):
            anti = slds[m].L @ slds[n].L + slds[n].L @ slds[m].L
            F[m, n] = F[n, m] = 0.5 * np.trace(rho @ anti).real
    dropped = slds[0].dropped if slds else 0
    return GeometryReport(at=x, qfim=F, method="sld",
                          diagnostics={"sld_dropped_elements": dropped})


# ---------------------------------------------------------------------------
# Bloch closed forms

def _bloch_data(family, x, h, purity_tol):
    r = np.asarray(family.bloch(x), dtype=float)
    dr = first_derivatives(family.bloch, x, h)
    gap = 1.0 - float(r @ r)
    proj = dr @ r
    pure = gap <= 2 * purity_tol  # |r| >= 1 - purity_tol
    if pure and np.max(np.abs(proj)) > PURE_DOT_TOL:
        raise PuritySingularity(
            f"|r| = 1 within {purity_tol:.0e} but |r . dr| = {np.max(np.abs(proj)):.3e}")
    return r, dr, gap, proj, pure


def qfim_bloch(family, x, h=H_FIRST, purity_tol=PURITY_TOL):
    """``F_mn = dr_m . dr_n + (r . dr_m)(r . dr_n) / (1 - |r|^2)``.

    Pure points (``|r| >= 1 - purity_tol``) drop the second term after checking
    that ``r . dr`` vanishes there.
    """
    x = family.point(x)
    r, dr, gap, proj, pure = _bloch_data(family, x, h, purity_tol)
    F = _kernels.bloch_qfim_batch(r[None, :], dr[None, :, :], 2 * purity_tol)[0]
    return GeometryReport(at=x, qfim=_sym(F), method="bloch", diagnostics={"pure": bool(pure)})


def christoffel_bloch(family, x, h=H_SECOND, h1=H_FIRST, purity_tol=PURITY_TOL):
    """Christoffel tensor of the Bloch-form QFIM.

    ``Gamma_lmn = dr_l . ddr_mn + a_l b_mn / (1 - r^2) + a_l a_m a_n / (1 - r^2)^2``
    with ``a_l = r . dr_l`` and ``b_mn = dr_m . dr_n + r . ddr_mn``. The cubic
    term enters with a plus sign, as differentiating ``1/(1 - r^2)`` gives.
    """
    x = family.point(x)
    r, dr, gap, a, pure = _bloch_data(family, x, h1, purity_tol)
    ddr = second_derivatives(family.bloch, x, h)
    gamma = np.einsum("li,mni->lmn", dr, ddr)
    if not pure:
        b = np.einsum("mi,ni->mn", dr, dr) + np.einsum("i,mni->mn", r, ddr)
        gamma = gamma + np.einsum("l,mn->lmn", a, b) / gap
        gamma = gamma + np.einsum("l,m,n->lmn", a, a, a) / gap ** 2
    return 0.5 * (gamma + gamma.transpose(0, 2, 1))


# ---------------------------------------------------------------------------
# pure states

def _projector_fn(family):
    if family.has_ket:
        def proj(x):
            psi = family.ket(x)
            return np.outer(psi, psi.conj())
        return proj

    def proj(x):
        rho = family.rho(x)
        lam = np.linalg.eigvalsh(rho)
        if np.max(np.minimum(np.abs(lam), np.abs(lam - 1.0))) > 1e-8:
            raise NotPure(f"eigenvalues {lam} are not in {{0, 1}}")
        return rho
    return proj


def qgt_pure(family, x, h=H_PROJECTOR):
    """Quantum geometric tensor ``T_mn = Tr[dP_m (1 - P) dP_n]`` of a pure family.

    The projector form is gauge invariant; the metric is ``Re T`` and the Berry
    curvature ``-2 Im T``.
    """
    x = family.point(x)
    proj = _projector_fn(family)
    P = proj(x)
    dP = first_derivatives(proj, x, h)
    Q = np.eye(P.shape[0]) - P
    T = np.einsum("mij,jk,nki->mn", dP, Q, dP)
    g = _sym(T.real)
    berry = -2.0 * T.imag
    berry = 0.5 * (berry - berry.T)
    return GeometryReport(at=x, qfim=4.0 * g, method="projector",
                          berry=berry, qgt=g - 0.5j * berry)


def _unit_dvec(family, gap_min):
    def n(x):
        d = np.asarray(family.dvec(x), dtype=float)
        dn = float(np.linalg.norm(d))
        if dn <= gap_min:
            raise GapClosure(f"|d| = {dn:.3e} at x = {np.asarray(x).tolist()}")
        return d / dn
    return n


def dirac_geometry_closed(family, x, h=H_FIRST, h2=H_SECOND, gap_min=GAP_MIN):
    """Ground-state geometry of ``H = d . sigma`` from the unit vector ``n = d/|d|``.

    ``g = dn . dn / 4``, ``Omega = n . (dn x dn) / 2`` and (QFIM convention)
    ``Gamma_lmn = dn_l . ddn_mn``. For thermal families this is the ``T = 0``
    geometry of the same Hamiltonian.
    """
    x = family.point(x)
    n_fn = _unit_dvec(family, gap_min)
    n = n_fn(x)
    dn = first_derivatives(n_fn, x, h)
    ddn = second_derivatives(n_fn, x, h2)
    g = 0.25 * dn @ dn.T
    berry = 0.5 * np.einsum("i,mni->mn", n, np.cross(dn[:, None, :], dn[None, :, :]))
    berry = 0.5 * (berry - berry.T)
    gamma = np.einsum("li,mni->lmn", dn, ddn)
    gamma = 0.5 * (gamma + gamma.transpose(0, 2, 1))
    return GeometryReport(at=x, qfim=4.0 * _sym(g), method="closed_form",
                          berry=berry, qgt=g - 0.5j * berry, christoffel=gamma)


def classical_fim(family, x, h=H_FIRST, floor=KET_FLOOR):
    """Classical Fisher matrix ``I_mn = 4 sum_i d_m|psi_i| d_n|psi_i|`` of a real-ket family."""
    if not family.real_ket:
        raise ValueError(f"family {family.name!r} is not a real-ket family")
    x = family.point(x)

    def amp(y):
        a = np.abs(family.ket(y))
        if np.min(a) < floor:
            raise SignFlipAtStencil(
                f"|psi_i| = {np.min(a):.3e} < {floor:.0e} at x = {np.asarray(y).tolist()}")
        return a

    amp(x)
    da = first_derivatives(amp, x, h)
    return GeometryReport(at=x, qfim=_sym(4.0 * da @ da.T), method="classical")


# ---------------------------------------------------------------------------
# dispatch and Christoffel symbols from any QFIM route

QFIM_ROUTES = ("sld", "bloch", "closed_form", "projector", "genfun", "classical")


def available_qfim_routes(family):
    routes = ["sld"]
    if family.has_bloch:
        routes.append("bloch")
    if family.has_dvec and family.is_pure:
        routes.append("closed_form")
    if family.is_pure:
        routes.append("projector")
    routes.append("genfun")
    if family.real_ket:
        routes.append("classical")
    return routes


def default_qfim_route(family):
    if family.has_bloch:
        return "bloch"
    if family.has_dvec and family.is_pure:
        return "closed_form"
    if family.is_pure:
        return "projector"
    return "sld"


def qfim(family, x, route=None, **kw):
    """QFIM at ``x`` by the named route (default: best direct route)."""
    route = route or default_qfim_route(family)
    if route == "sld":
        return qfim_sld(family, x, **kw)
    if route == "bloch":
        return qfim_bloch(family, x, **kw)
    if route == "closed_form":
        return dirac_geometry_closed(family, x, **kw)
    if route == "projector":
        return qgt_pure(family, x, **kw)
    if route == "classical":
        return classical_fim(family, x, **kw)
    if route == "genfun":
        from .numdiff import qfim_from_genfun
        return qfim_from_genfun(family, x, **kw)
    raise ValueError(f"unknown QFIM route {route!r}; expected one of {QFIM_ROUTES}")


def christoffel_from_metric(family, x, h=H_METRIC_FD, route=None):
    """``Gamma_lmn = (d_n F_lm + d_m F_ln - d_l F_mn) / 2`` by central differences of a QFIM route."""
    x = family.point(x)
    dF = first_derivatives(lambda y: qfim(family, y, route=route).qfim, x, h)
    gamma = 0.5 * (np.einsum("nlm->lmn", dF) + np.einsum("mln->lmn", dF) - dF)
    return 0.5 * (gamma + gamma.transpose(0, 2, 1))


def geometry_report(family, x, route=None, christoffel=True):
    """Everything the direct route can say about ``family`` at ``x``."""
    x = family.point(x)
    base = qfim(family, x, route=route)
    berry = qgt = None
    if family.is_pure:
        pg = qgt_pure(family, x)
        berry, qgt = pg.berry, pg.qgt
    gamma = None
    if christoffel:
        gamma = (christoffel_bloch(family, x) if family.has_bloch
                 else christoffel_from_metric(family, x, route=route))
    return GeometryReport(at=x, qfim=base.qfim, method=base.method, berry=berry, qgt=qgt,
                          christoffel=gamma, diagnostics=dict(base.diagnostics))
