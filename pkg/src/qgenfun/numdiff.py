"""Geometry from generating functions by two-slot finite differences.

A generating function is a scalar ``f(x, x')``. Derivatives are taken with
independent stencils in each slot and the coincidence ``x = x'`` is applied
after differencing. Primed indices differentiate the second slot.
"""

import math
from dataclasses import dataclass, field, replace
from itertools import product

import numpy as np

from .errors import (
    FitIllConditioned,
    GaugeNotSmooth,
    OracleFailure,
    PhaseWrap,
    QGeomError,
    UnsupportedKind,
)
from .genfun import two_slot
from .geometry import GeometryReport

PHASE_LIMIT = math.pi / 2
MAX_HALVINGS = 4


@dataclass(frozen=True)
class StencilConfig:
    h2: float = 1e-3
    h3: float = 1e-2
    richardson: bool = True

    def __post_init__(self):
        for name in ("h2", "h3"):
            h = getattr(self, name)
            if not 1e-6 <= h <= 1e-1:
                raise ValueError(f"{name} = {h!r} outside [1e-6, 1e-1]")


DEFAULT_STENCIL = StencilConfig()


def _unit(dim, mu):
    e = np.zeros(dim)
    e[mu] = 1.0
    return e


def _call(gf, x, xp):
    try:
        return gf(x, xp)
    except QGeomError as exc:
        raise OracleFailure(f"oracle failed at x={x.tolist()}, x'={xp.tolist()}: {exc}",
                            point=x.copy(), point_prime=xp.copy(), cause=exc) from exc


def _richardson(fn, h, enabled, order=2):
    """``(2^p D(h/2) - D(h)) / (2^p - 1)`` for an ``O(h^p)`` estimate ``D``."""
    coarse = fn(h)
    if not enabled:
        return coarse
    fine = fn(h / 2)
    w = 2 ** order
    return (w * fine - coarse) / (w - 1)


def stencil_points(x, mu, nu, h):
    """The four ``(x, x', sign)`` triples of the mixed ``d_mu' d_nu`` stencil."""
    x = np.asarray(x, dtype=float)
    eu = h * _unit(x.size, mu)
    ev = h * _unit(x.size, nu)
    return [(x + sv * ev, x + su * eu, su * sv) for sv, su in product((1, -1), repeat=2)]


def _mixed_raw(gf, x, mu, nu, h):
    total = 0.0
    for xs, xps, sign in stencil_points(x, mu, nu, h):
        total += sign * _call(gf, xs, xps)
    return total / (4 * h * h)


def mixed_second(gf, x, mu, nu, cfg=DEFAULT_STENCIL):
    """``d_mu' d_nu f(x, x')`` at coincidence.

    Central 2x2 stencil with step ``cfg.h2``; with Richardson the ``h`` and
    ``h/2`` results are combined as ``(4 D(h/2) - D(h)) / 3``.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    return _richardson(lambda h: _mixed_raw(gf, x, mu, nu, h), cfg.h2, cfg.richardson)


def _tensor_raw(gf, x, primed, unprimed, h):
    dim = x.size
    slots = [(1, m) for m in primed] + [(0, n) for n in unprimed]
    order = len(slots)
    total = 0.0
    for signs in product((1, -1), repeat=order):
        pts = [x.copy(), x.copy()]
        for s, (slot, idx) in zip(signs, slots):
            pts[slot] = pts[slot] + s * h * _unit(dim, idx)
        total += math.prod(signs) * _call(gf, pts[0], pts[1])
    return total / (2 * h) ** order


def mixed_partial(gf, x, primed, unprimed, h, richardson=True):
    """Mixed partial of any order on the ``2^order`` tensor stencil."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    return _richardson(lambda s: _tensor_raw(gf, x, tuple(primed), tuple(unprimed), s),
                       h, richardson)


@dataclass(frozen=True)
class BarDerivative:
    """Derivative of the log generating function with ``-i`` per primed and ``+i`` per unprimed index."""

    primed: tuple
    unprimed: tuple
    partial: float

    @property
    def factor(self):
        return (-1j) ** len(self.primed) * (1j) ** len(self.unprimed)

    @property
    def value(self):
        return self.factor * self.partial


def bar_third(gf, x, primed, unprimed, cfg=DEFAULT_STENCIL):
    """Third-order bar derivative at coincidence, step ``cfg.h3``."""
    primed, unprimed = tuple(primed), tuple(unprimed)
    if len(primed) + len(unprimed) != 3:
        raise ValueError("bar_third needs three indices in total")
    partial = mixed_partial(gf, x, primed, unprimed, cfg.h3, cfg.richardson)
    return BarDerivative(primed=primed, unprimed=unprimed, partial=float(partial))


def _log_fidelity(family):
    return two_slot(family, "log_fidelity")


def qfim_from_genfun(family, x, cfg=DEFAULT_STENCIL, use_log=True):
    """``F_mn = 4 d_m' d_n f`` with ``f`` the (log) fidelity."""
    x = family.point(x)
    gf = two_slot(family, "log_fidelity" if use_log else "fidelity")
    dim = x.size
    F = np.empty((dim, dim))
    for m in range(dim):
        for n in range(m, dim):
            F[m, n] = 4.0 * mixed_second(gf, x, m, n, cfg)
    F = np.triu(F) + np.triu(F, 1).T
    return GeometryReport(at=x, qfim=F, method="genfun",
                          diagnostics={"use_log": use_log, "h2": cfg.h2,
                                       "richardson": cfg.richardson})


def christoffel_from_genfun(family, x, cfg=DEFAULT_STENCIL, imag_tol=1e-8):
    """Christoffel tensor from third derivatives of the log fidelity.

    ``Gamma_lmn = 2i (B_nl;m - B_l;nm + B_ml;n - B_l;mn - B_lm;n + B_m;ln)``,
    where ``B_ab;c`` carries primed indices ``a, b`` and unprimed ``c``.
    """
    x = family.point(x)
    gf = _log_fidelity(family)
    dim = x.size
    cache = {}

    def bar(primed, unprimed):
        key = (tuple(sorted(primed)), tuple(sorted(unprimed)))
        if key not in cache:
            cache[key] = bar_third(gf, x, key[0], key[1], cfg).value
        return cache[key]

    gamma = np.empty((dim, dim, dim))
    for l, m, n in product(range(dim), repeat=3):
        if n < m:
            gamma[l, m, n] = gamma[l, n, m]
            continue
        combo = (bar((n, l), (m,)) - bar((l,), (n, m)) + bar((m, l), (n,))
                 - bar((l,), (m, n)) - bar((l, m), (n,)) + bar((m,), (l, n)))
        val = 2j * combo
        scale = max(1.0, abs(val))
        if abs(val.imag) > imag_tol * scale:
            raise ArithmeticError(f"imaginary residue {val.imag:.3e} in Gamma[{l},{m},{n}]")
        gamma[l, m, n] = val.real
    return gamma


def metric_from_overlap(family, x, cfg=DEFAULT_STENCIL, use_log=True):
    """Quantum metric ``g_mn = d_m' d_n (ln)|<psi(x')|psi(x)>|``."""
    if not family.has_ket:
        raise UnsupportedKind("metric_from_overlap needs a ket path")
    x = family.point(x)
    gf = two_slot(family, "overlap_log_modulus" if use_log else "overlap_modulus")
    dim = x.size
    g = np.empty((dim, dim))
    for m in range(dim):
        for n in range(m, dim):
            g[m, n] = g[n, m] = mixed_second(gf, x, m, n, cfg)
    return g


def metric_from_divergence(family, x, cfg=DEFAULT_STENCIL, use_log=True):
    """Information-geometry metric ``d_m' d_n (ln) sum_i |psi_i(x')||psi_i(x)|``."""
    x = family.point(x)
    gf = two_slot(family, "log_divergence" if use_log else "divergence")
    dim = x.size
    g = np.empty((dim, dim))
    for m in range(dim):
        for n in range(m, dim):
            g[m, n] = g[n, m] = mixed_second(gf, x, m, n, cfg)
    return g


def _berry_entry(family, x, mu, nu, cfg, kind, scale):
    gf = two_slot(family, kind)
    h = cfg.h2
    for _ in range(MAX_HALVINGS + 1):
        steps = (h, h / 2) if cfg.richardson else (h,)
        phases = [gf(xs, xps) for s in steps for xs, xps, _ in stencil_points(x, mu, nu, s)]
        if kind != "overlap_phase" or max(abs(p) for p in phases) < PHASE_LIMIT:
            local = replace(cfg, h2=h)
            return scale * mixed_second(gf, x, mu, nu, local)
        h /= 2
        if h < 1e-6:
            break
    raise PhaseWrap(f"stencil phases reach {max(abs(p) for p in phases):.3f} rad "
                    f"after {MAX_HALVINGS} step halvings at x = {x.tolist()}")


def berry_from_phase(family, x, mu, nu, cfg=DEFAULT_STENCIL):
    """``Omega_mn = -2 d_m' d_n phi(x', x)`` with ``phi = arg <psi(x')|psi(x)>``.

    Per-point gauge phases cancel in the mixed stencil. The step is halved (up
    to four times) until every stencil phase lies in ``(-pi/2, pi/2)``.
    """
    if not family.has_ket:
        raise UnsupportedKind("berry_from_phase needs a ket path")
    x = family.point(x)
    if mu == nu:
        return 0.0
    return _berry_entry(family, x, mu, nu, cfg, "overlap_phase", -2.0)


def berry_from_im(family, x, mu, nu, cfg=DEFAULT_STENCIL):
    """``Omega_mn = d_m' d_n (-2 Im <psi(x')|psi(x)>)``; analytic gauges only."""
    if not family.has_ket:
        raise UnsupportedKind("berry_from_im needs a ket path")
    if not family.analytic_gauge:
        raise GaugeNotSmooth(f"family {family.name!r} is not in an analytic gauge")
    x = family.point(x)
    if mu == nu:
        return 0.0
    return _berry_entry(family, x, mu, nu, cfg, "overlap_neg2im", 1.0)


def berry_matrix(family, x, cfg=DEFAULT_STENCIL, method="phase"):
    fn = berry_from_phase if method == "phase" else berry_from_im
    x = family.point(x)
    dim = x.size
    om = np.zeros((dim, dim))
    for m in range(dim):
        for n in range(m + 1, dim):
            om[m, n] = fn(family, x, m, n, cfg)
            om[n, m] = -om[m, n]
    return om


@dataclass(frozen=True)
class RayFit:
    direction: np.ndarray
    coefficients: np.ndarray
    residual: float
    degree: int
    t_grid: np.ndarray = field(repr=False)

    @property
    def c0(self):
        return float(self.coefficients[0])

    @property
    def c1(self):
        return float(self.coefficients[1])

    @property
    def c2(self):
        return float(self.coefficients[2])

    @property
    def c3(self):
        return float(self.coefficients[3])


DEFAULT_T_GRID = np.linspace(-0.04, 0.04, 9)


def ray_series_fit(family, x, u, t_grid=None, degree=6, max_cond=1e10):
    """Polynomial fit of ``ln F(x, x + t u)`` along a ray; reports ``c0..c3``.

    The fit goes to ``degree`` (default 6) so the quartic and higher terms of
    the log fidelity do not leak into the low coefficients; only ``c0..c3``
    are meaningful outputs. ``c1`` should vanish and ``c2 = -F_uu / 8``.
    """
    x = family.point(x)
    u = np.asarray(u, dtype=float).ravel()
    u = u / np.linalg.norm(u)
    t = np.asarray(DEFAULT_T_GRID if t_grid is None else t_grid, dtype=float)
    degree = max(int(degree), 3)
    if t.size < degree + 1:
        raise FitIllConditioned(f"{t.size} points cannot fix a degree-{degree} fit")
    scale = float(np.max(np.abs(t)))
    if scale == 0:
        raise FitIllConditioned("t grid is degenerate")
    gf = _log_fidelity(family)
    y = np.array([_call(gf, x, x + ti * u) for ti in t])
    vander = np.vander(t / scale, degree + 1, increasing=True)
    cond = np.linalg.cond(vander)
    if not np.isfinite(cond) or cond > max_cond:
        raise FitIllConditioned(f"Vandermonde condition number {cond:.3e}")
    coef, *_ = np.linalg.lstsq(vander, y, rcond=None)
    resid = float(np.max(np.abs(vander @ coef - y)))
    coef = coef / scale ** np.arange(degree + 1)
    return RayFit(direction=u, coefficients=coef[:4].copy(), residual=resid,
                  degree=degree, t_grid=t)
