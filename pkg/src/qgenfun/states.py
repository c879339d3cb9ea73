"""Parametrized state families and the built-in models.

A :class:`StateFamily` maps a real parameter point ``x`` (length ``D``) to a
density matrix, with optional fast paths: a ket for pure families, a Bloch
vector for qubits, and the Hamiltonian vector ``d`` for two-level
Hamiltonians ``H = d . sigma``.

Units: ``k_B = mu_B = 1`` and the SSH hopping ``t = 1`` unless configured.
"""

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .errors import (
    BlochOutOfBall,
    ConfigInvalid,
    GapClosure,
    GaugePole,
    WrongDimension,
)
from .matcore import DensityMatrix

SIGMA0 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI = (SIGMA_X, SIGMA_Y, SIGMA_Z)

D_MIN = 1e-12
POLE_TOL = 1e-12


def as_point(x, param_dim=None):
    """Coerce ``x`` to a finite 1-D float array."""
    p = np.atleast_1d(np.asarray(x, dtype=float)).ravel()
    if p.size == 0 or not np.all(np.isfinite(p)):
        raise ValueError(f"parameter point must be finite and non-empty, got {x!r}")
    if param_dim is not None and p.size != param_dim:
        raise WrongDimension(f"expected {param_dim} parameters, got {p.size}")
    return p


# ---------------------------------------------------------------------------
# Bloch representation

def rho_from_bloch(r, tol=1e-9):
    """``rho = (I + r . sigma)/2``; vectors slightly outside the ball are clamped."""
    r = np.asarray(r, dtype=float)
    norm = float(np.linalg.norm(r))
    if norm > 1.0 + tol:
        raise BlochOutOfBall(f"|r| = {norm:.12g} > 1")
    if norm > 1.0:
        r = r / norm
    x, y, z = r
    mat = 0.5 * np.array([[1.0 + z, x - 1j * y], [x + 1j * y, 1.0 - z]], dtype=complex)
    return DensityMatrix(mat=mat)


def bloch_from_rho(rho):
    m = rho.mat if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=complex)
    if m.shape != (2, 2):
        raise WrongDimension(f"Bloch vector needs a 2x2 density matrix, got {m.shape}")
    return np.array([np.trace(m @ s).real for s in PAULI])


def canonical_bloch(d, beta, d_min=D_MIN):
    """Thermal Bloch vector ``-(d/|d|) tanh(beta |d|)`` of ``H = d . sigma``."""
    d = np.asarray(d, dtype=float)
    dn = float(np.linalg.norm(d))
    if dn <= d_min:
        raise GapClosure(f"|d| = {dn:.3e} at or below {d_min:.1e}")
    if not beta > 0:
        raise ValueError("beta must be positive")
    return -(d / dn) * math.tanh(beta * dn)


def ssh_dvector(k, delta_t, hopping=1.0, d_min=D_MIN):
    """SSH Bloch Hamiltonian vector for hoppings ``t +/- delta_t``."""
    d = np.array([
        (hopping + delta_t) + (hopping - delta_t) * math.cos(k),
        (hopping - delta_t) * math.sin(k),
        0.0,
    ])
    if np.linalg.norm(d) < d_min:
        raise GapClosure(f"SSH gap closes at k={k!r}, delta_t={delta_t!r}")
    return d


def dirac_ground_ket(d, chart="south", pole_tol=POLE_TOL):
    """Lower eigenstate of ``d . sigma`` in an analytic gauge.

    ``chart="south"`` is ``(n3 - 1, n1 + i n2)/sqrt(2(1 - n3))``, regular
    everywhere except ``n = +z``. ``chart="north"`` is the same state times
    ``(n1 - i n2)/|n1 + i n2|``, i.e. ``(-(n1 - i n2), 1 + n3)/sqrt(2(1 + n3))``,
    regular except at ``n = -z``.
    """
    d = np.asarray(d, dtype=float)
    dn = float(np.linalg.norm(d))
    if dn <= D_MIN:
        raise GapClosure(f"|d| = {dn:.3e}")
    n1, n2, n3 = d / dn
    if chart == "south":
        if n3 >= 1.0 - pole_tol:
            raise GaugePole(f"n3 = {n3!r} at the pole of the south chart")
        # 1 - n3 = (n1^2 + n2^2)/(1 + n3) avoids cancellation when n3 -> 1
        one_minus = 1.0 - n3 if n3 <= 0 else (n1 * n1 + n2 * n2) / (1.0 + n3)
        return np.array([-one_minus, n1 + 1j * n2]) / math.sqrt(2.0 * one_minus)
    if chart == "north":
        if n3 <= -1.0 + pole_tol:
            raise GaugePole(f"n3 = {n3!r} at the pole of the north chart")
        one_plus = 1.0 + n3 if n3 >= 0 else (n1 * n1 + n2 * n2) / (1.0 - n3)
        return np.array([-(n1 - 1j * n2), one_plus]) / math.sqrt(2.0 * one_plus)
    raise ValueError(f"unknown chart {chart!r}")


def spin_bloch(b):
    """Spin-1/2 in a z field, ``b = mu_B B / k_B T``: ``r = (0, 0, tanh b)``."""
    return np.array([0.0, 0.0, math.tanh(b)])


def ket_density(psi):
    psi = np.asarray(psi, dtype=complex)
    return np.outer(psi, psi.conj())


# ---------------------------------------------------------------------------
# families

@dataclass(frozen=True)
class StateFamily:
    """Map from a parameter point to a quantum state, with optional fast paths."""

    name: str
    dim: int
    param_dim: int
    rho_fn: Callable
    ket_fn: Optional[Callable] = None
    bloch_fn: Optional[Callable] = None
    dvec_fn: Optional[Callable] = None
    real_ket: bool = False
    analytic_gauge: bool = False
    meta: dict = field(default_factory=dict, compare=False)

    def point(self, x):
        return as_point(x, self.param_dim)

    def rho(self, x):
        return self.rho_fn(self.point(x))

    def ket(self, x):
        if self.ket_fn is None:
            raise AttributeError(f"family {self.name!r} has no ket path")
        return self.ket_fn(self.point(x))

    def bloch(self, x):
        if self.bloch_fn is None:
            raise AttributeError(f"family {self.name!r} has no Bloch path")
        return self.bloch_fn(self.point(x))

    def dvec(self, x):
        if self.dvec_fn is None:
            raise AttributeError(f"family {self.name!r} has no d-vector path")
        return self.dvec_fn(self.point(x))

    @property
    def has_ket(self):
        return self.ket_fn is not None

    @property
    def has_bloch(self):
        return self.bloch_fn is not None

    @property
    def has_dvec(self):
        return self.dvec_fn is not None

    @property
    def is_pure(self):
        return self.ket_fn is not None

    def paths(self):
        return [p for p, ok in (("rho", True), ("ket", self.has_ket),
                                ("bloch", self.has_bloch), ("dvec", self.has_dvec)) if ok]

    # constructors -------------------------------------------------------

    @classmethod
    def from_bloch(cls, bloch_fn, param_dim, name="bloch", **kw):
        return cls(name=name, dim=2, param_dim=param_dim,
                   rho_fn=lambda x: rho_from_bloch(bloch_fn(x)).mat,
                   bloch_fn=bloch_fn, **kw)

    @classmethod
    def from_ket(cls, ket_fn, param_dim, name="ket", real=False, analytic_gauge=True,
                 dim=None, **kw):
        def norm_ket(x):
            psi = np.asarray(ket_fn(x), dtype=complex)
            return psi / np.linalg.norm(psi)

        if dim is None:
            dim = norm_ket(np.zeros(param_dim)).size
        return cls(name=name, dim=dim, param_dim=param_dim,
                   rho_fn=lambda x: ket_density(norm_ket(x)),
                   ket_fn=norm_ket, real_ket=real, analytic_gauge=analytic_gauge, **kw)

    @classmethod
    def from_rho(cls, rho_fn, dim, param_dim, name="rho", **kw):
        return cls(name=name, dim=dim, param_dim=param_dim,
                   rho_fn=lambda x: np.asarray(rho_fn(x), dtype=complex), **kw)

    @classmethod
    def from_dvec(cls, dvec_fn, param_dim, temperature=0.0, chart="south", name="dvec", **kw):
        """Two-level Hamiltonian family: thermal state for ``T > 0``, ground state at ``T = 0``."""
        if temperature > 0:
            beta = 1.0 / temperature
            bloch = lambda x: canonical_bloch(dvec_fn(x), beta)
            return cls.from_bloch(bloch, param_dim, name=name, dvec_fn=dvec_fn, **kw)

        def bloch0(x):
            d = np.asarray(dvec_fn(x), dtype=float)
            dn = float(np.linalg.norm(d))
            if dn <= D_MIN:
                raise GapClosure(f"|d| = {dn:.3e}")
            return -d / dn

        ket = lambda x: dirac_ground_ket(dvec_fn(x), chart=chart)
        return cls(name=name, dim=2, param_dim=param_dim,
                   rho_fn=lambda x: ket_density(ket(x)),
                   ket_fn=ket, bloch_fn=bloch0, dvec_fn=dvec_fn,
                   analytic_gauge=True, **kw)


def with_gauge(family, alpha):
    """Same family with every ket multiplied by ``exp(i alpha(x))``."""
    if not family.has_ket:
        raise AttributeError("gauge transformation needs a ket path")
    base = family.ket_fn
    return StateFamily(
        name=f"{family.name}+gauge", dim=family.dim, param_dim=family.param_dim,
        rho_fn=family.rho_fn, ket_fn=lambda x: np.exp(1j * alpha(x)) * base(x),
        bloch_fn=family.bloch_fn, dvec_fn=family.dvec_fn,
        real_ket=False, analytic_gauge=family.analytic_gauge, meta=dict(family.meta))


def constant_family(rho=None, dim=2, param_dim=1):
    if rho is None:
        rho = np.eye(dim, dtype=complex) / dim
    rho = np.asarray(rho, dtype=complex)
    if rho.shape == (2, 2):
        r = bloch_from_rho(rho)
        return StateFamily.from_bloch(lambda x: r.copy(), param_dim, name="constant")
    return StateFamily.from_rho(lambda x: rho, rho.shape[0], param_dim, name="constant")


def random_bloch_family(rng, param_dim=2, rmax=0.9, modes=2, name=None):
    """Smooth random Bloch family with ``|r(x)| < rmax`` everywhere.

    ``r = rmax * v / sqrt(1 + |v|^2)`` with ``v`` a sum of random sinusoids
    in each coordinate.
    """
    a0 = rng.normal(0.0, 0.6, size=3)
    amp = rng.normal(0.0, 0.8, size=(3, param_dim, modes))
    freq = rng.uniform(0.5, 1.8, size=(3, param_dim, modes))
    phase = rng.uniform(0.0, 2 * np.pi, size=(3, param_dim, modes))

    def bloch(x):
        v = a0 + np.einsum("idm,idm->i", amp, np.sin(freq * x[None, :, None] + phase))
        return rmax * v / math.sqrt(1.0 + float(v @ v))

    return StateFamily.from_bloch(bloch, param_dim, name=name or "random_bloch")


# ---------------------------------------------------------------------------
# configuration

MODELS = ("spin", "ssh", "dirac2d", "custom")
ATOMS = ("poly", "sin", "cos", "tanh")
CUSTOM_TARGETS = ("bloch", "dvec", "real_ket")


@dataclass(frozen=True)
class ModelConfig:
    model: str
    params: dict

    def to_dict(self):
        return {"model": self.model, **self.params}


_DEFAULTS = {
    "spin": {},
    "ssh": {"delta_t": 0.2, "temperature": 0.0, "hopping": 1.0},
    "dirac2d": {"mass": 1.0, "temperature": 0.0},
    "custom": {"temperature": 0.0},
}

_ALLOWED = {
    "spin": set(),
    "ssh": {"delta_t", "temperature", "hopping"},
    "dirac2d": {"mass", "temperature"},
    "custom": {"target", "param_dim", "components", "temperature", "name"},
}


def _number(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)


def _check_atom(atom, param_dim, where, problems):
    if not isinstance(atom, (list, tuple)) or len(atom) < 2:
        problems.append(f"{where}: atom must be [kind, var, ...]")
        return
    kind, var = atom[0], atom[1]
    if kind not in ATOMS:
        problems.append(f"{where}: unknown atom {kind!r} (expected one of {ATOMS})")
        return
    if not isinstance(var, int) or isinstance(var, bool) or not 0 <= var < param_dim:
        problems.append(f"{where}: variable index {var!r} out of range 0..{param_dim - 1}")
    extra = list(atom[2:])
    if kind == "poly":
        if len(extra) != 1 or not isinstance(extra[0], int) or extra[0] < 0:
            problems.append(f"{where}: poly atom needs one non-negative integer power")
    elif len(extra) > 2 or not all(_number(e) for e in extra):
        problems.append(f"{where}: {kind} atom takes up to two numbers (scale, shift)")


def parse_model_config(data):
    """Validate a model-config mapping and return a :class:`ModelConfig`.

    Raises :class:`ConfigInvalid` listing every field-level problem.
    """
    if not isinstance(data, dict):
        raise ConfigInvalid("model config must be a JSON object")
    model = data.get("model")
    if model not in MODELS:
        raise ConfigInvalid(f"model: expected one of {MODELS}, got {model!r}")
    params = dict(_DEFAULTS[model])
    problems = []
    for key, value in data.items():
        if key == "model":
            continue
        if key not in _ALLOWED[model]:
            problems.append(f"{key}: not a field of model {model!r}")
            continue
        params[key] = value

    def need_number(key):
        if not _number(params.get(key)):
            problems.append(f"{key}: expected a finite number, got {params.get(key)!r}")
            return False
        return True

    if "temperature" in _ALLOWED[model] and need_number("temperature") and params["temperature"] < 0:
        problems.append("temperature: must be >= 0")
    if model == "ssh":
        if need_number("hopping") and params["hopping"] <= 0:
            problems.append("hopping: must be > 0")
        if need_number("delta_t") and params["delta_t"] == 0:
            problems.append("delta_t: 0 closes the gap at k = pi")
    elif model == "dirac2d":
        need_number("mass")
    elif model == "custom":
        target = params.get("target")
        if target not in CUSTOM_TARGETS:
            problems.append(f"target: expected one of {CUSTOM_TARGETS}, got {target!r}")
        pdim = params.get("param_dim")
        if not isinstance(pdim, int) or isinstance(pdim, bool) or pdim < 1:
            problems.append(f"param_dim: expected a positive integer, got {pdim!r}")
            pdim = 1
        comps = params.get("components")
        want = 3 if target in ("bloch", "dvec") else None
        if not isinstance(comps, list) or not comps:
            problems.append("components: expected a non-empty list of term lists")
        else:
            if want is not None and len(comps) != want:
                problems.append(f"components: target {target!r} needs {want} components, got {len(comps)}")
            for ci, comp in enumerate(comps):
                if not isinstance(comp, list):
                    problems.append(f"components[{ci}]: expected a list of terms")
                    continue
                for ti, term in enumerate(comp):
                    where = f"components[{ci}][{ti}]"
                    if not isinstance(term, dict) or not _number(term.get("coef")):
                        problems.append(f"{where}: term needs a numeric 'coef'")
                        continue
                    atoms = term.get("atoms", [])
                    if not isinstance(atoms, list):
                        problems.append(f"{where}: 'atoms' must be a list")
                        continue
                    for ai, atom in enumerate(atoms):
                        _check_atom(atom, pdim, f"{where}.atoms[{ai}]", problems)
    if problems:
        raise ConfigInvalid(problems)
    return ModelConfig(model=model, params=params)


def load_model_config(source):
    """Read a model config from a path, JSON string, or mapping."""
    if isinstance(source, ModelConfig):
        return source
    if isinstance(source, dict):
        return parse_model_config(source)
    text = str(source)
    path = Path(text)
    try:
        if path.exists():
            text = path.read_text()
        data = json.loads(text)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigInvalid(f"cannot read model config: {exc}") from exc
    return parse_model_config(data)


def _atom_value(atom, x):
    kind, var = atom[0], atom[1]
    v = x[var]
    if kind == "poly":
        return v ** atom[2]
    scale = atom[2] if len(atom) > 2 else 1.0
    shift = atom[3] if len(atom) > 3 else 0.0
    arg = scale * v + shift
    if kind == "sin":
        return math.sin(arg)
    if kind == "cos":
        return math.cos(arg)
    return math.tanh(arg)


def compile_components(components):
    """Turn coefficient tables into a vector-valued function of ``x``."""
    tables = [[(float(t["coef"]), [tuple(a) for a in t.get("atoms", [])]) for t in comp]
              for comp in components]

    def evaluate(x):
        out = np.empty(len(tables))
        for i, comp in enumerate(tables):
            acc = 0.0
            for coef, atoms in comp:
                term = coef
                for atom in atoms:
                    term *= _atom_value(atom, x)
                acc += term
            out[i] = acc
        return out

    return evaluate


def build_family(cfg):
    """Construct the :class:`StateFamily` described by a model config."""
    cfg = load_model_config(cfg)
    p = cfg.params
    meta = {"config": cfg.to_dict()}
    if cfg.model == "spin":
        return StateFamily.from_bloch(
            lambda x: spin_bloch(x[0]), 1, name="spin",
            dvec_fn=lambda x: np.array([0.0, 0.0, -x[0]]), meta=meta)
    if cfg.model == "ssh":
        dt, hop, temp = p["delta_t"], p["hopping"], p["temperature"]
        return StateFamily.from_dvec(lambda x: ssh_dvector(x[0], dt, hop), 1,
                                     temperature=temp, name="ssh", meta=meta)
    if cfg.model == "dirac2d":
        mass, temp = p["mass"], p["temperature"]
        # chart regular around the band-edge direction sign(mass) * z
        chart = "north" if mass > 0 else "south"
        return StateFamily.from_dvec(lambda x: np.array([x[0], x[1], mass]), 2,
                                     temperature=temp, chart=chart, name="dirac2d", meta=meta)
    fn = compile_components(p["components"])
    pdim = p["param_dim"]
    name = p.get("name", "custom")
    if p["target"] == "bloch":
        def bloch(x):
            r = fn(x)
            if np.linalg.norm(r) > 1.0 + 1e-9:
                raise BlochOutOfBall(f"|r(x)| = {np.linalg.norm(r):.6g} > 1 at x={x.tolist()}")
            return r
        return StateFamily.from_bloch(bloch, pdim, name=name, meta=meta)
    if p["target"] == "dvec":
        return StateFamily.from_dvec(fn, pdim, temperature=p["temperature"], name=name, meta=meta)
    return StateFamily.from_ket(fn, pdim, name=name, real=True, meta=meta)
