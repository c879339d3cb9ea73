"""Grid scans, route audits and CSV/JSON emission."""

import csv
import io
import json
import math
import statistics
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from itertools import combinations, product
from pathlib import Path
from typing import Optional

import numpy as np

from .. import __version__, _kernels
from .. import geometry as geo
from .. import numdiff as nd
from ..errors import ConfigInvalid, QGeomError
from ..genfun import genfun_eval
from ..states import build_family, load_model_config

QUANTITIES = ("fidelity_surface", "qfim", "metric", "berry", "christoffel",
              "ray_check", "compare_routes")

# default relative tolerance and absolute floor for route comparisons
DEFAULT_TOLERANCES = {
    "qfim": (1e-5, 1e-8),
    "metric": (1e-4, 1e-8),
    "berry": (1e-5, 1e-8),
    "christoffel": (5e-3, 1e-5),
}

COORD_NAMES = {"spin": ["b"], "ssh": ["k"], "dirac2d": ["kx", "ky"]}


@dataclass(frozen=True)
class GridAxis:
    min: float
    max: float
    count: int
    endpoint: bool = True

    def values(self):
        return np.linspace(self.min, self.max, self.count, endpoint=self.endpoint)


@dataclass(frozen=True)
class ScanSpec:
    model: dict
    grid: tuple
    quantities: tuple
    grid_prime: Optional[tuple] = None
    methods: dict = field(default_factory=dict)
    stencil: nd.StencilConfig = nd.DEFAULT_STENCIL
    use_log: bool = True
    sweep: Optional[dict] = None
    tolerances: dict = field(default_factory=dict)
    workers: int = 1
    ray_directions: Optional[tuple] = None


def _axis(obj, where):
    if not isinstance(obj, dict):
        raise ConfigInvalid(f"{where}: expected an object with min/max/count")
    problems = []
    for key in ("min", "max"):
        v = obj.get(key)
        if not isinstance(v, (int, float)) or isinstance(v, bool) or not math.isfinite(v):
            problems.append(f"{where}.{key}: expected a finite number")
    count = obj.get("count")
    if not isinstance(count, int) or isinstance(count, bool) or count < 2:
        problems.append(f"{where}.count: expected an integer >= 2")
    if problems:
        raise ConfigInvalid(problems)
    return GridAxis(float(obj["min"]), float(obj["max"]), count, bool(obj.get("endpoint", True)))


def parse_scan_spec(data, model_override=None):
    """Validate a scan description (mapping) into a :class:`ScanSpec`."""
    if not isinstance(data, dict):
        raise ConfigInvalid("scan spec must be a JSON object")
    model = model_override if model_override is not None else data.get("model")
    if model is None:
        raise ConfigInvalid("model: missing (embed it or pass --model-config)")
    model = load_model_config(model).to_dict()
    family = build_family(model)
    grid = data.get("grid")
    if not isinstance(grid, list) or len(grid) != family.param_dim:
        raise ConfigInvalid(f"grid: expected {family.param_dim} axes")
    grid = tuple(_axis(a, f"grid[{i}]") for i, a in enumerate(grid))
    quantities = data.get("quantities", ["qfim"])
    bad = [q for q in quantities if q not in QUANTITIES]
    if bad or not quantities:
        raise ConfigInvalid(f"quantities: unknown {bad}; expected a subset of {QUANTITIES}")
    if "fidelity_surface" in quantities and family.param_dim != 1:
        raise ConfigInvalid("fidelity_surface: only 1-D families have (x, x') surfaces")
    if "berry" in quantities and family.param_dim < 2:
        raise ConfigInvalid("berry: needs at least two parameters")
    if "berry" in quantities and not family.is_pure:
        raise ConfigInvalid("berry: only defined for pure families")
    grid_prime = data.get("grid_prime")
    if grid_prime is not None:
        grid_prime = tuple(_axis(a, f"grid_prime[{i}]") for i, a in enumerate(grid_prime))
    st = data.get("stencil", {})
    try:
        stencil = nd.StencilConfig(**st)
    except (TypeError, ValueError) as exc:
        raise ConfigInvalid(f"stencil: {exc}") from exc
    sweep = data.get("sweep")
    if sweep is not None:
        if (not isinstance(sweep, dict) or not isinstance(sweep.get("field"), str)
                or not isinstance(sweep.get("values"), list) or not sweep["values"]):
            raise ConfigInvalid("sweep: expected {field: str, values: [...]}")
        for v in sweep["values"]:
            load_model_config({**model, sweep["field"]: v})
    workers = data.get("workers", 1)
    if not isinstance(workers, int) or workers < 1:
        raise ConfigInvalid("workers: expected a positive integer")
    methods = data.get("methods", {})
    if not isinstance(methods, dict):
        raise ConfigInvalid("methods: expected an object quantity -> [method, ...]")
    tol = data.get("tolerances", {})
    rays = data.get("ray_directions")
    return ScanSpec(model=model, grid=grid, quantities=tuple(quantities), grid_prime=grid_prime,
                    methods=methods, stencil=stencil, use_log=bool(data.get("use_log", True)),
                    sweep=sweep, tolerances=tol, workers=workers,
                    ray_directions=tuple(tuple(r) for r in rays) if rays else None)


def load_scan_spec(path, model_override=None):
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigInvalid(f"cannot read scan spec: {exc}") from exc
    return parse_scan_spec(data, model_override)


# ---------------------------------------------------------------------------
# per-point evaluators; each returns {component id: value}

def _components(prefix, arr, kind):
    arr = np.asarray(arr)
    dim = arr.shape[0]
    out = {}
    if kind == "sym":
        for i in range(dim):
            for j in range(i, dim):
                out[f"{prefix}_{i}_{j}"] = float(arr[i, j])
    elif kind == "anti":
        for i in range(dim):
            for j in range(i + 1, dim):
                out[f"{prefix}_{i}_{j}"] = float(arr[i, j])
    else:
        for l in range(dim):
            for m in range(dim):
                for n in range(m, dim):
                    out[f"{prefix}_{l}_{m}_{n}"] = float(arr[l, m, n])
    return out


def component_ids(quantity, dim, n_rays=None):
    kind = {"qfim": "sym", "metric": "sym", "berry": "anti", "christoffel": "tensor"}[quantity]
    shape = (dim,) * (3 if kind == "tensor" else 2)
    return list(_components(quantity, np.zeros(shape), kind))


def methods_for(family, quantity):
    if quantity == "qfim":
        return geo.available_qfim_routes(family)
    if quantity == "metric":
        out = ["direct"]
        if family.has_dvec and family.is_pure:
            out.append("closed_form")
        if family.is_pure:
            out += ["projector", "overlap"]
        out.append("genfun")
        if family.real_ket:
            out.append("divergence")
        return out
    if quantity == "berry":
        out = ["projector", "phase"]
        if family.analytic_gauge:
            out.append("im")
        if family.has_dvec:
            out.append("closed_form")
        return out
    if quantity == "christoffel":
        out = []
        if family.has_bloch:
            out.append("bloch")
        if family.has_dvec and family.is_pure:
            out.append("closed_form")
        return out + ["metric", "genfun"]
    if quantity == "ray_check":
        return ["ray_fit"]
    raise ValueError(quantity)


def evaluate(family, x, quantity, method, cfg=nd.DEFAULT_STENCIL, use_log=True):
    """One (point, quantity, method) evaluation as a component dictionary."""
    if quantity == "qfim":
        if method == "genfun":
            rep = nd.qfim_from_genfun(family, x, cfg, use_log=use_log)
        else:
            rep = geo.qfim(family, x, route=method)
        return _components("qfim", rep.qfim, "sym")
    if quantity == "metric":
        if method == "direct":
            g = geo.qfim(family, x).metric
        elif method == "closed_form":
            g = geo.dirac_geometry_closed(family, x).metric
        elif method == "projector":
            g = geo.qgt_pure(family, x).metric
        elif method == "overlap":
            g = nd.metric_from_overlap(family, x, cfg, use_log=use_log)
        elif method == "genfun":
            g = nd.qfim_from_genfun(family, x, cfg, use_log=use_log).metric
        elif method == "divergence":
            g = nd.metric_from_divergence(family, x, cfg, use_log=use_log)
        else:
            raise ValueError(f"unknown metric method {method!r}")
        return _components("metric", g, "sym")
    if quantity == "berry":
        if method == "projector":
            om = geo.qgt_pure(family, x).berry
        elif method == "closed_form":
            om = geo.dirac_geometry_closed(family, x).berry
        elif method in ("phase", "im"):
            om = nd.berry_matrix(family, x, cfg, method=method)
        else:
            raise ValueError(f"unknown berry method {method!r}")
        return _components("berry", om, "anti")
    if quantity == "christoffel":
        if method == "bloch":
            gam = geo.christoffel_bloch(family, x)
        elif method == "closed_form":
            gam = geo.dirac_geometry_closed(family, x).christoffel
        elif method == "metric":
            gam = geo.christoffel_from_metric(family, x)
        elif method == "genfun":
            gam = nd.christoffel_from_genfun(family, x, cfg)
        else:
            raise ValueError(f"unknown christoffel method {method!r}")
        return _components("christoffel", gam, "tensor")
    raise ValueError(f"cannot evaluate {quantity!r} pointwise")


def _ray_check(family, x, directions):
    x = family.point(x)
    F = geo.qfim(family, x).qfim
    out = {}
    for i, u in enumerate(directions):
        u = np.asarray(u, dtype=float)
        u = u / np.linalg.norm(u)
        fit = nd.ray_series_fit(family, x, u)
        for c in range(4):
            out[f"ray_c{c}_{i}"] = float(fit.coefficients[c])
        out[f"ray_c2_expected_{i}"] = float(-(u @ F @ u) / 8.0)
    return out


# ---------------------------------------------------------------------------
# results

@dataclass(frozen=True)
class Row:
    coords: tuple
    quantity: str
    method: str
    value: Optional[float]
    coords_prime: tuple = ()
    sweep: Optional[float] = None
    error: Optional[str] = None

    def to_dict(self):
        return {"coords": list(self.coords), "coords_prime": list(self.coords_prime),
                "sweep": self.sweep, "quantity": self.quantity, "method": self.method,
                "value": self.value, "error": self.error}

    @classmethod
    def from_dict(cls, d):
        return cls(coords=tuple(d["coords"]), coords_prime=tuple(d.get("coords_prime", ())),
                   sweep=d.get("sweep"), quantity=d["quantity"], method=d["method"],
                   value=d["value"], error=d.get("error"))


@dataclass(frozen=True)
class ScanResult:
    coord_names: tuple
    rows: tuple
    metadata: dict
    sweep_field: Optional[str] = None
    surface: bool = False

    @property
    def has_errors(self):
        return any(r.error is not None for r in self.rows)

    def values(self, quantity, method=None, sweep=None):
        return [r for r in self.rows if r.quantity == quantity
                and (method is None or r.method == method)
                and (sweep is None or r.sweep == sweep)]

    def header(self):
        cols = [self.sweep_field] if self.sweep_field else []
        cols += list(self.coord_names)
        if self.surface:
            cols += [f"{c}_prime" for c in self.coord_names]
        return cols + ["quantity", "method", "value"]

    def to_dict(self):
        return {"coord_names": list(self.coord_names), "sweep_field": self.sweep_field,
                "surface": self.surface, "metadata": self.metadata,
                "rows": [r.to_dict() for r in self.rows]}

    @classmethod
    def from_dict(cls, d):
        return cls(coord_names=tuple(d["coord_names"]), sweep_field=d.get("sweep_field"),
                   surface=bool(d.get("surface")), metadata=d["metadata"],
                   rows=tuple(Row.from_dict(r) for r in d["rows"]))


def fmt(v):
    return format(float(v), ".17g")


def to_csv(result):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(result.header())
    for r in result.rows:
        line = [fmt(r.sweep)] if result.sweep_field else []
        line += [fmt(c) for c in r.coords]
        if result.surface:
            line += [fmt(c) for c in r.coords_prime] if r.coords_prime else [""] * len(r.coords)
        value = f"error:{r.error}" if r.error else fmt(r.value)
        w.writerow(line + [r.quantity, r.method, value])
    return buf.getvalue()


def to_json(result):
    return json.dumps(result.to_dict(), indent=1, allow_nan=False)


def emit(result, fmt_name="csv", out=None):
    """Serialize ``result`` as CSV or JSON; write to ``out`` when given and return the text."""
    if fmt_name not in ("csv", "json"):
        raise ValueError(f"format must be csv or json, got {fmt_name!r}")
    text = to_csv(result) if fmt_name == "csv" else to_json(result)
    if out is not None:
        Path(out).write_text(text)
    return text


def parse_json(text):
    return ScanResult.from_dict(json.loads(text))


# ---------------------------------------------------------------------------
# scan driver

def _points(axes):
    return [np.array(p, dtype=float) for p in product(*(a.values() for a in axes))]


def _coord_names(model, dim):
    return tuple(COORD_NAMES.get(model["model"], [f"x{i}" for i in range(dim)]))


def _point_rows(family, x, spec, sweep_value):
    rows = []
    coords = tuple(float(c) for c in x)
    for q in spec.quantities:
        if q in ("fidelity_surface", "compare_routes"):
            continue
        if q == "ray_check":
            dirs = spec.ray_directions or [tuple(np.eye(family.param_dim)[i])
                                           for i in range(family.param_dim)]
            try:
                comps = _ray_check(family, x, dirs)
                rows += [Row(coords, k, "ray_fit", v, sweep=sweep_value) for k, v in comps.items()]
            except QGeomError as exc:
                ids = [f"ray_c{c}_{i}" for i in range(len(dirs)) for c in range(4)]
                ids += [f"ray_c2_expected_{i}" for i in range(len(dirs))]
                rows += [Row(coords, k, "ray_fit", None, sweep=sweep_value, error=exc.code)
                         for k in ids]
            continue
        for method in spec.methods.get(q) or methods_for(family, q):
            try:
                comps = evaluate(family, x, q, method, spec.stencil, spec.use_log)
                rows += [Row(coords, k, method, v, sweep=sweep_value) for k, v in comps.items()]
            except QGeomError as exc:
                rows += [Row(coords, k, method, None, sweep=sweep_value, error=exc.code)
                         for k in component_ids(q, family.param_dim)]
    if "compare_routes" in spec.quantities:
        for a in audit_point(family, x, spec):
            rows.append(Row(coords, f"dev_{a.component}", f"{a.route_a}|{a.route_b}",
                            a.abs_dev, sweep=sweep_value))
    return rows


def _surface_rows(family, spec, sweep_value):
    xs = spec.grid[0].values()
    xps = (spec.grid_prime or spec.grid)[0].values()
    rows = []
    if family.has_bloch:
        method = "closed_form"
        good, r_x = _bloch_table(family, xs)
        good_p, r_p = _bloch_table(family, xps)
        surf = np.full((xs.size, xps.size), np.nan)
        if good.any() and good_p.any():
            surf[np.ix_(good, good_p)] = _kernels.bloch_fidelity_matrix(r_x[good], r_p[good_p])
        for i, j in product(range(xs.size), range(xps.size)):
            err = None if (good[i] and good_p[j]) else "gap_closure"
            rows.append(Row((float(xs[i]),), "fidelity", method,
                            None if err else float(surf[i, j]),
                            coords_prime=(float(xps[j]),), sweep=sweep_value, error=err))
        return rows
    kind = "fidelity"
    method = "overlap" if family.has_ket else "spectral"
    for a, b in product(xs, xps):
        try:
            v, err = genfun_eval(family, a, b, kind), None
        except QGeomError as exc:
            v, err = None, exc.code
        rows.append(Row((float(a),), "fidelity", method, v, coords_prime=(float(b),),
                        sweep=sweep_value, error=err))
    return rows


def _bloch_table(family, xs):
    good = np.ones(xs.size, dtype=bool)
    table = np.zeros((xs.size, 3))
    for i, v in enumerate(xs):
        try:
            table[i] = family.bloch(v)
        except QGeomError:
            good[i] = False
    return good, table


def run_scan(spec):
    """Evaluate every requested quantity on the grid; failures become error rows."""
    variants = [(None, spec.model)]
    if spec.sweep:
        f = spec.sweep["field"]
        variants = [(float(v), {**spec.model, f: v}) for v in spec.sweep["values"]]
    rows = []
    dim = None
    for sweep_value, model in variants:
        family = build_family(model)
        dim = family.param_dim
        if "fidelity_surface" in spec.quantities:
            rows += _surface_rows(family, spec, sweep_value)
        pts = _points(spec.grid)
        work = lambda x: _point_rows(family, x, spec, sweep_value)
        if spec.workers > 1:
            with ThreadPoolExecutor(max_workers=spec.workers) as pool:
                chunks = list(pool.map(work, pts))  # map preserves grid order
        else:
            chunks = [work(x) for x in pts]
        for chunk in chunks:
            rows += chunk
    meta = {
        "model": spec.model,
        "quantities": list(spec.quantities),
        "stencil": {"h2": spec.stencil.h2, "h3": spec.stencil.h3,
                    "richardson": spec.stencil.richardson},
        "use_log": spec.use_log,
        "sweep": spec.sweep,
        "tool": "qgenfun",
        "version": __version__,
        "kernel_backend": _kernels.backend(),
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }
    return ScanResult(coord_names=_coord_names(spec.model, dim), rows=tuple(rows), metadata=meta,
                      sweep_field=spec.sweep["field"] if spec.sweep else None,
                      surface="fidelity_surface" in spec.quantities)


# ---------------------------------------------------------------------------
# route audit

@dataclass(frozen=True)
class AuditEntry:
    coords: tuple
    quantity: str
    component: str
    route_a: str
    route_b: str
    a: float
    b: float
    abs_dev: float
    rel_dev: float
    ok: bool
    sweep: Optional[float] = None


@dataclass(frozen=True)
class AuditResult:
    entries: tuple
    failures: tuple

    @property
    def passed(self):
        return not self.failures and all(e.ok for e in self.entries)

    @property
    def exit_code(self):
        return 0 if self.passed else 1

    def summary(self):
        groups = {}
        for e in self.entries:
            groups.setdefault((e.quantity, e.route_a, e.route_b), []).append(e)
        out = []
        for (q, ra, rb), es in sorted(groups.items()):
            absd = [e.abs_dev for e in es]
            reld = [e.rel_dev for e in es]
            out.append({"quantity": q, "routes": f"{ra}|{rb}", "n": len(es),
                        "max_abs": max(absd), "median_abs": statistics.median(absd),
                        "max_rel": max(reld), "median_rel": statistics.median(reld),
                        "passed": all(e.ok for e in es)})
        return out


def _tolerance(spec, quantity):
    rel, floor = DEFAULT_TOLERANCES[quantity]
    custom = spec.tolerances.get(quantity)
    if isinstance(custom, (int, float)):
        rel = float(custom)
    elif isinstance(custom, dict):
        rel = float(custom.get("rel", rel))
        floor = float(custom.get("abs", floor))
    return rel, floor


def audit_point(family, x, spec, failures=None, sweep_value=None):
    entries = []
    coords = tuple(float(c) for c in family.point(x))
    quantities = [q for q in spec.quantities if q in DEFAULT_TOLERANCES]
    if not quantities:
        quantities = ["qfim"]
    for q in quantities:
        if q == "berry" and family.param_dim < 2:
            continue
        routes = spec.methods.get(q) or methods_for(family, q)
        values = {}
        for r in routes:
            try:
                values[r] = evaluate(family, x, q, r, spec.stencil, spec.use_log)
            except QGeomError as exc:
                if failures is not None:
                    failures.append((coords, q, r, exc.code))
        rel_tol, floor = _tolerance(spec, q)
        for ra, rb in combinations(sorted(values), 2):
            for comp in values[ra]:
                a, b = values[ra][comp], values[rb][comp]
                dev = abs(a - b)
                scale = max(abs(a), abs(b))
                rel = dev / scale if scale > 0 else 0.0
                ok = dev <= max(rel_tol * scale, floor)
                entries.append(AuditEntry(coords, q, comp, ra, rb, a, b, dev, rel, ok,
                                          sweep=sweep_value))
    return entries


def compare_routes(spec):
    """Pairwise deviations between every available route, per grid point."""
    variants = [(None, spec.model)]
    if spec.sweep:
        f = spec.sweep["field"]
        variants = [(float(v), {**spec.model, f: v}) for v in spec.sweep["values"]]
    entries = []
    failures = []
    for sweep_value, model in variants:
        family = build_family(model)
        for x in _points(spec.grid):
            entries += audit_point(family, x, spec, failures, sweep_value)
    return AuditResult(entries=tuple(entries), failures=tuple(failures))


def audit_to_csv(audit):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["sweep", "coords", "quantity", "component", "route_a", "route_b",
                "a", "b", "abs_dev", "rel_dev", "ok"])
    for e in audit.entries:
        w.writerow(["" if e.sweep is None else fmt(e.sweep),
                    " ".join(fmt(c) for c in e.coords), e.quantity, e.component,
                    e.route_a, e.route_b, fmt(e.a), fmt(e.b), fmt(e.abs_dev),
                    fmt(e.rel_dev), int(e.ok)])
    return buf.getvalue()
