"""Coloring of diagrams, io functions, and the numerical limits laboratory."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from . import models as M
from .diagram import (
    GATE_KINDS,
    HIDDEN_PREFIX,
    Diagram,
    _breaking_wires,
    arcs,
    topo_order,
    validate,
)
from .errors import DivergenceDetected, UnboundInput, UndecoratedCycle
from .scale import eval_scale, parse_scale
from .terms import App, AppInv, Bullet, Circ, Term, Var, equal_modulo, eval_term, free_vars, normalize

__all__ = [
    "ColoringResult",
    "ConvergenceReport",
    "propagate",
    "io_function",
    "io_terms",
    "input_variables",
    "is_acceptable",
    "parameter_set_check",
    "converge_scan",
    "check_identities",
    "symbolic_identities",
    "tangent_group_check",
    "residue_convergence",
    "pansu_derivative",
    "linearity_check",
    "default_schedule",
]


@dataclass
class ColoringResult:
    colors: dict[str, object]
    stuck: list[str] = field(default_factory=list)

    @property
    def status(self) -> str:
        return "complete" if not self.stuck else "stuck"

    @property
    def complete(self) -> bool:
        return not self.stuck


def _scale_binding(d: Diagram, scales: Mapping[str, float] | None) -> dict[str, float]:
    out: dict[str, float] = {}
    for k, v in d.scales.items():
        if v != "var":
            out[k] = eval_scale(parse_scale(v), {})
    out.update(scales or {})
    return out


def input_variables(d: Diagram) -> list[str]:
    """Point variables the io function needs: input labels and decoration variables."""
    names = set(d.input_labels())
    for t in d.decorations.values():
        names |= free_vars(t)
    return sorted(names)


def propagate(
    d: Diagram,
    model: M.Model | None = None,
    points: Mapping[str, object] | None = None,
    scales: Mapping[str, float] | None = None,
    homeos: Mapping[str, M.Homeo] | None = None,
    strict: bool = False,
) -> ColoringResult:
    """Color every wire.  ``model=None`` selects symbolic mode.

    In symbolic mode inputs are colored by ``Var(label)`` unless ``points``
    supplies a term.  Decorated closed arcs and decorated input wires act
    as sources.  With ``strict`` an undetermined wire raises
    :class:`UndecoratedCycle`.
    """
    symbolic = model is None
    points = dict(points or {})
    sb = _scale_binding(d, scales)
    homeos = homeos or {}
    arc_list = arcs(d)
    cut = _breaking_wires(d, arc_list)
    order, stuck_nodes = topo_order(d, cut)

    def const(term: Term):
        if symbolic:
            return term
        return eval_term(term, model, points, sb, homeos)

    colors: dict[str, object] = {w: const(d.decorations[w]) for w in cut}

    def put(node, port, val):
        wid = d.wire_from(node, port)
        if wid is not None and wid not in cut:
            colors[wid] = val

    def get(node, port):
        wid = d.wire_into(node, port)
        return colors[wid]

    for nid in order:
        n = d.nodes[nid]
        k = n.kind
        if k == "input":
            wid = d.wire_from(nid, "out")
            if wid in d.decorations:
                colors[wid] = const(d.decorations[wid])
            elif n.label in points:
                colors[wid] = points[n.label]
            elif symbolic:
                colors[wid] = Var(n.label)
            else:
                raise UnboundInput(n.label)
        elif k == "fanout":
            v = get(nid, "in")
            put(nid, "outThrough", v)
            put(nid, "outChord", v)
        elif k in GATE_KINDS:
            base, op = get(nid, "inBase"), get(nid, "inOperand")
            if symbolic:
                put(nid, "out", (Circ if k == "circ" else Bullet)(n.scale, base, op))
            else:
                e = eval_scale(n.scale, sb)
                put(nid, "out", model.circ(e, base, op) if k == "circ" else model.bullet(e, base, op))
        elif k == "homeo":
            v = get(nid, "in")
            if symbolic:
                put(nid, "out", (AppInv if n.inverted else App)(n.homeo, v))
            else:
                if n.homeo not in homeos:
                    raise M.UnknownModel(n.homeo)
                h = homeos[n.homeo]
                put(nid, "out", h.inverse(v) if n.inverted else h.forward(v))
    stuck = sorted(w for w in d.wires if w not in colors and d.wires[w].role == "segment")
    if stuck and strict:
        raise UndecoratedCycle(f"wires {stuck[:8]} cannot be colored (nodes {sorted(stuck_nodes)[:8]})")
    return ColoringResult(colors, stuck)


def _output_values(d: Diagram, res: ColoringResult, hidden: bool) -> dict[str, object]:
    out = {}
    for n in d.outputs():
        if hidden or not n.label.startswith(HIDDEN_PREFIX):
            out[n.label] = res.colors[d.wire_into(n.id, "in")]
    return out


def io_function(
    d: Diagram,
    model: M.Model,
    scales: Mapping[str, float] | None = None,
    homeos: Mapping[str, M.Homeo] | None = None,
    hidden: bool = False,
) -> Callable[[Mapping[str, object]], dict[str, object]]:
    """Pure function from input points (possibly batched) to output points."""

    def f(points: Mapping[str, object]) -> dict[str, object]:
        res = propagate(d, model, points, scales, homeos, strict=True)
        return _output_values(d, res, hidden)

    return f


def io_terms(d: Diagram, normal: bool = True, hidden: bool = False) -> dict[str, Term]:
    res = propagate(d, strict=True)
    out = _output_values(d, res, hidden)
    return {k: normalize(v) for k, v in out.items()} if normal else out


def is_acceptable(d: Diagram) -> tuple[bool, dict[str, object] | None]:
    """True with a witness coloring iff symbolic propagation completes."""
    rep = validate(d)
    if not rep.ok:
        return False, None
    res = propagate(d)
    if not res.complete:
        return False, None
    return True, res.colors


def _strand_end(d: Diagram, wid: str) -> str | None:
    """Follow a strand (through-ports of fanouts, operand to out of gates) to its output."""
    seen = set()
    while wid not in seen:
        seen.add(wid)
        node = d.nodes[d.wires[wid].dst[0]]
        if node.kind == "output":
            return node.id
        port = {"fanout": "outThrough", "circ": "out", "bullet": "out", "homeo": "out"}.get(node.kind)
        nxt = [w.id for w in d.wires.values() if w.src == (node.id, port)] if port else []
        if len(nxt) != 1:
            return None
        wid = nxt[0]
    return None


def parameter_set_check(d: Diagram, segments: Sequence[str]) -> bool:
    """Whether ``segments`` is a valid set of parameters.

    A parameter is an input segment whose strand carries its color to an
    output unchanged (through a chora, say).  Fixing the parameters to
    fresh variables must leave every output colored.
    """
    ok, _ = is_acceptable(d)
    if not ok:
        return False
    fixed: dict[str, Term] = {}
    ends: dict[str, str] = {}
    for s in segments:
        w = d.wires.get(s)
        if w is None or w.role != "segment" or d.nodes[w.src[0]].kind != "input":
            return False
        label = d.nodes[w.src[0]].label
        end = _strand_end(d, s)
        if end is None:
            return False
        fixed[label] = Var("param_" + label)
        ends[label] = end
    res = propagate(d, points=fixed)
    if not res.complete:
        return False
    return all(equal_modulo(res.colors[d.wire_into(o, "in")], fixed[k]) for k, o in ends.items())


# --- limits laboratory -------------------------------------------------------


def default_schedule(k0: int = 1, k1: int = 16) -> list[float]:
    return [2.0 ** -k for k in range(k0, k1 + 1)]


@dataclass
class ConvergenceReport:
    name: str
    scales: list[float]
    sup_errors: list[float]
    successive: list[float]
    slope: float | None
    passed: bool
    detail: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "scales": self.scales,
            "supErrors": self.sup_errors,
            "successive": self.successive,
            "slope": self.slope,
            "pass": self.passed,
            **({"detail": self.detail} if self.detail else {}),
        }


def fit_slope(scales: Sequence[float], errs: Sequence[float], last: int = 8) -> float | None:
    """Least-squares slope of log(err) against log(scale) over the tail."""
    pairs = [(s, e) for s, e in zip(scales, errs) if e > 0 and np.isfinite(e)][-last:]
    if len(pairs) < 2:
        return None
    x = np.log([p[0] for p in pairs])
    y = np.log([p[1] for p in pairs])
    return float(np.polyfit(x, y, 1)[0])


def _check_divergence(successive: Sequence[float], floor: float, run: int = 4):
    growth = 0
    for a, b in zip(successive, successive[1:]):
        if b > a and b > floor:
            growth += 1
            if growth >= run:
                raise DivergenceDetected(f"successive differences grew {run} steps in a row: {list(successive)}")
        else:
            growth = 0


def _scan(name, values: Callable[[float], np.ndarray], schedule, limit=None,
          slope_band=None, floor=1e-13) -> ConvergenceReport:
    """Core scan: ``values(eps)`` returns a stack of points (n, dim)."""
    sched = [float(s) for s in schedule]
    if any(b >= a for a, b in zip(sched, sched[1:])) or any(s <= 0 for s in sched):
        raise ValueError("schedule must be positive and strictly decreasing")
    vals = [np.asarray(values(e), float) for e in sched]
    ref = vals[-1] if limit is None else np.asarray(limit, float)
    sup = [float(np.max(M.chart_dist(v, ref))) for v in vals]
    succ = [float(np.max(M.chart_dist(a, b))) for a, b in zip(vals, vals[1:])]
    if not all(np.isfinite(sup)):
        raise DivergenceDetected(f"{name}: non-finite values")
    _check_divergence(succ, floor)
    if limit is None:
        slope = fit_slope(sched[:-1], succ)
    else:
        slope = fit_slope(sched, sup)
    if max(succ + [0.0]) <= floor and (limit is None or max(sup) <= 1e-9):
        passed = True
    elif slope_band is not None:
        lo, hi = slope_band
        passed = slope is not None and lo <= slope <= hi
    else:
        passed = slope is not None and slope > 0.5
    return ConvergenceReport(name, sched, sup, succ, slope, passed)


def converge_scan(
    d: Diagram,
    model: M.Model,
    scale_var: str,
    schedule: Sequence[float] | None = None,
    samples: int = 100,
    seed: int = 0,
    fixed_scales: Mapping[str, float] | None = None,
    points: Mapping[str, np.ndarray] | None = None,
    limit: Callable[[Mapping[str, np.ndarray]], Mapping[str, np.ndarray]] | None = None,
    slope_band: tuple[float, float] | None = None,
) -> ConvergenceReport:
    """Evaluate the io function along a scale schedule on a seeded sample.

    Errors are sup distances to ``limit`` (a function of the sample points)
    when given, else to the value at the last scale.  The slope is fitted
    on the last eight steps; without an analytic limit it is fitted to the
    successive differences, which decay at the same rate.
    """
    schedule = default_schedule() if schedule is None else list(schedule)
    rng = np.random.default_rng(seed)
    if points is None:
        points = {name: model.sample(rng, samples) for name in input_variables(d)}
    fixed_scales = dict(fixed_scales or {})

    def stacked(out: Mapping[str, np.ndarray]) -> np.ndarray:
        n = max(np.asarray(v).reshape(-1, model.dim).shape[0] for v in points.values()) if points else 1
        return np.concatenate([np.broadcast_to(np.asarray(out[k], float), (n, model.dim))
                               for k in sorted(out)], axis=0)

    def values(e):
        f = io_function(d, model, {**fixed_scales, scale_var: e})
        return stacked(f(points))

    lim = stacked(limit(points)) if limit is not None else None
    return _scan(f"scan:{d.name or 'diagram'}:{scale_var}", values, schedule, lim, slope_band)


# --- identities ---------------------------------------------------------------

#: sphere samples for exact identities stay this close to (1, 0, 0), so that
#: every intermediate point of the nested sums stays inside the injectivity
#: radius where exp and log are mutually inverse
SPHERE_LOCAL_CAP = 0.1
IDENTITY_NAMES = ("R1", "R2-circ", "R2-bullet", "composition", "unit",
                  "a", "b", "c", "d", "e", "f", "g")


def default_tol(model: M.Model) -> float:
    return 1e-12 if isinstance(model, M.Euclid) else 1e-9


def local_sample(model: M.Model, rng: np.random.Generator, n: int) -> np.ndarray:
    if isinstance(model, M.Sphere):
        return model.sample(rng, n, cap=SPHERE_LOCAL_CAP)
    return model.sample(rng, n)


def _numeric_identities(m: M.Model, e, mu, x, u, v, w) -> dict[str, tuple]:
    c, b = m.circ, m.bullet

    def D(s, x, u, v):
        return M.approx_difference(m, s, x, u, v)

    def S(s, x, u, v):
        return M.approx_sum(m, s, x, u, v)

    def I(s, x, u):
        return M.approx_inverse(m, s, x, u)

    xu = c(e, x, u)
    return {
        "R1": (c(e, x, x), x),
        "R2-circ": (c(e, x, b(e, x, u)), u),
        "R2-bullet": (b(e, x, c(e, x, u)), u),
        "composition": (c(e, x, c(mu, x, u)), c(e * mu, x, u)),
        "unit": (c(1.0, x, u), u),
        "a": (D(e, x, u, S(e, x, u, v)), v),
        "b": (S(e, x, u, D(e, x, u, v)), v),
        "c": (D(e, x, u, v), S(e, xu, I(e, x, u), v)),
        "d": (I(e, xu, I(e, x, u)), u),
        "e": (S(e, x, u, S(e, xu, v, w)), S(e, x, S(e, x, u, v), w)),
        "f": (I(e, x, u), D(e, x, u, x)),
        "g": (S(e, x, x, u), u),
    }


def _term_identities() -> dict[str, tuple[Term, Term]]:
    from .terms import delta as D, inverse as I, sigma as S

    e, mu = parse_scale("eps"), parse_scale("mu")
    x, u, v, w = (Var(k) for k in "xuvw")
    xu = Circ(e, x, u)
    return {
        "R1": (Circ(e, x, x), x),
        "R2-circ": (Circ(e, x, Bullet(e, x, u)), u),
        "R2-bullet": (Bullet(e, x, Circ(e, x, u)), u),
        "composition": (Circ(e, x, Circ(mu, x, u)), Circ(e * mu, x, u)),
        "unit": (Circ(parse_scale("1"), x, u), u),
        "a": (D(e, x, u, S(e, x, u, v)), v),
        "b": (S(e, x, u, D(e, x, u, v)), v),
        "c": (D(e, x, u, v), S(e, xu, I(e, x, u), v)),
        "d": (I(e, xu, I(e, x, u)), u),
        "e": (S(e, x, u, S(e, xu, v, w)), S(e, x, S(e, x, u, v), w)),
        "f": (I(e, x, u), D(e, x, u, x)),
        "g": (S(e, x, x, u), u),
    }


def symbolic_identities() -> dict[str, bool]:
    """Which identities the normalizer proves for free variables and scales."""
    from .terms import equal_modulo

    return {k: equal_modulo(a, b) for k, (a, b) in _term_identities().items()}


@dataclass
class IdentityReport:
    model: str
    samples: int
    tol: float
    errors: dict[str, float]

    @property
    def passed(self) -> dict[str, bool]:
        return {k: e <= self.tol for k, e in self.errors.items()}

    @property
    def ok(self) -> bool:
        return all(self.passed.values())

    def to_json(self) -> dict:
        return {
            "name": f"identities:{self.model}",
            "samples": self.samples,
            "tol": self.tol,
            "maxErrors": self.errors,
            "pass": self.ok,
        }


def check_identities(model: M.Model, samples: int = 1000, tol: float | None = None,
                     seed: int = 0, scale_range: tuple[float, float] = (0.5, 1.0)) -> IdentityReport:
    """Max violation of the irq axioms and of the difference/sum identities.

    Every sample draws its own points and its own scales from ``scale_range``.
    """
    rng = np.random.default_rng(seed)
    x, u, v, w = (local_sample(model, rng, samples) for _ in range(4))
    e = rng.uniform(*scale_range, size=samples)
    mu = rng.uniform(*scale_range, size=samples)
    pairs = _numeric_identities(model, e, mu, x, u, v, w)
    errors = {k: float(np.max(M.chart_dist(a, b))) for k, (a, b) in pairs.items()}
    return IdentityReport(model.name, samples, default_tol(model) if tol is None else tol, errors)


# --- tangent structure ----------------------------------------------------------


def _near(model: M.Model, rng, x, n: int, radius: float) -> np.ndarray:
    """Sample points pulled toward ``x`` by the dilation of ratio ``radius``."""
    return model.circ(radius, x, model.sample(rng, n))


def _base_point(model: M.Model, x) -> np.ndarray:
    if x is not None:
        return model.point(x)
    return model.point([1.0] + [0.0] * (model.dim - 1)) if isinstance(model, M.Sphere) \
        else np.zeros(model.dim)


@dataclass
class CheckReport:
    name: str
    tol: float
    errors: dict[str, float]
    scan: ConvergenceReport | None = None

    @property
    def ok(self) -> bool:
        good = all(e <= self.tol for e in self.errors.values())
        return good and (self.scan is None or self.scan.passed)

    def to_json(self) -> dict:
        out = {"name": self.name, "tol": self.tol, "maxErrors": self.errors, "pass": self.ok}
        if self.scan is not None:
            out["scan"] = self.scan.to_json()
        return out


def tangent_group_check(model: M.Model, x=None, samples: int = 50, schedule=None,
                        tol: float = 1e-6, seed: int = 0, radius: float = 0.02,
                        mu: float = 0.5) -> CheckReport:
    """Group laws of the tangent operation at ``x``, estimated at the finest scale.

    Sample points are taken within ``radius`` of ``x`` (after a dilation),
    since the O(eps) gap between the approximate and the limit operation
    grows with the size of the sample.
    """
    schedule = default_schedule() if schedule is None else list(schedule)
    rng = np.random.default_rng(seed)
    x = _base_point(model, x)
    u, v, w = (_near(model, rng, x, samples, radius) for _ in range(3))
    e = schedule[-1]

    def S(a, b):
        return M.approx_sum(model, e, x, a, b)

    scan = _scan(f"tangent-sum:{model.name}", lambda s: M.approx_sum(model, s, x, u, v), schedule)
    d = model.circ
    checks = {
        "neutral": (S(x, u), u),
        "inverse": (S(u, M.approx_inverse(model, e, x, u)), np.broadcast_to(x, u.shape)),
        "associativity": (S(S(u, v), w), S(u, S(v, w))),
        "dilation-morphism": (d(mu, x, S(u, v)), S(d(mu, x, u), d(mu, x, v))),
    }
    errors = {k: float(np.max(M.chart_dist(a, b))) for k, (a, b) in checks.items()}
    return CheckReport(f"tangent:{model.name}", tol, errors, scan)


# --- residue ------------------------------------------------------------------


def _exact(a):
    """Exact rational copy of a float array (floats are dyadic rationals)."""
    from fractions import Fraction

    return np.vectorize(Fraction, otypes=[object])(np.asarray(a, float))


def residue_convergence(model: M.Model, mu: float = 0.5, lam: float = 0.5, schedule=None,
                        samples: int = 50, seed: int = 0, x=None,
                        points: Mapping[str, np.ndarray] | None = None,
                        exact: bool | None = None) -> ConvergenceReport:
    """sup over sampled (u, v, w) of the distance from R(w) to w, per scale.

    The residue comes from the approximate Reidemeister III rewrite of a
    three-strand braid inside the chora (x, eps).  On linear models the
    residue is the identity for every eps; there it is evaluated in exact
    rational arithmetic (``exact`` defaults to ``model.linear``) because in
    floating point the chart at scale eps amplifies roundoff by eps**-2.
    """
    from fractions import Fraction

    from .rewrite import approx_R3, r3_chora_fixture

    schedule = [2.0 ** -k for k in range(1, 13)] if schedule is None else list(schedule)
    d, sites = r3_chora_fixture()
    _, rec = approx_R3(d, sites)
    rd = rec.diagram
    rng = np.random.default_rng(seed)
    if points is None:
        points = {k: model.sample(rng, samples) for k in "uvw"}
        points["x"] = _base_point(model, x)
    exact = model.linear if exact is None else exact
    if exact:
        points = {k: _exact(v) for k, v in points.items()}

    def num(s):
        return Fraction(s) if exact else float(s)

    def values(e):
        f = io_function(rd, model, {"eps": num(e), "mu": num(mu), "lam": num(lam)})
        return np.asarray(f(points)["w"], dtype=object if exact else float).astype(float)

    w = np.asarray(points["w"], dtype=object if exact else float).astype(float)
    rep = _scan(f"residue:{model.name}", values, schedule, limit=w)
    monotone = all(b < a for a, b in zip(rep.sup_errors, rep.sup_errors[1:]))
    if max(rep.sup_errors) <= 1e-9:
        rep.passed = True
    else:
        rep.passed = monotone and rep.slope is not None and rep.slope >= 0.9
    rep.detail = {"mu": mu, "lambda": lam, "exact": bool(exact), "monotone": monotone}
    return rep


# --- derivatives and linearity -----------------------------------------------


@dataclass
class PansuReport:
    scan: ConvergenceReport
    limit: list
    morphism: CheckReport

    @property
    def ok(self) -> bool:
        return self.scan.passed and self.morphism.ok

    def to_json(self) -> dict:
        return {"name": self.scan.name, "scan": self.scan.to_json(), "limit": self.limit,
                "morphism": self.morphism.to_json(), "pass": self.ok}


def finite_difference(f: M.Homeo, source: M.Model, target: M.Model, e, x, u):
    """D_eps f(x) u: f read in the charts at x and f(x) at scale eps."""
    fx = f.forward(x)
    return target.bullet(e, fx, f.forward(source.circ(e, x, u)))


def pansu_derivative(f: M.Homeo, source: M.Model, target: M.Model | None = None, x=None, u=None,
                     schedule=None, limit=None, samples: int = 20, seed: int = 0,
                     tol: float = 1e-6, radius: float = 0.05, mu: float = 0.5,
                     slope_band: tuple[float, float] | None = None,
                     exact: bool | None = None) -> PansuReport:
    """Scan D_eps f(x) u and check that its limit is a conical-group morphism.

    ``limit`` is the analytic value at ``u`` when known.  The morphism check
    compares the finest-scale estimate L against additivity
    L(S(a, b)) = S'(L a, L b) and against L(d_mu a) = d'_mu(L a), where S, S'
    are the tangent sums at x and f(x), all at the finest scale.

    Between linear models the evaluation is exact rational arithmetic when
    ``f`` accepts it (``exact=None`` tries it), since reading f in the chart
    at scale eps amplifies floating roundoff by eps**-2 on heis1.
    """
    from fractions import Fraction

    target = source if target is None else target
    schedule = default_schedule() if schedule is None else list(schedule)
    x = _base_point(source, x)
    rng = np.random.default_rng(seed)
    u = source.sample(rng, 1)[0] if u is None else np.asarray(u, float)
    a, b = _near(source, rng, x, samples, radius), _near(source, rng, x, samples, radius)
    if exact is None:
        exact = source.linear and target.linear
        if exact:
            try:
                f.forward(_exact(u))
            except TypeError:
                exact = False
    if exact:
        x, u, a, b = (_exact(p) for p in (x, u, a, b))
        num, mu = Fraction, Fraction(mu)
    else:
        num = float

    def D(e, p):
        return np.asarray(finite_difference(f, source, target, num(e), x, p))

    lim_arr = None if limit is None else np.asarray(limit, float)[None, :]
    scan = _scan(f"pansu:{f.name}", lambda e: D(e, u)[None, :].astype(float),
                 schedule, lim_arr, slope_band)
    e = num(schedule[-1])
    fx = f.forward(x)

    def L(p):
        return finite_difference(f, source, target, e, x, p)

    checks = {
        "additivity": (L(M.approx_sum(source, e, x, a, b)),
                       M.approx_sum(target, e, fx, L(a), L(b))),
        "dilation": (L(source.circ(mu, x, a)), target.circ(mu, fx, L(a))),
    }
    errors = {k: float(np.max(M.chart_dist(p, q))) for k, (p, q) in checks.items()}
    lim = [float(c) for c in np.asarray(L(u)).astype(float)]
    scan.detail = {"exact": bool(exact)}
    return PansuReport(scan, lim, CheckReport(f"morphism:{f.name}", tol, errors))


def linearity_check(model: M.Model, samples: int = 200, tol: float | None = None, seed: int = 0,
                    f: Callable | None = None) -> tuple[bool, dict | None]:
    """Whether maps commute with the dilations: f(u o_eps v) = f(u) o_eps f(v).

    Without ``f`` the model's own dilations d^p_mu are tested, with p and mu
    drawn per sample.  Returns (ok, witness of the worst violation or None).
    """
    rng = np.random.default_rng(seed)
    tol = default_tol(model) if tol is None else tol
    u, v = model.sample(rng, samples), model.sample(rng, samples)
    e = rng.uniform(0.1, 0.9, samples)
    extra: dict[str, np.ndarray] = {}
    if f is None:
        p = model.sample(rng, samples)
        m = rng.uniform(0.1, 0.9, samples)
        extra = {"p": p, "mu": m}

        def f(q):
            return model.circ(m, p, q)
    lhs = f(model.circ(e, u, v))
    rhs = model.circ(e, f(u), f(v))
    err = M.chart_dist(lhs, rhs)
    i = int(np.argmax(err))
    if err[i] <= tol:
        return True, None
    witness = {"u": u[i].tolist(), "v": v[i].tolist(), "eps": float(e[i]),
               "violation": float(err[i])}
    witness.update({k: np.asarray(a[i]).tolist() for k, a in extra.items()})
    return False, witness


__all__ += ["local_sample", "IdentityReport", "CheckReport", "PansuReport", "finite_difference",
            "default_tol", "fit_slope", "IDENTITY_NAMES", "SPHERE_LOCAL_CAP"]
