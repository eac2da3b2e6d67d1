"""Maps as relations between metric spaces, and zoom sequences of charts.

All sups and infs run over finite sets and are computed exactly (up to
float arithmetic on the given distances).  Continuum balls are replaced
by seeded lattice samples.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import models as M
from .errors import DensityViolated, MissingLimit, SizeLimit

__all__ = [
    "FiniteMetricSpace",
    "MapRelation",
    "metrics",
    "generalize",
    "check_propacc1",
    "gh_bound",
    "hausdorff",
    "ZoomSequence",
    "zoom_from_model",
    "scale_composition",
    "scale_stability_check",
    "viewpoint_difference",
    "viewpoint_stability_check",
    "foveal",
    "foveal_properties_check",
    "random_instance",
]

SLACK = 1e-12
EXACT_LIMIT = 12


# --- finite spaces and relations ---------------------------------------------


class FiniteMetricSpace:
    """Labelled points with a validated distance matrix."""

    def __init__(self, labels: Sequence[str], d, check: bool = True):
        self.labels = [str(s) for s in labels]
        self.d = np.asarray(d, dtype=float)
        n = len(self.labels)
        if self.d.shape != (n, n):
            raise ValueError(f"distance matrix must be {n}x{n}, got {self.d.shape}")
        if len(set(self.labels)) != n:
            raise ValueError("point labels must be distinct")
        if check:
            self._validate()

    def _validate(self):
        d = self.d
        if not np.all(np.isfinite(d)) or np.any(d < 0):
            raise ValueError("distances must be finite and nonnegative")
        if np.any(np.abs(np.diag(d)) > 0):
            raise ValueError("d(x,x) must be 0")
        if np.any(np.abs(d - d.T) > SLACK):
            raise ValueError("distance matrix is not symmetric")
        # d[i,k] <= d[i,j] + d[j,k] for all j
        if len(d) and np.any(d[:, None, :] > d[:, :, None] + d[None, :, :] + SLACK):
            raise ValueError("triangle inequality fails")

    def __len__(self):
        return len(self.labels)

    def index(self, label: str) -> int:
        return self.labels.index(label)

    @property
    def diameter(self) -> float:
        return float(self.d.max()) if len(self) else 0.0

    def scaled(self, factor: float) -> FiniteMetricSpace:
        return FiniteMetricSpace(self.labels, self.d * factor, check=False)

    @classmethod
    def from_points(cls, points, dist: Callable, labels=None) -> FiniteMetricSpace:
        p = np.asarray(points, float)
        d = dist(p[:, None, :], p[None, :, :])
        d = 0.5 * (d + d.T)
        np.fill_diagonal(d, 0.0)
        labels = labels if labels is not None else [str(i) for i in range(len(p))]
        return cls(labels, d, check=False)

    @classmethod
    def from_json(cls, doc: dict) -> FiniteMetricSpace:
        try:
            return cls(doc["points"], doc["d"])
        except KeyError as exc:
            raise ValueError(f"metric space file lacks field {exc.args[0]!r}") from None

    def to_json(self) -> dict:
        return {"points": self.labels, "d": self.d.tolist()}


@dataclass(frozen=True)
class MapRelation:
    """A relation between two finite spaces as index pairs (x, y)."""

    source: FiniteMetricSpace
    target: FiniteMetricSpace
    pairs: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if not self.pairs:
            raise ValueError("a relation needs at least one pair")
        ps = tuple(sorted(set((int(a), int(b)) for a, b in self.pairs)))
        for a, b in ps:
            if not (0 <= a < len(self.source) and 0 <= b < len(self.target)):
                raise ValueError(f"pair {(a, b)} is out of range")
        object.__setattr__(self, "pairs", ps)

    @property
    def dom(self) -> set[int]:
        return {a for a, _ in self.pairs}

    @property
    def im(self) -> set[int]:
        return {b for _, b in self.pairs}

    @property
    def xs(self) -> np.ndarray:
        return np.array([a for a, _ in self.pairs])

    @property
    def ys(self) -> np.ndarray:
        return np.array([b for _, b in self.pairs])

    @classmethod
    def from_json(cls, doc: dict, source: FiniteMetricSpace, target: FiniteMetricSpace) -> MapRelation:
        try:
            pairs = [(source.index(a), target.index(b)) for a, b in doc["pairs"]]
        except ValueError as exc:
            raise ValueError(f"relation names an unknown point: {exc}") from None
        return cls(source, target, tuple(pairs))

    def to_json(self) -> dict:
        return {"pairs": [[self.source.labels[a], self.target.labels[b]] for a, b in self.pairs]}


def _acc(dx: np.ndarray, dy: np.ndarray) -> float:
    return float(np.max(np.abs(dy - dx))) if dx.size else 0.0


def metrics(rel: MapRelation, source_scale: float = 1.0, target_scale: float = 1.0) -> dict:
    """Accuracy, precision and resolution, with both metrics rescaled by the given factors."""
    xs, ys = rel.xs, rel.ys
    dx = rel.source.d[np.ix_(xs, xs)] * source_scale
    dy = rel.target.d[np.ix_(ys, ys)] * target_scale
    res_y = {}
    for y in sorted(rel.im):
        pts = xs[ys == y]
        res_y[y] = float(np.max(rel.source.d[np.ix_(pts, pts)])) * source_scale
    prec_x = {}
    for x in sorted(rel.dom):
        pts = ys[xs == x]
        prec_x[x] = float(np.max(rel.target.d[np.ix_(pts, pts)])) * target_scale
    return {
        "accuracy": _acc(dx, dy),
        "precision": max(prec_x.values()),
        "resolution": max(res_y.values()),
        "precisionAt": {rel.source.labels[k]: v for k, v in prec_x.items()},
        "resolutionAt": {rel.target.labels[k]: v for k, v in res_y.items()},
    }


def _dense(space: FiniteMetricSpace, subset: set[int], radius: float) -> bool:
    idx = sorted(subset)
    return bool(np.all(np.min(space.d[:, idx], axis=1) <= radius + SLACK))


def generalize(rel: MapRelation, eps: float, mu: float) -> MapRelation:
    """(x, y) is kept when some (x', y') in rel has d(x,x') <= eps and D(y,y') <= mu."""
    if not _dense(rel.source, rel.dom, eps):
        raise DensityViolated(f"domain is not {eps}-dense in the source")
    if not _dense(rel.target, rel.im, mu):
        raise DensityViolated(f"image is not {mu}-dense in the target")
    near_x = rel.source.d[:, rel.xs] <= eps + SLACK  # (|X|, |rel|)
    near_y = rel.target.d[:, rel.ys] <= mu + SLACK  # (|Y|, |rel|)
    hit = (near_x.astype(np.int64) @ near_y.T.astype(np.int64)) > 0
    pairs = tuple(zip(*np.nonzero(hit)))
    return MapRelation(rel.source, rel.target, pairs)


@dataclass
class PropReport:
    values: dict
    violations: list[dict] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_json(self) -> dict:
        return {"name": "propacc", **self.values, "violations": self.violations, "pass": self.ok}


def check_propacc1(rel: MapRelation, eps: float, mu: float) -> PropReport:
    """Evaluate the five accuracy inequalities for rel and its generalization.

    Each inequality is checked with slack 1e-12; a violation records the
    item, both sides and the amount.
    """
    bar = generalize(rel, eps, mu)
    m, mb = metrics(rel), metrics(bar)
    acc, prec, res = m["accuracy"], m["precision"], m["resolution"]
    accb, precb, resb = mb["accuracy"], mb["precision"], mb["resolution"]
    up = acc + 2 * (eps + mu)
    checks = [
        ("a", res, acc),
        ("b", prec, acc),
        ("c-lower", res + 2 * eps, resb),
        ("c-upper", resb, up),
        ("d-lower", prec + 2 * mu, precb),
        ("d-upper", precb, up),
        ("e", abs(accb - acc), 2 * (eps + mu)),
    ]
    violations = [
        {"item": k, "lhs": lhs, "rhs": rhs, "excess": lhs - rhs}
        for k, lhs, rhs in checks if lhs > rhs + SLACK
    ]
    values = {"eps": eps, "mu": mu, "acc": acc, "prec": prec, "res": res,
              "accBar": accb, "precBar": precb, "resBar": resb}
    return PropReport(values, violations)


def random_instance(rng: np.random.Generator, max_size: int = 8):
    """Random (rel, eps, mu) on two random Euclidean point sets of size <= max_size.

    eps and mu are drawn at least as large as the density radii, so the
    generalization is always defined.
    """
    nx, ny = rng.integers(1, max_size + 1, size=2)
    X = FiniteMetricSpace.from_points(rng.uniform(0, 1, (nx, 2)), M.chart_dist)
    Y = FiniteMetricSpace.from_points(rng.uniform(0, 1, (ny, 2)), M.chart_dist)
    k = int(rng.integers(1, nx * ny + 1))
    flat = rng.choice(nx * ny, size=k, replace=False)
    rel = MapRelation(X, Y, tuple((int(i // ny), int(i % ny)) for i in flat))
    need_e = float(np.max(np.min(X.d[:, sorted(rel.dom)], axis=1)))
    need_m = float(np.max(np.min(Y.d[:, sorted(rel.im)], axis=1)))
    eps = need_e + float(rng.uniform(0, 0.3))
    mu = need_m + float(rng.uniform(0, 0.3))
    return rel, eps, mu


# --- Gromov-Hausdorff ----------------------------------------------------------


def _pair_acc(X: FiniteMetricSpace, Y: FiniteMetricSpace, pairs) -> float:
    xs = np.array([a for a, _ in pairs])
    ys = np.array([b for _, b in pairs])
    return _acc(X.d[np.ix_(xs, xs)], Y.d[np.ix_(ys, ys)])


def gh_bound(X: FiniteMetricSpace, Y: FiniteMetricSpace, mode: str = "exact",
             budget: int = 2000, seed: int = 0) -> float:
    """Least accuracy of a relation with full domain and full image.

    ``exact`` enumerates every such relation (|X|*|Y| <= 12).  ``stochastic``
    returns the best of ``budget`` random relations drawn from a seeded
    stream, so larger budgets never give a larger bound.
    """
    nx, ny = len(X), len(Y)
    cells = [(i, j) for i in range(nx) for j in range(ny)]
    if mode == "exact":
        if nx * ny > EXACT_LIMIT:
            raise SizeLimit(f"exact GH enumeration needs |X|*|Y| <= {EXACT_LIMIT}, got {nx * ny}")
        best = math.inf
        for mask in range(1, 1 << len(cells)):
            pairs = [c for k, c in enumerate(cells) if mask >> k & 1]
            if {a for a, _ in pairs} != set(range(nx)) or {b for _, b in pairs} != set(range(ny)):
                continue
            best = min(best, _pair_acc(X, Y, pairs))
        return float(best)
    if mode != "stochastic":
        raise ValueError(f"unknown GH mode {mode!r}")
    rng = np.random.default_rng(seed)
    best = math.inf
    for _ in range(max(1, budget)):
        f = rng.integers(0, ny, size=nx)
        g = rng.integers(0, nx, size=ny)
        pairs = set(zip(range(nx), f.tolist())) | set(zip(g.tolist(), range(ny)))
        best = min(best, _pair_acc(X, Y, sorted(pairs)))
    return float(best)


# --- relations between point clouds -------------------------------------------


def hausdorff(A: np.ndarray, B: np.ndarray, mu: float, dist: Callable = M.chart_dist) -> float:
    """Hausdorff distance between finite sets of pairs under (1/mu) D + D.

    ``A`` and ``B`` have shape (n, 2, dim): entry [k, 0] is the domain
    point and [k, 1] the image point of the k-th pair.
    """
    A, B = np.asarray(A, float), np.asarray(B, float)
    d = dist(A[:, None, 0], B[None, :, 0]) / mu + dist(A[:, None, 1], B[None, :, 1])
    return float(max(d.min(axis=1).max(), d.min(axis=0).max()))


def cloud_accuracy(P, Q, dist_p: Callable, dist_q: Callable, p_scale: float = 1.0,
                   q_scale: float = 1.0) -> float:
    """sup |q_scale D(q_i, q_j) - p_scale d(p_i, p_j)| over the pairs (p_i, q_i)."""
    P, Q = np.asarray(P, float), np.asarray(Q, float)
    dp = dist_p(P[:, None], P[None, :]) * p_scale
    dq = dist_q(Q[:, None], Q[None, :]) * q_scale
    return _acc(dp, dq)


# --- zoom sequences -----------------------------------------------------------


def _lattice(dim: int, step: float, angle: float) -> np.ndarray:
    """Points of a rotated square lattice inside the closed unit ball of R^dim."""
    k = int(math.ceil(1.5 / step))
    axes = [np.arange(-k, k + 1) * step] * dim
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, dim)
    c, s = math.cos(angle), math.sin(angle)
    rot = np.eye(dim)
    rot[:2, :2] = [[c, -s], [s, c]]
    pts = pts @ rot.T
    keep = np.linalg.norm(pts, axis=1) <= 1.0 + SLACK
    return pts[keep]


@dataclass
class ZoomSequence:
    """Charts eps -> rho^x_eps read off a model's dilations, optionally pixelated.

    The chart at scale eps sends u in the ball B(c, eps) to the dilation
    of u about c by 1/eps (the map space is the territory itself, with
    basepoint c), then snaps it to the lattice of step ``h`` anchored at c.
    """

    model: M.Model
    center: np.ndarray
    h: float = 0.0
    step: float | None = None
    angle: float = 0.3
    _unit: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.h < 0:
            raise ValueError("quantization h must be nonnegative")
        self.center = np.asarray(self.center, float)
        dim = self.model.dim if not isinstance(self.model, M.Sphere) else 2
        step = self.step if self.step is not None else (1 / 8 if dim <= 2 else 1 / 4)
        self._unit = _lattice(dim, step, self.angle)

    # the limit of the scale-composed charts; None when it is not known
    def limit_inverse(self, mu: float, q):
        """Inverse of the self-similar limit relation: u'' -> d^y_mu u''."""
        return self.model.circ(mu, self.center, q)

    def dist(self, p, q):
        return self.model.dist(p, q)

    def _unit_ball(self, c) -> np.ndarray:
        m, L = self.model, self._unit
        if isinstance(m, M.Euclid):
            return c + L
        if isinstance(m, M.Heisenberg):
            # lattice in the box, kept inside the unit ball of the homogeneous norm
            pts = m.mul(c, L)
            return pts[m.norm(L) <= 1.0 + SLACK]
        if isinstance(m, M.Sphere):
            a = np.array([1.0, 0.0, 0.0]) if abs(c[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
            e1 = a - np.dot(a, c) * c
            e1 /= np.linalg.norm(e1)
            e2 = np.cross(c, e1)
            return m.exp(c, L[:, :1] * e1 + L[:, 1:2] * e2)
        raise ValueError(f"no zoom sampler for model {m.name}")

    def ball(self, eps: float, center=None) -> np.ndarray:
        """Seeded lattice sample of the closed ball B(center, eps)."""
        c = self.center if center is None else np.asarray(center, float)
        return self.model.circ(eps, c, self._unit_ball(c))

    def snap(self, p, center=None):
        if self.h == 0:
            return p
        c = self.center if center is None else np.asarray(center, float)
        return c + self.h * np.round((p - c) / self.h)

    def chart(self, eps: float, u, center=None):
        c = self.center if center is None else np.asarray(center, float)
        return self.snap(self.model.circ(1.0 / eps, c, u), c)

    def in_ball(self, eps: float, u, center=None) -> np.ndarray:
        c = self.center if center is None else np.asarray(center, float)
        return self.dist(c, u) <= eps * (1 + 1e-9)

    def accuracy(self, eps: float, points=None) -> float:
        """Measured zoom modulus F(eps): accuracy of the chart on ``points`` in B(x, eps)."""
        u = self.ball(eps) if points is None else np.asarray(points, float)
        u = u[self.in_ball(eps, u)]
        return cloud_accuracy(u, self.chart(eps, u), self.dist, self.dist, 1.0 / eps)


def zoom_from_model(model: M.Model, x=None, h: float = 0.0, **kw) -> ZoomSequence:
    x = np.zeros(model.dim) if x is None else model.point(x)
    return ZoomSequence(model, x, h, **kw)


def _union(*arrays) -> np.ndarray:
    return np.unique(np.concatenate(arrays, axis=0).round(15), axis=0)


@dataclass
class CompositionReport:
    eps: float
    mu: float
    pairs: np.ndarray
    accuracy: float
    F_eps: float
    F_epsmu: float

    @property
    def bound(self) -> float:
        return self.F_eps / self.mu + self.F_epsmu

    @property
    def ok(self) -> bool:
        return self.accuracy <= self.bound + SLACK

    def to_json(self) -> dict:
        return {"eps": self.eps, "mu": self.mu, "accuracy": self.accuracy, "F_eps": self.F_eps,
                "F_epsmu": self.F_epsmu, "bound": self.bound, "pass": self.ok}


def scale_composition(zs: ZoomSequence, eps: float, mu: float) -> CompositionReport:
    """Both charts of the small ball B(x, eps*mu), paired through their common points.

    The accuracy uses (1/mu) D on the domain and D on the image; F is the
    accuracy of each chart measured on the union of both lattice samples.
    """
    if not (0 < eps <= 1 and 0 < mu <= 1):
        raise ValueError("scales must lie in (0, 1]")
    u = zs.ball(eps * mu)
    p1, p2 = zs.chart(eps, u), zs.chart(eps * mu, u)
    acc = cloud_accuracy(p1, p2, zs.dist, zs.dist, 1.0 / mu)
    pts = _union(zs.ball(eps), u)
    return CompositionReport(eps, mu, np.stack([p1, p2], axis=1), acc,
                             zs.accuracy(eps, pts), zs.accuracy(eps * mu, pts))


def _stability_floor(zs: ZoomSequence, mu: float) -> float:
    return 2 * (1 + 1 / mu) * zs.h * math.sqrt(zs.model.dim) + 1e-12


def _consecutive(rels: list[np.ndarray], mu: float, floor: float) -> list[float]:
    from .evaluate import _check_divergence

    dists = [hausdorff(a, b, mu) for a, b in zip(rels, rels[1:])]
    _check_divergence(dists, floor)
    return dists


def _self_similarity(pairs: np.ndarray, mu: float, dist) -> float:
    a, b = pairs[:, 0], pairs[:, 1]
    return float(np.max(np.abs(dist(b[:, None], b[None, :]) - dist(a[:, None], a[None, :]) / mu)))


@dataclass
class StabilityReport:
    name: str
    schedule: list[float]
    hausdorff: list[float]
    floor: float
    limit: np.ndarray
    violation: float
    tol: float

    @property
    def ok(self) -> bool:
        return self.violation <= self.tol

    def to_json(self) -> dict:
        return {"name": self.name, "scales": self.schedule, "hausdorff": self.hausdorff,
                "floor": self.floor, "limitSize": int(len(self.limit)),
                "violation": self.violation, "tol": self.tol, "pass": self.ok}


def scale_stability_check(zs: ZoomSequence, mu: float, schedule: Sequence[float],
                          tol: float = 1e-6) -> StabilityReport:
    """Hausdorff distances between consecutive scale compositions, and
    self-similarity D(u'', v'') = (1/mu) D(u', v') of the last one."""
    sched = [float(s) for s in schedule]
    if any(b >= a for a, b in zip(sched, sched[1:])):
        raise ValueError("schedule must be strictly decreasing")
    rels = [scale_composition(zs, e, mu).pairs for e in sched]
    floor = _stability_floor(zs, mu)
    dists = _consecutive(rels, mu, floor)
    lim = rels[-1]
    return StabilityReport(f"scale-stability:mu={mu}", sched, dists, floor, lim,
                           _self_similarity(lim, mu, zs.dist), tol)


def viewpoint_difference(zs: ZoomSequence, eps: float, u1) -> np.ndarray:
    """Pairs (v', v'') where v is charted at scale eps from x and from x1.

    x1 is the territory point seen at u1 on the chart centred at x.
    """
    u1 = np.asarray(u1, float)
    x1 = zs.model.circ(eps, zs.center, u1)
    v = zs.ball(eps)
    v = v[zs.in_ball(eps, v, x1)]
    return np.stack([zs.chart(eps, v), zs.chart(eps, v, x1)], axis=1)


def viewpoint_stability_check(zs: ZoomSequence, u1, schedule: Sequence[float],
                              tol: float = 1e-9) -> StabilityReport:
    """Consecutive Hausdorff distances of the viewpoint differences; the last
    one is tested for being an isometry."""
    sched = [float(s) for s in schedule]
    rels = [viewpoint_difference(zs, e, u1) for e in sched]
    floor = _stability_floor(zs, 1.0)
    dists = _consecutive(rels, 1.0, floor)
    lim = rels[-1]
    return StabilityReport("viewpoint-stability", sched, dists, floor, lim,
                           _self_similarity(lim, 1.0, zs.dist), tol)


# --- foveal maps --------------------------------------------------------------


@dataclass
class FovealMap:
    eps: float
    mu: float
    domain: np.ndarray
    image: np.ndarray
    inner: np.ndarray  # domain points in B(x, eps*mu)


def foveal(zs: ZoomSequence, mu: float, eps: float) -> FovealMap:
    """The mu-foveal map at scale eps.

    Points of the inner ball B(x, eps*mu) are charted at the finer scale
    eps*mu and brought back through the inverse of the limit relation;
    the rest use the chart at scale eps.  The domain sample is the union
    of the lattice samples of both balls.
    """
    inv = getattr(zs, "limit_inverse", None)
    if inv is None:
        raise MissingLimit("the zoom sequence has no scale-stability limit")
    u = _union(zs.ball(eps), zs.ball(eps * mu))
    inner = zs.in_ball(eps * mu, u)
    img = zs.chart(eps, u)
    img[inner] = inv(mu, zs.chart(eps * mu, u[inner]))
    return FovealMap(eps, mu, u, img, inner)


@dataclass
class FovealReport:
    rows: list[dict]

    @property
    def ok(self) -> bool:
        return all(r["restricted_ok"] and r["cascade_ok"] and r["eq21_ok"] for r in self.rows)

    @property
    def modulus_ok(self) -> bool:
        return all(r["modulus_ok"] for r in self.rows)

    def to_json(self) -> dict:
        return {"name": "foveal", "rows": self.rows, "pass": self.ok, "modulusPass": self.modulus_ok}


def foveal_properties_check(zs: ZoomSequence, mus: Sequence[float], eps_grid: Sequence[float]) -> FovealReport:
    """Accuracy bounds of foveal maps over a grid of (eps, mu).

    For every cell: the restricted foveal map (inner ball, image in
    B(y, mu)) has accuracy <= mu F(eps mu); its scale composition with the
    chart at eps*mu has accuracy <= 2 F(eps mu); the plain composition of
    charts obeys the cascading bound; and the whole foveal map is compared
    with the zoom modulus F(eps) + mu F_mu(eps).
    """
    rows = []
    for mu in mus:
        for eps in eps_grid:
            fm = foveal(zs, mu, eps)
            y = zs.center
            r = fm.inner & (zs.dist(y, fm.image) <= mu * (1 + 1e-9))
            u, up = fm.domain[r], fm.image[r]
            acc_r = cloud_accuracy(u, up, zs.dist, zs.dist, 1.0 / eps)
            F_em = zs.accuracy(eps * mu, u)
            upp = zs.chart(eps * mu, u)
            acc_c = cloud_accuracy(up, upp, zs.dist, zs.dist, 1.0 / mu)
            comp = scale_composition(zs, eps, mu)
            acc_all = cloud_accuracy(fm.domain, fm.image, zs.dist, zs.dist, 1.0 / eps)
            F_e = zs.accuracy(eps, fm.domain)
            graph = comp.pairs.copy()
            graph[:, 0] = zs.limit_inverse(mu, graph[:, 1])
            F_mu = hausdorff(comp.pairs, graph, mu)
            rows.append({
                "eps": eps, "mu": mu,
                "restricted": acc_r, "restricted_bound": mu * F_em,
                "restricted_ok": acc_r <= mu * F_em + SLACK,
                "cascade": acc_c, "cascade_bound": 2 * F_em,
                "cascade_ok": acc_c <= 2 * F_em + SLACK,
                "eq21": comp.accuracy, "eq21_bound": comp.bound, "eq21_ok": comp.ok,
                "modulus": acc_all, "modulus_bound": F_e + mu * F_mu,
                "modulus_ok": acc_all <= F_e + mu * F_mu + SLACK,
            })
    return FovealReport(rows)
