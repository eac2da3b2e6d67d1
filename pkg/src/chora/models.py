"""Concrete emergent algebras: Euclidean spaces, the Heisenberg group, the sphere.

Points are float numpy arrays whose last axis is the coordinate axis, so
every operation also works on stacks of points of shape ``(..., dim)``.
Scales may be Python floats or arrays broadcastable against the leading
axes.  ``bullet`` is by definition ``circ`` at the inverse scale.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = [
    "Model",
    "Euclid",
    "Heisenberg",
    "Sphere",
    "Homeo",
    "UndefinedLog",
    "UnknownModel",
    "get_model",
    "MODEL_NAMES",
    "approx_difference",
    "approx_sum",
    "approx_inverse",
    "relative_dilation",
    "map_distance",
    "chart_dist",
    "parse_point",
    "format_point",
]


class UndefinedLog(ArithmeticError):
    """The sphere logarithm is undefined at antipodal pairs."""


class UnknownModel(KeyError):
    def __str__(self):
        return f"unknown model {self.args[0]!r}"


def _num(a):
    """Float array, or an object array left alone for exact arithmetic."""
    a = np.asarray(a)
    return a if a.dtype == object else a.astype(float)


def _scale(eps):
    e = _num(eps)
    if np.any(e <= 0):
        raise ValueError("scales must be positive")
    # trailing axis for coordinates
    return e[..., None] if e.ndim else e


class Model:
    name: str = ""
    dim: int = 0
    linear: bool = False

    def circ(self, eps, x, u):
        raise NotImplementedError

    def bullet(self, eps, x, u):
        return self.circ(1 / _num(eps), x, u)

    def dist(self, p, q):
        raise NotImplementedError

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        raise NotImplementedError

    def point(self, coords) -> np.ndarray:
        p = np.asarray(coords, dtype=float)
        if p.shape[-1] != self.dim:
            raise ValueError(f"{self.name} points have {self.dim} coordinates, got {p.shape[-1]}")
        return p

    def __repr__(self):
        return f"<model {self.name}>"


class Euclid(Model):
    linear = True

    def __init__(self, n: int):
        if n < 1:
            raise ValueError("dimension must be positive")
        self.dim = n
        self.name = f"euclid{n}"

    def circ(self, eps, x, u):
        e = _scale(eps)
        x = _num(x)
        return x + e * (_num(u) - x)

    def dist(self, p, q):
        return np.linalg.norm(np.asarray(_num(p) - _num(q), float), axis=-1)

    def sample(self, rng, n):
        g = rng.standard_normal((n, self.dim))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        r = rng.random(n) ** (1.0 / self.dim)
        return g * r[:, None]


class Heisenberg(Model):
    """First Heisenberg group in polarized coordinates with intrinsic dilations."""

    name = "heis1"
    dim = 3
    linear = True

    @staticmethod
    def mul(p, q):
        p = _num(p)
        q = _num(q)
        a, b, c = p[..., 0], p[..., 1], p[..., 2]
        a2, b2, c2 = q[..., 0], q[..., 1], q[..., 2]
        return np.stack([a + a2, b + b2, c + c2 + (a * b2 - b * a2) / 2], axis=-1)

    @staticmethod
    def inv(p):
        return -_num(p)

    @staticmethod
    def dilate(eps, p):
        e = _num(eps)
        p = _num(p)
        return np.stack([e * p[..., 0], e * p[..., 1], e * e * p[..., 2]], axis=-1)

    @staticmethod
    def norm(p):
        p = np.asarray(p, float)
        return ((p[..., 0] ** 2 + p[..., 1] ** 2) ** 2 + p[..., 2] ** 2) ** 0.25

    def circ(self, eps, x, u):
        e = _num(eps)
        if np.any(e <= 0):
            raise ValueError("scales must be positive")
        return self.mul(x, self.dilate(e, self.mul(self.inv(x), u)))

    def dist(self, p, q):
        return self.norm(self.mul(self.inv(p), q))

    def sample(self, rng, n):
        return rng.uniform(-1.0, 1.0, size=(n, 3))


class Sphere(Model):
    """Unit 2-sphere with geodesic dilations exp_x(eps log_x y)."""

    name = "sphere"
    dim = 3
    linear = False
    CAP = np.pi / 3

    @staticmethod
    def _unit(p):
        return p / np.linalg.norm(p, axis=-1, keepdims=True)

    def log(self, x, y):
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        cos = np.sum(x * y, axis=-1)
        w = y - cos[..., None] * x
        sin = np.linalg.norm(w, axis=-1)
        if np.any((cos < 0) & (sin < 1e-12)):
            raise UndefinedLog("logarithm of an antipodal pair")
        theta = np.arctan2(sin, cos)
        factor = np.where(sin > 1e-300, theta / np.where(sin > 1e-300, sin, 1.0), 1.0)
        return factor[..., None] * w

    def exp(self, x, v):
        x = np.asarray(x, float)
        v = np.asarray(v, float)
        t = np.linalg.norm(v, axis=-1)
        # sin(t)/t with the removable singularity filled in
        sinc = np.sinc(t / np.pi)
        return self._unit(np.cos(t)[..., None] * x + sinc[..., None] * v)

    def circ(self, eps, x, u):
        e = np.asarray(eps, float)
        if np.any(e <= 0):
            raise ValueError("scales must be positive")
        e = e[..., None] if e.ndim else e
        return self.exp(x, e * self.log(x, u))

    def dist(self, p, q):
        p = np.asarray(p, float)
        q = np.asarray(q, float)
        cross = np.linalg.norm(np.cross(p, q), axis=-1)
        return np.arctan2(cross, np.sum(p * q, axis=-1))

    def point(self, coords):
        p = super().point(coords)
        return self._unit(p)

    def sample(self, rng, n, cap: float | None = None):
        # uniform on the cap {angle to (1,0,0) <= cap}: cos(angle) uniform
        z = rng.uniform(np.cos(self.CAP if cap is None else cap), 1.0, size=n)
        phi = rng.uniform(0, 2 * np.pi, size=n)
        r = np.sqrt(1 - z * z)
        return np.stack([z, r * np.cos(phi), r * np.sin(phi)], axis=-1)


_EUCLID = re.compile(r"euclid([1-9][0-9]?)\Z")
MODEL_NAMES = ("euclid2", "euclid3", "heis1", "sphere")


def get_model(name: str) -> Model:
    m = _EUCLID.match(name)
    if m:
        return Euclid(int(m.group(1)))
    if name == "heis1":
        return Heisenberg()
    if name == "sphere":
        return Sphere()
    raise UnknownModel(name)


@dataclass(frozen=True)
class Homeo:
    """Named invertible map between two models."""

    name: str
    forward: Callable
    inverse: Callable
    source: str = ""
    target: str = ""
    smoothness: str = "smooth"


# --- derived operations -------------------------------------------------------


def approx_difference(model: Model, eps, x, u, v):
    """(x o u) * (x o v), all at scale eps."""
    return model.bullet(eps, model.circ(eps, x, u), model.circ(eps, x, v))


def approx_sum(model: Model, eps, x, u, v):
    return model.bullet(eps, x, model.circ(eps, model.circ(eps, x, u), v))


def approx_inverse(model: Model, eps, x, u):
    return approx_difference(model, eps, x, u, x)


def relative_dilation(model: Model, eps, mu, x, u, v):
    return model.bullet(eps, x, model.circ(mu, model.circ(eps, x, u), model.circ(eps, x, v)))


def chart_dist(p, q):
    """Euclidean distance between coordinate vectors, used to measure errors.

    On heis1 the homogeneous norm is a fourth root, so roundoff of 1e-16
    in the central coordinate reads as 1e-8 and O(eps) errors read as
    O(sqrt(eps)).  Coordinate distance is bi-Lipschitz to the model metric
    on the sphere and on euclid, and on heis1 it reports the algebraic
    error directly.
    """
    return np.linalg.norm(np.asarray(_num(p) - _num(q), float), axis=-1)


def map_distance(model: Model, eps, x, u, v):
    """Distance seen on the map at scale eps, rescaled by 1/eps."""
    return model.dist(model.circ(eps, x, u), model.circ(eps, x, v)) / np.asarray(eps, float)


# --- text --------------------------------------------------------------------


def parse_point(text: str, model: Model | None = None) -> np.ndarray:
    try:
        coords = [float(s) for s in text.split(",")]
    except ValueError:
        raise ValueError(f"bad point literal {text!r}") from None
    p = np.array(coords)
    return model.point(p) if model is not None else p


def format_point(p) -> str:
    """``(-0.5,1)``: shortest round-trip reprs, integral values without '.0'."""
    out = []
    for c in np.asarray(p, float).ravel():
        c = float(c) + 0.0  # drop negative zero
        out.append(str(int(c)) if c.is_integer() and abs(c) < 1e15 else repr(c))
    return "(" + ",".join(out) + ")"
