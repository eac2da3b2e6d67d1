"""Reusable diagram fixtures: single gates, nested choroi and random braids."""
from __future__ import annotations

import numpy as np

from .diagram import Builder, Diagram, build_crossing
from .rewrite import make_gate, r3_chora_fixture
from .terms import Var

__all__ = [
    "crossing",
    "diffgate",
    "chora_fixture",
    "nested_chain",
    "three_choroi",
    "nested_corpus",
    "random_braid",
    "SCALE_CHOICES",
    "r3_chora_fixture",
]

_LEVELS = [("x", "eps"), ("y", "mu"), ("z", "nu"), ("t", "tau")]


def crossing(kind: str = "circ", scale="eps") -> Diagram:
    return build_crossing(kind, scale)


def diffgate(scale="eps") -> Diagram:
    """Difference gate with visible output ``out``; x continues as a hidden output."""
    return make_gate("difference", scale, name="diffgate")


def chora_fixture(base: str = "x", scale="eps", inner_scale="mu") -> Diagram:
    """Elementary chora (x, eps): parameter u over input v, inner crossing mu."""
    b = Builder(name="chora")
    u = b.input("u", id="i_u")
    v = b.input("v", id="i_v")
    ou, ov = b.elementary_chora(Var(base), scale, u, v, "circ", inner_scale)
    b.output(ou, "u", id="o_u")
    b.output(ov, "v", id="o_v")
    return b.build()


def nested_chain(depth: int, strands: int = 2, inner: str = "s", kind: str = "circ") -> Diagram:
    """``depth`` choroi nested in a chain; the innermost one holds a braid."""
    b = Builder(name=f"nest{depth}x{strands}{kind}")
    hs = [b.input(f"u{i}") for i in range(strands)]

    def body_at(k):
        def body(p):
            if k == depth:
                p = list(p)
                for i in range(strands - 1):
                    p[i], p[i + 1], _f, _g = b.crossing(p[i], p[i + 1], kind, inner)
                return p
            base, scale = _LEVELS[k]
            return b.chora(Var(base), scale, p, body_at(k + 1))[0]
        return body

    base, scale = _LEVELS[0]
    outs, _w, _i = b.chora(Var(base), scale, hs, body_at(1))
    for i, h in enumerate(outs):
        b.output(h, f"u{i}")
    return b.build()


def three_choroi(inner: str = "s") -> Diagram:
    """An outer chora (x, eps) holding two disjoint choroi and a crossing between them."""
    b = Builder(name="three-choroi")
    hs = [b.input(k) for k in ("a", "b", "c", "d")]

    def cross(p):
        a, c, _f, _g = b.crossing(p[0], p[1], "circ", inner)
        return [a, c]

    def outer(p):
        left, _w1, _i1 = b.chora(Var("y"), "mu", p[:2], cross)
        right, _w2, _i2 = b.chora(Var("z"), "nu", p[2:], cross)
        m1, m2, _f, _g = b.crossing(left[1], right[0], "bullet", "lam")
        return [left[0], m1, m2, right[1]]

    outs, _w, _i = b.chora(Var("x"), "eps", hs, outer)
    for k, h in zip("abcd", outs):
        b.output(h, k)
    return b.build()


def nested_corpus() -> dict[str, Diagram]:
    """Named diagrams satisfying the nested-choroi hypothesis."""
    corpus = {"elementary": chora_fixture(), "three-choroi": three_choroi()}
    for depth in (1, 2, 3):
        corpus[f"chain{depth}"] = nested_chain(depth)
    corpus["chain1-3strands"] = nested_chain(1, 3)
    corpus["chain2-3strands"] = nested_chain(2, 3)
    corpus["chain2-bullet"] = nested_chain(2, kind="bullet")
    corpus["chain3-3strands"] = nested_chain(3, 3)
    corpus["chain1-4strands"] = nested_chain(1, 4)
    corpus["chain2-product"] = nested_chain(2, inner="s*t")
    return corpus


SCALE_CHOICES = ("eps", "mu", "eps*mu", "eps^-1", "mu^-1")


def _inverse_scale(s: str) -> str:
    if s == "1":
        return s
    return {"eps": "eps^-1", "eps^-1": "eps", "mu": "mu^-1", "mu^-1": "mu"}.get(s, "eps^-1*mu^-1")


def random_braid(rng: np.random.Generator, strands: int = 3, crossings: int = 15,
                 name: str = "braid", gates: bool = False) -> Diagram:
    """Random braid-like diagram of at most ``crossings`` crossings.

    Generators are drawn so that R2, compose and W2 sites occur: a crossing
    is sometimes followed by its inverse or by a second crossing on the
    same pair, and a few crossings carry the unit scale.  With ``gates``
    some triples of adjacent strands pass through a difference gate, which
    counts as three crossings.
    """
    b = Builder(name=name)
    hs = [b.input(f"x{i}") for i in range(strands)]
    used = 0
    while used < crossings:
        if gates and strands >= 3 and used + 3 <= crossings and rng.random() < 0.15:
            i = int(rng.integers(strands - 2))
            s = SCALE_CHOICES[int(rng.integers(len(SCALE_CHOICES)))]
            hs[i], hs[i + 1], hs[i + 2] = b.difference(hs[i], hs[i + 1], hs[i + 2], s)
            used += 3
            continue
        i = int(rng.integers(strands - 1))
        kind = "circ" if rng.random() < 0.6 else "bullet"
        s = SCALE_CHOICES[int(rng.integers(len(SCALE_CHOICES)))] if rng.random() < 0.9 else "1"
        over, under = (i, i + 1) if rng.random() < 0.5 else (i + 1, i)
        hs[over], hs[under], _f, _g = b.crossing(hs[over], hs[under], kind, s)
        used += 1
        r = rng.random()
        if used < crossings and r < 0.25:
            hs[over], hs[under], _f, _g = b.crossing(hs[over], hs[under], kind, _inverse_scale(s))
            used += 1
        elif used < crossings and r < 0.45:
            hs[over], hs[under], _f, _g = b.crossing(hs[over], hs[under], kind, SCALE_CHOICES[0])
            used += 1
    for i, h in enumerate(hs):
        b.output(h, f"y{i}")
    return b.build()
