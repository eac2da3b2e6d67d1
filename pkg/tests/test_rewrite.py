from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from chora import corpus
from chora import models as M
from chora.diagram import Builder, Diagram, Node, Wire, validate
from chora.errors import ScaleMismatch, SiteMismatch
from chora.evaluate import _exact, local_sample, input_variables, io_function, io_terms, is_acceptable
from chora.rewrite import (
    MoveKind,
    applicable_sites,
    apply_move,
    approx_R3,
    crossing_to_difference,
    decompose,
    make_gate,
    normalize_choroi,
    residue_diagram,
)
from chora.scale import parse_scale
from chora.terms import Circ, Var, equal_modulo

SCALES = {"eps": 0.4, "mu": 0.5, "nu": 0.6, "tau": 0.7, "s": 0.3, "t": 0.8, "lam": 0.45}
EXACT_SCALES = {"eps": Fraction(7, 10), "mu": Fraction(3, 5)}
EUCLID2, HEIS, SPHERE = (M.get_model(n) for n in ("euclid2", "heis1", "sphere"))


def _points(d, model, n=20, seed=0):
    rng = np.random.default_rng(seed)
    # sphere points stay in a small cap: every rescaled pixel then stays
    # inside the injectivity radius, where the moves are exact identities
    return {k: local_sample(model, rng, n) for k in input_variables(d)}


def io_gap(d1, d2, model=EUCLID2, scales=SCALES, n=20, seed=0, exact=False):
    pts = _points(d1, model, n, seed)
    if exact:
        pts = {k: _exact(np.round(v * 64) / 64) for k, v in pts.items()}
    a = io_function(d1, model, scales)(pts)
    b = io_function(d2, model, scales)({k: pts[k] for k in input_variables(d2)})
    assert set(a) == set(b)
    return max(float(np.max(M.chart_dist(a[k], b[k]))) for k in a)


def _gates(d, kind=None):
    return [n.id for n in d.gate_nodes() if kind is None or n.kind == kind]


def test_r1_removes_a_tadpole():
    d = Diagram([Node("i", "input", label="x"), Node("f", "fanout"),
                 Node("g", "circ", parse_scale("eps")), Node("o", "output", label="y")],
                [Wire("w1", ("i", "out"), ("f", "in")), Wire("w2", ("f", "outChord"), ("g", "inBase"), "chord"),
                 Wire("w3", ("f", "outThrough"), ("g", "inOperand")), Wire("w4", ("g", "out"), ("o", "in"))],
                name="tadpole")
    assert validate(d).ok
    r = apply_move(d, MoveKind.R1_remove_tadpole, ["g"])
    assert validate(r).ok and not r.gate_nodes()
    assert io_terms(r)["y"] == Var("x")


def _pair(first, second):
    b = Builder(name="pair")
    x, u = b.input("x"), b.input("u")
    x1, u1, _f, g1 = b.crossing(x, u, "circ", first)
    x2, u2, _f, g2 = b.crossing(x1, u1, "circ", second)
    b.output(x2, "x")
    b.output(u2, "u")
    return b.build(), g1, g2


def test_r2_cancels_inverse_scales():
    d, g1, g2 = _pair("eps", "eps^-1")
    r = apply_move(d, "r2", [g1, g2])
    assert validate(r).ok and not r.gate_nodes()
    assert io_gap(d, r, HEIS) <= 1e-12
    d, g1, g2 = _pair("eps", "mu")
    with pytest.raises(ScaleMismatch):
        apply_move(d, "r2", [g1, g2])


def test_compose_multiplies_scales():
    d, g1, g2 = _pair("eps", "mu")
    r = apply_move(d, "compose", [g1, g2])
    (g,) = r.gate_nodes()
    assert g.scale == parse_scale("eps*mu")
    assert io_gap(d, r, SPHERE) <= 1e-12


def test_virtual_insert_then_remove_is_identity():
    d = corpus.crossing()
    segs = sorted(w for w, x in d.wires.items() if x.role == "segment")
    r = apply_move(d, "virtual-insert", segs[:2])
    (g,) = [n.id for n in r.gate_nodes() if n.scale.is_one()]
    back = apply_move(r, "virtual-remove", [g])
    assert validate(back).ok
    assert io_gap(d, back, HEIS) == 0.0
    assert len(back.nodes) == len(d.nodes) and len(back.wires) == len(d.wires)


def test_w2_reverses_an_over_strand():
    b = Builder(name="w2")
    x, u, v = b.input("x"), b.input("u"), b.input("v")
    x1, u1, _f, _g = b.crossing(x, u, "circ", "eps")
    x2, v1, _f, _g = b.crossing(x1, v, "bullet", "mu")
    b.output(x2, "x")
    b.output(u1, "u")
    b.output(v1, "v")
    d = b.build()
    wid = next(s for k, s in applicable_sites(d) if k is MoveKind.W2_reverse_overstrand)
    r = apply_move(d, "w2", wid)
    assert sorted(n.kind for n in r.gate_nodes()) == ["bullet", "circ"]
    t1, t2 = io_terms(d), io_terms(r)
    assert all(equal_modulo(t1[k], t2[k]) for k in t1)


def test_difference_gate_values():
    d = make_gate("difference", "eps")
    out = io_function(d, EUCLID2, {"eps": 0.5})(
        {"x": np.zeros(2), "u": np.array([1.0, 0]), "v": np.array([0.0, 1])})
    assert np.allclose(out["out"], [-0.5, 1])
    rng = np.random.default_rng(4)
    x, u, v = (HEIS.sample(rng, 30) for _ in range(3))
    got = io_function(d, HEIS, {"eps": 0.3})({"x": x, "u": u, "v": v})["out"]
    assert np.max(M.chart_dist(got, M.approx_difference(HEIS, 0.3, x, u, v))) <= 1e-12


def test_inverse_gate_is_difference_with_v_at_x():
    inv = make_gate("inverse", "eps")
    rng = np.random.default_rng(5)
    x, u = HEIS.sample(rng, 30), HEIS.sample(rng, 30)
    got = io_function(inv, HEIS, {"eps": 0.3})({"x": x, "u": u})["out"]
    assert np.max(M.chart_dist(got, M.approx_difference(HEIS, 0.3, x, u, x))) <= 1e-12


def test_sum_undoes_difference():
    b = Builder(name="sum-of-difference")
    x, u, v = b.input("x"), b.input("u"), b.input("v")
    x1, _a, dlt = b.difference(x, u, v, "eps")
    x2, _a2, s = b.sum(x1, u, dlt, "eps")
    b.output(s, "out")
    b.output(x2, "_x")
    d = b.build()
    assert io_terms(d)["out"] == Var("v")


def test_crossing_to_difference():
    d = corpus.crossing()
    (g,) = _gates(d)
    r = crossing_to_difference(d, g)
    assert r.census() == {"DifferenceGate": 1}
    assert io_gap(d, r, SPHERE) <= 1e-9
    assert equal_modulo(io_terms(r)["v"], Circ("eps", Var("x"), Var("u")))
    with pytest.raises(SiteMismatch):
        crossing_to_difference(r, _gates(r)[0])


def test_elementary_chora_decompositions():
    d = corpus.chora_fixture()
    rec = d.gates[0].id
    one = decompose(d, "elementary-chora", [rec])
    assert one.census() == {"DifferenceGate": 2} and len(one.gate_nodes()) == 7
    two = decompose(d, "elementary-chora", [rec], way=2)
    for r in (one, two):
        assert validate(r).ok and not r.choroi
        assert io_gap(d, r, SPHERE) <= 1e-9
    rng = np.random.default_rng(6)
    u, v = EUCLID2.sample(rng, 20), EUCLID2.sample(rng, 20)
    x = np.broadcast_to(np.array([0.3, -0.2]), u.shape)
    got = io_function(d, EUCLID2, SCALES)({"x": x, "u": u, "v": v})
    assert np.allclose(got["v"], u + SCALES["mu"] * (v - u), atol=1e-12)


def test_difference_self_similar():
    d = make_gate("difference", "eps")
    r = decompose(d, "diff-self-similar", [d.gates[0].id])
    assert r.census() == {"DifferenceGate": 3}
    assert io_gap(d, r, SPHERE) <= 1e-9


def test_chora_in_chora():
    d = corpus.nested_chain(2)
    inner = next(c for c in d.choroi if c.base == Var("y"))
    r = decompose(d, "chora-in-chora", [inner.boundary])
    assert r.census() == {"DifferenceGate": 4}
    assert len(r.choroi) == len(d.choroi)
    assert io_gap(d, r, SPHERE) <= 1e-9


def test_difference_in_chora():
    b = Builder(name="dg-in-chora")
    hs = [b.input(k) for k in "xuv"]
    outs, _w, _i = b.chora(Var("y"), "eps", hs, lambda p: list(b.difference(p[0], p[1], p[2], "mu")))
    for k, h in zip("xuv", outs):
        b.output(h, k)
    d = b.build()
    r = decompose(d, "diff-in-chora", [d.gates[0].id])
    assert validate(r).ok and r.census() == {"ElementaryChora": 3}
    assert io_gap(d, r, SPHERE) <= 1e-9


def test_decompose_rejects_plain_moves():
    with pytest.raises(SiteMismatch):
        decompose(corpus.crossing(), "r1", ["n2"])
    with pytest.raises(SiteMismatch):
        apply_move(corpus.crossing(), "diff-self-similar", ["nope"])


@pytest.mark.parametrize("name", sorted(corpus.nested_corpus()))
def test_normalize_corpus(name):
    d = corpus.nested_corpus()[name]
    r = normalize_choroi(d)
    assert validate(r).ok
    assert set(r.census()) <= {"DifferenceGate", "ElementaryChora"}
    for model in (EUCLID2, SPHERE):
        assert io_gap(d, r, model, n=50) <= 1e-9


def test_normalize_fixpoint_on_elementary():
    d = corpus.chora_fixture()
    assert normalize_choroi(d).census() == d.census()


def test_approx_r3_is_exact_and_residue_is_identity_on_linear_models():
    d, site = corpus.r3_chora_fixture()
    r, res = approx_R3(d, site)
    assert validate(r).ok
    for model in (EUCLID2, HEIS, SPHERE):
        assert io_gap(d, r, model) <= 1e-9
    rd = residue_diagram()
    rng = np.random.default_rng(7)
    pts = {k: HEIS.sample(rng, 20) for k in input_variables(rd)}
    for sc in ({"eps": 0.5, "mu": 0.3, "lam": 0.7}, {"eps": 0.1, "mu": 0.9, "lam": 0.2}):
        out = io_function(rd, HEIS, sc)(pts)
        assert np.max(M.chart_dist(out["w"], pts["w"])) <= 1e-9
    assert res.diagram is not None


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 4), st.integers(1, 15))
def test_exact_moves_preserve_io_and_acceptability(seed, strands, n):
    d = corpus.random_braid(np.random.default_rng(seed), strands, n)
    for kind, site in applicable_sites(d):
        r = apply_move(d, kind, site)
        assert validate(r).ok, kind
        assert is_acceptable(r)[0]
        assert io_gap(d, r, HEIS, scales=EXACT_SCALES, exact=True) == 0, kind
