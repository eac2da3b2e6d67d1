import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from chora import corpus
from chora import models as M
from chora.diagram import (
    ParseError,
    SchemaError,
    arcs,
    build_crossing,
    connectivity_matrix,
    from_json,
    parse,
    serialize,
    to_dot,
    to_json,
    validate,
)
from chora.evaluate import io_function


def _doc(d):
    return json.loads(serialize(d))


def test_crossing_is_valid_with_two_open_arcs():
    d = build_crossing("circ", "eps")
    assert validate(d).ok
    a = arcs(d)
    assert len(a) == 2 and not any(x.closed for x in a)


def test_gate_without_chord_is_unpaired():
    doc = _doc(build_crossing())
    doc["wires"] = [w for w in doc["wires"] if w["role"] != "chord"]
    assert "UnpairedGate" in validate(from_json(doc)).codes


def test_undecorated_boundary_is_rejected():
    doc = _doc(corpus.chora_fixture())
    doc["decorations"] = {}
    doc["choroi"] = []
    assert "UndecoratedCycle" in validate(from_json(doc)).codes


def test_chora_fixture_has_one_closed_arc():
    d = corpus.chora_fixture()
    closed = [a for a in arcs(d) if a.closed]
    assert len(closed) == 1
    assert len(arcs(d)) > 1


def test_connectivity_matrix_of_a_crossing():
    d = build_crossing()
    ids, m = connectivity_matrix(d)
    edges = {(ids[i], ids[j]) for i, j in zip(*np.nonzero(m))}
    f = next(n for n in ids if d.nodes[n].kind == "fanout")
    g = next(n for n in ids if d.nodes[n].kind == "circ")
    assert edges == {("i_x", f), (f, g), (f, "o_x"), ("i_u", g), (g, "o_v")}
    assert list(m.sum(axis=1)) == [sum(1 for w in d.wires.values() if w.src[0] == n) for n in ids]


def test_empty_diagram_matrix():
    ids, m = connectivity_matrix(from_json({"nodes": [], "wires": []}))
    assert ids == [] and m.shape == (0, 0)


@pytest.mark.parametrize("kind", ["circ", "bullet"])
def test_crossing_semantics(kind):
    m = M.get_model("heis1")
    rng = np.random.default_rng(0)
    x, u = m.sample(rng, 10), m.sample(rng, 10)
    out = io_function(build_crossing(kind), m, {"eps": 0.3})({"x": x, "u": u})
    op = m.circ if kind == "circ" else m.bullet
    assert np.allclose(out["x"], x) and np.allclose(out["v"], op(0.3, x, u))


def test_codec_round_trip_and_dot():
    d = build_crossing()
    text = serialize(d)
    assert serialize(parse(text)) == text
    assert to_dot(d).count("style=dashed") == 1


def test_codec_errors():
    doc = _doc(build_crossing())
    del doc["nodes"][0]["kind"]
    with pytest.raises(SchemaError, match="kind"):
        from_json(doc)
    with pytest.raises(ParseError):
        parse("{not json")


CORPUS = [corpus.crossing(), corpus.crossing("bullet"), corpus.diffgate(), corpus.chora_fixture(),
          corpus.r3_chora_fixture()[0], *corpus.nested_corpus().values()]


@pytest.mark.parametrize("d", CORPUS, ids=lambda d: d.name)
def test_corpus_round_trip(d):
    text = serialize(d)
    again = parse(text)
    assert serialize(again) == text
    assert validate(again).to_json() == validate(d).to_json()
    assert len(arcs(again)) == len(arcs(d))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 4), st.integers(1, 15))
def test_random_braids_round_trip(seed, strands, n):
    d = corpus.random_braid(np.random.default_rng(seed), strands, n)
    assert validate(d).ok
    assert to_json(parse(serialize(d))) == to_json(d)
    assert len(arcs(parse(serialize(d)))) == len(arcs(d))
