"""Exact diagram moves, gate constructions and chora decompositions.

Every move returns a new diagram whose io function equals the old one in
every Gamma-irq.  Garbage produced by a move (for instance the spare
output of a difference gate) is routed to hidden outputs whose labels
start with an underscore, so io comparisons use the original labels.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from typing import Sequence

from .diagram import (
    GATE_KINDS,
    Builder,
    ChoraRecord,
    Diagram,
    Node,
    arcs,
    effective_scale,
    topo_order,
    _breaking_wires,
    validate,
    with_effective_scale,
)
from .errors import HypothesisViolated, ScaleMismatch, SiteMismatch
from .scale import ONE, ScaleExpr
from .terms import Bullet, Term, Var, equal_modulo

__all__ = [
    "MoveKind",
    "ResidueRecord",
    "apply_move",
    "make_gate",
    "crossing_to_difference",
    "decompose",
    "normalize_choroi",
    "approx_R3",
    "residue_diagram",
    "r3_chora_fixture",
    "chora_structure",
    "applicable_sites",
]


class MoveKind(Enum):
    R1_remove_tadpole = "r1"
    R2_cancel_pair = "r2"
    Compose_crossings = "compose"
    W1_join_wires = "w1"
    W2_reverse_overstrand = "w2"
    Virtual_insert = "virtual-insert"
    Virtual_remove = "virtual-remove"
    Crossing_to_difference = "to-difference"
    Difference_self_similar = "diff-self-similar"
    Elementary_chora_decompose = "elementary-chora"
    Chora_in_chora = "chora-in-chora"
    Difference_in_chora = "diff-in-chora"
    Approx_R3 = "approx-r3"

    @classmethod
    def parse(cls, s) -> MoveKind:
        if isinstance(s, cls):
            return s
        for k in cls:
            if s in (k.value, k.name):
                return k
        raise SiteMismatch(f"unknown move kind {s!r}")


@dataclass(frozen=True)
class ResidueRecord:
    """Residue left by the approximate Reidemeister III move.

    ``diagram`` is a standalone chora (x, eps) with inputs u, v, w; its
    outputs u, v pass through and output w carries the residue applied to w.
    """

    diagram: Diagram
    x: Term
    u: Term
    v: Term
    eps: ScaleExpr
    mu: ScaleExpr
    lam: ScaleExpr


# --- helpers ------------------------------------------------------------------


def _gate(d: Diagram, gid: str) -> Node:
    n = d.nodes.get(gid)
    if n is None or n.kind not in GATE_KINDS:
        raise SiteMismatch(f"{gid!r} is not a crossing gate")
    return n


def _fan(d: Diagram, gid: str) -> str:
    f = d.fanout_of(gid)
    if f is None:
        raise SiteMismatch(f"gate {gid} has no chord")
    return f


def _dst(d: Diagram, node: str, port: str):
    wid = d.wire_from(node, port)
    return None if wid is None else d.wires[wid].dst


def _finish(b: Builder, removed: set[str], added_like: dict[str, set[str]] | None = None) -> Diagram:
    """Drop records that mention removed nodes and extend chora interiors."""
    b.gates = [g for g in b.gates if not (set(g.nodes) & removed)]
    new_choroi = []
    for c in b.choroi:
        interior = set(c.interior) - removed
        if added_like and c.boundary in added_like:
            interior |= added_like[c.boundary]
        new_choroi.append(replace(c, interior=frozenset(interior)))
    b.choroi = new_choroi
    return b.build()


def _containing(d: Diagram, node_ids) -> list[ChoraRecord]:
    ids = set(node_ids)
    return [c for c in d.choroi if ids <= set(c.interior)]


def _start(d: Diagram) -> Builder:
    b = Builder(d)
    b._base_nodes = set(d.nodes)
    return b


def _new_nodes(b: Builder) -> set[str]:
    return set(b.nodes) - b._base_nodes


def _spread(d: Diagram, b: Builder, old: set[str]) -> dict[str, set[str]]:
    """New nodes join every chora whose interior held all of ``old``."""
    new = _new_nodes(b)
    return {c.boundary: new for c in _containing(d, old)} if old else {}


def _check_result(before: Diagram, after: Diagram) -> Diagram:
    if validate(before).ok:
        rep = validate(after)
        if not rep.ok:
            raise SiteMismatch(f"move would produce an invalid diagram: {rep.violations[0].message}")
    return after


# --- elementary moves ---------------------------------------------------------


def _r1(d: Diagram, site):
    (gid,) = site
    _gate(d, gid)
    f = _fan(d, gid)
    if _dst(d, f, "outThrough") != (gid, "inOperand"):
        raise SiteMismatch(f"gate {gid} is not a tadpole")
    b = _start(d)
    inc, out = b.remove({f, gid})
    b.sink(inc[(f, "in")], *out[(gid, "out")])
    return _finish(b, {f, gid})


def _adjacent_pair(d: Diagram, g1: str, g2: str):
    n1, n2 = _gate(d, g1), _gate(d, g2)
    f1, f2 = _fan(d, g1), _fan(d, g2)
    if _dst(d, g1, "out") != (g2, "inOperand"):
        raise SiteMismatch(f"gate {g1} does not feed gate {g2}")
    if _dst(d, f1, "outThrough") == (f2, "in"):
        first, last = f1, f2
    elif _dst(d, f2, "outThrough") == (f1, "in"):
        first, last = f2, f1
    else:
        raise SiteMismatch(f"crossings {g1}, {g2} are not on consecutive points of one over-strand")
    return n1, n2, first, last


def _r2(d: Diagram, site):
    g1, g2 = site
    n1, n2, first, last = _adjacent_pair(d, g1, g2)
    if not (effective_scale(n1) * effective_scale(n2)).is_one():
        raise ScaleMismatch(f"scales {n1.kind} {n1.scale} and {n2.kind} {n2.scale} do not cancel")
    b = _start(d)
    dead = {first, last, g1, g2}
    inc, out = b.remove(dead)
    b.sink(inc[(first, "in")], *out[(last, "outThrough")])
    b.sink(inc[(g1, "inOperand")], *out[(g2, "out")])
    return _finish(b, dead)


def _compose(d: Diagram, site):
    g1, g2 = site
    n1, n2, first, last = _adjacent_pair(d, g1, g2)
    b = _start(d)
    dead = {first, last, g1, g2}
    inc, out = b.remove(dead)
    if n1.kind == n2.kind == "bullet":
        kind, s = "bullet", n1.scale * n2.scale
    else:
        kind, s = "circ", effective_scale(n1) * effective_scale(n2)
    xo, uo, _f, _g = b.crossing(inc[(first, "in")], inc[(g1, "inOperand")], kind, s)
    b.sink(xo, *out[(last, "outThrough")])
    b.sink(uo, *out[(g2, "out")])
    return _finish(b, dead, _spread(d, b, dead))


def _w1(d: Diagram, site):
    from .evaluate import propagate

    w1, w2 = site
    for w in (w1, w2):
        if w not in d.wires or d.wires[w].role != "segment":
            raise SiteMismatch(f"{w!r} is not a segment wire")
    if w1 == w2:
        raise SiteMismatch("W1 needs two distinct wires")
    colors = propagate(d).colors
    if w1 not in colors or w2 not in colors or not equal_modulo(colors[w1], colors[w2]):
        raise SiteMismatch(f"wires {w1} and {w2} do not carry equal colors")
    a, c = d.wires[w1], d.wires[w2]
    wires = dict(d.wires)
    wires[w1] = replace(a, dst=c.dst)
    wires[w2] = replace(c, dst=a.dst)
    nd = d.replace(wires=wires.values())
    _, stuck = topo_order(nd, _breaking_wires(nd))
    if stuck:
        raise SiteMismatch("W1 would create a dataflow cycle")
    return nd


def _w2(d: Diagram, site):
    (wid,) = site
    arc = next((a for a in arcs(d) if wid in a.wires), None)
    if arc is None:
        raise SiteMismatch(f"{wid!r} is on no arc")
    ws = [d.wires[w] for w in arc.wires]
    if arc.closed:
        fans = [w.src[0] for w in ws]
    else:
        if d.nodes[ws[0].src[0]].kind != "input" or d.nodes[ws[-1].dst[0]].kind != "output":
            raise SiteMismatch("W2 reverses open arcs running from an input to an output")
        fans = [w.dst[0] for w in ws[:-1]]
    if any(d.nodes[f].kind != "fanout" for f in fans):
        raise SiteMismatch("W2 needs an arc made of fanouts only")
    wires = dict(d.wires)
    if arc.closed:
        k = len(fans)
        for i, w in enumerate(ws):
            # w ran fans[i] -> fans[i+1]; it now runs fans[i+1] -> fans[i]
            wires[w.id] = replace(w, src=(fans[(i + 1) % k], "outThrough"), dst=(fans[i], "in"))
    else:
        seq = [ws[0].src] + [(f, "outThrough") for f in reversed(fans)]
        dsts = [(f, "in") for f in reversed(fans)] + [ws[-1].dst]
        for w, s, t in zip(ws, seq, dsts):
            wires[w.id] = replace(w, src=s, dst=t)
    nodes = dict(d.nodes)
    flipped = set()
    for f in fans:
        cw = d.wire_from(f, "outChord")
        if cw is None or d.wires[cw].role != "chord":
            continue
        g = d.nodes[d.wires[cw].dst[0]]
        nodes[g.id] = replace(g, kind="bullet" if g.kind == "circ" else "circ", scale=g.scale.inv())
        flipped.add(g.id)
    gates = [g for g in d.gates if not (set(g.nodes) & flipped)]
    return d.replace(nodes=nodes.values(), wires=wires.values(), gates=gates)


def _virtual_insert(d: Diagram, site):
    wo, wu = site
    for w in (wo, wu):
        if w not in d.wires or d.wires[w].role != "segment":
            raise SiteMismatch(f"{w!r} is not a segment wire")
    if wo == wu:
        raise SiteMismatch("virtual crossing needs two distinct wires")
    b = _start(d)
    h_over, t_over = b.cut(wo)
    h_under, t_under = b.cut(wu)
    xo, uo, _f, _g = b.crossing(h_over, h_under, "circ", ONE)
    b.sink(xo, *t_over)
    b.sink(uo, *t_under)
    nd = b.build()
    _, stuck = topo_order(nd, _breaking_wires(nd))
    if stuck:
        raise SiteMismatch("virtual crossing would create a dataflow cycle")
    return nd


def _virtual_remove(d: Diagram, site):
    (gid,) = site
    g = _gate(d, gid)
    if not g.scale.is_one():
        raise SiteMismatch(f"gate {gid} has scale {g.scale}, not 1")
    f = _fan(d, gid)
    b = _start(d)
    inc, out = b.remove({f, gid})
    b.sink(inc[(f, "in")], *out[(f, "outThrough")])
    b.sink(inc[(gid, "inOperand")], *out[(gid, "out")])
    return _finish(b, {f, gid})


# --- universal gates ----------------------------------------------------------


def make_gate(kind: str, scale="eps", name: str | None = None) -> Diagram:
    """Standalone gate with inputs x, u[, v] and visible output ``out``.

    The other outputs of the gate (continuations of x and of x o u) are
    hidden.
    """
    b = Builder(name=name or kind)
    x = b.input("x", id="i_x")
    u = b.input("u", id="i_u")
    if kind in ("DifferenceGate", "difference"):
        _x, _a, out = b.difference(x, u, b.input("v", id="i_v"), scale)
    elif kind in ("SumGate", "sum"):
        _x, _a, out = b.sum(x, u, b.input("v", id="i_v"), scale)
    elif kind in ("InverseGate", "inverse"):
        _x, _a, out = b.inverse(x, u, scale)
    elif kind in ("EpsFanOut", "eps-fanout"):
        _x, out = b.eps_fanout(x, u, scale)
    else:
        raise SiteMismatch(f"unknown gate kind {kind!r}")
    b.output(out, "out", id="o_out")
    return b.build()


def _to_difference(d: Diagram, gid: str, check_records: bool = True) -> Diagram:
    g = _gate(d, gid)
    if check_records and any(gid in r.nodes for r in d.gates):
        raise SiteMismatch(f"gate {gid} already belongs to gate {next(r.id for r in d.gates if gid in r.nodes)}")
    f = _fan(d, gid)
    b = _start(d)
    inc, out = b.remove({f, gid})
    u = inc[(gid, "inOperand")]
    xo, _a, res = b.difference(inc[(f, "in")], u, u, effective_scale(g))
    b.sink(xo, *out[(f, "outThrough")])
    b.sink(res, *out[(gid, "out")])
    return _finish(b, {f, gid}, _spread(d, b, {f, gid}))


def crossing_to_difference(d: Diagram, gid: str) -> Diagram:
    """Replace a crossing a over u at scale s by the difference of (u, u) at a."""
    return _to_difference(d, gid)


def _diff_self_similar(d: Diagram, site):
    (rid,) = site
    r = d.gate_record(rid)
    if r is None or r.kind != "DifferenceGate":
        raise SiteMismatch(f"{rid!r} is not a difference gate record")
    gates = [n for n in r.nodes if d.nodes[n].kind in GATE_KINDS]
    cur = d.replace(gates=[g for g in d.gates if g.id != rid])
    for g in gates:
        cur = _to_difference(cur, g, check_records=False)
    return cur


# --- choroi -------------------------------------------------------------------


@dataclass
class ChoraStructure:
    record: ChoraRecord
    fans: list[str]
    entering: list[str]
    exiting: list[str]


def chora_structure(d: Diagram, boundary: str) -> ChoraStructure:
    c = d.chora_by_boundary(boundary)
    if c is None:
        raise SiteMismatch(f"no chora has boundary wire {boundary!r}")
    arc = next((a for a in arcs(d) if boundary in a.wires), None)
    if arc is None or not arc.closed:
        raise SiteMismatch(f"chora boundary {boundary} is not a closed arc")
    fans = [d.wires[w].dst[0] for w in arc.wires]
    entering, exiting = [], []
    for f in fans:
        if d.nodes[f].kind != "fanout":
            raise SiteMismatch("chora boundary passes under a crossing")
        cw = d.wire_from(f, "outChord")
        if d.wires[cw].role != "chord":
            raise HypothesisViolated(f"boundary fanout {f} copies the base out of the chora")
        g = d.nodes[d.wires[cw].dst[0]]
        s = effective_scale(g)
        if s == c.scale and s != c.scale.inv():
            entering.append(g.id)
        elif s == c.scale.inv() and s != c.scale:
            exiting.append(g.id)
        else:
            raise SiteMismatch(f"boundary gate {g.id} scale {g.scale} does not match chora scale {c.scale}")
    return ChoraStructure(c, fans, entering, exiting)


def _elementary_parts(d: Diagram, boundary: str):
    st = chora_structure(d, boundary)
    inner = [n for n in st.record.interior if d.nodes[n].kind in GATE_KINDS]
    if len(inner) != 1 or len(st.entering) != 2 or len(st.exiting) != 2:
        raise SiteMismatch("not an elementary chora (one interior crossing, two strands)")
    gi = inner[0]
    fi = _fan(d, gi)
    if set(st.record.interior) != {fi, gi}:
        raise SiteMismatch("elementary chora interior must be exactly one crossing")
    e_u = next((g for g in st.entering if _dst(d, g, "out") == (fi, "in")), None)
    e_v = next((g for g in st.entering if _dst(d, g, "out") == (gi, "inOperand")), None)
    x_u = next((g for g in st.exiting if _dst(d, fi, "outThrough") == (g, "inOperand")), None)
    x_w = next((g for g in st.exiting if _dst(d, gi, "out") == (g, "inOperand")), None)
    if None in (e_u, e_v, x_u, x_w):
        raise SiteMismatch("elementary chora strands are not wired boundary-to-boundary")
    return st, fi, gi, e_u, e_v, x_u, x_w


def _elementary_chora(d: Diagram, site, way: int = 1):
    (boundary,) = site
    rec = d.gate_record(boundary)
    if rec is not None and rec.kind == "ElementaryChora":
        boundary = rec.chora
    st, fi, gi, e_u, e_v, x_u, x_w = _elementary_parts(d, boundary)
    c = st.record
    sigma = effective_scale(d.nodes[gi])
    dead = set(st.fans) | set(st.entering) | set(st.exiting) | {fi, gi}
    b = _start(d)
    b.decorations.pop(boundary, None)
    inc, out = b.remove(dead)
    b.choroi = [r for r in b.choroi if r.boundary != boundary]
    u, v = inc[(e_u, "inOperand")], inc[(e_v, "inOperand")]
    x = b.const(c.base)
    x1, a, dd = b.difference(x, u, v, c.scale)
    if way == 1:
        _a2, e, _f, _g = b.crossing(a, dd, "circ", c.scale * sigma)
        _x, _e, res = b.difference(x1, e, e, c.scale.inv())
    elif way == 2:
        _a2, z, _f, _g = b.crossing(a, dd, "circ", sigma)
        _x, _s, res = b.sum(x1, u, z, c.scale)
    else:
        raise SiteMismatch(f"elementary chora decomposition way must be 1 or 2, got {way}")
    b.sink(u, *out[(x_u, "out")])
    b.sink(res, *out[(x_w, "out")])
    return _finish(b, dead, _spread(d, b, dead))


def _parent(d: Diagram, c: ChoraRecord, nodes: set[str]) -> ChoraRecord | None:
    outer = [o for o in d.choroi if o.boundary != c.boundary and nodes <= set(o.interior)]
    if not outer:
        return None
    return min(outer, key=lambda o: len(o.interior))


def _chora_in_chora(d: Diagram, site):
    (boundary,) = site
    st = chora_structure(d, boundary)
    inner = st.record
    own = set(st.fans) | set(st.entering) | set(st.exiting) | set(inner.interior)
    parent = _parent(d, inner, set(st.fans))
    if parent is None:
        raise SiteMismatch(f"chora {boundary} is not nested in another chora")
    x, eps, y, mu = parent.base, parent.scale, inner.base, inner.scale
    big = eps * mu
    b = _start(d)
    k = len(st.entering) + len(st.exiting)
    new_fans = b.grow_boundary(parent.boundary, k)
    for gid in st.entering:
        h, port = b.cut(d.wire_into(gid, "inOperand"))
        territory, _ = b.attach(new_fans.pop(), h, "bullet", eps)
        _x, _a, dq = b.difference(b.const(x), b.const(Bullet(eps, x, y)), territory, eps)
        b.sink(dq, *port)
        b.nodes[gid] = with_effective_scale(b.nodes[gid], big)
    for gid in st.exiting:
        h, port = b.cut(d.wire_from(gid, "out"))
        _y, _a, tz = b.difference(b.const(y), b.const(Bullet(eps, y, x)), h, eps)
        pixel, _ = b.attach(new_fans.pop(), tz, "circ", eps)
        b.sink(pixel, *port)
        b.nodes[gid] = with_effective_scale(b.nodes[gid], big.inv())
    new = _new_nodes(b)
    choroi = []
    for c in b.choroi:
        if c.boundary == inner.boundary:
            c = replace(c, scale=big)
        elif c.boundary == parent.boundary:
            c = replace(c, interior=frozenset(set(c.interior) - own))
        elif set(parent.interior) | set(st.fans) <= set(c.interior):
            c = replace(c, interior=frozenset(set(c.interior) | new))
        choroi.append(c)
    b.choroi = choroi
    return b.build()


def _diff_in_chora(d: Diagram, site):
    (rid,) = site
    r = d.gate_record(rid)
    if r is None or r.kind != "DifferenceGate":
        raise SiteMismatch(f"{rid!r} is not a difference gate record")
    holders = _containing(d, r.nodes)
    if not holders:
        raise SiteMismatch(f"difference gate {rid} is not inside a chora")
    host = min(holders, key=lambda c: len(c.interior))
    crossings = [n for n in r.nodes if d.nodes[n].kind in GATE_KINDS]
    cur = d.replace(gates=[g for g in d.gates if g.id != rid])
    for gid in crossings:
        g = cur.nodes[gid]
        f = _fan(cur, gid)
        host_now = next(c for c in cur.choroi if c.boundary == host.boundary)
        outer = [c for c in cur.choroi if c.boundary != host.boundary
                 and set(host_now.interior) <= set(c.interior)]
        b = _start(cur)
        inc, out = b.remove({f, gid})
        fans = b.grow_boundary(host.boundary, 4)
        o, _ = b.attach(fans[0], inc[(f, "in")], "bullet", host.scale)
        u, _ = b.attach(fans[1], inc[(gid, "inOperand")], "bullet", host.scale)
        o2, w = b.elementary_chora(host.base, host.scale, o, u, "circ", effective_scale(g))
        po, _ = b.attach(fans[2], o2, "circ", host.scale)
        pw, _ = b.attach(fans[3], w, "circ", host.scale)
        b.sink(po, *out[(f, "outThrough")])
        b.sink(pw, *out[(gid, "out")])
        new = _new_nodes(b)
        spread = {c.boundary: new for c in outer}
        cur = _finish(b, {f, gid}, spread)
    return cur


# --- approximate Reidemeister III ---------------------------------------------


def residue_diagram(x: Term = Var("x"), eps="eps", mu="mu", lam="lam") -> Diagram:
    """Standalone chora (x, eps) applying the residue to input w.

    Inside the chora the strands carry pixels a = x o u, b = x o v and
    x o w; the residue is the composite dilation based at a o_mu b, a, b, a
    that undoes the Reidemeister III rewrite.
    """
    b = Builder(name="residue")
    hu, hv, hw = b.input("u", id="i_u"), b.input("v", id="i_v"), b.input("w", id="i_w")

    def body(pix):
        pa, pb, pw = pix
        a1, w1, _f, _g = b.crossing(pa, pw, "bullet", mu)
        b1, w2, _f, _g = b.crossing(pb, w1, "bullet", lam)
        a2, w3, _f, _g = b.crossing(a1, w2, "circ", mu)
        # the base a o_mu b is the image of b under the pixel a
        a3, ab, _f, _g = b.crossing(a2, b1, "circ", mu)
        ab2, w4, _f, _g = b.crossing(ab, w3, "circ", lam)
        return [a3, pb, w4]

    (ou, ov, ow), _cut, _inner = b.chora(x, eps, [hu, hv, hw], body)
    b.output(ou, "u", id="o_u")
    b.output(ov, "v", id="o_v")
    b.output(ow, "w", id="o_w")
    return b.build()


def r3_chora_fixture(x: Term = Var("x"), eps="eps", mu="mu", lam="lam") -> tuple[Diagram, list[str]]:
    """Braid a over b, a over c, then b over c inside the chora (x, eps).

    Returns the diagram and the approximate R3 site (g1, g2, g3).
    """
    b = Builder(name="r3-chora")
    hs = [b.input(k, id=f"i_{k}") for k in "abc"]
    g: list[str] = []

    def body(p):
        a1, b1, _f, g1 = b.crossing(p[0], p[1], "circ", mu)
        a2, c1, _f, g2 = b.crossing(a1, p[2], "circ", mu)
        b2, c2, _f, g3 = b.crossing(b1, c1, "circ", lam)
        g.extend([g1, g2, g3])
        return [a2, b2, c2]

    outs, _cut, _inner = b.chora(x, eps, hs, body)
    for h, k in zip(outs, "abc"):
        b.output(h, k, id=f"o_{k}")
    return b.build(), g


def approx_R3(d: Diagram, site) -> tuple[Diagram, ResidueRecord]:
    """Perform Reidemeister III inside a chora and append the exact residue.

    Site: gates (g1, g2, g3) where a passes over b (g1) and over c (g2) at
    scale mu, then b passes over c (g3) at scale lam.  The result performs
    b over c first, then a over both, then applies the residue to the c
    strand, so the io function is unchanged.
    """
    g1, g2, g3 = site
    n1, n2, n3 = _gate(d, g1), _gate(d, g2), _gate(d, g3)
    f1, f2, f3 = _fan(d, g1), _fan(d, g2), _fan(d, g3)
    if _dst(d, f1, "outThrough") != (f2, "in"):
        raise SiteMismatch("the a strand must pass over b then over c")
    if _dst(d, g1, "out") != (f3, "in") or _dst(d, g2, "out") != (g3, "inOperand"):
        raise SiteMismatch("b must pass over c after both pass under a")
    mu, lam = effective_scale(n1), effective_scale(n3)
    if effective_scale(n2) != mu:
        raise ScaleMismatch("both crossings under a must carry the same scale")
    dead = {f1, f2, f3, g1, g2, g3}
    holders = _containing(d, dead)
    if not holders:
        raise SiteMismatch("approximate R3 applies only inside a chora")
    host = min(holders, key=lambda c: len(c.interior))
    b = _start(d)
    inc, out = b.remove(dead)
    ha, hb, hc = inc[(f1, "in")], inc[(g1, "inOperand")], inc[(g2, "inOperand")]
    # right-hand side: b over c first, then a over the results
    b1, c1, _f, _g = b.crossing(hb, hc, "circ", lam)
    a1, b2, _f, _g = b.crossing(ha, b1, "circ", mu)
    a2, c2, _f, _g = b.crossing(a1, c1, "circ", mu)
    # residue on the c strand
    a3, w1, _f, _g = b.crossing(a2, c2, "bullet", mu)
    _b, w2, _f, _g = b.crossing(hb, w1, "bullet", lam)
    a4, w3, _f, _g = b.crossing(a3, w2, "circ", mu)
    b3, w4, _f, _g = b.crossing(b2, w3, "circ", lam)
    b.sink(a4, *out[(f2, "outThrough")])
    b.sink(b3, *out[(f3, "outThrough")])
    b.sink(w4, *out[(g3, "out")])
    nd = _finish(b, dead, _spread(d, b, dead))
    rec = ResidueRecord(residue_diagram(host.base, host.scale, mu, lam), host.base,
                        Var("u"), Var("v"), host.scale, mu, lam)
    return nd, rec


# --- dispatch -----------------------------------------------------------------


_MOVES = {
    MoveKind.R1_remove_tadpole: _r1,
    MoveKind.R2_cancel_pair: _r2,
    MoveKind.Compose_crossings: _compose,
    MoveKind.W1_join_wires: _w1,
    MoveKind.W2_reverse_overstrand: _w2,
    MoveKind.Virtual_insert: _virtual_insert,
    MoveKind.Virtual_remove: _virtual_remove,
    MoveKind.Crossing_to_difference: lambda d, s: _to_difference(d, *s),
    MoveKind.Difference_self_similar: _diff_self_similar,
    MoveKind.Elementary_chora_decompose: _elementary_chora,
    MoveKind.Chora_in_chora: _chora_in_chora,
    MoveKind.Difference_in_chora: _diff_in_chora,
}


def apply_move(d: Diagram, kind, site: Sequence[str], **opts) -> Diagram:
    """Apply one exact move at an explicit site (a list of node/wire/record ids)."""
    k = MoveKind.parse(kind)
    site = list(site)
    if k is MoveKind.Approx_R3:
        return approx_R3(d, site)[0]
    fn = _MOVES[k]
    try:
        out = fn(d, site, **opts) if opts else fn(d, site)
    except (KeyError, ValueError, TypeError) as exc:
        if isinstance(exc, (SiteMismatch, ScaleMismatch, HypothesisViolated)):
            raise
        from .errors import WouldOrphanDecoration

        if isinstance(exc, WouldOrphanDecoration):
            raise
        raise SiteMismatch(f"{k.value}: site {site} does not fit ({exc})") from None
    return _check_result(d, out)


def decompose(d: Diagram, kind, site: Sequence[str], **opts) -> Diagram:
    k = MoveKind.parse(kind)
    if k not in (MoveKind.Difference_self_similar, MoveKind.Elementary_chora_decompose,
                 MoveKind.Chora_in_chora, MoveKind.Difference_in_chora):
        raise SiteMismatch(f"{k.value} is not a decomposition")
    return apply_move(d, k, site, **opts)


def applicable_sites(d: Diagram) -> list[tuple[MoveKind, list[str]]]:
    """Sites where a move's schema matches (scales aside), in a fixed order."""
    sites: list[tuple[MoveKind, list[str]]] = []
    gates = [n.id for n in d.gate_nodes()]
    for g in gates:
        f = d.fanout_of(g)
        if f and _dst(d, f, "outThrough") == (g, "inOperand"):
            sites.append((MoveKind.R1_remove_tadpole, [g]))
        if d.nodes[g].scale.is_one():
            sites.append((MoveKind.Virtual_remove, [g]))
        if not any(g in r.nodes for r in d.gates):
            sites.append((MoveKind.Crossing_to_difference, [g]))
        nxt = _dst(d, g, "out")
        if nxt and d.nodes[nxt[0]].kind in GATE_KINDS and nxt[1] == "inOperand":
            try:
                n1, n2, _a, _b = _adjacent_pair(d, g, nxt[0])
            except SiteMismatch:
                continue
            sites.append((MoveKind.Compose_crossings, [g, nxt[0]]))
            if (effective_scale(n1) * effective_scale(n2)).is_one():
                sites.append((MoveKind.R2_cancel_pair, [g, nxt[0]]))
    for a in arcs(d):
        ws = [d.wires[w] for w in a.wires]
        if not a.closed and d.nodes[ws[0].src[0]].kind == "input" and d.nodes[ws[-1].dst[0]].kind == "output" \
                and all(d.nodes[w.dst[0]].kind == "fanout" for w in ws[:-1]) and len(ws) > 1:
            sites.append((MoveKind.W2_reverse_overstrand, [a.wires[0]]))
    for r in d.gates:
        if r.kind == "DifferenceGate":
            sites.append((MoveKind.Difference_self_similar, [r.id]))
    return sites


# --- Thm-5.1 style normalizer -------------------------------------------------


def normalize_choroi(d: Diagram) -> Diagram:
    """Rewrite a nested-choroi diagram into difference gates and elementary choroi.

    Each interior crossing is transported to the outermost level: a
    crossing inside chora (y, mu) is an elementary chora (y, mu) one level
    up; an elementary chora inside (x, eps) lifts to difference gates
    around the elementary chora (y, eps*mu); a difference gate inside a
    chora splits into its three crossings.  The result is built afresh and
    computes the same io function.
    """
    rep = validate(d)
    if not rep.ok:
        raise HypothesisViolated(f"invalid diagram: {rep.violations[0].message}")
    structs = {c.boundary: chora_structure(d, c.boundary) for c in d.choroi}
    boundary_fans = {f: c for c, st in structs.items() for f in st.fans}
    boundary_gate = {g: c for c, st in structs.items() for g in st.entering + st.exiting}
    parent: dict[str, str | None] = {}
    for c in d.choroi:
        p = _parent(d, c, set(structs[c.boundary].fans))
        parent[c.boundary] = p.boundary if p else None
    rec = {c.boundary: c for c in d.choroi}

    def chain_of(cb: str | None) -> tuple[str, ...]:
        out = []
        while cb is not None:
            out.append(cb)
            cb = parent[cb]
        return tuple(reversed(out))

    def innermost(node: str) -> tuple[str, ...]:
        holders = [c for c in d.choroi if node in c.interior]
        if not holders:
            return ()
        return chain_of(min(holders, key=lambda c: len(c.interior)).boundary)

    b = Builder(name=(d.name + "-normal") if d.name else "normal")
    b.scales = dict(d.scales)
    consts: dict[Term, int] = {}

    def const(chain, term: Term) -> int:
        t = term
        for cb in reversed(chain):
            t = Bullet(rec[cb].scale, rec[cb].base, t)
        if t not in consts:
            consts[t] = b.const(t)
        return consts[t]

    def emit_diff(chain, eps, X, U, V) -> int:
        if not chain:
            return b.difference(X, U, V, eps)[2]
        p = emit_op(chain, eps, X, U)
        q = emit_op(chain, eps, X, V)
        return emit_op(chain, eps.inv(), p, q)

    def emit_op(chain, sigma, A, B) -> int:
        if not chain:
            return b.difference(A, B, B, sigma)[2]
        c = rec[chain[-1]]
        return emit_elem(chain[:-1], c.base, c.scale, sigma, A, B)[1]

    def emit_elem(chain, y, mu, sigma, A, B):
        if not chain:
            return b.elementary_chora(y, mu, A, B, "circ", sigma)
        c = rec[chain[-1]]
        rest, x, eps = chain[:-1], c.base, c.scale
        X, Y = const(rest, x), const(rest, Bullet(eps, x, y))
        dA = emit_diff(rest, eps, X, Y, A)
        dB = emit_diff(rest, eps, X, Y, B)
        eA, eB = emit_elem(rest, y, eps * mu, sigma, dA, dB)
        yh, z = const(rest, y), const(rest, Bullet(eps, y, x))
        return emit_diff(rest, eps, yh, z, eA), emit_diff(rest, eps, yh, z, eB)

    cut = _breaking_wires(d)
    order, stuck = topo_order(d, cut)
    if stuck:
        raise HypothesisViolated("diagram has an undecorated cycle")
    val: dict[str, tuple[int, tuple[str, ...]]] = {}

    def get(node, port):
        w = d.wire_into(node, port)
        if w not in val:
            raise HypothesisViolated(f"wire {w} is not reachable from the inputs")
        return val[w]

    def put(node, port, v):
        w = d.wire_from(node, port)
        if w is not None and w not in cut:
            val[w] = v

    for w in cut:
        fan = d.wires[w].dst[0]
        if fan not in boundary_fans:
            chain = innermost(fan)
            val[w] = (const(chain, d.decorations[w]), chain)
    for nid in order:
        n = d.nodes[nid]
        if n.kind == "input":
            w = d.wire_from(nid, "out")
            h = b.const(d.decorations[w]) if w in d.decorations else b.input(n.label)
            put(nid, "out", (h, ()))
        elif n.kind == "output":
            h, chain = get(nid, "in")
            if chain:
                raise HypothesisViolated(f"output {n.label} is inside a chora")
            b.output(h, n.label)
        elif n.kind == "fanout":
            if nid in boundary_fans:
                continue
            v = get(nid, "in")
            put(nid, "outThrough", v)
            put(nid, "outChord", v)
        elif n.kind == "homeo":
            h, chain = get(nid, "in")
            if chain:
                raise HypothesisViolated("homeomorphisms inside choroi are not supported")
            put(nid, "out", (b.homeo(h, n.homeo, n.inverted), ()))
        elif nid in boundary_gate:
            cb = boundary_gate[nid]
            h, chain = get(nid, "inOperand")
            if nid in structs[cb].entering:
                if chain != chain_of(parent[cb]):
                    raise HypothesisViolated(f"strand enters chora {cb} from the wrong region")
                put(nid, "out", (h, chain + (cb,)))
            else:
                if not chain or chain[-1] != cb:
                    raise HypothesisViolated(f"strand leaves chora {cb} without being inside it")
                put(nid, "out", (h, chain[:-1]))
        else:
            f = d.fanout_of(nid)
            hb, cb_ = get(nid, "inBase")
            ho, co = get(nid, "inOperand")
            place = innermost(nid)
            if not place or f is None or innermost(f) != place:
                raise HypothesisViolated(f"crossing {nid} is neither inside a chora nor on a boundary")
            if cb_ != place or co != place:
                raise HypothesisViolated(f"crossing {nid} mixes strands from different regions")
            put(nid, "out", (emit_op(place, effective_scale(n), hb, ho), place))
    return b.build()
