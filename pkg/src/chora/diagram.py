"""Tangle diagrams as trivalent dataflow graphs.

A crossing is a FanOut on the over-strand whose ``outChord`` feeds the
``inBase`` of a circ or bullet gate on the under-strand.  A FanOut that is
not part of a crossing (its ``outChord`` wire is a segment) is a plain
copy.  Chora boundaries are closed arcs of FanOuts carrying one decorated
wire; that decoration breaks the dataflow cycle.

Diagrams are treated as values: nothing here mutates a diagram after it
has been built, and :class:`Builder` produces fresh ones.
"""
from __future__ import annotations

import heapq
import json
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .errors import WouldOrphanDecoration
from .scale import ScaleExpr, as_scale, parse_scale
from .terms import Term, parse_term

__all__ = [
    "Node",
    "Wire",
    "Arc",
    "ChoraRecord",
    "GateRecord",
    "Diagram",
    "Violation",
    "ValidationReport",
    "ParseError",
    "SchemaError",
    "Builder",
    "PORTS",
    "GATE_KINDS",
    "parse",
    "serialize",
    "to_dot",
    "validate",
    "arcs",
    "connectivity_matrix",
    "build_crossing",
    "effective_scale",
    "with_effective_scale",
    "HIDDEN_PREFIX",
]

# kind -> (input ports, output ports)
PORTS: dict[str, tuple[tuple[str, ...], tuple[str, ...]]] = {
    "fanout": (("in",), ("outThrough", "outChord")),
    "circ": (("inBase", "inOperand"), ("out",)),
    "bullet": (("inBase", "inOperand"), ("out",)),
    "input": ((), ("out",)),
    "output": (("in",), ()),
    "homeo": (("in",), ("out",)),
}
GATE_KINDS = ("circ", "bullet")
RECORD_KINDS = ("DifferenceGate", "SumGate", "InverseGate", "EpsFanOut", "ElementaryChora")
# outputs whose label starts with this are garbage produced by rewrites
HIDDEN_PREFIX = "_"

# which output port continues the arc through a given input port
_CONTINUE = {("fanout", "in"): "outThrough", ("circ", "inOperand"): "out",
             ("bullet", "inOperand"): "out", ("homeo", "in"): "out"}
_PREDECESSOR = {("fanout", "outThrough"): "in", ("circ", "out"): "inOperand",
                ("bullet", "out"): "inOperand", ("homeo", "out"): "in"}


class ParseError(ValueError):
    def __init__(self, msg: str, line: int = 0, column: int = 0):
        super().__init__(f"{msg} (line {line}, column {column})")
        self.line = line
        self.column = column


class SchemaError(ValueError):
    def __init__(self, fieldname: str, detail: str = ""):
        super().__init__(fieldname if not detail else f"{fieldname}: {detail}")
        self.field = fieldname


@dataclass(frozen=True)
class Node:
    id: str
    kind: str
    scale: ScaleExpr | None = None
    label: str | None = None
    homeo: str | None = None
    inverted: bool = False


@dataclass(frozen=True)
class Wire:
    id: str
    src: tuple[str, str]
    dst: tuple[str, str]
    role: str = "segment"


@dataclass(frozen=True)
class Arc:
    id: str
    wires: tuple[str, ...]
    closed: bool


@dataclass(frozen=True)
class ChoraRecord:
    """Declared chora.  ``boundary`` names one wire of the closed boundary arc."""

    boundary: str
    base: Term
    scale: ScaleExpr
    interior: frozenset[str] = frozenset()


@dataclass(frozen=True)
class GateRecord:
    """A named group of nodes forming one of the standard gates.

    ``inputs``/``outputs`` map role names (``x``, ``u``, ``v`` ...) to the
    (node, port) where that role enters or leaves the group.  Ports rather
    than wire ids are used because wire ids change under splicing.
    """

    id: str
    kind: str
    nodes: tuple[str, ...]
    scale: ScaleExpr
    inputs: tuple[tuple[str, tuple[str, str]], ...] = ()
    outputs: tuple[tuple[str, tuple[str, str]], ...] = ()
    chora: str | None = None


def effective_scale(node: Node) -> ScaleExpr:
    """Scale of the equivalent circ gate (bullet at s is circ at 1/s)."""
    return node.scale if node.kind == "circ" else node.scale.inv()


def with_effective_scale(node: Node, s: ScaleExpr) -> Node:
    return replace(node, scale=s if node.kind == "circ" else s.inv())


class Diagram:
    """Immutable-by-convention tangle diagram."""

    def __init__(
        self,
        nodes: Iterable[Node] = (),
        wires: Iterable[Wire] = (),
        decorations: Mapping[str, Term] | None = None,
        choroi: Iterable[ChoraRecord] = (),
        gates: Iterable[GateRecord] = (),
        name: str = "",
        scales: Mapping[str, str] | None = None,
    ):
        self.name = name
        self.scales = dict(scales or {})
        self.nodes: dict[str, Node] = {n.id: n for n in nodes}
        self.wires: dict[str, Wire] = {w.id: w for w in wires}
        self.decorations: dict[str, Term] = dict(decorations or {})
        self.choroi: tuple[ChoraRecord, ...] = tuple(choroi)
        self.gates: tuple[GateRecord, ...] = tuple(gates)
        self._index = None

    # --- structure --------------------------------------------------------

    def _build_index(self):
        ins: dict[tuple[str, str], list[str]] = {}
        outs: dict[tuple[str, str], list[str]] = {}
        for w in self.wires.values():
            outs.setdefault(tuple(w.src), []).append(w.id)
            ins.setdefault(tuple(w.dst), []).append(w.id)
        self._index = (ins, outs)

    def wire_into(self, node: str, port: str) -> str | None:
        if self._index is None:
            self._build_index()
        got = self._index[0].get((node, port))
        return got[0] if got else None

    def wire_from(self, node: str, port: str) -> str | None:
        if self._index is None:
            self._build_index()
        got = self._index[1].get((node, port))
        return got[0] if got else None

    def _port_lists(self):
        if self._index is None:
            self._build_index()
        return self._index

    @property
    def crossings(self) -> list[tuple[str, str]]:
        """(fanout id, gate id) for every chord, sorted by gate id."""
        out = [(w.src[0], w.dst[0]) for w in self.wires.values() if w.role == "chord"]
        return sorted(out, key=lambda p: p[1])

    def fanout_of(self, gate: str) -> str | None:
        w = self.wire_into(gate, "inBase")
        return self.wires[w].src[0] if w is not None else None

    def inputs(self) -> list[Node]:
        return sorted((n for n in self.nodes.values() if n.kind == "input"), key=lambda n: n.id)

    def outputs(self) -> list[Node]:
        return sorted((n for n in self.nodes.values() if n.kind == "output"), key=lambda n: n.id)

    def input_labels(self) -> list[str]:
        """Labels of inputs that are not constant (decorated) sources."""
        return sorted(
            n.label for n in self.inputs() if self.wire_from(n.id, "out") not in self.decorations
        )

    def output_labels(self, hidden: bool = False) -> list[str]:
        return sorted(
            n.label for n in self.outputs() if hidden or not n.label.startswith(HIDDEN_PREFIX)
        )

    def gate_nodes(self) -> list[Node]:
        return sorted((n for n in self.nodes.values() if n.kind in GATE_KINDS), key=lambda n: n.id)

    def chora_by_boundary(self, wire: str) -> ChoraRecord | None:
        for c in self.choroi:
            if c.boundary == wire:
                return c
        return None

    def gate_record(self, gid: str) -> GateRecord | None:
        for g in self.gates:
            if g.id == gid:
                return g
        return None

    def census(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for g in self.gates:
            out[g.kind] = out.get(g.kind, 0) + 1
        return dict(sorted(out.items()))

    def replace(self, **kw) -> Diagram:
        args = dict(
            nodes=self.nodes.values(),
            wires=self.wires.values(),
            decorations=self.decorations,
            choroi=self.choroi,
            gates=self.gates,
            name=self.name,
            scales=self.scales,
        )
        args.update(kw)
        return Diagram(**args)

    def __eq__(self, other):
        return isinstance(other, Diagram) and serialize(self) == serialize(other)

    def __hash__(self):
        return hash(serialize(self))

    def __repr__(self):
        return f"<Diagram {self.name!r}: {len(self.nodes)} nodes, {len(self.wires)} wires>"


# --- validation -------------------------------------------------------------


@dataclass(frozen=True)
class Violation:
    code: str
    message: str
    ids: tuple[str, ...] = ()

    def to_json(self):
        return {"code": self.code, "message": self.message, "ids": list(self.ids)}


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    @property
    def codes(self) -> set[str]:
        return {v.code for v in self.violations}

    def add(self, code, message, *ids):
        self.violations.append(Violation(code, message, tuple(ids)))

    def to_json(self):
        return {"ok": self.ok, "violations": [v.to_json() for v in self.violations]}


def _breaking_wires(d: Diagram, arc_list: list[Arc] | None = None) -> set[str]:
    """Decorated wires on closed arcs: the declared cuts of chora cycles."""
    arc_list = arcs(d) if arc_list is None else arc_list
    return {w for a in arc_list if a.closed for w in a.wires if w in d.decorations}


def topo_order(d: Diagram, cut: set[str]) -> tuple[list[str], set[str]]:
    """Kahn order of nodes ignoring ``cut`` wires; second item is nodes on cycles."""
    indeg = {n: 0 for n in d.nodes}
    succ: dict[str, list[str]] = {n: [] for n in d.nodes}
    for w in d.wires.values():
        if w.id in cut or w.src[0] not in d.nodes or w.dst[0] not in d.nodes:
            continue
        succ[w.src[0]].append(w.dst[0])
        indeg[w.dst[0]] += 1
    ready = sorted(n for n, k in indeg.items() if k == 0)
    order = []
    heapq.heapify(ready)
    while ready:
        n = heapq.heappop(ready)
        order.append(n)
        for m in succ[n]:
            indeg[m] -= 1
            if indeg[m] == 0:
                heapq.heappush(ready, m)
    stuck = set(d.nodes) - set(order)
    return order, stuck


def validate(d: Diagram) -> ValidationReport:
    """Check every structural invariant.  Never raises."""
    rep = ValidationReport()
    ins, outs = d._port_lists()
    for n in sorted(d.nodes.values(), key=lambda n: n.id):
        if n.kind not in PORTS:
            rep.add("SchemaError", f"node {n.id} has unknown kind {n.kind!r}", n.id)
            continue
        if n.kind in GATE_KINDS and n.scale is None:
            rep.add("SchemaError", f"gate {n.id} has no scale", n.id)
        if n.kind in ("input", "output") and not n.label:
            rep.add("SchemaError", f"{n.kind} {n.id} has no label", n.id)
        if n.kind == "homeo" and not n.homeo:
            rep.add("SchemaError", f"homeo node {n.id} names no map", n.id)
        pin, pout = PORTS[n.kind]
        for p in pin:
            k = len(ins.get((n.id, p), []))
            if k != 1:
                rep.add("DanglingPort", f"port {n.id}.{p} carries {k} wires", n.id)
        for p in pout:
            k = len(outs.get((n.id, p), []))
            if k != 1:
                rep.add("DanglingPort", f"port {n.id}.{p} carries {k} wires", n.id)
    for w in sorted(d.wires.values(), key=lambda w: w.id):
        sn, dn = d.nodes.get(w.src[0]), d.nodes.get(w.dst[0])
        if sn is None or sn.kind not in PORTS or w.src[1] not in PORTS[sn.kind][1]:
            rep.add("DanglingPort", f"wire {w.id} leaves unknown port {w.src[0]}.{w.src[1]}", w.id)
        if dn is None or dn.kind not in PORTS or w.dst[1] not in PORTS[dn.kind][0]:
            rep.add("DanglingPort", f"wire {w.id} enters unknown port {w.dst[0]}.{w.dst[1]}", w.id)
        if w.role not in ("segment", "chord"):
            rep.add("SchemaError", f"wire {w.id} has role {w.role!r}", w.id)
        if w.role == "chord":
            if not (sn and sn.kind == "fanout" and w.src[1] == "outChord"
                    and dn and dn.kind in GATE_KINDS and w.dst[1] == "inBase"):
                rep.add("BadChord", f"chord {w.id} must run fanout.outChord -> gate.inBase", w.id)
        elif dn is not None and w.dst[1] == "inBase":
            rep.add("BadChord", f"segment {w.id} feeds a gate base", w.id)
    for g in d.gate_nodes():
        wid = d.wire_into(g.id, "inBase")
        if wid is None or d.wires[wid].role != "chord":
            rep.add("UnpairedGate", f"gate {g.id} has no chord from a fanout", g.id)
    labels: dict[tuple[str, str], str] = {}
    for n in d.inputs() + d.outputs():
        key = (n.kind, n.label)
        if key in labels:
            rep.add("DuplicateLabel", f"{n.kind} label {n.label!r} used twice", labels[key], n.id)
        labels[key] = n.id
    if rep.violations:
        return rep

    arc_list = arcs(d)
    for a in arc_list:
        if a.closed and not any(w in d.decorations for w in a.wires):
            rep.add("UndecoratedCycle", f"closed arc {a.id} carries no decoration", *a.wires)
    _, stuck = topo_order(d, _breaking_wires(d, arc_list))
    if stuck:
        rep.add("UndecoratedCycle", "dataflow cycle not cut by a decorated closed arc", *sorted(stuck))

    closed_of = {w: a for a in arc_list if a.closed for w in a.wires}
    for c in d.choroi:
        a = closed_of.get(c.boundary)
        if a is None:
            rep.add("ChoraScaleMismatch", f"chora boundary {c.boundary} is not a closed arc", c.boundary)
            continue
        fans = [d.wires[w].dst[0] for w in a.wires]
        if any(d.nodes[f].kind != "fanout" for f in fans):
            rep.add("ChoraScaleMismatch", f"chora boundary {a.id} passes under a crossing", *a.wires)
            continue
        deco = [d.decorations[w] for w in a.wires if w in d.decorations]
        if deco and deco[0] != c.base:
            rep.add("ChoraScaleMismatch", f"chora boundary {a.id} decorated {deco[0]}, record says {c.base}", a.id)
        ok = {c.scale, c.scale.inv()}
        for f in fans:
            wid = d.wire_from(f, "outChord")
            w = d.wires[wid]
            if w.role != "chord":
                continue
            g = d.nodes[w.dst[0]]
            if effective_scale(g) not in ok:
                rep.add("ChoraScaleMismatch", f"boundary gate {g.id} has scale {g.scale}, chora has {c.scale}", g.id)
        missing = [i for i in c.interior if i not in d.nodes]
        if missing:
            rep.add("DanglingPort", f"chora interior names unknown nodes {sorted(missing)}", *sorted(missing))
    for g in d.gates:
        missing = [i for i in g.nodes if i not in d.nodes]
        if missing or g.kind not in RECORD_KINDS:
            rep.add("BadGateRecord", f"gate record {g.id} is inconsistent", g.id, *missing)
    return rep


def arcs(d: Diagram) -> list[Arc]:
    """Partition of segment wires into maximal arcs (chords belong to none)."""

    def nxt(wid):
        w = d.wires[wid]
        n = d.nodes.get(w.dst[0])
        if n is None:
            return None
        port = _CONTINUE.get((n.kind, w.dst[1]))
        return d.wire_from(n.id, port) if port else None

    def has_pred(wid):
        w = d.wires[wid]
        n = d.nodes.get(w.src[0])
        if n is None:
            return False
        port = _PREDECESSOR.get((n.kind, w.src[1]))
        return port is not None and d.wire_into(n.id, port) is not None

    segs = sorted(w.id for w in d.wires.values() if w.role == "segment")
    seen: set[str] = set()
    out: list[Arc] = []
    for wid in segs:
        if wid in seen or has_pred(wid):
            continue
        chain = []
        cur = wid
        while cur is not None and cur not in seen:
            seen.add(cur)
            chain.append(cur)
            cur = nxt(cur)
        out.append(Arc(chain[0], tuple(chain), False))
    for wid in segs:
        if wid in seen:
            continue
        chain = []
        cur = wid
        while cur is not None and cur not in seen:
            seen.add(cur)
            chain.append(cur)
            cur = nxt(cur)
        closed = cur == wid
        deco = [w for w in chain if w in d.decorations]
        out.append(Arc(deco[0] if deco else chain[0], tuple(chain), closed))
    return out


def connectivity_matrix(d: Diagram) -> tuple[list[str], np.ndarray]:
    ids = sorted(d.nodes)
    pos = {n: i for i, n in enumerate(ids)}
    m = np.zeros((len(ids), len(ids)), dtype=np.int8)
    for w in d.wires.values():
        if w.src[0] in pos and w.dst[0] in pos:
            m[pos[w.src[0]], pos[w.dst[0]]] = 1
    return ids, m


# --- codec ------------------------------------------------------------------


def _node_json(n: Node) -> dict:
    out = {"id": n.id, "kind": n.kind}
    if n.scale is not None:
        out["scale"] = str(n.scale)
    if n.label is not None:
        out["label"] = n.label
    if n.homeo is not None:
        out["homeo"] = n.homeo
    if n.inverted:
        out["inverted"] = True
    return out


def to_json(d: Diagram) -> dict:
    return {
        "name": d.name,
        "scales": dict(sorted(d.scales.items())),
        "nodes": [_node_json(d.nodes[k]) for k in sorted(d.nodes)],
        "wires": [
            {"id": w.id, "from": list(w.src), "to": list(w.dst), "role": w.role}
            for w in (d.wires[k] for k in sorted(d.wires))
        ],
        "decorations": {k: str(d.decorations[k]) for k in sorted(d.decorations)},
        "choroi": [
            {"boundaryArc": c.boundary, "base": str(c.base), "scale": str(c.scale),
             "interior": sorted(c.interior)}
            for c in sorted(d.choroi, key=lambda c: c.boundary)
        ],
        "gates": [
            {"id": g.id, "kind": g.kind, "nodes": list(g.nodes), "scale": str(g.scale),
             "inputs": {k: list(v) for k, v in g.inputs},
             "outputs": {k: list(v) for k, v in g.outputs},
             **({"chora": g.chora} if g.chora else {})}
            for g in sorted(d.gates, key=lambda g: g.id)
        ],
    }


def serialize(d: Diagram) -> str:
    return json.dumps(to_json(d), indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def _need(obj, key, where, typ=None):
    if not isinstance(obj, dict) or key not in obj:
        raise SchemaError(key, f"missing in {where}")
    val = obj[key]
    if typ is not None and not isinstance(val, typ):
        raise SchemaError(key, f"expected {typ.__name__ if isinstance(typ, type) else typ} in {where}")
    return val


def _port(val, key):
    if not (isinstance(val, list) and len(val) == 2 and all(isinstance(s, str) for s in val)):
        raise SchemaError(key, "expected [node, port]")
    return (val[0], val[1])


def from_json(doc: dict) -> Diagram:
    if not isinstance(doc, dict):
        raise SchemaError("document", "expected an object")
    try:
        nodes = []
        for i, raw in enumerate(_need(doc, "nodes", "document", list)):
            where = f"nodes[{i}]"
            nid = _need(raw, "id", where, str)
            kind = _need(raw, "kind", where, str)
            if kind not in PORTS:
                raise SchemaError("kind", f"unknown kind {kind!r} in {where}")
            scale = raw.get("scale")
            if kind in GATE_KINDS:
                scale = parse_scale(_need(raw, "scale", where, str))
            elif scale is not None:
                raise SchemaError("scale", f"only gates carry a scale ({where})")
            label = raw.get("label")
            if kind in ("input", "output"):
                label = _need(raw, "label", where, str)
            homeo = raw.get("homeo")
            if kind == "homeo":
                homeo = _need(raw, "homeo", where, str)
            nodes.append(Node(nid, kind, scale, label, homeo, bool(raw.get("inverted", False))))
        wires = []
        for i, raw in enumerate(_need(doc, "wires", "document", list)):
            where = f"wires[{i}]"
            wires.append(Wire(
                _need(raw, "id", where, str),
                _port(_need(raw, "from", where), "from"),
                _port(_need(raw, "to", where), "to"),
                _need(raw, "role", where, str),
            ))
        decorations = {k: parse_term(v) for k, v in doc.get("decorations", {}).items()}
        choroi = []
        for i, raw in enumerate(doc.get("choroi", [])):
            where = f"choroi[{i}]"
            choroi.append(ChoraRecord(
                _need(raw, "boundaryArc", where, str),
                parse_term(_need(raw, "base", where, str)),
                parse_scale(_need(raw, "scale", where, str)),
                frozenset(_need(raw, "interior", where, list)),
            ))
        gates = []
        for i, raw in enumerate(doc.get("gates", [])):
            where = f"gates[{i}]"
            gates.append(GateRecord(
                _need(raw, "id", where, str),
                _need(raw, "kind", where, str),
                tuple(_need(raw, "nodes", where, list)),
                parse_scale(_need(raw, "scale", where, str)),
                tuple((k, _port(v, "inputs")) for k, v in raw.get("inputs", {}).items()),
                tuple((k, _port(v, "outputs")) for k, v in raw.get("outputs", {}).items()),
                raw.get("chora"),
            ))
    except SchemaError:
        raise
    except ValueError as exc:
        raise SchemaError("value", str(exc)) from None
    scales = doc.get("scales", {})
    if not isinstance(scales, dict):
        raise SchemaError("scales", "expected an object")
    return Diagram(nodes, wires, decorations, choroi, gates, str(doc.get("name", "")), scales)


def parse(text: str) -> Diagram:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, exc.lineno, exc.colno) from None
    return from_json(doc)


_SHAPE = {"fanout": "point", "circ": "box", "bullet": "box", "input": "invhouse",
          "output": "house", "homeo": "ellipse"}


def to_dot(d: Diagram) -> str:
    """Graphviz rendering; chords are dashed."""

    def q(s):
        return '"' + str(s).replace("\\", "\\\\").replace('"', '\\"') + '"'

    lines = [f"digraph {q(d.name or 'diagram')} {{", "  rankdir=LR;"]
    for nid in sorted(d.nodes):
        n = d.nodes[nid]
        if n.kind in GATE_KINDS:
            lab = ("o " if n.kind == "circ" else "* ") + str(n.scale)
        elif n.kind in ("input", "output"):
            lab = n.label
        elif n.kind == "homeo":
            lab = n.homeo + ("^-1" if n.inverted else "")
        else:
            lab = ""
        lines.append(f"  {q(nid)} [shape={_SHAPE.get(n.kind, 'box')}, label={q(lab)}];")
    for wid in sorted(d.wires):
        w = d.wires[wid]
        attrs = [f"label={q(d.decorations[wid])}"] if wid in d.decorations else []
        if w.role == "chord":
            attrs.append("style=dashed")
        lines.append(f"  {q(w.src[0])} -> {q(w.dst[0])} [{', '.join(attrs)}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


# --- construction -----------------------------------------------------------


class Builder:
    """Incremental construction and splicing of diagrams.

    Values are referred to by integer *handles*, each naming an output
    port.  A handle may be consumed any number of times; :meth:`build`
    inserts free FanOuts for multiple uses and hidden outputs for unused
    handles.  Starting from an existing diagram, :meth:`remove` cuts nodes
    out and returns handles/ports to reconnect the hole.
    """

    def __init__(self, base: Diagram | None = None, name: str | None = None):
        base = base or Diagram()
        self.name = base.name if name is None else name
        self.scales = dict(base.scales)
        self.nodes: dict[str, Node] = dict(base.nodes)
        self.wires: dict[str, Wire] = dict(base.wires)
        self.decorations: dict[str, Term] = dict(base.decorations)
        self.choroi: list[ChoraRecord] = list(base.choroi)
        self.gates: list[GateRecord] = list(base.gates)
        self._src: list[tuple[str, str]] = []
        self._uses: list[list[tuple[str, str]]] = []
        self._src_term: dict[int, Term] = {}
        self._counter = {"n": 0, "w": 0, "g": 0, "_k": 0, "_d": 0}
        self._used_ids = set(self.nodes) | set(self.wires) | {g.id for g in self.gates}
        self._used_labels = {n.label for n in self.nodes.values() if n.label}
        # wire ids freed by remove(), reusable for the same source port
        self._freed: dict[tuple[str, str], tuple[str, Term | None]] = {}
        self._orphans: list[str] = []
        self._pending: dict[tuple[str, str], Term] = {}

    # ids ------------------------------------------------------------------

    def fresh(self, prefix: str) -> str:
        while True:
            self._counter[prefix] = self._counter.get(prefix, 0) + 1
            cand = f"{prefix}{self._counter[prefix]}"
            if cand not in self._used_ids and cand not in self._used_labels:
                self._used_ids.add(cand)
                return cand

    def _node(self, kind, **kw) -> str:
        nid = kw.pop("id", None) or self.fresh("n")
        self._used_ids.add(nid)
        self.nodes[nid] = Node(nid, kind, **kw)
        return nid

    def _wire(self, src, dst, role="segment", wid=None) -> str:
        wid = wid or self.fresh("w")
        self._used_ids.add(wid)
        self.wires[wid] = Wire(wid, tuple(src), tuple(dst), role)
        return wid

    def _handle(self, node, port) -> int:
        self._src.append((node, port))
        self._uses.append([])
        return len(self._src) - 1

    def _use(self, h: int, node: str, port: str):
        self._uses[h].append((node, port))

    # sources and sinks ------------------------------------------------------

    def input(self, label: str, term: Term | None = None, id: str | None = None) -> int:
        nid = self._node("input", label=label, id=id)
        self._used_labels.add(label)
        h = self._handle(nid, "out")
        if term is not None:
            self._src_term[h] = term
        return h

    def const(self, term: Term) -> int:
        """Constant point given by a term over the free variables."""
        return self.input(self.fresh("_k"), term)

    def source(self, node: str, port: str) -> int:
        return self._handle(node, port)

    def output(self, h: int, label: str | None = None, id: str | None = None) -> str:
        label = label or self.fresh("_d")
        self._used_labels.add(label)
        nid = self._node("output", label=label, id=id)
        self._use(h, nid, "in")
        return nid

    def sink(self, h: int, node: str, port: str):
        self._use(h, node, port)

    # gates ----------------------------------------------------------------

    def crossing(self, over: int, under: int, kind: str, scale) -> tuple[int, int, str, str]:
        """Crossing of ``over`` above ``under``; returns handles and node ids."""
        if kind not in GATE_KINDS:
            raise ValueError(f"crossing kind must be circ or bullet, got {kind!r}")
        f = self._node("fanout")
        g = self._node(kind, scale=as_scale(scale))
        self._use(over, f, "in")
        self._use(under, g, "inOperand")
        self._wire((f, "outChord"), (g, "inBase"), "chord")
        return self._handle(f, "outThrough"), self._handle(g, "out"), f, g

    def homeo(self, h: int, name: str, inverted: bool = False) -> int:
        n = self._node("homeo", homeo=name, inverted=inverted)
        self._use(h, n, "in")
        return self._handle(n, "out")

    def _record(self, kind, nodes, scale, inputs, outputs, chora=None) -> str:
        gid = self.fresh("g")
        self.gates.append(GateRecord(gid, kind, tuple(nodes), as_scale(scale),
                                     tuple(inputs.items()), tuple(outputs.items()), chora))
        return gid

    def difference(self, x: int, u: int, v: int, eps) -> tuple[int, int, int]:
        """Difference gate; returns handles (x, x o u, difference)."""
        eps = as_scale(eps)
        x1, a, f1, c1 = self.crossing(x, u, "circ", eps)
        x2, b, f2, c2 = self.crossing(x1, v, "circ", eps)
        a2, dlt, f3, c3 = self.crossing(a, b, "bullet", eps)
        self._record("DifferenceGate", (f1, c1, f2, c2, f3, c3), eps,
                     {"x": (f1, "in"), "u": (c1, "inOperand"), "v": (c2, "inOperand")},
                     {"x": (f2, "outThrough"), "a": (f3, "outThrough"), "out": (c3, "out")})
        return x2, a2, dlt

    def sum(self, x: int, u: int, v: int, eps) -> tuple[int, int, int]:
        """Sum gate; returns handles (x, x o u, sum)."""
        eps = as_scale(eps)
        x1, a, f1, c1 = self.crossing(x, u, "circ", eps)
        a2, b, f2, c2 = self.crossing(a, v, "circ", eps)
        x2, s, f3, c3 = self.crossing(x1, b, "bullet", eps)
        self._record("SumGate", (f1, c1, f2, c2, f3, c3), eps,
                     {"x": (f1, "in"), "u": (c1, "inOperand"), "v": (c2, "inOperand")},
                     {"x": (f3, "outThrough"), "a": (f2, "outThrough"), "out": (c3, "out")})
        return x2, a2, s

    def inverse(self, x: int, u: int, eps) -> tuple[int, int, int]:
        """Inverse gate: a difference whose v input is a copy of x."""
        eps = as_scale(eps)
        x1, a, f1, c1 = self.crossing(x, u, "circ", eps)
        x2, b, f2, c2 = self.crossing(x1, x, "circ", eps)
        a2, r, f3, c3 = self.crossing(a, b, "bullet", eps)
        self._record("InverseGate", (f1, c1, f2, c2, f3, c3), eps,
                     {"x": (f1, "in"), "u": (c1, "inOperand")},
                     {"x": (f2, "outThrough"), "a": (f3, "outThrough"), "out": (c3, "out")})
        return x2, a2, r

    def eps_fanout(self, x: int, u: int, eps) -> tuple[int, int]:
        """Approximate copy of x: outputs (x, x o_eps u), the second tending to x."""
        x1, y, f, g = self.crossing(x, u, "circ", eps)
        self._record("EpsFanOut", (f, g), eps, {"x": (f, "in"), "u": (g, "inOperand")},
                     {"x": (f, "outThrough"), "out": (g, "out")})
        return x1, y

    def elementary_chora(self, base: Term, scale, u: int, v: int,
                         inner_kind: str = "circ", inner_scale="mu") -> tuple[int, int]:
        """Chora (base, scale) whose interior is the crossing u over v.

        Returns handles for the two exits (u, relative dilation of v).
        """
        scale = as_scale(scale)
        b = [self._node("fanout") for _ in range(4)]
        cut = None
        for i in range(4):
            wid = self._wire((b[i], "outThrough"), (b[(i + 1) % 4], "in"))
            if i == 3:
                cut = wid
        self.decorations[cut] = base
        gates = []

        def boundary(i, h, kind):
            g = self._node(kind, scale=scale)
            self._wire((b[i], "outChord"), (g, "inBase"), "chord")
            self._use(h, g, "inOperand")
            gates.append(g)
            return self._handle(g, "out")

        pu = boundary(0, u, "circ")
        pv = boundary(1, v, "circ")
        pu2, pw, fi, gi = self.crossing(pu, pv, inner_kind, inner_scale)
        ou = boundary(2, pu2, "bullet")
        ow = boundary(3, pw, "bullet")
        self.choroi.append(ChoraRecord(cut, base, scale, frozenset({fi, gi})))
        self._record("ElementaryChora", tuple(b) + tuple(gates) + (fi, gi), scale,
                     {"u": (gates[0], "inOperand"), "v": (gates[1], "inOperand")},
                     {"u": (gates[2], "out"), "out": (gates[3], "out")}, chora=cut)
        return ou, ow

    # splicing -------------------------------------------------------------

    def remove(self, node_ids: Iterable[str]):
        """Delete nodes; returns (incoming, outgoing) maps for the cut wires.

        ``incoming[(node, port)]`` is a handle for the external source that
        fed the removed port; ``outgoing[(node, port)]`` is the external
        (node, port) that the removed port fed.
        """
        dead = set(node_ids)
        incoming: dict[tuple[str, str], int] = {}
        outgoing: dict[tuple[str, str], tuple[str, str]] = {}
        for wid in sorted(self.wires):
            w = self.wires[wid]
            s_dead, d_dead = w.src[0] in dead, w.dst[0] in dead
            if not (s_dead or d_dead):
                continue
            del self.wires[wid]
            deco = self.decorations.pop(wid, None)
            if d_dead and not s_dead:
                incoming[tuple(w.dst)] = self._handle(*w.src)
                self._freed[tuple(w.src)] = (wid, deco)
            elif s_dead and not d_dead:
                outgoing[tuple(w.src)] = tuple(w.dst)
                if deco is not None:
                    # value-preserving rewrites deliver the same color here
                    self._pending[tuple(w.dst)] = deco
            elif deco is not None:
                self._orphans.append(wid)
        for n in dead:
            self.nodes.pop(n, None)
        for h, (n, _p) in enumerate(self._src):
            if n in dead:
                self._uses[h] = []
        return incoming, outgoing

    def cut(self, wid: str) -> tuple[int, tuple[str, str]]:
        """Delete a wire; returns a handle for its source and its old target."""
        w = self.wires.pop(wid)
        deco = self.decorations.pop(wid, None)
        self._freed[tuple(w.src)] = (wid, deco)
        return self._handle(*w.src), tuple(w.dst)

    def attach(self, fanout: str, under: int, kind: str, scale) -> tuple[int, str]:
        """Gate on ``under`` whose base is the free chord port of ``fanout``."""
        g = self._node(kind, scale=as_scale(scale))
        self._wire((fanout, "outChord"), (g, "inBase"), "chord")
        self._use(under, g, "inOperand")
        return self._handle(g, "out"), g

    def grow_boundary(self, boundary_wire: str, count: int) -> list[str]:
        """Insert ``count`` FanOuts into the closed arc through ``boundary_wire``.

        The decorated wire keeps its id and decoration (it now ends at the
        first new FanOut); the new FanOuts' chord ports are left for
        :meth:`attach`.
        """
        w = self.wires[boundary_wire]
        fans = [self._node("fanout") for _ in range(count)]
        self.wires[boundary_wire] = Wire(w.id, w.src, (fans[0], "in"), w.role)
        for a, b in zip(fans, fans[1:]):
            self._wire((a, "outThrough"), (b, "in"))
        self._wire((fans[-1], "outThrough"), w.dst)
        return fans

    def chora(self, base: Term, scale, entering: Sequence[int],
              body: Callable[[list[int]], list[int]]) -> tuple[list[int], str, set[str]]:
        """Chora (base, scale) with one boundary crossing per entering strand.

        ``body`` maps pixel handles to pixel handles; nodes it creates are
        declared interior.  Returns (exit handles, boundary wire, interior).
        """
        scale = as_scale(scale)
        n = len(entering)
        b = [self._node("fanout") for _ in range(2 * n)]
        cut = None
        for i in range(2 * n):
            wid = self._wire((b[i], "outThrough"), (b[(i + 1) % (2 * n)], "in"))
            if i == 2 * n - 1:
                cut = wid
        self.decorations[cut] = base
        pixels = [self.attach(b[i], h, "circ", scale)[0] for i, h in enumerate(entering)]
        before = set(self.nodes)
        outs = body(pixels)
        interior = set(self.nodes) - before
        exits = [self.attach(b[n + i], h, "bullet", scale)[0] for i, h in enumerate(outs)]
        self.choroi.append(ChoraRecord(cut, base, scale, frozenset(interior)))
        return exits, cut, interior

    def build(self) -> Diagram:
        freed = dict(self._freed)
        for h, src in enumerate(self._src):
            uses = self._uses[h]
            if src[0] not in self.nodes:
                continue
            reuse = freed.pop(src, None)
            if not uses:
                if any(w.src == src for w in self.wires.values()):
                    continue
                lab = self.fresh("_d")
                self._used_labels.add(lab)
                uses = [(self._node("output", label=lab), "in")]
            first_wire = None
            cur = src
            for i, dst in enumerate(uses):
                if i < len(uses) - 1:
                    f = self._node("fanout")
                    wid = self._wire(cur, (f, "in"), wid=reuse[0] if (reuse and first_wire is None) else None)
                    first_wire = first_wire or wid
                    self._wire((f, "outChord"), dst)
                    cur = (f, "outThrough")
                else:
                    wid = self._wire(cur, dst, wid=reuse[0] if (reuse and first_wire is None) else None)
                    first_wire = first_wire or wid
            if reuse and reuse[1] is not None:
                self.decorations[first_wire] = reuse[1]
            if h in self._src_term:
                self.decorations[first_wire] = self._src_term[h]
        for port, deco in self._pending.items():
            wid = next((w.id for w in self.wires.values() if w.dst == port), None)
            if wid is None:
                self._orphans.append(f"{port[0]}.{port[1]}")
            else:
                self.decorations.setdefault(wid, deco)
        self._pending = {}
        lost = [w for w in self._orphans if w not in self.wires]
        if lost:
            raise WouldOrphanDecoration(f"rewrite would drop decorated wires {sorted(lost)}")
        for h in range(len(self._src)):
            self._uses[h] = []
        self._src, self._uses = [], []
        return Diagram(self.nodes.values(), self.wires.values(), self.decorations,
                       self.choroi, self.gates, self.name, self.scales)


def build_crossing(kind: str = "circ", scale="eps") -> Diagram:
    """Single crossing fixture: inputs x (over) and u (under)."""
    b = Builder(name=f"{kind}-crossing")
    x = b.input("x", id="i_x")
    u = b.input("u", id="i_u")
    xo, uo, _f, _g = b.crossing(x, u, kind, scale)
    b.output(xo, "x", id="o_x")
    b.output(uo, "v", id="o_v")
    return b.build()
