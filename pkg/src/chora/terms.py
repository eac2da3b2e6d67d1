"""Symbolic colors for wires and the normalizer for the exact irq laws.

Terms are immutable trees with cached hashes, so deep terms built by
symbolic propagation stay cheap to compare and to memoize.

Normalization is innermost-first, leftmost.  Every rule strictly lowers
the node count, so it terminates.  The rule set is sound in any
Gamma-irq, but confluence is not established, so
:func:`equal_modulo` is a sound, possibly incomplete, equality test.
"""
from __future__ import annotations

import re
from typing import Callable, Mapping

from .scale import ONE, as_scale, eval_scale, parse_scale

__all__ = [
    "Term",
    "Var",
    "Circ",
    "Bullet",
    "App",
    "AppInv",
    "TermParseError",
    "UnboundVar",
    "UnknownHomeo",
    "normalize",
    "normalize_steps",
    "circ_form",
    "equal_modulo",
    "parse_term",
    "eval_term",
    "free_vars",
    "delta",
    "sigma",
    "inverse",
]


class TermParseError(ValueError):
    pass


class UnboundVar(KeyError):
    def __str__(self):
        return f"unbound point variable {self.args[0]!r}"


class UnknownHomeo(KeyError):
    def __str__(self):
        return f"unknown homeomorphism {self.args[0]!r}"


class Term:
    __slots__ = ("_hash", "size")

    def __eq__(self, other):
        if self is other:
            return True
        if type(self) is not type(other) or self._hash != other._hash:
            return False
        return self._key() == other._key()

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return f"parse_term({str(self)!r})"


class Var(Term):
    __slots__ = ("name",)

    def __init__(self, name: str):
        self.name = name
        self.size = 1
        self._hash = hash(("Var", name))

    def _key(self):
        return (self.name,)

    def __str__(self):
        return self.name


class _Op(Term):
    __slots__ = ("scale", "base", "operand")
    tag = ""

    def __init__(self, scale, base: Term, operand: Term):
        self.scale = as_scale(scale)
        self.base = base
        self.operand = operand
        self.size = 1 + base.size + operand.size
        self._hash = hash((self.tag, self.scale, base._hash, operand._hash))

    def _key(self):
        return (self.scale, self.base, self.operand)

    def __str__(self):
        return f"{self.tag}[{self.scale}]({self.base},{self.operand})"


class Circ(_Op):
    """``base o_scale operand``, the dilation of ``operand`` about ``base``."""

    __slots__ = ()
    tag = "circ"


class Bullet(_Op):
    __slots__ = ()
    tag = "bul"


class _Apply(Term):
    __slots__ = ("homeo", "arg")
    tag = ""

    def __init__(self, homeo: str, arg: Term):
        self.homeo = homeo
        self.arg = arg
        self.size = 1 + arg.size
        self._hash = hash((self.tag, homeo, arg._hash))

    def _key(self):
        return (self.homeo, self.arg)

    def __str__(self):
        return f"{self.tag}[{self.homeo}]({self.arg})"


class App(_Apply):
    __slots__ = ()
    tag = "app"


class AppInv(_Apply):
    __slots__ = ()
    tag = "appinv"


# --- derived constructions -------------------------------------------------


def delta(eps, x: Term, u: Term, v: Term) -> Term:
    """Approximate difference (x o u) * (x o v)."""
    return Bullet(eps, Circ(eps, x, u), Circ(eps, x, v))


def sigma(eps, x: Term, u: Term, v: Term) -> Term:
    """Approximate sum x * ((x o u) o v)."""
    return Bullet(eps, x, Circ(eps, Circ(eps, x, u), v))


def inverse(eps, x: Term, u: Term) -> Term:
    return delta(eps, x, u, x)


# --- normalization -----------------------------------------------------------


def _root_step(t: Term) -> Term | None:
    """One rule application at the root of ``t`` (children already normal)."""
    if isinstance(t, _Op):
        s, b, o = t.scale, t.base, t.operand
        same, other = (Circ, Bullet) if isinstance(t, Circ) else (Bullet, Circ)
        if o == b:
            return b
        if s.is_one():
            return o
        if isinstance(o, _Op) and o.base == b:
            if isinstance(o, other):
                if o.scale == s:
                    return o.operand
                return same(s / o.scale, b, o.operand)
            return same(s * o.scale, b, o.operand)
        return None
    if isinstance(t, App) and isinstance(t.arg, AppInv) and t.arg.homeo == t.homeo:
        return t.arg.arg
    if isinstance(t, AppInv) and isinstance(t.arg, App) and t.arg.homeo == t.homeo:
        return t.arg.arg
    return None


def _rebuild(t: Term, children: tuple) -> Term:
    if isinstance(t, _Op):
        if children[0] is t.base and children[1] is t.operand:
            return t
        return type(t)(t.scale, *children)
    if isinstance(t, _Apply):
        if children[0] is t.arg:
            return t
        return type(t)(t.homeo, children[0])
    return t


def normalize(t: Term, trace: Callable[[Term, Term], None] | None = None) -> Term:
    """Normal form of ``t``.  ``trace(before, after)`` sees each rule firing."""
    memo: dict[Term, Term] = {}

    def norm(u: Term) -> Term:
        hit = memo.get(u)
        if hit is not None:
            return hit
        if isinstance(u, _Op):
            out = _rebuild(u, (norm(u.base), norm(u.operand)))
        elif isinstance(u, _Apply):
            out = _rebuild(u, (norm(u.arg),))
        else:
            out = u
        while True:
            nxt = _root_step(out)
            if nxt is None:
                break
            if trace is not None:
                trace(out, nxt)
            # a contractum may expose new redexes only at its root, except the
            # composition rules which build a fresh node over normal children
            out = nxt
        memo[u] = out
        return out

    return norm(t)


def normalize_steps(t: Term) -> list[tuple[int, int]]:
    """(size before, size after) for every rule firing while normalizing."""
    steps = []
    normalize(t, lambda a, b: steps.append((a.size, b.size)))
    return steps


def circ_form(t: Term) -> Term:
    """Rewrite every ``Bullet(s, ...)`` as ``Circ(1/s, ...)``, then normalize."""
    memo: dict[Term, Term] = {}

    def conv(u: Term) -> Term:
        hit = memo.get(u)
        if hit is not None:
            return hit
        if isinstance(u, Bullet):
            out = Circ(u.scale.inv(), conv(u.base), conv(u.operand))
        elif isinstance(u, _Op):
            out = Circ(u.scale, conv(u.base), conv(u.operand))
        elif isinstance(u, _Apply):
            out = type(u)(u.homeo, conv(u.arg))
        else:
            out = u
        memo[u] = out
        return out

    return normalize(conv(normalize(t)))


def equal_modulo(t1: Term, t2: Term) -> bool:
    """Sound test that two terms denote the same point in every Gamma-irq.

    Both sides are normalized and compared structurally, with bullet read
    as circ at the inverse scale.
    """
    if normalize(t1) == normalize(t2):
        return True
    return circ_form(t1) == circ_form(t2)


def free_vars(t: Term) -> set[str]:
    seen: set[int] = set()
    out: set[str] = set()
    stack = [t]
    while stack:
        u = stack.pop()
        if id(u) in seen:
            continue
        seen.add(id(u))
        if isinstance(u, Var):
            out.add(u.name)
        elif isinstance(u, _Op):
            stack += [u.base, u.operand]
        elif isinstance(u, _Apply):
            stack.append(u.arg)
    return out


def scale_vars(t: Term) -> set[str]:
    out: set[str] = set()
    stack, seen = [t], set()
    while stack:
        u = stack.pop()
        if id(u) in seen:
            continue
        seen.add(id(u))
        if isinstance(u, _Op):
            out |= u.scale.variables
            stack += [u.base, u.operand]
        elif isinstance(u, _Apply):
            stack.append(u.arg)
    return out


# --- text grammar ------------------------------------------------------------

_TOKEN = re.compile(r"\s*(?:(?P<kw>circ|bul|appinv|app)\s*\[|(?P<name>[A-Za-z_][A-Za-z0-9_]*)|(?P<p>[(),]))")


def parse_term(text: str) -> Term:
    """Parse ``circ[eps](x,bul[eps^-1](x,u))``, ``app[f](u)``, ``x``."""
    pos = 0

    def fail(msg):
        raise TermParseError(f"{msg} at column {pos + 1} in {text!r}")

    def expect(ch):
        nonlocal pos
        m = re.compile(r"\s*" + re.escape(ch)).match(text, pos)
        if not m:
            fail(f"expected {ch!r}")
        pos = m.end()

    def bracket() -> str:
        nonlocal pos
        end = text.find("]", pos)
        if end < 0:
            fail("unterminated '['")
        inner = text[pos:end]
        pos = end + 1
        return inner

    def term() -> Term:
        nonlocal pos
        m = _TOKEN.match(text, pos)
        if not m or m.group("p"):
            fail("expected a term")
        pos = m.end()
        kw = m.group("kw")
        if kw is None:
            return Var(m.group("name"))
        arg = bracket()
        expect("(")
        if kw in ("circ", "bul"):
            try:
                s = parse_scale(arg)
            except ValueError as exc:
                fail(str(exc))
            a = term()
            expect(",")
            b = term()
            expect(")")
            return (Circ if kw == "circ" else Bullet)(s, a, b)
        name = arg.strip()
        if not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", name):
            fail(f"bad homeomorphism name {name!r}")
        a = term()
        expect(")")
        return (App if kw == "app" else AppInv)(name, a)

    t = term()
    if text[pos:].strip():
        fail("trailing text")
    return t


# --- numeric semantics -------------------------------------------------------


def eval_term(
    t: Term,
    model,
    points: Mapping[str, object],
    scales: Mapping[str, float] | None = None,
    homeos: Mapping[str, object] | None = None,
):
    """Evaluate ``t`` in ``model``; shared subterms are computed once."""
    scales = scales or {}
    homeos = homeos or {}
    memo: dict[int, object] = {}

    def ev(u: Term):
        key = id(u)
        if key in memo:
            return memo[key]
        if isinstance(u, Var):
            if u.name not in points:
                raise UnboundVar(u.name)
            out = points[u.name]
        elif isinstance(u, _Op):
            e = eval_scale(u.scale, scales)
            if isinstance(u, Bullet):
                e = 1.0 / e
            out = model.circ(e, ev(u.base), ev(u.operand))
        else:
            if u.homeo not in homeos:
                raise UnknownHomeo(u.homeo)
            h = homeos[u.homeo]
            out = h.forward(ev(u.arg)) if isinstance(u, App) else h.inverse(ev(u.arg))
        memo[key] = out
        return out

    return ev(t)


__all__ += ["scale_vars", "ONE"]
