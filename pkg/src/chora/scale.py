"""Exact arithmetic in the multiplicative scale group.

A :class:`ScaleExpr` is a positive rational constant times a monomial in
named scale variables, e.g. ``3/4*eps^2*mu``.  Values are immutable and
kept in canonical form, so structural equality is group equality.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

__all__ = [
    "ScaleExpr",
    "ScaleError",
    "ScaleOverflow",
    "UnboundScaleVar",
    "InvalidScaleValue",
    "ScaleParseError",
    "ONE",
    "var",
    "const",
    "parse_scale",
    "as_scale",
    "eval_scale",
]

# exponents are kept inside the signed 64-bit range
MAX_EXPONENT = 2**63 - 1

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")


class ScaleError(Exception):
    pass


class ScaleOverflow(ScaleError, ArithmeticError):
    pass


class UnboundScaleVar(ScaleError, KeyError):
    def __str__(self):
        return f"unbound scale variable {self.args[0]!r}"


class InvalidScaleValue(ScaleError, ValueError):
    pass


class ScaleParseError(ScaleError, ValueError):
    pass


def _check_exp(e: int) -> int:
    if abs(e) > MAX_EXPONENT:
        raise ScaleOverflow(f"scale exponent {e} out of range")
    return e


@dataclass(frozen=True, order=True)
class ScaleExpr:
    coefficient: Fraction = Fraction(1)
    exponents: tuple[tuple[str, int], ...] = ()

    def __post_init__(self):
        coef = Fraction(self.coefficient)
        if coef <= 0:
            raise InvalidScaleValue(f"scale coefficient must be positive, got {coef}")
        merged: dict[str, int] = {}
        for name, e in self.exponents:
            if not _IDENT.match(name):
                raise ScaleParseError(f"bad scale variable name {name!r}")
            merged[name] = merged.get(name, 0) + int(e)
        exps = tuple(sorted((k, _check_exp(v)) for k, v in merged.items() if v != 0))
        object.__setattr__(self, "coefficient", coef)
        object.__setattr__(self, "exponents", exps)

    # group structure -------------------------------------------------

    def __mul__(self, other: ScaleExpr) -> ScaleExpr:
        if not isinstance(other, ScaleExpr):
            return NotImplemented
        return ScaleExpr(self.coefficient * other.coefficient, self.exponents + other.exponents)

    def inv(self) -> ScaleExpr:
        return ScaleExpr(1 / self.coefficient, tuple((k, -e) for k, e in self.exponents))

    def __truediv__(self, other: ScaleExpr) -> ScaleExpr:
        if not isinstance(other, ScaleExpr):
            return NotImplemented
        return self * other.inv()

    def __pow__(self, n: int) -> ScaleExpr:
        n = int(n)
        exps = tuple((k, _check_exp(e * n)) for k, e in self.exponents)
        # the coefficient power is exact but may be enormous
        if n and max(abs(self.coefficient.numerator), self.coefficient.denominator) > 1:
            if abs(n) > 4096:
                raise ScaleOverflow(f"coefficient power {n} too large")
        return ScaleExpr(self.coefficient**n, exps)

    def is_one(self) -> bool:
        return self.coefficient == 1 and not self.exponents

    @property
    def variables(self) -> frozenset[str]:
        return frozenset(k for k, _ in self.exponents)

    def substitute(self, values: Mapping[str, ScaleExpr]) -> ScaleExpr:
        out = ScaleExpr(self.coefficient)
        for k, e in self.exponents:
            out = out * (values[k] ** e if k in values else ScaleExpr(1, ((k, e),)))
        return out

    def evaluate(self, binding: Mapping[str, float]) -> float:
        return eval_scale(self, binding)

    # text --------------------------------------------------------------

    def __str__(self) -> str:
        parts = []
        if self.coefficient != 1 or not self.exponents:
            parts.append(str(self.coefficient))
        for k, e in self.exponents:
            parts.append(k if e == 1 else f"{k}^{e}")
        return "*".join(parts)

    def __repr__(self) -> str:
        return f"ScaleExpr({str(self)!r})"


ONE = ScaleExpr()


def var(name: str, power: int = 1) -> ScaleExpr:
    return ScaleExpr(Fraction(1), ((name, power),))


def const(value) -> ScaleExpr:
    return ScaleExpr(Fraction(value))


_FACTOR = re.compile(
    r"\s*(?:(?P<num>\d+(?:\.\d+)?(?:/\d+)?)|(?P<name>[A-Za-z_][A-Za-z0-9_]*)(?:\s*\^\s*(?P<exp>[+-]?\d+))?)\s*\Z"
)


def parse_scale(text: str) -> ScaleExpr:
    """Parse ``3/4*eps^2*mu`` style text.  ``parse_scale(str(s)) == s``."""
    if not isinstance(text, str) or not text.strip():
        raise ScaleParseError(f"empty scale expression: {text!r}")
    out = ONE
    for raw in text.split("*"):
        m = _FACTOR.match(raw)
        if m is None:
            raise ScaleParseError(f"cannot parse scale factor {raw!r} in {text!r}")
        if m.group("num") is not None:
            try:
                c = Fraction(m.group("num"))
            except (ValueError, ZeroDivisionError) as exc:
                raise ScaleParseError(str(exc)) from None
            if c <= 0:
                raise ScaleParseError(f"nonpositive scale constant in {text!r}")
            out = out * ScaleExpr(c)
        else:
            exp = int(m.group("exp")) if m.group("exp") is not None else 1
            out = out * ScaleExpr(Fraction(1), ((m.group("name"), _check_exp(exp)),))
    return out


def as_scale(value) -> ScaleExpr:
    if isinstance(value, ScaleExpr):
        return value
    if isinstance(value, str):
        return parse_scale(value)
    return const(value)


def eval_scale(a: ScaleExpr, binding: Mapping[str, float]) -> float:
    """Numeric value of ``a`` with variables taken from ``binding``.

    The result is a float unless every bound value used is a Fraction, in
    which case it is an exact Fraction.  A constant is exact when the
    binding is nonempty and holds only Fractions.
    """
    value = a.coefficient
    exact = True
    for name, e in a.exponents:
        if name not in binding:
            raise UnboundScaleVar(name)
        v = binding[name]
        if not isinstance(v, Fraction):
            exact = False
            v = float(v)
        if not v > 0:
            raise InvalidScaleValue(f"scale variable {name} bound to nonpositive value {v}")
        value = value * v**e
    if not a.exponents:
        exact = bool(binding) and all(isinstance(v, Fraction) for v in binding.values())
    return value if exact else float(value)
