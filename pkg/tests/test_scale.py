from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from chora.scale import (
    ONE,
    InvalidScaleValue,
    ScaleOverflow,
    ScaleParseError,
    UnboundScaleVar,
    const,
    eval_scale,
    parse_scale,
    var,
)

NAMES = ("eps", "mu", "lam")

exprs = st.builds(
    lambda c, exps: const(c) * _monomial(exps),
    st.fractions(min_value=Fraction(1, 64), max_value=64, max_denominator=64),
    st.dictionaries(st.sampled_from(NAMES), st.integers(-4, 4), max_size=3),
)
bindings = st.fixed_dictionaries({n: st.floats(0.05, 20.0) for n in NAMES})


def _monomial(exps):
    out = ONE
    for name, k in exps.items():
        if k:
            out = out * var(name, k)
    return out


def test_group_examples():
    eps, mu = var("eps"), var("mu")
    assert eps * mu**2 * mu**-2 == eps
    assert (const(Fraction(1, 2)) * eps).inv() == const(2) * var("eps", -1)
    assert (eps * mu).inv() * (eps * mu) == ONE


def test_eval_examples():
    assert eval_scale(parse_scale("eps^2*mu"), {"eps": 0.5, "mu": 3}) == pytest.approx(0.75)
    assert eval_scale(ONE, {}) == 1.0
    assert eval_scale(var("eps", -1), {"eps": 0.25}) == 4.0


def test_eval_stays_exact_with_fractions():
    v = eval_scale(parse_scale("3/4*eps^-2"), {"eps": Fraction(1, 3)})
    assert v == Fraction(27, 4)


def test_errors():
    with pytest.raises(UnboundScaleVar):
        eval_scale(var("eps"), {})
    with pytest.raises(InvalidScaleValue):
        eval_scale(var("eps"), {"eps": 0.0})
    with pytest.raises(InvalidScaleValue):
        eval_scale(var("eps"), {"eps": -1.0})
    with pytest.raises(ScaleOverflow):
        var("eps", 2**62) ** 4
    for bad in ("", "eps^", "2*", "-1*eps", "e ps"):
        with pytest.raises(ScaleParseError):
            parse_scale(bad)


@given(exprs, exprs)
def test_canonical_equality(a, b):
    assert (a * b == b * a) and (a * b).inv() == a.inv() * b.inv()
    assert (a / a).is_one()
    assert parse_scale(str(a)) == a
    assert (a == b) == (str(a) == str(b))


@given(exprs, exprs, bindings)
def test_eval_is_a_morphism(a, b, beta):
    lhs = eval_scale(a * b, beta)
    rhs = eval_scale(a, beta) * eval_scale(b, beta)
    assert lhs == pytest.approx(rhs, rel=1e-12)


@given(exprs, st.integers(-3, 3), bindings)
def test_pow_matches_repeated_mul(a, n, beta):
    rep = ONE
    for _ in range(abs(n)):
        rep = rep * (a if n > 0 else a.inv())
    assert a**n == rep
    assert eval_scale(a**n, beta) == pytest.approx(eval_scale(a, beta) ** n, rel=1e-12)
