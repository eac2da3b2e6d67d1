import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from chora import atlas as A
from chora import models as M
from chora.errors import DensityViolated, MissingLimit, SizeLimit

EUCLID2 = M.get_model("euclid2")


def line(*xs, labels=None):
    p = np.array(xs, float)[:, None]
    return A.FiniteMetricSpace.from_points(p, M.chart_dist, labels)


def brute_acc(rel):
    """Pairs-of-pairs sup, written out directly."""
    best = 0.0
    for (a, b), (c, d) in itertools.product(rel.pairs, repeat=2):
        best = max(best, abs(rel.target.d[b, d] - rel.source.d[a, c]))
    return best


def test_space_validation():
    with pytest.raises(ValueError):
        A.FiniteMetricSpace(["a", "b"], [[0, 1], [2, 0]])
    with pytest.raises(ValueError):
        A.FiniteMetricSpace(["a", "b", "c"], [[0, 1, 5], [1, 0, 1], [5, 1, 0]])
    with pytest.raises(ValueError):
        A.FiniteMetricSpace(["a", "a"], [[0, 1], [1, 0]])
    s = line(0, 1, 3)
    assert A.FiniteMetricSpace.from_json(s.to_json()).d.tolist() == s.d.tolist()


def test_metric_examples():
    X, Y = line(0, 1), line(0, 1.2)
    m = A.metrics(A.MapRelation(X, Y, ((0, 0), (1, 1))))
    assert m["accuracy"] == pytest.approx(0.2, abs=1e-12)
    P = line(0)
    m = A.metrics(A.MapRelation(X, P, ((0, 0), (1, 0))))
    assert m["resolution"] == 1 and m["resolutionAt"]["0"] == 1
    m = A.metrics(A.MapRelation(X, X, ((0, 0), (1, 1))))
    assert m["accuracy"] == m["precision"] == m["resolution"] == 0


def test_generalize_examples():
    X, Y = line(0, 1, 2), line(0, 3)
    rel = A.MapRelation(X, Y, ((0, 0), (1, 1), (2, 1)))
    assert A.generalize(rel, 0, 0).pairs == rel.pairs
    with pytest.raises(DensityViolated):
        A.generalize(A.MapRelation(X, Y, ((0, 0),)), 0.5, 0.5)


def test_single_points_are_degenerate():
    P = line(0)
    rep = A.check_propacc1(A.MapRelation(P, P, ((0, 0),)), 0.0, 0.0)
    assert rep.ok and rep.values["acc"] == rep.values["resBar"] == 0


def test_extremal_chain_attains_the_bound():
    eps, mu, a = 0.1, 0.2, 0.05
    X = line(0, eps, eps + 2 * mu + a, 2 * eps + 2 * mu + a)
    Y = line(-mu, 0, mu)
    rel = A.MapRelation(X, Y, ((1, 0), (2, 2)))
    rep = A.check_propacc1(rel, eps, mu)
    assert rep.values["acc"] == pytest.approx(a, abs=1e-12)
    assert rep.values["resBar"] == pytest.approx(rep.values["acc"] + 2 * (eps + mu), abs=1e-12)


@settings(max_examples=200)
@given(st.integers(0, 2**32 - 1))
def test_accuracy_inequalities(seed):
    rel, eps, mu = A.random_instance(np.random.default_rng(seed))
    m = A.metrics(rel)
    assert m["accuracy"] == pytest.approx(brute_acc(rel), abs=1e-12)
    bar = A.generalize(rel, eps, mu)
    assert set(rel.pairs) <= set(bar.pairs)
    assert bar.dom == set(range(len(rel.source))) and bar.im == set(range(len(rel.target)))
    rep = A.check_propacc1(rel, eps, mu)
    # the upper bounds and the accuracy estimate always hold
    failing = {v["item"] for v in rep.violations}
    assert not failing & {"a", "b", "c-upper", "d-upper", "e"}


def test_lower_bounds_fail_on_single_points():
    # one source point, one target point: every radius term is zero but 2 eps > 0
    P, Q = line(0), line(0)
    rep = A.check_propacc1(A.MapRelation(P, Q, ((0, 0),)), 0.1, 0.1)
    assert {v["item"] for v in rep.violations} == {"c-lower", "d-lower"}


def test_gh_examples():
    X = line(0, 1, 3)
    assert A.gh_bound(X, X) == 0
    assert A.gh_bound(line(0, 1), line(0, 1.4)) == pytest.approx(0.4, abs=1e-12)
    assert A.gh_bound(X, line(5)) == pytest.approx(X.diameter, abs=1e-12)
    with pytest.raises(SizeLimit):
        A.gh_bound(line(*range(4)), line(*range(4)))


def test_stochastic_gh_is_an_upper_bound_monotone_in_budget():
    rng = np.random.default_rng(0)
    X = A.FiniteMetricSpace.from_points(rng.uniform(size=(3, 2)), M.chart_dist)
    Y = A.FiniteMetricSpace.from_points(rng.uniform(size=(4, 2)), M.chart_dist)
    exact = A.gh_bound(X, Y)
    bounds = [A.gh_bound(X, Y, "stochastic", b, seed=3) for b in (1, 10, 100, 1000)]
    assert all(b2 <= b1 for b1, b2 in zip(bounds, bounds[1:]))
    assert bounds[-1] >= exact - 1e-12


def test_zoom_accuracy():
    exact = A.zoom_from_model(EUCLID2)
    pix = A.zoom_from_model(EUCLID2, h=1e-3)
    for eps in (0.5, 0.1, 2.0**-10):
        assert exact.accuracy(eps) <= 1e-12
        assert pix.accuracy(eps) <= 2e-3 * math.sqrt(2)
        for zs in (exact, pix):
            assert np.array_equal(zs.chart(eps, zs.center[None, :])[0], zs.center)


def test_scale_composition_exact_charts():
    zs = A.zoom_from_model(EUCLID2)
    rep = A.scale_composition(zs, 0.5, 0.25)
    assert rep.accuracy <= 1e-12
    assert np.allclose(rep.pairs[:, 1], rep.pairs[:, 0] / 0.25)
    one = A.scale_composition(zs, 0.5, 1.0)
    assert np.allclose(one.pairs[:, 0], one.pairs[:, 1])


@pytest.mark.parametrize("mu", [0.5, 0.25])
def test_cascading_bound_on_pixelated_charts(mu):
    zs = A.zoom_from_model(EUCLID2, h=1e-3)
    for k in range(1, 11):
        assert A.scale_composition(zs, 2.0**-k, mu).ok


def test_stability():
    zs = A.zoom_from_model(EUCLID2)
    sched = [2.0**-k for k in range(1, 8)]
    rep = A.scale_stability_check(zs, 0.5, sched)
    assert rep.ok and max(rep.hausdorff) <= 1e-12
    vp = A.viewpoint_stability_check(zs, np.array([0.3, 0.1]), sched)
    assert vp.ok
    pix = A.scale_stability_check(A.zoom_from_model(EUCLID2, h=1e-3), 0.5, sched)
    assert max(pix.hausdorff) <= pix.floor


def test_foveal():
    exact = A.zoom_from_model(EUCLID2)
    fm = A.foveal(exact, 0.5, 0.25)
    assert np.allclose(fm.image, exact.chart(0.25, fm.domain))
    centre = np.all(fm.domain == exact.center, axis=1)
    assert np.array_equal(fm.image[centre][0], exact.center)
    rep = A.foveal_properties_check(A.zoom_from_model(EUCLID2, h=1e-3), [0.5, 0.25],
                                    [2.0**-k for k in range(1, 5)])
    assert rep.ok

    class NoLimit(A.ZoomSequence):
        limit_inverse = None
    with pytest.raises(MissingLimit):
        A.foveal(NoLimit(EUCLID2, np.zeros(2)), 0.5, 0.5)
