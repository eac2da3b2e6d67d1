import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from chora import models as M

EUCLID2 = M.get_model("euclid2")
HEIS = M.get_model("heis1")
SPHERE = M.get_model("sphere")


def heis_mul(p, q):
    a, b, c = p
    a2, b2, c2 = q
    return np.array([a + a2, b + b2, c + c2 + 0.5 * (a * b2 - b * a2)])


def heis_circ(eps, x, u):
    xi = np.array([-x[0], -x[1], -x[2]])
    w = heis_mul(xi, u)
    return heis_mul(x, np.array([eps * w[0], eps * w[1], eps * eps * w[2]]))


def slerp(eps, x, u):
    theta = np.arccos(np.clip(x @ u, -1, 1))
    if theta < 1e-15:
        return x.copy()
    return (np.sin((1 - eps) * theta) * x + np.sin(eps * theta) * u) / np.sin(theta)


coord = st.floats(-2, 2, allow_nan=False)
heis_pt = st.tuples(coord, coord, coord).map(np.array)
scales = st.floats(0.05, 1.0)


def test_documented_values():
    assert np.allclose(EUCLID2.circ(0.5, np.zeros(2), np.array([2.0, 4.0])), [1, 2])
    assert np.allclose(HEIS.circ(0.5, np.zeros(3), np.array([1.0, 0, 0])), [0.5, 0, 0])
    x, u, v = np.zeros(2), np.array([1.0, 0]), np.array([0.0, 1])
    assert np.allclose(M.approx_difference(EUCLID2, 0.5, x, u, v), [-0.5, 1])
    assert np.allclose(M.approx_sum(EUCLID2, 0.5, x, u, v), [0.5, 1])
    assert np.allclose(M.approx_inverse(EUCLID2, 0.5, x, u), [-0.5, 0])


@pytest.mark.parametrize("model", [EUCLID2, M.get_model("euclid3"), HEIS, SPHERE], ids=lambda m: m.name)
def test_unit_scale_and_samples(model):
    rng = np.random.default_rng(1)
    x, y = model.sample(rng, 20), model.sample(rng, 20)
    assert np.allclose(model.circ(1.0, x, y), y, atol=1e-12)
    assert np.allclose(model.circ(0.3, x, x), x, atol=1e-12)


@given(heis_pt, heis_pt, scales)
def test_heis_matches_group_oracle(x, u, eps):
    assert np.allclose(HEIS.circ(eps, x, u), heis_circ(eps, x, u), atol=1e-12)


@settings(max_examples=50)
@given(st.integers(0, 10**6), scales)
def test_sphere_is_geodesic_interpolation(seed, eps):
    rng = np.random.default_rng(seed)
    x, u = SPHERE.sample(rng, 2)
    if np.arccos(np.clip(x @ u, -1, 1)) > 3.0:
        return
    assert np.allclose(SPHERE.circ(eps, x, u), slerp(eps, x, u), atol=1e-10)


@given(st.floats(0.05, 1.0), st.floats(0.05, 1.0))
def test_relative_dilation_closed_form(eps, mu):
    rng = np.random.default_rng(0)
    x, u, v = EUCLID2.sample(rng, 3)
    assert np.allclose(M.relative_dilation(EUCLID2, eps, mu, x, u, v), u + mu * (v - u), atol=1e-12)


def test_map_distance_homogeneity():
    rng = np.random.default_rng(3)
    x, u, v = (EUCLID2.sample(rng, 30) for _ in range(3))
    for eps in (0.5, 0.1, 1e-3):
        assert np.allclose(M.map_distance(EUCLID2, eps, x, u, v), np.linalg.norm(u - v, axis=1))
    e, u, v = np.zeros(3), HEIS.sample(rng, 30), HEIS.sample(rng, 30)
    for eps in (0.5, 0.1):
        assert np.allclose(M.map_distance(HEIS, eps, e, u, v), HEIS.dist(u, v), rtol=1e-9)


def test_sphere_log_undefined_at_antipode():
    with pytest.raises(M.UndefinedLog):
        SPHERE.circ(0.5, np.array([1.0, 0, 0]), np.array([-1.0, 0, 0]))


def test_point_text():
    assert M.format_point(np.array([-0.5, 1.0])) == "(-0.5,1)"
    assert M.format_point(np.array([-0.0, 2.25])) == "(0,2.25)"
    assert np.array_equal(M.parse_point("1,-2.5"), [1, -2.5])
    with pytest.raises(ValueError):
        M.parse_point("1,x")
    with pytest.raises(ValueError):
        M.parse_point("1,2,3", EUCLID2)
    with pytest.raises(M.UnknownModel):
        M.get_model("hyperbolic")
