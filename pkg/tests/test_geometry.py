import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bracketlab import geometry as geo
from bracketlab.errors import NonFiniteInput, ZeroGap
from bracketlab.seeding import generator

coords = st.floats(-1.0, 2.0, allow_nan=False)


def test_distance_examples():
    assert geo.dist_to_set([0.5, 0.5], geo.rectangle([0, 0], [1, 1])) == 0.0
    assert geo.dist_to_set([2.0, 0.0], geo.ball([0, 0], 1.0)) == pytest.approx(1.0)
    assert geo.dist_to_set([0.3], geo.Empty(1)) == math.inf
    assert geo.dist_to_set([3.0, 4.0], geo.rectangle([-np.inf, -np.inf], [0, 0])) == pytest.approx(5.0)


def test_non_finite_rejected():
    with pytest.raises(NonFiniteInput):
        geo.dist_to_set([np.nan, 0.0], geo.ball([0, 0], 1.0))


def test_clamp_union_distance_against_grid():
    region = geo.clamp_union([0.2, 0.3], [0.4, 0.5], [0.15, 0.05])
    n = 2000
    g = np.linspace(-0.5, 1.5, n)
    Gx, Gy = np.meshgrid(g, g, indexing="ij")
    grid = np.stack([Gx.ravel(), Gy.ravel()], axis=1)
    inside = grid[region.contains(grid)]
    rng = generator(0, "test-grid")
    X = rng.uniform(-0.4, 1.4, (20, 2))
    X = X[~region.contains(X)]
    for x in X:
        brute = np.sqrt(np.sum((inside - x) ** 2, axis=1).min())
        assert region.distance(x) == pytest.approx(brute, abs=1e-3)


def test_clamp_intersection_distance_against_grid():
    region = geo.clamp_intersection([0.2, 0.3], [0.4, 0.5], [0.25, 0.3])
    g = np.linspace(-0.2, 1.0, 1500)
    Gx, Gy = np.meshgrid(g, g, indexing="ij")
    grid = np.stack([Gx.ravel(), Gy.ravel()], axis=1)
    inside = grid[region.contains(grid)]
    rng = generator(1, "test-grid")
    X = rng.uniform(-0.2, 1.0, (20, 2))
    X = X[~region.contains(X)]
    for x in X:
        brute = np.sqrt(np.sum((inside - x) ** 2, axis=1).min())
        assert region.distance(x) == pytest.approx(brute, abs=1e-3)


def test_set_gap_examples():
    assert geo.set_gap(geo.ball([0, 0], 0.2), geo.complement(geo.ball([0, 0], 0.5))) == pytest.approx(0.3)
    assert geo.set_gap(geo.Empty(2), geo.ball([0, 0], 1.0)) == math.inf
    m, D = 5, 2
    j = np.array([3, 7])
    gap = geo.set_gap(geo.ellipsoid([0.5, 0.5], j / m), geo.complement(geo.ellipsoid([0.5, 0.5], (j + 1) / m)))
    assert gap >= 1 / (D * m * m)


def test_ellipsoid_gap_closed_form_is_tight_in_one_axis():
    # shrinking a single axis: the gap is attained along that axis
    assert geo.ellipsoid_gap([0.3, 1.0], [0.4, 1.0]) == pytest.approx(0.0)
    assert geo.ellipsoid_gap([0.3, 0.3], [0.4, 0.4]) == pytest.approx(0.1)


def test_transition_conventions():
    A = geo.ball([0.5, 0.5], 0.1)
    B = geo.complement(geo.ball([0.5, 0.5], 0.3))
    T = geo.transition(A, B)
    assert T([0.5, 0.55]) == 1.0
    assert T([0.95, 0.5]) == 0.0
    assert T([0.7, 0.5]) == pytest.approx(0.5)
    assert geo.transition(geo.Empty(2), B)([0.5, 0.5]) == 0.0
    assert geo.transition(A, geo.Empty(2))([3.0, 3.0]) == 1.0


def test_holder_bound_examples():
    A = geo.ball([0.0], 1.0)
    assert geo.holder_bound(geo.transition(A, geo.complement(geo.ball([0.0], 4.0)))) == pytest.approx(2.0)
    assert geo.holder_bound(geo.transition(A, geo.complement(geo.ball([0.0], 1.25)))) == pytest.approx(13.0)
    assert geo.holder_bound(geo.transition(A, geo.Empty(1))) == 1.0
    touching = geo.transition(A, geo.complement(geo.ball([0.0], 1.0)))
    with pytest.raises(ZeroGap):
        geo.holder_bound(touching)


def _unit(rng, n, d=1):
    return rng.random((n, d))


def test_empirical_holder_norm_examples():
    assert geo.empirical_holder_norm(lambda X: np.full(len(X), 0.7), _unit, 1000, 1.0) == pytest.approx(0.7)
    v = geo.empirical_holder_norm(lambda X: X[:, 0], _unit, 10_000, 1.0)
    assert 1.0 < v <= 2.0 + 1e-9
    assert v > 1.99


def test_empirical_holder_norm_below_lemma_bound():
    A = geo.rectangle([0.3, 0.3], [0.5, 0.6])
    C = geo.rectangle([0.2, 0.25], [0.55, 0.8])
    T = geo.transition(A, geo.complement(C), 0.5)
    assert geo.empirical_holder_norm(T, lambda rng, n: rng.uniform(-0.2, 1.2, (n, 2)), 100_000, 0.5) <= geo.holder_bound(T)


def test_region_json_round_trip():
    regions = [
        geo.rectangle([0, -np.inf], [1, 2]),
        geo.ball([0.1, 0.2], 0.3),
        geo.ellipsoid([0.5, 0.5], [0.2, 0.1]),
        geo.clamp_union([0, 0], [0.1, 0.1], [0.2, 0.3]),
        geo.clamp_intersection([0, 0], [0.1, 0.1], [0.2, 0.3]),
        geo.complement(geo.ball([0, 0], 1.0)),
        geo.sublevel(0.4, 2, ord=np.inf),
        geo.Empty(2),
    ]
    X = generator(0, "test-json").uniform(-1, 2, (200, 2))
    for R in regions:
        back = geo.region_from_dict(json.loads(json.dumps(R.to_dict())))
        np.testing.assert_array_equal(R.contains(X), back.contains(X))
        np.testing.assert_allclose(R.distance(X), back.distance(X))


def test_negative_parameters_give_empty():
    assert geo.ball([0, 0], -0.1).is_empty
    assert geo.ellipsoid([0, 0], [0.1, -0.1]).is_empty
    assert geo.rectangle([0.5], [0.4]).is_empty


# -- properties ---------------------------------------------------------------


@st.composite
def regions(draw, dim=None):
    d = dim or draw(st.integers(1, 3))
    kind = draw(st.sampled_from(["rectangle", "ball", "ellipsoid", "union", "intersection"]))
    c = np.array(draw(st.lists(st.floats(0.0, 1.0), min_size=d, max_size=d)))
    w = np.array(draw(st.lists(st.floats(0.0, 0.3), min_size=d, max_size=d)))
    r = np.array(draw(st.lists(st.floats(0.05, 0.6), min_size=d, max_size=d)))
    if kind == "rectangle":
        R = geo.rectangle(c - w, c + w)
    elif kind == "ball":
        R = geo.ball(c, float(r[0]))
    elif kind == "ellipsoid":
        R = geo.ellipsoid(c, r)
    elif kind == "union":
        R = geo.clamp_union(c - w, c + w, r)
    else:
        R = geo.clamp_intersection(c - w / 4, c + w / 4, r + w)
    if draw(st.booleans()):
        R = geo.complement(R)
    return R


@settings(max_examples=150, deadline=None)
@given(regions(), st.data())
def test_distance_is_one_lipschitz(R, data):
    d = R.dim
    x = np.array(data.draw(st.lists(coords, min_size=d, max_size=d)))
    y = np.array(data.draw(st.lists(coords, min_size=d, max_size=d)))
    dx, dy = R.distance(x), R.distance(y)
    if R.is_empty:
        return
    assert abs(dx - dy) <= np.linalg.norm(x - y) * (1 + 1e-9) + 1e-12


@settings(max_examples=150, deadline=None)
@given(regions(), st.data())
def test_distance_zero_iff_in_closure(R, data):
    d = R.dim
    x = np.array(data.draw(st.lists(coords, min_size=d, max_size=d)))
    if R.contains(x):
        assert R.distance(x) == 0.0
    else:
        assert R.distance(x) >= 0.0


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 3), st.data())
def test_torus_distance_at_most_euclidean(d, data):
    x = np.array(data.draw(st.lists(st.floats(0, 1), min_size=d, max_size=d)))
    y = np.array(data.draw(st.lists(st.floats(0, 1), min_size=d, max_size=d)))
    assert geo.torus_distance(x, y) <= geo.euclidean_distance(x, y) + 1e-15
    c = np.array(data.draw(st.lists(st.floats(0, 1), min_size=d, max_size=d)))
    flat = geo.ball(c, 0.2)
    wrapped = geo.ball(c, 0.2, metric=geo.TORUS)
    assert wrapped.distance(x) <= flat.distance(x) + 1e-15


@settings(max_examples=150, deadline=None)
@given(st.integers(1, 3), st.data())
def test_distance_monotone_under_inclusion(d, data):
    draw = data.draw
    c = np.array(draw(st.lists(st.floats(0, 1), min_size=d, max_size=d)))
    w = np.array(draw(st.lists(st.floats(0, 0.2), min_size=d, max_size=d)))
    r = np.array(draw(st.lists(st.floats(0.05, 0.4), min_size=d, max_size=d)))
    grow = draw(st.floats(0.0, 0.3))
    pairs = [
        (geo.rectangle(c - w, c + w), geo.rectangle(c - w - grow, c + w + grow)),
        (geo.ball(c, float(r[0])), geo.ball(c, float(r[0]) + grow)),
        (geo.ellipsoid(c, r), geo.ellipsoid(c, r + grow)),
        (geo.clamp_union(c - w, c + w, r), geo.clamp_union(c - w, c + w, r + grow)),
    ]
    x = np.array(draw(st.lists(coords, min_size=d, max_size=d)))
    for small, big in pairs:
        assert big.distance(x) <= small.distance(x) + 1e-12


@settings(max_examples=150, deadline=None)
@given(st.integers(1, 3), st.sampled_from([0.5, 1.0]), st.data())
def test_transition_range(d, alpha, data):
    draw = data.draw
    c = np.array(draw(st.lists(st.floats(0, 1), min_size=d, max_size=d)))
    r = np.array(draw(st.lists(st.floats(0.05, 0.4), min_size=d, max_size=d)))
    grow = draw(st.floats(0.01, 0.3))
    T = geo.transition(geo.ellipsoid(c, r), geo.complement(geo.ellipsoid(c, r + grow)), alpha)
    X = np.array(draw(st.lists(st.lists(coords, min_size=d, max_size=d), min_size=1, max_size=20)))
    v = np.atleast_1d(T(X))
    assert np.all((0.0 <= v) & (v <= 1.0))
