import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bracketlab import brackets as B
from bracketlab import geometry as geo
from bracketlab.distributions import gaussian_product, uniform_cube
from bracketlab.errors import MonotonicityViolation, OutOfDomain, TailUnbounded
from bracketlab.seeding import generator

U1 = uniform_cube(1)
U2 = uniform_cube(2)
G2 = gaussian_product(2)


# -- rectangles -----------------------------------------------------------------


def test_rectangle_grid_and_count():
    fam = B.build_rectangle_family(U1, 0.5)
    assert fam.m == 13
    assert fam.count <= 14**2
    assert fam.count == fam.enumerated_count() == 105
    np.testing.assert_allclose(fam.grid[0, 1:13], np.arange(1, 13) / 13, atol=1e-12)
    # sup{x : F(x) <= 1} is +inf, and the bottom knot is taken as -inf
    assert fam.grid[0, 0] == -np.inf and fam.grid[0, 13] == np.inf


def test_rectangle_indicator_covered_on_grid():
    fam = B.build_rectangle_family(U1, 0.5)
    params = (np.array([0.1]), np.array([0.6]))
    b = B.locate_bracket(fam, params)
    X = np.linspace(-0.5, 1.5, 1000).reshape(-1, 1)
    f = fam.member(params)(X)
    assert np.all(b.lower(X) <= f) and np.all(f <= b.upper(X))


def test_rectangle_unbounded_corner():
    fam = B.build_rectangle_family(U2, 0.5)
    params = (np.array([-np.inf, 0.2]), np.array([0.7, np.inf]))
    k, j = fam.locate(params)
    assert k[0] == 0 and j[1] == fam.m
    b = fam.bracket((k, j))
    X = generator(0, "test-rect").uniform(-1, 2, (2000, 2))
    f = fam.member(params)(X)
    assert np.all(b.lower(X) <= f) and np.all(f <= b.upper(X))


def test_rectangle_rejects_reversed_corners():
    fam = B.build_rectangle_family(U1, 0.5)
    with pytest.raises(OutOfDomain):
        fam.locate((np.array([0.6]), np.array([0.1])))


# -- balls ----------------------------------------------------------------------


def test_ball_count_and_conventions():
    fam = B.build_ball_family(0.5, dim=2)
    assert fam.m == 2
    assert fam.count == fam.enumerated_count() == 12
    X = generator(0, "test-ball").random((500, 2))
    # j = 0: the lower set has negative radius, so l vanishes
    b = fam.bracket(((1, 1), 0))
    assert np.all(b.lower(X) == 0.0)
    b = fam.bracket(((1, 2), 2))
    assert b.lower.gap_lower_bound == pytest.approx(fam.step)
    assert geo.holder_bound(b.lower) == pytest.approx(1 + 3 * fam.m / math.sqrt(2))


def test_ball_center_on_cell_boundary_goes_up():
    fam = B.build_ball_family(0.2, dim=2)
    i, _ = fam.locate((np.array([0.2, 0.6]), 0.1))
    assert i == (2, 4)


def test_ball_radius_out_of_domain():
    fam = B.build_ball_family(0.5, dim=2)
    with pytest.raises(OutOfDomain):
        fam.locate((np.array([0.5, 0.5]), 1.5))


# -- ellipsoids -----------------------------------------------------------------


def test_ellipsoid_count():
    fam = B.build_ellipsoid_family(0.5, dim=1)
    assert fam.count == fam.enumerated_count() == 4
    assert B.build_ellipsoid_family(0.5, dim=2, D=2).count == 2**2 * 2**4


@pytest.mark.parametrize("axes", [[0.3, 0.2], [0.1, 0.45], [0.25, 0.25, 0.4]])
def test_ellipsoid_volume(axes):
    d = len(axes)
    E = geo.ellipsoid(np.full(d, 0.5), axes)
    X = generator(0, "test-volume").random((400_000, d))
    est = E.contains(X).mean()
    se = math.sqrt(est * (1 - est) / len(X))
    assert abs(est - B.unit_ball_volume(d) * np.prod(axes)) <= 4 * se


def test_ellipsoid_volume_bounds_sandwich():
    rng = generator(1, "test-volume")
    for _ in range(10):
        m = int(rng.integers(2, 6))
        j = rng.integers(1, 2 * m, size=2)
        up, low = B.ellipsoid_volume_bounds(j, m)
        lo, hi = np.zeros(2) + 0.5, np.zeros(2) + 0.5 + 1 / m
        pad = np.max(j) / m + 1
        X = rng.uniform(0.5 - pad, 0.5 + pad, (200_000, 2))
        area = (2 * pad) ** 2
        u = geo.clamp_union(lo, hi, j / m).contains(X).mean() * area
        i = geo.clamp_intersection(lo, hi, j / m).contains(X).mean() * area
        assert u <= up + 0.02 * area and i >= low - 0.02 * area


def test_ellipsoid_certified_gaps():
    fam = B.build_ellipsoid_family(0.34, dim=2, D=2)
    for index in fam.indices():
        b = fam.bracket(index)
        for T in (b.lower, b.upper):
            assert T.gap_lower_bound >= fam.gap_bound * (1 - 1e-12)


# -- tail bracket and extension -------------------------------------------------


def test_tail_bracket_gaussian():
    eps = 0.3
    b, info = B.extension_tail_bracket(G2, eps)
    X = G2.sample(generator(0, "test-tail"), 1_000_000)
    gap = b.upper(X) - b.lower(X)
    assert gap.mean() <= eps + 3 * gap.std() / 1000
    assert info.K_outer <= info.K_bound
    assert b.upper(np.zeros((1, 2)))[0] == 0.0
    assert b.upper(np.full((1, 2), 50.0))[0] == 1.0
    assert info.certified_A <= b.claimed_A


def test_tail_needs_parameters():
    with pytest.raises(TailUnbounded):
        B.extension_tail_bracket(dataclasses.replace(G2, tail=None), 0.3)


def test_extended_count_is_tail_plus_interior():
    fam = B.build_extended_ellipsoid_family(G2, 0.5)
    assert fam.count == 1 + fam.inner.count
    assert fam.count == B.family_count(B.ELLIPSOIDS_EXT, 0.5, dim=2, K=fam.K)
    assert next(iter(fam.indices())) == ("tail",)


def test_extended_compact_support_keeps_K_bounded():
    for eps in (0.5, 0.2, 0.05):
        fam = B.build_extended_ellipsoid_family(U2, eps)
        assert fam.K <= 1 + fam.D


def test_extended_cap_has_power_form():
    consts = [B.build_extended_ellipsoid_family(G2, eps).cap_constant for eps in (0.5, 0.3, 0.2, 0.1)]
    # cap * eps^{2 alpha s} stays bounded as eps shrinks: the tail cap only grows
    # like eps^{-alpha s}, so the interior constant 3 D + eps^{2 alpha s} takes over
    assert all(b <= a for a, b in zip(consts, consts[1:]))
    assert consts[-1] <= 3 * 1 + 0.1**2 + 1e-9


# -- centred balls --------------------------------------------------------------


def test_centered_ball_count_and_first_lower():
    fam = B.build_centered_ball_family(G2, 0.5)
    assert fam.m == fam.count == 7
    X = G2.sample(generator(0, "test-cb"), 1000)
    assert np.all(fam.bracket(1).lower(X) == 0.0)


def test_centered_ball_gap_bound():
    fam = B.build_centered_ball_family(G2, 0.5)
    X = G2.sample(generator(1, "test-cb"), 200_000)
    for i in fam.indices():
        b = fam.bracket(i)
        gap = b.upper(X) - b.lower(X)
        assert gap.mean() <= 3 / fam.m + 3 * gap.std() / math.sqrt(len(X))
    assert 3 / fam.m <= 0.5


# -- monotone -------------------------------------------------------------------


def _monotone(eps=0.5):
    return B.build_monotone_family(B.shift_kernel_class(), U1, 1.0, eps)


def test_monotone_count():
    assert _monotone().m == _monotone().count == 11


def test_monotone_brackets_cover_parameter_cells():
    fam = _monotone(0.2)
    X = np.linspace(-1, 2, 1000)
    for j in fam.indices():
        b = fam.bracket(j)
        lo, up = b.lower(X), b.upper(X)
        for t in np.linspace(fam.t[j - 1], fam.t[j], 7):
            f = fam.cls(t, X)
            assert np.all(lo <= f) and np.all(f <= up)


def test_monotone_parameter_on_knot():
    fam = _monotone()
    for j in range(1, fam.m + 1):
        assert fam.locate(j / fam.m) == j
    assert fam.locate(0.0) == 1


def test_monotone_nesting():
    fam = _monotone(0.2)
    X = np.linspace(-1, 2, 500)
    prev = None
    for j in fam.indices():
        b = fam.bracket(j)
        cur = (b.lower(X), b.upper(X))
        if prev is not None:
            assert np.all(prev[0] <= cur[0]) and np.all(prev[1] <= cur[1])
        prev = cur


def test_monotone_rejects_bad_class():
    decreasing = B.MonotoneClass(lambda t, x: np.clip(1 - t - x, 0, 1))
    with pytest.raises(MonotonicityViolation):
        B.build_monotone_family(decreasing, U1, 1.0, 0.5)
    with pytest.raises(OutOfDomain):
        _monotone().locate(1.5)


# -- shared properties ------------------------------------------------------------


def test_trivial_family():
    for kind in B.FAMILIES:
        if kind == B.TRIVIAL:
            continue
        fam = B.family_builder(kind)(1.0)
        assert fam.count == 1
        report = B.verify_family(fam, n_indices=10, n_points=100, n_mc=1000, n_gap=1)
        assert report.passed


@pytest.mark.parametrize("kind", [k for k in B.FAMILIES if k != B.TRIVIAL])
def test_certified_cap_below_claimed(kind):
    fam = B.family_builder(kind)(0.3)
    rng = generator(0, "test-caps")
    for _ in range(30):
        b = fam.bracket(fam.random_index(rng))
        assert b.meta["certified_A"] <= b.claimed_A * (1 + 1e-12)


@pytest.mark.parametrize("kind", [k for k in B.FAMILIES if k != B.TRIVIAL])
def test_brackets_ordered_and_in_unit_interval(kind):
    fam = B.family_builder(kind)(0.3)
    rng = generator(1, "test-order")
    for _ in range(30):
        b = fam.bracket(fam.random_index(rng))
        X = fam.sample_points(rng, 500)
        lo, up = b.lower(X), b.upper(X)
        assert np.all(0 <= lo) and np.all(lo <= up) and np.all(up <= 1)


@pytest.mark.parametrize("kind", [k for k in B.FAMILIES if k != B.TRIVIAL])
def test_verify_family_smoke(kind):
    fam = B.family_builder(kind)(0.5)
    report = B.verify_family(fam, n_indices=200, n_points=200, n_mc=20_000, n_gap=10, n_holder=3, holder_pairs=500)
    assert report.passed, report.to_dict()


def test_verify_family_deterministic():
    fam = B.build_rectangle_family(U1, 0.5)
    kw = dict(n_indices=50, n_points=50, n_mc=5000, n_gap=5, n_holder=2, holder_pairs=200, seed=3)
    assert B.verify_family(fam, **kw).to_dict() == B.verify_family(fam, **kw).to_dict()


eps_values = st.floats(0.02, 0.99)


@settings(max_examples=60, deadline=None)
@given(eps_values, st.integers(1, 3), st.integers(1, 3))
def test_closed_form_counts(eps, d, D):
    assert B.family_count(B.BALLS, eps, dim=d) == B.build_ball_family(eps, dim=d).count
    m = math.floor(eps**-1)
    assert B.family_count(B.ELLIPSOIDS, eps, dim=d, D=D) == D**d * m ** (2 * d)
    assert B.family_count(B.CENTERED_BALLS, eps) == math.floor(3 / eps + 1)
    assert B.family_count(B.MONOTONE, eps, lam=2.0) == math.floor(6 / eps + 1)


@settings(max_examples=20, deadline=None)
@given(st.floats(0.2, 0.99))
def test_small_counts_match_enumeration(eps):
    for fam in (B.build_rectangle_family(U2, eps), B.build_ball_family(eps, dim=2), B.build_ellipsoid_family(eps, dim=2)):
        assert fam.count == sum(1 for _ in fam.indices())


@settings(max_examples=40, deadline=None)
@given(st.floats(0.05, 0.9), st.integers(0, 2**32))
def test_rectangle_coverage_property(eps, seed):
    fam = B.build_rectangle_family(U2, eps)
    cov, order = B.check_coverage(fam, 5, 300, generator(seed, "test-cover"))
    assert cov == 0 and order == 0


@settings(max_examples=30, deadline=None)
@given(st.floats(0.1, 0.9), st.integers(0, 2**32))
def test_ball_coverage_property(eps, seed):
    fam = B.build_ball_family(eps, dim=2)
    cov, order = B.check_coverage(fam, 5, 300, generator(seed, "test-cover"))
    assert cov == 0 and order == 0
