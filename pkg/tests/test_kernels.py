import itertools

import numpy as np
import pytest

from bracketlab import _kernels as K


def _orthant_sphere(k, n=400):
    """Dense grid on the unit sphere intersected with the closed positive orthant of R^k."""
    if k == 1:
        return np.ones((1, 1))
    t = np.linspace(0, np.pi / 2, n)
    if k == 2:
        return np.stack([np.cos(t), np.sin(t)], axis=1)
    a, b = np.meshgrid(t, t, indexing="ij")
    return np.stack([np.cos(a), np.sin(a) * np.cos(b), np.sin(a) * np.sin(b)], axis=-1).reshape(-1, 3)


def exterior_oracle(w, r):
    # the nearest point lies on the surface of the active coordinates, with every
    # other coordinate pushed to min(w_k, 0)
    best = np.inf
    d = len(w)
    for size in range(1, d + 1):
        for S in itertools.combinations(range(d), size):
            S = list(S)
            rest = [k for k in range(d) if k not in S]
            Z = _orthant_sphere(size) * r[S]
            cost = np.sum((Z - w[S]) ** 2, axis=1).min() + sum(max(w[k], 0.0) ** 2 for k in rest)
            best = min(best, cost)
    return np.sqrt(best)


def union_oracle(delta, r):
    Z = _orthant_sphere(len(r)) * r
    return np.sqrt(np.sum((Z - delta) ** 2, axis=1).min())


def intersection_oracle(a, h, r):
    Y = _orthant_sphere(len(r)) * r
    Y = Y[np.all(Y >= h, axis=1)]
    return np.sqrt(np.sum((Y - h - a) ** 2, axis=1).min())


def _cases(seed, n=25):
    rng = np.random.default_rng(seed)
    for i in range(n):
        d = 1 + i % 3
        yield rng, d, rng.uniform(0.1, 1.5, d)


@pytest.mark.parametrize("seed", range(3))
def test_exterior_matches_oracle(seed):
    for rng, d, r in _cases(seed):
        w = rng.uniform(-1.5, 1.5, d) * r
        if np.sum(np.maximum(w, 0) ** 2 / r**2) >= 1:
            assert K.exterior_distance(w, r) == 0.0
            continue
        got = K.exterior_distance(w, r)
        want = exterior_oracle(w, r)
        # the kernel is exact; the grid oracle can only overshoot
        assert got <= want + 1e-9
        assert want - got <= 2e-3 * max(r)


@pytest.mark.parametrize("seed", range(3))
def test_union_matches_oracle(seed):
    for rng, d, r in _cases(seed):
        delta = rng.uniform(0, 2, d) * r
        got = K.union_outside_distance(delta, r)
        if np.sum(delta**2 / r**2) <= 1:
            assert got == 0.0
            continue
        want = union_oracle(delta, r)
        assert got <= want + 1e-9
        assert want - got <= 2e-3 * max(r)


@pytest.mark.parametrize("seed", range(3))
def test_intersection_matches_oracle(seed):
    for rng, d, r in _cases(seed):
        h = rng.uniform(0, 0.5, d) * r / np.sqrt(d)
        a = rng.uniform(0, 1.5, d) * r
        got = K.intersection_outside_distance(a, h, r)
        if np.sum((a + h) ** 2 / r**2) <= 1:
            assert got == 0.0
            continue
        want = intersection_oracle(a, h, r)
        assert got <= want + 1e-9
        assert want - got <= 2e-3 * max(r)


def test_exterior_root_next_to_pole():
    # the multiplier sits within rounding of a pole; a naive parameterisation returns 0.28
    w = np.array([5.5e-17, 0.0, 0.0])
    r = np.array([3.0, 3.0, 1.0])
    assert K.exterior_distance(w, r) == pytest.approx(1.0, abs=1e-12)


def test_exterior_zero_axis():
    # with a zero semi-axis any positive coordinate on that axis is outside
    assert K.exterior_distance(np.array([-0.3, 0.1]), np.array([0.0, 1.0])) == pytest.approx(0.3)
    assert K.exterior_distance(np.array([0.0, 0.1]), np.array([0.0, 1.0])) == 0.0


def test_exterior_at_center():
    r = np.array([0.5, 0.2, 0.9])
    assert K.exterior_distance(np.zeros(3), r) == pytest.approx(0.2)


def test_union_zero_axis():
    # excess on an axis of zero width cannot be absorbed
    got = K.union_outside_distance(np.array([0.3, 2.0]), np.array([0.0, 1.0]))
    assert got == pytest.approx(np.hypot(0.3, 1.0))


def test_batches_agree_with_scalar():
    rng = np.random.default_rng(7)
    r = np.array([0.4, 0.7])
    W = rng.uniform(-1, 1, (50, 2))
    np.testing.assert_array_equal(K.batch_exterior(W, r), [K.exterior_distance(w, r) for w in W])
    A = np.abs(W)
    np.testing.assert_array_equal(K.batch_union_outside(A, r), [K.union_outside_distance(a, r) for a in A])
    h = np.array([0.1, 0.1])
    np.testing.assert_array_equal(K.batch_intersection_outside(A, h, r),
                                  [K.intersection_outside_distance(a, h, r) for a in A])


@pytest.mark.parametrize("t", [1e-320, 1e-283, 1e-200, 1e-160, 1e-100, 1e-40, 1e-20, 1e-12])
def test_exterior_tiny_positive_offset(t):
    # a tiny positive coordinate puts a stiff pole next to the root; the answer
    # must stay within t of the zero-offset case (1-Lipschitz)
    r = np.array([0.5, 0.5, 0.625])
    base = K.exterior_distance(np.array([0.0, 0.0, 0.5]), r)
    assert base == pytest.approx(0.125, abs=1e-15)
    assert abs(K.exterior_distance(np.array([0.0, t, 0.5]), r) - base) <= t + 1e-15


def test_exterior_tiny_offsets_random():
    rng = np.random.default_rng(17)
    for _ in range(300):
        d = int(rng.integers(2, 4))
        r = rng.uniform(0.1, 1.0, d)
        w = rng.uniform(-1, 1, d) * r * 0.9
        k = int(rng.integers(d))
        w[k] = 0.0
        base = K.exterior_distance(w, r)
        w[k] = 10.0 ** rng.uniform(-300, -8)
        assert abs(K.exterior_distance(w, r) - base) <= w[k] + 1e-13
