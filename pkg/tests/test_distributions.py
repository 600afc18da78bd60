import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special, stats

from bracketlab.distributions import from_spec, gaussian_product, pseudo_inverse, uniform_cube
from bracketlab.errors import ConfigError, QuantileFailure
from bracketlab.seeding import generator


def test_uniform_quantiles():
    t = np.arange(14) / 13
    np.testing.assert_allclose(pseudo_inverse(lambda x: np.clip(x, 0, 1), t[:-1]), t[:-1], atol=1e-12)
    assert pseudo_inverse(lambda x: np.clip(x, 0, 1), 1.0) == math.inf


def test_sup_convention_at_atoms():
    # F jumps from 0.3 to 0.7 at x = 2; sup{x: F(x) <= t} sits at the atom
    def F(x):
        return np.where(x < 2, 0.3 * np.clip(x / 2, 0, 1), np.where(x < 4, 0.7, 1.0))

    assert pseudo_inverse(F, 0.5) == pytest.approx(2.0, abs=1e-11)
    # on a flat stretch the sup picks the right end
    assert pseudo_inverse(F, 0.7) == pytest.approx(4.0, abs=1e-11)


def test_left_infinite_quantile():
    # F never drops below 0.2, so no finite x has F(x) <= 0.1
    def F(x):
        return 0.2 + 0.8 * special.ndtr(x)

    assert pseudo_inverse(F, 0.1) == -math.inf


def test_quantile_failure():
    with pytest.raises(QuantileFailure):
        pseudo_inverse(lambda x: np.full(np.shape(x), 0.5), 0.6)


@settings(max_examples=60, deadline=None)
@given(st.floats(1e-6, 1 - 1e-6))
def test_gaussian_quantile_matches_scipy(t):
    assert pseudo_inverse(special.ndtr, t) == pytest.approx(stats.norm.ppf(t), abs=1e-9)


@pytest.mark.parametrize("handle", [uniform_cube(2), gaussian_product(3)])
def test_sampler_matches_cdfs(handle):
    ok, pvalues = handle.self_test()
    assert ok, pvalues


def test_declared_constants_hold():
    rng = generator(0, "test-constants")
    for handle in (uniform_cube(2), gaussian_product(2)):
        X = handle.sample(rng, 200_000)
        norm = np.linalg.norm(X, axis=1)
        b, beta = handle.tail
        for t in (0.5, 1.0, 2.0, 3.0):
            assert np.mean(norm > t) <= b * t ** (-1 / beta) + 0.01
        c, kappa = handle.modulus
        x = np.geomspace(1e-12, 0.999, 200)
        # the CDF modulus is at most lipschitz * x, which must sit below the declared log modulus
        assert np.all(handle.cdf_lipschitz * x <= c * np.abs(np.log(x)) ** (-kappa) * (1 + 1e-12))


def test_box_quantile_gaussian():
    mu = gaussian_product(2)
    K = mu.box_quantile(0.9)
    assert special.erf(K / math.sqrt(2)) ** 2 == pytest.approx(0.9, abs=1e-9)


def test_from_spec():
    assert from_spec({"type": "gaussian", "dim": 2}).dim == 2
    with pytest.raises(ConfigError) as err:
        from_spec({"type": "cauchy"})
    assert err.value.key == "mu.type"
    with pytest.raises(ConfigError):
        from_spec({"type": "uniform", "dim": 0})
