"""Probability measures on R^d as seen by the bracket constructions.

The constructions only need marginal distribution functions, their
pseudo-inverses, a sampler and a few declared regularity constants, so a
:class:`DistributionHandle` bundles exactly that.
"""
import itertools
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import special, stats

from .errors import ConfigError, QuantileFailure

_MAX_DOUBLINGS = 64


def pseudo_inverse(F, t, tol=1e-12, start=1.0):
    """``sup{x : F(x) <= t}`` for a nondecreasing vectorised ``F``.

    Runs a bisection on every entry of ``t`` at once.  The answer is
    ``+inf`` when ``t >= 1`` and ``-inf`` when no finite ``x`` has
    ``F(x) <= t``.  Raises :class:`QuantileFailure` when ``F`` never
    exceeds some ``t < 1`` on the doubled search range.
    """
    t = np.asarray(t, dtype=float)
    flat = np.atleast_1d(t).ravel()
    out = np.full(flat.shape, np.inf)
    todo = flat < 1.0
    if todo.any():
        tt = flat[todo]
        lo = np.full(tt.shape, -start)
        hi = np.full(tt.shape, start)
        low_ok = F(lo) <= tt
        for _ in range(_MAX_DOUBLINGS):
            if low_ok.all():
                break
            lo = np.where(low_ok, lo, 2.0 * lo)
            low_ok = F(lo) <= tt
        high_ok = F(hi) > tt
        for _ in range(_MAX_DOUBLINGS):
            if high_ok.all():
                break
            hi = np.where(high_ok, hi, 2.0 * hi)
            high_ok = F(hi) > tt
        if not high_ok.all():
            raise QuantileFailure(f"cannot bracket the quantile at level {tt[~high_ok][0]!r}")
        # invariant: F(lo) <= t < F(hi)
        for _ in range(200):
            active = (hi - lo > tol) & low_ok
            if not active.any():
                break
            mid = 0.5 * (lo + hi)
            stuck = (mid <= lo) | (mid >= hi)
            active &= ~stuck
            below = F(mid) <= tt
            lo = np.where(active & below, mid, lo)
            hi = np.where(active & ~below, mid, hi)
        out[todo] = np.where(low_ok, lo, -np.inf)
    return out.reshape(np.shape(t)) if np.ndim(t) else float(out[0])


@dataclass(frozen=True)
class DistributionHandle:
    """Marginal CDFs, sampler and declared constants of a measure on R^d.

    ``modulus = (c, kappa)`` declares ``omega_F(x) <= c |log x|^{-kappa}``
    for ``0 < x < 1``; ``tail = (b, beta)`` declares
    ``mu(|x| > t) <= b t^{-1/beta}``; ``cdf_lipschitz`` declares
    ``omega_F(x) <= cdf_lipschitz * x``.
    """

    dim: int
    marginal_cdfs: tuple
    sampler: Callable
    density_bound: float | None = None
    tail: tuple | None = None
    modulus: tuple | None = None
    cdf_lipschitz: float | None = None
    independent: bool = True
    joint_cdf: Callable | None = None
    radial_cdfs: dict = field(default_factory=dict)
    spec: dict = field(default_factory=dict)

    def cdf(self, i, x):
        return self.marginal_cdfs[i](np.asarray(x, dtype=float))

    def quantile(self, i, t):
        return pseudo_inverse(self.marginal_cdfs[i], t)

    def sample(self, rng, n):
        return np.asarray(self.sampler(rng, n), dtype=float).reshape(n, self.dim)

    def box_cdf(self, t):
        """``G(t) = mu(|x|_max <= t)``."""
        t = np.asarray(t, dtype=float)
        if self.independent:
            out = np.ones_like(t)
            for F in self.marginal_cdfs:
                out = out * np.clip(F(t) - F(-t), 0.0, 1.0)
            return np.where(t < 0, 0.0, out)
        if self.joint_cdf is None:
            raise ValueError("box probabilities need independence or a joint CDF")
        total = np.zeros_like(t)
        for signs in itertools.product((-1.0, 1.0), repeat=self.dim):
            corner = np.multiply.outer(np.atleast_1d(t), np.array(signs))
            total = total + math.prod(signs) * self.joint_cdf(corner).reshape(t.shape)
        return np.where(t < 0, 0.0, total)

    def box_quantile(self, level):
        """``K`` with ``mu([-K, K]^d)`` reaching ``level``, by the sup convention."""
        return pseudo_inverse(self.box_cdf, level)

    def radial_cdf(self, ord=2):
        try:
            return self.radial_cdfs[ord]
        except KeyError:
            raise ValueError(f"no radial distribution for norm order {ord}") from None

    def self_test(self, n=100_000, level=1e-3, seed=0):
        """Kolmogorov-Smirnov check of the sampler against each marginal CDF."""
        from .seeding import generator

        X = self.sample(generator(seed, "ks-self-test"), n)
        pvalues = [stats.kstest(X[:, i], self.marginal_cdfs[i]).pvalue for i in range(self.dim)]
        # Bonferroni across marginals
        return min(pvalues) * self.dim >= level, pvalues


def _uniform_cdf(x):
    return np.clip(x, 0.0, 1.0)


def uniform_cube(dim):
    """Lebesgue measure on ``[0, 1]^d``."""
    kappa = 2.0
    radial = {np.inf: lambda t: np.clip(np.asarray(t, dtype=float), 0.0, 1.0) ** dim}
    return DistributionHandle(
        dim=dim,
        marginal_cdfs=(_uniform_cdf,) * dim,
        sampler=lambda rng, n: rng.random((n, dim)),
        density_bound=1.0,
        # bounded support: any beta > 0 works with b = d^(1/(2 beta)); take beta = 1
        tail=(math.sqrt(dim), 1.0),
        # x <= (kappa/e)^kappa |log x|^{-kappa} on (0, 1)
        modulus=(math.sqrt(dim) * (kappa / math.e) ** kappa, kappa),
        cdf_lipschitz=math.sqrt(dim),
        radial_cdfs=radial,
        spec={"type": "uniform", "dim": dim},
    )


def gaussian_product(dim):
    """Standard Gaussian on R^d."""
    chi = stats.chi(dim)
    radial = {
        2: lambda t: chi.cdf(np.maximum(np.asarray(t, dtype=float), 0.0)),
        np.inf: lambda t: np.where(np.asarray(t) < 0, 0.0, special.erf(np.maximum(t, 0) / math.sqrt(2)) ** dim),
    }
    lipschitz = math.sqrt(dim) / math.sqrt(2 * math.pi)
    kappa = 2.0
    return DistributionHandle(
        dim=dim,
        marginal_cdfs=(special.ndtr,) * dim,
        sampler=lambda rng, n: rng.standard_normal((n, dim)),
        density_bound=(2 * math.pi) ** (-dim / 2),
        # Chebyshev: mu(|x| > t) <= d t^{-2}
        tail=(float(dim), 0.5),
        modulus=(lipschitz * (kappa / math.e) ** kappa, kappa),
        cdf_lipschitz=lipschitz,
        radial_cdfs=radial,
        spec={"type": "gaussian", "dim": dim},
    )


def from_spec(spec):
    """Build a handle from ``{"type": "uniform" | "gaussian", "dim": d}``."""
    if not isinstance(spec, dict):
        raise ConfigError("mu", "must be a JSON object")
    kind = spec.get("type")
    dim = spec.get("dim", 1)
    if not isinstance(dim, int) or dim < 1:
        raise ConfigError("mu.dim", "must be a positive integer")
    if kind == "uniform":
        return uniform_cube(dim)
    if kind == "gaussian":
        return gaussian_product(dim)
    raise ConfigError("mu.type", f"unknown distribution {kind!r}")
