"""Sampled checks of the transition-function bounds and the ellipsoid gap.

The checks draw random nested pairs, evaluate the quantities the bounds
are about, and count violations.  Nothing here trusts the numeric
distance kernels for the gap itself: gaps come from closed forms, and the
dense-boundary check measures distances between sampled boundary points.
"""
import math
from dataclasses import dataclass

import numpy as np

from . import geometry as geo
from .seeding import generator


@dataclass(frozen=True)
class TransitionCheck:
    kind: str
    dim: int
    alpha: float
    gap: float
    bound: float
    max_quotient: float
    max_core_ratio: float
    holder_violations: int
    core_violations: int

    def to_dict(self):
        return dict(self.__dict__)


def random_nested_pair(rng, dim, kind=None):
    """``(A, C)`` with ``A`` strictly inside ``C``; rectangles or balls in ``[0, 1]^d``."""
    kind = kind or ("rectangle" if rng.random() < 0.5 else "ball")
    if kind == "rectangle":
        a = rng.uniform(0.2, 0.8, size=(2, dim))
        lo, hi = a.min(axis=0), a.max(axis=0)
        inner = geo.rectangle(lo, hi)
        outer = geo.rectangle(lo - rng.uniform(0.01, 0.3, dim), hi + rng.uniform(0.01, 0.3, dim))
        return inner, outer
    c = rng.uniform(0.3, 0.7, dim)
    r = float(rng.uniform(0.0, 0.3))
    R = r + float(rng.uniform(0.01, 0.3))
    shift = rng.standard_normal(dim)
    shift *= rng.uniform(0, 0.9) * (R - r) / np.linalg.norm(shift)
    return geo.ball(c, r), geo.ball(c + shift, R)


def _pair_samples(rng, dim, n):
    # one half anywhere near the sets, the other half a short hop away
    X = rng.uniform(-0.4, 1.4, size=(n, dim))
    direction = rng.standard_normal((n, dim))
    direction /= np.linalg.norm(direction, axis=1, keepdims=True)
    step = 10.0 ** rng.uniform(-6, 0, size=(n, 1))
    return X, X + step * direction


def check_transition(A, C, alpha, samples, rng, cap_scale=1.0):
    """Count pairs breaking ``1 + (3/gap)^alpha`` or ``|T(x) - T(y)| <= 3 d(x, y) / gap``."""
    T = geo.transition(A, geo.complement(C), alpha)
    gap = T.gap_lower_bound
    bound = geo.holder_bound(T) * cap_scale
    X, Y = _pair_samples(rng, A.dim, samples)
    tx, ty = T(X), T(Y)
    dist = np.linalg.norm(X - Y, axis=1)
    diff = np.abs(tx - ty)
    sup = max(float(np.abs(tx).max()), float(np.abs(ty).max()))
    quotient = sup + diff / dist**alpha
    core = diff * gap / (3 * dist)
    return TransitionCheck(
        kind=type(A).__name__,
        dim=A.dim,
        alpha=alpha,
        gap=gap,
        bound=bound,
        max_quotient=float(quotient.max()),
        max_core_ratio=float(core.max()),
        holder_violations=int(np.count_nonzero(quotient > bound)),
        core_violations=int(np.count_nonzero(core > 1.0)),
    )


def transition_lemma_suite(pairs=200, samples=100_000, dims=(1, 2, 3), alphas=(0.5, 1.0), seed=0, cap_scale=1.0):
    """Run :func:`check_transition` on ``pairs`` random nested pairs."""
    rng = generator(seed, "lemma-transition")
    out = []
    for i in range(pairs):
        dim = dims[i % len(dims)]
        alpha = alphas[(i // len(dims)) % len(alphas)]
        A, C = random_nested_pair(rng, dim)
        out.append(check_transition(A, C, alpha, samples, rng, cap_scale))
    return out


# ----------------------------------------------------------------------------
# ellipsoid gap


def boundary_points(region, center, n, rng, iters=60):
    """Points on the boundary of a region star-shaped about ``center``, by ray bisection."""
    d = len(center)
    u = rng.standard_normal((n, d))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    lo = np.zeros((n, 1))
    hi = np.ones((n, 1))
    while True:
        outside = ~np.atleast_1d(region.contains(center + hi * u))
        if outside.all():
            break
        hi = np.where(outside[:, None], hi, 2 * hi)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        inside = np.atleast_1d(region.contains(center + mid * u))[:, None]
        lo = np.where(inside, mid, lo)
        hi = np.where(inside, hi, mid)
    return center + lo * u


@dataclass(frozen=True)
class EllipsoidGapCheck:
    kind: str
    dim: int
    m: int
    D: int
    j: tuple
    bound: float
    closed_form_gap: float
    dense_gap: float
    kernel_gap: float
    passed: bool

    def to_dict(self):
        return dict(self.__dict__)


def check_ellipsoid_gap(rng, dim, m, D, kind="union", n_boundary=2000, tol=1e-6):
    """Nested clamp-ellipsoid pair at random ``(x, j)``; compare distances with ``1/(D m^2)``."""
    x = rng.uniform(0, 1, dim)
    cell = np.floor(x * m)
    lo, hi = cell / m, (cell + 1) / m
    center = 0.5 * (lo + hi)
    if kind == "union":
        j = rng.integers(0, D * m, size=dim)
        inner = geo.clamp_union(lo, hi, j / m)
        outer = geo.clamp_union(lo, hi, (j + 1) / m)
    elif kind == "intersection":
        # the inner set must be non-empty, which needs every axis above the half-width
        j = rng.integers(1, D * m, size=dim)
        inner = geo.clamp_intersection(lo, hi, (j - 1) / m)
        outer = geo.clamp_intersection(lo, hi, j / m)
    else:
        j = rng.integers(0, D * m, size=dim)
        inner = geo.ellipsoid(center, j / m)
        outer = geo.ellipsoid(center, (j + 1) / m)
    bound = 1.0 / (D * m * m)
    if inner.is_empty:
        return EllipsoidGapCheck(kind, dim, m, D, tuple(j.tolist()), bound, math.inf, math.inf, math.inf, True)
    closed = geo.set_gap(inner, geo.complement(outer))
    P = boundary_points(inner, center, n_boundary, rng)
    Q = boundary_points(outer, center, n_boundary, rng)
    # chunked all-pairs minimum between the two sampled boundaries
    dense = min(float(np.linalg.norm(P[i:i + 200, None, :] - Q[None], axis=2).min()) for i in range(0, len(P), 200))
    kernel = float(np.min(outer.complement_distance(P)))
    passed = min(closed, dense, kernel) >= bound - tol
    return EllipsoidGapCheck(kind, dim, m, D, tuple(j.tolist()), bound, closed, dense, kernel, passed)


def ellipsoid_gap_suite(cases=100, dims=(1, 2, 3), seed=0, n_boundary=2000):
    rng = generator(seed, "lemma-ellipsoid")
    kinds = ("union", "intersection", "plain")
    out = []
    for i in range(cases):
        m = int(rng.integers(1, 11))
        D = int(rng.integers(1, 4))
        out.append(check_ellipsoid_gap(rng, dims[i % len(dims)], m, D, kinds[i % 3], n_boundary))
    return out
