"""Explicit bracket families for indicator classes and a monotone class.

Every family is lazy: a bracket is materialised from its index tuple on
demand, so counts in the billions cost nothing until a bracket is used.
Each family also knows how to locate the bracket covering a given member
of the class, how to evaluate that member, and how to draw random members
and test points, which is all :func:`verify_family` needs.
"""
import itertools
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import geometry as geo
from .distributions import DistributionHandle, pseudo_inverse, uniform_cube
from .errors import MonotonicityViolation, OutOfDomain, TailUnbounded, ZeroGap
from .geometry import holder_bound, transition
from .seeding import generator

RECTANGLES = "rectangles"
BALLS = "balls"
ELLIPSOIDS = "ellipsoids"
ELLIPSOIDS_EXT = "ellipsoids-ext"
CENTERED_BALLS = "centered-balls"
MONOTONE = "monotone"
TRIVIAL = "trivial"

_SLACK = 1e-9


def unit_ball_volume(d):
    return math.pi ** (d / 2) / math.gamma(d / 2 + 1)


@dataclass(frozen=True, eq=False)
class Constant:
    value: float

    def __call__(self, x):
        X = np.asarray(x, dtype=float)
        n = X.shape[0] if X.ndim else 1
        return np.full(n, float(self.value))


@dataclass(frozen=True, eq=False)
class PiecewiseLinear:
    """Interpolant through ``(knots, values)``, constant beyond the end knots."""

    knots: np.ndarray
    values: np.ndarray

    def __call__(self, x):
        x = np.asarray(x, dtype=float).reshape(-1)
        return np.interp(x, self.knots, self.values)

    @property
    def max_slope(self):
        dx = np.diff(self.knots)
        dv = np.abs(np.diff(self.values))
        with np.errstate(divide="ignore", invalid="ignore"):
            slope = np.where(dv > 0, dv / dx, 0.0)
        return float(slope.max(initial=0.0))


@dataclass(frozen=True, eq=False)
class Bracket:
    """``[lower, upper]`` with its L^s gap target and Hölder-norm cap."""

    lower: Callable
    upper: Callable
    claimed_eps: float
    claimed_A: float
    family: str
    index: tuple
    meta: dict = field(default_factory=dict)


def _check_eps(eps, s, alpha):
    if not eps > 0:
        raise ValueError("eps must be positive")
    if s < 1:
        raise ValueError("s must be at least 1")
    if not 0 < alpha <= 1:
        raise ValueError("alpha must lie in (0, 1]")


def modulus_cap(modulus, m, alpha):
    """Cap ``1 + 3^alpha exp(alpha (c m)^{1/kappa})`` from ``omega(x) <= c |log x|^{-kappa}``.

    Under the declared modulus two quantiles ``1/m`` apart in probability
    are at least ``exp(-(c m)^{1/kappa})`` apart in space.
    """
    c, kappa = modulus
    return 1.0 + 3.0**alpha * math.exp(alpha * (c * m) ** (1.0 / kappa))


def spacing_cap(grid, alpha):
    """``1 + (3 / h)^alpha`` with ``h`` the smallest finite step of a quantile grid.

    Every transition in the quantile-grid families separates sets whose
    boundaries sit at least one grid step apart.
    """
    grid = np.atleast_2d(grid)
    with np.errstate(invalid="ignore"):
        steps = np.diff(grid, axis=1)
    steps = steps[np.isfinite(steps)]
    if steps.size == 0:
        return 1.0
    h = float(steps.min())
    if h <= 0:
        raise ZeroGap("quantile grid has a repeated point")
    return 1.0 + (3.0 / h) ** alpha


class BracketFamily:
    """Common interface of the lazy families."""

    kind = ""

    def __init__(self, eps, s, alpha, m, dim, mu):
        self.eps = float(eps)
        self.s = float(s)
        self.alpha = float(alpha)
        self.m = int(m)
        self.dim = int(dim)
        self.mu = mu

    @property
    def count(self):
        raise NotImplementedError

    def indices(self):
        raise NotImplementedError

    def bracket(self, index):
        raise NotImplementedError

    def locate(self, params):
        raise NotImplementedError

    def member(self, params):
        """The indicator (or class function) indexed by ``params``."""
        raise NotImplementedError

    def random_params(self, rng):
        raise NotImplementedError

    def random_index(self, rng):
        raise NotImplementedError

    def sample_points(self, rng, n):
        return self.mu.sample(rng, n)

    def sample_mu(self, rng, n):
        return self.mu.sample(rng, n)

    def holder_sampler(self, rng, n):
        return self.sample_points(rng, n)

    holder_metric = staticmethod(geo.euclidean_distance)

    def enumerated_count(self, limit=1_000_000):
        if self.count > limit:
            return None
        return sum(1 for _ in self.indices())

    @property
    def cap(self):
        """Family-wide Hölder cap in closed form."""
        raise NotImplementedError

    def describe(self):
        return {"family": self.kind, "eps": self.eps, "s": self.s, "alpha": self.alpha, "m": self.m, "dim": self.dim}

    def __len__(self):
        return self.count


def locate_bracket(family, params):
    return family.bracket(family.locate(params))


class TrivialFamily(BracketFamily):
    """For ``eps >= 1`` the single bracket ``[0, 1]`` covers any class into [0, 1]."""

    kind = TRIVIAL

    def __init__(self, eps, s, alpha, dim, mu, inner_kind):
        super().__init__(eps, s, alpha, 1, dim, mu)
        self.inner_kind = inner_kind

    @property
    def count(self):
        return 1

    @property
    def cap(self):
        return 1.0

    def indices(self):
        yield ()

    def bracket(self, index=()):
        return Bracket(Constant(0.0), Constant(1.0), 1.0, 1.0, self.kind, ())

    def locate(self, params):
        return ()

    def member(self, params):
        return params if callable(params) else Constant(0.5)

    def random_params(self, rng):
        return Constant(float(rng.random()))

    def random_index(self, rng):
        return ()


# ----------------------------------------------------------------------------
# rectangles (t, u]


def rectangle_m(eps, s, d):
    return math.floor(6 * d * eps ** (-s) + 1)


class RectangleFamily(BracketFamily):
    kind = RECTANGLES

    def __init__(self, mu, eps, s, alpha):
        d = mu.dim
        super().__init__(eps, s, alpha, rectangle_m(eps, s, d), d, mu)
        levels = np.arange(self.m + 1) / self.m
        grid = np.vstack([mu.quantile(i, levels) for i in range(d)])
        # t_{i,0} is taken as -inf so that the outermost transitions keep a gap
        grid[:, 0] = -np.inf
        self.grid = grid

    @property
    def count(self):
        m = self.m
        return ((m + 1) * (m + 2) // 2) ** self.dim

    @property
    def count_bound(self):
        return (self.m + 1) ** (2 * self.dim)

    @property
    def cap(self):
        if self.mu.modulus is None:
            return spacing_cap(self.grid, self.alpha)
        return modulus_cap(self.mu.modulus, self.m, self.alpha)

    def _t(self, idx):
        idx = np.clip(np.asarray(idx), 0, self.m)
        return self.grid[np.arange(self.dim), idx]

    def indices(self):
        pairs = [(k, j) for j in range(self.m + 1) for k in range(j + 1)]
        for combo in itertools.product(pairs, repeat=self.dim):
            yield tuple(p[0] for p in combo), tuple(p[1] for p in combo)

    def enumerated_count(self, limit=1_000_000):
        per_axis = sum(1 for j in range(self.m + 1) for _ in range(j + 1))
        return per_axis**self.dim

    def bracket(self, index):
        k, j = (np.asarray(v) for v in index)
        if k.shape != (self.dim,) or j.shape != (self.dim,) or np.any(k > j):
            raise ValueError("rectangle index needs k <= j componentwise")
        lower = transition(
            geo.rectangle(self._t(k + 1), self._t(j - 2)),
            geo.complement(geo.rectangle(self._t(k), self._t(j - 1))),
            self.alpha,
        )
        upper = transition(
            geo.rectangle(self._t(k - 1), self._t(j)),
            geo.complement(geo.rectangle(self._t(k - 2), self._t(j + 1))),
            self.alpha,
        )
        certified = max(holder_bound(lower), holder_bound(upper))
        return Bracket(
            lower,
            upper,
            self.eps,
            self.cap,
            self.kind,
            (tuple(k.tolist()), tuple(j.tolist())),
            {"certified_A": certified},
        )

    def locate(self, params):
        t, u = (np.asarray(v, dtype=float) for v in params)
        if t.shape != (self.dim,) or u.shape != (self.dim,):
            raise OutOfDomain("rectangle corners must be d-vectors")
        if np.any(np.isnan(t)) or np.any(np.isnan(u)) or np.any(t > u):
            raise OutOfDomain("rectangle corners need t <= u")
        k = [int(np.searchsorted(self.grid[i], t[i], side="left")) for i in range(self.dim)]
        j = [int(np.searchsorted(self.grid[i], u[i], side="left")) for i in range(self.dim)]
        return tuple(k), tuple(j)

    def member(self, params):
        t, u = (np.asarray(v, dtype=float) for v in params)

        def f(X):
            X = np.atleast_2d(X)
            return np.all((X > t) & (X <= u), axis=1).astype(float)

        return f

    def random_params(self, rng):
        a = self.mu.sample(rng, 2)
        t, u = np.minimum(a[0], a[1]), np.maximum(a[0], a[1])
        t = np.where(rng.random(self.dim) < 0.1, -np.inf, t)
        u = np.where(rng.random(self.dim) < 0.1, np.inf, u)
        return t, u

    def random_index(self, rng):
        a = rng.integers(0, self.m + 1, size=(2, self.dim))
        return tuple(a.min(axis=0).tolist()), tuple(a.max(axis=0).tolist())


def build_rectangle_family(mu, eps, s=1.0, alpha=1.0):
    """Brackets for ``{1_(t,u] : t <= u}`` on R^d built on the marginal quantile grid."""
    _check_eps(eps, s, alpha)
    if eps >= 1:
        return TrivialFamily(eps, s, alpha, mu.dim, mu, RECTANGLES)
    return RectangleFamily(mu, eps, s, alpha)


# ----------------------------------------------------------------------------
# balls with centres in the unit cube


class _CellGrid:
    """Half-open cells of side 1/m covering ``[a, b]^d``."""

    def __init__(self, m, d, a=0.0, b=1.0):
        self.m, self.d, self.a, self.b = m, d, float(a), float(b)
        self.cells = max(1, math.ceil((self.b - self.a) * m - _SLACK))

    def cell(self, i):
        i = np.asarray(i, dtype=float)
        return self.a + (i - 1) / self.m, self.a + i / self.m

    def locate(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape != (self.d,) or np.any(x < self.a) or np.any(x > self.b):
            raise OutOfDomain(f"centre outside [{self.a}, {self.b}]^{self.d}")
        i = np.floor((x - self.a) * self.m).astype(int) + 1
        return tuple(np.clip(i, 1, self.cells).tolist())


class BallFamily(BracketFamily):
    kind = BALLS

    def __init__(self, eps, s, alpha, dim, density_bound, mu):
        m = math.floor(eps ** (-s))
        super().__init__(eps, s, alpha, m, dim, mu)
        self.B = float(density_bound)
        self.cells = _CellGrid(m, dim)
        self.step = math.sqrt(dim) / m
        self.eps_constant = max(self._eps_bound(j) for j in range(m + 1)) / self.eps

    @property
    def count(self):
        return (self.m + 1) * self.m**self.dim

    @property
    def cap(self):
        return 1.0 + 3.0 * self.eps ** (-self.s * self.alpha)

    def _eps_bound(self, j):
        vol = unit_ball_volume(self.dim) * (((j + 3) * self.step) ** self.dim - (max(j - 2, 0) * self.step) ** self.dim)
        return min(1.0, self.B * vol) ** (1.0 / self.s)

    def indices(self):
        for i in itertools.product(range(1, self.m + 1), repeat=self.dim):
            for j in range(self.m + 1):
                yield i, j

    def bracket(self, index):
        i, j = index
        lo, hi = self.cells.cell(i)
        c = 0.5 * (lo + hi)
        lower = transition(geo.ball(c, (j - 2) * self.step), geo.complement(geo.ball(c, (j - 1) * self.step)), self.alpha)
        upper = transition(geo.ball(c, (j + 2) * self.step), geo.complement(geo.ball(c, (j + 3) * self.step)), self.alpha)
        certified = max(holder_bound(lower), holder_bound(upper))
        return Bracket(lower, upper, self._eps_bound(j), self.cap, self.kind, (tuple(i), int(j)), {"certified_A": certified})

    def locate(self, params):
        x, r = params
        i = self.cells.locate(x)
        if not 0 <= r <= math.sqrt(self.dim):
            raise OutOfDomain("radius must lie in [0, sqrt(d)]")
        j = min(math.floor(r / self.step), self.m)
        if j * self.step > r:
            j -= 1
        return i, j

    def member(self, params):
        x, r = np.asarray(params[0], dtype=float), float(params[1])

        def f(X):
            return (np.linalg.norm(np.atleast_2d(X) - x, axis=1) < r).astype(float)

        return f

    def random_params(self, rng):
        return rng.random(self.dim), float(rng.uniform(0, math.sqrt(self.dim)))

    def random_index(self, rng):
        return tuple(rng.integers(1, self.m + 1, size=self.dim).tolist()), int(rng.integers(0, self.m + 1))


def build_ball_family(eps, s=1.0, alpha=1.0, density_bound=None, dim=2, mu=None):
    """Brackets for open balls ``B(x, r)`` in ``[0, 1]^d``, ``x`` in the cube."""
    _check_eps(eps, s, alpha)
    mu = mu or uniform_cube(dim)
    if density_bound is None:
        density_bound = mu.density_bound
    if eps >= 1:
        return TrivialFamily(eps, s, alpha, dim, mu, BALLS)
    return BallFamily(eps, s, alpha, dim, density_bound, mu)


# ----------------------------------------------------------------------------
# axis-aligned ellipsoids


def ellipsoid_volume_bounds(j, m):
    """Bounds on the Lebesgue measure of the clamp union and intersection at axes ``j/m``."""
    j = np.asarray(j, dtype=float)
    d = len(j)
    core = unit_ball_volume(d) * np.prod(j / m)
    shell = sum((1.0 / m) * np.prod(np.delete((2 * j + 1) / m, k)) for k in range(d))
    return core + shell, core - shell


class EllipsoidFamily(BracketFamily):
    kind = ELLIPSOIDS

    def __init__(self, eps, s, alpha, dim, D, density_bound, mu, box=(0.0, 1.0)):
        m = math.floor(eps ** (-s))
        super().__init__(eps, s, alpha, m, dim, mu)
        if int(D) != D or D < 1:
            raise ValueError("D must be a positive integer")
        self.D = int(D)
        self.B = float(density_bound)
        self.cells = _CellGrid(m, dim, *box)
        self.box = (float(box[0]), float(box[1]))
        self.levels = self.D * m

    @property
    def count(self):
        return self.cells.cells**self.dim * self.levels**self.dim

    @property
    def cap(self):
        return 1.0 + 3.0 * self.D * self.eps ** (-2 * self.alpha * self.s)

    @property
    def gap_bound(self):
        return 1.0 / (self.D * self.m**2)

    def _eps_bound(self, j):
        j = np.asarray(j)
        upper, _ = ellipsoid_volume_bounds(j + 2, self.m)
        if np.any(j - 1 < 0):
            lower = 0.0
        else:
            lower = max(ellipsoid_volume_bounds(j - 1, self.m)[1], 0.0)
        return min(1.0, self.B * max(upper - lower, 0.0)) ** (1.0 / self.s)

    def indices(self):
        cells = range(1, self.cells.cells + 1)
        for i in itertools.product(cells, repeat=self.dim):
            for j in itertools.product(range(self.levels), repeat=self.dim):
                yield i, j

    def regions(self, i, j):
        lo, hi = self.cells.cell(i)
        j = np.asarray(j, dtype=float)

        def union(jj):
            return geo.clamp_union(lo, hi, jj / self.m)

        def inter(jj):
            return geo.clamp_intersection(lo, hi, jj / self.m)

        return union, inter

    def bracket(self, index):
        i, j = index
        j = np.asarray(j)
        union, inter = self.regions(i, j)
        lower = transition(inter(j - 1), geo.complement(inter(j)), self.alpha)
        upper = transition(union(j + 1), geo.complement(union(j + 2)), self.alpha)
        certified = max(holder_bound(lower), holder_bound(upper))
        return Bracket(
            lower, upper, self._eps_bound(j), self.cap, self.kind, (tuple(i), tuple(j.tolist())), {"certified_A": certified}
        )

    def locate(self, params):
        x, r = params
        r = np.asarray(r, dtype=float)
        i = self.cells.locate(x)
        if r.shape != (self.dim,) or np.any(r < 0) or np.any(r > self.D):
            raise OutOfDomain(f"semi-axes must lie in [0, {self.D}]")
        j = np.minimum(np.floor(r * self.m).astype(int), self.levels - 1)
        j = np.where(j / self.m > r, j - 1, j)
        return i, tuple(j.tolist())

    def member(self, params):
        x, r = (np.asarray(v, dtype=float) for v in params)

        def f(X):
            X = np.atleast_2d(X)
            return (geo._ratio_sum(X - x, r) <= 1.0).astype(float)

        return f

    def random_params(self, rng):
        a, b = self.box
        return rng.uniform(a, b, self.dim), rng.uniform(0, self.D, self.dim)

    def random_index(self, rng):
        i = rng.integers(1, self.cells.cells + 1, size=self.dim)
        j = rng.integers(0, self.levels, size=self.dim)
        return tuple(i.tolist()), tuple(j.tolist())

    def sample_points(self, rng, n):
        # half from mu, half spread over the reach of the class
        a, b = self.box
        k = n // 2
        near = rng.uniform(a - self.D - 0.5, b + self.D + 0.5, size=(n - k, self.dim))
        return np.vstack([self.mu.sample(rng, k), near])


def build_ellipsoid_family(eps, s=1.0, alpha=1.0, D=1, density_bound=None, dim=2, centers_box=(0.0, 1.0), mu=None):
    """Brackets for ``Ellip(x, r)`` with ``x`` in ``centers_box^d`` and ``r`` in ``[0, D]^d``."""
    _check_eps(eps, s, alpha)
    mu = mu or uniform_cube(dim)
    if density_bound is None:
        density_bound = mu.density_bound
    if eps >= 1:
        return TrivialFamily(eps, s, alpha, dim, mu, ELLIPSOIDS)
    return EllipsoidFamily(eps, s, alpha, dim, D, density_bound, mu, centers_box)


# ----------------------------------------------------------------------------
# tail bracket and the extension to centres in R^d


@dataclass(frozen=True)
class TailInfo:
    K_outer: float
    K_inner: float
    K_bound: float
    certified_A: float
    formula_A: float | None


def extension_tail_bracket(mu, eps, s=1.0, alpha=1.0):
    """Bracket ``[0, U]`` with ``U = 1`` off ``[-K1, K1]^d`` and ``0`` on ``[-K2, K2]^d``.

    ``K1`` and ``K2`` are the box quantiles at levels ``1 - eps^s/2`` and
    ``1 - eps^s``.  Returns the bracket and a :class:`TailInfo`.
    """
    _check_eps(eps, s, alpha)
    if mu.tail is None:
        raise TailUnbounded("tail parameters (b, beta) are required")
    d = mu.dim
    es = eps**s
    K1 = float(mu.box_quantile(1 - es / 2))
    K2 = float(mu.box_quantile(1 - es))
    b, beta = mu.tail
    upper = transition(
        geo.complement(geo.rectangle(np.full(d, -K1), np.full(d, K1))),
        geo.rectangle(np.full(d, -K2), np.full(d, K2)),
        alpha,
    )
    certified = holder_bound(upper)
    lipschitz = mu.cdf_lipschitz
    formula = None
    if lipschitz is not None:
        # omega_F(x) <= L x, so omega_F^{-1}(y) >= y / L
        inv = 2.0 ** (-(d + 1)) * es / lipschitz
        formula = 1.0 + (3 * math.sqrt(d)) ** alpha * inv ** (-alpha)
    info = TailInfo(K1, K2, (2 * b / es) ** beta, certified, formula)
    claimed = certified if formula is None else formula
    bracket = Bracket(Constant(0.0), upper, eps, claimed, "tail", ("tail",), {"certified_A": certified})
    return bracket, info


def extended_box_radius(mu, eps, s, D):
    return float(mu.box_quantile(1 - eps**s / 2)) + D


class ExtendedEllipsoidFamily(BracketFamily):
    kind = ELLIPSOIDS_EXT

    def __init__(self, mu, eps, s, alpha, D):
        if mu.density_bound is None:
            raise ValueError("a density bound is required")
        self.tail_bracket, self.tail = extension_tail_bracket(mu, eps, s, alpha)
        self.K = self.tail.K_outer + D
        self.inner = EllipsoidFamily(eps, s, alpha, mu.dim, D, mu.density_bound, mu, (-self.K, self.K))
        super().__init__(eps, s, alpha, self.inner.m, mu.dim, mu)
        self.D = self.inner.D

    @property
    def count(self):
        return 1 + self.inner.count

    @property
    def cap(self):
        return max(self.inner.cap, self.tail_bracket.claimed_A)

    @property
    def cap_constant(self):
        return self.cap * self.eps ** (2 * self.alpha * self.s)

    @property
    def count_constant(self):
        b, beta = self.mu.tail
        return self.count * self.eps ** ((beta * self.s + 2) * self.dim * self.s)

    def indices(self):
        yield ("tail",)
        yield from self.inner.indices()

    def bracket(self, index):
        if index == ("tail",):
            return self.tail_bracket
        return self.inner.bracket(index)

    def locate(self, params):
        x, r = params
        x = np.asarray(x, dtype=float)
        if np.all(np.abs(x) <= self.K):
            return self.inner.locate((x, r))
        if np.any(np.asarray(r) < 0) or np.any(np.asarray(r) > self.D):
            raise OutOfDomain(f"semi-axes must lie in [0, {self.D}]")
        return ("tail",)

    member = EllipsoidFamily.member

    def random_params(self, rng):
        x = rng.uniform(-1.5 * self.K, 1.5 * self.K, self.dim)
        return x, rng.uniform(0, self.D, self.dim)

    def random_index(self, rng):
        if rng.random() < 0.05:
            return ("tail",)
        return self.inner.random_index(rng)

    def sample_points(self, rng, n):
        k = n // 2
        wide = rng.uniform(-1.5 * self.K - self.D, 1.5 * self.K + self.D, size=(n - k, self.dim))
        return np.vstack([self.mu.sample(rng, k), wide])

    def describe(self):
        out = super().describe()
        out.update(K=self.K, K_bound=self.tail.K_bound + self.D, count_constant=self.count_constant, cap_constant=self.cap_constant)
        return out


def build_extended_ellipsoid_family(mu, eps, s=1.0, alpha=1.0, D=1):
    """Ellipsoids with arbitrary centres: cube family on ``[-K, K]^d`` plus the tail bracket."""
    _check_eps(eps, s, alpha)
    if eps >= 1:
        return TrivialFamily(eps, s, alpha, mu.dim, mu, ELLIPSOIDS_EXT)
    return ExtendedEllipsoidFamily(mu, eps, s, alpha, D)


# ----------------------------------------------------------------------------
# balls with a common centre


class CenteredBallFamily(BracketFamily):
    kind = CENTERED_BALLS

    def __init__(self, G, eps, s, alpha, dim, ord, center, modulus, mu):
        m = math.floor(3 * eps ** (-s) + 1)
        super().__init__(eps, s, alpha, m, dim, mu)
        self.G = G
        self.ord = ord
        self.center = np.zeros(dim) if center is None else np.asarray(center, dtype=float)
        self.modulus = modulus
        self.radii = pseudo_inverse(G, np.arange(1, m + 1) / m)

    @property
    def count(self):
        return self.m

    @property
    def cap(self):
        if self.modulus is None:
            return spacing_cap(self.radii, self.alpha)
        return modulus_cap(self.modulus, self.m, self.alpha)

    def ball(self, i):
        if i <= 0:
            return geo.Empty(self.dim)
        if i > self.m:
            return geo.Full(self.dim)
        return geo.sublevel(self.radii[i - 1], self.dim, self.ord, self.center)

    def indices(self):
        return iter(range(1, self.m + 1))

    def bracket(self, i):
        i = int(i)
        if not 1 <= i <= self.m:
            raise ValueError("centred-ball index out of range")
        lower = transition(self.ball(i - 2), geo.complement(self.ball(i - 1)), self.alpha)
        upper = transition(self.ball(i), geo.complement(self.ball(i + 1)), self.alpha)
        certified = max(holder_bound(lower), holder_bound(upper))
        return Bracket(lower, upper, self.eps, self.cap, self.kind, (i,), {"certified_A": certified})

    def locate(self, t):
        t = float(t)
        if not t > 0:
            raise OutOfDomain("radius must be positive")
        return int(np.searchsorted(self.radii, t, side="left")) + 1

    def member(self, t):
        def f(X):
            X = np.atleast_2d(X)
            return (np.linalg.norm(X - self.center, ord=self.ord, axis=1) <= t).astype(float)

        return f

    def random_params(self, rng):
        return float(self.radii[min(int(rng.integers(0, self.m)), self.m - 2)] * rng.uniform(0.5, 1.5)) or 1e-3

    def random_index(self, rng):
        return int(rng.integers(1, self.m + 1))

    def holder_metric(self, X, Y):
        return np.linalg.norm(X - Y, ord=self.ord, axis=-1)


def build_centered_ball_family(G, eps, s=1.0, alpha=1.0, dim=None, ord=2, center=None, modulus=None, mu=None):
    """Brackets for ``{|x - center|_ord <= t}``; ``G`` is the radial CDF or a handle."""
    _check_eps(eps, s, alpha)
    if isinstance(G, DistributionHandle):
        mu = G
        dim = mu.dim
        G = mu.radial_cdf(ord)
    if mu is None or dim is None:
        raise ValueError("a sampling measure and dimension are required")
    if eps >= 1:
        return TrivialFamily(eps, s, alpha, dim, mu, CENTERED_BALLS)
    return CenteredBallFamily(G, eps, s, alpha, dim, ord, center, modulus, mu)


# ----------------------------------------------------------------------------
# one-parameter monotone class


@dataclass(frozen=True)
class MonotoneClass:
    """``f(t, x)`` nondecreasing in ``t`` and in ``x`` with values in [0, 1]."""

    f: Callable

    def __call__(self, t, x):
        return np.asarray(self.f(t, np.asarray(x, dtype=float)), dtype=float)

    def spot_check(self, rng, n=2000):
        ts = np.sort(rng.random(16))
        x = np.sort(rng.standard_normal(n) * 3)
        vals = np.vstack([self(t, x) for t in ts])
        if np.any(vals < 0) or np.any(vals > 1):
            raise MonotonicityViolation("class values must lie in [0, 1]")
        if np.any(np.diff(vals, axis=0) < 0):
            raise MonotonicityViolation("f_t must be nondecreasing in t")
        if np.any(np.diff(vals, axis=1) < 0):
            raise MonotonicityViolation("f_t must be nondecreasing in x")


def shift_kernel_class(F=None):
    """``f_t(x) = F(t + x)`` from the kernel ``g(x, y) = y - x``; uniform ``F`` by default."""
    F = F or (lambda z: np.clip(z, 0.0, 1.0))
    return MonotoneClass(lambda t, x: F(t + x))


class MonotoneFamily(BracketFamily):
    kind = MONOTONE

    def __init__(self, cls, mu, lam, eps, s, alpha):
        m = math.floor((lam + 4) * eps ** (-s) + 1)
        super().__init__(eps, s, alpha, m, 1, mu)
        self.cls = cls
        self.lam = float(lam)
        x = mu.quantile(0, np.arange(m + 1) / m)
        x[0] = -np.inf
        self.knots = x
        self.t = np.arange(m + 1) / m
        finite = x[1:m]
        gaps = np.diff(finite)
        self.min_spacing = float(gaps.min()) if len(gaps) else math.inf

    @property
    def count(self):
        return self.m

    @property
    def claimed_eps(self):
        return ((self.lam + 4) / self.m) ** (1 / self.s)

    @property
    def cap(self):
        return 1.0 + self.min_spacing ** (-self.alpha)

    def indices(self):
        return iter(range(1, self.m + 1))

    def bracket(self, j):
        j = int(j)
        if not 1 <= j <= self.m:
            raise ValueError("monotone index out of range")
        m = self.m
        ks = np.arange(1, m)
        lo_vals = self.cls(self.t[j - 1], self.knots[ks - 1])
        up_vals = self.cls(self.t[j], self.knots[ks + 1])
        lower = PiecewiseLinear(self.knots[1:m], lo_vals)
        upper = PiecewiseLinear(self.knots[1:m], up_vals)
        certified = 1.0 + max(lower.max_slope, upper.max_slope) ** self.alpha
        return Bracket(lower, upper, self.claimed_eps, self.cap, self.kind, (j,), {"certified_A": certified})

    def locate(self, t):
        t = float(t)
        if not 0 <= t <= 1:
            raise OutOfDomain("monotone parameter must lie in [0, 1]")
        j = math.ceil(t * self.m)
        if j >= 1 and (j - 1) / self.m >= t:
            j -= 1
        return max(j, 1)

    def member(self, t):
        return lambda X: self.cls(t, np.asarray(X, dtype=float).reshape(-1))

    def random_params(self, rng):
        return float(rng.random())

    def random_index(self, rng):
        return int(rng.integers(1, self.m + 1))

    def sample_points(self, rng, n):
        k = n // 2
        return np.concatenate([self.mu.sample(rng, k)[:, 0], rng.uniform(-2, 3, n - k)]).reshape(n, 1)


def build_monotone_family(cls, mu, lam, eps, s=1.0, alpha=1.0, seed=0):
    """Piecewise-linear brackets for a monotone one-parameter class on R."""
    _check_eps(eps, s, alpha)
    if mu.dim != 1:
        raise ValueError("the monotone class lives on R")
    cls.spot_check(generator(seed, "monotone-spot-check"))
    if eps >= 1:
        return TrivialFamily(eps, s, alpha, 1, mu, MONOTONE)
    return MonotoneFamily(cls, mu, lam, eps, s, alpha)


# ----------------------------------------------------------------------------
# closed-form counts, used by the entropy curves


def family_count(kind, eps, s=1.0, dim=1, D=1, lam=1.0, K=None):
    """Bracket count of a family as an exact integer, without building it."""
    if eps >= 1:
        return 1
    if kind == RECTANGLES:
        m = rectangle_m(eps, s, dim)
        return ((m + 1) * (m + 2) // 2) ** dim
    if kind == BALLS:
        m = math.floor(eps ** (-s))
        return (m + 1) * m**dim
    if kind == ELLIPSOIDS:
        m = math.floor(eps ** (-s))
        return D**dim * m ** (2 * dim)
    if kind == ELLIPSOIDS_EXT:
        m = math.floor(eps ** (-s))
        cells = math.ceil(2 * K * m - _SLACK)
        return 1 + cells**dim * (D * m) ** dim
    if kind == CENTERED_BALLS:
        return math.floor(3 * eps ** (-s) + 1)
    if kind == MONOTONE:
        return math.floor((lam + 4) * eps ** (-s) + 1)
    raise ValueError(f"unknown family {kind!r}")


# ----------------------------------------------------------------------------
# verification


@dataclass
class FamilyReport:
    family: str
    eps: float
    s: float
    alpha: float
    m: int
    count: int
    count_expected: int
    coverage_violations: int
    ordering_violations: int
    ls_gap_max: float
    ls_gap_se: float
    ls_gap_ratio_max: float
    ls_gap_violations: int
    holder_cap_violations: int
    holder_max_ratio: float
    brackets_checked: int
    seed: int
    extra: dict = field(default_factory=dict)

    @property
    def passed(self):
        return (
            self.count == self.count_expected
            and self.coverage_violations == 0
            and self.ordering_violations == 0
            and self.ls_gap_violations == 0
            and self.holder_cap_violations == 0
        )

    def to_dict(self):
        out = {k: v for k, v in self.__dict__.items() if k != "extra"}
        out["passed"] = self.passed
        out.update(self.extra)
        return out


def _expected_count(family):
    if isinstance(family, TrivialFamily):
        return 1
    if isinstance(family, RectangleFamily):
        return family.enumerated_count()
    if isinstance(family, ExtendedEllipsoidFamily):
        return family_count(ELLIPSOIDS_EXT, family.eps, family.s, family.dim, family.D, K=family.K)
    if isinstance(family, EllipsoidFamily):
        if family.box == (0.0, 1.0):
            return family_count(ELLIPSOIDS, family.eps, family.s, family.dim, family.D)
        return family.cells.cells**family.dim * (family.D * family.m) ** family.dim
    if isinstance(family, MonotoneFamily):
        return family_count(MONOTONE, family.eps, family.s, lam=family.lam)
    return family_count(family.kind, family.eps, family.s, family.dim)


def check_coverage(family, n_indices, n_points, rng):
    """Count pointwise ``l <= f <= u`` and ``l <= u`` failures at located brackets."""
    coverage = ordering = 0
    for _ in range(n_indices):
        params = family.random_params(rng)
        b = locate_bracket(family, params)
        f = family.member(params)
        X = family.sample_points(rng, n_points)
        lo, up, fx = b.lower(X), b.upper(X), f(X)
        coverage += int(np.count_nonzero((lo > fx) | (fx > up)))
        ordering += int(np.count_nonzero(lo > up))
    return coverage, ordering


def ls_gap(bracket, X, s):
    """Monte Carlo ``||u - l||_s`` and its delta-method standard error."""
    diff = np.abs(bracket.upper(X) - bracket.lower(X)) ** s
    mean = float(diff.mean())
    se = float(diff.std(ddof=1) / math.sqrt(len(diff)))
    if mean == 0:
        return 0.0, 0.0
    norm = mean ** (1 / s)
    return norm, norm * se / (s * mean)


def _sample_brackets(family, n, rng):
    if family.count <= n:
        return list(family.indices())
    return [family.random_index(rng) for _ in range(n)]


def verify_family(family, n_indices=1000, n_points=1000, n_mc=100_000, seed=0, n_gap=200, n_holder=10, holder_pairs=2000):
    """Check coverage, L^s gaps, Hölder caps and the count of ``family``.

    Violations are tallied in the returned :class:`FamilyReport`; nothing
    raises.
    """
    cov_rng = generator(seed, "verify-coverage")
    coverage, ordering = check_coverage(family, n_indices, n_points, cov_rng)

    gap_rng = generator(seed, "verify-gap")
    gap_max = gap_se = ratio_max = 0.0
    gap_viol = 0
    indices = _sample_brackets(family, n_gap, gap_rng)
    for index in indices:
        b = family.bracket(index)
        norm, se = ls_gap(b, family.sample_mu(gap_rng, n_mc), family.s)
        rel = se / norm if norm > 0 else 0.0
        if norm > b.claimed_eps * (1 + 3 * rel):
            gap_viol += 1
        if norm >= gap_max:
            gap_max, gap_se = norm, se
        ratio_max = max(ratio_max, norm / b.claimed_eps)

    hold_rng = generator(seed, "verify-holder")
    hold_viol = 0
    hold_ratio = 0.0
    for n, index in enumerate(indices[:n_holder]):
        b = family.bracket(index)
        for fn in (b.lower, b.upper):
            est = geo.empirical_holder_norm(
                fn, family.holder_sampler, holder_pairs, family.alpha, seed=int(hold_rng.integers(2**32)), metric=family.holder_metric
            )
            hold_ratio = max(hold_ratio, est / b.claimed_A)
            hold_viol += int(est > b.claimed_A)

    extra = {"claimed_A": family.cap}
    if hasattr(family, "eps_constant"):
        extra["eps_constant"] = family.eps_constant
    return FamilyReport(
        family=family.kind,
        eps=family.eps,
        s=family.s,
        alpha=family.alpha,
        m=family.m,
        count=family.count,
        count_expected=_expected_count(family),
        coverage_violations=coverage,
        ordering_violations=ordering,
        ls_gap_max=gap_max,
        ls_gap_se=gap_se,
        ls_gap_ratio_max=ratio_max,
        ls_gap_violations=gap_viol,
        holder_cap_violations=hold_viol,
        holder_max_ratio=hold_ratio,
        brackets_checked=len(indices),
        seed=seed,
        extra=extra,
    )


FAMILIES = (RECTANGLES, BALLS, ELLIPSOIDS, ELLIPSOIDS_EXT, CENTERED_BALLS, MONOTONE)


def default_measure(kind, dim):
    from .distributions import gaussian_product

    if kind == MONOTONE:
        return uniform_cube(1)
    if kind in (ELLIPSOIDS_EXT, CENTERED_BALLS):
        return gaussian_product(dim)
    return uniform_cube(dim)


def family_builder(kind, mu=None, s=1.0, alpha=1.0, dim=2, D=1, lam=1.0, ord=2):
    """``eps -> family`` for one of :data:`FAMILIES` with everything else fixed."""
    if kind not in FAMILIES:
        raise ValueError(f"unknown family {kind!r}")
    mu = mu or default_measure(kind, dim)
    if kind == RECTANGLES:
        return lambda eps: build_rectangle_family(mu, eps, s, alpha)
    if kind == BALLS:
        return lambda eps: build_ball_family(eps, s, alpha, dim=mu.dim, mu=mu)
    if kind == ELLIPSOIDS:
        return lambda eps: build_ellipsoid_family(eps, s, alpha, D, dim=mu.dim, mu=mu)
    if kind == ELLIPSOIDS_EXT:
        return lambda eps: build_extended_ellipsoid_family(mu, eps, s, alpha, D)
    if kind == CENTERED_BALLS:
        return lambda eps: build_centered_ball_family(mu, eps, s, alpha, ord=ord)
    cls = shift_kernel_class()
    return lambda eps: build_monotone_family(cls, mu, lam, eps, s, alpha)
