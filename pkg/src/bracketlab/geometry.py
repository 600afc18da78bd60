"""Regions in R^d or on the torus, point-to-set distances and transition functions.

A transition function ``T[A, B]`` equals 1 on ``A``, 0 on ``B`` and
interpolates by the ratio of distances in between; its Hölder norm is
controlled by the gap ``d(A, B)``.  Regions are immutable; every
distance method accepts an ``(n, d)`` array or a single point.
"""
import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import DimensionMismatch, NonFiniteInput, ZeroGap
from .seeding import generator

EUCLIDEAN = "euclidean"
TORUS = "torus"


def _points(x):
    arr = np.asarray(x, dtype=float)
    single = arr.ndim == 1
    arr = np.atleast_2d(arr)
    if not np.all(np.isfinite(arr)):
        raise NonFiniteInput("points must be finite")
    return arr, single


def _shifts(d):
    return np.array(list(itertools.product((-1.0, 0.0, 1.0), repeat=d)))


def _ratio_sum(num, r):
    # sum_k num_k^2 / r_k^2 with 0/0 = 0 and x/0 = inf
    with np.errstate(divide="ignore", invalid="ignore"):
        q = np.where(r > 0, num**2 / np.where(r > 0, r, 1.0) ** 2, np.where(num == 0, 0.0, np.inf))
    return q.sum(axis=-1)


def _encode(values):
    return [v if math.isfinite(v) else ("inf" if v > 0 else "-inf") for v in map(float, values)]


def _decode(values):
    return np.array([float(v) for v in values])


class Region:
    """Closed subset of R^d (or of the torus, through its periodic lift)."""

    metric = EUCLIDEAN
    dim = None

    def _distance(self, X):
        raise NotImplementedError

    def _complement_distance(self, X):
        raise NotImplementedError

    def _contains(self, X):
        raise NotImplementedError

    def _interior(self, X):
        return self._contains(X)

    def _check(self, X):
        if self.dim is not None and X.shape[1] != self.dim:
            raise DimensionMismatch(f"expected points in dimension {self.dim}, got {X.shape[1]}")

    def _lifted(self, X, fn, reduce):
        if self.metric != TORUS:
            return fn(X)
        vals = [fn(X + k) for k in _shifts(X.shape[1])]
        return reduce(np.stack(vals), axis=0)

    def distance(self, x):
        """Distance from each point to the region; ``inf`` for the empty set."""
        X, single = _points(x)
        self._check(X)
        out = self._lifted(X, self._distance, np.min)
        return out[0] if single else out

    def complement_distance(self, x):
        """Distance from each point to the closure of the complement."""
        X, single = _points(x)
        self._check(X)
        out = self._lifted(X, self._complement_distance, np.max)
        return out[0] if single else out

    def contains(self, x):
        X, single = _points(x)
        self._check(X)
        out = self._lifted(X, self._contains, np.any)
        return out[0] if single else out

    def interior(self, x):
        X, single = _points(x)
        self._check(X)
        out = self._lifted(X, self._interior, np.any)
        return out[0] if single else out

    @property
    def is_empty(self):
        return False

    def to_dict(self):
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class Empty(Region):
    dim: int | None = None
    metric: str = EUCLIDEAN

    @property
    def is_empty(self):
        return True

    def _distance(self, X):
        return np.full(len(X), np.inf)

    def _complement_distance(self, X):
        return np.zeros(len(X))

    def _contains(self, X):
        return np.zeros(len(X), dtype=bool)

    def to_dict(self):
        return {"type": "Empty", "dim": self.dim, "metric": self.metric}


@dataclass(frozen=True, eq=False)
class Full(Region):
    dim: int | None = None
    metric: str = EUCLIDEAN

    def _distance(self, X):
        return np.zeros(len(X))

    def _complement_distance(self, X):
        return np.full(len(X), np.inf)

    def _contains(self, X):
        return np.ones(len(X), dtype=bool)

    def to_dict(self):
        return {"type": "Full", "dim": self.dim, "metric": self.metric}


@dataclass(frozen=True, eq=False)
class Rectangle(Region):
    """Closed box ``[lo, hi]``; infinite bounds are allowed."""

    lo: np.ndarray
    hi: np.ndarray
    metric: str = EUCLIDEAN

    def __post_init__(self):
        lo = np.asarray(self.lo, dtype=float)
        hi = np.asarray(self.hi, dtype=float)
        if lo.shape != hi.shape or lo.ndim != 1:
            raise DimensionMismatch("lo and hi must be vectors of equal length")
        if np.any(lo > hi):
            raise ValueError("rectangle needs lo <= hi; use rectangle() for the empty case")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dim(self):
        return len(self.lo)

    def _distance(self, X):
        excess = np.maximum(np.maximum(self.lo - X, X - self.hi), 0.0)
        return np.sqrt((excess**2).sum(axis=1))

    def _complement_distance(self, X):
        slack = np.minimum(X - self.lo, self.hi - X).min(axis=1)
        return np.maximum(slack, 0.0)

    def _contains(self, X):
        return np.all((X >= self.lo) & (X <= self.hi), axis=1)

    def _interior(self, X):
        return np.all((X > self.lo) & (X < self.hi), axis=1)

    def to_dict(self):
        return {"type": "Rectangle", "lo": _encode(self.lo), "hi": _encode(self.hi), "metric": self.metric}


@dataclass(frozen=True, eq=False)
class Ball(Region):
    """Closed Euclidean ball."""

    center: np.ndarray
    radius: float
    metric: str = EUCLIDEAN

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))
        if self.radius < 0:
            raise ValueError("negative radius; use ball() for the empty case")
        object.__setattr__(self, "radius", float(self.radius))

    @property
    def dim(self):
        return len(self.center)

    def _norm(self, X):
        return np.linalg.norm(X - self.center, axis=1)

    def _distance(self, X):
        return np.maximum(self._norm(X) - self.radius, 0.0)

    def _complement_distance(self, X):
        return np.maximum(self.radius - self._norm(X), 0.0)

    def _contains(self, X):
        return self._norm(X) <= self.radius

    def _interior(self, X):
        return self._norm(X) < self.radius

    def to_dict(self):
        return {"type": "Ball", "center": _encode(self.center), "radius": self.radius, "metric": self.metric}


@dataclass(frozen=True, eq=False)
class SublevelSet(Region):
    """``{x : |x - center|_ord <= level}`` with distances in the same norm."""

    level: float
    dim: int
    ord: float = 2
    center: np.ndarray | None = None
    metric: str = EUCLIDEAN

    def __post_init__(self):
        if self.ord not in (1, 2, np.inf):
            raise ValueError("ord must be 1, 2 or inf")
        c = np.zeros(self.dim) if self.center is None else np.asarray(self.center, dtype=float)
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "level", float(self.level))

    def _norm(self, X):
        return np.linalg.norm(X - self.center, ord=self.ord, axis=1)

    def _distance(self, X):
        if self.level == np.inf:
            return np.zeros(len(X))
        return np.maximum(self._norm(X) - self.level, 0.0)

    def _complement_distance(self, X):
        return np.maximum(self.level - self._norm(X), 0.0)

    def _contains(self, X):
        return self._norm(X) <= self.level

    def _interior(self, X):
        return self._norm(X) < self.level

    def to_dict(self):
        return {
            "type": "SublevelSet",
            "level": _encode([self.level])[0],
            "dim": self.dim,
            "ord": _encode([self.ord])[0],
            "center": _encode(self.center),
            "metric": self.metric,
        }


class _AxisEllipsoidBase(Region):
    """Shared machinery for sets built from an axis-aligned ellipsoid and a cell."""

    def _setup(self, lo, hi, axes):
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        axes = np.asarray(axes, dtype=float)
        if not (lo.shape == hi.shape == axes.shape) or lo.ndim != 1:
            raise DimensionMismatch("cell bounds and semi-axes must share one length")
        if np.any(lo > hi) or np.any(axes < 0):
            raise ValueError("cell must satisfy lo <= hi and semi-axes must be nonnegative")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        object.__setattr__(self, "axes", axes)

    @property
    def dim(self):
        return len(self.axes)

    @property
    def cell_center(self):
        return 0.5 * (self.lo + self.hi)

    @property
    def half_width(self):
        return 0.5 * (self.hi - self.lo)

    def _offset(self, X):
        return np.abs(X - self.cell_center)


@dataclass(frozen=True, eq=False)
class ClampEllipsoidUnion(_AxisEllipsoidBase):
    """Union of ``Ellip(x, axes)`` over ``x`` in the cell ``[lo, hi]``."""

    lo: np.ndarray
    hi: np.ndarray
    axes: np.ndarray
    metric: str = EUCLIDEAN

    def __post_init__(self):
        self._setup(self.lo, self.hi, self.axes)

    def _excess(self, X):
        return np.maximum(self._offset(X) - self.half_width, 0.0)

    def _contains(self, X):
        return _ratio_sum(self._excess(X), self.axes) <= 1.0

    def _interior(self, X):
        return _ratio_sum(self._excess(X), self.axes) < 1.0

    def _distance(self, X):
        out = np.zeros(len(X))
        delta = self._excess(X)
        outside = _ratio_sum(delta, self.axes) > 1.0
        if outside.any():
            out[outside] = _kernels.batch_union_outside(np.ascontiguousarray(delta[outside]), self.axes)
        return out

    def _complement_distance(self, X):
        out = np.zeros(len(X))
        inside = self._interior(X)
        if inside.any():
            w = self._offset(X[inside]) - self.half_width
            out[inside] = _kernels.batch_exterior(np.ascontiguousarray(w), self.axes)
        return out

    def to_dict(self):
        return {
            "type": "ClampEllipsoidUnion",
            "lo": _encode(self.lo),
            "hi": _encode(self.hi),
            "axes": _encode(self.axes),
            "metric": self.metric,
        }


@dataclass(frozen=True, eq=False)
class ClampEllipsoidIntersection(_AxisEllipsoidBase):
    """Intersection of ``Ellip(x, axes)`` over ``x`` in the cell ``[lo, hi]``."""

    lo: np.ndarray
    hi: np.ndarray
    axes: np.ndarray
    metric: str = EUCLIDEAN

    def __post_init__(self):
        self._setup(self.lo, self.hi, self.axes)
        if _ratio_sum(self.half_width, self.axes) > 1.0:
            raise ValueError("empty intersection; use clamp_intersection() for that case")

    def _reach(self, X):
        return self._offset(X) + self.half_width

    def _contains(self, X):
        return _ratio_sum(self._reach(X), self.axes) <= 1.0

    def _interior(self, X):
        return _ratio_sum(self._reach(X), self.axes) < 1.0

    def _distance(self, X):
        out = np.zeros(len(X))
        outside = ~self._contains(X)
        if outside.any():
            a = np.ascontiguousarray(self._offset(X[outside]))
            out[outside] = _kernels.batch_intersection_outside(a, self.half_width, self.axes)
        return out

    def _complement_distance(self, X):
        out = np.zeros(len(X))
        inside = self._interior(X)
        if inside.any():
            w = np.ascontiguousarray(self._reach(X[inside]))
            out[inside] = _kernels.batch_exterior(w, self.axes)
        return out

    def to_dict(self):
        return {
            "type": "ClampEllipsoidIntersection",
            "lo": _encode(self.lo),
            "hi": _encode(self.hi),
            "axes": _encode(self.axes),
            "metric": self.metric,
        }


class Ellipsoid(ClampEllipsoidUnion):
    """Axis-aligned ellipsoid, the clamp union over a single-point cell."""

    def __init__(self, center, axes, metric=EUCLIDEAN):
        c = np.asarray(center, dtype=float)
        super().__init__(c, c, axes, metric)

    @property
    def center(self):
        return self.lo

    def to_dict(self):
        return {"type": "Ellipsoid", "center": _encode(self.center), "axes": _encode(self.axes), "metric": self.metric}


@dataclass(frozen=True, eq=False)
class Complement(Region):
    """Closure of the complement of ``inner``."""

    inner: Region

    @property
    def dim(self):
        return self.inner.dim

    @property
    def metric(self):
        return self.inner.metric

    def distance(self, x):
        return self.inner.complement_distance(x)

    def complement_distance(self, x):
        return self.inner.distance(x)

    def contains(self, x):
        out = self.inner.interior(x)
        return ~out if isinstance(out, np.ndarray) else not out

    def interior(self, x):
        out = self.inner.contains(x)
        return ~out if isinstance(out, np.ndarray) else not out

    def to_dict(self):
        return {"type": "Complement", "inner": self.inner.to_dict()}


# normalising constructors: degenerate parameters collapse to Empty or Full


def rectangle(lo, hi, metric=EUCLIDEAN):
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    if np.any(lo > hi):
        return Empty(len(lo), metric)
    if np.all(lo == -np.inf) and np.all(hi == np.inf):
        return Full(len(lo), metric)
    return Rectangle(lo, hi, metric)


def ball(center, radius, metric=EUCLIDEAN):
    center = np.asarray(center, dtype=float)
    if radius < 0:
        return Empty(len(center), metric)
    if radius == np.inf:
        return Full(len(center), metric)
    return Ball(center, radius, metric)


def sublevel(level, dim, ord=2, center=None, metric=EUCLIDEAN):
    if level < 0:
        return Empty(dim, metric)
    if level == np.inf:
        return Full(dim, metric)
    return SublevelSet(level, dim, ord, center, metric)


def ellipsoid(center, axes, metric=EUCLIDEAN):
    """Ellipsoid with the convention that any negative semi-axis gives the empty set."""
    axes = np.asarray(axes, dtype=float)
    if np.any(axes < 0):
        return Empty(len(axes), metric)
    return Ellipsoid(center, axes, metric)


def clamp_union(lo, hi, axes, metric=EUCLIDEAN):
    axes = np.asarray(axes, dtype=float)
    if np.any(axes < 0):
        return Empty(len(axes), metric)
    return ClampEllipsoidUnion(lo, hi, axes, metric)


def clamp_intersection(lo, hi, axes, metric=EUCLIDEAN):
    axes = np.asarray(axes, dtype=float)
    half = 0.5 * (np.asarray(hi, dtype=float) - np.asarray(lo, dtype=float))
    if np.any(axes < 0) or _ratio_sum(half, axes) > 1.0:
        return Empty(len(axes), metric)
    return ClampEllipsoidIntersection(lo, hi, axes, metric)


def complement(region):
    if isinstance(region, Complement):
        return region.inner
    if isinstance(region, Empty):
        return Full(region.dim, region.metric)
    if isinstance(region, Full):
        return Empty(region.dim, region.metric)
    return Complement(region)


def region_from_dict(data):
    kind = data["type"]
    metric = data.get("metric", EUCLIDEAN)
    if kind == "Empty":
        return Empty(data.get("dim"), metric)
    if kind == "Full":
        return Full(data.get("dim"), metric)
    if kind == "Rectangle":
        return Rectangle(_decode(data["lo"]), _decode(data["hi"]), metric)
    if kind == "Ball":
        return Ball(_decode(data["center"]), float(data["radius"]), metric)
    if kind == "SublevelSet":
        return SublevelSet(float(data["level"]), int(data["dim"]), float(data["ord"]), _decode(data["center"]), metric)
    if kind == "Ellipsoid":
        return Ellipsoid(_decode(data["center"]), _decode(data["axes"]), metric)
    if kind == "ClampEllipsoidUnion":
        return ClampEllipsoidUnion(_decode(data["lo"]), _decode(data["hi"]), _decode(data["axes"]), metric)
    if kind == "ClampEllipsoidIntersection":
        return ClampEllipsoidIntersection(_decode(data["lo"]), _decode(data["hi"]), _decode(data["axes"]), metric)
    if kind == "Complement":
        return Complement(region_from_dict(data["inner"]))
    raise ValueError(f"unknown region type {kind!r}")


def dist_to_set(x, region):
    """Distance from ``x`` (one point or an array of points) to ``region``."""
    return region.distance(x)


def _endpoint_gap(inner, outer):
    # outer - inner where equal infinite endpoints leave an unbounded gap
    with np.errstate(invalid="ignore"):
        g = outer - inner
    return np.where(np.isnan(g), np.inf, g)


def ellipsoid_gap(a, b):
    """Lower bound on d(Ellip(x, a), R^d minus Ellip(x, b)) for semi-axes a <= b."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if np.any(a > b) or np.any(b <= 0):
        return 0.0
    return float(b.min() * (1.0 - (a / b).max()))


def _nested_gap(A, C):
    # lower bound on d(A, complement of C)
    if isinstance(A, Rectangle) and isinstance(C, Rectangle):
        g = np.minimum(_endpoint_gap(C.lo, A.lo), _endpoint_gap(A.hi, C.hi)).min()
        return float(max(g, 0.0))
    if isinstance(A, Ball) and isinstance(C, Ball):
        return max(C.radius - A.radius - float(np.linalg.norm(A.center - C.center)), 0.0)
    if isinstance(A, SublevelSet) and isinstance(C, SublevelSet) and A.ord == C.ord:
        shift = float(np.linalg.norm(A.center - C.center, ord=A.ord))
        return max(C.level - A.level - shift, 0.0)
    same_kind = type(A) is type(C) or {type(A), type(C)} <= {Ellipsoid, ClampEllipsoidUnion}
    if isinstance(A, _AxisEllipsoidBase) and same_kind:
        if np.array_equal(A.lo, C.lo) and np.array_equal(A.hi, C.hi):
            return ellipsoid_gap(A.axes, C.axes)
    return 0.0


def set_gap(A, B):
    """Certified lower bound on ``d(A, B)``.

    Exact for the nested pairs used by the bracket families, where one set
    is the complement of a region containing the other; zero otherwise.
    """
    if A.is_empty or B.is_empty:
        return math.inf
    if isinstance(A, Complement) and not isinstance(B, Complement):
        A, B = B, A
    if isinstance(B, Complement) and not isinstance(A, Complement):
        return _nested_gap(A, B.inner)
    return 0.0


@dataclass(frozen=True, eq=False)
class TransitionFunction:
    """``T[A, B](x) = d_B(x) / (d_B(x) + d_A(x))`` with the empty-set conventions."""

    A: Region
    B: Region
    gap_lower_bound: float
    alpha: float = 1.0

    def __post_init__(self):
        if not 0 < self.alpha <= 1:
            raise ValueError("alpha must lie in (0, 1]")
        if self.gap_lower_bound < 0:
            raise ValueError("gap_lower_bound must be nonnegative")

    @property
    def is_constant(self):
        return self.A.is_empty or self.B.is_empty

    def __call__(self, x):
        return transition_eval(self, x)

    def to_dict(self):
        return {
            "A": self.A.to_dict(),
            "B": self.B.to_dict(),
            "gap_lower_bound": _encode([self.gap_lower_bound])[0],
            "alpha": self.alpha,
        }


def transition(A, B, alpha=1.0, gap=None):
    """Build ``T[A, B]``; the gap defaults to :func:`set_gap`."""
    if gap is None:
        gap = set_gap(A, B)
    return TransitionFunction(A, B, float(gap), alpha)


def transition_eval(T, x):
    X, single = _points(x)
    if T.A.is_empty:
        out = np.zeros(len(X))
    elif T.B.is_empty:
        out = np.ones(len(X))
    else:
        in_a = np.atleast_1d(T.A.contains(X))
        in_b = np.atleast_1d(T.B.contains(X)) & ~in_a
        out = in_a.astype(float)
        band = ~(in_a | in_b)
        if band.any():
            # distances are only needed strictly between the two sets
            Xb = X[band]
            da = np.atleast_1d(T.A.distance(Xb))
            db = np.atleast_1d(T.B.distance(Xb))
            out[band] = db / (db + da)
    return out[0] if single else out


def holder_bound(T):
    """Upper bound ``1 + (3 / gap)^alpha`` on the Hölder norm of ``T``."""
    if T.is_constant or T.gap_lower_bound == math.inf:
        return 1.0
    if T.gap_lower_bound <= 0:
        raise ZeroGap("transition sets touch; no Hölder bound available")
    return 1.0 + (3.0 / T.gap_lower_bound) ** T.alpha


def euclidean_distance(X, Y):
    return np.linalg.norm(X - Y, axis=-1)


def torus_distance(X, Y):
    diff = X - Y
    return np.linalg.norm(diff - np.round(diff), axis=-1)


def empirical_holder_norm(f, sampler, pairs, alpha, seed=0, metric=euclidean_distance):
    """Sampled lower estimate of ``sup|f| + sup |f(x)-f(y)| / d(x,y)^alpha``.

    ``sampler(rng, n)`` returns ``n`` points of the domain.  Half of the
    pairs are independent draws; the other half pull the second point
    towards the first by a log-uniform factor, which probes small scales
    while staying inside a convex domain.
    """
    if pairs < 1:
        raise ValueError("pairs must be at least 1")
    rng = generator(seed, "holder")
    X = np.atleast_2d(sampler(rng, pairs))
    Y = np.atleast_2d(sampler(rng, pairs))
    t = 10.0 ** rng.uniform(-6, 0, size=(pairs, 1))
    Z = X + t * (Y - X)
    fx, fy, fz = (np.asarray(f(P), dtype=float).reshape(pairs) for P in (X, Y, Z))
    sup = max(np.abs(fx).max(), np.abs(fy).max(), np.abs(fz).max())
    best = 0.0
    for P, fp in ((Y, fy), (Z, fz)):
        dist = metric(X, P)
        ok = dist > 0
        if ok.any():
            best = max(best, float((np.abs(fx - fp)[ok] / dist[ok] ** alpha).max()))
    return float(sup + best)
