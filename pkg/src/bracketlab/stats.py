"""Monte Carlo checks of the empirical process along a stationary process.

All estimators consume ``process.paths(n, replicas, seed)``, a stream of
``(replicas, block, d)`` arrays, so a replica's orbit is never held in
memory whole.  Replicas start from independent Lebesgue-distributed
points and are reduced in replica order, making every statistic a pure
function of the seed.
"""
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import special

from . import geometry as geo
from .errors import ConfigError, DegenerateSample, UnstableEstimate
from .seeding import generator

# ----------------------------------------------------------------------------
# observables


@dataclass(frozen=True, eq=False)
class Observable:
    """``f`` on points of shape (n, d), with its mean and declared bounds.

    ``mean_se`` is zero when the mean is exact.
    """

    f: Callable
    mean: float
    sup_bound: float
    holder_cap: float | None = None
    mean_se: float = 0.0
    name: str = "f"
    spec: dict = field(default_factory=dict)

    def __call__(self, X):
        return np.asarray(self.f(np.atleast_2d(X)), dtype=float)


def constant(value):
    value = float(value)
    return Observable(lambda X: np.full(len(X), value), value, abs(value), abs(value), name="constant",
                      spec={"type": "constant", "value": value})


def rectangle_indicator(lo, hi):
    """``1_[lo, hi)`` on the unit cube; the mean is its exact volume."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    vol = float(np.prod(np.clip(hi, 0, 1) - np.clip(lo, 0, 1)))

    def f(X):
        return np.all((X >= lo) & (X < hi), axis=1).astype(float)

    return Observable(f, vol, 1.0, None, name="rectangle-indicator",
                      spec={"type": "rectangle-indicator", "lo": lo.tolist(), "hi": hi.tolist()})


def character(m, alpha=1.0):
    """``cos(2 pi m . x)``, a real character of the torus."""
    m = np.asarray(m, dtype=float)
    mean = 1.0 if not m.any() else 0.0
    lip = 2 * math.pi * float(np.linalg.norm(m))
    # |cos a - cos b| <= min(lip d, 2)
    cap = 1.0 + lip**alpha * 2 ** (1 - alpha) if lip else 1.0

    def f(X):
        return np.cos(2 * math.pi * (X @ m))

    return Observable(f, mean, 1.0, cap, name="character",
                      spec={"type": "character", "m": m.astype(int).tolist()})


def ball_transition_mean(r_in, r_out):
    """Exact Lebesgue mean of the radial ramp between two planar balls."""
    band = (2 * math.pi * (r_out**3 / 6 - r_out * r_in**2 / 2 + r_in**3 / 3)) / (r_out - r_in)
    return math.pi * r_in**2 + band


def ball_transition(center, r_in, r_out, alpha=1.0):
    """``T[B(c, r_in), complement of B(c, r_out)]``, kept off the cube boundary."""
    center = np.asarray(center, dtype=float)
    if not 0 <= r_in < r_out:
        raise ValueError("need 0 <= r_in < r_out")
    if len(center) == 2 and np.all(center - r_out >= 0) and np.all(center + r_out <= 1):
        mean, se = ball_transition_mean(r_in, r_out), 0.0
    else:
        mean, se = None, 0.0
    T = geo.transition(geo.ball(center, r_in), geo.complement(geo.ball(center, r_out)), alpha)
    obs = Observable(T, 0.0 if mean is None else mean, 1.0, geo.holder_bound(T), se, name="ball-transition",
                     spec={"type": "ball-transition", "center": center.tolist(), "r_in": r_in, "r_out": r_out})
    if mean is None:
        return monte_carlo_mean(obs, len(center))
    return obs


def monte_carlo_mean(obs, dim, n=1_000_000, seed=0):
    """Replace the mean of ``obs`` by a Lebesgue Monte Carlo estimate with its SE."""
    X = generator(seed, "observable-mean").random((n, dim))
    v = obs(X)
    return Observable(obs.f, float(v.mean()), obs.sup_bound, obs.holder_cap, float(v.std(ddof=1) / math.sqrt(n)),
                      obs.name, obs.spec)


def combine(observables, weights):
    """``sum_j w_j f_j`` with the matching mean."""
    w = np.asarray(weights, dtype=float)
    if len(w) != len(observables):
        raise ValueError("one weight per observable")
    fs = list(observables)

    def f(X):
        return sum(wj * fj(X) for wj, fj in zip(w, fs))

    mean = float(sum(wj * fj.mean for wj, fj in zip(w, fs)))
    se = float(math.sqrt(sum((wj * fj.mean_se) ** 2 for wj, fj in zip(w, fs))))
    sup = float(np.abs(w) @ [fj.sup_bound for fj in fs])
    return Observable(f, mean, sup, None, se, "combination",
                      {"type": "combination", "weights": w.tolist(), "terms": [fj.spec for fj in fs]})


def centered(obs):
    """``f - mean f``."""
    return Observable(lambda X: obs(X) - obs.mean, 0.0, obs.sup_bound + abs(obs.mean), obs.holder_cap,
                      obs.mean_se, obs.name, {"type": "centered", "inner": obs.spec})


def observable_from_spec(spec):
    """Build an observable from its JSON description."""
    if not isinstance(spec, dict) or "type" not in spec:
        raise ConfigError("observable", "must be an object with a 'type'")
    kind = spec["type"]
    try:
        if kind == "rectangle-indicator":
            return rectangle_indicator(spec["lo"], spec["hi"])
        if kind == "character":
            return character(spec["m"])
        if kind == "ball-transition":
            return ball_transition(spec["center"], float(spec["r_in"]), float(spec["r_out"]))
        if kind == "constant":
            return constant(spec["value"])
        if kind == "centered":
            return centered(observable_from_spec(spec["inner"]))
        if kind == "combination":
            return combine([observable_from_spec(t) for t in spec["terms"]], spec["weights"])
    except KeyError as err:
        raise ConfigError(f"observable.{err.args[0]}", "missing") from None
    raise ConfigError("observable.type", f"unknown observable {kind!r}")


# ----------------------------------------------------------------------------
# empirical process


def u_n(f, orbit):
    """``sqrt(n) (F_n f - mu f)`` along one orbit of shape (n, d)."""
    orbit = np.atleast_2d(orbit)
    n = len(orbit)
    # subtract first so that a constant observable gives exactly zero
    return float(np.sum(f(orbit) - f.mean) / math.sqrt(n))


def centered_sums(observables, process, n, replicas, seed, checkpoints=None):
    """``sum_{i<n} (f_j(X_i) - mu f_j)`` per replica and observable.

    Returns shape (replicas, k), or (len(checkpoints), replicas, k) with
    partial sums at each checkpoint when ``checkpoints`` is given.
    """
    k = len(observables)
    total = np.zeros((replicas, k))
    marks = sorted(checkpoints) if checkpoints is not None else [n]
    if marks[-1] != n:
        raise ValueError("the last checkpoint must equal n")
    out = []
    done = 0
    for block in process.paths(n, replicas, seed):
        b = block.shape[1]
        flat = block.reshape(-1, block.shape[2])
        vals = np.stack([(obs(flat) - obs.mean).reshape(replicas, b) for obs in observables], axis=2)
        csum = np.cumsum(vals, axis=1)
        while marks and done < marks[0] <= done + b:
            out.append(total + csum[:, marks[0] - done - 1])
            marks.pop(0)
        total = total + csum[:, -1]
        done += b
    if checkpoints is None:
        return out[0]
    return np.stack(out)


# ----------------------------------------------------------------------------
# Anderson-Darling with estimated mean and variance

AD_LEVELS = (0.15, 0.10, 0.05, 0.025, 0.01)
AD_CRITICAL = (0.576, 0.656, 0.787, 0.918, 1.092)


def anderson_darling(x):
    """Normality statistic ``A^2`` with mean and variance estimated from ``x``."""
    x = np.sort(np.asarray(x, dtype=float))
    n = len(x)
    if n < 8:
        raise DegenerateSample("at least 8 values are needed")
    sd = x.std(ddof=1)
    if sd == 0:
        raise DegenerateSample("sample has zero variance")
    z = (x - x.mean()) / sd
    i = np.arange(1, n + 1)
    terms = (2 * i - 1) * (special.log_ndtr(z) + special.log_ndtr(-z[::-1]))
    return float(-n - terms.sum() / n)


def ad_pvalue(a2, n):
    """Asymptotic p-value of ``A^2`` after the small-sample correction (case 3)."""
    a = a2 * (1 + 0.75 / n + 2.25 / n**2)
    if a >= 0.6:
        p = math.exp(1.2937 - 5.709 * a + 0.0186 * a * a)
    elif a >= 0.34:
        p = math.exp(0.9177 - 4.279 * a - 1.38 * a * a)
    elif a >= 0.2:
        p = 1 - math.exp(-8.318 + 42.796 * a - 59.938 * a * a)
    else:
        p = 1 - math.exp(-13.436 + 101.14 * a - 223.73 * a * a)
    return min(max(p, 0.0), 1.0)


def ad_critical_value(level):
    """Critical value of the corrected statistic at one of :data:`AD_LEVELS`."""
    try:
        return AD_CRITICAL[AD_LEVELS.index(level)]
    except ValueError:
        raise ValueError(f"level must be one of {AD_LEVELS}") from None


# ----------------------------------------------------------------------------
# CLT and variance


@dataclass(frozen=True)
class CltDiagnostics:
    sigma2_hat: float
    ad_statistic: float
    p_value: float
    replicas: int
    n: int
    level: float
    passed: bool
    degenerate: bool = False
    direction: tuple | None = None

    def to_dict(self):
        return dict(self.__dict__)


_ZERO = 1e-12


def _clt_from_values(U, n, level, direction=None):
    R = len(U)
    if R < 8:
        raise DegenerateSample("at least 8 replicas are needed")
    sigma2 = float(U.var(ddof=1))
    scale = max(1.0, float(np.abs(U).max()))
    if float(np.abs(U - U.mean()).max()) <= _ZERO * scale:
        return CltDiagnostics(0.0, 0.0, 1.0, R, n, level, True, True, direction)
    a2 = anderson_darling(U)
    p = ad_pvalue(a2, R)
    return CltDiagnostics(sigma2, a2, p, R, n, level, p >= level, False, direction)


def replica_values(f, process, n, replicas, seed):
    """``U_n(f)`` for each replica."""
    return centered_sums([f], process, n, replicas, seed)[:, 0] / math.sqrt(n)


def clt_check(f, process, n, replicas, level=0.01, seed=0):
    """Anderson-Darling test of the replica values of ``U_n(f)`` against a normal law."""
    if replicas < 8:
        raise DegenerateSample("at least 8 replicas are needed")
    return _clt_from_values(replica_values(f, process, n, replicas, seed), n, level)


def random_directions(k, count, seed):
    rng = generator(seed, "direction")
    w = rng.standard_normal((count, k))
    return w / np.linalg.norm(w, axis=1, keepdims=True)


def finite_dim_check(observables, process, n, replicas, directions, level=0.01, seed=0):
    """Cramér-Wold check: one normality test per direction ``w`` of ``sum w_j U_n(f_j)``.

    ``directions`` is a count of random unit vectors or an explicit array.
    """
    if replicas < 8:
        raise DegenerateSample("at least 8 replicas are needed")
    k = len(observables)
    if np.ndim(directions) == 0:
        W = random_directions(k, int(directions), seed)
    else:
        W = np.atleast_2d(np.asarray(directions, dtype=float))
    if W.shape[1] != k:
        raise ValueError("directions must have one weight per observable")
    if np.any(np.linalg.norm(W, axis=1) == 0):
        raise ValueError("direction must be nonzero")
    U = centered_sums(observables, process, n, replicas, seed) / math.sqrt(n)
    return [_clt_from_values(U @ w, n, level, tuple(w.tolist())) for w in W]


@dataclass(frozen=True)
class VarianceEstimate:
    value: float
    se: float

    def __float__(self):
        return self.value


def variance_estimate(f, process, n, replicas, seed=0):
    """Replica variance of ``U_n(f)`` with a fourth-moment standard error."""
    if replicas < 8:
        raise DegenerateSample("at least 8 replicas are needed")
    U = replica_values(f, process, n, replicas, seed)
    c = U - U.mean()
    var = float(c.var(ddof=1))
    m4 = float(np.mean(c**4))
    return VarianceEstimate(var, math.sqrt(max(m4 - var**2, 0.0) / replicas))


# ----------------------------------------------------------------------------
# covariance decay


@dataclass(frozen=True)
class MixingEstimate:
    lags: tuple
    covariances: tuple
    ses: tuple
    theta: float | None
    r_squared: float | None
    fitted_lags: tuple
    status: str

    def to_dict(self):
        return dict(self.__dict__)


def lag_covariances(f, process, max_lag, n, replicas, seed=0):
    """``Cov(f(X_0), f(X_k))`` for ``k = 0..max_lag`` from replica and time averages.

    Returns the pooled estimates and their standard errors across replicas.
    """
    K = int(max_lag)
    acc = np.zeros((replicas, K + 1))
    cnt = np.zeros(K + 1)
    carry = np.zeros((replicas, 0))
    for block in process.paths(n, replicas, seed):
        b = block.shape[1]
        g = (f(block.reshape(-1, block.shape[2])) - f.mean).reshape(replicas, b)
        buf = np.concatenate([carry, g], axis=1)
        start = carry.shape[1]
        for k in range(K + 1):
            # products g_t g_{t+k} whose later index lies in this block
            lo = max(start - k, 0)
            hi = buf.shape[1] - k
            if hi > lo:
                acc[:, k] += np.sum(buf[:, lo:hi] * buf[:, lo + k:hi + k], axis=1)
                cnt[k] += hi - lo
        carry = buf[:, -K:] if K else carry
    per_replica = acc / np.maximum(cnt, 1)
    est = per_replica.mean(axis=0)
    se = per_replica.std(axis=0, ddof=1) / math.sqrt(replicas)
    return est, se


def covariance_decay(f, process, max_lag, n, replicas, seed=0, floor=5.0):
    """Estimate lag covariances and fit ``|c_k| ~ C theta^k`` above a noise floor."""
    if max_lag < 4:
        raise ValueError("max_lag must be at least 4")
    est, se = lag_covariances(f, process, max_lag, n, replicas, seed)
    lags = np.arange(max_lag + 1)
    keep = np.abs(est) > floor * se
    theta = r2 = None
    status = "below-noise-floor"
    if keep.sum() >= 3:
        x, y = lags[keep], np.log(np.abs(est[keep]))
        slope, icpt = np.polyfit(x, y, 1)
        resid = y - (slope * x + icpt)
        ss = float(np.sum((y - y.mean()) ** 2))
        r2 = 1.0 - float(np.sum(resid**2)) / ss if ss > 0 else 1.0
        theta = float(min(math.exp(slope), 1.0))
        status = "fitted"
    return MixingEstimate(tuple(lags.tolist()), tuple(est.tolist()), tuple(se.tolist()), theta, r2,
                          tuple(lags[keep].tolist()), status)


# ----------------------------------------------------------------------------
# moment growth


@dataclass(frozen=True)
class MomentGrowth:
    order: int
    n_grid: tuple
    moments: tuple
    ses: tuple
    exponent: float
    slack: float
    passed: bool
    implied_C: tuple

    def to_dict(self):
        return dict(self.__dict__)


def moment_bound_shape(n, p, f_s, f_holder, a):
    """``sum_{i=1}^p n^i |f|_s^i log^{2p + a i}(|f|_B + 1)`` without the constant."""
    L = math.log(f_holder + 1)
    return sum(n**i * f_s**i * L ** (2 * p + a * i) for i in range(1, p + 1))


def moment_growth(f, process, p, n_grid, replicas, seed=0, slack=0.2, a=-1, s=2.0):
    """Fit the growth exponent of ``E[(sum_i (f(X_i) - mu f))^{2p}]`` in ``n``.

    Partial sums of one run are read off at each grid point.  Passes when
    the exponent is at most ``p + slack``.
    """
    if p not in (1, 2, 3):
        raise ValueError("p must be 1, 2 or 3")
    grid = sorted(int(v) for v in n_grid)
    if len(grid) < 4:
        raise ValueError("n_grid needs at least 4 points")
    S = centered_sums([f], process, grid[-1], replicas, seed, checkpoints=grid)[:, :, 0]
    powers = S ** (2 * p)
    moments = powers.mean(axis=1)
    ses = powers.std(axis=1, ddof=1) / math.sqrt(replicas)
    if moments[-1] <= 0 or ses[-1] / moments[-1] > 0.5:
        raise UnstableEstimate("relative SE of the largest-n moment exceeds 50%")
    exponent = float(np.polyfit(np.log(grid), np.log(moments), 1)[0])
    f_s = _ls_norm(f, process.dim, s, seed)
    cap = f.holder_cap if f.holder_cap is not None else f.sup_bound
    implied = tuple(float(m / moment_bound_shape(n, p, f_s, cap, a)) for m, n in zip(moments, grid))
    return MomentGrowth(2 * p, tuple(grid), tuple(moments.tolist()), tuple(ses.tolist()), exponent, slack,
                        exponent <= p + slack, implied)


def _ls_norm(f, dim, s, seed, n=200_000):
    X = generator(seed, "observable-norm").random((n, dim))
    return float(np.mean(np.abs(f(X)) ** s) ** (1 / s))
