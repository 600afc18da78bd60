"""Bracketing-number curves and the thresholds derived from them.

Counts are those of the explicit constructions, so every verdict here is
about the constructed covering: an upper bound on the minimal bracketing
number, which is all a convergence criterion needs.
"""
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import DomainError, GammaTooSmall, InsufficientCurve


@dataclass(frozen=True)
class EntropyCurve:
    deltas: tuple
    counts: tuple
    caps: tuple
    rprime: float | None = None
    gamma: float | None = None
    C: float | None = None

    def __post_init__(self):
        if not len(self.deltas) == len(self.counts) == len(self.caps):
            raise ValueError("deltas, counts and caps must have equal length")
        if any(b >= a for a, b in zip(self.deltas, self.deltas[1:])):
            raise ValueError("deltas must be strictly decreasing")

    def __len__(self):
        return len(self.deltas)

    def running_sup(self):
        """``sup_{eps <= delta <= 1} N(delta)`` at each grid point."""
        return tuple(int(v) for v in np.maximum.accumulate(np.array(self.counts, dtype=object)))

    def rows(self):
        return [{"delta": d, "count": int(n), "cap": a} for d, n, a in zip(self.deltas, self.counts, self.caps)]


def parse_delta_grid(text):
    """``"1e-3:1e-1:16log"`` into 16 log-spaced deltas, largest first."""
    try:
        lo, hi, spec = text.split(":")
        lo, hi = float(lo), float(hi)
        if spec.endswith("log"):
            grid = np.geomspace(hi, lo, int(spec[:-3]))
        else:
            grid = np.linspace(hi, lo, int(spec))
    except ValueError as err:
        raise ValueError(f"bad delta grid {text!r}: expected 'lo:hi:Nlog'") from err
    if not 0 < lo < hi:
        raise ValueError("delta grid needs 0 < lo < hi")
    return [float(v) for v in grid]


def log_log_slope(x, y):
    """Least-squares slope of ``log y`` against ``log x``."""
    lx = np.log(np.asarray(x, dtype=float))
    ly = np.log(np.asarray([float(v) for v in y]))
    return float(np.polyfit(lx, ly, 1)[0])


def entropy_curve(family_builder, delta_grid, rprime=None, gamma=None):
    """Build the family at each ``delta`` and record ``(delta, count, cap)``."""
    grid = sorted((float(d) for d in delta_grid), reverse=True)
    if any(not d > 0 for d in grid):
        raise ValueError("deltas must be positive")
    counts, caps = [], []
    for delta in grid:
        family = family_builder(delta)
        counts.append(int(family.count))
        caps.append(float(family.cap))
    return EntropyCurve(tuple(grid), tuple(counts), tuple(caps), rprime, gamma)


def fitted_exponent(curve, decades=None):
    """Exponent ``r'`` in ``N ~ delta^{-r'}``; ``decades`` restricts to the smallest deltas."""
    d = np.array(curve.deltas)
    n = np.array(curve.running_sup(), dtype=object)
    keep = np.ones(len(d), dtype=bool)
    if decades is not None:
        keep = d <= d.min() * 10.0**decades
    if keep.sum() < 2:
        keep = np.zeros(len(d), dtype=bool)
        keep[-2:] = True
    return max(-log_log_slope(d[keep], n[keep]), 0.0)


def cap_constant(curve, gamma):
    """Smallest ``C`` with ``cap <= exp(C delta^{-1/gamma})`` on the grid."""
    return max(math.log(a) * d ** (1.0 / gamma) for d, a in zip(curve.deltas, curve.caps))


@dataclass(frozen=True)
class IntegralVerdict:
    converges: bool
    rprime: float
    rprime_declared: bool
    criterion_r_min: float
    numeric_integral: float
    numeric_integral_tail: float
    cap_constant: float | None

    def to_dict(self):
        return dict(self.__dict__)


def integral_condition(curve, r, gamma):
    """Decide ``int_0^1 eps^r sup_{eps<=delta<=1} N(delta)^2 d eps < inf``.

    With a declared exponent the decision is exact for ``N = O(delta^{-r'})``:
    the integral converges iff ``r > 2 r' - 1``.  Otherwise ``r'`` is fitted
    on the smallest decade of the curve.  The trapezoid value on the grid
    and the extrapolated tail below the grid are informational.
    """
    if not r > -1:
        raise ValueError("r must exceed -1")
    if not gamma > 1:
        raise ValueError("gamma must exceed 1")
    if len(curve) < 4:
        raise InsufficientCurve("at least 4 grid points are needed")
    declared = curve.rprime is not None
    rp = float(curve.rprime) if declared else fitted_exponent(curve, decades=1)
    converges = r > 2 * rp - 1

    eps = np.array(curve.deltas[::-1])
    sup = np.array([float(v) for v in curve.running_sup()[::-1]])
    u = np.log(eps)
    integrand = np.exp((r + 1) * u) * sup**2
    # d eps = eps du; the stretch (delta_max, 1] keeps the largest-delta count
    body = float(np.trapezoid(integrand, u))
    top = sup[-1] ** 2 * (1 - eps[-1] ** (r + 1)) / (r + 1)
    e0 = eps[0]
    c = sup[0] * e0**rp
    exponent = r - 2 * rp + 1
    tail = c**2 * e0**exponent / exponent if exponent > 0 else math.inf
    return IntegralVerdict(
        converges=bool(converges),
        rprime=rp,
        rprime_declared=declared,
        criterion_r_min=2 * rp - 1,
        numeric_integral=body + top,
        numeric_integral_tail=tail,
        cap_constant=cap_constant(curve, gamma),
    )


def _exact(x):
    return Fraction(x) if not isinstance(x, Fraction) else x


def moment_order_bound(r, gamma, a):
    """``(r + 1) gamma / (gamma - max(2 + a, 1))`` as an exact fraction, or the ``gamma -> inf`` limit."""
    floor_term = max(2 + _exact(a), Fraction(1))
    if gamma == math.inf:
        return _exact(r) + 1
    g = _exact(gamma)
    if g <= floor_term:
        raise GammaTooSmall(f"gamma must exceed max(2 + a, 1) = {float(floor_term)}")
    return (_exact(r) + 1) * g / (g - floor_term)


def min_moment_order(r, gamma, a):
    """Smallest integer ``p`` strictly above :func:`moment_order_bound`."""
    return math.floor(moment_order_bound(r, gamma, a)) + 1


def chaining_depth(n, q, eps):
    """``K = floor(log2(4 sqrt(n) / (2^q eps)))``.

    Then ``eps/4 <= 2^{-(q+K)} sqrt(n) <= eps/2``.
    """
    if n < 1 or not eps > 0:
        raise DomainError("need n >= 1 and eps > 0")
    x = 4.0 * math.sqrt(n) / (2.0**q * eps)
    if not x > 1:
        raise DomainError("4 sqrt(n) / (2^q eps) must exceed 1")
    # x = mantissa * 2^exp with mantissa in [1/2, 1), so floor(log2 x) = exp - 1
    return math.frexp(x)[1] - 1
