"""Scalar distance kernels for axis-aligned ellipsoids and their clamp variants.

All inputs are already reflected into the positive orthant around the
centre of the cell, so the kernels only see nonnegative offsets plus the
half-widths of the cell.  Each solves a one-dimensional secular equation
in the Lagrange multiplier by safeguarded Newton iteration.
"""
import numpy as np
from numba import njit

_ITER = 200
_TOL = 4e-16
_NEGLIGIBLE = 2.0**-70


@njit(cache=True, error_model="numpy")
def _ratio(num, r):
    if r > 0.0:
        return num * num / (r * r)
    if num == 0.0:
        return 0.0
    return np.inf


@njit(cache=True, error_model="numpy")
def _newton(x, f, df, lo, hi):
    # one step on f^(-1/2) - 1, which is close to linear near a lone pole;
    # falls back to bisection whenever the step leaves the bracket
    if f > 0.0 and df < 0.0 and np.isfinite(f):
        xn = x + 2.0 * (f ** -0.5 - 1.0) * f ** 1.5 / df
        if lo < xn < hi:
            return xn
    return 0.5 * (lo + hi)


@njit(cache=True, error_model="numpy")
def _converged(x, xn, lo, hi):
    # steps are judged relative to the iterate: roots hugging a pole can be
    # far below the bracket's scale
    return abs(xn - x) <= _TOL * abs(xn) or hi - lo <= _TOL * max(abs(lo), abs(hi))


@njit(cache=True, error_model="numpy")
def _union_eval(w, r, idx, n, mu):
    s = 0.0
    ds = 0.0
    for i in range(n):
        k = idx[i]
        den = r[k] * r[k] + mu
        t = r[k] * w[k] / den
        s += t * t
        ds -= 2.0 * t * t / den
    return s, ds


@njit(cache=True, error_model="numpy")
def union_outside_distance(delta, r):
    """Distance to {z: sum delta_k(z)^2 / r_k^2 <= 1} for clamp excesses ``delta``.

    ``delta[k]`` is the distance of the point's k-th coordinate to the
    k-th slab; the projection shrinks each excess by r^2/(r^2+mu).
    """
    d = delta.shape[0]
    g = 0.0
    for k in range(d):
        g += _ratio(delta[k], r[k])
    if g <= 1.0:
        return 0.0
    fixed = 0.0
    idx = np.empty(d, dtype=np.int64)
    n = 0
    norm = 0.0
    s0 = 0.0
    for k in range(d):
        if r[k] > 0.0:
            idx[n] = k
            n += 1
            norm += (r[k] * delta[k]) ** 2
            s0 += delta[k] * delta[k] / (r[k] * r[k])
        else:
            fixed += delta[k] * delta[k]
    if n == 0 or s0 <= 1.0:
        return np.sqrt(fixed)
    # the secular value is at most |r delta|^2 / mu^2, so this brackets the root
    lo, hi = 0.0, np.sqrt(norm)
    mu = 0.0
    for _ in range(_ITER):
        s, ds = _union_eval(delta, r, idx, n, mu)
        if s > 1.0:
            lo = mu
        else:
            hi = mu
        nxt = _newton(mu, s, ds, lo, hi)
        if _converged(mu, nxt, lo, hi):
            mu = nxt
            break
        mu = nxt
    out = fixed
    for i in range(n):
        k = idx[i]
        e = delta[k] * mu / (r[k] * r[k] + mu)
        out += e * e
    return np.sqrt(out)


@njit(cache=True, error_model="numpy")
def _intersection_eval(v, h, r, mu):
    s = 0.0
    ds = 0.0
    for k in range(v.shape[0]):
        if r[k] > 0.0:
            den = r[k] * r[k] + mu
            t = v[k] * r[k] / den
            floor = h[k] / r[k]
            if t > floor:
                s += t * t
                ds -= 2.0 * t * t / den
            else:
                s += floor * floor
    return s, ds


@njit(cache=True, error_model="numpy")
def intersection_outside_distance(a, h, r):
    """Distance to {z: sum (|z_k| + h_k)^2 / r_k^2 <= 1} from offset ``a`` >= 0.

    Assumes the set is non-empty.  Coordinates with r_k = 0 (and then
    h_k = 0) are pinned at the centre.
    """
    d = a.shape[0]
    v = np.empty(d)
    g = 0.0
    for k in range(d):
        v[k] = a[k] + h[k]
        g += _ratio(v[k], r[k])
    if g <= 1.0:
        return 0.0
    hi = 1.0
    while _intersection_eval(v, h, r, hi)[0] > 1.0:
        hi *= 2.0
    lo = 0.0
    mu = 0.0
    for _ in range(_ITER):
        s, ds = _intersection_eval(v, h, r, mu)
        if s > 1.0:
            lo = mu
        else:
            hi = mu
        nxt = _newton(mu, s, ds, lo, hi)
        if _converged(mu, nxt, lo, hi):
            mu = nxt
            break
        mu = nxt
    out = 0.0
    for k in range(d):
        if r[k] > 0.0:
            z = v[k] * r[k] * r[k] / (r[k] * r[k] + mu) - h[k]
            if z < 0.0:
                z = 0.0
        else:
            z = 0.0
        out += (z - a[k]) ** 2
    return np.sqrt(out)


@njit(cache=True, error_model="numpy")
def _secular(w, r2, mem, n, anchor, sign, delta):
    # multiplier mu = anchor + sign * delta; the pole at r2 == anchor stays exact
    s = 0.0
    ds = 0.0
    for i in range(n):
        k = mem[i]
        den = (r2[k] - anchor) - sign * delta
        q = w[k] * w[k] * r2[k] / (den * den)
        s += q
        ds += 2.0 * sign * q / den
    return s, ds


@njit(cache=True, error_model="numpy")
def _root(w, r2, mem, n, anchor, sign, dmax):
    # secular value decreases in delta on (0, dmax], exceeds 1 near 0 and is <= 1 at dmax
    pole = 0.0
    for i in range(n):
        k = mem[i]
        if r2[k] == anchor:
            pole += w[k] * w[k] * r2[k]
    lo, hi = 0.0, dmax
    # the pole terms alone already exceed 1 below sqrt(pole)
    x = min(np.sqrt(pole), 0.5 * dmax)
    for _ in range(_ITER):
        s, ds = _secular(w, r2, mem, n, anchor, sign, x)
        if s > 1.0:
            lo = x
        else:
            hi = x
        nxt = _newton(x, s, ds, lo, hi)
        if _converged(x, nxt, lo, hi):
            return nxt
        x = nxt
    return x


@njit(cache=True, error_model="numpy")
def _cost(w, r2, mem, n, anchor, sign, delta):
    c = 0.0
    for i in range(n):
        k = mem[i]
        e = w[k] * r2[k] / ((r2[k] - anchor) - sign * delta)
        c += (e - w[k]) ** 2
    return c


@njit(cache=True, error_model="numpy")
def _one_sided(w, r2, mem, n, anchor, sign):
    # every |denominator| is at least delta, so the secular value is below 1 past |w r|
    norm = 0.0
    for i in range(n):
        k = mem[i]
        norm += w[k] * w[k] * r2[k]
    dmax = np.sqrt(norm) * (1.0 + 1e-12)
    delta = _root(w, r2, mem, n, anchor, sign, dmax)
    return _cost(w, r2, mem, n, anchor, sign, delta)


@njit(cache=True, error_model="numpy")
def _convex_minimum(w, r2, mem, n, lower, upper):
    # the secular function is convex between two poles; Newton on its slope
    lo, hi = lower, upper
    x = 0.5 * (lo + hi)
    for _ in range(_ITER):
        s = 0.0
        ds = 0.0
        for i in range(n):
            k = mem[i]
            den = r2[k] - x
            q = w[k] * w[k] * r2[k] / (den * den * den)
            s += 2.0 * q
            ds += 6.0 * q / den
        if s > 0.0:
            hi = x
        else:
            lo = x
        nxt = x - s / ds if ds > 0.0 else 0.5 * (lo + hi)
        if not lo < nxt < hi:
            nxt = 0.5 * (lo + hi)
        if _converged(x, nxt, lo, hi):
            return nxt
        x = nxt
    return x


@njit(cache=True, error_model="numpy")
def exterior_distance(w, r):
    """Distance from ``w`` to {z: sum (z_k)_+^2 / r_k^2 >= 1}.

    Enumerates the Karush-Kuhn-Tucker points of the nonconvex projection.
    Positive coordinates always move outward; each subset of the
    nonpositive coordinates may join them, with a multiplier between the
    corresponding poles of the secular function.  The global minimum is
    among these candidates, so taking the smallest cost is exact.
    Multipliers are parameterised by their offset from the nearest pole,
    which keeps roots within rounding of a pole resolvable.
    """
    d = w.shape[0]
    # offsets this far below the problem scale only stiffen the poles (and
    # underflow when squared); the distance is 1-Lipschitz, so dropping them
    # moves the result by at most the same amount
    scale = 0.0
    for k in range(d):
        scale = max(scale, abs(w[k]), r[k])
    w = w.copy()
    for k in range(d):
        if abs(w[k]) <= _NEGLIGIBLE * scale:
            w[k] = 0.0
    g = 0.0
    for k in range(d):
        if w[k] > 0.0:
            g += _ratio(w[k], r[k])
    if g >= 1.0:
        return 0.0
    best = np.inf
    r2 = np.empty(d)
    pos = np.empty(d, dtype=np.int64)
    neg = np.empty(d, dtype=np.int64)
    npos = 0
    nn = 0
    for k in range(d):
        r2[k] = r[k] * r[k]
        if r[k] == 0.0:
            # any positive value of this coordinate leaves the set
            cand = -w[k] if w[k] < 0.0 else 0.0
            if cand * cand < best:
                best = cand * cand
        elif w[k] > 0.0:
            pos[npos] = k
            npos += 1
        else:
            neg[nn] = k
            nn += 1
    upper = np.inf
    for i in range(npos):
        upper = min(upper, r2[pos[i]])
    mem = np.empty(d, dtype=np.int64)
    zeros = np.empty(d, dtype=np.int64)
    for mask in range(1 << nn):
        n = npos
        mem[:npos] = pos[:npos]
        nz = 0
        lower = -np.inf
        for b in range(nn):
            if mask >> b & 1:
                k = neg[b]
                if w[k] == 0.0:
                    zeros[nz] = k
                    nz += 1
                else:
                    mem[n] = k
                    n += 1
                    lower = max(lower, r2[k])
        if n == 0 and nz == 0:
            continue
        if nz > 0:
            mu = r2[zeros[0]]
            same = True
            for i in range(nz):
                if r2[zeros[i]] != mu:
                    same = False
            if not same or mu <= lower or mu >= upper:
                continue
            rest = _secular(w, r2, mem, n, mu, 1.0, 0.0)[0]
            if rest < 1.0:
                c = _cost(w, r2, mem, n, mu, 1.0, 0.0) + mu * (1.0 - rest)
                if c < best:
                    best = c
            continue
        if lower >= upper:
            continue
        if lower == -np.inf:
            # increasing from 0 at -inf to +inf at the first pole
            c = _one_sided(w, r2, mem, n, upper, -1.0)
        elif upper == np.inf:
            c = _one_sided(w, r2, mem, n, lower, 1.0)
        else:
            mstar = _convex_minimum(w, r2, mem, n, lower, upper)
            if _secular(w, r2, mem, n, lower, 1.0, mstar - lower)[0] >= 1.0:
                continue
            left = _root(w, r2, mem, n, lower, 1.0, mstar - lower)
            right = _root(w, r2, mem, n, upper, -1.0, upper - mstar)
            c = min(_cost(w, r2, mem, n, lower, 1.0, left), _cost(w, r2, mem, n, upper, -1.0, right))
        if c < best:
            best = c
    return np.sqrt(best)


@njit(cache=True, error_model="numpy")
def batch_union_outside(delta, r):
    n = delta.shape[0]
    out = np.empty(n)
    for i in range(n):
        out[i] = union_outside_distance(delta[i], r)
    return out


@njit(cache=True, error_model="numpy")
def batch_intersection_outside(a, h, r):
    n = a.shape[0]
    out = np.empty(n)
    for i in range(n):
        out[i] = intersection_outside_distance(a[i], h, r)
    return out


@njit(cache=True, error_model="numpy")
def batch_exterior(w, r):
    n = w.shape[0]
    out = np.empty(n)
    for i in range(n):
        out[i] = exterior_distance(w[i], r)
    return out
