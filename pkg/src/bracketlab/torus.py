"""Ergodic torus automorphisms with exact rational orbits.

A point of the torus is stored as an integer vector of numerators over a
fixed denominator ``q``.  Since the matrix has integer entries the
denominator never changes, so iterating the map is exact integer
arithmetic modulo ``q``.  Floating point only appears when samples are
emitted.
"""
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import sympy

from .errors import DimensionMismatch, NotUnimodular
from .seeding import generator

_X = sympy.Symbol("x")
_INT64_LIMIT = 1 << 63
_FLOAT_EXACT_LIMIT = 1 << 53


@dataclass(frozen=True)
class SpectralClassification:
    ergodic: bool
    hyperbolic: bool
    neutral_degree: int
    char_poly: tuple


def _as_int_matrix(matrix):
    rows = [[int(v) for v in row] for row in matrix]
    d = len(rows)
    if d == 0 or any(len(r) != d for r in rows):
        raise DimensionMismatch("matrix must be square and non-empty")
    for row, orig in zip(rows, matrix):
        for v, o in zip(row, orig):
            if v != o:
                raise ValueError("matrix entries must be integers")
    return tuple(tuple(r) for r in rows)


def _reciprocal_quotient(poly):
    """For a self-reciprocal ``p`` of degree 2k return ``q`` with p(x) = x^k q(x + 1/x)."""
    coeffs = poly.all_coeffs()[::-1]  # a_0 .. a_n
    k = len(coeffs) // 2
    y = sympy.Symbol("y")
    v_prev, v_cur = sympy.Integer(2), y
    q = sympy.Integer(coeffs[k])
    for i in range(1, k + 1):
        q += coeffs[k + i] * v_cur
        v_prev, v_cur = v_cur, sympy.expand(y * v_cur - v_prev)
    return sympy.Poly(sympy.expand(q), y)


def _unit_circle_roots(factor):
    """Number of roots of an irreducible integer polynomial with modulus one."""
    n = factor.degree()
    coeffs = factor.all_coeffs()
    if n == 1:
        root = sympy.Rational(-coeffs[1], coeffs[0])
        return 1 if abs(root) == 1 else 0
    if coeffs != coeffs[::-1]:
        # a unit-modulus root forces p to be (anti-)reciprocal; anti-reciprocal
        # polynomials vanish at 1 and so are reducible in degree > 1
        return 0
    if n % 2:
        return 0
    q = _reciprocal_quotient(factor)
    return 2 * int(q.count_roots(-2, 2))


def _euler_phi_bound(d):
    # phi(k) >= sqrt(k/2), so phi(k) <= d forces k <= 2 d^2
    return max(2 * d * d, 6)


def _jordan_block_size(matrix, factor, multiplicity):
    """Largest Jordan block attached to the roots of an irreducible factor."""
    d = matrix.shape[0]
    coeffs = factor.all_coeffs()
    value = sympy.zeros(d, d)
    for c in coeffs:
        value = value * matrix + c * sympy.eye(d)
    power = sympy.eye(d)
    ranks = [d]
    for _ in range(multiplicity):
        power = power * value
        ranks.append(power.rank())
    for k in range(1, len(ranks)):
        if ranks[k] == ranks[-1]:
            return k
    return multiplicity


def classify(matrix):
    """Exact spectral classification of a unimodular integer matrix.

    ``ergodic`` is decided by divisibility of the characteristic polynomial
    by cyclotomic polynomials; ``hyperbolic`` by counting unit-circle roots
    of every irreducible factor with Sturm sequences.  ``neutral_degree`` is
    the size of the largest Jordan block over the unit-modulus eigenvalues,
    computed from exact ranks of powers of ``p(A)``.
    """
    rows = _as_int_matrix(matrix)
    d = len(rows)
    m = sympy.Matrix(rows)
    det = m.det()
    if abs(det) != 1:
        raise NotUnimodular(f"determinant is {det}, expected +-1")
    char = m.charpoly(_X)
    char_poly = tuple(int(c) for c in char.all_coeffs())

    ergodic = True
    for k in range(1, _euler_phi_bound(d) + 1):
        if sympy.totient(k) > d:
            continue
        cyclo = sympy.Poly(sympy.cyclotomic_poly(k, _X), _X)
        if char.rem(cyclo).is_zero:
            ergodic = False
            break

    _, factors = sympy.factor_list(char.as_expr(), _X)
    neutral = 0
    for fac, mult in factors:
        fac = sympy.Poly(fac, _X)
        if _unit_circle_roots(fac) > 0:
            neutral = max(neutral, _jordan_block_size(m, fac, mult))
    return SpectralClassification(
        ergodic=ergodic,
        hyperbolic=neutral == 0,
        neutral_degree=neutral,
        char_poly=char_poly,
    )


@dataclass(frozen=True)
class TorusAutomorphism:
    """The map x -> A x mod 1 on the d-torus."""

    matrix: tuple
    classification: SpectralClassification = field(compare=False, repr=False)

    @classmethod
    def from_matrix(cls, matrix):
        rows = _as_int_matrix(matrix)
        return cls(rows, classify(rows))

    @property
    def dim(self):
        return len(self.matrix)

    @property
    def det_sign(self):
        return int(sympy.Matrix(self.matrix).det())

    @cached_property
    def array(self):
        return np.array(self.matrix, dtype=np.int64)

    @cached_property
    def row_abs_sum(self):
        return max(sum(abs(v) for v in row) for row in self.matrix)

    def fits_int64(self, q):
        return self.row_abs_sum * (q - 1) < _INT64_LIMIT


CAT_MAP = ((2, 1), (1, 1))


@dataclass(frozen=True)
class RationalTorusPoint:
    numerators: tuple
    denominator: int

    def __post_init__(self):
        if self.denominator < 1:
            raise ValueError("denominator must be positive")
        nums = tuple(int(v) for v in self.numerators)
        if any(not 0 <= v < self.denominator for v in nums):
            raise ValueError("numerators must lie in [0, denominator)")
        object.__setattr__(self, "numerators", nums)

    @property
    def dim(self):
        return len(self.numerators)

    def to_float(self):
        # int / int is correctly rounded in Python
        return np.array([v / self.denominator for v in self.numerators])


def step(T, x):
    """One exact application of ``T`` to a rational point."""
    if x.dim != T.dim:
        raise DimensionMismatch(f"point has dim {x.dim}, map has dim {T.dim}")
    q = x.denominator
    nums = tuple(sum(a * v for a, v in zip(row, x.numerators)) % q for row in T.matrix)
    return RationalTorusPoint(nums, q)


def matrix_power_mod(matrix, k, q):
    """``A^k mod q`` by square and multiply on Python integers."""
    rows = _as_int_matrix(matrix)
    d = len(rows)
    result = [[int(i == j) for j in range(d)] for i in range(d)]
    base = [[v % q for v in row] for row in rows]

    def mul(a, b):
        return [[sum(a[i][t] * b[t][j] for t in range(d)) % q for j in range(d)] for i in range(d)]

    while k:
        if k & 1:
            result = mul(result, base)
        base = mul(base, base)
        k >>= 1
    return result


def power_apply(T, x, k):
    """``T^k x`` computed by exact matrix powering."""
    p = matrix_power_mod(T.matrix, k, x.denominator)
    nums = tuple(sum(a * v for a, v in zip(row, x.numerators)) % x.denominator for row in p)
    return RationalTorusPoint(nums, x.denominator)


def _numerators_to_float(nums, q):
    if q <= _FLOAT_EXACT_LIMIT and nums.dtype != object:
        return nums.astype(np.float64) / float(q)
    flat = [int(v) / q for v in nums.ravel()]
    return np.array(flat, dtype=np.float64).reshape(nums.shape)


def _advance_block(T, nums, q, length):
    """Iterate a (R, d) numerator array ``length`` times.

    Returns the (R, length, d) array of visited numerators (starting with
    ``nums`` itself) and the numerators after the last step.
    """
    R, d = nums.shape
    dtype = np.int64 if T.fits_int64(q) else object
    out = np.empty((R, length, d), dtype=dtype)
    cur = nums.astype(dtype)
    at = T.array.T if dtype is np.int64 else np.array(T.matrix, dtype=object).T
    for t in range(length):
        out[:, t, :] = cur
        cur = np.mod(cur @ at, q)
    return out, cur


def orbit(T, x0, n):
    """Positions x0, T x0, ..., T^{n-1} x0 as an (n, d) float array."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if x0.dim != T.dim:
        raise DimensionMismatch(f"point has dim {x0.dim}, map has dim {T.dim}")
    q = x0.denominator
    dtype = np.int64 if T.fits_int64(q) else object
    start = np.array([x0.numerators], dtype=dtype)
    nums, _ = _advance_block(T, start, q, n)
    return _numerators_to_float(nums[0], q)


def exact_orbit(T, x0, n):
    """Like :func:`orbit` but returns the rational points."""
    pts = [x0]
    for _ in range(n - 1):
        pts.append(step(T, pts[-1]))
    return pts


def random_prime(bits, seed):
    """Deterministic random prime in [2^(bits-1), 2^bits)."""
    rng = generator(seed, "denominator")
    lo, hi = 1 << (bits - 1), 1 << bits
    while True:
        cand = int(rng.integers(lo, hi, dtype=np.uint64)) | 1
        if cand < hi and sympy.isprime(cand):
            return cand


@dataclass(frozen=True)
class OrbitConfig:
    length: int
    replicas: int = 1
    denominator_bits: int = 52
    master_seed: int = 0

    def __post_init__(self):
        if self.length < 1:
            raise ValueError("length must be >= 1")
        if self.replicas < 1:
            raise ValueError("replicas must be >= 1")
        if not 48 <= self.denominator_bits <= 62:
            raise ValueError("denominator_bits must lie in [48, 62]")

    @cached_property
    def denominator(self):
        return random_prime(self.denominator_bits, self.master_seed)


def sample_initial(cfg, replica_id, dim=2):
    """Lebesgue-distributed rational start point for one replica."""
    if not 0 <= replica_id < cfg.replicas:
        raise ValueError("replica_id out of range")
    q = cfg.denominator
    rng = generator(cfg.master_seed, "replica", replica_id)
    nums = rng.integers(0, q, size=dim, dtype=np.int64)
    return RationalTorusPoint(tuple(int(v) for v in nums), q)


def iid_baseline(dim, n, seed):
    """n i.i.d. uniform points on [0, 1]^dim."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return generator(seed, "iid", 0).random((n, dim))


class TorusProcess:
    """Replicated stationary orbits of a torus automorphism."""

    kind = "torus"

    def __init__(self, automorphism, denominator_bits=52):
        if not isinstance(automorphism, TorusAutomorphism):
            automorphism = TorusAutomorphism.from_matrix(automorphism)
        self.automorphism = automorphism
        self.denominator_bits = denominator_bits

    @property
    def dim(self):
        return self.automorphism.dim

    def describe(self):
        return {"process": "torus", "matrix": [list(r) for r in self.automorphism.matrix],
                "denominator_bits": self.denominator_bits}

    def paths(self, n, replicas, seed, block=2048):
        """Yield float blocks of shape (replicas, b, d) covering n steps."""
        cfg = OrbitConfig(n, replicas, self.denominator_bits, seed)
        q = cfg.denominator
        T = self.automorphism
        dtype = np.int64 if T.fits_int64(q) else object
        cur = np.array([sample_initial(cfg, r, T.dim).numerators for r in range(replicas)], dtype=dtype)
        done = 0
        while done < n:
            b = min(block, n - done)
            nums, cur = _advance_block(T, cur, q, b)
            yield _numerators_to_float(nums, q)
            done += b


class IIDProcess:
    """Replicated i.i.d. uniform samples on [0, 1]^d."""

    kind = "iid"

    def __init__(self, dim):
        self.dim = dim

    def describe(self):
        return {"process": "iid", "dim": self.dim}

    def paths(self, n, replicas, seed, block=2048):
        rngs = [generator(seed, "iid", r) for r in range(replicas)]
        done = 0
        while done < n:
            b = min(block, n - done)
            yield np.stack([g.random((b, self.dim)) for g in rngs])
            done += b


def write_orbits_csv(path, orbits):
    """Write (R, n, d) orbits with header ``replica,step,x1,...,xd``."""
    orbits = np.asarray(orbits)
    R, n, d = orbits.shape
    with open(path, "w") as fh:
        fh.write(",".join(["replica", "step"] + [f"x{i + 1}" for i in range(d)]) + "\n")
        for r in range(R):
            for t in range(n):
                coords = ",".join(f"{v:.17g}" for v in orbits[r, t])
                fh.write(f"{r},{t},{coords}\n")
