"""Random completely multiplicative functions on F_q[u]^+ and exact
expectation engines for their L-series coefficients.

A sample assigns each monic irreducible an independent uniform phase; the
L-series coefficients c_d and the log-coefficients X_n are derived data.
Expectations of monomials in either coordinate system reduce to counting
problems (for the c_d) or to per-degree-class combinatorics (for the X_n),
both handled exactly.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .errors import BudgetExceededError
from .ffpoly import PrimeTable, QSqrtScalar, poly_mul

DEFAULT_JOIN_CAP = 4_000_000


# ---------------------------------------------------------------------------
# sampling

class XiSample:
    """Uniform unit-circle phases, one per monic irreducible of degree
    <= table.dmax, extended to all monics by complete multiplicativity."""

    def __init__(self, table: PrimeTable, angles: dict):
        self.table = table
        self.angles = angles  # degree -> ndarray aligned with table.primes(d)

    @classmethod
    def all_ones(cls, table: PrimeTable) -> "XiSample":
        return cls(table, {d: np.zeros(len(table.primes(d)))
                           for d in range(1, table.dmax + 1)})

    def angle_of(self, prime) -> float:
        for i, p in enumerate(self.table.primes(prime.degree)):
            if p == prime:
                return float(self.angles[prime.degree][i])
        raise KeyError(prime)

    def rotated(self, phi: float) -> "XiSample":
        """theta_p -> theta_p + phi * deg(p); sends X_n to e^{i n phi} X_n."""
        return XiSample(self.table, {
            d: np.mod(th + phi * d, 2 * np.pi) for d, th in self.angles.items()
        })

    def value(self, f) -> complex:
        """xi(f) for monic f, by factoring f over the table's primes."""
        coeffs, q = f.coeffs, self.table.q
        total = 0.0
        for d in range(1, self.table.dmax + 1):
            for i, p in enumerate(self.table.primes(d)):
                while len(coeffs) > len(p.coeffs) - 1 and _divides(p.coeffs, coeffs, q):
                    coeffs = _poly_div(coeffs, p.coeffs, q)
                    total += self.angles[d][i]
                if len(coeffs) == 1:
                    return complex(np.exp(1j * total))
        if len(coeffs) != 1:
            raise ValueError("f does not factor over the table range")
        return complex(np.exp(1j * total))


def _poly_div(a: tuple, m: tuple, q: int) -> tuple:
    a = list(a)
    dm = len(m) - 1
    quot = [0] * (len(a) - dm)
    for i in range(len(a) - 1, dm - 1, -1):
        c = a[i] % q
        if c:
            quot[i - dm] = c
            for j in range(dm + 1):
                a[i - dm + j] = (a[i - dm + j] - c * m[j]) % q
    return tuple(quot)


def _divides(m: tuple, a: tuple, q: int) -> bool:
    rem = list(a)
    dm = len(m) - 1
    for i in range(len(rem) - 1, dm - 1, -1):
        c = rem[i] % q
        if c:
            for j in range(dm + 1):
                rem[i - dm + j] = (rem[i - dm + j] - c * m[j]) % q
    return not any(r % q for r in rem[:dm])


def sample_xi(table: PrimeTable, rng_seed) -> XiSample:
    rng = np.random.default_rng(rng_seed)
    return XiSample(table, {
        d: rng.uniform(0.0, 2 * np.pi, size=len(table.primes(d)))
        for d in range(1, table.dmax + 1)
    })


@dataclass
class LogCoeffVector:
    """X_1..X_k (coefficients of the log of the Euler product in q^{-s})
    and the unit-variance coordinates b_n = sqrt(n/q^n) X_n."""

    X: list
    q: int
    b: list = field(init=False)

    def __post_init__(self):
        self.b = [math.sqrt((n + 1) / self.q ** (n + 1)) * x
                  for n, x in enumerate(self.X)]


def power_sum(xi: XiSample, d: int, m: int) -> complex:
    """S_{d,m} = sum over degree-d primes of xi(p)^m."""
    return complex(np.exp(1j * m * xi.angles[d]).sum())


def xn_values(xi: XiSample, k: int) -> LogCoeffVector:
    if k > xi.table.dmax:
        raise BudgetExceededError(f"table holds primes to degree {xi.table.dmax}")
    X = []
    for n in range(1, k + 1):
        total = 0j
        for d in range(1, n + 1):
            if n % d == 0:
                total += Fraction(d, n) * power_sum(xi, d, n // d)
        X.append(complex(total))
    return LogCoeffVector(X, xi.table.q)


def xn_batch(table: PrimeTable, k: int, nsamples: int, rng_seed) -> np.ndarray:
    """(nsamples, k) array of X_n draws; same law as xn_values(sample_xi(...))."""
    rng = np.random.default_rng(rng_seed)
    X = np.zeros((nsamples, k), dtype=complex)
    for d in range(1, k + 1):
        e_d = len(table.primes(d))
        theta = rng.uniform(0.0, 2 * np.pi, size=(nsamples, e_d))
        for m in range(1, k // d + 1):
            X[:, m * d - 1] += (d / (m * d)) * np.exp(1j * m * theta).sum(axis=1)
    return X


def exp_series_from_logs(X: np.ndarray, dmax: int) -> np.ndarray:
    """Coefficients c_0..c_dmax of exp(sum_n X_n t^n) along the last axis
    of X (shape (..., k) with k >= dmax).  Uses c' = S' c term by term."""
    lead = X.shape[:-1]
    c = np.zeros(lead + (dmax + 1,), dtype=complex)
    c[..., 0] = 1.0
    for m in range(1, dmax + 1):
        acc = np.zeros(lead, dtype=complex)
        for j in range(1, m + 1):
            acc = acc + j * X[..., j - 1] * c[..., m - j]
        c[..., m] = acc / m
    return c


def lxi_coeffs(xi: XiSample, dmax: int) -> list:
    """c_0..c_dmax of the Euler product, by multiplying the truncated
    factors 1/(1 - xi(p) t^{deg p}); cross-checkable against
    exp_series_from_logs of xn_values."""
    if dmax > xi.table.dmax:
        raise BudgetExceededError(f"table holds primes to degree {xi.table.dmax}")
    c = np.zeros(dmax + 1, dtype=complex)
    c[0] = 1.0
    for d in range(1, dmax + 1):
        for theta in xi.angles[d]:
            z = np.exp(1j * theta)
            # multiply by 1 + z t^d + z^2 t^{2d} + ...
            for n in range(dmax, 0, -1):
                acc = c[n]
                zp = 1.0
                for j in range(1, n // d + 1):
                    zp *= z
                    acc += zp * c[n - j * d]
                c[n] = acc
    return [complex(v) for v in c]


# ---------------------------------------------------------------------------
# exact expectations of monomials in the c_d

@dataclass(frozen=True)
class MonomialSpec:
    """Either a monomial in the series coefficients (prod c_{d_i} *
    prod conj(c_{d'_j})) or a mixed moment of the log-coefficients
    (prod X_n^{p_n} conj(X_n)^{pbar_n})."""

    holo_degrees: tuple = ()
    anti_degrees: tuple = ()
    x_powers: tuple = ()   # tuples (n, p_n, pbar_n)

    @classmethod
    def coeff_monomial(cls, holo, anti) -> "MonomialSpec":
        return cls(tuple(sorted(holo)), tuple(sorted(anti)))

    @classmethod
    def x_moment(cls, powers: dict) -> "MonomialSpec":
        items = tuple(sorted((n, p, pb) for n, (p, pb) in powers.items()
                             if p or pb))
        return cls(x_powers=items)


@lru_cache(maxsize=None)
def _product_counts(q: int, degrees: tuple, cap: int) -> tuple:
    """Counter of products: monic h -> #{ordered tuples (f_i), deg f_i =
    degrees[i], prod f_i = h}, returned as a hashable tuple of pairs."""
    if q ** sum(degrees) > cap:
        raise BudgetExceededError(
            f"hash-join side q^{sum(degrees)} exceeds cap {cap}")
    from .ffpoly import enumerate_monic
    counts = Counter({(1,): 1})
    for d in degrees:
        polys = [f.coeffs for f in enumerate_monic(q, d, cap=cap)]
        nxt = Counter()
        for h, c in counts.items():
            for fc in polys:
                nxt[poly_mul(h, fc, q)] += c
        counts = nxt
    return tuple(sorted(counts.items()))


def diagonal_count(q: int, left: tuple, right: tuple, cap: int = None,
                   force_join: bool = False) -> int:
    """#{(f_1..f_a, g_1..g_b): deg f_i = left_i, deg g_j = right_j,
    prod f = prod g}.  Zero immediately on degree mismatch; single-factor
    sides admit a closed count, everything else is a hash-join."""
    cap = DEFAULT_JOIN_CAP if cap is None else cap
    left = tuple(sorted(left))
    right = tuple(sorted(right))
    if sum(left) != sum(right):
        return 0
    if not force_join:
        if len(left) == 0:
            return 1 if not right or sum(right) == 0 else 0
        if len(right) == 0:
            return 1 if sum(left) == 0 else 0
        # a single factor on one side is determined by the other side
        if len(left) == 1:
            return q ** sum(right)
        if len(right) == 1:
            return q ** sum(left)
    lhs = dict(_product_counts(q, left, cap))
    rhs = dict(_product_counts(q, right, cap))
    if len(lhs) > len(rhs):
        lhs, rhs = rhs, lhs
    return sum(c * rhs.get(h, 0) for h, c in lhs.items())


def monomial_expectation(spec: MonomialSpec, q: int, cap: int = None) -> int:
    """E over xi of prod c_{d_i} prod conj(c_{d'_j}): the number of
    coincidences prod f_i = prod g_j among monics of the given degrees."""
    if spec.x_powers:
        raise ValueError("coefficient-monomial spec expected")
    return diagonal_count(q, spec.holo_degrees, spec.anti_degrees, cap=cap)


# ---------------------------------------------------------------------------
# exact characteristic-function series and X-moments
#
# E[e^{i sum_n X_n . w_n}] is an entire function of the complex tilts
# W_n = w_{n,1} + i w_{n,2}.  It factors over prime degree classes, and the
# factor for one degree-d prime has the exact expansion
#   sum over balanced (a_m, b_m):  prod_m (i/(2m))^{a_m+b_m} / (a_m! b_m!)
#       * conj(W_{md})^{a_m} W_{md}^{b_m},
# balanced meaning sum_m m a_m = sum_m m b_m (the circle average kills all
# other windings).  Every coefficient is i^{total degree} times a rational;
# we store only the rational part, keyed by the exponent vector
# (a_1, b_1, ..., a_k, b_k).

def _tuples_with_winding(mmax: int, s: int):
    """All exponent tuples (a_1..a_mmax) with sum m*a_m = s."""
    if mmax == 0:
        if s == 0:
            yield ()
        return
    for top in range(s // mmax + 1):
        for rest in _tuples_with_winding(mmax - 1, s - top * mmax):
            yield rest + (top,)


def _series_mul(f: dict, g: dict, k: int, max_wdeg: int, weights) -> dict:
    out = {}
    for ka, ca in f.items():
        wa = sum(e * w for e, w in zip(ka, weights))
        for kb, cb in g.items():
            if wa + sum(e * w for e, w in zip(kb, weights)) > max_wdeg:
                continue
            key = tuple(x + y for x, y in zip(ka, kb))
            c = ca * cb
            if key in out:
                out[key] += c
            else:
                out[key] = c
    return {key: c for key, c in out.items() if c != 0}


def _series_pow(f: dict, e: int, k: int, max_wdeg: int, weights) -> dict:
    result = {(0,) * (2 * k): Fraction(1)}
    base = f
    while e:
        if e & 1:
            result = _series_mul(result, base, k, max_wdeg, weights)
        e >>= 1
        if e:
            base = _series_mul(base, base, k, max_wdeg, weights)
    return result


@lru_cache(maxsize=32)
def charfn_series(q: int, k: int, max_wdeg: int) -> dict:
    """Exact Taylor series of E[e^{i sum X_n . w_n}] to weighted degree
    max_wdeg (W_n and conj W_n both weigh n).  Key (a_1, b_1, ..., a_k, b_k)
    holds the rational part; the true coefficient is i^{sum a + sum b} times it.
    """
    from .ffpoly import irreducible_count

    weights = tuple(w for n in range(1, k + 1) for w in (n, n))
    total = {(0,) * (2 * k): Fraction(1)}
    for d in range(1, k + 1):
        mmax = k // d
        factor = {}
        for s in range(max_wdeg // (2 * d) + 1):
            a_tuples = list(_tuples_with_winding(mmax, s))
            for a in a_tuples:
                for b in a_tuples:
                    r = Fraction(1)
                    for m in range(1, mmax + 1):
                        t = a[m - 1] + b[m - 1]
                        if t:
                            r *= Fraction(1, (2 * m) ** t)
                            r /= math.factorial(a[m - 1]) * math.factorial(b[m - 1])
                    key = [0] * (2 * k)
                    for m in range(1, mmax + 1):
                        n = m * d
                        key[2 * (n - 1)] = a[m - 1]
                        key[2 * (n - 1) + 1] = b[m - 1]
                    factor[tuple(key)] = r
        total = _series_mul(
            total,
            _series_pow(factor, irreducible_count(q, d), k, max_wdeg, weights),
            k, max_wdeg, weights)
    return total


def x_mixed_moment(spec: MonomialSpec, q: int) -> QSqrtScalar:
    """Exact E[prod X_n^{p_n} conj(X_n)^{pbar_n}], a rational number
    (returned with zero sqrt(q) part)."""
    if spec.holo_degrees or spec.anti_degrees:
        raise ValueError("X-moment spec expected")
    if not spec.x_powers:
        return QSqrtScalar.one(q)
    k = max(n for n, _, _ in spec.x_powers)
    wdeg = sum(n * (p + pb) for n, p, pb in spec.x_powers)
    if sum(n * p for n, p, _ in spec.x_powers) != sum(
            n * pb for n, _, pb in spec.x_powers):
        return QSqrtScalar.zero(q)  # rotation invariance
    series = charfn_series(q, k, wdeg)
    key = [0] * (2 * k)
    fact = 1
    for n, p, pb in spec.x_powers:
        key[2 * (n - 1)] = p
        key[2 * (n - 1) + 1] = pb
        fact *= math.factorial(p) * math.factorial(pb)
    c = series.get(tuple(key), Fraction(0))
    total_deg = sum(p + pb for _, p, pb in spec.x_powers)
    # coefficient of conjW^p W^pbar is i^deg * c; the monomial enters the
    # series with prefactor (i/2)^deg / (p! pbar!)
    return QSqrtScalar.rational(c * fact * 2**total_deg, q)
