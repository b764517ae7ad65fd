"""Exact arithmetic over F_q[u] (q prime): monic enumeration, prime
counting, and the quadratic-field scalar type Q(sqrt q).

Polynomials are coefficient tuples low-to-high, entries in {0,...,q-1},
leading coefficient 1.  Everything here is exact integer / rational
arithmetic; floats never enter.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import product

from .errors import BudgetExceededError

DEFAULT_ENUM_CAP = int(os.environ.get("FFCHIMERA_ENUM_CAP", 10_000_000))


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n < 4:
        return True
    if n % 2 == 0:
        return False
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


@dataclass(frozen=True)
class FieldParams:
    """Base field size plus the regime flags the larger constructions need.

    density_ok: the joint density of the log-coefficients exists (q > 2);
    pointwise_ok: pointwise density bounds apply (q > 5);
    hf_ok: the high-frequency cancellation regime applies (q > 11).
    """

    q: int
    density_ok: bool = field(init=False)
    pointwise_ok: bool = field(init=False)
    hf_ok: bool = field(init=False)

    def __post_init__(self):
        if not is_prime(self.q):
            raise ValueError(f"q={self.q} is not prime")
        object.__setattr__(self, "density_ok", self.q > 2)
        object.__setattr__(self, "pointwise_ok", self.q > 5)
        object.__setattr__(self, "hf_ok", self.q > 11)


@dataclass(frozen=True)
class MonicPoly:
    """Monic polynomial over Z/q, coefficients low-to-high."""

    coeffs: tuple
    q: int

    def __post_init__(self):
        if not self.coeffs or self.coeffs[-1] != 1:
            raise ValueError("leading coefficient must be 1")
        if any(not (0 <= c < self.q) for c in self.coeffs):
            raise ValueError("coefficients out of range")

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __mul__(self, other: "MonicPoly") -> "MonicPoly":
        return MonicPoly(poly_mul(self.coeffs, other.coeffs, self.q), self.q)

    def __str__(self):
        terms = []
        for i, c in enumerate(self.coeffs):
            if c == 0:
                continue
            if i == 0:
                terms.append(str(c))
            else:
                head = "u" if i == 1 else f"u^{i}"
                terms.append(head if c == 1 else f"{c}*{head}")
        return " + ".join(reversed(terms)) if terms else "0"


def poly_mul(a: tuple, b: tuple, q: int) -> tuple:
    out = [0] * (len(a) + len(b) - 1)
    for i, ai in enumerate(a):
        if ai:
            for j, bj in enumerate(b):
                out[i + j] = (out[i + j] + ai * bj) % q
    return tuple(out)


def poly_mod(a: tuple, m: tuple, q: int) -> tuple:
    """Remainder of a modulo monic m, as a tuple of length deg(m)."""
    a = list(a)
    dm = len(m) - 1
    for i in range(len(a) - 1, dm - 1, -1):
        c = a[i] % q
        if c:
            for j in range(dm + 1):
                a[i - dm + j] = (a[i - dm + j] - c * m[j]) % q
    return tuple(a[:dm])


def enumerate_monic(q: int, d: int, cap: int = None) -> list:
    """All q^d monic polynomials of degree d, in dictionary order of the
    coefficient string written from the top coefficient down."""
    if d < 0:
        raise ValueError("degree must be nonnegative")
    cap = DEFAULT_ENUM_CAP if cap is None else cap
    if q**d > cap:
        raise BudgetExceededError(
            f"enumerate_monic: q^d = {q**d} exceeds cap {cap}")
    if d == 0:
        return [MonicPoly((1,), q)]
    out = []
    for high_to_low in product(range(q), repeat=d):
        coeffs = tuple(reversed(high_to_low)) + (1,)
        out.append(MonicPoly(coeffs, q))
    return out


def _mobius(n: int) -> int:
    m, p, cnt = 1, 2, n
    while p * p <= cnt:
        if cnt % p == 0:
            cnt //= p
            if cnt % p == 0:
                return 0
            m = -m
        p += 1
    if cnt > 1:
        m = -m
    return m


def _divisors(n: int) -> list:
    out = [d for d in range(1, n + 1) if n % d == 0]
    return out


@lru_cache(maxsize=None)
def irreducible_count(q: int, d: int) -> int:
    """Number E_d of monic irreducibles of degree d, by Mobius inversion
    of sum_{d|n} d*E_d = q^n."""
    if d < 1:
        raise ValueError("d must be >= 1")
    total = sum(_mobius(e) * q ** (d // e) for e in _divisors(d))
    assert total % d == 0
    return total // d


def abe_triple(q: int, n: int):
    """(A_n, B_n, E_n): prime counts over proper divisors, the same sum
    weighted by d/n, and the degree-n count.  B_n + E_n = q^n / n exactly."""
    if n < 1:
        raise ValueError("n must be >= 1")
    a = 0
    b = Fraction(0)
    for d in _divisors(n):
        if d == n:
            continue
        e_d = irreducible_count(q, d)
        a += e_d
        b += Fraction(e_d * d, n)
    return Fraction(a), b, irreducible_count(q, n)


class PrimeTable:
    """Monic irreducibles of F_q[u] by degree, with exact counts.

    Irreducibility is decided by trial division against the already-built
    lower-degree primes; the necklace count cross-checks every level.
    """

    def __init__(self, q: int, dmax: int, cap: int = None):
        self.field = FieldParams(q)
        self.q = q
        self.dmax = dmax
        cap = DEFAULT_ENUM_CAP if cap is None else cap
        self.primes_by_degree = {d: [] for d in range(1, dmax + 1)}
        for d in range(1, dmax + 1):
            divisor_degrees = [e for e in range(1, d // 2 + 1)]
            for f in enumerate_monic(q, d, cap=cap):
                if self._is_irreducible(f, divisor_degrees):
                    self.primes_by_degree[d].append(f)
            found = len(self.primes_by_degree[d])
            expect = irreducible_count(q, d)
            if found != expect:
                raise AssertionError(
                    f"prime sieve at degree {d}: found {found}, necklace says {expect}")

    def _is_irreducible(self, f: MonicPoly, divisor_degrees) -> bool:
        for e in divisor_degrees:
            for p in self.primes_by_degree[e]:
                if all(c == 0 for c in poly_mod(f.coeffs, p.coeffs, self.q)):
                    return False
        return True

    def E(self, d: int) -> int:
        """E_d; exact for every d (necklace formula beyond the table)."""
        if 1 <= d <= self.dmax:
            return len(self.primes_by_degree[d])
        return irreducible_count(self.q, d)

    def primes(self, d: int) -> list:
        if d > self.dmax:
            raise BudgetExceededError(
                f"PrimeTable built to degree {self.dmax}, degree {d} requested")
        return self.primes_by_degree[d]

    def abe(self, n: int):
        return abe_triple(self.q, n)


class QSqrtScalar:
    """Exact element a + b*sqrt(q) of Q(sqrt q), q a fixed nonsquare prime.

    The carrier type for (-q^{-1/2})-power coefficients; equality is exact
    on (a, b).
    """

    __slots__ = ("a", "b", "q")

    def __init__(self, a, b, q: int):
        self.a = Fraction(a)
        self.b = Fraction(b)
        self.q = q

    @classmethod
    def zero(cls, q: int) -> "QSqrtScalar":
        return cls(0, 0, q)

    @classmethod
    def one(cls, q: int) -> "QSqrtScalar":
        return cls(1, 0, q)

    @classmethod
    def rational(cls, r, q: int) -> "QSqrtScalar":
        return cls(Fraction(r), 0, q)

    @classmethod
    def neg_inv_sqrt_pow(cls, q: int, p: int) -> "QSqrtScalar":
        """(-q^{-1/2})^p for any integer p, i.e. exactly (-1)^p * q^{-p/2}."""
        sign = -1 if p % 2 else 1
        if p % 2 == 0:
            return cls(sign * Fraction(1, q) ** (p // 2), 0, q)
        # odd p: q^{-p/2} = q^{-(p+1)/2} * sqrt(q)
        return cls(0, sign * Fraction(1, q) ** ((p + 1) // 2), q)

    def _check(self, other):
        if self.q != other.q:
            raise ValueError("mixing scalars over different q")

    def __add__(self, other):
        if isinstance(other, (int, Fraction)):
            other = QSqrtScalar.rational(other, self.q)
        self._check(other)
        return QSqrtScalar(self.a + other.a, self.b + other.b, self.q)

    __radd__ = __add__

    def __neg__(self):
        return QSqrtScalar(-self.a, -self.b, self.q)

    def __sub__(self, other):
        if isinstance(other, (int, Fraction)):
            other = QSqrtScalar.rational(other, self.q)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return QSqrtScalar(self.a * other, self.b * other, self.q)
        self._check(other)
        return QSqrtScalar(
            self.a * other.a + self.q * self.b * other.b,
            self.a * other.b + self.b * other.a,
            self.q,
        )

    __rmul__ = __mul__

    def inverse(self) -> "QSqrtScalar":
        norm = self.a * self.a - self.q * self.b * self.b
        if norm == 0:
            raise ZeroDivisionError("zero element of Q(sqrt q)")
        return QSqrtScalar(self.a / norm, -self.b / norm, self.q)

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)):
            return QSqrtScalar(self.a / other, self.b / other, self.q)
        self._check(other)
        return self * other.inverse()

    def __pow__(self, n: int):
        if n < 0:
            return self.inverse() ** (-n)
        out = QSqrtScalar.one(self.q)
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.b == 0 and self.a == other
        return (isinstance(other, QSqrtScalar) and self.q == other.q
                and self.a == other.a and self.b == other.b)

    def __hash__(self):
        return hash((self.a, self.b, self.q))

    def is_zero(self) -> bool:
        return self.a == 0 and self.b == 0

    def to_float(self) -> float:
        return float(self.a) + float(self.b) * self.q**0.5

    def __repr__(self):
        return f"QSqrtScalar({self.a}, {self.b}, q={self.q})"

    def __str__(self):
        return f"{self.a} + {self.b}*sqrt({self.q})"
