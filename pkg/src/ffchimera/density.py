"""Laplace/characteristic transform of the log-coefficients, their joint
density by Fourier inversion, the reweighting ratio against the matching
Gaussian, and its exact Hermite-coefficient table.

Conventions.  X_n is complex with E|X_n|^2 = q^n/n, so each real coordinate
has variance q^n/(2n) and the matching Gaussian density is
prod_n exp(-n|x_n|^2/q^n) * n/(q^n pi).  Tilts are complex numbers
V_n = v_{n,1} + i v_{n,2}; the R^2 dot product is exp(m theta).v =
Re(e^{i m theta} conj(V)).

Two inversion routes are provided: `density_F` (tensor-product
Gauss-Legendre over R^{2k}, the reference evaluator, k <= 3) and
`FourierWeightEvaluator` (angular Bessel-mode reduction, the fast path for
ensembles).  They are independent discretizations and are cross-checked in
the test suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy.special import j0 as bessel_j0
from scipy.special import jv as bessel_jv

from .errors import BudgetExceededError, NegativeDensityError
from .eulerprod import _series_mul, charfn_series
from .ffpoly import PrimeTable, irreducible_count

ENVELOPE_EPS = 1e-14
CIRCLE_TOL = 1e-12
CIRCLE_MCAP = 2**16


@dataclass(frozen=True)
class TiltVector:
    """Real tilt v and imaginary tilt w, one complex entry per index n."""

    v: tuple
    w: tuple

    @classmethod
    def of(cls, v, w) -> "TiltVector":
        v = tuple(complex(z) for z in v)
        w = tuple(complex(z) for z in w)
        if len(v) != len(w):
            raise ValueError("v and w must have equal length")
        return cls(v, w)

    @property
    def k(self) -> int:
        return len(self.v)


def _as_complex_list(vals) -> list:
    out = []
    for z in vals:
        if isinstance(z, (tuple, list)):
            z = complex(z[0], z[1])
        out.append(complex(z))
    return out


def circle_factor(v_list, w_list) -> complex:
    """Average over the unit circle of
    exp(sum_m (exp(m theta).v_m + i exp(m theta).w_m)/m), by the periodic
    trapezoid rule with point-doubling until two refinements agree to 1e-12.
    """
    v = _as_complex_list(v_list)
    w = _as_complex_list(w_list)
    if len(v) != len(w):
        raise ValueError("v and w must have equal length")

    def value(m_points: int) -> complex:
        theta = np.arange(m_points) * (2 * np.pi / m_points)
        expo = np.zeros(m_points, dtype=complex)
        for m, (vm, wm) in enumerate(zip(v, w), start=1):
            phase = np.exp(1j * m * theta)
            expo += (np.real(phase * np.conj(vm))
                     + 1j * np.real(phase * np.conj(wm))) / m
        return complex(np.exp(expo).mean())

    m_points = 64
    prev = value(m_points)
    while m_points < CIRCLE_MCAP:
        m_points *= 2
        cur = value(m_points)
        if abs(cur - prev) <= CIRCLE_TOL * max(1.0, abs(cur)):
            return cur
        prev = cur
    raise NegativeDensityError(
        "circle_factor did not converge by M=2^16 (pathological tilt magnitudes)")


def laplace_transform(tilt: TiltVector, table: PrimeTable) -> complex:
    """E[exp(sum X_n.v_n + i sum X_n.w_n)] as the product over prime degree
    classes of circle averages raised to the E_d."""
    k = tilt.k
    out = 1.0 + 0j
    for d in range(1, k + 1):
        mmax = k // d
        v_args = [tilt.v[m * d - 1] for m in range(1, mmax + 1)]
        w_args = [tilt.w[m * d - 1] for m in range(1, mmax + 1)]
        out *= circle_factor(v_args, w_args) ** table.E(d)
    return out


def characteristic_function(w_list, table: PrimeTable) -> complex:
    return laplace_transform(TiltVector.of([0.0] * len(list(w_list)), w_list), table)


# ---------------------------------------------------------------------------
# reference Fourier inversion (tensor Gauss-Legendre, k <= 3)

def truncation_radius(q: int, n: int, eps: float = ENVELOPE_EPS) -> float:
    """Radius beyond which the Gaussian envelope e^{-q^n |w|^2/(4n)} < eps."""
    return math.sqrt(4 * n * math.log(1 / eps) / q**n)


def support_radius(q: int, n: int) -> float:
    """Exact support bound |X_n| <= sum_{d|n} E_d d/n = q^n/n."""
    return q**n / n


def decay_exponent(q: int, n: int, k: int) -> float:
    """Stationary-phase decay rate of the characteristic function in
    |w_n|: each degree-d factor with d | n contributes E_d/2."""
    return sum(irreducible_count(q, d) for d in range(1, k + 1) if n % d == 0) / 2


def inversion_radius(q: int, n: int, k: int) -> float:
    """Truncation radius for the w_n integration.  The Gaussian envelope
    rules near the origin, but the transform only decays like
    |w_n|^{-G} with G = decay_exponent, so small prime counts force a
    much larger (oscillation-reliant) radius.  One-dimensional inversions
    are cheap, so k=1 gets generous caps."""
    r_gauss = truncation_radius(q, n)
    g = decay_exponent(q, n, k)
    if g >= 6.0:
        return r_gauss
    if k == 1:
        cap = 1400.0 if g < 2.2 else (640.0 if g < 3.5 else 48.0)
    else:
        cap = (96.0 if g < 3.5 else 24.0) / n
    return max(r_gauss, cap)


def _gl_nodes(r: float, count: int):
    x, w = np.polynomial.legendre.leggauss(count)
    return x * r, w * r  # map [-1,1] -> [-r, r]


def _axis_node_count(radius: float, abs_x: float, q: int, n: int) -> int:
    # the transform is band-limited by the support radius; add the
    # oscillation of e^{-i x.w} and a safety margin
    bandwidth = support_radius(q, n) + min(abs_x, 1.1 * support_radius(q, n)) + 0.5
    return int(radius * bandwidth / 2 * 1.06) + 32


def canonical_rotation(x) -> list:
    """Rotate (x_1,...,x_k) by the exact symmetry x_n -> e^{i n a} x_n to
    make the first nonzero entry real nonnegative; the density is invariant.
    """
    x = _as_complex_list(x)
    for n, xn in enumerate(x, start=1):
        if abs(xn) > 0:
            a = -math.atan2(xn.imag, xn.real) / n
            return [z * complex(math.cos(m * a), math.sin(m * a))
                    for m, z in enumerate(x, start=1)]
    return x


def _charfn_on_points(W_cols, table: PrimeTable, k: int, theta_points: int,
                      chunk: int = 16384) -> np.ndarray:
    """Characteristic function at a batch of tilt points; W_cols is a list of
    k complex arrays of equal (flat) shape."""
    theta = np.arange(theta_points) * (2 * np.pi / theta_points)
    npts = W_cols[0].size
    out = np.ones(npts, dtype=complex)
    flat = [w.reshape(-1) for w in W_cols]
    for d in range(1, k + 1):
        mmax = k // d
        if mmax == 1:
            out *= bessel_j0(np.abs(flat[d - 1])) ** table.E(d)
            continue
        for lo in range(0, npts, chunk):
            hi = min(lo + chunk, npts)
            expo = np.zeros((hi - lo, theta_points), dtype=complex)
            for m in range(1, mmax + 1):
                wm = flat[m * d - 1][lo:hi]
                phase = np.exp(1j * m * theta)
                expo += 1j * np.real(phase[None, :] * np.conj(wm)[:, None]) / m
            out[lo:hi] *= np.exp(expo).mean(axis=-1) ** table.E(d)
    return out.reshape(W_cols[0].shape)


def density_F(x, table: PrimeTable, *, radii=None, node_counts=None,
              theta_points: int = 256, clamp: float = 1e-9,
              node_cap: int = 30_000_000) -> float:
    """Joint density of (X_1..X_k) at the complex point x, by Fourier
    inversion over R^{2k} with tensor-product Gauss-Legendre panels.

    Exactly 0 outside the support box |x_n| <= q^n/n.  Values in
    (-clamp, 0) are clamped to 0; anything more negative raises.
    """
    x = _as_complex_list(x)
    k = len(x)
    if k > 3:
        raise ValueError("direct inversion supports k <= 3")
    q = table.q
    if q <= 2:
        raise ValueError("the joint density requires q > 2")
    for n in range(1, k + 1):
        if abs(x[n - 1]) > support_radius(q, n) + 1e-9:
            return 0.0
    x = canonical_rotation(x)
    radii = list(radii) if radii else [inversion_radius(q, n, k)
                                       for n in range(1, k + 1)]
    counts = list(node_counts) if node_counts else \
        [_axis_node_count(radii[n - 1], abs(x[n - 1]), q, n)
         for n in range(1, k + 1)]
    total_nodes = 1
    for c in counts:
        total_nodes *= c * c
    if total_nodes > node_cap:
        raise BudgetExceededError(
            f"inversion grid has {total_nodes} nodes (> {node_cap}); "
            "pass radii/node_counts explicitly for large cases")

    axes, weights = [], []
    for n in range(1, k + 1):
        nodes_n, w_n = _gl_nodes(radii[n - 1], counts[n - 1])
        axes.extend([nodes_n, nodes_n])
        weights.extend([w_n, w_n])

    # iterate over the first real axis, vectorize the remaining 2k-1
    rest = np.meshgrid(*axes[1:], indexing="ij") if len(axes) > 1 else []
    rest_weight = np.ones(rest[0].shape) if rest else np.array(1.0)
    for i, w_ax in enumerate(weights[1:]):
        shape = [1] * len(rest)
        shape[i] = -1
        rest_weight = rest_weight * w_ax.reshape(shape)

    total = 0.0
    for u1, wu1 in zip(axes[0], weights[0]):
        W = []
        for n in range(k):
            re = rest[2 * n - 1] if n > 0 else np.full(rest[0].shape if rest else (), u1)
            im = rest[2 * n]
            W.append(re + 1j * im)
        phi = _charfn_on_points(W, table, k, theta_points)
        phase = np.zeros(phi.shape)
        for n in range(k):
            phase += np.real(np.conj(x[n]) * W[n])
        val = np.real(phi * np.exp(-1j * phase)) * rest_weight
        total += wu1 * val.sum()
    total /= (2 * np.pi) ** (2 * k)

    if total < -clamp:
        raise NegativeDensityError(
            f"density_F at {x}: value {total} below -{clamp} (quadrature failure)")
    return max(total, 0.0)


def gaussian_reference(x, q: int) -> float:
    """The matching centered Gaussian density prod_n e^{-n|x_n|^2/q^n} n/(q^n pi)."""
    out = 1.0
    for n, xn in enumerate(_as_complex_list(x), start=1):
        out *= math.exp(-n * abs(xn) ** 2 / q**n) * n / (q**n * math.pi)
    return out


def weight_ratio(x, table: PrimeTable, **kwargs) -> float:
    """density_F over the matching Gaussian; exactly 0 outside the support
    box |x_n| <= q^n/n."""
    x = _as_complex_list(x)
    q = table.q
    for n, xn in enumerate(x, start=1):
        if abs(xn) > support_radius(q, n) + 1e-9:
            return 0.0
    return density_F(x, table, **kwargs) / gaussian_reference(x, q)


# ---------------------------------------------------------------------------
# exact Hermite coefficients

def _binom(n: int, k: int) -> int:
    return math.comb(n, k)


def _times_minus_i_power(re: Fraction, im: Fraction, deg: int) -> Fraction:
    """Real value of (-i)^deg (re + i im); raises if a nonzero imaginary
    part would survive (it cannot, by the parity structure of the h's)."""
    deg %= 4
    real, imag = ((re, im), (im, -re), (-re, -im), (-im, re))[deg]
    if imag != 0:
        raise NegativeDensityError(
            "hermite coefficient violates the real/imaginary parity split")
    return real


@dataclass
class HermiteTable:
    """Coefficients h_a of the characteristic-function expansion
    E[e^{i sum X.w}] = e^{-sum (q^n/n)|w_n|^2/4} sum_a h_a prod w^a,
    indexed by 2k-tuples, with exact rational backing.

    The same numbers drive the Hermite expansion of the density-to-Gaussian
    ratio: the coefficient of prod He_{a}(x sqrt(2n/q^n)) * scale^{|a|} is
    (-i)^{|a|} h_a, which is always real (h_a is real for even |a| and
    purely imaginary for odd |a|; construction asserts this exactly).
    """

    k: int
    q: int
    max_weighted_degree: int
    entries: dict           # 2k-tuple -> complex h_a
    exact: dict             # 2k-tuple -> (Fraction, Fraction)

    def weighted_degree(self, key) -> int:
        return sum((n + 1) * (key[2 * n] + key[2 * n + 1]) for n in range(self.k))

    def density_coeff(self, key) -> Fraction:
        """The real coefficient (-i)^{|a|} h_a in the density expansion."""
        re, im = self.exact[key]
        return _times_minus_i_power(re, im, sum(key))

    def l2_tail_norm(self, cutoff: int) -> float:
        """L2 norm, against the matching Gaussian, of the expansion terms
        with weighted degree in (cutoff, max_weighted_degree]; by
        orthogonality this is the exact truncation error within the table's
        range."""
        total = 0.0
        for key in self.exact:
            if self.weighted_degree(key) <= cutoff:
                continue
            h = float(self.density_coeff(key))
            if h == 0:
                continue
            term = h * h
            for n in range(1, self.k + 1):
                a1, a2 = key[2 * (n - 1)], key[2 * (n - 1) + 1]
                term *= math.factorial(a1) * math.factorial(a2) \
                    * (2 * n / self.q**n) ** (a1 + a2)
            total += term
        return math.sqrt(total)

    def charfn_value(self, w_list) -> complex:
        """Reconstruct E[e^{i sum X.w}] from the table (series times the
        Gaussian envelope); accurate for small |w|."""
        w = _as_complex_list(w_list)
        total = 0j
        for key, h in self.entries.items():
            term = h
            for n in range(self.k):
                term *= w[n].real ** key[2 * n] * w[n].imag ** key[2 * n + 1]
            total += term
        env = 1.0
        for n, wn in enumerate(w, start=1):
            env *= math.exp(-(self.q**n / n) * abs(wn) ** 2 / 4)
        return env * total


def hermite_coeffs(k: int, q: int, max_weighted_degree: int) -> HermiteTable:
    """Exact h table to the given weighted degree (W_n, conj W_n and both
    real coordinates of index n all weigh n)."""
    D = max_weighted_degree
    series = charfn_series(q, k, D)

    # multiply by prod_n e^{+(q^n/4n) W_n conj(W_n)}; stored rational parts
    # absorb i^{2j} = (-1)^j
    weights = tuple(w for n in range(1, k + 1) for w in (n, n))
    h_w = dict(series)
    for n in range(1, k + 1):
        factor = {}
        j = 0
        while 2 * n * j <= D:
            key = [0] * (2 * k)
            key[2 * (n - 1)] = j
            key[2 * (n - 1) + 1] = j
            factor[tuple(key)] = (Fraction(-1) ** j) * Fraction(q**n, 4 * n) ** j \
                / math.factorial(j)
            j += 1
        h_w = _series_mul(h_w, factor, k, D, weights)

    # change basis from (conj W^a W^b) to real coordinates w_1^{a1} w_2^{a2}
    exact = {}
    for key, c in h_w.items():
        deg = sum(key)
        parts = []  # per n: list of (a1, a2, ipow, integer coeff)
        for n in range(k):
            a, b = key[2 * n], key[2 * n + 1]
            opts = []
            for s in range(a + 1):
                for t in range(b + 1):
                    coeff = _binom(a, s) * _binom(b, t)
                    ipow = (b - t) - (a - s)  # i^{b-t} * (-i)^{a-s}
                    opts.append((s + t, (a - s) + (b - t), ipow, coeff))
            parts.append(opts)

        def expand(idx, rkey, ipow, coeff):
            if idx == k:
                tot_ip = (ipow + deg) % 4
                re, im = exact.get(rkey, (Fraction(0), Fraction(0)))
                val = c * coeff
                if tot_ip == 0:
                    re += val
                elif tot_ip == 1:
                    im += val
                elif tot_ip == 2:
                    re -= val
                else:
                    im -= val
                exact[rkey] = (re, im)
                return
            for a1, a2, ip, co in parts[idx]:
                expand(idx + 1, rkey + (a1, a2), ipow + ip, coeff * co)

        expand(0, (), 0, 1)

    # every admissible index is present, zeros included
    def fill(idx, key, budget):
        if idx == k:
            exact.setdefault(tuple(key), (Fraction(0), Fraction(0)))
            return
        n = idx + 1
        for a1 in range(budget // n + 1):
            for a2 in range((budget - n * a1) // n + 1):
                fill(idx + 1, key + [a1, a2], budget - n * (a1 + a2))

    fill(0, [], D)
    entries = {key: complex(float(re), float(im)) for key, (re, im) in exact.items()}
    tbl = HermiteTable(k, q, D, entries, exact)
    for key in exact:
        tbl.density_coeff(key)  # exact parity check: real/imaginary split
    return tbl


def _hermite_values(y: np.ndarray, max_deg: int) -> np.ndarray:
    """He_0..He_max_deg at y (probabilists'), stacked along the first axis."""
    out = np.empty((max_deg + 1,) + y.shape)
    out[0] = 1.0
    if max_deg >= 1:
        out[1] = y
    for j in range(1, max_deg):
        out[j + 1] = y * out[j] - j * out[j - 1]
    return out


def hermite_weight_eval(tbl: HermiteTable, x, cutoff: int) -> float:
    """Truncated Hermite-series approximation to weight_ratio(x)."""
    val = hermite_weight_batch(tbl, np.asarray(_as_complex_list(x))[None, :], cutoff)
    return float(val[0])


def hermite_weight_batch(tbl: HermiteTable, xs: np.ndarray, cutoff: int) -> np.ndarray:
    """Vectorized hermite_weight_eval over rows of xs (shape (m, k))."""
    if cutoff > tbl.max_weighted_degree:
        raise ValueError(
            f"cutoff {cutoff} exceeds table degree {tbl.max_weighted_degree}")
    k, q = tbl.k, tbl.q
    max_deg = max((max(key) for key in tbl.entries if any(key)), default=0)
    he = []
    for n in range(1, k + 1):
        scale = math.sqrt(2 * n / q**n)
        he.append((_hermite_values(xs[:, n - 1].real * scale, max_deg),
                   _hermite_values(xs[:, n - 1].imag * scale, max_deg), scale))
    total = np.zeros(xs.shape[0])
    for key, h in tbl.entries.items():
        if h == 0 or tbl.weighted_degree(key) > cutoff:
            continue
        term = np.full(xs.shape[0], float(tbl.density_coeff(key)))
        for n in range(k):
            a1, a2 = key[2 * n], key[2 * n + 1]
            h1, h2, scale = he[n]
            term = term * (h1[a1] * h2[a2] * scale ** (a1 + a2))
        total += term
    return total


def probe_ov_ratio(v_grid) -> dict:
    """Empirical study of (|v|^2/4 - log circle average) / min(|v|^4, |v|^2)
    over a grid of real tilt magnitudes; the minimum must stay positive."""
    ratios = []
    for v in v_grid:
        cf = circle_factor([complex(v, 0.0)], [0.0])
        ratio = (v**2 / 4 - math.log(cf.real)) / min(v**4, v**2)
        ratios.append(ratio)
    return {"grid": [float(v) for v in v_grid],
            "ratios": [float(r) for r in ratios],
            "min": float(min(ratios))}


# ---------------------------------------------------------------------------
# fast ensemble evaluator (angular Bessel modes)

def _bessel_int(order: int, z: np.ndarray) -> np.ndarray:
    if order >= 0:
        return bessel_jv(order, z)
    return (-1) ** (-order) * bessel_jv(-order, z)


class FourierWeightEvaluator:
    """Evaluates the joint density (and reweighting factor) at many points.

    The characteristic function depends on the tilt angles only through
    chi_m = psi_m - m psi_1, so a Fourier expansion in those k-1 angles
    reduces the 2k-dimensional inversion to a radial quadrature per angular
    mode; the mode tensors are precomputed once per ensemble.
    """

    def __init__(self, q: int, k: int, max_abs_x=None, *, mode_cap: int = None,
                 chi_points: int = None, mode_tol: float = 1e-13,
                 radii=None, radial_counts=None, grid_cap: int = 400_000):
        if k > 3:
            raise ValueError("fourier weights support k <= 3")
        if q <= 2:
            raise ValueError("the joint density requires q > 2")
        self.q, self.k = q, k
        sigma = [min(float(s), support_radius(q, n) * 1.05)
                 for n, s in enumerate(max_abs_x or [support_radius(q, n)
                                                     for n in range(1, k + 1)], start=1)]
        radii = list(radii) if radii else [inversion_radius(q, n, k)
                                           for n in range(1, k + 1)]
        self.radial = []
        grid_size = 1
        for n in range(1, k + 1):
            r = radii[n - 1]
            count = (radial_counts[n - 1] if radial_counts
                     else _axis_node_count(r, sigma[n - 1], q, n))
            grid_size *= count
            nodes, wts = np.polynomial.legendre.leggauss(count)
            nodes = (nodes + 1) * (r / 2)
            wts = wts * (r / 2)
            self.radial.append((nodes, wts * nodes))  # include rho drho measure
        if grid_size > grid_cap:
            raise BudgetExceededError(
                f"radial grid has {grid_size} nodes (> {grid_cap}); "
                "pass radii/radial_counts explicitly")

        # angular modes only decay through the J_n(rho_2/2), J_n(rho_3/3)
        # factors, so the cap tracks those radii
        if mode_cap is None:
            mode_cap = 10 + int(max(radii[n - 1] / (2 * n)
                                    for n in range(2, k + 1)) * 0.75) if k > 1 else 0
        self.mode_cap = mode_cap
        if chi_points is None:
            chi_points = 1 << max(6, (2 * mode_cap + 2).bit_length())

        e_counts = [irreducible_count(q, d) for d in range(1, k + 1)]
        if k == 1:
            rho1 = self.radial[0][0]
            self.modes = {(): bessel_j0(rho1) ** e_counts[0]}
        else:
            self.modes = self._build_modes(e_counts, mode_cap, chi_points, mode_tol)

    def _build_modes(self, e_counts, mode_cap, chi_points, mode_tol):
        k = self.k
        rho = [r[0] for r in self.radial]
        mesh = np.meshgrid(*rho, indexing="ij")
        # C1 angular modes are explicit Bessel products (the theta average
        # keeps only terms with winding n_1 + 2 n_2 + 3 n_3 = 0); placing
        # them in a zero-padded spectrum and applying the DFT evaluates C1
        # on the chi grid.
        orders = range(-mode_cap, mode_cap + 1)
        spec_in = np.zeros((chi_points,) * (k - 1) + mesh[0].shape, dtype=complex)
        if k == 2:
            for n2 in orders:
                coeff = (1j) ** (-n2) * _bessel_int(-2 * n2, mesh[0]) \
                    * _bessel_int(n2, mesh[1] / 2)
                spec_in[n2 % chi_points] += coeff
        else:
            for n2 in orders:
                j2 = _bessel_int(n2, mesh[1] / 2)
                for n3 in orders:
                    ell = -2 * n2 - 3 * n3
                    coeff = (1j) ** (n2 + n3 + ell) * _bessel_int(ell, mesh[0]) \
                        * j2 * _bessel_int(n3, mesh[2] / 3)
                    if np.max(np.abs(coeff)) < mode_tol:
                        continue
                    spec_in[n2 % chi_points, n3 % chi_points] += coeff
        grids = np.fft.fftn(spec_in, axes=tuple(range(k - 1)))
        phi = grids ** e_counts[0]
        for d in range(2, k + 1):
            phi *= bessel_j0(rho[d - 1]) ** e_counts[d - 1]
        axes = tuple(range(k - 1))
        spectrum = np.fft.fftn(phi, axes=axes) / chi_points ** (k - 1)
        modes = {}
        freq = np.fft.fftfreq(chi_points, d=1.0 / chi_points).astype(int)
        scale = np.max(np.abs(spectrum))
        if k == 2:
            for i, m2 in enumerate(freq):
                if abs(m2) > mode_cap:
                    continue
                tensor = spectrum[i]
                if np.max(np.abs(tensor)) > mode_tol * scale:
                    modes[(m2,)] = tensor
        else:
            for i, m2 in enumerate(freq):
                if abs(m2) > mode_cap:
                    continue
                for j, m3 in enumerate(freq):
                    if abs(m3) > mode_cap:
                        continue
                    tensor = spectrum[i, j]
                    if np.max(np.abs(tensor)) > mode_tol * scale:
                        modes[(m2, m3)] = tensor
        return modes

    def density(self, xs: np.ndarray) -> np.ndarray:
        """Joint density at each row of xs (shape (m, k) complex)."""
        xs = np.atleast_2d(np.asarray(xs, dtype=complex))
        m, k = xs.shape
        assert k == self.k
        sig = np.abs(xs)
        unit = np.where(sig > 0, xs / np.where(sig > 0, sig, 1.0), 1.0)
        out = np.zeros(m, dtype=complex)
        for mvec, tensor in self.modes.items():
            ell1 = -sum((j + 2) * mj for j, mj in enumerate(mvec))
            orders = (ell1,) + mvec
            term = np.ones(m, dtype=complex)
            radial_parts = []
            for n in range(k):
                nodes, wts = self.radial[n]
                jvals = _bessel_int(orders[n], np.outer(sig[:, n], nodes))
                radial_parts.append(jvals * wts[None, :])
                term = term * unit[:, n] ** orders[n] * (-1j) ** orders[n]
            if k == 1:
                rad = np.einsum("si,i->s", radial_parts[0], tensor)
            elif k == 2:
                rad = np.einsum("si,sj,ij->s", *radial_parts, tensor)
            else:
                rad = np.einsum("si,sj,sl,ijl->s", *radial_parts, tensor)
            out += term * rad
        out /= (2 * np.pi) ** k
        return np.maximum(out.real, 0.0)

    def weights(self, xs: np.ndarray) -> np.ndarray:
        """density / matching Gaussian, with the exact support cut."""
        xs = np.atleast_2d(np.asarray(xs, dtype=complex))
        q, k = self.q, self.k
        gauss = np.ones(xs.shape[0])
        inside = np.ones(xs.shape[0], dtype=bool)
        for n in range(1, k + 1):
            a2 = np.abs(xs[:, n - 1]) ** 2
            gauss *= np.exp(-n * a2 / q**n) * n / (q**n * np.pi)
            inside &= np.sqrt(a2) <= support_radius(q, n) + 1e-9
        dens = self.density(xs)
        return np.where(inside, dens / gauss, 0.0)
