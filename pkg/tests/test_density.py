"""Transform, inversion, reweighting, and Hermite machinery."""

import math
from fractions import Fraction

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.special import eval_hermitenorm

from ffchimera.density import (
    FourierWeightEvaluator,
    TiltVector,
    characteristic_function,
    circle_factor,
    density_F,
    gaussian_reference,
    hermite_coeffs,
    hermite_weight_batch,
    hermite_weight_eval,
    laplace_transform,
    probe_ov_ratio,
    support_radius,
    truncation_radius,
    weight_ratio,
)
from ffchimera.eulerprod import MonomialSpec, x_mixed_moment
from ffchimera.ffpoly import PrimeTable


def bessel_like_series(t: float, sign: float) -> float:
    """sum_d (sign)^d t^{2d} / ((d!)^2 2^{2d}); sign=+1 is the real-tilt
    series, sign=-1 its imaginary-tilt counterpart."""
    total, term, d = 0.0, 1.0, 0
    while abs(term) > 1e-18 and d < 200:
        total += term
        d += 1
        term *= sign * t * t / (4 * d * d)
    return total


@pytest.fixture(scope="module")
def table3():
    return PrimeTable(3, 4)


@pytest.fixture(scope="module")
def table5():
    return PrimeTable(5, 3)


def test_circle_factor_trivial():
    assert abs(circle_factor([0.0], [0.0]) - 1.0) < 1e-14


def test_circle_factor_real_tilt_series():
    for t in (0.3, 1.0, 2.5, 4.0):
        got = circle_factor([complex(t, 0)], [0.0])
        assert abs(got - bessel_like_series(t, +1.0)) < 1e-10


def test_circle_factor_imaginary_tilt_series():
    for t in (0.3, 1.0, 2.5, 4.0):
        got = circle_factor([0.0], [complex(t, 0)])
        assert abs(got - bessel_like_series(t, -1.0)) < 1e-10


def test_circle_factor_rotation_invariance():
    a = circle_factor([1.2 + 0.4j, 0.3 - 0.2j], [0.1j, 0.2])
    # rotating every index-m argument by e^{i m phi} shifts theta only
    phi = 1.1
    b = circle_factor([(1.2 + 0.4j) * np.exp(1j * phi), (0.3 - 0.2j) * np.exp(2j * phi)],
                      [0.1j * np.exp(1j * phi), 0.2 * np.exp(2j * phi)])
    assert abs(a - b) < 1e-11


def test_laplace_transform_zero_tilt(table3):
    tilt = TiltVector.of([0, 0], [0, 0])
    assert abs(laplace_transform(tilt, table3) - 1.0) < 1e-13


def test_laplace_transform_single_class(table3):
    t = 1.7
    got = laplace_transform(TiltVector.of([0.0], [complex(t, 0)]), table3)
    want = bessel_like_series(t, -1.0) ** 3
    assert abs(got - want) < 1e-10


def test_laplace_transform_taylor_oracle(table3):
    """Fourth-order Taylor in the tilt against exact X-moments: with
    Y = sum X_n . w_n, E[e^{iY}] expands over multi-indices (p, pbar) as
    (i/2)^{|p|+|pbar|} conj(W)^p W^pbar / (p! pbar!) E[prod X^p conj(X)^pbar].
    """
    q = 3
    eps = 0.08
    w = [complex(eps, 0.3 * eps), complex(-0.2 * eps, eps)]
    got = laplace_transform(TiltVector.of([0, 0], w), table3)
    want = 0j
    idx = [(p1, pb1, p2, pb2)
           for p1 in range(5) for pb1 in range(5)
           for p2 in range(5) for pb2 in range(5)
           if p1 + pb1 + p2 + pb2 <= 4]
    for p1, pb1, p2, pb2 in idx:
        mom = x_mixed_moment(
            MonomialSpec.x_moment({1: (p1, pb1), 2: (p2, pb2)}), q).to_float()
        if mom == 0:
            continue
        t = p1 + pb1 + p2 + pb2
        term = (0.5j) ** t * mom
        term *= np.conj(w[0]) ** p1 * w[0] ** pb1 / (
            math.factorial(p1) * math.factorial(pb1))
        term *= np.conj(w[1]) ** p2 * w[1] ** pb2 / (
            math.factorial(p2) * math.factorial(pb2))
        want += term
    assert abs(got - want) < 1e-6


def test_characteristic_function_is_bounded(table3):
    val = characteristic_function([0.4 + 0.1j, 0.2j], table3)
    assert abs(val) <= 1 + 1e-12


def test_density_k1_integrates_to_one(table3):
    # radial integral of the k=1 density over its support disc
    ev = FourierWeightEvaluator(3, 1)
    total, _ = quad(lambda r: 2 * np.pi * r * ev.density(np.array([[r + 0j]]))[0],
                    0, 3.5, limit=200)
    assert abs(total - 1.0) < 1e-3


def test_density_k1_vanishes_outside_support(table3):
    assert density_F([4.0 + 0j], table3) < 1e-9
    assert weight_ratio([3.4 + 0j], table3) == 0.0


def test_density_k1_rotation_invariance(table3):
    # the evaluator canonicalizes by the exact rotation symmetry, so
    # invariance holds to machine precision
    kw = dict(radii=[48.0], node_counts=[220])
    base = density_F([1.3 + 0j], table3, **kw)
    for ang in np.linspace(0, 2 * np.pi, 8, endpoint=False):
        val = density_F([1.3 * np.exp(1j * ang)], table3, **kw)
        assert abs(val - base) < 1e-12


def test_fast_path_matches_reference_k1(table3):
    # q=3 is the 3-step Pearson walk: the transform decays like rho^{-3/2},
    # so truncated square-grid and disc-grid inversions can only agree to
    # the size of the oscillatory tail
    ev = FourierWeightEvaluator(3, 1, radii=[60.0], radial_counts=[260])
    for r in (0.0, 0.7, 1.9, 2.8):
        direct = density_F([complex(r, 0)], table3, radii=[60.0],
                           node_counts=[260])
        fast = ev.density(np.array([[complex(r, 0)]]))[0]
        assert abs(direct - fast) < 8e-3, (r, direct, fast)


def test_fast_path_matches_reference_k1_mid_q():
    table7 = PrimeTable(7, 1)
    ev = FourierWeightEvaluator(7, 1)
    for r in (0.0, 1.5, 4.0):
        direct = density_F([complex(r, 0)], table7)
        fast = ev.density(np.array([[complex(r, 0)]]))[0]
        assert abs(direct - fast) < 1e-6, (r, direct, fast)


def test_fast_path_matches_reference_k1_high_q():
    table13 = PrimeTable(13, 1)
    ev = FourierWeightEvaluator(13, 1)
    for r in (0.0, 1.2, 3.0):
        direct = density_F([complex(r, 0)], table13)
        fast = ev.density(np.array([[complex(r, 0)]]))[0]
        assert abs(direct - fast) < 2e-6, (r, direct, fast)


def test_fast_path_matches_reference_k2(table5):
    radii = [truncation_radius(5, 1), truncation_radius(5, 2)]
    ev = FourierWeightEvaluator(5, 2, max_abs_x=[3.0, 4.0], mode_cap=12,
                                radii=radii, radial_counts=[48, 40])
    pts = [(0.5 + 0.2j, 1.0 - 0.5j), (1.5j, 0.7 + 0.1j), (0.0j, 0.0j)]
    for x in pts:
        direct = density_F(list(x), table5, radii=radii, node_counts=[48, 40])
        fast = ev.density(np.array([list(x)]))[0]
        assert abs(direct - fast) < 1e-5, (x, direct, fast)


def test_weight_ratio_origin_value(table3):
    # F(0) * q * pi at the origin for k=1
    kw = dict(radii=[300.0], node_counts=[1100])
    w = weight_ratio([0j], table3, **kw)
    f0 = density_F([0j], table3, **kw)
    assert abs(w - f0 * 3 * math.pi) < 1e-9
    assert w > 0


def test_weight_ratio_positive_inside(table5):
    ev = FourierWeightEvaluator(5, 1)
    xs = np.array([[complex(a, b)] for a in np.linspace(-2, 2, 5)
                   for b in np.linspace(-2, 2, 5)])
    w = ev.weights(xs)
    assert np.all(w > 0)


def test_hermite_orthogonality_quadrature():
    # int He_n(x/s) He_m(x/s) gaussian(s) dx = n! delta_{nm}
    rng = np.random.default_rng(0)
    for sigma in (0.5, 1.0, 2.0):
        nodes, wts = np.polynomial.hermite_e.hermegauss(120)
        # hermegauss integrates against e^{-x^2/2}/sqrt(2pi)-unnormalized weight
        for n in range(0, 9, 2):
            for m in range(n, 9, 3):
                vals = (eval_hermitenorm(n, nodes) * eval_hermitenorm(m, nodes))
                got = (vals * wts).sum() / math.sqrt(2 * math.pi)
                want = math.factorial(n) if n == m else 0.0
                assert abs(got - want) < 1e-9 * max(1, math.factorial(n))


def test_hermite_fourier_identity():
    # int e^{ixy} He_n(x/s) gaussian_s(x) dx = (i s y)^n e^{-s^2 y^2 / 2};
    # the i^n factor is what turns charfn-series coefficients into the real
    # density-side coefficients.
    for sigma in (0.5, 1.0, 2.0):
        for n in range(7):
            for y in (0.3, 1.1):
                def integrand(x, part):
                    val = eval_hermitenorm(n, x / sigma) \
                        * np.exp(-x**2 / (2 * sigma**2)) \
                        / (math.sqrt(2 * math.pi) * sigma)
                    return val * (np.cos(x * y) if part == "re" else np.sin(x * y))
                re, _ = quad(integrand, -12 * sigma, 12 * sigma,
                             args=("re",), limit=300)
                im, _ = quad(integrand, -12 * sigma, 12 * sigma,
                             args=("im",), limit=300)
                want = (1j * sigma * y) ** n * math.exp(-(sigma * y) ** 2 / 2)
                assert abs(complex(re, im) - want) < 1e-8


def test_hermite_table_normalization_and_vanishing():
    for q, k in [(3, 1), (5, 2)]:
        tbl = hermite_coeffs(k, q, 6)
        zero = (0,) * (2 * k)
        assert tbl.exact[zero] == (Fraction(1), Fraction(0))
        for key, (re, im) in tbl.exact.items():
            wdeg = tbl.weighted_degree(key)
            if 1 <= wdeg <= 2 and key != zero:
                assert re == 0 and im == 0, key


def test_hermite_first_nonzero_degree_four():
    tbl = hermite_coeffs(2, 5, 4)
    nonzero = [key for key, (re, im) in tbl.exact.items()
               if (re, im) != (0, 0) and key != (0, 0, 0, 0)]
    assert nonzero, "expected nonzero coefficients at weighted degree 4"
    assert all(tbl.weighted_degree(key) >= 3 for key in nonzero)
    # the degree-4 mass traces back to E[X_1^2 conj X_2] = q/2
    assert x_mixed_moment(MonomialSpec.x_moment({1: (2, 0), 2: (0, 1)}), 5) \
        == Fraction(5, 2)


def test_hermite_charfn_roundtrip(table5):
    tbl = hermite_coeffs(2, 5, 14)
    rng = np.random.default_rng(3)
    for _ in range(4):
        w = rng.uniform(-0.35, 0.35, size=4)
        w_c = [complex(w[0], w[1]), complex(w[2], w[3])]
        reconstructed = tbl.charfn_value(w_c)
        direct = characteristic_function(w_c, table5)
        assert abs(reconstructed - direct) < 1e-6


def test_hermite_weight_eval_cutoffs(table5):
    """Truncation is the L2(Gaussian) projection of the weight: the exact
    tail norm decreases through the cutoffs, and the grid residual against
    the inversion reference sits at the scale the tail norm predicts
    (pointwise values wobble; the norm cannot grow)."""
    tbl = hermite_coeffs(1, 5, 28)
    assert hermite_weight_eval(tbl, [0j], 0) == 1.0
    tails = [tbl.l2_tail_norm(c) for c in (4, 8, 12)]
    assert tails[0] > tails[1] > tails[2] > 0

    nodes, wts = np.polynomial.hermite_e.hermegauss(10)
    sigma = math.sqrt(5 / 2)  # per-coordinate std of X_1
    xs = np.array([[complex(a, b) * sigma] for a in nodes for b in nodes])
    gw = np.array([wa * wb for wa in wts for wb in wts])
    ref = np.array([weight_ratio(list(row), table5, radii=[60.0],
                                 node_counts=[400]) for row in xs])
    approx = hermite_weight_batch(tbl, xs, 12)
    rms = math.sqrt(float(gw @ (approx - ref) ** 2) / gw.sum())
    # the D=28 table says the truncation error beyond cutoff 12 is ~tails[2];
    # the measured grid residual must be of that order, not wildly larger
    assert rms < 4 * tails[2] + 0.02


def test_hermite_batch_matches_scalar(table5):
    tbl = hermite_coeffs(2, 5, 8)
    xs = np.array([[0.3 + 0.2j, -0.4 + 1.0j], [1.0 + 0j, 0.5j]])
    batch = hermite_weight_batch(tbl, xs, 8)
    for i, row in enumerate(xs):
        assert abs(batch[i] - hermite_weight_eval(tbl, list(row), 8)) < 1e-12


def test_probe_ov_ratio():
    out = probe_ov_ratio(np.geomspace(0.05, 20, 25))
    assert out["min"] > 0
    assert abs(out["ratios"][0] - 1 / 64) < 0.1 / 64
    at10 = min(range(len(out["grid"])), key=lambda i: abs(out["grid"][i] - 10))
    assert out["ratios"][at10] >= 0.25 - 0.1


def test_radii_monotone():
    assert truncation_radius(5, 2) < truncation_radius(5, 1)
    assert support_radius(3, 2) == 4.5
