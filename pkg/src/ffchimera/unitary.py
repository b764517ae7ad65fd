"""Haar sampling on U(N), secular coefficients of det(I - q^{1/2-s}M),
Gaussian-moment checks, and the reweighted (chimera) importance-sampling
estimator.

All randomness flows through numpy Generators seeded from an explicit
seed; ensembles are drawn in fixed-size chunks whose seeds derive from
(seed, chunk index), so results are independent of any parallel schedule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .density import (
    FourierWeightEvaluator,
    hermite_coeffs,
    hermite_weight_batch,
    support_radius,
)
from .errors import DegenerateEnsembleError
from .ffpoly import PrimeTable

CHUNK = 1024


def haar_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed U(N) matrix: Ginibre QR with the R-diagonal phase
    normalization that makes the factorization unique."""
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) \
        / math.sqrt(2)
    q_mat, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q_mat * (d / np.abs(d))


@dataclass
class UnitarySample:
    """One matrix draw, carried as eigenvalues plus derived data."""

    N: int
    q: int
    eigenvalues: np.ndarray
    traces: np.ndarray = field(init=False)      # tr M^j, j = 1..N
    secular: np.ndarray = field(init=False)     # c_0..c_N of det(I - q^{1/2-s}M)

    def __post_init__(self):
        powers = self.eigenvalues[None, :] ** np.arange(1, self.N + 1)[:, None]
        self.traces = powers.sum(axis=1)
        # prod (1 - q^{1/2} t lam_i): c_d = (-q^{1/2})^d e_d(lam)
        mon = np.poly(self.eigenvalues)[::-1]   # e_d with alternating signs
        self.secular = mon * (self.q ** (np.arange(self.N + 1) / 2.0))

    @property
    def b(self) -> np.ndarray:
        """b_n = -tr(M^n)/sqrt(n), the unit-variance coordinates."""
        n = np.arange(1, self.N + 1)
        return -self.traces / np.sqrt(n)

    def log_coeff_args(self, k: int) -> np.ndarray:
        """x_n = -q^{n/2} tr(M^n)/n for n <= k: the points where the
        reweighting density is evaluated."""
        n = np.arange(1, k + 1)
        return -(self.q ** (n / 2.0)) * self.traces[:k] / n

    def l_value(self, s: complex) -> complex:
        """The polynomial sum_d c_d q^{-ds} at the point s."""
        d = np.arange(self.N + 1)
        return complex((self.secular * self.q ** (-d * s)).sum())


def haar_sample(N: int, rng_seed, q: int = 2) -> UnitarySample:
    rng = np.random.default_rng(rng_seed)
    m = haar_unitary(N, rng)
    return UnitarySample(N, q, np.linalg.eigvals(m))


def secular_coeffs(eigenvalues, q: int) -> np.ndarray:
    """c_0..c_N: coefficients in q^{-s} of det(I - q^{1/2-s}M)."""
    eigenvalues = np.asarray(eigenvalues, dtype=complex)
    mon = np.poly(eigenvalues)[::-1]
    return mon * (q ** (np.arange(len(eigenvalues) + 1) / 2.0))


def newton_traces_from_secular(secular: np.ndarray, q: int) -> np.ndarray:
    """Reconstruct tr M^j from the secular coefficients via Newton's
    identities; a consistency oracle for the sampler."""
    n_max = len(secular) - 1
    e = secular * (-(q ** -0.5)) ** np.arange(n_max + 1)
    p = np.zeros(n_max + 1, dtype=complex)
    for j in range(1, n_max + 1):
        acc = -j * e[j]
        for i in range(1, j):
            acc -= e[i] * p[j - i]
        p[j] = -acc if False else acc * -1  # p_j = -(j e_j + sum e_i p_{j-i}) * (-1)
    # Newton: p_j - e_1 p_{j-1} + ... + (-1)^{j-1} e_{j-1} p_1 + (-1)^j j e_j = 0
    p = np.zeros(n_max + 1, dtype=complex)
    for j in range(1, n_max + 1):
        acc = (-1) ** (j - 1) * j * e[j]
        for i in range(1, j):
            acc += (-1) ** (i - 1) * e[i] * p[j - i]
        p[j] = acc
    return p[1:]


def _trace_batch(N: int, q: int, nsamples: int, seed, jmax: int):
    """Traces tr M^j (j <= jmax) for a deterministic chunked ensemble.
    Returns (traces array (nsamples, jmax), eigenvalue array)."""
    out = np.empty((nsamples, jmax), dtype=complex)
    eigs = np.empty((nsamples, N), dtype=complex)
    done = 0
    chunk_idx = 0
    while done < nsamples:
        take = min(CHUNK, nsamples - done)
        rng = np.random.default_rng(np.random.SeedSequence([seed, chunk_idx]))
        for i in range(take):
            lam = np.linalg.eigvals(haar_unitary(N, rng))
            eigs[done + i] = lam
            powers = lam[None, :] ** np.arange(1, jmax + 1)[:, None]
            out[done + i] = powers.sum(axis=1)
        done += take
        chunk_idx += 1
    return out, eigs


def ds_moment_check(N: int, monomial: dict, nsamples: int, seed,
                    traces: np.ndarray = None):
    """Monte-Carlo Haar moment of prod_j (tr M^j)^{a_j} conj(tr M^j)^{b_j}
    against its exact Gaussian value delta_{a,b} prod_j j^{a_j} a_j!,
    valid when the weighted degree sum_j j(a_j+b_j) is at most N.

    Returns (mc_mean, stderr, exact).
    """
    degree = sum(j * (a + b) for j, (a, b) in monomial.items())
    if degree > N:
        raise ValueError(
            f"weighted degree {degree} exceeds N={N}; the Gaussian-moment "
            "identity is not claimed there")
    jmax = max(monomial) if monomial else 1
    if traces is None:
        traces, _ = _trace_batch(N, 2, nsamples, seed, jmax)
    vals = np.ones(len(traces), dtype=complex)
    for j, (a, b) in monomial.items():
        t = traces[:, j - 1]
        vals *= t**a * np.conj(t) ** b
    mc = complex(vals.mean())
    se = float(np.sqrt(vals.var(ddof=1) / len(vals)))
    exact = 1.0
    for j, (a, b) in monomial.items():
        if a != b:
            exact = 0.0
            break
        exact *= float(j) ** a * math.factorial(a)
    return mc, se, exact


@dataclass
class WeightedEnsemble:
    """Haar draws with nonnegative chimera weights."""

    q: int
    N: int
    k: int
    traces: np.ndarray        # (nsamples, jmax)
    weights: np.ndarray
    secular: np.ndarray       # (nsamples, N+1)

    @property
    def size(self) -> int:
        return len(self.weights)

    @property
    def gamma_hat(self) -> float:
        return float(self.weights.mean())

    @property
    def ess(self) -> float:
        s = self.weights.sum()
        return float(s * s / (self.weights**2).sum())

    def x_args(self) -> np.ndarray:
        n = np.arange(1, self.k + 1)
        return -(self.q ** (n / 2.0)) * self.traces[:, :self.k] / n


def build_weighted_ensemble(q: int, N: int, beta: float, nsamples: int, seed,
                            weight_mode: str = "hermite", cutoff: int = None,
                            k_override: int = None) -> WeightedEnsemble:
    """Draw a Haar ensemble and attach the reweighting factors at
    x_n = -q^{n/2} tr(M^n)/n.

    weight_mode 'fourier' evaluates the density ratio by Fourier inversion
    (k <= 3); 'hermite' uses the truncated orthogonal-polynomial expansion
    (negative truncation values are clamped to zero).
    """
    if k_override is None:
        if not (0.25 < beta < 0.5):
            raise ValueError("beta must lie in (1/4, 1/2)")
        k = max(1, int(math.floor(N**beta)))
    else:
        k = k_override
    jmax = max(k, N)
    traces, eigs = _trace_batch(N, q, nsamples, seed, jmax)
    n = np.arange(1, k + 1)
    xs = -(q ** (n / 2.0)) * traces[:, :k] / n

    if weight_mode == "fourier":
        sigma = [min(float(np.abs(xs[:, i]).max()), support_radius(q, i + 1))
                 for i in range(k)]
        ev = FourierWeightEvaluator(q, k, max_abs_x=sigma)
        weights = ev.weights(xs)
    elif weight_mode == "hermite":
        cutoff = 8 if cutoff is None else cutoff
        tbl = hermite_coeffs(k, q, cutoff)
        weights = hermite_weight_batch(tbl, xs, cutoff)
        inside = np.ones(len(weights), dtype=bool)
        for i in range(k):
            inside &= np.abs(xs[:, i]) <= support_radius(q, i + 1) + 1e-9
        weights = np.where(inside, np.maximum(weights, 0.0), 0.0)
    else:
        raise ValueError(f"unknown weight mode {weight_mode!r}")

    secular = np.empty((nsamples, N + 1), dtype=complex)
    d = np.arange(N + 1)
    for i in range(nsamples):
        secular[i] = np.poly(eigs[i])[::-1] * q ** (d / 2.0)
    return WeightedEnsemble(q, N, k, traces, weights, secular)


def chimera_expectation(phi, q: int, N: int, beta: float, nsamples: int, seed,
                        weight_mode: str = "hermite", cutoff: int = None,
                        batches: int = 16, ensemble: WeightedEnsemble = None):
    """Self-normalized importance estimate of the reweighted-ensemble
    expectation of phi, with batch-means stderr.

    phi maps (secular row, traces row) to a complex number; the helper
    constructors in this module build common observables.  Returns
    (estimate, stderr, gamma_hat, ess).
    """
    ens = ensemble if ensemble is not None else build_weighted_ensemble(
        q, N, beta, nsamples, seed, weight_mode, cutoff)
    if ens.ess < 10:
        raise DegenerateEnsembleError(
            f"effective sample size {ens.ess:.2f} < 10")
    vals = phi(ens)
    w = ens.weights
    estimate = complex((w * vals).sum() / w.sum())

    edges = np.linspace(0, ens.size, batches + 1, dtype=int)
    ratios = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        wb = w[lo:hi]
        if wb.sum() > 0:
            ratios.append((wb * vals[lo:hi]).sum() / wb.sum())
    ratios = np.array(ratios)
    spread = np.sqrt(np.var(ratios.real, ddof=1) + np.var(ratios.imag, ddof=1))
    stderr = float(spread / math.sqrt(len(ratios)))
    return estimate, stderr, ens.gamma_hat, ens.ess


def phi_one():
    return lambda ens: np.ones(ens.size, dtype=complex)


def phi_coeff(d: int):
    """c_d as an observable."""
    return lambda ens: ens.secular[:, d].copy()


def phi_abs2_coeff(d: int):
    """|c_d|^2 as an observable."""
    return lambda ens: (np.abs(ens.secular[:, d]) ** 2).astype(complex)


def phi_central_product(r: int, rt: int, alpha=None):
    """prod_{j<=r} L(1/2+a_j) prod_{j>r} conj(L(1/2+a_j)) evaluated from
    the secular coefficients; alpha defaults to all zeros."""
    alpha = [0j] * (r + rt) if alpha is None else list(alpha)

    def phi(ens):
        d = np.arange(ens.N + 1)
        out = np.ones(ens.size, dtype=complex)
        for j in range(r):
            powers = ens.q ** (-d * (0.5 + alpha[j]))
            out *= ens.secular @ powers
        for j in range(r, r + rt):
            powers = ens.q ** (-d * (0.5 + alpha[j]))
            out *= np.conj(ens.secular @ powers)
        return out

    return phi


def support_probe(q: int, N: int, nsamples: int, seed, beta: float = 0.26,
                  weight_mode: str = "fourier") -> dict:
    """Fraction of Haar draws whose chimera weight is below 1e-12 (the
    numerically-vanishing region of the target measure), plus the support
    bound check on the retained samples."""
    ens = build_weighted_ensemble(q, N, beta, nsamples, seed, weight_mode)
    dead = ens.weights < 1e-12
    xs = ens.x_args()
    retained_x1 = np.abs(xs[~dead, 0]) if (~dead).any() else np.array([0.0])
    return {
        "q": q,
        "N": N,
        "k": ens.k,
        "nsamples": nsamples,
        "dead_fraction": float(dead.mean()),
        "max_retained_x1": float(retained_x1.max()),
        "support_bound_x1": support_radius(q, 1),
        "retained_within_bound": bool(
            (retained_x1 <= support_radius(q, 1) + 0.1).all()),
    }
