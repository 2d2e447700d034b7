"""Exact finite-size total-spin laws and their limiting behavior.

The total spin S_n under the fixed-(beta, K) ensemble has an exactly
computable distribution: configurations with n_+ up-spins and n_- down-spins
share the weight exp[-beta (n_+ + n_-) + beta K k^2 / n] with k = n_+ - n_-,
so the mass at total spin k is a single multinomial sum, accumulated here in
log space.  As n grows, S_n / n^(1 - 1/2r) converges to a limit density
governed by the type r of the potential's minimum: Gaussian for r = 1,
exp(-const x^4) or exp(-const x^6) at critical couplings.  This module
computes the exact laws, classifies minima, builds the limit densities and
measures Kolmogorov-Smirnov distances between the two, plus a seeded
single-site Metropolis chain as an independent stochastic cross-check.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.special import gammainc, gammaln, logsumexp
from scipy.stats import norm

from .canonical import minimum_type, solve_canonical
from .core import CanonicalParams, DomainError, Macrostate, cumulant

MAX_PMF_N = 20000  # O(n^2) enumeration cost bound

#: Largest n for which the sampler also tallies full configurations
#: (3^n states), enabling exact stationarity checks on tiny systems.
CONFIG_TALLY_MAX_N = 8


@dataclass(frozen=True)
class SpinPmf:
    """Exact law of the total spin S_n: support -n..n, log weights and masses."""

    n: int
    beta: float
    K: float
    spins: np.ndarray
    log_weights: np.ndarray
    probabilities: np.ndarray

    def mean(self) -> float:
        return float(np.dot(self.spins, self.probabilities))

    def var(self) -> float:
        m = self.mean()
        return float(np.dot((self.spins - m) ** 2, self.probabilities))

    def mass_near(self, center: float, a: float) -> float:
        """Probability that S_n / n lies within [center - a, center + a]."""
        x = self.spins / self.n
        return float(self.probabilities[np.abs(x - center) <= a].sum())


@dataclass(frozen=True)
class TypeReport:
    """Type classification of a potential minimum.

    r is half the order of the first nonvanishing even derivative;
    derivative_values holds the even derivatives (orders 2, 4, 6) at z;
    sigma2 is the asymptotic variance of the spin fluctuation, defined only
    for r = 1.
    """

    params: CanonicalParams
    z: float
    r: int
    derivative_values: tuple
    sigma2: float | None


def exact_spin_pmf(n: int, params: CanonicalParams) -> SpinPmf:
    """Exact total-spin distribution by multinomial summation (no sampling).

    For each k the masses of all (n_+, n_-) with n_+ - n_- = k are summed in
    log space with a max shift; weights span thousands of orders of magnitude
    already at n of a few thousand.  Cost is O(n^2); n is capped at
    MAX_PMF_N.
    """
    if not (isinstance(n, (int, np.integer)) and 1 <= n <= MAX_PMF_N):
        raise DomainError(f"n must be an integer in [1, {MAX_PMF_N}], got {n}")
    beta, K = params.beta, params.K
    lgfact = gammaln(np.arange(n + 1) + 1.0)
    half = np.empty(n + 1)
    for k in range(n + 1):
        n_minus = np.arange(0, (n - k) // 2 + 1)
        n_plus = n_minus + k
        n_zero = n - n_plus - n_minus
        terms = (lgfact[n] - lgfact[n_plus] - lgfact[n_minus] - lgfact[n_zero]
                 - beta * (n_plus + n_minus) + beta * K * k * k / n)
        half[k] = logsumexp(terms)
    log_w = np.concatenate([half[:0:-1], half])  # evenness in k -> -k
    probs = np.exp(log_w - logsumexp(log_w))
    probs /= probs.sum()
    return SpinPmf(n=n, beta=beta, K=K, spins=np.arange(-n, n + 1),
                   log_weights=log_w, probabilities=probs)


def classify_minimum(params: CanonicalParams, z: float) -> TypeReport:
    """Type of a global minimizer z of the magnetization potential.

    Walks the even-derivative ladder (orders 2, 4, 6).  For r = 1 the
    asymptotic variance is 2 beta K c''(2 beta K z) divided by the second
    derivative of the potential at z; for r >= 2 no finite variance exists
    and sigma2 is None.
    """
    r, evens = minimum_type(params, z)
    sigma2 = None
    if r == 1:
        a = 2.0 * params.beta * params.K
        sigma2 = a * cumulant(params.beta, a * z, 2) / evens[0]
        if sigma2 <= 0.0:
            raise RuntimeError(f"nonpositive variance at z = {z}")
    return TypeReport(params=params, z=z, r=r, derivative_values=evens,
                      sigma2=sigma2)


@dataclass(frozen=True)
class LimitDensity:
    """Limit law of S_n / n^(1-1/2r): normal for r = 1, else proportional to
    exp(-coef * x^(2r)) with coef = (even derivative at 0)/(2r)!.

    The normalization constant comes from quadrature (relative 1e-10); the
    CDF for r >= 2 uses the regularized incomplete gamma function.
    """

    r: int
    sigma2: float | None
    coef: float | None
    norm_const: float

    def pdf(self, x):
        if self.r == 1:
            return norm.pdf(x, scale=math.sqrt(self.sigma2))
        return np.exp(-self.coef * np.asarray(x, dtype=float) ** (2 * self.r)) \
            / self.norm_const

    def cdf(self, x):
        if self.r == 1:
            return norm.cdf(x, scale=math.sqrt(self.sigma2))
        x = np.asarray(x, dtype=float)
        m = 2 * self.r
        inner = gammainc(1.0 / m, self.coef * np.abs(x) ** m)
        return 0.5 + 0.5 * np.sign(x) * inner


def limit_density(report: TypeReport) -> LimitDensity:
    """Limit density for the scaling n^(1-1/2r) dictated by the report's type."""
    if report.r == 1:
        return LimitDensity(r=1, sigma2=report.sigma2, coef=None, norm_const=1.0)
    m = 2 * report.r
    deriv = report.derivative_values[report.r - 1]
    coef = deriv / math.factorial(m)
    val, _ = quad(lambda x: math.exp(-coef * x ** m), 0.0, np.inf,
                  epsabs=0.0, epsrel=1e-12)
    return LimitDensity(r=report.r, sigma2=None, coef=coef, norm_const=2.0 * val)


def ks_distance(points: np.ndarray, probabilities: np.ndarray, cdf,
                spacing: float) -> float:
    """Sup distance between a lattice law and a continuous CDF.

    Evaluated at every atom (exact sup over the discrete support); the
    continuous CDF is read mid-way between neighboring atoms, which removes
    the spurious half-atom floor a lattice otherwise shows against a
    continuous limit.
    """
    disc = np.cumsum(probabilities)
    cont = np.asarray(cdf(points + 0.5 * spacing))
    return float(np.max(np.abs(disc - cont)))


def _window_masses(pmf: SpinPmf, centers) -> list[float]:
    sol = solve_canonical(CanonicalParams(pmf.beta, pmf.K))
    zpos = max(abs(z) for z in sol.z_points)
    a = min(0.1, zpos / 2.0) if zpos > 0 else 0.1
    return [pmf.mass_near(c, a) for c in centers]


def phase_weights(params: CanonicalParams) -> tuple:
    """Limit weights b_j of the minimizers z_j for the law of S_n / n.

    Each minimizer carries weight proportional to its asymptotic variance;
    a symmetric pair therefore splits as (1/2, 1/2).
    """
    sol = solve_canonical(params)
    sigmas = [classify_minimum(params, z).sigma2 for z in sol.z_points]
    if any(s is None for s in sigmas):
        raise DomainError("phase weights need all minima of type 1")
    total = sum(sigmas)
    return tuple(s / total for s in sigmas)


def convergence_diagnostic(n_ladder, params: CanonicalParams) -> list[float]:
    """Per-n distance between the exact law and its limit.

    Unique-minimum regime: Kolmogorov-Smirnov distance between the law of
    S_n / n^(1-1/2r) and the limit density of the minimum's type.  Multiple
    minima: total variation distance between the law of S_n / n smeared over
    windows around each minimizer and the discrete limit law sum_j b_j at z_j.
    """
    sol = solve_canonical(params)
    out = []
    if len(sol.z_points) == 1:
        report = classify_minimum(params, sol.z_points[0])
        density = limit_density(report)
        scaling = 1.0 - 1.0 / (2.0 * report.r)
        for n in n_ladder:
            pmf = exact_spin_pmf(n, params)
            scale = float(n) ** scaling
            out.append(ks_distance(pmf.spins / scale, pmf.probabilities,
                                   density.cdf, 1.0 / scale))
        return out
    weights = phase_weights(params)
    for n in n_ladder:
        pmf = exact_spin_pmf(n, params)
        masses = _window_masses(pmf, sol.z_points)
        outside = 1.0 - sum(masses)
        tv = 0.5 * (sum(abs(m - b) for m, b in zip(masses, weights)) + outside)
        out.append(tv)
    return out


def conditioned_clt_check(n: int, params: CanonicalParams, j: str = "+",
                          a: float | None = None) -> float:
    """KS distance of the conditioned, centered spin law to its normal limit.

    Conditions S_n / n on the window [z_j - a, z_j + a] around the minimizer
    of sign j, centers by n z_j, scales by sqrt(n) and compares to the
    normal law with the minimizer's asymptotic variance.  Default window
    half-width min(0.1, z/2) isolates one phase while keeping mass.
    """
    sol = solve_canonical(params)
    zpos = max(abs(z) for z in sol.z_points)
    if len(sol.z_points) < 2 or zpos == 0.0:
        raise DomainError("conditioned limit needs multiple minimizers")
    if j not in ("+", "-"):
        raise DomainError(f"phase selector must be '+' or '-', got {j!r}")
    zj = zpos if j == "+" else -zpos
    if a is None:
        a = min(0.1, zpos / 2.0)
    pmf = exact_spin_pmf(n, params)
    keep = np.abs(pmf.spins / n - zj) <= a
    if not np.any(keep):
        raise DomainError(f"empty conditioning window around z = {zj}")
    probs = pmf.probabilities[keep]
    probs = probs / probs.sum()
    xs = (pmf.spins[keep] - n * zj) / math.sqrt(n)
    sigma2 = classify_minimum(params, zj).sigma2
    return ks_distance(xs, probs, lambda x: norm.cdf(x, scale=math.sqrt(sigma2)),
                       1.0 / math.sqrt(n))


# ---------------------------------------------------------------------------
# Metropolis cross-check
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MetropolisResult:
    """Empirical output of a single-site Metropolis chain.

    s_probs is the empirical law of the total spin over the chain (support
    -n..n); spin_freq the time-averaged empirical spin frequencies; trace the
    total spin after every step; config_probs the empirical law over all 3^n
    configurations (tallied only for n <= CONFIG_TALLY_MAX_N, else None).
    """

    n: int
    beta: float
    K: float
    steps: int
    seed: int
    s_probs: np.ndarray
    spin_freq: Macrostate
    trace: np.ndarray
    acceptance_rate: float
    config_probs: np.ndarray | None


# proposal table: for the current spin value (index s+1), the two other values
_PROPOSALS = ((0, 1), (-1, 1), (-1, 0))


def metropolis_sampler(n: int, params: CanonicalParams, steps: int,
                       seed: int) -> MetropolisResult:
    """Single-site Metropolis chain targeting the fixed-(beta, K) ensemble.

    A uniformly chosen site proposes one of its two other spin values
    (symmetric proposal), accepted with probability min(1, e^-dE) where
    dE = beta d(quad) - beta K (2 S ds + ds^2)/n.  Deterministic for a given
    seed; randomness is pre-drawn in blocks for speed.  The initial state is
    all zeros.
    """
    if not (isinstance(steps, (int, np.integer)) and steps >= 1):
        raise DomainError(f"steps must be a positive integer, got {steps}")
    beta, K = params.beta, params.K
    rng = np.random.default_rng(seed)
    state = [0] * n
    S = 0
    Q = 0
    bK = beta * K
    counts = np.zeros(2 * n + 1, dtype=np.int64)
    trace = np.empty(steps, dtype=np.int32)
    acc = 0
    sum_plus = 0
    sum_zero = 0
    tally_configs = n <= CONFIG_TALLY_MAX_N
    if tally_configs:
        config_counts = np.zeros(3 ** n, dtype=np.int64)
        pow3 = [3 ** j for j in range(n)]
        code = sum(pow3[j] * (state[j] + 1) for j in range(n))
    exp = math.exp
    done = 0
    while done < steps:
        block = min(65536, steps - done)
        sites = rng.integers(0, n, size=block)
        picks = rng.integers(0, 2, size=block)
        us = rng.random(block)
        for i in range(block):
            jsite = sites[i]
            s = state[jsite]
            prop = _PROPOSALS[s + 1][picks[i]]
            ds = prop - s
            dq = prop * prop - s * s
            dE = beta * dq - bK * (2 * S * ds + ds * ds) / n
            if dE <= 0.0 or us[i] < exp(-dE):
                state[jsite] = prop
                S += ds
                Q += dq
                acc += 1
                if tally_configs:
                    code += ds * pow3[jsite]
            counts[S + n] += 1
            trace[done + i] = S
            sum_plus += (Q + S) >> 1
            sum_zero += n - Q
            if tally_configs:
                config_counts[code] += 1
        done += block
    s_probs = counts / steps
    freq_plus = sum_plus / (steps * n)
    freq_zero = sum_zero / (steps * n)
    spin_freq = Macrostate(1.0 - freq_plus - freq_zero, freq_zero, freq_plus)
    config_probs = config_counts / steps if tally_configs else None
    return MetropolisResult(n=n, beta=beta, K=K, steps=steps, seed=seed,
                            s_probs=s_probs, spin_freq=spin_freq, trace=trace,
                            acceptance_rate=acc / steps,
                            config_probs=config_probs)


def exact_config_probs(n: int, params: CanonicalParams) -> np.ndarray:
    """Exact ensemble probabilities over all 3^n configurations, indexed by
    base-3 code sum_j 3^j (spin_j + 1).  Oracle for sampler stationarity."""
    if n > CONFIG_TALLY_MAX_N:
        raise DomainError(f"full enumeration capped at n = {CONFIG_TALLY_MAX_N}")
    beta, K = params.beta, params.K
    codes = np.arange(3 ** n)
    digits = (codes[:, None] // np.array([3 ** j for j in range(n)])) % 3 - 1
    S = digits.sum(axis=1)
    Q = (digits * digits).sum(axis=1)
    log_w = -beta * Q + beta * K * S * S / n
    probs = np.exp(log_w - logsumexp(log_w))
    return probs / probs.sum()
