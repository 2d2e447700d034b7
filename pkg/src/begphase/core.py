"""Domain types and single-site thermodynamics of the mean-field spin-1 model.

Spins live on {-1, 0, +1}.  The prior is uniform; at inverse temperature beta
the quadratic single-site energy tilts it to

    single_site_measure(beta) = (e^-beta, 1, e^-beta) / (1 + 2 e^-beta).

This module provides the cumulant generating function of that measure with
closed-form derivatives through order six, the energy-per-site function, the
relative entropy, the Cramer rate function of the magnetization and the
large-deviation rate functions of the two ensembles.
"""

import math
from dataclasses import dataclass

import numpy as np

from .rootfind import bisect_newton

#: Inverse temperature at which the concavity of the cumulant derivative
#: changes character; transitions are continuous in K below, discontinuous above.
BETA_C = math.log(4.0)

_MASS_TOL = 1e-12


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of an operation."""


@dataclass(frozen=True)
class Macrostate:
    """Probability vector (nu_minus, nu_zero, nu_plus) over the spin values.

    Equilibrium states of both ensembles are macrostates; nu_i is the
    asymptotic fraction of sites carrying spin i.
    """

    nu_minus: float
    nu_zero: float
    nu_plus: float

    def __post_init__(self):
        masses = (self.nu_minus, self.nu_zero, self.nu_plus)
        if not all(math.isfinite(m) for m in masses):
            raise DomainError(f"macrostate masses must be finite, got {masses}")
        if min(masses) < -_MASS_TOL or max(masses) > 1.0 + _MASS_TOL:
            raise DomainError(f"macrostate masses must lie in [0, 1], got {masses}")
        if abs(sum(masses) - 1.0) > _MASS_TOL:
            raise DomainError(f"macrostate masses must sum to 1, got {masses}")

    def mean(self) -> float:
        """Average spin, in [-1, 1]."""
        return self.nu_plus - self.nu_minus

    def quad(self) -> float:
        """Average squared spin (fraction of nonzero sites), in [0, 1]."""
        return self.nu_plus + self.nu_minus

    def as_array(self) -> np.ndarray:
        return np.array([self.nu_minus, self.nu_zero, self.nu_plus])

    def isclose(self, other, tol=1e-9) -> bool:
        return (abs(self.nu_minus - other.nu_minus) <= tol
                and abs(self.nu_zero - other.nu_zero) <= tol
                and abs(self.nu_plus - other.nu_plus) <= tol)


UNIFORM = Macrostate(1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0)


@dataclass(frozen=True)
class CanonicalParams:
    """Inverse temperature beta > 0 and interaction strength K > 0."""

    beta: float
    K: float

    def __post_init__(self):
        if not (math.isfinite(self.beta) and self.beta > 0.0):
            raise DomainError(f"beta must be finite and positive, got {self.beta}")
        if not (math.isfinite(self.K) and self.K > 0.0):
            raise DomainError(f"K must be finite and positive, got {self.K}")


def energy_domain(K: float) -> tuple[float, float]:
    """Range [min(1-K, 0), 1] of the energy per site at coupling K."""
    return (min(1.0 - K, 0.0), 1.0)


@dataclass(frozen=True)
class MicroParams:
    """Energy per site u and interaction strength K > 0.

    u must lie in the attainable energy range [min(1-K, 0), 1].
    """

    u: float
    K: float

    def __post_init__(self):
        if not (math.isfinite(self.K) and self.K > 0.0):
            raise DomainError(f"K must be finite and positive, got {self.K}")
        lo, hi = energy_domain(self.K)
        if not (math.isfinite(self.u) and lo - _MASS_TOL <= self.u <= hi + _MASS_TOL):
            raise DomainError(
                f"u must lie in the attainable energy range [{lo}, {hi}], got {self.u}")


# ---------------------------------------------------------------------------
# Cumulant generating function of the tilted single-site measure
# ---------------------------------------------------------------------------

def _tilted_moments(beta, t):
    """(c(t), m1, m2): cumulant value and first two raw moments of the spin
    under the measure with masses proportional to (e^{-beta-t}, 1, e^{-beta+t}).

    Max-shifted so large |t| neither overflows nor underflows; sums are
    grouped so the results are exactly even/odd under t -> -t, and the value
    at t = 0 is exactly zero.
    """
    lw_m = -beta - t
    lw_p = -beta + t
    shift = max(0.0, lw_m, lw_p)
    w0 = math.exp(-shift)
    wm = math.exp(lw_m - shift)
    wp = math.exp(lw_p - shift)
    d = w0 + (wm + wp)
    c0 = 0.0 if t == 0.0 else \
        shift + math.log(d) - math.log1p(2.0 * math.exp(-beta))
    return c0, (wp - wm) / d, (wm + wp) / d


def _tilted_moments_vec(beta, t):
    """Vectorized counterpart of _tilted_moments for numpy arrays t."""
    t = np.asarray(t, dtype=float)
    lw_m = -beta - t
    lw_p = -beta + t
    shift = np.maximum(0.0, np.maximum(lw_m, lw_p))
    w0 = np.exp(-shift)
    wm = np.exp(lw_m - shift)
    wp = np.exp(lw_p - shift)
    d = w0 + (wm + wp)
    c0 = shift + np.log(d) - math.log1p(2.0 * math.exp(-beta))
    c0 = np.where(t == 0.0, 0.0, c0)
    return c0, (wp - wm) / d, (wm + wp) / d


def _cumulant_from_moments(m1, m2, order):
    """Cumulant of given order from the raw moments of a {-1,0,1} variable.

    Powers of the spin repeat (odd moments all equal m1, even ones m2), so the
    standard moment-to-cumulant expansions close over (m1, m2).  Elementwise,
    hence valid for scalars and numpy arrays alike.
    """
    if order == 1:
        return m1
    m1sq = m1 * m1
    if order == 2:
        return m2 - m1sq
    if order == 3:
        return m1 * (1.0 - 3.0 * m2 + 2.0 * m1sq)
    if order == 4:
        return m2 - 4.0 * m1sq - 3.0 * m2 * m2 + 12.0 * m2 * m1sq - 6.0 * m1sq * m1sq
    if order == 5:
        return m1 * (1.0 - 15.0 * m2 + 20.0 * m1sq + 30.0 * m2 * m2
                     - 60.0 * m2 * m1sq + 24.0 * m1sq * m1sq)
    if order == 6:
        m2sq = m2 * m2
        return (m2 - 16.0 * m1sq - 15.0 * m2sq + 150.0 * m2 * m1sq
                + 30.0 * m2sq * m2 - 120.0 * m1sq * m1sq - 270.0 * m2sq * m1sq
                + 360.0 * m2 * m1sq * m1sq - 120.0 * m1sq * m1sq * m1sq)
    raise DomainError(f"derivative order must be in 0..6, got {order}")


def cumulant(beta: float, t: float, order: int = 0) -> float:
    """Derivative of order `order` (0..6) of the cumulant generating function

        c(t) = log[(1 + e^-beta (e^t + e^-t)) / (1 + 2 e^-beta)].

    Derivatives at t are the cumulants of the exp(t y)-tilted single-site
    measure, written in closed form from its first two raw moments; e.g.
    c'(t) = 2 e^-beta sinh t / (1 + 2 e^-beta cosh t) and
    c'''(t) = c'(t) (1 - 3 m2 + 2 c'(t)^2).  No numerical differentiation
    is involved; finite differences appear only in the test suite.
    """
    if not (isinstance(beta, (int, float)) and math.isfinite(beta) and beta > 0.0):
        raise DomainError(f"beta must be finite and positive, got {beta}")
    if not (isinstance(t, (int, float)) and math.isfinite(t)):
        raise DomainError(f"t must be finite, got {t}")
    if order not in (0, 1, 2, 3, 4, 5, 6):
        raise DomainError(f"derivative order must be in 0..6, got {order}")
    c0, m1, m2 = _tilted_moments(beta, t)
    if order == 0:
        return c0
    return _cumulant_from_moments(m1, m2, order)


def cumulant_vec(beta, t, order=0):
    """Vectorized `cumulant` over an array of t values (internal plumbing)."""
    c0, m1, m2 = _tilted_moments_vec(beta, t)
    if order == 0:
        return c0
    return _cumulant_from_moments(m1, m2, order)


@dataclass(frozen=True)
class CumulantLadder:
    """Values c^(j)(t) for j = 0..6 at a single query point."""

    beta: float
    t: float
    values: tuple

    def __getitem__(self, order):
        return self.values[order]


def cumulant_ladder(beta: float, t: float) -> CumulantLadder:
    """All derivatives 0..6 of the cumulant generating function at t."""
    c0, m1, m2 = _tilted_moments(beta, t)
    vals = (c0,) + tuple(_cumulant_from_moments(m1, m2, j) for j in range(1, 7))
    return CumulantLadder(beta=beta, t=t, values=vals)


# ---------------------------------------------------------------------------
# Measures, energy and entropy
# ---------------------------------------------------------------------------

def single_site_measure(beta: float) -> Macrostate:
    """Quadratically tilted single-site measure (e^-beta, 1, e^-beta)/(1+2e^-beta)."""
    if not (math.isfinite(beta) and beta > 0.0):
        raise DomainError(f"beta must be finite and positive, got {beta}")
    e = math.exp(-beta)
    d = 1.0 + 2.0 * e
    return Macrostate(e / d, 1.0 / d, e / d)


def energy_per_site(mu: Macrostate, K: float) -> float:
    """Mean energy per site (mu_1 + mu_-1) - K (mu_1 - mu_-1)^2."""
    m = mu.mean()
    return mu.quad() - K * m * m


def rel_entropy(mu: Macrostate, base: Macrostate) -> float:
    """Relative entropy sum_i mu_i log(mu_i / base_i), with 0 log 0 = 0.

    Against the uniform base this is sum_i mu_i log(3 mu_i), the large-deviation
    rate of the empirical spin frequencies.
    """
    total = 0.0
    for m, b in zip(mu.as_array(), base.as_array()):
        if b <= 0.0:
            raise DomainError("base measure must have strictly positive masses")
        if m > 0.0:
            total += m * math.log(m / b)
    return total


# ---------------------------------------------------------------------------
# Cramer rate function of the magnetization
# ---------------------------------------------------------------------------

def _tilt_bracket(beta, z):
    """Half-width T of a bracket guaranteed to contain the tilt solving c'(t)=z.

    c' approaches +-1 like 1 - O(e^{beta - |t|}), so beta + log((1+|z|)/(1-|z|))
    plus slack always over-shoots the needed tilt.
    """
    return beta + math.log((1.0 + abs(z)) / (1.0 - abs(z))) + 10.0


def mean_tilt(beta: float, z: float) -> float:
    """Unique tilt t with c'(t) = z, for |z| < 1.

    This is also the derivative of the Cramer rate function at z.  Bracketed
    bisection plus Newton, polished to |c'(t) - z| < 1e-13.
    """
    if not (math.isfinite(z) and abs(z) < 1.0):
        raise DomainError(f"mean must satisfy |z| < 1, got {z}")
    if z == 0.0:
        return 0.0
    T = _tilt_bracket(beta, z)
    return bisect_newton(lambda t: cumulant(beta, t, 1) - z,
                         lambda t: cumulant(beta, t, 2),
                         -T, T, newton_tol=1e-13)


def cramer_rate(beta: float, z: float) -> float:
    """Cramer rate of the magnetization: sup_t { t z - c(t) } for |z| <= 1.

    For |z| < 1 the supremum sits at the tilt t* with c'(t*) = z; at z = +-1
    the root diverges but the rate stays finite with the analytic limit
    beta + log(1 + 2 e^-beta), the relative entropy of a pure +-1 state.
    """
    if not (math.isfinite(beta) and beta > 0.0):
        raise DomainError(f"beta must be finite and positive, got {beta}")
    if not (math.isfinite(z) and abs(z) <= 1.0):
        raise DomainError(f"mean must satisfy |z| <= 1, got {z}")
    if z == 0.0:
        return 0.0
    if abs(z) == 1.0:
        return beta + math.log1p(2.0 * math.exp(-beta))
    t = mean_tilt(beta, z)
    return t * z - cumulant(beta, t, 0)


def cramer_rate_prime(beta: float, z: float) -> float:
    """Derivative of the Cramer rate: the inverse function of c' at z."""
    if not (math.isfinite(beta) and beta > 0.0):
        raise DomainError(f"beta must be finite and positive, got {beta}")
    return mean_tilt(beta, z)


# ---------------------------------------------------------------------------
# Ensemble rate functions
# ---------------------------------------------------------------------------

def canonical_rate(mu: Macrostate, params: CanonicalParams) -> float:
    """Canonical large-deviation rate R(mu|uniform) + beta*energy - free energy.

    Nonnegative, and zero exactly on the canonical equilibrium set.
    """
    from .canonical import canonical_free_energy  # solver builds on this module

    return (rel_entropy(mu, UNIFORM)
            + params.beta * energy_per_site(mu, params.K)
            - canonical_free_energy(params))


def micro_rate(mu: Macrostate, params: MicroParams, tol: float = 1e-9) -> float:
    """Microcanonical rate: R(mu|uniform) + s(u) on the energy shell, inf off it.

    Shell membership is tested as |energy_per_site(mu, K) - u| <= tol.
    """
    from .micro import micro_entropy

    if abs(energy_per_site(mu, params.K) - params.u) > tol:
        return math.inf
    return rel_entropy(mu, UNIFORM) + micro_entropy(params)
