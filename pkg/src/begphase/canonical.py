"""Equilibrium solver for the canonical ensemble at fixed (beta, K).

The magnetization of an equilibrium macrostate minimizes the potential

    mag_potential(z) = beta K z^2 - c(2 beta K z),

equivalently (after w = 2 beta K z) the tilt potential w^2/(4 beta K) - c(w),
whose derivative splits into the line w/(2 beta K) against the curve c'(w).
For beta <= BETA_C the curve is concave on w > 0 and the minimizer pair grows
continuously out of 0 once K exceeds the second-order coupling; for
beta > BETA_C the curve has an inflection, the line can be tangent to it at
positive w, and the global minimum jumps discontinuously at the first-order
coupling located by the vanishing of the well depth.

Minimizing magnetizations lift to macrostates by exponential tilting of the
single-site measure with tilt 2 beta K z.
"""

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    BETA_C,
    UNIFORM,
    CanonicalParams,
    DomainError,
    Macrostate,
    cramer_rate,
    cumulant,
    cumulant_vec,
    energy_per_site,
    mean_tilt,
    rel_entropy,
)
from .rootfind import bisect_newton, golden_min

#: Couplings within this distance of a computed critical value are treated as
#: exactly critical when selecting a solution branch.
CRITICAL_EQ_TOL = 1e-9

#: Inverse temperatures this close to BETA_C take the continuous branch;
#: decimal approximations of log 4 otherwise land arbitrarily on either side.
BETA_SNAP_TOL = 1e-7

#: Even-derivative magnitude below which a derivative counts as vanishing in
#: the minimum-type ladder.
DERIV_ZERO_TOL = 1e-10

_TIE_TOL = 1e-12


@dataclass(frozen=True)
class CanonicalCriticals:
    """Critical couplings at fixed beta.

    Below BETA_C only the second-order coupling exists.  Above it the
    tangency coupling k_tangent (where the positive well first appears), the
    first-order coupling k_first_order (where it reaches depth zero) and the
    spinodal k_spinodal (where z = 0 destabilizes) satisfy
    k_tangent < k_first_order < k_spinodal; w_tangent is the tilt at tangency.
    """

    beta: float
    k_second_order: float | None = None
    k_first_order: float | None = None
    k_tangent: float | None = None
    k_spinodal: float | None = None
    w_tangent: float | None = None
    near_tricritical: bool = False


@dataclass(frozen=True)
class CanonicalSolution:
    """Global minimizers of the magnetization potential and their lifts.

    z_points is symmetric under negation and contains 0 when its size is odd;
    macrostates[i] has mean z_points[i]; types[i] is the order r of the
    minimum (half the order of the first nonvanishing even derivative).
    """

    params: CanonicalParams
    z_points: tuple
    w_points: tuple
    macrostates: tuple
    min_value: float
    types: tuple
    phase_label: str


# ---------------------------------------------------------------------------
# Potentials
# ---------------------------------------------------------------------------

def mag_potential(params: CanonicalParams, z: float, order: int = 0) -> float:
    """Derivative of order 0..6 of beta K z^2 - c(2 beta K z) at z."""
    a = 2.0 * params.beta * params.K
    w = a * z
    if order == 0:
        return 0.5 * a * z * z - cumulant(params.beta, w, 0)
    if order == 1:
        return a * (z - cumulant(params.beta, w, 1))
    if order == 2:
        return a * (1.0 - a * cumulant(params.beta, w, 2))
    return -(a ** order) * cumulant(params.beta, w, order)


def tilt_potential(params: CanonicalParams, w: float, order: int = 0) -> float:
    """Derivative of order 0..6 of w^2/(4 beta K) - c(w) at w.

    Same curve as mag_potential after the substitution w = 2 beta K z, which
    isolates the K-dependence in the quadratic term.
    """
    a = 2.0 * params.beta * params.K
    if order == 0:
        return 0.5 * w * w / a - cumulant(params.beta, w, 0)
    if order == 1:
        return w / a - cumulant(params.beta, w, 1)
    if order == 2:
        return 1.0 / a - cumulant(params.beta, w, 2)
    return -cumulant(params.beta, w, order)


# ---------------------------------------------------------------------------
# Critical couplings
# ---------------------------------------------------------------------------

def second_order_coupling(beta: float) -> float:
    """Coupling at which the curvature of the potential at z = 0 vanishes:
    1/(2 beta c''(0)) = e^beta/(4 beta) + 1/(2 beta).

    This is the continuous critical coupling for beta <= BETA_C; for larger
    beta the same expression is the spinodal of the disordered branch.
    """
    if not (math.isfinite(beta) and beta > 0.0):
        raise DomainError(f"beta must be finite and positive, got {beta}")
    return math.exp(beta) / (4.0 * beta) + 1.0 / (2.0 * beta)


def cumulant_inflection(beta: float) -> float:
    """Positive w at which c' switches from convex to concave:
    arccosh(e^beta/2 - 4 e^-beta), defined for beta >= BETA_C (zero at BETA_C)."""
    if not (math.isfinite(beta) and beta > 0.0):
        raise DomainError(f"beta must be finite and positive, got {beta}")
    x = 0.5 * math.exp(beta) - 4.0 * math.exp(-beta)
    if x < 1.0:
        raise DomainError(
            f"inflection exists only for beta >= {BETA_C} (log 4), got {beta}")
    return math.acosh(x)


def tangency(beta: float) -> tuple[float, float, float]:
    """(w_tangent, k_tangent, k_spinodal) for beta > BETA_C.

    w_tangent is the unique positive root of g(w) = w c''(w) - c'(w) beyond
    the inflection of c' (g is positive at the inflection and tends to -1),
    i.e. the point where the line through the origin is tangent to c'.  The
    tangency coupling is 1/(2 beta c''(w_tangent)), which equals
    w_tangent/(2 beta c'(w_tangent)); the spinodal is the z = 0 curvature
    coupling.
    """
    if not (math.isfinite(beta) and beta > BETA_C):
        raise DomainError(f"tangency exists only for beta > {BETA_C} (log 4), got {beta}")
    wc = cumulant_inflection(beta)

    def g(w):
        return w * cumulant(beta, w, 2) - cumulant(beta, w, 1)

    def gprime(w):
        return w * cumulant(beta, w, 3)

    lo = wc
    if g(lo) <= 0.0:
        # g's positive hump peaks at the inflection and scales like
        # (beta - BETA_C)^(3/2); immediately above BETA_C it sinks below
        # floating-point noise and the tangency data degenerate to the
        # inflection point (the couplings pinch onto the spinodal)
        probes = [wc * f for f in (1.25, 1.5, 2.0)]
        lo = next((p for p in probes if g(p) > 0.0), None)
        if lo is None:
            k2 = second_order_coupling(beta)
            return wc, 1.0 / (2.0 * beta * cumulant(beta, wc, 2)), k2
    hi = max(2.0 * wc, 1.0)
    while g(hi) >= 0.0:
        hi *= 2.0
        if hi > 1e6:  # g -> -1, so this cannot happen
            raise RuntimeError("tangency bracket expansion failed")
    w1 = bisect_newton(g, gprime, lo, hi, newton_tol=1e-13)
    k1 = 1.0 / (2.0 * beta * cumulant(beta, w1, 2))
    k2 = second_order_coupling(beta)
    return w1, k1, k2


def positive_well(beta: float, K: float) -> float:
    """Location of the unique positive local minimum of the tilt potential.

    Requires K above the second-order coupling (beta <= BETA_C) or above the
    tangency coupling (beta > BETA_C).  The bracket upper end 2 beta K works
    because |c'| < 1 makes the potential slope w/(2 beta K) - c'(w) positive
    there; the residual is polished below 1e-13.
    """
    params = CanonicalParams(beta, K)

    def fprime(w):
        return tilt_potential(params, w, 1)

    def fsecond(w):
        return tilt_potential(params, w, 2)

    if beta <= BETA_C:
        kc2 = second_order_coupling(beta)
        if K <= kc2:
            raise DomainError(
                f"positive well requires K > {kc2} at beta = {beta}, got {K}")
        base = 0.0
        hi = 2.0 * beta * K
    else:
        w1, k1, _ = tangency(beta)
        if K <= k1:
            raise DomainError(
                f"positive well requires K > {k1} at beta = {beta}, got {K}")
        base = w1
        hi = max(2.0 * beta * K, w1 + 1.0)
    # just above the critical coupling the slope near the bracket base sits
    # below floating-point noise; anchor at the most negative sampled slope
    probes = base + np.geomspace(1e-12, hi - base, 200)
    slopes = probes / (2.0 * beta * K) - cumulant_vec(beta, probes, 1)
    imin = int(np.argmin(slopes))
    if not slopes[imin] < 0.0:
        raise RuntimeError(
            f"no descent direction found at (beta, K) = ({beta}, {K}); the "
            f"coupling is numerically indistinguishable from critical")
    w = bisect_newton(fprime, fsecond, float(probes[imin]), hi, newton_tol=1e-13)
    if fsecond(w) <= 0.0:
        raise RuntimeError(f"well search landed on a non-minimum at w = {w}")
    return w


def well_depth(beta: float, K: float) -> float:
    """Tilt-potential value at the positive well, relative to the value 0 at
    the origin.  Continuous and strictly decreasing in K on [k_tangent, inf);
    positive just above tangency, negative beyond the spinodal.  Its unique
    zero is the first-order coupling."""
    w1, k1, _ = tangency(beta)
    return _well_depth(beta, K, w1, k1)


def _well_depth(beta, K, w1, k1):
    if K < k1 - 1e-12:
        raise DomainError(f"well depth defined for K >= {k1} at beta = {beta}, got {K}")
    params = CanonicalParams(beta, K)
    if K <= k1 + 1e-12:
        return tilt_potential(params, w1, 0)
    return tilt_potential(params, positive_well(beta, K), 0)


def first_order_coupling(beta: float) -> float:
    """Coupling at which the positive well reaches depth zero (beta > BETA_C).

    Bisection of the well depth between the tangency and spinodal couplings,
    run until the residual depth is below 1e-12.  When the two couplings have
    already pinched together (beta just above BETA_C) the midpoint is
    returned as the tricritical continuation; canonical_criticals flags this.
    """
    return _first_order_coupling(beta)[0]


def _first_order_coupling(beta):
    w1, k1, k2 = tangency(beta)
    if k2 - k1 < 1e-8:
        return 0.5 * (k1 + k2), True
    lo, hi = k1, k2
    dlo = _well_depth(beta, lo, w1, k1)
    dhi = _well_depth(beta, hi, w1, k1)
    if not (dlo > 0.0 > dhi):
        raise RuntimeError(
            f"well depth not bracketed on [{k1}, {k2}] at beta = {beta}")
    while hi - lo > 1e-15 * hi:
        mid = 0.5 * (lo + hi)
        d = _well_depth(beta, mid, w1, k1)
        if abs(d) < 1e-12:
            return mid, False
        if d > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi), False


def _continuous_branch(beta):
    return beta <= BETA_C or abs(beta - BETA_C) <= BETA_SNAP_TOL


def canonical_criticals(beta: float) -> CanonicalCriticals:
    """All critical couplings at this beta, with undefined entries left None."""
    if not (math.isfinite(beta) and beta > 0.0):
        raise DomainError(f"beta must be finite and positive, got {beta}")
    if _continuous_branch(beta):
        return CanonicalCriticals(beta=beta, k_second_order=second_order_coupling(beta))
    w1, k1, k2 = tangency(beta)
    kc1, near = _first_order_coupling(beta)
    return CanonicalCriticals(beta=beta, k_first_order=kc1, k_tangent=k1,
                              k_spinodal=k2, w_tangent=w1, near_tricritical=near)


# ---------------------------------------------------------------------------
# Solution and lift
# ---------------------------------------------------------------------------

def tilt_macrostate(params: CanonicalParams, z: float) -> Macrostate:
    """Macrostate obtained by tilting the single-site measure with 2 beta K z:
    masses proportional to (e^{-2 beta K z - beta}, 1, e^{2 beta K z - beta})."""
    t = 2.0 * params.beta * params.K * z
    b = params.beta
    shift = max(-b - t, 0.0, -b + t)
    wm = math.exp(-b - t - shift)
    w0 = math.exp(-shift)
    wp = math.exp(-b + t - shift)
    c = wm + w0 + wp
    return Macrostate(wm / c, w0 / c, wp / c)


def minimum_type(params: CanonicalParams, z: float) -> tuple[int, tuple]:
    """(r, (G'', G'''', G'''''')) at a global minimizer z.

    r is the smallest index whose even derivative of order 2r exceeds
    DERIV_ZERO_TOL after all lower even derivatives vanish to that tolerance.
    """
    evens = tuple(mag_potential(params, z, j) for j in (2, 4, 6))
    for idx, val in enumerate(evens):
        if any(abs(v) > DERIV_ZERO_TOL for v in evens[:idx]):
            break
        if val > DERIV_ZERO_TOL:
            return idx + 1, evens
    raise RuntimeError(
        f"type classification failed at z = {z}: even derivatives {evens}")


def solve_canonical(params: CanonicalParams) -> CanonicalSolution:
    """Global minimizers of the magnetization potential, lifted to macrostates.

    Branch selection follows the exact critical couplings: below the critical
    coupling the disordered point 0 is the unique minimizer; above it the
    symmetric pair +-z takes over; exactly at a first-order coupling all
    three coexist.  A coupling within CRITICAL_EQ_TOL of a critical value is
    treated as critical so branch labels are deterministic.
    """
    beta, K = params.beta, params.K
    if _continuous_branch(beta):
        kc2 = second_order_coupling(beta)
        if K <= kc2 + CRITICAL_EQ_TOL:
            zs = (0.0,)
        else:
            z = positive_well(beta, K) / (2.0 * beta * K)
            zs = (-z, z)
    else:
        kc1, _ = _first_order_coupling(beta)
        if K < kc1 - CRITICAL_EQ_TOL:
            zs = (0.0,)
        else:
            z = positive_well(beta, K) / (2.0 * beta * K)
            zs = (-z, 0.0, z) if K <= kc1 + CRITICAL_EQ_TOL else (-z, z)

    ws = tuple(2.0 * beta * K * z for z in zs)
    macs = tuple(tilt_macrostate(params, z) for z in zs)
    types = tuple(minimum_type(params, z)[0] for z in zs)
    gvals = [mag_potential(params, z, 0) for z in zs]
    label = {1: "unique", 2: "pair", 3: "triple"}[len(zs)]
    return CanonicalSolution(params=params, z_points=zs, w_points=ws,
                             macrostates=macs, min_value=min(gvals),
                             types=types, phase_label=label)


def canonical_free_energy(params: CanonicalParams) -> float:
    """inf over macrostates of R(mu|uniform) + beta * energy_per_site(mu, K),
    evaluated at a lifted minimizer."""
    mu = solve_canonical(params).macrostates[0]
    return rel_entropy(mu, UNIFORM) + params.beta * energy_per_site(mu, params.K)


# ---------------------------------------------------------------------------
# Independent route through the Cramer rate (duality cross-check)
# ---------------------------------------------------------------------------

def dual_route_minimum(params: CanonicalParams, grid_points: int = 4001):
    """(min value, argmin tuple) of cramer_rate(z) - beta K z^2 over [-1, 1].

    Deliberately bypasses the potential-based solver: the rate is evaluated
    through the inverse tilt (vectorized bisection on c' over a dense grid),
    local minima are refined by golden section on the scalar rate.  Used to
    verify that both routes of the convex-duality identity agree.
    """
    beta, K = params.beta, params.K
    zg = np.linspace(-1.0 + 1e-9, 1.0 - 1e-9, grid_points)
    lo = np.full_like(zg, -_vec_bracket(beta, zg))
    hi = -lo
    for _ in range(90):
        mid = 0.5 * (lo + hi)
        too_low = cumulant_vec(beta, mid, 1) < zg
        lo = np.where(too_low, mid, lo)
        hi = np.where(too_low, hi, mid)
    t = 0.5 * (lo + hi)
    rate = t * zg - cumulant_vec(beta, t, 0) - beta * K * zg * zg

    def scalar(z):
        return cramer_rate(beta, z) - beta * K * z * z

    def polish(z):
        # stationarity of the dual objective: mean_tilt(z) = 2 beta K z;
        # golden section stalls at sqrt(eps), Newton on the tilt restores
        # full precision without touching the potential route
        for _ in range(40):
            t = mean_tilt(beta, z)
            resid = t - 2.0 * beta * K * z
            slope = 1.0 / cumulant(beta, t, 2) - 2.0 * beta * K
            if slope == 0.0:
                break
            step = resid / slope
            z_new = min(max(z - step, -1.0 + 1e-12), 1.0 - 1e-12)
            if abs(z_new - z) < 1e-15:
                z = z_new
                break
            z = z_new
        return z

    cands = []
    for i in range(len(zg)):
        left = rate[i - 1] if i > 0 else np.inf
        right = rate[i + 1] if i < len(zg) - 1 else np.inf
        if rate[i] <= left and rate[i] <= right:
            a = zg[max(i - 1, 0)]
            b = zg[min(i + 1, len(zg) - 1)]
            zmin, _ = golden_min(scalar, a, b, tol=1e-10)
            zmin = polish(zmin)
            cands.append((zmin, scalar(zmin)))
    best = min(v for _, v in cands)
    kept = sorted(z for z, v in cands if v <= best + _TIE_TOL)
    merged = []
    for z in kept:
        if not merged or abs(z - merged[-1]) > 1e-7:
            merged.append(z)
    return best, tuple(merged)


def _vec_bracket(beta, z):
    return beta + np.log((1.0 + np.abs(z)) / (1.0 - np.abs(z))) + 10.0
