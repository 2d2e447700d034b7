"""One-dimensional root finding and minimization used by the solvers.

Every solver in this package locates roots the same way: a sign-change
bracket is shrunk by bisection until it is small, then Newton polishes the
root to near machine precision while a safeguard keeps the iterates inside
the bracket.  Multi-well scans refine local minima with a plain golden
section, which needs no derivatives and is immune to the logarithmic
endpoint singularities of the microcanonical objective.
"""

import math

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0  # 1/phi ~ 0.618


class BracketError(RuntimeError):
    """The supplied interval does not bracket a sign change."""


def bisect_newton(f, fprime, lo, hi, *, bisect_tol=1e-6, newton_tol=1e-13,
                  max_newton=80):
    """Root of f on [lo, hi] with f(lo), f(hi) of opposite signs.

    Bisection narrows the bracket to `bisect_tol`, then Newton iterations run
    until |f(x)| < newton_tol.  A Newton step that leaves the current bracket
    is replaced by a bisection step, so convergence never depends on the
    starting point.
    """
    flo = f(lo)
    fhi = f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if flo * fhi > 0.0:
        raise BracketError(f"no sign change on [{lo}, {hi}]: f={flo}, {fhi}")

    while hi - lo > bisect_tol:
        mid = 0.5 * (lo + hi)
        fmid = f(mid)
        if fmid == 0.0:
            return mid
        if flo * fmid < 0.0:
            hi, fhi = mid, fmid
        else:
            lo, flo = mid, fmid

    x = 0.5 * (lo + hi)
    fx = f(x)
    for _ in range(max_newton):
        if abs(fx) < newton_tol:
            return x
        # keep the bracket current so a wild step can be rejected
        if flo * fx < 0.0:
            hi, fhi = x, fx
        else:
            lo, flo = x, fx
        d = fprime(x)
        step_ok = d != 0.0 and math.isfinite(d)
        if step_ok:
            x_new = x - fx / d
            step_ok = lo < x_new < hi
        if not step_ok:
            x_new = 0.5 * (lo + hi)
        if x_new == x:
            return x
        x = x_new
        fx = f(x)
    return x


def golden_min(f, lo, hi, *, tol=1e-12):
    """Golden-section minimum of f on [lo, hi] down to interval width `tol`.

    Returns (x, f(x)) at the interval midpoint after convergence; endpoint
    values are also compared so a boundary minimum is not missed.
    """
    a, b = lo, hi
    x1 = b - _INVPHI * (b - a)
    x2 = a + _INVPHI * (b - a)
    f1 = f(x1)
    f2 = f(x2)
    while b - a > tol:
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - _INVPHI * (b - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + _INVPHI * (b - a)
            f2 = f(x2)
    x = 0.5 * (a + b)
    fx = f(x)
    for cand, fcand in ((lo, f(lo)), (hi, f(hi))):
        if fcand < fx:
            x, fx = cand, fcand
    return x, fx


def bisect_monotone(f, lo, hi, target, *, tol=1e-9):
    """Solve f(x) = target for monotone f on [lo, hi] by bisection to width tol.

    Works for increasing or decreasing f; raises BracketError when the target
    is not enclosed by the endpoint values.
    """
    flo = f(lo) - target
    fhi = f(hi) - target
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if flo * fhi > 0.0:
        raise BracketError(
            f"target {target} outside the range [{min(flo, fhi) + target}, "
            f"{max(flo, fhi) + target}] attained on [{lo}, {hi}]")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        fmid = f(mid) - target
        if fmid == 0.0:
            return mid
        if flo * fmid < 0.0:
            hi, fhi = mid, fmid
        else:
            lo, flo = mid, fmid
    return 0.5 * (lo + hi)
