"""Special functions, quadrature and one-dimensional solvers.

Everything here works on Python floats and is free of shared state, so the
functions can be called concurrently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

from scipy.special import erfcx as _erfcx
from scipy.special import zeta as _zeta

__all__ = [
    "BracketError",
    "ConvergenceError",
    "MaxResult",
    "QuadResult",
    "RootResult",
    "adaptive_quad",
    "brent_root",
    "erfcx",
    "exp_integral",
    "exp_integral_scaled",
    "lgamma",
    "maximize_1d",
    "normal_cdf",
    "phi_times_exp",
]

EULER_GAMMA = 0.57721566490153286061
_EPS = 2.220446049250313e-16
_SQRT2 = math.sqrt(2.0)


class ConvergenceError(RuntimeError):
    """An iterative routine ran out of iterations or subdivision depth."""


class BracketError(ValueError):
    """The supplied interval does not bracket a sign change."""


@dataclass(frozen=True)
class QuadResult:
    value: float
    error_estimate: float
    evaluations: int


@dataclass(frozen=True)
class RootResult:
    root: float
    residual: float
    iterations: int
    bracket: tuple[float, float]


@dataclass(frozen=True)
class MaxResult:
    argmax: float
    max_value: float
    abscissa_tolerance: float
    at_edge: bool = False
    evaluations: int = 0


# ---------------------------------------------------------------------------
# Gaussian helpers
# ---------------------------------------------------------------------------


def normal_cdf(x: float) -> float:
    """Standard normal distribution function.

    Evaluated through ``erfc`` so that the lower tail keeps full relative
    accuracy down to the underflow threshold.
    """
    if not math.isfinite(x):
        raise ValueError(f"normal_cdf needs a finite argument, got {x!r}")
    return 0.5 * math.erfc(-x / _SQRT2)


def erfcx(x: float) -> float:
    """Scaled complementary error function ``exp(x**2) * erfc(x)``."""
    return float(_erfcx(x))


def phi_times_exp(d: float, c: float) -> float:
    """Return ``normal_cdf(d) * exp(c)`` for ``d <= 0`` without overflow.

    The product is rewritten as ``erfcx(-d/sqrt(2)) * exp(c - d**2/2) / 2``;
    the Gaussian tail factor is folded into the exponent, so a huge ``c``
    paired with a very negative ``d`` stays finite.
    """
    if d > 0:
        raise ValueError("phi_times_exp requires d <= 0; use the direct product")
    if not math.isfinite(c):
        raise ValueError(f"exponent must be finite, got {c!r}")
    return 0.5 * erfcx(-d / _SQRT2) * math.exp(c - 0.5 * d * d)


def lgamma(x: float) -> float:
    """Natural log of the gamma function for ``x > 0``."""
    if not x > 0:
        raise ValueError(f"lgamma is restricted to x > 0, got {x!r}")
    return math.lgamma(x)


# ---------------------------------------------------------------------------
# Generalized exponential integral
# ---------------------------------------------------------------------------


def _scaled_cf(nu: float, z: float) -> float:
    # modified Lentz on the even contraction of the E_nu continued fraction;
    # returns exp(z) * E_nu(z); converges quickly for z >= 1
    tiny = 1e-300
    b = z + nu
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, 10_000):
        an = -i * (nu - 1.0 + i)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = c * d
        h *= delta
        if abs(delta - 1.0) <= 1e-16:
            return h
    raise ConvergenceError(f"continued fraction for E_{nu}({z}) did not converge")


_ZETA = [float(_zeta(k)) for k in range(2, 64)]


def _lgamma1p(s: float) -> float:
    # log Gamma(1+s) for |s| <= 0.5 from its Taylor series; libm's lgamma
    # loses relative accuracy near its zero at 1
    total = 0.0
    power = -s
    for k, zk in enumerate(_ZETA, start=2):
        power *= -s
        piece = zk * power / k
        total += piece
        if abs(piece) <= 1e-18 * abs(total):
            break
    return total - EULER_GAMMA * s


def _base_small(nu: float, z: float) -> float:
    """E_nu(z) for 0 < nu < 2 and 0 < z < 1 via the incomplete gamma series.

    With s = 1 - nu, E_nu(z) = z**(-s) * Gamma(s, z) and Gamma(s, z) is split as
    (Gamma(1+s) - 1)/s - (z**s - 1)/s - z**s * sum_{k>=1} (-z)**k / (k! (s+k)),
    which stays finite (and accurate) as s passes through 0.
    """
    s = 1.0 - nu
    logz = math.log(z)
    if s == 0.0:
        first = -EULER_GAMMA
        second = logz
    else:
        first = math.expm1(_lgamma1p(s) if abs(s) <= 0.5 else math.lgamma(1.0 + s)) / s
        second = math.expm1(s * logz) / s
    total = 0.0
    term = 1.0
    for k in range(1, 200):
        term *= -z / k
        piece = term / (s + k)
        total += piece
        if abs(piece) <= 1e-17 * abs(total):
            break
    zs = math.exp(s * logz)
    upper = first - second - zs * total
    return upper / zs


def exp_integral_scaled(nu: float, z: float) -> float:
    """Return ``exp(z) * E_nu(z)``.

    This is the quantity that actually enters the root equation for the
    Bessel optimum; working with it directly avoids ``exp(-z)`` underflow
    for large ``z``.
    """
    if not nu >= 0:
        raise ValueError(f"order must be nonnegative, got {nu!r}")
    if not z > 0:
        raise ValueError(f"E_nu(z) diverges or is undefined for z = {z!r} <= 0")
    if nu == 0.0:
        return 1.0 / z
    if z >= 1.0 or nu > 32.0:
        # the fraction also converges quickly once nu is large
        return _scaled_cf(nu, z)
    # start the upward recurrence from an order in (0, 1.5] so that every
    # division is by an order >= 0.5 (except for tiny nu, where none happens)
    steps = 0 if nu < 1.5 else int(math.floor(nu - 0.5))
    base = nu - steps
    f = math.exp(z) * _base_small(base, z)
    order = base
    for _ in range(steps):
        f = (1.0 - z * f) / order
        order += 1.0
    return f


def exp_integral(nu: float, z: float) -> float:
    """Generalized exponential integral ``E_nu(z) = int_1^inf t**-nu e**(-z t) dt``.

    Parameters
    ----------
    nu : float
        Order, ``nu >= 0``.  Need not be an integer.
    z : float
        Argument, ``z > 0``.

    Notes
    -----
    For ``z >= 1`` a continued fraction is used.  Below 1 the value at a base
    order in ``(0, 1.5]`` comes from the incomplete gamma series, then the
    recurrence ``nu * E_{nu+1}(z) = exp(-z) - z * E_nu(z)`` is run upward,
    which is stable in that regime.
    """
    return exp_integral_scaled(nu, z) * math.exp(-z)


# ---------------------------------------------------------------------------
# Quadrature
# ---------------------------------------------------------------------------


def _simpson(fa: float, fm: float, fb: float, h: float) -> float:
    return h * (fa + 4.0 * fm + fb) / 6.0


def adaptive_quad(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    tol: float = 1e-11,
    max_depth: int = 60,
    points: Sequence[float] = (),
    min_depth: int = 3,
) -> QuadResult:
    """Adaptive Simpson quadrature with Richardson extrapolation.

    Parameters
    ----------
    f : callable
        Scalar integrand, finite on ``[lo, hi]``.
    lo, hi : float
        Integration limits, ``lo < hi``.
    tol : float
        Target error; the result satisfies ``|error| <= max(tol, tol*|value|)``
        for smooth integrands.
    max_depth : int
        Maximum bisection depth of any panel before giving up.
    points : sequence of float
        Optional interior breakpoints (where the integrand changes scale).
    min_depth : int
        Panels are always bisected this many times before the error test is
        trusted, so narrow features are not missed by the first few samples.

    Raises
    ------
    ConvergenceError
        If a panel needs more than ``max_depth`` bisections.
    """
    if not lo < hi:
        raise ValueError(f"need lo < hi, got [{lo}, {hi}]")
    if tol <= 0:
        raise ValueError("tol must be positive")
    edges = [lo] + sorted(p for p in points if lo < p < hi) + [hi]

    evaluations = 0

    def ev(x: float) -> float:
        nonlocal evaluations
        evaluations += 1
        y = f(x)
        if not math.isfinite(y):
            raise ValueError(f"integrand is not finite at x={x!r}")
        return y

    panels = []
    rough = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        m = 0.5 * (a + b)
        fa, fm, fb = ev(a), ev(m), ev(b)
        whole = _simpson(fa, fm, fb, b - a)
        rough += whole
        panels.append((a, b, fa, fm, fb, whole))
    target = max(tol, tol * abs(rough))

    total = 0.0
    err = 0.0
    for a, b, fa, fm, fb, whole in panels:
        share = target * (b - a) / (hi - lo)
        stack = [(a, b, fa, fm, fb, whole, share, 0)]
        while stack:
            a_, b_, fa_, fm_, fb_, s_, eps_, depth = stack.pop()
            m_ = 0.5 * (a_ + b_)
            lm = 0.5 * (a_ + m_)
            rm = 0.5 * (m_ + b_)
            flm, frm = ev(lm), ev(rm)
            left = _simpson(fa_, flm, fm_, m_ - a_)
            right = _simpson(fm_, frm, fb_, b_ - m_)
            delta = left + right - s_
            floor = 8.0 * _EPS * (abs(left) + abs(right))
            if depth >= min_depth and abs(delta) <= 15.0 * max(eps_, floor):
                total += left + right + delta / 15.0
                err += abs(delta) / 15.0
                continue
            if depth + 1 > max_depth:
                raise ConvergenceError(
                    f"adaptive_quad exceeded depth {max_depth} near x={m_!r}"
                )
            # right pushed first so panels are consumed left to right
            stack.append((m_, b_, fm_, frm, fb_, right, 0.5 * eps_, depth + 1))
            stack.append((a_, m_, fa_, flm, fm_, left, 0.5 * eps_, depth + 1))
    return QuadResult(value=total, error_estimate=err, evaluations=evaluations)


# ---------------------------------------------------------------------------
# Root finding and maximization
# ---------------------------------------------------------------------------


def brent_root(
    g: Callable[[float], float],
    bracket: tuple[float, float],
    tol: float = 1e-12,
    maxiter: int = 500,
) -> RootResult:
    """Brent's root finder (inverse quadratic interpolation with bisection).

    Stops as soon as ``|g(root)| <= tol`` or the bracket has shrunk below
    ``tol * (1 + |root|)``.
    """
    lo, hi = float(bracket[0]), float(bracket[1])
    if not lo < hi:
        raise ValueError(f"degenerate bracket {bracket!r}")
    fpre, fcur = g(lo), g(hi)
    xpre, xcur = lo, hi
    if fpre == 0.0:
        return RootResult(lo, 0.0, 0, (lo, lo))
    if fcur == 0.0:
        return RootResult(hi, 0.0, 0, (hi, hi))
    if math.copysign(1.0, fpre) == math.copysign(1.0, fcur):
        raise BracketError(
            f"g({lo})={fpre:.3g} and g({hi})={fcur:.3g} do not bracket a root"
        )
    xblk = fblk = 0.0
    spre = scur = 0.0
    for it in range(1, maxiter + 1):
        if fpre * fcur < 0:
            xblk, fblk = xpre, fpre
            spre = scur = xcur - xpre
        if abs(fblk) < abs(fcur):
            xpre, xcur, xblk = xcur, xblk, xcur
            fpre, fcur, fblk = fcur, fblk, fcur
        delta = 0.5 * (tol * (1.0 + abs(xcur)) + 4.0 * _EPS * abs(xcur))
        sbis = 0.5 * (xblk - xcur)
        if fcur == 0.0 or abs(fcur) <= tol or abs(sbis) < delta:
            low, high = sorted((xcur, xblk))
            return RootResult(xcur, fcur, it, (low, high))
        if abs(spre) > delta and abs(fcur) < abs(fpre):
            if xpre == xblk:
                stry = -fcur * (xcur - xpre) / (fcur - fpre)
            else:
                dpre = (fpre - fcur) / (xpre - xcur)
                dblk = (fblk - fcur) / (xblk - xcur)
                stry = -fcur * (fblk * dblk - fpre * dpre) / (
                    dblk * dpre * (fblk - fpre)
                )
            if 2.0 * abs(stry) < min(abs(spre), 3.0 * abs(sbis) - delta):
                spre, scur = scur, stry
            else:
                spre = scur = sbis
        else:
            spre = scur = sbis
        xpre, fpre = xcur, fcur
        if abs(scur) > delta:
            xcur += scur
        else:
            xcur += delta if sbis > 0 else -delta
        fcur = g(xcur)
    raise ConvergenceError(f"brent_root did not converge in {maxiter} iterations")


_GOLDEN = 0.5 * (3.0 - math.sqrt(5.0))


def maximize_1d(
    f: Callable[[float], float],
    bracket: tuple[float, float],
    tol: float = 1e-8,
    maxiter: int = 500,
) -> MaxResult:
    """Maximize a unimodal function on an interval.

    Brent's combination of golden-section steps and parabolic interpolation.
    If the maximizer sits against either end of ``bracket`` the result is
    flagged with ``at_edge=True``; the true maximum may then lie outside.
    """
    lo, hi = float(bracket[0]), float(bracket[1])
    if not lo < hi:
        raise ValueError(f"degenerate bracket {bracket!r}")
    if tol <= 0:
        raise ValueError("tol must be positive")

    evaluations = 0

    def neg(x: float) -> float:
        nonlocal evaluations
        evaluations += 1
        return -f(x)

    sqrt_eps = math.sqrt(_EPS)
    a, b = lo, hi
    x = w = v = a + _GOLDEN * (b - a)
    fx = fw = fv = neg(x)
    d = e = 0.0
    for _ in range(maxiter):
        xm = 0.5 * (a + b)
        tol1 = sqrt_eps * abs(x) + tol / 3.0
        tol2 = 2.0 * tol1
        if abs(x - xm) <= tol2 - 0.5 * (b - a):
            break
        golden = True
        if abs(e) > tol1:
            r = (x - w) * (fx - fv)
            q = (x - v) * (fx - fw)
            p = (x - v) * q - (x - w) * r
            q = 2.0 * (q - r)
            if q > 0.0:
                p = -p
            q = abs(q)
            r, e = e, d
            if abs(p) < abs(0.5 * q * r) and q * (a - x) < p < q * (b - x):
                d = p / q
                u = x + d
                if (u - a) < tol2 or (b - u) < tol2:
                    d = tol1 if xm >= x else -tol1
                golden = False
        if golden:
            e = (b - x) if x < xm else (a - x)
            d = _GOLDEN * e
        u = x + (d if abs(d) >= tol1 else math.copysign(tol1, d))
        fu = neg(u)
        if fu <= fx:
            if u >= x:
                a = x
            else:
                b = x
            v, fv, w, fw, x, fx = w, fw, x, fx, u, fu
        else:
            if u < x:
                a = u
            else:
                b = u
            if fu <= fw or w == x:
                v, fv, w, fw = w, fw, u, fu
            elif fu <= fv or v == x or v == w:
                v, fv = u, fu
    else:
        raise ConvergenceError(f"maximize_1d did not converge in {maxiter} steps")

    best_x, best_f = x, -fx
    at_edge = False
    margin = 4.0 * (sqrt_eps * abs(x) + tol)
    for end in (lo, hi):
        f_end = -neg(end)
        if f_end >= best_f:
            best_x, best_f = end, f_end
            at_edge = True
    if x - lo <= margin or hi - x <= margin:
        at_edge = True
    return MaxResult(
        argmax=best_x,
        max_value=best_f,
        abscissa_tolerance=tol,
        at_edge=at_edge,
        evaluations=evaluations,
    )
