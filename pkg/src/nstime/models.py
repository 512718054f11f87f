"""Closed forms of m(t) = E[Z_t (1 - Z_t)] for three last-passage times.

The three families:

``exp``
    last time the exponential martingale ``exp(B_t - t/2)`` sits at a level
    ``K <= 1``;
``bhit``
    last zero of Brownian motion before it first reaches ``a > 0``;
``bessel``
    last time a Bessel process of index ``mu`` (dimension ``2(mu+1)``),
    started at 0, is at level ``a``.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .numerics import (
    BracketError,
    ConvergenceError,
    RootResult,
    adaptive_quad,
    brent_root,
    exp_integral_scaled,
    lgamma,
    maximize_1d,
    normal_cdf,
    phi_times_exp,
)

__all__ = [
    "BesselCharacteristics",
    "BrownianState",
    "KStarExperiment",
    "ModelSpec",
    "NstCurve",
    "SupResult",
    "Variant",
    "bessel_characteristics",
    "kstar_experiment",
    "m_bessel",
    "m_brownian_hit",
    "m_exp",
    "m_of",
    "phi_brownian",
    "phi_mu",
    "sample_curve",
    "solve_z_mu",
    "sup_m",
    "z_of_state",
]

QUARTER = 0.25
NEG_CLAMP = 1e-15
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


class Variant(str, enum.Enum):
    EXP = "exp"
    BHIT = "bhit"
    BESSEL = "bessel"


@dataclass(frozen=True)
class ModelSpec:
    """One of the three last-passage families together with its parameters.

    Use the constructors :meth:`exp`, :meth:`brownian_hit` and
    :meth:`bessel` rather than filling the fields by hand.
    """

    variant: Variant
    K: float | None = None
    a: float | None = None
    mu: float | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "variant", Variant(self.variant))
        if self.variant is Variant.EXP:
            if self.K is None or not 0 < self.K <= 1:
                raise ValueError(f"K must lie in (0, 1], got {self.K!r}")
            if self.a is not None or self.mu is not None:
                raise ValueError("the exp model takes only K")
        elif self.variant is Variant.BHIT:
            if self.a is None or not self.a > 0 or not math.isfinite(self.a):
                raise ValueError(f"a must be positive, got {self.a!r}")
            if self.K is not None or self.mu is not None:
                raise ValueError("the bhit model takes only a")
        else:
            if self.mu is None or not self.mu > 0 or not math.isfinite(self.mu):
                raise ValueError(f"mu must be positive, got {self.mu!r}")
            if self.a is None or not self.a > 0 or not math.isfinite(self.a):
                raise ValueError(f"a must be positive, got {self.a!r}")
            if self.K is not None:
                raise ValueError("the bessel model takes mu and a, not K")

    @classmethod
    def exp(cls, K: float) -> "ModelSpec":
        return cls(Variant.EXP, K=float(K))

    @classmethod
    def brownian_hit(cls, a: float) -> "ModelSpec":
        return cls(Variant.BHIT, a=float(a))

    @classmethod
    def bessel(cls, mu: float, a: float) -> "ModelSpec":
        return cls(Variant.BESSEL, mu=float(mu), a=float(a))

    @property
    def dimension(self) -> float | None:
        """Dimension ``d = 2(mu+1)`` of the Bessel process, else ``None``."""
        return None if self.mu is None else 2.0 * (self.mu + 1.0)

    def label(self) -> str:
        if self.variant is Variant.EXP:
            return f"exp(K={self.K:g})"
        if self.variant is Variant.BHIT:
            return f"bhit(a={self.a:g})"
        return f"bessel(mu={self.mu:g},a={self.a:g})"


class BrownianState(NamedTuple):
    """Current Brownian value and whether the level ``a`` was already hit."""

    b: float
    hit: bool = False


@dataclass(frozen=True)
class NstCurve:
    model: ModelSpec
    points: tuple[tuple[float, float], ...]

    def __post_init__(self) -> None:
        ts = [p[0] for p in self.points]
        if any(t1 <= t0 for t0, t1 in zip(ts, ts[1:])):
            raise ValueError("curve abscissae must be strictly increasing")
        for t, m in self.points:
            if t < 0 or not 0.0 <= m <= QUARTER:
                raise ValueError(f"point ({t!r}, {m!r}) outside [0, inf) x [0, 1/4]")

    @property
    def t(self) -> np.ndarray:
        return np.array([p[0] for p in self.points])

    @property
    def m(self) -> np.ndarray:
        return np.array([p[1] for p in self.points])


@dataclass(frozen=True)
class SupResult:
    model: ModelSpec
    t_star: float
    m_star: float
    method_tolerance: float
    at_edge: bool = False


@dataclass(frozen=True)
class BesselCharacteristics:
    mu: float
    z_mu: float
    m_mu: float
    m_prime_mu: float
    residual: float


# ---------------------------------------------------------------------------
# Azema supermartingale as a function of the current state
# ---------------------------------------------------------------------------


def z_exp(m, K: float):
    """``min(1, M/K)``; accepts scalars or arrays."""
    return np.minimum(1.0, np.asarray(m, dtype=float) / K)


def z_bhit(b, hit, a: float):
    """``1 - B^+/a``, frozen at 0 once the level was reached."""
    b = np.asarray(b, dtype=float)
    z = 1.0 - np.clip(b, 0.0, a) / a
    return np.where(hit, 0.0, z)


def z_bessel(r, a: float, mu: float):
    """``min(1, (a/R)**(2 mu))`` with the cap at ``R = 0``."""
    r = np.asarray(r, dtype=float)
    with np.errstate(divide="ignore"):
        ratio = np.where(r > a, a / np.where(r > 0, r, 1.0), 1.0)
    return ratio ** (2.0 * mu)


def z_of_state(model: ModelSpec, state) -> float:
    """Value of the Azema supermartingale ``P(G > t | F_t)`` at a given state.

    ``state`` is the martingale value ``M_t`` for the exp model, a
    :class:`BrownianState` for bhit and the radius ``R_t`` for bessel.
    """
    if model.variant is Variant.BHIT:
        if not isinstance(state, BrownianState):
            raise TypeError("the bhit model needs a BrownianState(b, hit)")
        return float(z_bhit(state.b, state.hit, model.a))
    if isinstance(state, (BrownianState, tuple)):
        raise TypeError(f"{model.variant.value} model needs a scalar state")
    x = float(state)
    if x < 0 or not math.isfinite(x):
        raise ValueError(f"state must be finite and nonnegative, got {state!r}")
    if model.variant is Variant.EXP:
        return float(z_exp(x, model.K))
    return float(z_bessel(x, model.a, model.mu))


# ---------------------------------------------------------------------------
# exp(B_t - t/2) at level K
# ---------------------------------------------------------------------------


def _clamp(value: float) -> float:
    if -NEG_CLAMP <= value < 0.0:
        return 0.0
    return value


def m_exp(K: float, t: float) -> float:
    """m(t) for the last passage of ``exp(B_t - t/2)`` at level ``K``.

    With ``l = log K`` and ``d1 = (l - 3t/2)/sqrt(t)``, ``d2 = (l - t/2)/sqrt(t)``::

        m(t) = Phi(d1) (1/K - e^t/K^2) + (Phi(d2) - Phi(d1)) / K

    The product ``Phi(d1) e^t / K^2`` goes through :func:`phi_times_exp`, which
    keeps the formula finite for very large ``t``.
    """
    if not 0 < K <= 1:
        raise ValueError(f"K must lie in (0, 1], got {K!r}")
    if not t >= 0:
        raise ValueError(f"t must be nonnegative, got {t!r}")
    if t == 0 or math.isinf(t):
        return 0.0
    ell = math.log(K)
    rt = math.sqrt(t)
    d1 = -1.5 * rt + ell / rt
    d2 = -0.5 * rt + ell / rt
    p1 = normal_cdf(d1)
    p2 = normal_cdf(d2)
    inv_k = 1.0 / K
    value = p1 * inv_k - phi_times_exp(d1, t - 2.0 * ell) + inv_k * (p2 - p1)
    return _clamp(value)


# ---------------------------------------------------------------------------
# last zero before T_a
# ---------------------------------------------------------------------------


def _brownian_integrand(x: float):
    x2 = x * x

    def f(u: float) -> float:
        gap = 2.0 * x2 * (1.0 - u)
        if gap < 1.0:
            # both exponentials are close; difference via expm1
            diff = math.exp(-0.5 * x2 * (2.0 - u) ** 2) * math.expm1(gap)
        else:
            diff = math.exp(-0.5 * x2 * u * u) - math.exp(-0.5 * x2 * (2.0 - u) ** 2)
        return u * (1.0 - u) * diff

    return f


# beyond this x the killed-at-x corrections are below exp(-x**2/2) ~ 1e-348
_BHIT_ASYMPTOTIC_X = 40.0


def _brownian_integral(x: float) -> float:
    # the integrand lives on a scale 1/x near u = 0 for large x
    points = []
    if x > 2.0:
        p = 1.0 / x
        while p < 1.0:
            points.append(p)
            p *= 2.0
    return adaptive_quad(_brownian_integrand(x), 0.0, 1.0, tol=1e-13, points=points).value


def phi_brownian(x: float) -> float:
    """``E[1(S_1 < x) 1(B_1 > 0) B_1 (x - B_1)]`` by quadrature.

    Uses the joint law of the running maximum and the endpoint to reduce the
    expectation to ``x**3/sqrt(2 pi)`` times an integral over ``[0, 1]``.
    """
    if not x >= 0:
        raise ValueError(f"x must be nonnegative, got {x!r}")
    if x == 0:
        return 0.0
    if x > _BHIT_ASYMPTOTIC_X:
        # x E[B_1^+] - E[(B_1^+)^2]
        return x * _INV_SQRT_2PI - 0.5
    return max(0.0, x**3 * _INV_SQRT_2PI * _brownian_integral(x))


def m_brownian_hit(a: float, t: float) -> float:
    """m(t) for the last zero of Brownian motion before it first hits ``a``."""
    if not a > 0:
        raise ValueError(f"a must be positive, got {a!r}")
    if not t > 0:
        raise ValueError(f"t must be positive, got {t!r} (the limit at 0 is 0)")
    if math.isinf(t):
        return 0.0
    x = a / math.sqrt(t)
    if x > _BHIT_ASYMPTOTIC_X:
        return _INV_SQRT_2PI / x - 0.5 / (x * x)
    return max(0.0, x * _INV_SQRT_2PI * _brownian_integral(x))


# ---------------------------------------------------------------------------
# Bessel process at level a
# ---------------------------------------------------------------------------


def phi_mu(mu: float, z: float) -> float:
    """``(z^mu e^-z - z^(2 mu) int_z^inf u^-mu e^-u du) / Gamma(mu+1)``.

    The tail integral equals ``z**(1-mu) E_mu(z)``, so the bracket becomes
    ``z^mu e^-z (1 - z e^z E_mu(z))``.
    """
    if not mu > 0:
        raise ValueError(f"mu must be positive, got {mu!r}")
    if not z >= 0:
        raise ValueError(f"z must be nonnegative, got {z!r}")
    if z == 0 or math.isinf(z):
        return 0.0
    lead = math.exp(mu * math.log(z) - z - lgamma(mu + 1.0))
    if lead == 0.0:
        return 0.0
    return max(0.0, lead * (1.0 - z * exp_integral_scaled(mu, z)))


def m_bessel(mu: float, a: float, t: float) -> float:
    """m(t) for the last passage at ``a`` of a Bessel process of index ``mu``."""
    if not (mu > 0 and a > 0 and t > 0):
        raise ValueError(f"need mu, a, t > 0, got mu={mu!r}, a={a!r}, t={t!r}")
    return phi_mu(mu, a * a / (2.0 * t))


def _z_equation(mu: float):
    def g(z: float) -> float:
        return 2.0 * z * exp_integral_scaled(mu, z) - 1.0

    return g


def solve_z_mu(mu: float, tol: float = 1e-14) -> RootResult:
    """Maximizer of ``phi_mu``: the root of ``2 z e^z E_mu(z) = 1``.

    The left side tends to 0 as ``z -> 0`` and to 2 as ``z -> inf``, so the
    initial bracket ``[1e-6, max(10, 4 mu)]`` is widened only for extreme
    ``mu``.
    """
    if not mu > 0:
        raise ValueError(f"mu must be positive, got {mu!r}")
    g = _z_equation(mu)
    lo, hi = 1e-6, max(10.0, 4.0 * mu)
    if not math.isfinite(hi):
        raise BracketError(f"mu={mu} is too large to bracket the root")
    try:
        while g(lo) >= 0:
            lo *= 1e-3
            if lo < 1e-300:
                raise BracketError(f"no sign change below the root for mu={mu}")
        while g(hi) <= 0:
            hi *= 4.0
            if hi > 1e12:
                raise BracketError(f"no sign change above the root for mu={mu}")
        # search in log z: the root is tiny for small mu
        res = brent_root(lambda s: g(math.exp(s)), (math.log(lo), math.log(hi)), tol=tol)
    except (ArithmeticError, ConvergenceError) as exc:
        raise ConvergenceError(f"root of the optimum equation failed for mu={mu}: {exc}") from exc
    z = math.exp(res.root)
    return RootResult(
        root=z,
        residual=g(z),
        iterations=res.iterations,
        bracket=(math.exp(res.bracket[0]), math.exp(res.bracket[1])),
    )


def bessel_characteristics(mu: float) -> BesselCharacteristics:
    """``z_mu``, ``m_mu = sup_z phi_mu`` and the bound ``m'_mu``.

    ``m'_mu = sup_z z^mu e^-z / (2 Gamma(mu+1))`` is attained at ``z = mu``.
    """
    res = solve_z_mu(mu)
    z = res.root
    log_norm = lgamma(mu + 1.0)
    m_mu = 0.5 * math.exp(mu * math.log(z) - z - log_norm)
    m_prime = 0.5 * math.exp(mu * math.log(mu) - mu - log_norm)
    return BesselCharacteristics(mu=mu, z_mu=z, m_mu=m_mu, m_prime_mu=m_prime, residual=res.residual)


# ---------------------------------------------------------------------------
# dispatch and optimization over t
# ---------------------------------------------------------------------------


def m_of(model: ModelSpec, t: float) -> float:
    """``m(t) = E[Z_t (1 - Z_t)]`` for any of the three models."""
    if not t >= 0:
        raise ValueError(f"t must be nonnegative, got {t!r}")
    if model.variant is Variant.EXP:
        return m_exp(model.K, t)
    if t == 0 or math.isinf(t):
        return 0.0
    if model.variant is Variant.BHIT:
        return m_brownian_hit(model.a, t)
    return m_bessel(model.mu, model.a, t)


def sample_curve(model: ModelSpec, times: Iterable[float]) -> NstCurve:
    return NstCurve(model, tuple((float(t), m_of(model, float(t))) for t in times))


def sup_m(
    model: ModelSpec,
    t_range: tuple[float, float] = (1e-6, 1e6),
    grid_points: int = 200,
    tol: float = 1e-8,
) -> SupResult:
    """Locate ``sup_t m(t)``.

    A log-spaced scan over ``t_range`` picks the best grid cell, then
    :func:`maximize_1d` refines in ``log t`` (so ``tol`` is relative in t).
    ``at_edge`` is set when the maximum sits at the end of the scan window.
    """
    lo, hi = math.log(t_range[0]), math.log(t_range[1])
    grid = np.linspace(lo, hi, grid_points)
    values = [m_of(model, math.exp(s)) for s in grid]
    k = int(np.argmax(values))
    left = grid[max(k - 1, 0)]
    right = grid[min(k + 1, grid_points - 1)]
    res = maximize_1d(lambda s: m_of(model, math.exp(s)), (left, right), tol=tol)
    at_edge = k in (0, grid_points - 1) and res.at_edge
    if at_edge:
        warnings.warn(
            f"maximum of m for {model.label()} at the edge of the scan window",
            RuntimeWarning,
            stacklevel=2,
        )
    return SupResult(
        model=model,
        t_star=math.exp(res.argmax),
        m_star=res.max_value,
        method_tolerance=tol,
        at_edge=at_edge,
    )


@dataclass(frozen=True)
class KStarExperiment:
    rows: tuple[SupResult, ...]
    monotone_nondecreasing: bool

    def table(self) -> list[tuple[float, float, float]]:
        return [(r.model.K, r.t_star, r.m_star) for r in self.rows]


def kstar_experiment(k_grid: Sequence[float]) -> KStarExperiment:
    """``sup_t m_K(t)`` along a grid of levels.

    Whether ``K -> m_K*`` is nondecreasing is reported, not enforced: it is
    an open question, and this is numerical evidence only.
    """
    ks = [float(k) for k in k_grid]
    if any(not 0 < k <= 1 for k in ks):
        raise ValueError("every K must lie in (0, 1]")
    if any(k1 <= k0 for k0, k1 in zip(ks, ks[1:])):
        raise ValueError("the K grid must be strictly increasing")
    rows = tuple(sup_m(ModelSpec.exp(k)) for k in ks)
    monotone = all(r1.m_star >= r0.m_star for r0, r1 in zip(rows, rows[1:]))
    return KStarExperiment(rows=rows, monotone_nondecreasing=monotone)
