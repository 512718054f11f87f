"""Monte Carlo checks of the closed forms.

Paths are generated on independent Philox substreams; substream ``i`` is
keyed by ``SeedSequence(seed, spawn_key=(i,))`` and the per-path results are
concatenated in substream order, so an estimate depends only on
``(seed, n_paths, n_streams, dt)`` and not on how the substreams are run.

Grid conventions shared by all path simulators:

* the last passage ``G`` is the last grid point ``t_j`` at which the
  indicator "Z is capped at 1" (``M >= K``, ``B <= 0`` or ``R <= a``)
  differs from its value at ``t_{j-1}``;
* a path is abandoned once ``Z <= eps_stop``; by the maximal inequality the
  chance of a further passage is at most ``eps_stop``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterator, Sequence

import numpy as np

from .models import ModelSpec, Variant, z_bessel, z_bhit, z_exp

__all__ = [
    "McEstimate",
    "PathRecord",
    "SimConfig",
    "estimate_at_level_hit",
    "estimate_m_identity",
    "estimate_m_marginal",
    "estimate_m_path",
    "estimate_phi_brownian",
    "estimate_sup_zz",
    "per_path_sup_zz",
    "quarter_run",
    "sample_joint_max",
    "simulate_bessel_paths",
    "simulate_brownian_before_hit",
    "simulate_exp_paths",
    "substream",
]

_BLOCK_ELEMENTS = 1 << 21
_FAR = 8.0


@dataclass(frozen=True)
class SimConfig:
    seed: int = 0
    n_paths: int = 10_000
    dt: float = 1e-3
    eps_stop: float = 1e-4
    n_streams: int = 8
    max_steps: int = 20_000_000
    workers: int = 1

    def __post_init__(self) -> None:
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.n_paths < 1 or self.n_streams < 1:
            raise ValueError("n_paths and n_streams must be at least 1")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not 0 < self.eps_stop < 1:
            raise ValueError("eps_stop must lie in (0, 1)")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")


@dataclass(frozen=True)
class McEstimate:
    mean: float
    std_error: float
    n: int
    seed: int

    @classmethod
    def from_samples(cls, values: np.ndarray, seed: int) -> "McEstimate":
        values = np.asarray(values, dtype=float)
        n = values.size
        se = float(values.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
        return cls(mean=float(values.mean()), std_error=se, n=n, seed=int(seed))


@dataclass(frozen=True)
class PathRecord:
    times: np.ndarray
    values: np.ndarray
    last_passage_time: float | None
    termination_reason: str  # "epsilon_stop", "hit_target" or "horizon"
    hit_time: float | None = None


# ---------------------------------------------------------------------------
# streams
# ---------------------------------------------------------------------------


def substream(seed: int, index: int) -> np.random.Generator:
    """Independent generator number ``index`` derived from ``seed``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(index),))
    return np.random.Generator(np.random.Philox(ss))


def _sizes(n: int, k: int) -> list[int]:
    q, r = divmod(n, k)
    return [q + (1 if i < r else 0) for i in range(k)]


def _map_streams(cfg: SimConfig, fn: Callable[[np.random.Generator, int], object]) -> list:
    jobs = [(i, m) for i, m in enumerate(_sizes(cfg.n_paths, cfg.n_streams)) if m > 0]

    def run(job):
        i, m = job
        return fn(substream(cfg.seed, i), m)

    if cfg.workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            return list(pool.map(run, jobs))
    return [run(job) for job in jobs]


def _block_len(rows: int, remaining: int | None = None, width: int = 1) -> int:
    b = max(16, min(8192, _BLOCK_ELEMENTS // max(1, rows * width)))
    return b if remaining is None else max(1, min(b, remaining))


# ---------------------------------------------------------------------------
# walkers: advance many paths by blocks of grid steps
# ---------------------------------------------------------------------------


class _ExpWalk:
    # state: log of exp(B_t - t/2)
    frozen_possible = False

    def __init__(self, K: float, dt: float):
        self.K = K
        self.logk = math.log(K)
        self.sd = math.sqrt(dt)
        self.drift = -0.5 * dt

    def start(self, n):
        return np.zeros(n)

    def take(self, state, rows):
        return state[rows]

    def path(self, rng, state, nsteps):
        path = rng.standard_normal((state.shape[0], nsteps))
        path *= self.sd
        path += self.drift
        np.cumsum(path, axis=1, out=path)
        path += state[:, None]
        return path

    def run(self, rng, state, nsteps):
        path = self.path(rng, state, nsteps)
        z = np.exp(np.minimum(path - self.logk, 0.0))
        inside = path >= self.logk
        return z, inside, path[:, -1].copy()

    def initial_inside(self):
        return self.K <= 1.0

    def frozen(self, state):
        return np.zeros(state.shape[0], dtype=bool)


class _BrownianHitWalk:
    # state: (B, hit-flag); the level a is detected on the grid and, between
    # grid points, through the Brownian bridge crossing probability
    frozen_possible = True

    def __init__(self, a: float, dt: float):
        self.a = a
        self.dt = dt
        self.sd = math.sqrt(dt)
        self.near = 20.0 * self.sd  # beyond this the bridge probability is 0.0 in doubles

    def start(self, n):
        return (np.zeros(n), np.zeros(n, dtype=bool))

    def take(self, state, rows):
        return (state[0][rows], state[1][rows])

    def path(self, rng, state, nsteps):
        b0, hit0 = state
        n = b0.shape[0]
        path = rng.standard_normal((n, nsteps))
        path *= self.sd
        np.cumsum(path, axis=1, out=path)
        path += b0[:, None]
        a = self.a
        hit = path >= a
        close = np.flatnonzero(path.max(axis=1) >= a - self.near)
        if close.size:
            sub = path[close]
            prev = np.concatenate([b0[close, None], sub[:, :-1]], axis=1)
            gap0 = a - prev
            gap1 = a - sub
            with np.errstate(over="ignore"):
                p = np.where((gap0 > 0) & (gap1 > 0), np.exp(-2.0 * gap0 * gap1 / self.dt), 0.0)
            cand = p > 0
            if cand.any():
                u = rng.random(int(cand.sum()))
                bridge = np.zeros_like(cand)
                bridge[cand] = u < p[cand]
                hit[close] |= bridge
        hit[:, 0] |= hit0
        hit = np.logical_or.accumulate(hit, axis=1)
        return path, hit

    def run(self, rng, state, nsteps):
        path, hit = self.path(rng, state, nsteps)
        a = self.a
        z = z_bhit(path, hit, a)
        inside = (path <= 0.0) & ~hit
        return z, inside, (path[:, -1].copy(), hit[:, -1].copy())

    def initial_inside(self):
        return True

    def frozen(self, state):
        return state[1]


class _BesselWalk:
    # state: position of a d-dimensional Brownian motion
    frozen_possible = False

    def __init__(self, mu: float, a: float, dt: float):
        d = 2.0 * (mu + 1.0)
        if abs(d - round(d)) > 1e-12:
            raise ValueError(
                f"path simulation needs an integer dimension 2(mu+1), got {d:g}"
            )
        self.d = int(round(d))
        self.mu = mu
        self.a = a
        self.sd = math.sqrt(dt)

    def start(self, n):
        return np.zeros((n, self.d))

    def take(self, state, rows):
        return state[rows]

    def run(self, rng, state, nsteps):
        n = state.shape[0]
        inc = rng.standard_normal((n, nsteps, self.d))
        inc *= self.sd
        np.cumsum(inc, axis=1, out=inc)
        inc += state[:, None, :]
        r = np.sqrt(np.einsum("ijk,ijk->ij", inc, inc))
        z = z_bessel(r, self.a, self.mu)
        inside = r <= self.a
        return z, inside, inc[:, -1, :].copy()

    def initial_inside(self):
        return True

    def frozen(self, state):
        return np.zeros(state.shape[0], dtype=bool)


def _walker(model: ModelSpec, dt: float):
    if model.variant is Variant.EXP:
        return _ExpWalk(model.K, dt)
    if model.variant is Variant.BHIT:
        return _BrownianHitWalk(model.a, dt)
    return _BesselWalk(model.mu, model.a, dt)


def _first_true(mask: np.ndarray) -> np.ndarray:
    # column of the first True per row, or the row length when there is none
    idx = np.argmax(mask, axis=1)
    idx[~mask[np.arange(mask.shape[0]), idx]] = mask.shape[1]
    return idx


# ---------------------------------------------------------------------------
# m(t) from simulated paths
# ---------------------------------------------------------------------------


def _grid_index(t: float, dt: float) -> int:
    return max(1, int(round(t / dt)))


def estimate_m_path(
    model: ModelSpec, times: float | Sequence[float], cfg: SimConfig
) -> McEstimate | list[McEstimate]:
    """Path-simulated ``E[Z_t (1 - Z_t)]`` at one or several times.

    All requested times share the same paths; each uses the grid point
    nearest to it.
    """
    scalar = np.isscalar(times)
    ts = [float(times)] if scalar else [float(t) for t in times]
    if any(not t > 0 for t in ts):
        raise ValueError("times must be positive")
    idx = [_grid_index(t, cfg.dt) for t in ts]
    last = max(idx)
    walker = _walker(model, cfg.dt)

    def one(rng, n):
        out = np.zeros((len(idx), n))
        state = walker.start(n)
        rows = np.arange(n)
        done = 0
        while done < last and rows.size:
            nsteps = _block_len(rows.size, last - done, getattr(walker, "d", 1))
            z, _, state = walker.run(rng, state, nsteps)
            for q, k in enumerate(idx):
                if done < k <= done + nsteps:
                    zk = z[:, k - done - 1]
                    out[q, rows] = zk * (1.0 - zk)
            done += nsteps
            if walker.frozen_possible:
                keep = ~walker.frozen(state)
                rows = rows[keep]
                state = walker.take(state, keep)
        return out

    values = np.concatenate(_map_streams(cfg, one), axis=1)
    ests = [McEstimate.from_samples(v, cfg.seed) for v in values]
    return ests[0] if scalar else ests


def _identity_far_bessel(walker: _BesselWalk, rng, state, inside_prev, dt, eps, max_steps):
    # continuation for the Bessel last passage: grid steps near the level,
    # longer exact Gaussian steps when the radius is far above it
    n = state.shape[0]
    result = np.zeros(n)
    rows = np.arange(n)
    a = walker.a
    steps = 0
    while rows.size:
        steps += 1
        if steps > max_steps:
            raise RuntimeError("Bessel continuation exceeded max_steps")
        r = np.sqrt(np.einsum("ij,ij->i", state, state))
        h = np.where(r > a, np.maximum(dt, ((r - a) / _FAR) ** 2), dt)
        state = state + rng.standard_normal(state.shape) * np.sqrt(h)[:, None]
        r = np.sqrt(np.einsum("ij,ij->i", state, state))
        inside = r <= a
        z = z_bessel(r, a, walker.mu)
        changed = inside != inside_prev
        stop = z <= eps
        result[rows[changed & ~stop]] = 1.0
        keep = ~(changed | stop)
        rows, state, inside_prev = rows[keep], state[keep], inside[keep]
    return result


def estimate_m_identity(
    model: ModelSpec, t: float, cfg: SimConfig
) -> tuple[McEstimate, McEstimate]:
    """Both expressions of ``m(t)`` on the same paths.

    Returns estimates of ``E[Z_t (1 - Z_t)]`` and of
    ``E[(1(G >= t) - Z_t)**2]``, where ``G`` is the grid last passage.
    """
    if not t > 0:
        raise ValueError("t must be positive")
    walker = _walker(model, cfg.dt)
    k = _grid_index(t, cfg.dt)
    eps = cfg.eps_stop
    width = getattr(walker, "d", 1)

    def one(rng, n):
        state = walker.start(n)
        inside_prev = np.full(n, walker.initial_inside())
        done = 0
        while done < k - 1:
            nsteps = _block_len(n, k - 1 - done, width)
            _, inside, state = walker.run(rng, state, nsteps)
            inside_prev = inside[:, -1]
            done += nsteps
        z_t = np.empty(n)
        indicator = np.zeros(n)
        rows = np.arange(n)
        first = True
        while rows.size:
            if isinstance(walker, _BesselWalk) and not first:
                indicator[rows] = _identity_far_bessel(
                    walker, rng, state, inside_prev, cfg.dt, eps, cfg.max_steps
                )
                break
            nsteps = _block_len(rows.size, None, width)
            z, inside, state = walker.run(rng, state, nsteps)
            prev = np.concatenate([inside_prev[:, None], inside[:, :-1]], axis=1)
            change = _first_true(inside != prev)
            stop = _first_true(z <= eps)
            if first:
                z_t[:] = z[:, 0]
                first = False
                # capped at time t: a later passage is certain (and may take a
                # heavy-tailed time to show up on the grid for Brownian motion)
                change[inside[:, 0]] = 0
            resolved = (change < nsteps) | (stop < nsteps)
            indicator[rows[resolved & (change < stop)]] = 1.0
            keep = ~resolved
            rows = rows[keep]
            state = walker.take(state, keep)
            inside_prev = inside[keep, -1]
            done += nsteps
            if done > cfg.max_steps:
                raise RuntimeError("last-passage detection exceeded max_steps")
        zz = z_t * (1.0 - z_t)
        sq = (indicator - z_t) ** 2
        return np.stack([zz, sq])

    values = np.concatenate(_map_streams(cfg, one), axis=1)
    return (
        McEstimate.from_samples(values[0], cfg.seed),
        McEstimate.from_samples(values[1], cfg.seed),
    )


# ---------------------------------------------------------------------------
# quarter laws: sup_t Z(1-Z) and Z(1-Z) at the hitting time of a level
# ---------------------------------------------------------------------------


def quarter_run(
    model: ModelSpec,
    cfg: SimConfig,
    strides: Sequence[int] = (1,),
    level: float | None = 0.5,
) -> tuple[np.ndarray, np.ndarray | None]:
    """Per-path ``max Z(1-Z)`` on nested grids and ``Z(1-Z)`` at a level.

    Row ``q`` of the first array holds, for every path, the maximum of
    ``Z(1-Z)`` over the grid of step ``strides[q] * dt`` (a subset of the
    finest grid, so rows are pathwise ordered by refinement).  Each path is
    followed until the coarsest grid has seen ``Z <= 1/2``: the maximum is
    then within one squared grid increment of 1/4 on every grid.  The second
    array holds ``Z_T (1 - Z_T)`` at the first fine-grid time ``T`` with
    ``Z_T <= level``.
    """
    strides = [int(s) for s in strides]
    if any(s < 1 for s in strides):
        raise ValueError("strides must be positive integers")
    if level is not None and not 0 < level < 1:
        raise ValueError("level must lie in (0, 1)")
    coarse = max(strides)
    walker = _walker(model, cfg.dt)
    width = getattr(walker, "d", 1)

    def one(rng, n):
        best = np.zeros((len(strides), n))
        at_level = np.full(n, np.nan)
        need_level = np.full(n, level is not None)
        need_sup = np.ones(n, dtype=bool)
        state = walker.start(n)
        rows = np.arange(n)
        done = 0
        while rows.size:
            nsteps = _block_len(rows.size, None, width)
            z, _, state = walker.run(rng, state, nsteps)
            zz = z * (1.0 - z)
            steps = done + 1 + np.arange(nsteps)
            on_coarse = steps % coarse == 0
            stop = _first_true((z <= 0.5) & on_coarse[None, :])
            cols = np.arange(nsteps)[None, :]
            upto = cols <= stop[:, None]
            active_sup = need_sup[rows]
            for q, s in enumerate(strides):
                mask = upto & (steps % s == 0)[None, :]
                m = np.where(mask, zz, 0.0).max(axis=1)
                best[q, rows] = np.where(active_sup, np.maximum(best[q, rows], m), best[q, rows])
            need_sup[rows[active_sup & (stop < nsteps)]] = False
            if level is not None:
                hit = _first_true(z <= level)
                got = need_level[rows] & (hit < nsteps)
                at_level[rows[got]] = zz[got, hit[got]]
                need_level[rows[got]] = False
            keep = need_sup[rows] | need_level[rows]
            rows = rows[keep]
            state = walker.take(state, keep)
            done += nsteps
            if done > cfg.max_steps:
                # every path reaches the level a.s., but for bhit the time to
                # do so has infinite mean
                raise RuntimeError("a path did not reach the level within max_steps")
        return best, at_level

    parts = _map_streams(cfg, one)
    sups = np.concatenate([p[0] for p in parts], axis=1)
    levels = None if level is None else np.concatenate([p[1] for p in parts])
    return sups, levels


def per_path_sup_zz(model: ModelSpec, cfg: SimConfig, strides: Sequence[int] = (1,)) -> np.ndarray:
    return quarter_run(model, cfg, strides, level=None)[0]


def estimate_sup_zz(model: ModelSpec, cfg: SimConfig) -> McEstimate:
    """Mean over paths of the grid maximum of ``Z(1-Z)``; tends to 1/4."""
    return McEstimate.from_samples(per_path_sup_zz(model, cfg)[0], cfg.seed)


def estimate_at_level_hit(model: ModelSpec, level: float, cfg: SimConfig) -> McEstimate:
    """Mean of ``Z_T (1 - Z_T)`` where ``T`` is the first grid time with ``Z <= level``."""
    if not cfg.eps_stop < level < 1:
        raise ValueError("level must lie in (eps_stop, 1)")
    _, values = quarter_run(model, cfg, strides=(1,), level=level)
    return McEstimate.from_samples(values, cfg.seed)


# ---------------------------------------------------------------------------
# exact marginal samplers
# ---------------------------------------------------------------------------


def estimate_m_marginal(model: ModelSpec, t: float, n: int, seed: int) -> McEstimate:
    """``E[Z_t (1 - Z_t)]`` from the exact law of the state at time ``t``.

    ``exp(B_t - t/2)`` is lognormal; for the Bessel model ``R_t**2 = 2 t G``
    with ``G ~ Gamma(mu + 1)``.
    """
    if not t > 0:
        raise ValueError("t must be positive")
    rng = substream(seed, 0)
    if model.variant is Variant.EXP:
        m = np.exp(math.sqrt(t) * rng.standard_normal(n) - 0.5 * t)
        z = z_exp(m, model.K)
    elif model.variant is Variant.BESSEL:
        r2 = 2.0 * t * rng.standard_gamma(model.mu + 1.0, n)
        with np.errstate(divide="ignore"):
            z = np.minimum(1.0, (model.a * model.a / r2) ** model.mu)
    else:
        raise ValueError(
            "the marginal of B_t does not determine Z_t for bhit; "
            "use estimate_phi_brownian"
        )
    return McEstimate.from_samples(z * (1.0 - z), seed)


def sample_joint_max(n: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Exact draws of ``(S_1, B_1)``, running maximum and endpoint at time 1.

    Given ``B_1 = b`` the tail ``P(S_1 > x) = exp(-2 x (x - b))`` is inverted
    in closed form.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = substream(seed, 0)
    b = rng.standard_normal(n)
    u = rng.random(n)
    s = 0.5 * (b + np.sqrt(b * b - 2.0 * np.log1p(-u)))
    return np.maximum(s, np.maximum(b, 0.0)), b


def estimate_phi_brownian(x: float, n: int, seed: int) -> McEstimate:
    """``E[1(S_1 < x) 1(B_1 > 0) B_1 (x - B_1)]`` from :func:`sample_joint_max`."""
    if not x > 0:
        raise ValueError("x must be positive")
    s, b = sample_joint_max(n, seed)
    values = np.where((s < x) & (b > 0), b * (x - b), 0.0)
    return McEstimate.from_samples(values, seed)


# ---------------------------------------------------------------------------
# individual paths
# ---------------------------------------------------------------------------


def _path_streams(cfg: SimConfig) -> Iterator[np.random.Generator]:
    for i, m in enumerate(_sizes(cfg.n_paths, cfg.n_streams)):
        if m:
            rng = substream(cfg.seed, i)
            for _ in range(m):
                yield rng


def _last_change(inside: np.ndarray, upto: int) -> int | None:
    flips = np.flatnonzero(inside[1 : upto + 1] != inside[:upto]) + 1
    return int(flips[-1]) if flips.size else None


def simulate_exp_paths(K: float, cfg: SimConfig) -> Iterator[PathRecord]:
    """Grid paths of ``exp(B_t - t/2)`` followed until ``M <= eps_stop * K``.

    ``values`` holds the martingale itself; the last passage is the last
    grid time at which ``M - K`` changed sign.
    """
    walker = _ExpWalk(ModelSpec.exp(K).K, cfg.dt)
    log_stop = math.log(cfg.eps_stop * K)
    for rng in _path_streams(cfg):
        pieces = [np.zeros(1)]
        last = np.zeros(1)
        total = 0
        reason = "horizon"
        while total < cfg.max_steps:
            path = walker.path(rng, last, min(4096, cfg.max_steps - total))[0]
            below = np.flatnonzero(path <= log_stop)
            if below.size:
                path = path[: below[0] + 1]
                reason = "epsilon_stop"
            pieces.append(path)
            total += path.size
            last = path[-1:]
            if reason != "horizon":
                break
        logm = np.concatenate(pieces)
        times = cfg.dt * np.arange(logm.size)
        j = _last_change(logm >= walker.logk, logm.size - 1)
        yield PathRecord(
            times=times,
            values=np.exp(logm),
            last_passage_time=None if j is None or reason == "horizon" else float(times[j]),
            termination_reason=reason,
        )


def simulate_brownian_before_hit(a: float, cfg: SimConfig) -> Iterator[PathRecord]:
    """Brownian grid paths stopped at the first passage ``T_a`` of level ``a``.

    ``T_a`` is the first grid step whose endpoint is at or above ``a``, or in
    which the Brownian bridge between the endpoints crosses ``a`` (sampled
    with probability ``exp(-2 (a - x0)(a - x1) / dt)``); it is recorded at the
    end of that step.  The last zero is the last sign change strictly
    before ``T_a``.
    """
    walker = _BrownianHitWalk(ModelSpec.brownian_hit(a).a, cfg.dt)
    for rng in _path_streams(cfg):
        pieces = [np.zeros(1)]
        state = (np.zeros(1), np.zeros(1, dtype=bool))
        total = 0
        hit_at = None
        while total < cfg.max_steps:
            path, hit = walker.path(rng, state, min(4096, cfg.max_steps - total))
            first = np.flatnonzero(hit[0])
            if first.size:
                hit_at = total + first[0] + 1
                pieces.append(path[0, : first[0] + 1])
                break
            pieces.append(path[0])
            total += path.shape[1]
            state = (path[:, -1], hit[:, -1])
        b = np.concatenate(pieces)
        times = cfg.dt * np.arange(b.size)
        upto = b.size - 2 if hit_at is not None else b.size - 1
        j = _last_change(b <= 0.0, max(upto, 0))
        yield PathRecord(
            times=times,
            values=b,
            last_passage_time=None if j is None or hit_at is None else float(times[j]),
            termination_reason="horizon" if hit_at is None else "hit_target",
            hit_time=None if hit_at is None else float(times[hit_at]),
        )


def simulate_bessel_paths(mu: float, a: float, cfg: SimConfig) -> Iterator[PathRecord]:
    """Radial part of a ``2(mu+1)``-dimensional Brownian motion started at 0.

    Steps are ``dt`` while the radius is near ``a``; above the level, where a
    crossing within one step is out of reach, the step grows to
    ``((R - a)/8)**2``.  The walk stops once ``(a/R)**(2 mu) <= eps_stop``,
    and the last passage is the last grid time at which ``R - a`` changed
    sign.
    """
    walker = _BesselWalk(ModelSpec.bessel(mu, a).mu, a, cfg.dt)
    r_stop = a * cfg.eps_stop ** (-1.0 / (2.0 * mu))
    for rng in _path_streams(cfg):
        x = np.zeros(walker.d)
        t = 0.0
        times = [0.0]
        radii = [0.0]
        reason = "horizon"
        for _ in range(cfg.max_steps):
            r = radii[-1]
            h = max(cfg.dt, ((r - a) / _FAR) ** 2) if r > a else cfg.dt
            x = x + math.sqrt(h) * rng.standard_normal(walker.d)
            t += h
            r = float(np.sqrt(x @ x))
            times.append(t)
            radii.append(r)
            if r >= r_stop:
                reason = "epsilon_stop"
                break
        times = np.array(times)
        radii = np.array(radii)
        j = _last_change(radii <= a, radii.size - 1)
        yield PathRecord(
            times=times,
            values=radii,
            last_passage_time=None if j is None or reason == "horizon" else float(times[j]),
            termination_reason=reason,
        )
