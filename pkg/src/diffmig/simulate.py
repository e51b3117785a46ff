"""
Ground-truth generators.

* free drift-diffusion tracks sampled exactly at irregular times,
* additive i.i.d. measurement noise with known cumulants,
* reflected drift-diffusion inside a rectangle (Euler steps folded back into
  the domain), and the Monte Carlo estimate of a migration proportion.

Random streams are derived from ``(seed, index)`` pairs through
:class:`numpy.random.SeedSequence`, so results do not depend on how work is
split across processes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .greens import DomainRect
from .model import (
    DriftVector,
    ErrorCumulants,
    TrackSeries,
    integrate_diffusion,
)
from .proportions import AreaRect

__all__ = [
    "FixedIntervals",
    "UniformIntervals",
    "ExponentialIntervals",
    "GaussianNoise",
    "UniformNoise",
    "LaplaceNoise",
    "stream",
    "simulate_free_path",
    "simulate_free_paths",
    "add_noise",
    "simulate_reflected_path",
    "max_reflected_step",
    "mc_migration_proportion",
]


def stream(seed, index=None) -> np.random.Generator:
    """Generator for ``seed``, or for the sub-stream ``(seed, index)``.

    ``seed`` may be an int, a tuple of ints (a path of derived seeds) or an
    existing generator, which is returned unchanged.
    """
    if isinstance(seed, np.random.Generator):
        return seed
    if seed is None:
        return np.random.default_rng()
    entropy = [int(v) for v in seed] if isinstance(seed, (tuple, list)) else [int(seed)]
    if index is not None:
        entropy.append(int(index))
    return np.random.default_rng(np.random.SeedSequence(entropy))


# ---------------------------------------------------------------------------
# Sampling intervals
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FixedIntervals:
    """Intervals drawn from a finite set of values with given weights."""

    values: tuple
    weights: tuple = None

    def __post_init__(self):
        v = tuple(float(x) for x in self.values)
        w = (1.0 / len(v),) * len(v) if self.weights is None else tuple(float(x) for x in self.weights)
        if not v or len(v) != len(w):
            raise ValueError("values and weights must be non-empty and of equal length")
        if not all(x > 0 for x in v) or any(x < 0 for x in w) or abs(math.fsum(w) - 1) > 1e-12:
            raise ValueError("values must be > 0 and weights a probability vector")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "weights", w)

    def sample(self, rng, n):
        return rng.choice(np.asarray(self.values), size=n, p=np.asarray(self.weights))


@dataclass(frozen=True)
class UniformIntervals:
    lo: float
    hi: float

    def __post_init__(self):
        if not 0 < self.lo <= self.hi:
            raise ValueError("need 0 < lo <= hi")

    def sample(self, rng, n):
        return rng.uniform(self.lo, self.hi, size=n)


@dataclass(frozen=True)
class ExponentialIntervals:
    mean: float

    def __post_init__(self):
        if not self.mean > 0:
            raise ValueError("mean interval must be > 0")

    def sample(self, rng, n):
        dt = rng.exponential(self.mean, size=n)
        # a zero draw would break strict monotonicity of time
        while not np.all(dt > 0):
            bad = dt <= 0
            dt[bad] = rng.exponential(self.mean, size=int(bad.sum()))
        return dt


# ---------------------------------------------------------------------------
# Measurement noise
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GaussianNoise:
    sigma: float = 0.0

    def __post_init__(self):
        if not self.sigma >= 0:
            raise ValueError("sigma must be >= 0")

    @property
    def cumulants(self) -> ErrorCumulants:
        return ErrorCumulants(self.sigma**2, 0.0, 0.0, {5: 0.0, 6: 0.0, 7: 0.0, 8: 0.0})

    def sample(self, rng, size):
        return rng.normal(0.0, self.sigma, size=size)


@dataclass(frozen=True)
class UniformNoise:
    """Errors uniform on ``[-half_width, half_width]``."""

    half_width: float = 0.0

    def __post_init__(self):
        if not self.half_width >= 0:
            raise ValueError("half_width must be >= 0")

    @property
    def cumulants(self) -> ErrorCumulants:
        a = self.half_width
        # k_2m = B_2m (2a)^2m / 2m
        return ErrorCumulants(a**2 / 3, 0.0, -2 * a**4 / 15,
                              {5: 0.0, 6: 16 * a**6 / 63, 7: 0.0, 8: -16 * a**8 / 15})

    def sample(self, rng, size):
        return rng.uniform(-self.half_width, self.half_width, size=size)


@dataclass(frozen=True)
class LaplaceNoise:
    scale: float = 0.0

    def __post_init__(self):
        if not self.scale >= 0:
            raise ValueError("scale must be >= 0")

    @property
    def cumulants(self) -> ErrorCumulants:
        b = self.scale
        # k_2m = 2 (2m - 1)! b^2m
        return ErrorCumulants(2 * b**2, 0.0, 12 * b**4, {5: 0.0, 6: 240 * b**6, 7: 0.0, 8: 10080 * b**8})

    def sample(self, rng, size):
        if self.scale == 0:
            return np.zeros(size)
        return rng.laplace(0.0, self.scale, size=size)


# ---------------------------------------------------------------------------
# Free paths
# ---------------------------------------------------------------------------

def _drift(drift):
    return drift if isinstance(drift, DriftVector) else DriftVector(*drift)


def simulate_free_path(drift, law, intervals, n, x0=(0.0, 0.0), seed=None, t0=0.0, path_id="sim"):
    """Sample a 2-D track with ``n`` intervals (``n + 1`` fixes) exactly.

    Each increment is drawn from its exact Gaussian transition law, so there
    is no discretisation error.  The two axes are independent.
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    drift = _drift(drift)
    rng = stream(seed)
    dt = intervals.sample(rng, n)
    t = t0 + np.concatenate([[0.0], np.cumsum(dt)])
    var = 2.0 * integrate_diffusion(law, t[:-1], t[1:])
    sd = np.sqrt(var)
    dx = drift.beta_x * dt + sd * rng.standard_normal(n)
    dy = drift.beta_y * dt + sd * rng.standard_normal(n)
    x = x0[0] + np.concatenate([[0.0], np.cumsum(dx)])
    y = x0[1] + np.concatenate([[0.0], np.cumsum(dy)])
    return TrackSeries(path_id, t, x, y)


def simulate_free_paths(drift, law, intervals, n, n_paths, seed, noise=None, x0=(0.0, 0.0),
                        prefix="sim"):
    """Independent tracks, path ``k`` drawn from stream ``(seed, k)``.

    If ``noise`` is given, measurement errors are added from the same stream.
    """
    tracks = []
    for k in range(n_paths):
        rng = stream(seed, k)
        tr = simulate_free_path(drift, law, intervals, n, x0, rng, path_id=f"{prefix}{k}")
        if noise is not None:
            tr = add_noise(tr, noise, rng)
        tracks.append(tr)
    return tracks


def add_noise(track: TrackSeries, model, seed=None) -> TrackSeries:
    """Add i.i.d. measurement errors to both coordinates of every fix."""
    rng = stream(seed)
    m = len(track)
    ex = model.sample(rng, m)
    ey = model.sample(rng, m)
    return TrackSeries(track.path_id, track.t, track.x + ex, track.y + ey)


# ---------------------------------------------------------------------------
# Reflected paths
# ---------------------------------------------------------------------------

def fold(v, length):
    """Map positions into ``[0, length]`` by repeated mirror reflection."""
    v = np.mod(v, 2.0 * length)
    return np.where(v > length, 2.0 * length - v, v)


def max_reflected_step(d, drift, domain: DomainRect) -> float:
    """Largest step meeting ``sqrt(2 D dt) <= L/50`` and ``|beta| dt <= L/100``."""
    drift = _drift(drift)
    lmin = min(domain.lx, domain.ly)
    bounds = []
    if d > 0:
        bounds.append((lmin / 50.0) ** 2 / (2.0 * d))
    bmax = max(abs(drift.beta_x), abs(drift.beta_y))
    if bmax > 0:
        bounds.append(lmin / (100.0 * bmax))
    return min(bounds) if bounds else math.inf


def _check_step(d, drift, domain, dt_step):
    limit = max_reflected_step(d, drift, domain)
    if not 0 < dt_step <= limit * (1 + 1e-12):
        raise ValueError(f"dt_step={dt_step!r} too large for the domain; use dt_step <= {limit:.6g}")


def _n_steps(horizon, dt_step):
    return max(1, math.ceil(horizon / dt_step - 1e-9))


def simulate_reflected_path(drift, d, domain: DomainRect, dt_step, horizon, start, seed=None,
                            path_id="reflected"):
    """Euler-Maruyama path folded back into the domain after every step.

    The horizon is split into equal steps no longer than ``dt_step``.
    """
    drift = _drift(drift)
    if not d >= 0:
        raise ValueError("diffusion coefficient must be >= 0")
    _check_step(d, drift, domain, dt_step)
    if not horizon > 0:
        raise ValueError("horizon must be > 0")
    if not (0 <= start[0] <= domain.lx and 0 <= start[1] <= domain.ly):
        raise ValueError("start must lie inside the domain")
    rng = stream(seed)
    steps = _n_steps(horizon, dt_step)
    h = horizon / steps
    sd = math.sqrt(2.0 * d * h)
    x = np.empty(steps + 1)
    y = np.empty(steps + 1)
    x[0], y[0] = start
    for k in range(steps):
        zx, zy = rng.standard_normal(2)
        x[k + 1] = fold(x[k] + drift.beta_x * h + sd * zx, domain.lx)
        y[k + 1] = fold(y[k] + drift.beta_y * h + sd * zy, domain.ly)
    t = np.linspace(0.0, horizon, steps + 1)
    return TrackSeries(path_id, t, x, y)


def _fold_inplace(v, length, scratch):
    np.mod(v, 2.0 * length, out=v)
    np.greater(v, length, out=scratch)
    np.subtract(2.0 * length, v, out=v, where=scratch)


def _reflected_endpoints(x, y, drift, d, domain, horizon, dt_step, rng):
    steps = _n_steps(horizon, dt_step)
    h = horizon / steps
    sd = math.sqrt(2.0 * d * h)
    bx, by = drift.beta_x * h, drift.beta_y * h
    x = np.array(x, dtype=float)
    y = np.array(y, dtype=float)
    z = np.empty((2, x.size))
    mask = np.empty(x.size, dtype=bool)
    for _ in range(steps):
        rng.standard_normal(out=z)
        z *= sd
        x += z[0]
        y += z[1]
        if bx:
            x += bx
        if by:
            y += by
        _fold_inplace(x, domain.lx, mask)
        _fold_inplace(y, domain.ly, mask)
    return x, y


def mc_migration_proportion(a_i: AreaRect, a_f: AreaRect, drift, d, horizon, domain: DomainRect,
                            n_paths, seed, dt_step=None, chunk=50_000):
    """Monte Carlo estimate of a migration proportion and its binomial SE.

    Paths start uniformly in ``a_i`` and evolve as reflected drift-diffusion
    for ``horizon``.  Chunk ``k`` of paths uses stream ``(seed, k)``.
    """
    if n_paths < 1000:
        raise ValueError("n_paths must be >= 1000")
    drift = _drift(drift)
    a_i.check_inside(domain)
    a_f.check_inside(domain)
    if dt_step is None:
        dt_step = max_reflected_step(d, drift, domain)
        dt_step = min(dt_step, horizon)
    else:
        _check_step(d, drift, domain, dt_step)
    hits = 0
    done = 0
    k = 0
    while done < n_paths:
        m = min(chunk, n_paths - done)
        rng = stream(seed, k)
        x = rng.uniform(a_i.x[0], a_i.x[1], size=m)
        y = rng.uniform(a_i.y[0], a_i.y[1], size=m)
        x, y = _reflected_endpoints(x, y, drift, d, domain, horizon, dt_step, rng)
        inside = (x >= a_f.x[0]) & (x <= a_f.x[1]) & (y >= a_f.y[0]) & (y <= a_f.y[1])
        hits += int(inside.sum())
        done += m
        k += 1
    w = hits / n_paths
    return w, math.sqrt(w * (1.0 - w) / n_paths)
