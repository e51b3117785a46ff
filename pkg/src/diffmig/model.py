"""
Observation model for noisy, irregularly sampled drift-diffusion tracks.

A track is a sequence of planar positions ``(x_k, y_k)`` recorded at strictly
increasing times ``t_k``.  Each axis is modelled independently as

    x_k^obs = x_k + eps_k,    x_k - x_{k-1} ~ N(beta * dt_k, 2 * int D(t) dt)

with i.i.d. measurement errors ``eps_k`` described by their cumulants.  The
functions below give the exact joint cumulants of the observed increments and
of the total displacement over a path.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from .exceptions import DataError, NumericalDomainError

__all__ = [
    "TrackObservation",
    "TrackSeries",
    "IncrementSeries",
    "ErrorCumulants",
    "ConstantDiffusion",
    "PiecewiseConstantDiffusion",
    "DriftVector",
    "PathSummary",
    "DeltaXCumulants",
    "extract_increments",
    "summarize",
    "integrate_diffusion",
    "obs_increment_cov",
    "joint_cumulant_obs",
    "deltaX_cumulants",
    "standardize_increments",
]


def _frozen_array(values, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


def _two_diff(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Error-free difference: ``a - b == d + e`` exactly (Knuth's TwoSum)."""
    c = -b
    d = a + c
    z = d - a
    e = (a - (d - z)) + (c - z)
    return d, e


# ---------------------------------------------------------------------------
# Tracks and increments
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TrackObservation:
    """One located fix of one individual."""

    path_id: str
    t: float
    x: float
    y: float

    def __post_init__(self):
        for name in ("t", "x", "y"):
            if not math.isfinite(getattr(self, name)):
                raise DataError(f"{name} must be finite, got {getattr(self, name)!r}")


@dataclass(frozen=True, eq=False)
class TrackSeries:
    """A single path: times and coordinates stored as read-only arrays.

    Times must be strictly increasing; at least two fixes are required.
    """

    path_id: str
    t: np.ndarray
    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        t = _frozen_array(self.t)
        x = _frozen_array(self.x)
        y = _frozen_array(self.y)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        if t.ndim != 1 or t.shape != x.shape or t.shape != y.shape:
            raise DataError("t, x and y must be one-dimensional and of equal length")
        if t.size < 2:
            raise DataError(f"path {self.path_id!r} has {t.size} fixes; at least 2 are required")
        for name, arr in (("t", t), ("x", x), ("y", y)):
            bad = np.flatnonzero(~np.isfinite(arr))
            if bad.size:
                raise DataError(f"non-finite {name} at index {bad[0]}")
        bad = np.flatnonzero(np.diff(t) <= 0)
        if bad.size:
            raise DataError(f"non-increasing time at index {bad[0] + 1}")

    @classmethod
    def from_observations(cls, observations: Sequence[TrackObservation]) -> "TrackSeries":
        if not observations:
            raise DataError("no observations")
        ids = {o.path_id for o in observations}
        if len(ids) != 1:
            raise DataError(f"observations mix several path ids: {sorted(ids)}")
        return cls(
            observations[0].path_id,
            [o.t for o in observations],
            [o.x for o in observations],
            [o.y for o in observations],
        )

    @property
    def observations(self) -> list[TrackObservation]:
        return [
            TrackObservation(self.path_id, float(t), float(x), float(y))
            for t, x, y in zip(self.t, self.x, self.y)
        ]

    def __len__(self) -> int:
        return self.t.size

    def shifted(self, dx: float, dy: float) -> "TrackSeries":
        """Return a copy with ``dx``, ``dy`` subtracted from the coordinates."""
        return TrackSeries(self.path_id, self.t, self.x - dx, self.y - dy)

    def __eq__(self, other):
        if not isinstance(other, TrackSeries):
            return NotImplemented
        return (
            self.path_id == other.path_id
            and np.array_equal(self.t, other.t)
            and np.array_equal(self.x, other.x)
            and np.array_equal(self.y, other.y)
        )

    __hash__ = None


@dataclass(frozen=True, eq=False)
class IncrementSeries:
    """Per-axis increments ``dv_i = v_i - v_{i-1}`` with their intervals ``dt_i``.

    The rounding residuals of both differences are kept so that
    :meth:`total` and :meth:`duration` reproduce ``v_n - v_0`` and
    ``t_n - t_0`` bit for bit.
    """

    axis: str
    dv: np.ndarray
    dt: np.ndarray
    dv_residual: np.ndarray = None
    dt_residual: np.ndarray = None

    def __post_init__(self):
        dv = _frozen_array(self.dv)
        dt = _frozen_array(self.dt)
        if dv.ndim != 1 or dv.shape != dt.shape:
            raise DataError("dv and dt must be one-dimensional and of equal length")
        if np.any(~(dt > 0)):
            i = int(np.flatnonzero(~(dt > 0))[0])
            raise DataError(f"non-positive interval at increment {i}")
        object.__setattr__(self, "dv", dv)
        object.__setattr__(self, "dt", dt)
        for name in ("dv_residual", "dt_residual"):
            r = getattr(self, name)
            r = np.zeros_like(dv) if r is None else _frozen_array(r)
            if r.shape != dv.shape:
                raise DataError(f"{name} has the wrong shape")
            object.__setattr__(self, name, r)

    @property
    def n(self) -> int:
        return self.dv.size

    def __len__(self) -> int:
        return self.dv.size

    def total(self) -> float:
        """Compensated sum of the increments."""
        return math.fsum(np.concatenate([self.dv, self.dv_residual]))

    def duration(self) -> float:
        """Compensated sum of the intervals."""
        return math.fsum(np.concatenate([self.dt, self.dt_residual]))

    def take(self, index) -> "IncrementSeries":
        """Sub-series (or resample) at integer positions ``index``."""
        index = np.asarray(index, dtype=int)
        return IncrementSeries(
            self.axis, self.dv[index], self.dt[index],
            self.dv_residual[index], self.dt_residual[index],
        )


def extract_increments(track: TrackSeries) -> tuple[IncrementSeries, IncrementSeries]:
    """Split a track into x and y increment series.

    Raises
    ------
    DataError
        If the timestamps are not strictly increasing (the message names the
        offending index).
    """
    t = np.asarray(track.t, dtype=float)
    bad = np.flatnonzero(np.diff(t) <= 0)
    if bad.size:
        raise DataError(f"non-increasing time at index {bad[0] + 1}")
    dt, dt_err = _two_diff(t[1:], t[:-1])
    out = []
    for axis in ("x", "y"):
        v = np.asarray(getattr(track, axis), dtype=float)
        dv, dv_err = _two_diff(v[1:], v[:-1])
        out.append(IncrementSeries(axis, dv, dt, dv_err, dt_err))
    return out[0], out[1]


@dataclass(frozen=True)
class PathSummary:
    duration: float
    dX: float
    dY: float
    n: int


def summarize(track: TrackSeries) -> PathSummary:
    ix, iy = extract_increments(track)
    return PathSummary(ix.duration(), ix.total(), iy.total(), ix.n)


# ---------------------------------------------------------------------------
# Parameters
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ErrorCumulants:
    """Cumulants of the i.i.d. measurement error on one axis.

    The first cumulant is zero by construction.  ``higher`` optionally maps
    orders above four to their cumulant values.
    """

    variance: float = 0.0
    k3: float = 0.0
    k4: float = 0.0
    higher: Mapping[int, float] = field(default_factory=dict)

    def __post_init__(self):
        if not self.variance >= 0:
            raise ValueError(f"error variance must be >= 0, got {self.variance!r}")

    def cumulant(self, order: int) -> float:
        if order == 1:
            return 0.0
        if order == 2:
            return self.variance
        if order == 3:
            return self.k3
        if order == 4:
            return self.k4
        try:
            return self.higher[order]
        except KeyError:
            raise ValueError(f"error cumulant of order {order} is not specified") from None


@dataclass(frozen=True)
class ConstantDiffusion:
    d: float

    def __post_init__(self):
        # zero is allowed: it is the deterministic limit used by the simulators
        if not (math.isfinite(self.d) and self.d >= 0):
            raise ValueError(f"diffusion coefficient must be finite and >= 0, got {self.d!r}")

    def cumulative(self, t):
        return self.d * np.asarray(t, dtype=float)


@dataclass(frozen=True)
class PiecewiseConstantDiffusion:
    """``D(t) = values[k]`` on ``[breakpoints[k], breakpoints[k+1])``.

    The first value also applies before the first breakpoint and the last one
    after the final breakpoint.
    """

    breakpoints: tuple
    values: tuple

    def __post_init__(self):
        b = tuple(float(v) for v in self.breakpoints)
        v = tuple(float(v) for v in self.values)
        object.__setattr__(self, "breakpoints", b)
        object.__setattr__(self, "values", v)
        if len(b) == 0 or len(b) != len(v):
            raise ValueError("breakpoints and values must be non-empty and of equal length")
        if any(b1 <= b0 for b0, b1 in zip(b, b[1:])):
            raise ValueError("breakpoints must be strictly increasing")
        if not all(math.isfinite(x) and x > 0 for x in v):
            raise ValueError("diffusion values must be finite and > 0")

    def cumulative(self, t):
        """``int_{breakpoints[0]}^t D(s) ds`` (negative before the first breakpoint)."""
        b = np.asarray(self.breakpoints)
        v = np.asarray(self.values)
        t = np.asarray(t, dtype=float)
        base = np.concatenate([[0.0], np.cumsum(v[:-1] * np.diff(b))])
        k = np.clip(np.searchsorted(b, t, side="right") - 1, 0, None)
        return base[k] + v[k] * (t - b[k])


DiffusionLaw = ConstantDiffusion | PiecewiseConstantDiffusion


def integrate_diffusion(law, t0, t1):
    """Integral of ``D(t)`` over ``[t0, t1]``.

    Works elementwise on arrays of interval bounds.

    >>> integrate_diffusion(ConstantDiffusion(0.5), 0.0, 4.0)
    2.0
    """
    t0 = np.asarray(t0, dtype=float)
    t1 = np.asarray(t1, dtype=float)
    if np.any(t1 < t0):
        raise ValueError("integration bounds must satisfy t1 >= t0")
    if isinstance(law, ConstantDiffusion):
        out = law.d * (t1 - t0)
    else:
        out = law.cumulative(t1) - law.cumulative(t0)
    out = np.where(t1 == t0, 0.0, out)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class DriftVector:
    beta_x: float
    beta_y: float

    def __post_init__(self):
        if not (math.isfinite(self.beta_x) and math.isfinite(self.beta_y)):
            raise ValueError("drift components must be finite")


# ---------------------------------------------------------------------------
# Cumulants of observed increments
# ---------------------------------------------------------------------------

def _interval_bounds(times, t0):
    dt = np.asarray(times, dtype=float)
    ends = t0 + np.cumsum(dt)
    starts = np.concatenate([[t0], ends[:-1]])
    return starts, ends


def obs_increment_cov(i: int, j: int, law, err: ErrorCumulants, times, t0: float = 0.0) -> float:
    """Covariance of the observed increments ``i`` and ``j`` (0-based).

    Diagonal entries are ``2 int D dt + 2 sigma0^2``; neighbours share one
    error term with opposite signs and covary by ``-sigma0^2``; increments two
    or more steps apart are independent.
    """
    n = len(times)
    if not (0 <= i < n and 0 <= j < n):
        raise ValueError(f"increment indices must lie in [0, {n}), got ({i}, {j})")
    if i == j:
        starts, ends = _interval_bounds(times, t0)
        return 2.0 * integrate_diffusion(law, starts[i], ends[i]) + 2.0 * err.variance
    if abs(i - j) == 1:
        return -err.variance
    return 0.0


def joint_cumulant_obs(order: int, i: int, j: int, count_i: int, err: ErrorCumulants) -> float:
    """Joint cumulant of order ``order >= 3`` of observed increments.

    The cumulant takes increment ``i`` ``count_i`` times and increment ``j``
    the remaining ``order - count_i`` times.  Only the measurement error
    contributes above second order.
    """
    if order < 3:
        raise ValueError("order must be >= 3; use obs_increment_cov for second order")
    if not 0 <= count_i <= order:
        raise ValueError(f"count_i must lie in [0, {order}]")
    if i == j:
        return (1 + (-1) ** order) * err.cumulant(order)
    if j == i - 1:
        return (-1) ** count_i * err.cumulant(order)
    if j == i + 1:
        return (-1) ** (order - count_i) * err.cumulant(order)
    return 0.0


class DeltaXCumulants(NamedTuple):
    k1: float
    k2: float
    k3: float
    k4: float


def deltaX_cumulants(law, times, beta: float, err: ErrorCumulants, t0: float = 0.0) -> DeltaXCumulants:
    """First four cumulants of the total observed displacement of a path.

    The displacement telescopes to ``x_n - x_0 + eps_n - eps_0``, so the
    error enters only through the two end points: its odd cumulants cancel
    and its even ones are doubled.
    """
    dt = np.asarray(times, dtype=float)
    if dt.size < 1:
        raise ValueError("at least one interval is required")
    starts, ends = _interval_bounds(dt, t0)
    duration = math.fsum(dt)
    k2 = 2.0 * math.fsum(np.atleast_1d(integrate_diffusion(law, starts, ends))) + 2.0 * err.variance
    return DeltaXCumulants(beta * duration, k2, 0.0, 2.0 * err.k4)


def standardize_increments(
    incs: IncrementSeries,
    beta: float,
    d_eff: float,
    include_error: bool = False,
    sigma2: float = 0.0,
) -> np.ndarray:
    """Centred and scaled increments ``(dv - beta dt) / sqrt(2 D dt [+ 2 sigma0^2])``."""
    if not d_eff > 0:
        raise NumericalDomainError(f"diffusion parameter must be positive, got {d_eff!r}")
    if include_error and not sigma2 >= 0:
        raise ValueError("sigma2 must be >= 0")
    var = 2.0 * d_eff * incs.dt
    if include_error:
        var = var + 2.0 * sigma2
    return (incs.dv - beta * incs.dt) / np.sqrt(var)


def tracks_from_columns(path_ids: Iterable[str], t, x, y) -> list[TrackSeries]:
    """Group flat columns by path id into tracks sorted by time."""
    path_ids = np.asarray(list(path_ids), dtype=object)
    t, x, y = (np.asarray(a, dtype=float) for a in (t, x, y))
    out = []
    for pid in dict.fromkeys(path_ids):
        sel = path_ids == pid
        order = np.argsort(t[sel], kind="stable")
        out.append(TrackSeries(str(pid), t[sel][order], x[sel][order], y[sel][order]))
    return out
