"""
Effective (per path) and collective (per ensemble) drift and diffusion
estimates, percentile bootstrap intervals and the effective-versus-collective
model comparison.

For one axis of one path with increments ``dv_i`` over intervals ``dt_i``:

* drift       ``beta = sum(dv) / sum(dt)``
* diffusion   ``D = [sum c_i^2 + 2 sum c_i c_{i+1}] / (2 sum dt)`` with
  ``c_i = dv_i - beta dt_i``.

The diffusion estimate has expectation ``D + sigma0^2 / sum(dt)`` when the
fixes carry i.i.d. errors of variance ``sigma0^2``; :func:`correct_for_error`
removes that term.  Collective parameters are duration-weighted means of the
effective ones.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .model import IncrementSeries, TrackSeries, extract_increments, standardize_increments
from .proportions import MotionParams
from .simulate import stream

__all__ = [
    "IntervalGroup",
    "EffectiveParams",
    "CollectiveParams",
    "BootstrapCI",
    "ComparisonRow",
    "ModelComparison",
    "group_intervals",
    "estimate_beta_eff",
    "estimate_d_eff",
    "correct_for_error",
    "fit_effective",
    "estimate_collective",
    "bootstrap_effective",
    "bootstrap_track",
    "bootstrap_collective",
    "compare_models",
    "qq_pairs",
]

AXES = ("x", "y")


# ---------------------------------------------------------------------------
# Interval groups
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class IntervalGroup:
    """Increments sharing (approximately) the same sampling interval."""

    dt: float
    values: np.ndarray
    index: np.ndarray
    weight: float

    @property
    def n(self) -> int:
        return self.index.size


def group_intervals(incs: IncrementSeries, rel_tol: float = 0.0) -> list[IntervalGroup]:
    """Bin increments by interval length.

    Sorted intervals are chained into one group while consecutive values
    satisfy ``|a - b| <= rel_tol * max(a, b)``; ``rel_tol = 0`` groups exact
    repeats only.  Each group is represented by its mean interval, and groups
    are returned in increasing order of that representative.
    """
    if not rel_tol >= 0:
        raise ValueError("rel_tol must be >= 0")
    n = incs.n
    if n == 0:
        return []
    order = np.argsort(incs.dt, kind="stable")
    dt = incs.dt[order]
    gaps = np.diff(dt) > rel_tol * np.maximum(dt[1:], dt[:-1])
    cuts = np.flatnonzero(gaps) + 1
    groups = []
    for members in np.split(order, cuts):
        members = np.sort(members)
        groups.append(IntervalGroup(
            dt=float(np.mean(incs.dt[members])),
            values=incs.dv[members],
            index=members,
            weight=members.size / n,
        ))
    return groups


# ---------------------------------------------------------------------------
# Effective parameters
# ---------------------------------------------------------------------------

def estimate_beta_eff(incs: IncrementSeries, groups: Sequence[IntervalGroup] | None = None) -> float:
    """Effective drift of one axis.

    With ``groups=None`` every increment is its own group and the result is
    ``(v_n - v_0) / (t_n - t_0)`` exactly.  Otherwise it is the sum of the
    group mean increments over the sum of the group intervals.
    """
    if incs.n < 1:
        raise ValueError("at least one increment is required")
    if groups is None:
        return incs.total() / incs.duration()
    return math.fsum(float(np.mean(g.values)) for g in groups) / math.fsum(g.dt for g in groups)


def _band_terms(c: np.ndarray) -> np.ndarray:
    """Per-increment contributions ``c_i^2 + 2 c_i c_{i+1}`` of the banded sum."""
    q = c * c
    q[:-1] += 2.0 * c[:-1] * c[1:]
    return q


def _band_dof(dt: np.ndarray, duration: float) -> float:
    dbd = math.fsum(dt * dt) + 2.0 * math.fsum(dt[:-1] * dt[1:])
    return duration - dbd / duration


def estimate_d_eff(incs: IncrementSeries, beta: float, band: bool = True,
                   finite_sample: bool = False) -> float:
    """Effective diffusion coefficient of one axis.

    Parameters
    ----------
    incs : IncrementSeries
    beta : float
        Drift used to centre the increments, ``c_i = dv_i - beta dt_i``.
    band : bool
        Sum ``c_i c_j`` over ``|i - j| <= 1`` only (default).  With
        ``band=False`` the full double sum ``(sum c_i)^2`` is used; note that
        it vanishes identically when ``beta`` is the path's own ungrouped
        drift estimate.
    finite_sample : bool
        Replace ``sum dt`` in the denominator by ``sum dt - d'Bd / sum dt``
        (``B`` the band pattern), which removes the ``O(1/n)`` bias caused by
        centring on the path's own drift estimate.  Banded mode only.

    Returns
    -------
    float
        May be zero or negative for short noisy paths.
    """
    if incs.n < 2:
        raise ValueError("at least two increments are required")
    c = incs.dv - beta * incs.dt
    duration = incs.duration()
    if band:
        q = math.fsum(_band_terms(c))
        if finite_sample:
            return q / (2.0 * _band_dof(incs.dt, duration))
    else:
        if finite_sample:
            raise ValueError("finite_sample correction is only defined for the banded estimator")
        q = math.fsum(c) ** 2
    return q / (2.0 * duration)


def correct_for_error(d_eff: float, sigma2: float, duration: float) -> float:
    """Remove the measurement-error contribution ``sigma0^2 / duration``."""
    if not duration > 0:
        raise ValueError("duration must be > 0")
    if not sigma2 >= 0:
        raise ValueError("sigma2 must be >= 0")
    return d_eff - sigma2 / duration


@dataclass(frozen=True)
class EffectiveParams:
    """Effective drift and diffusion of one path."""

    path_id: str
    n: int
    duration: float
    beta_x: float
    beta_y: float
    d_x: float
    d_y: float
    error_corrected: bool = False

    def __post_init__(self):
        if not self.duration > 0:
            raise ValueError("duration must be > 0")
        if self.nonpositive_diffusion:
            warnings.warn(
                f"path {self.path_id!r}: non-positive diffusion estimate "
                f"(d_x={self.d_x:.4g}, d_y={self.d_y:.4g})",
                RuntimeWarning, stacklevel=3,
            )

    @property
    def nonpositive_diffusion(self) -> bool:
        return not (self.d_x > 0 and self.d_y > 0)

    def beta(self, axis: str) -> float:
        return getattr(self, f"beta_{axis}")

    def d(self, axis: str) -> float:
        return getattr(self, f"d_{axis}")

    def as_motion(self) -> MotionParams:
        return MotionParams(self.beta_x, self.beta_y, self.d_x, self.d_y)


def fit_effective(track: TrackSeries, sigma2: float = 0.0, band: bool = True,
                  finite_sample: bool = False, rel_tol: float | None = None) -> EffectiveParams:
    """Effective parameters of a track on both axes.

    If ``sigma2 > 0`` the diffusion estimates are corrected for the error
    variance.  ``rel_tol`` switches the drift to the grouped estimator.
    """
    incs = extract_increments(track)
    est = {}
    for axis, inc in zip(AXES, incs):
        groups = None if rel_tol is None else group_intervals(inc, rel_tol)
        beta = estimate_beta_eff(inc, groups)
        d = estimate_d_eff(inc, beta, band, finite_sample)
        if sigma2 > 0:
            d = correct_for_error(d, sigma2, inc.duration())
        est[axis] = (beta, d)
    return EffectiveParams(
        track.path_id, incs[0].n, incs[0].duration(),
        est["x"][0], est["y"][0], est["x"][1], est["y"][1],
        error_corrected=sigma2 > 0,
    )


@dataclass(frozen=True)
class CollectiveParams:
    beta_x: float
    beta_y: float
    d_x: float
    d_y: float
    duration: float
    n_paths: int

    def beta(self, axis: str) -> float:
        return getattr(self, f"beta_{axis}")

    def d(self, axis: str) -> float:
        return getattr(self, f"d_{axis}")

    def as_motion(self) -> MotionParams:
        return MotionParams(self.beta_x, self.beta_y, self.d_x, self.d_y)


def estimate_collective(paths: Sequence[EffectiveParams]) -> CollectiveParams:
    """Duration-weighted ensemble means of effective parameters.

    >>> a = EffectiveParams("a", 10, 1.0, 1.0, 0.0, 1.0, 1.0)
    >>> b = EffectiveParams("b", 10, 3.0, 3.0, 0.0, 1.0, 1.0)
    >>> estimate_collective([a, b]).beta_x
    2.5
    """
    paths = list(paths)
    if not paths:
        raise ValueError("the ensemble is empty")
    w = np.array([p.duration for p in paths])
    total = math.fsum(w)

    def mean(attr):
        return math.fsum(w * np.array([getattr(p, attr) for p in paths])) / total

    return CollectiveParams(mean("beta_x"), mean("beta_y"), mean("d_x"), mean("d_y"),
                            total, len(paths))


# ---------------------------------------------------------------------------
# Bootstrap
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class BootstrapCI:
    """Percentile interval from ``B`` bootstrap replicates."""

    level: float
    lower: float
    upper: float
    B: int
    seed: object
    estimate: float
    replicates: np.ndarray = field(repr=False)

    def __post_init__(self):
        if not 0 < self.level < 1:
            raise ValueError("level must lie in (0, 1)")

    @property
    def se(self) -> float:
        return float(np.std(self.replicates, ddof=1))

    def contains(self, value: float) -> bool:
        return self.lower <= value <= self.upper

    def to_dict(self) -> dict:
        seed = list(self.seed) if isinstance(self.seed, tuple) else self.seed
        return {"estimate": self.estimate, "lower": self.lower, "upper": self.upper,
                "level": self.level, "B": self.B, "seed": seed, "se": self.se}


def _percentile_ci(reps, level, seed, estimate):
    lo, hi = np.quantile(reps, [(1 - level) / 2, (1 + level) / 2])
    return BootstrapCI(level, float(lo), float(hi), reps.size, seed, float(estimate), reps)


def _strata(dt: np.ndarray, groups, n_strata: int) -> list[np.ndarray]:
    if groups is not None:
        return [np.asarray(g.index if isinstance(g, IntervalGroup) else g, dtype=int) for g in groups]
    n = dt.size
    k = max(1, min(n_strata, n // 10))
    return [np.sort(s) for s in np.array_split(np.argsort(dt, kind="stable"), k)]


class _Resampler:
    """Draws within-stratum resamples; member positions are fixed per path."""

    def __init__(self, strata):
        self.members = np.concatenate(strata)
        sizes = np.array([s.size for s in strata])
        self.starts = np.repeat(np.concatenate([[0], np.cumsum(sizes)[:-1]]), sizes)
        self.sizes = np.repeat(sizes, sizes)

    def draw(self, rng) -> np.ndarray:
        u = rng.random(self.members.size)
        pos = self.starts + np.minimum((u * self.sizes).astype(int), self.sizes - 1)
        return self.members[pos]


def _check_boot(B, level):
    if B < 100:
        raise ValueError("B must be >= 100")
    if not 0 < level < 1:
        raise ValueError("level must lie in (0, 1)")


@dataclass(frozen=True, eq=False)
class _AxisData:
    dv: np.ndarray
    dt: np.ndarray
    q: np.ndarray


def _axis_data(inc: IncrementSeries, beta: float) -> _AxisData:
    return _AxisData(inc.dv, inc.dt, _band_terms(inc.dv - beta * inc.dt))


def bootstrap_track(track: TrackSeries, B: int = 1000, level: float = 0.9, seed: int = 0,
                    sigma2: float = 0.0, groups=None, n_strata: int = 10) -> dict:
    """Bootstrap intervals for the effective parameters of both axes.

    Replicate ``r`` uses stream ``(seed, r)``.  Increment positions are
    resampled with replacement inside strata of similar interval length
    (``groups`` if given, else ``n_strata`` quantile bins of ``dt``), and the
    same positions are used on both axes.  Each resampled position carries
    its increment, its interval and its banded lag product, so the
    diffusion replicate keeps the neighbour covariance of the original
    series.

    Returns
    -------
    dict
        ``{"beta_x", "d_x", "beta_y", "d_y"}`` -> :class:`BootstrapCI`.
    """
    _check_boot(B, level)
    fit = fit_effective(track, sigma2)
    incs = extract_increments(track)
    if incs[0].n < 2:
        raise ValueError("at least two increments are required")
    data = {ax: _axis_data(inc, fit.beta(ax)) for ax, inc in zip(AXES, incs)}
    sampler = _Resampler(_strata(incs[0].dt, groups, n_strata))
    reps = np.empty((4, B))
    for r in range(B):
        idx = sampler.draw(stream(seed, r))
        dur = incs[0].dt[idx].sum()
        for a, ax in enumerate(AXES):
            d = data[ax]
            reps[2 * a, r] = d.dv[idx].sum() / dur
            reps[2 * a + 1, r] = d.q[idx].sum() / (2.0 * dur) - sigma2 / dur
    out = {}
    for a, ax in enumerate(AXES):
        out[f"beta_{ax}"] = _percentile_ci(reps[2 * a], level, seed, fit.beta(ax))
        out[f"d_{ax}"] = _percentile_ci(reps[2 * a + 1], level, seed, fit.d(ax))
    return out


def bootstrap_effective(incs: IncrementSeries, B: int = 1000, level: float = 0.9, seed: int = 0,
                        groups=None, n_strata: int = 10) -> dict:
    """Bootstrap intervals for the drift and diffusion of a single axis.

    See :func:`bootstrap_track` for the resampling scheme.

    Returns
    -------
    dict
        ``{"beta": BootstrapCI, "d": BootstrapCI}``
    """
    _check_boot(B, level)
    if incs.n < 2:
        raise ValueError("at least two increments are required")
    beta = estimate_beta_eff(incs)
    d_hat = estimate_d_eff(incs, beta)
    data = _axis_data(incs, beta)
    sampler = _Resampler(_strata(incs.dt, groups, n_strata))
    reps = np.empty((2, B))
    for r in range(B):
        idx = sampler.draw(stream(seed, r))
        dur = data.dt[idx].sum()
        reps[0, r] = data.dv[idx].sum() / dur
        reps[1, r] = data.q[idx].sum() / (2.0 * dur)
    return {"beta": _percentile_ci(reps[0], level, seed, beta),
            "d": _percentile_ci(reps[1], level, seed, d_hat)}


def bootstrap_collective(tracks: Sequence[TrackSeries], B: int = 1000, level: float = 0.9,
                         seed: int = 0, sigma2: float = 0.0, n_strata: int = 10) -> dict:
    """Two-stage bootstrap of the collective parameters.

    Each replicate draws paths with replacement and then resamples increments
    within every drawn path as in :func:`bootstrap_track`.

    Returns
    -------
    dict
        ``{"beta_x", "d_x", "beta_y", "d_y"}`` -> :class:`BootstrapCI`.
    """
    _check_boot(B, level)
    tracks = list(tracks)
    if len(tracks) < 2:
        raise ValueError("collective bootstrap needs at least two paths; "
                         "use bootstrap_effective for a single path")
    fits = [fit_effective(tr, sigma2) for tr in tracks]
    point = estimate_collective(fits)
    per_path = []
    for tr, fit in zip(tracks, fits):
        incs = extract_increments(tr)
        per_path.append((
            incs[0].dt,
            {ax: _axis_data(inc, fit.beta(ax)) for ax, inc in zip(AXES, incs)},
            _Resampler(_strata(incs[0].dt, None, n_strata)),
        ))
    m = len(tracks)
    reps = np.empty((4, B))
    for r in range(B):
        rng = stream(seed, r)
        chosen = rng.integers(0, m, size=m)
        sums = np.zeros(5)  # duration, then sum of beta*T and D*T per axis
        for g in chosen:
            dt, data, sampler = per_path[g]
            idx = sampler.draw(rng)
            dur = dt[idx].sum()
            sums[0] += dur
            for a, ax in enumerate(AXES):
                d = data[ax]
                sums[1 + 2 * a] += d.dv[idx].sum()
                sums[2 + 2 * a] += d.q[idx].sum() / 2.0 - sigma2
        reps[:, r] = sums[1:] / sums[0]
    out = {}
    for a, ax in enumerate(AXES):
        out[f"beta_{ax}"] = _percentile_ci(reps[2 * a], level, seed, point.beta(ax))
        out[f"d_{ax}"] = _percentile_ci(reps[2 * a + 1], level, seed, point.d(ax))
    return out


# ---------------------------------------------------------------------------
# Model comparison
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ComparisonRow:
    path_id: str
    parameter: str
    effective: float
    collective: float
    se: float
    z: float
    p: float


@dataclass(frozen=True, eq=False)
class ModelComparison:
    rows: list
    qq: dict = field(default_factory=dict)

    def fraction_significant(self, alpha: float = 0.05, parameter: str | None = None) -> float:
        rows = [r for r in self.rows if parameter is None or r.parameter == parameter]
        return sum(r.p < alpha for r in rows) / len(rows)


def qq_pairs(a, b):
    """Matched quantiles of two samples at probabilities ``k / (m + 1)``.

    ``m`` is the smaller sample size, so a sample compared with itself gives
    its sorted values on both sides.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    m = min(a.size, b.size)
    p = np.arange(1, m + 1) / (m + 1)
    return (np.quantile(a, p, method="weibull"), np.quantile(b, p, method="weibull"))


def _two_sided_p(z):
    return math.erfc(abs(z) / math.sqrt(2.0))


def compare_models(paths: Sequence[EffectiveParams], collective: CollectiveParams,
                   boot: Sequence[dict], increments=None, include_error: bool = False,
                   sigma2: float = 0.0) -> ModelComparison:
    """Test each path's effective parameters against the collective ones.

    ``z = (effective - collective) / SE`` with ``SE`` the bootstrap standard
    error of the effective estimate and a two-sided normal p-value.  If the
    per-path ``increments`` (pairs of x/y :class:`IncrementSeries`) are
    given, the result also holds qq pairs per axis: pooled standardized
    increments under the per-path parameters against the same increments
    standardized with the collective parameters.
    """
    paths = list(paths)
    boot = list(boot)
    if len(paths) < 2:
        raise ValueError("model comparison needs at least two paths")
    if len(boot) != len(paths) or any(b is None for b in boot):
        raise ValueError("bootstrap replicates are required for every path")
    rows = []
    for p, b in zip(paths, boot):
        for name in ("beta_x", "beta_y", "d_x", "d_y"):
            if name not in b:
                raise ValueError(f"missing bootstrap replicates for {name} of path {p.path_id!r}")
            eff = getattr(p, name)
            col = getattr(collective, name)
            se = b[name].se
            if se > 0:
                z = (eff - col) / se
            else:
                z = 0.0 if eff == col else math.copysign(math.inf, eff - col)
            rows.append(ComparisonRow(p.path_id, name, eff, col, se, z, _two_sided_p(z)))
    qq = {}
    if increments is not None:
        increments = list(increments)
        for a, ax in enumerate(AXES):
            u_eff, u_col = [], []
            for p, incs in zip(paths, increments):
                inc = incs[a]
                u_eff.append(standardize_increments(inc, p.beta(ax), p.d(ax), include_error, sigma2))
                u_col.append(standardize_increments(inc, collective.beta(ax), collective.d(ax),
                                                    include_error, sigma2))
            qq[ax] = qq_pairs(np.concatenate(u_eff), np.concatenate(u_col))
    return ModelComparison(rows, qq)


def with_error_correction(p: EffectiveParams, sigma2: float) -> EffectiveParams:
    """Effective parameters with the error variance removed from both axes."""
    if p.error_corrected or sigma2 == 0:
        return p
    return replace(p, d_x=correct_for_error(p.d_x, sigma2, p.duration),
                   d_y=correct_for_error(p.d_y, sigma2, p.duration), error_corrected=True)
