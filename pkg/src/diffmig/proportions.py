"""
Migration proportions between rectangular areas of a reflecting habitat.

The proportion ``w_if`` is the probability that a path started uniformly in
area ``A_i`` lies in area ``A_f`` after the horizon.  The kernel factorises
over the axes, so ``w_if = w^x_if * w^y_if`` with

    w^x_if = nx_if(A_i^x, A_f^x) / nx_if(A_i^x, [0, L_x]).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import NumericalDomainError, NumericalError
from .greens import DomainRect, ImageSumControl, nx_if

__all__ = [
    "AreaRect",
    "MotionParams",
    "ProportionMatrix",
    "proportion_axis",
    "migration_proportion",
    "proportion_matrix",
    "grid_partition",
]

_CLAMP_TOL = 1e-10


@dataclass(frozen=True)
class AreaRect:
    """Named rectangle ``[x[0], x[1]] x [y[0], y[1]]`` in domain coordinates."""

    name: str
    x: tuple
    y: tuple

    def __post_init__(self):
        x = tuple(float(v) for v in self.x)
        y = tuple(float(v) for v in self.y)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        if len(x) != 2 or len(y) != 2 or not (x[0] < x[1] and y[0] < y[1]):
            raise ValueError(f"area {self.name!r}: need lower < upper on both axes")
        if x[0] < 0 or y[0] < 0:
            raise ValueError(f"area {self.name!r}: lower bounds must be >= 0")

    @property
    def area(self) -> float:
        return (self.x[1] - self.x[0]) * (self.y[1] - self.y[0])

    def check_inside(self, domain: DomainRect):
        if self.x[1] > domain.lx or self.y[1] > domain.ly:
            raise ValueError(f"area {self.name!r} extends outside the domain")

    @classmethod
    def whole(cls, domain: DomainRect, name: str = "domain") -> "AreaRect":
        return cls(name, (0.0, domain.lx), (0.0, domain.ly))


@dataclass(frozen=True)
class MotionParams:
    """Drift (length/day) and diffusion (length^2/day) per axis."""

    beta_x: float
    beta_y: float
    d_x: float
    d_y: float

    def __post_init__(self):
        for name in ("beta_x", "beta_y", "d_x", "d_y"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")


def proportion_axis(a_i, a_f, beta_dt, d_int, length, ctrl=None):
    """One-axis factor of the migration proportion.

    >>> proportion_axis((0.2, 0.4), (0.0, 1.0), 0.1, 0.05, 1.0)
    1.0
    """
    if not d_int > 0:
        raise NumericalDomainError("diffusion parameter must be positive")
    if (a_f[0], a_f[1]) == (0.0, length):
        # the ratio of two identical masses, kept exact
        return 1.0
    num = nx_if(a_i, a_f, beta_dt, d_int, length, ctrl)
    den = nx_if(a_i, (0.0, length), beta_dt, d_int, length, ctrl)
    return _clamp(num / den)


def _clamp(w):
    if -_CLAMP_TOL <= w < 0:
        return 0.0
    if 1 < w <= 1 + _CLAMP_TOL:
        return 1.0
    if not 0 <= w <= 1:
        raise NumericalError(f"proportion {w!r} outside [0, 1]")
    return w


def migration_proportion(a_i: AreaRect, a_f: AreaRect, params: MotionParams, horizon: float,
                         domain: DomainRect, ctrl: ImageSumControl | None = None) -> float:
    """Proportion of paths started uniformly in ``a_i`` found in ``a_f`` after ``horizon``."""
    if not horizon > 0:
        raise ValueError("horizon must be > 0")
    if not (params.d_x > 0 and params.d_y > 0):
        raise NumericalDomainError("diffusion parameter must be positive")
    a_i.check_inside(domain)
    a_f.check_inside(domain)
    wx = proportion_axis(a_i.x, a_f.x, params.beta_x * horizon, params.d_x * horizon, domain.lx, ctrl)
    wy = proportion_axis(a_i.y, a_f.y, params.beta_y * horizon, params.d_y * horizon, domain.ly, ctrl)
    return wx * wy


@dataclass(frozen=True, eq=False)
class ProportionMatrix:
    initial: tuple
    final: tuple
    entries: np.ndarray
    horizon: float
    params: MotionParams
    is_partition: bool = False
    meta: dict = field(default_factory=dict)

    @property
    def row_sums(self) -> np.ndarray:
        return self.entries.sum(axis=1)

    def to_dict(self) -> dict:
        return {
            "initial": list(self.initial),
            "final": list(self.final),
            "entries": self.entries.tolist(),
            "row_sums": self.row_sums.tolist(),
            "horizon": self.horizon,
            "params": vars(self.params).copy(),
            "final_is_partition": self.is_partition,
        }


def _intervals_overlap(a, b):
    return min(a[1], b[1]) > max(a[0], b[0])


def _check_partition(areas, domain):
    for k, a in enumerate(areas):
        for b in areas[k + 1:]:
            if _intervals_overlap(a.x, b.x) and _intervals_overlap(a.y, b.y):
                raise ValueError(f"areas {a.name!r} and {b.name!r} overlap")
    total = math.fsum(a.area for a in areas)
    return abs(total - domain.area) <= 1e-12 * domain.area


def proportion_matrix(initial, final, params: MotionParams, horizon: float, domain: DomainRect,
                      ctrl: ImageSumControl | None = None, check_partition: bool = False
                      ) -> ProportionMatrix:
    """Tabulate :func:`migration_proportion` over all (initial, final) pairs.

    With ``check_partition`` the final areas must be pairwise disjoint; if
    they also cover the domain, every row is required to sum to one within
    ``1e-10``.
    """
    initial = list(initial)
    final = list(final)
    for a in initial + final:
        a.check_inside(domain)
    tiles = _check_partition(final, domain) if check_partition else False
    # the per-axis factors only depend on the axis intervals; cache them
    cache = {}

    def axis(ai, af, beta, d, length):
        key = (ai, af, beta, d, length)
        if key not in cache:
            cache[key] = proportion_axis(ai, af, beta * horizon, d * horizon, length, ctrl)
        return cache[key]

    if not horizon > 0:
        raise ValueError("horizon must be > 0")
    if not (params.d_x > 0 and params.d_y > 0):
        raise NumericalDomainError("diffusion parameter must be positive")
    w = np.empty((len(initial), len(final)))
    for r, ai in enumerate(initial):
        for c, af in enumerate(final):
            w[r, c] = (axis(ai.x, af.x, params.beta_x, params.d_x, domain.lx)
                       * axis(ai.y, af.y, params.beta_y, params.d_y, domain.ly))
    out = ProportionMatrix(tuple(a.name for a in initial), tuple(a.name for a in final),
                           w, horizon, params, tiles)
    if tiles:
        worst = float(np.max(np.abs(out.row_sums - 1.0))) if len(initial) else 0.0
        if worst > 1e-10:
            raise NumericalError(f"row sums deviate from 1 by {worst:.3g}")
    return out


def grid_partition(domain: DomainRect, x_cuts, y_cuts, prefix: str = "A") -> list[AreaRect]:
    """Partition the domain into the grid cells defined by interior cut points."""
    xs = [0.0, *sorted(float(v) for v in x_cuts), domain.lx]
    ys = [0.0, *sorted(float(v) for v in y_cuts), domain.ly]
    return [
        AreaRect(f"{prefix}{i}{j}", (xs[i], xs[i + 1]), (ys[j], ys[j + 1]))
        for i in range(len(xs) - 1)
        for j in range(len(ys) - 1)
    ]
