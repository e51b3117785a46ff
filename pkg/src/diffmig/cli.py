"""Command line interface: ``diffmig <command> --config FILE [--data FILE] --out DIR``.

Commands
--------
simulate     write synthetic tracks (``tracks.csv``)
estimate     per-path and collective fits with bootstrap intervals
             (``report.json``, ``params.csv``, ``qq.csv``)
proportions  migration proportion matrices (``proportions.csv``, ``proportions.json``)
validate     run the oracle cross-checks (``validation.json``)
standardize  standardized increments and qq pairs (``standardized.csv``, ``qq.csv``)

Exit status: 0 success, 1 usage or configuration error, 2 data error,
3 numerical failure, 4 validation failure.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import sys
import warnings
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .dataio import ingest_tracks, write_tracks
from .estimate import (
    bootstrap_collective,
    bootstrap_track,
    compare_models,
    estimate_collective,
    fit_effective,
    qq_pairs,
)
from .exceptions import DataError, NumericalError
from .greens import DomainRect, ImageSumControl
from .model import ConstantDiffusion, DriftVector, extract_increments, standardize_increments
from .proportions import AreaRect, MotionParams, proportion_matrix
from .simulate import (
    ExponentialIntervals,
    FixedIntervals,
    GaussianNoise,
    LaplaceNoise,
    UniformIntervals,
    UniformNoise,
    simulate_free_paths,
)
from .validation import ValidationOptions, run_validation

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERICAL, EXIT_VALIDATION = 0, 1, 2, 3, 4
AXES = ("x", "y")


class ConfigError(ValueError):
    pass


class UsageError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------

def _take(obj, where, spec):
    """Check ``obj`` is a mapping with keys drawn from ``spec`` and fill defaults."""
    if not isinstance(obj, dict):
        raise ConfigError(f"{where}: expected an object")
    unknown = sorted(set(obj) - set(spec))
    if unknown:
        raise ConfigError(f"{where}: unknown key(s) {', '.join(unknown)}")
    out = {}
    for key, default in spec.items():
        if key in obj:
            out[key] = obj[key]
        elif default is _REQUIRED:
            raise ConfigError(f"{where}: missing key {key!r}")
        else:
            out[key] = default
    return out


_REQUIRED = object()


def _num(v, where, lo=None, strict=False, allow_none=False):
    if v is None and allow_none:
        return None
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ConfigError(f"{where}: expected a finite number")
    v = float(v)
    if lo is not None and (v <= lo if strict else v < lo):
        raise ConfigError(f"{where}: must be {'>' if strict else '>='} {lo}")
    return v


def _int(v, where, lo):
    if isinstance(v, bool) or not isinstance(v, int) or v < lo:
        raise ConfigError(f"{where}: expected an integer >= {lo}")
    return v


def _bool(v, where):
    if not isinstance(v, bool):
        raise ConfigError(f"{where}: expected true or false")
    return v


def _pair(v, where):
    if not (isinstance(v, (list, tuple)) and len(v) == 2):
        raise ConfigError(f"{where}: expected [lower, upper]")
    return (_num(v[0], where), _num(v[1], where))


@dataclass(frozen=True)
class SimulateConfig:
    n_paths: int = 19
    n: int = 200
    beta: tuple = (0.0, 0.0)
    d: float = 1.0
    intervals: dict = field(default_factory=lambda: {"kind": "exponential", "mean": 1.0})
    noise: dict = field(default_factory=lambda: {"kind": "none"})
    x0: tuple = (0.0, 0.0)


@dataclass(frozen=True)
class RunConfig:
    """Parsed and validated run configuration.

    ``to_dict`` gives the fully resolved form that reports echo; parsing that
    echo again yields an equal config.
    """

    domain: DomainRect | None = None
    offset: tuple = (0.0, 0.0)
    areas: tuple = ()
    final_areas: tuple | None = None
    horizon: float | None = None
    error_variance: float = 0.0
    replicates: int = 1000
    level: float = 0.95
    seed: int = 0
    tail_tol: float = 1e-12
    rel_tol: float | None = None
    project_lonlat: bool = False
    use_collective: bool = True
    include_error: bool = False
    params: MotionParams | None = None
    simulate: SimulateConfig = field(default_factory=SimulateConfig)
    validate: ValidationOptions = field(default_factory=ValidationOptions)

    def to_dict(self) -> dict:
        ox, oy = self.offset

        def area(a):
            return {"name": a.name, "x": [a.x[0] + ox, a.x[1] + ox], "y": [a.y[0] + oy, a.y[1] + oy]}

        return {
            "domain": None if self.domain is None else {
                "lx": self.domain.lx, "ly": self.domain.ly,
                "x0": self.offset[0], "y0": self.offset[1]},
            "areas": [area(a) for a in self.areas],
            "final_areas": None if self.final_areas is None else [area(a) for a in self.final_areas],
            "horizon": self.horizon,
            "error_variance": self.error_variance,
            "bootstrap": {"replicates": self.replicates, "level": self.level},
            "seed": self.seed,
            "tail_tol": self.tail_tol,
            "rel_tol": self.rel_tol,
            "project_lonlat": self.project_lonlat,
            "use_collective": self.use_collective,
            "include_error": self.include_error,
            "params": None if self.params is None else asdict(self.params),
            "simulate": {**asdict(self.simulate), "beta": list(self.simulate.beta),
                         "x0": list(self.simulate.x0)},
            "validate": asdict(self.validate),
        }


_SIM_KEYS = {"n_paths": 19, "n": 200, "beta": [0.0, 0.0], "d": 1.0,
             "intervals": {"kind": "exponential", "mean": 1.0}, "noise": {"kind": "none"},
             "x0": [0.0, 0.0]}


def _interval_dist(spec):
    where = "simulate.intervals"
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ConfigError(f"{where}: expected an object with 'kind'")
    kind = spec["kind"]
    try:
        if kind == "exponential":
            s = _take(spec, where, {"kind": _REQUIRED, "mean": _REQUIRED})
            return ExponentialIntervals(_num(s["mean"], where + ".mean"))
        if kind == "uniform":
            s = _take(spec, where, {"kind": _REQUIRED, "lo": _REQUIRED, "hi": _REQUIRED})
            return UniformIntervals(_num(s["lo"], where + ".lo"), _num(s["hi"], where + ".hi"))
        if kind == "fixed":
            s = _take(spec, where, {"kind": _REQUIRED, "values": _REQUIRED, "weights": None})
            w = None if s["weights"] is None else tuple(s["weights"])
            return FixedIntervals(tuple(s["values"]), w)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"{where}: {exc}") from None
    raise ConfigError(f"{where}: unknown kind {kind!r}")


def _noise_model(spec):
    where = "simulate.noise"
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ConfigError(f"{where}: expected an object with 'kind'")
    kinds = {"gaussian": (GaussianNoise, "sigma"), "uniform": (UniformNoise, "half_width"),
             "laplace": (LaplaceNoise, "scale")}
    kind = spec["kind"]
    if kind == "none":
        _take(spec, where, {"kind": _REQUIRED})
        return None
    if kind not in kinds:
        raise ConfigError(f"{where}: unknown kind {kind!r}")
    cls, key = kinds[kind]
    s = _take(spec, where, {"kind": _REQUIRED, key: _REQUIRED})
    return cls(_num(s[key], f"{where}.{key}", lo=0.0))


def _parse_areas(items, where, domain, offset):
    if not isinstance(items, list):
        raise ConfigError(f"{where}: expected a list of areas")
    areas = []
    for k, item in enumerate(items):
        s = _take(item, f"{where}[{k}]", {"name": _REQUIRED, "x": _REQUIRED, "y": _REQUIRED})
        if not isinstance(s["name"], str) or not s["name"]:
            raise ConfigError(f"{where}[{k}].name: expected a non-empty string")
        x = _pair(s["x"], f"{where}[{k}].x")
        y = _pair(s["y"], f"{where}[{k}].y")
        try:
            # areas are given in data coordinates; the domain starts at the offset
            a = AreaRect(s["name"], (x[0] - offset[0], x[1] - offset[0]),
                         (y[0] - offset[1], y[1] - offset[1]))
            if domain is not None:
                a.check_inside(domain)
        except ValueError as exc:
            raise ConfigError(f"{where}[{k}]: {exc}") from None
        areas.append(a)
    names = [a.name for a in areas]
    if len(set(names)) != len(names):
        raise ConfigError(f"{where}: area names must be unique")
    return tuple(areas)


def parse_config(raw: dict) -> RunConfig:
    """Validate a decoded JSON configuration; unknown keys are rejected."""
    top = _take(raw, "config", {
        "domain": None, "areas": [], "final_areas": None, "horizon": None,
        "error_variance": 0.0, "bootstrap": {}, "seed": 0, "tail_tol": 1e-12,
        "rel_tol": None, "project_lonlat": False, "use_collective": True,
        "include_error": False, "params": None, "simulate": {}, "validate": {},
    })
    domain, offset = None, (0.0, 0.0)
    if top["domain"] is not None:
        d = _take(top["domain"], "domain", {"lx": _REQUIRED, "ly": _REQUIRED, "x0": 0.0, "y0": 0.0})
        domain = DomainRect(_num(d["lx"], "domain.lx", 0.0, True), _num(d["ly"], "domain.ly", 0.0, True))
        offset = (_num(d["x0"], "domain.x0"), _num(d["y0"], "domain.y0"))
    areas = _parse_areas(top["areas"], "areas", domain, offset)
    final = None if top["final_areas"] is None else _parse_areas(
        top["final_areas"], "final_areas", domain, offset)
    if areas and domain is None:
        raise ConfigError("areas: a domain is required")
    boot = _take(top["bootstrap"], "bootstrap", {"replicates": 1000, "level": 0.95})
    level = _num(boot["level"], "bootstrap.level")
    if not 0 < level < 1:
        raise ConfigError("bootstrap.level: must lie in (0, 1)")
    seed = top["seed"]
    if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed < 2 ** 64:
        raise ConfigError("seed: expected an unsigned 64-bit integer")
    params = None
    if top["params"] is not None:
        p = _take(top["params"], "params",
                  {"beta_x": _REQUIRED, "beta_y": _REQUIRED, "d_x": _REQUIRED, "d_y": _REQUIRED})
        params = MotionParams(_num(p["beta_x"], "params.beta_x"), _num(p["beta_y"], "params.beta_y"),
                              _num(p["d_x"], "params.d_x", 0.0, True),
                              _num(p["d_y"], "params.d_y", 0.0, True))
    s = _take(top["simulate"], "simulate", _SIM_KEYS)
    beta = _pair(s["beta"], "simulate.beta")
    sim = SimulateConfig(
        n_paths=_int(s["n_paths"], "simulate.n_paths", 1), n=_int(s["n"], "simulate.n", 2),
        beta=beta, d=_num(s["d"], "simulate.d", 0.0), intervals=dict(s["intervals"]),
        noise=dict(s["noise"]), x0=_pair(s["x0"], "simulate.x0"))
    _interval_dist(sim.intervals)
    _noise_model(sim.noise)
    v = _take(top["validate"], "validate", asdict(ValidationOptions()))
    val = ValidationOptions(
        n_quadrature_configs=_int(v["n_quadrature_configs"], "validate.n_quadrature_configs", 1),
        mc_paths=_int(v["mc_paths"], "validate.mc_paths", 1000),
        cumulant_samples=_int(v["cumulant_samples"], "validate.cumulant_samples", 10_000),
        bias_paths=_int(v["bias_paths"], "validate.bias_paths", 10),
        seed=_int(v["seed"], "validate.seed", 0),
        corrupt_sign=_bool(v["corrupt_sign"], "validate.corrupt_sign"))
    horizon = _num(top["horizon"], "horizon", 0.0, True, allow_none=True)
    return RunConfig(
        domain=domain, offset=offset, areas=areas, final_areas=final, horizon=horizon,
        error_variance=_num(top["error_variance"], "error_variance", 0.0),
        replicates=_int(boot["replicates"], "bootstrap.replicates", 100), level=level, seed=seed,
        tail_tol=_num(top["tail_tol"], "tail_tol", 0.0, True),
        rel_tol=_num(top["rel_tol"], "rel_tol", 0.0, allow_none=True),
        project_lonlat=_bool(top["project_lonlat"], "project_lonlat"),
        use_collective=_bool(top["use_collective"], "use_collective"),
        include_error=_bool(top["include_error"], "include_error"),
        params=params, simulate=sim, validate=val,
    )


def load_config(path) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read ({exc.strerror})") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from None
    return parse_config(raw)


# ---------------------------------------------------------------------------
# Output helpers
# ---------------------------------------------------------------------------

def _fmt(v) -> str:
    return format(float(v), ".17g")


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return _jsonable(v.tolist())
    if isinstance(v, (np.floating, float)):
        v = float(v)
        # JSON has no infinities; keep them readable
        return v if math.isfinite(v) else str(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    return v


def _write_json(path: Path, obj):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_jsonable(obj), fh, indent=2, sort_keys=False)
        fh.write("\n")


def _write_csv(path: Path, header, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


def _header(cfg: RunConfig, command: str, data=None) -> dict:
    out = {"tool": "diffmig", "version": __version__, "command": command, "config": cfg.to_dict()}
    if data is not None:
        out["data"] = {"path": str(data), "sha256": _sha256(data)}
    return out


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def _load_tracks(cfg: RunConfig, data):
    if data is None:
        raise UsageError("--data is required for this command")
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        tracks = ingest_tracks(data, cfg.project_lonlat)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    if not tracks:
        raise UsageError(f"{data}: no path with at least two fixes")
    return tracks


def cmd_simulate(cfg: RunConfig, out: Path) -> list:
    s = cfg.simulate
    tracks = simulate_free_paths(
        DriftVector(*s.beta), ConstantDiffusion(s.d), _interval_dist(s.intervals), s.n,
        s.n_paths, cfg.seed, noise=_noise_model(s.noise), x0=s.x0, prefix="sim")
    comments = [f"diffmig {__version__} simulate", f"seed={cfg.seed}",
                "simulate=" + json.dumps(cfg.to_dict()["simulate"], sort_keys=True)]
    write_tracks(out / "tracks.csv", tracks, comments)
    return tracks


def _fit_all(cfg, tracks):
    fits, boots = [], []
    for k, tr in enumerate(tracks):
        fits.append(fit_effective(tr, cfg.error_variance, rel_tol=cfg.rel_tol))
        if extract_increments(tr)[0].n >= 2:
            boots.append(bootstrap_track(tr, cfg.replicates, cfg.level, (cfg.seed, 1, k),
                                         cfg.error_variance))
        else:
            boots.append(None)
    return fits, boots


def _ci_dict(ci):
    return None if ci is None else {k: v for k, v in ci.to_dict().items() if k != "replicates"}


def cmd_estimate(cfg: RunConfig, tracks, out: Path, data=None) -> dict:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        fits, boots = _fit_all(cfg, tracks)
    per_path = []
    for fit, boot in zip(fits, boots):
        entry = {"path_id": fit.path_id, "n": fit.n, "duration": fit.duration,
                 "error_corrected": fit.error_corrected,
                 "nonpositive_diffusion": fit.nonpositive_diffusion}
        for name in ("beta_x", "beta_y", "d_x", "d_y"):
            entry[name] = {"estimate": getattr(fit, name),
                           "ci": None if boot is None else _ci_dict(boot[name])}
        per_path.append(entry)
    collective = estimate_collective(fits)
    coll = {"n_paths": collective.n_paths, "duration": collective.duration}
    cboot = None
    if len(tracks) >= 2:
        cboot = bootstrap_collective(tracks, cfg.replicates, cfg.level, (cfg.seed, 2),
                                     cfg.error_variance)
    for name in ("beta_x", "beta_y", "d_x", "d_y"):
        coll[name] = {"estimate": getattr(collective, name),
                      "ci": None if cboot is None else _ci_dict(cboot[name])}
    drift_flags = {}
    for ax in AXES:
        ci = None if cboot is None else cboot[f"beta_{ax}"]
        drift_flags[ax] = None if ci is None else {
            "significant": not ci.contains(0.0), "level": cfg.level}
    comparison = []
    qq_rows = []
    usable = [k for k, (f, b) in enumerate(zip(fits, boots))
              if b is not None and not f.nonpositive_diffusion]
    if len(usable) >= 2 and collective.d_x > 0 and collective.d_y > 0:
        comp = compare_models([fits[k] for k in usable], collective, [boots[k] for k in usable],
                              [extract_increments(tracks[k]) for k in usable],
                              cfg.include_error, cfg.error_variance)
        comparison = [asdict(r) for r in comp.rows]
        for ax, (qe, qc) in comp.qq.items():
            qq_rows.extend((ax, a, b) for a, b in zip(qe, qc))
    report = {**_header(cfg, "estimate", data), "paths": per_path, "collective": coll,
              "drift_significance": drift_flags, "comparison": comparison}
    _write_json(out / "report.json", report)
    rows = []
    for entry in per_path + [{"path_id": "collective", **coll}]:
        for name in ("beta_x", "beta_y", "d_x", "d_y"):
            e = entry[name]
            ci = e["ci"] or {"lower": math.nan, "upper": math.nan, "se": math.nan}
            rows.append((entry["path_id"], name, e["estimate"], ci["lower"], ci["upper"], ci["se"]))
    _write_csv(out / "params.csv", ("path_id", "parameter", "estimate", "lower", "upper", "se"), rows)
    if qq_rows:
        _write_csv(out / "qq.csv", ("axis", "effective", "collective"), qq_rows)
    return report


def _proportion_sets(cfg: RunConfig, tracks):
    """(label, MotionParams) pairs the proportion matrices are computed for."""
    if cfg.params is not None:
        return [("config", cfg.params)]
    if tracks is None:
        raise UsageError("proportions need either 'params' in the config or --data tracks")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        fits = [fit_effective(tr, cfg.error_variance, rel_tol=cfg.rel_tol) for tr in tracks]
    if cfg.use_collective:
        return [("collective", estimate_collective(fits).as_motion())]
    return [(f.path_id, f.as_motion()) for f in fits]


def cmd_proportions(cfg: RunConfig, tracks, out: Path, data=None) -> dict:
    if cfg.domain is None or not cfg.areas:
        raise ConfigError("proportions need 'domain' and 'areas'")
    if cfg.horizon is None:
        raise ConfigError("proportions need 'horizon'")
    final = cfg.final_areas if cfg.final_areas is not None else cfg.areas
    ctrl = ImageSumControl(tail_tol=cfg.tail_tol)
    mats = []
    rows = []
    for label, params in _proportion_sets(cfg, tracks):
        m = proportion_matrix(cfg.areas, final, params, cfg.horizon, cfg.domain, ctrl,
                              check_partition=True)
        mats.append({"label": label, **m.to_dict(),
                     "max_row_sum_deviation": float(np.max(np.abs(m.row_sums - 1.0)))})
        for r, ai in enumerate(m.initial):
            for c, af in enumerate(m.final):
                rows.append((label, ai, af, float(m.entries[r, c])))
    report = {**_header(cfg, "proportions", data), "matrices": mats}
    _write_json(out / "proportions.json", report)
    _write_csv(out / "proportions.csv", ("params", "initial", "final", "proportion"), rows)
    return report


def cmd_validate(cfg: RunConfig, out: Path, log=None) -> dict:
    results = run_validation(cfg.validate, log)
    report = {**_header(cfg, "validate"), "passed": all(r.passed for r in results),
              "checks": [r.to_dict() for r in results]}
    _write_json(out / "validation.json", report)
    return report


def cmd_standardize(cfg: RunConfig, tracks, out: Path) -> dict:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        fits = [fit_effective(tr, cfg.error_variance, rel_tol=cfg.rel_tol) for tr in tracks]
    collective = estimate_collective(fits)
    rows = []
    pooled = {ax: ([], []) for ax in AXES}
    for tr, fit in zip(tracks, fits):
        incs = extract_increments(tr)
        for a, ax in enumerate(AXES):
            inc = incs[a]
            d = fit.d(ax)
            if d > 0:
                u_eff = standardize_increments(inc, fit.beta(ax), d, cfg.include_error, cfg.error_variance)
            elif np.all(inc.dv - fit.beta(ax) * inc.dt == 0):
                # no spread at all: every centred increment is exactly zero
                u_eff = np.zeros(inc.n)
            else:
                raise NumericalError(f"path {tr.path_id!r}: non-positive diffusion on axis {ax}")
            u_col = (standardize_increments(inc, collective.beta(ax), collective.d(ax),
                                            cfg.include_error, cfg.error_variance)
                     if collective.d(ax) > 0 else np.zeros(inc.n))
            pooled[ax][0].append(u_eff)
            pooled[ax][1].append(u_col)
            t_mid = tr.t[:-1]
            for k in range(inc.n):
                rows.append((tr.path_id, ax, float(t_mid[k]), float(inc.dt[k]),
                             float(u_eff[k]), float(u_col[k])))
    _write_csv(out / "standardized.csv",
               ("path_id", "axis", "t", "dt", "u_effective", "u_collective"), rows)
    qq_rows = []
    summary = {}
    for ax in AXES:
        ue = np.concatenate(pooled[ax][0])
        uc = np.concatenate(pooled[ax][1])
        qe, qc = qq_pairs(ue, uc)
        qq_rows.extend((ax, a, b) for a, b in zip(qe, qc))
        summary[ax] = {"n": int(ue.size), "var_effective": float(np.var(ue)),
                       "var_collective": float(np.var(uc))}
    _write_csv(out / "qq.csv", ("axis", "effective", "collective"), qq_rows)
    return summary


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="diffmig", description="Drift-diffusion estimation and migration proportions.")
    p.add_argument("--version", action="version", version=f"diffmig {__version__}")
    sub = p.add_subparsers(dest="command", metavar="command", parser_class=_Parser)
    sub.required = True
    helps = {
        "simulate": "write synthetic tracks",
        "estimate": "fit per-path and collective parameters",
        "proportions": "compute migration proportion matrices",
        "validate": "run the oracle cross-checks",
        "standardize": "write standardized increments and qq pairs",
    }
    for name, text in helps.items():
        s = sub.add_parser(name, help=text)
        s.add_argument("--config", type=Path, help="JSON run configuration")
        s.add_argument("--data", type=Path, help="track CSV (path_id,t,x,y)")
        s.add_argument("--out", type=Path, default=Path("."), help="output directory")
        s.add_argument("--seed", type=int, help="master seed, overrides the config")
        s.add_argument("--project-lonlat", action="store_true",
                       help="read x,y as lon/lat degrees and project to km")
    return p


def _resolve_config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config is not None else parse_config({})
    changes = {}
    if args.seed is not None:
        if not 0 <= args.seed < 2 ** 64:
            raise UsageError("--seed must be an unsigned 64-bit integer")
        changes["seed"] = args.seed
    if args.project_lonlat:
        changes["project_lonlat"] = True
    if changes:
        cfg = replace(cfg, **changes)
    return cfg


def run(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        cfg = _resolve_config(args)
        out = args.out
        out.mkdir(parents=True, exist_ok=True)
        if args.command == "simulate":
            tracks = cmd_simulate(cfg, out)
            print(f"wrote {len(tracks)} tracks to {out / 'tracks.csv'}")
        elif args.command == "estimate":
            tracks = _load_tracks(cfg, args.data)
            report = cmd_estimate(cfg, tracks, out, args.data)
            print(f"estimated {len(report['paths'])} paths; report in {out / 'report.json'}")
        elif args.command == "proportions":
            tracks = _load_tracks(cfg, args.data) if args.data is not None else None
            report = cmd_proportions(cfg, tracks, out, args.data)
            print(f"wrote {len(report['matrices'])} matrices to {out / 'proportions.csv'}")
        elif args.command == "validate":
            report = cmd_validate(cfg, out, log=print)
            if not report["passed"]:
                print("validation FAILED", file=sys.stderr)
                return EXIT_VALIDATION
            print("validation passed")
        elif args.command == "standardize":
            tracks = _load_tracks(cfg, args.data)
            cmd_standardize(cfg, tracks, out)
            print(f"wrote {out / 'standardized.csv'} and {out / 'qq.csv'}")
        return EXIT_OK
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    except (UsageError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"error: cannot write output: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
