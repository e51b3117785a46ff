"""Reading and writing tracks in the ``path_id,t,x,y`` CSV format.

Lines starting with ``#`` are comments.  Numbers are written with 17
significant digits, which round-trips every double exactly.
"""
from __future__ import annotations

import math
import warnings
from pathlib import Path

import numpy as np

from .exceptions import DataError
from .model import TrackSeries

__all__ = ["HEADER", "KM_PER_DEGREE", "ingest_tracks", "parse_tracks", "write_tracks", "project_lonlat"]

HEADER = ("path_id", "t", "x", "y")
KM_PER_DEGREE = 111.32


def project_lonlat(lon, lat, mean_lat=None):
    """Equirectangular projection of degrees to planar kilometres."""
    lon = np.asarray(lon, dtype=float)
    lat = np.asarray(lat, dtype=float)
    if mean_lat is None:
        mean_lat = float(np.mean(lat))
    return (lon * math.cos(math.radians(mean_lat)) * KM_PER_DEGREE, lat * KM_PER_DEGREE)


def parse_tracks(lines, source: str = "<input>", project: bool = False) -> list[TrackSeries]:
    """Parse CSV lines into tracks.

    Rows are grouped by path id and sorted by time.  Paths with fewer than
    two rows are skipped with a warning.  With ``project`` the x and y
    columns are read as longitude and latitude in degrees and projected with
    the mean latitude of the whole file.
    """
    header_seen = False
    rows: dict[str, list] = {}
    seen_at: dict[tuple, int] = {}
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = [f.strip() for f in line.split(",")]
        if not header_seen:
            if tuple(fields) != HEADER:
                raise DataError(f"{source}: line {lineno}: expected header {','.join(HEADER)}")
            header_seen = True
            continue
        if len(fields) != 4:
            raise DataError(f"{source}: line {lineno}: expected 4 fields, got {len(fields)}")
        pid = fields[0]
        if not pid:
            raise DataError(f"{source}: line {lineno}: empty path_id")
        values = []
        for name, text in zip(HEADER[1:], fields[1:]):
            try:
                v = float(text)
            except ValueError:
                raise DataError(f"{source}: line {lineno}: cannot parse {name}") from None
            if not math.isfinite(v):
                raise DataError(f"{source}: line {lineno}: non-finite {name}")
            values.append(v)
        key = (pid, values[0])
        if key in seen_at:
            raise DataError(f"{source}: line {lineno}: duplicate time {fields[1]} for path "
                            f"{pid!r} (first seen on line {seen_at[key]})")
        seen_at[key] = lineno
        rows.setdefault(pid, []).append(values)
    if not header_seen:
        raise DataError(f"{source}: missing header {','.join(HEADER)}")

    mean_lat = None
    if project and rows:
        mean_lat = float(np.mean([r[2] for rs in rows.values() for r in rs]))
    tracks = []
    for pid, rs in rows.items():
        if len(rs) < 2:
            warnings.warn(f"{source}: path {pid!r} has fewer than 2 rows; skipped", stacklevel=2)
            continue
        arr = np.array(sorted(rs, key=lambda r: r[0]))
        x, y = arr[:, 1], arr[:, 2]
        if project:
            x, y = project_lonlat(x, y, mean_lat)
        tracks.append(TrackSeries(pid, arr[:, 0], x, y))
    return tracks


def ingest_tracks(path, project: bool = False) -> list[TrackSeries]:
    """Read a track CSV file; see :func:`parse_tracks`."""
    path = Path(path)
    try:
        with open(path, encoding="utf-8") as fh:
            return parse_tracks(fh, str(path), project)
    except OSError as exc:
        raise DataError(f"{path}: cannot read ({exc.strerror})") from exc
    except UnicodeDecodeError as exc:
        raise DataError(f"{path}: not valid UTF-8") from exc


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def write_tracks(path, tracks, comments=()) -> None:
    """Write tracks in the ingestion format, preceded by ``#`` comment lines."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for c in comments:
            fh.write(f"# {c}\n")
        fh.write(",".join(HEADER) + "\n")
        for tr in tracks:
            if "," in tr.path_id:
                raise DataError(f"path id {tr.path_id!r} contains a comma")
            for t, x, y in zip(tr.t, tr.x, tr.y):
                fh.write(f"{tr.path_id},{_fmt(t)},{_fmt(x)},{_fmt(y)}\n")
