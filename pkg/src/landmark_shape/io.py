"""File formats: chain CSV/JSON, landmark indicator files, result tables, manifests.

Landmark indices written to disk are 1-based.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
import tempfile
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .geometry import GeometryError, PolygonalChain

log = logging.getLogger(__name__)


class DataError(ValueError):
    """Malformed or inconsistent input data."""

    def __init__(self, message: str, path=None, line: int | None = None):
        where = f"{path}" if path is not None else ""
        if line is not None:
            where += f":{line}"
        super().__init__(f"{where}: {message}" if where else message)
        self.path = path
        self.line = line


def _parse_float(text: str, path, line: int) -> float:
    try:
        v = float(text)
    except ValueError:
        raise DataError(f"cannot parse {text!r} as a number", path, line) from None
    if not math.isfinite(v):
        raise DataError(f"non-finite value {text!r}", path, line)
    return v


def _clean_vertices(rows: list[tuple[float, float]], lines: list[int], path) -> np.ndarray:
    kept, kept_lines = [], []
    for (x, y), ln in zip(rows, lines):
        if kept and kept[-1] == (x, y):
            log.warning("%s:%d: dropping consecutive duplicate vertex", path, ln)
            continue
        kept.append((x, y))
        kept_lines.append(ln)
    if len(kept) > 1 and kept[-1] == kept[0]:
        log.warning("%s:%d: dropping closing vertex (closure is implicit)", path, kept_lines[-1])
        kept.pop()
    if len(kept) < 3:
        raise DataError(f"need at least 3 distinct vertices, got {len(kept)}", path)
    return np.array(kept, dtype=float)


def read_chain(path, format: str | None = None) -> PolygonalChain:
    """Read a chain from CSV (``x,y`` rows, optional header) or JSON (``[[x, y], ...]``)."""
    path = Path(path)
    fmt = (format or path.suffix.lstrip(".")).lower()
    try:
        text = path.read_text()
    except OSError as e:
        raise DataError(f"cannot read file: {e.strerror}", path) from None
    rows, lines = [], []
    if fmt == "json":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise DataError(f"invalid JSON: {e.msg}", path, e.lineno) from None
        if isinstance(data, dict):
            data = data.get("vertices")
        if not isinstance(data, list):
            raise DataError("expected an array of [x, y] pairs", path)
        for i, pt in enumerate(data):
            if not (isinstance(pt, list) and len(pt) == 2):
                raise DataError(f"vertex {i} is not an [x, y] pair", path)
            rows.append((_parse_float(str(pt[0]), path, None), _parse_float(str(pt[1]), path, None)))
            lines.append(i + 1)
    elif fmt in ("csv", "txt"):
        for ln, rec in enumerate(csv.reader(io.StringIO(text)), start=1):
            if not rec or all(not f.strip() for f in rec):
                continue
            if len(rec) < 2:
                raise DataError("expected two columns x,y", path, ln)
            fields = [f.strip() for f in rec[:2]]
            if ln == 1 and not rows:
                try:
                    float(fields[0]), float(fields[1])
                except ValueError:
                    continue  # header
            rows.append((_parse_float(fields[0], path, ln), _parse_float(fields[1], path, ln)))
            lines.append(ln)
    else:
        raise DataError(f"unknown chain format {fmt!r}", path)
    xy = _clean_vertices(rows, lines, path)
    try:
        return PolygonalChain(xy)
    except GeometryError as e:
        raise DataError(str(e), path) from None


def _atomic_write(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return "" if math.isnan(v) else repr(float(v))
    return str(v)


def write_csv(path, rows: list[dict], columns: list[str]) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r.get(c)) for c in columns])
    _atomic_write(path, buf.getvalue())


def read_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def write_json(path, obj) -> None:
    _atomic_write(path, json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n")


def _json_default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def write_chain(path, chain: PolygonalChain) -> None:
    write_csv(path, [{"x": x, "y": y} for x, y in chain.vertices.tolist()], ["x", "y"])


def write_landmarks(path, gamma) -> None:
    """One ``gamma`` value (0/1) per vertex, in chain order."""
    write_csv(path, [{"gamma": int(v)} for v in np.asarray(gamma)], ["gamma"])


def read_landmarks(path, m: int | None = None) -> np.ndarray:
    """Landmark indicator from a ``gamma`` CSV or a detection report JSON."""
    path = Path(path)
    if path.suffix == ".json":
        try:
            rep = json.loads(path.read_text())
        except json.JSONDecodeError as e:
            raise DataError(f"invalid JSON: {e.msg}", path, e.lineno) from None
        n = rep.get("n_vertices")
        idx = rep.get("landmarks") or rep.get("landmarks_ppm") or rep.get("landmarks_map")
        if n is None or idx is None:
            raise DataError("report lacks n_vertices or landmarks", path)
        g = np.zeros(n, dtype=np.int8)
        for i in idx:
            if not 1 <= i <= n:
                raise DataError(f"landmark index {i} outside 1..{n}", path)
            g[i - 1] = 1
    else:
        vals = []
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            for ln, rec in enumerate(reader, start=1):
                if not rec:
                    continue
                f = rec[0].strip()
                if ln == 1 and f == "gamma":
                    continue
                if f not in ("0", "1"):
                    raise DataError(f"expected 0 or 1, got {f!r}", path, ln)
                vals.append(int(f))
        g = np.array(vals, dtype=np.int8)
    if m is not None and len(g) != m:
        raise DataError(f"landmark vector has length {len(g)}, chain has {m} vertices", path)
    return g


def timestamp() -> str:
    """UTC ISO timestamp; honours ``SOURCE_DATE_EPOCH`` for reproducible output."""
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    if epoch is not None:
        now = datetime.fromtimestamp(int(epoch), tz=timezone.utc)
    else:
        now = datetime.now(tz=timezone.utc)
    return now.replace(microsecond=0).isoformat()
