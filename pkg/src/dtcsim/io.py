"""Persistence: CSV tables, JSON run manifests and TOML run configurations.

Floats are written with 17 significant digits so that every value round-trips
exactly. All files are written to a temporary sibling first and moved into place,
so a reader never sees a half-written artifact.
"""
from __future__ import annotations

import csv
import datetime as _dt
import io as _io
import json
import math
import os
import sys
import tempfile
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Mapping

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .analysis import StroboscopicSeries
from .model import ConfigError

OUTPUT_ROOT_ENV = "DTCSIM_OUTPUT_ROOT"
DEFAULT_OUTPUT_ROOT = "dtcsim-output"


def tool_version() -> str:
    try:
        from importlib.metadata import version
        return version("artifact")
    except Exception:
        return "unknown"


def output_root() -> Path:
    return Path(os.environ.get(OUTPUT_ROOT_ENV, DEFAULT_OUTPUT_ROOT))


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return "nan" if math.isnan(v) else format(v, ".17g")
    return str(v)


def atomic_write_text(path: Path | str, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def write_csv(path: Path | str, columns: Mapping[str, Any]) -> Path:
    """Write equal-length columns (in mapping order) as CSV with a header row."""
    names = list(columns)
    cols = [np.asarray(columns[n]) if not isinstance(columns[n], list) else columns[n]
            for n in names]
    lengths = {len(c) for c in cols}
    if len(lengths) > 1:
        raise ValueError(f"columns have unequal lengths {sorted(lengths)}")
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(names)
    for row in zip(*cols):
        w.writerow([_fmt(v) for v in row])
    return atomic_write_text(path, buf.getvalue())


def read_csv(path: Path | str) -> dict[str, np.ndarray]:
    """Read a numeric CSV written by :func:`write_csv` into float columns."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty file")
    header, body = rows[0], rows[1:]
    out = {}
    for i, name in enumerate(header):
        try:
            out[name] = np.array([float(r[i]) if r[i] != "" else math.nan for r in body])
        except (ValueError, IndexError):
            out[name] = np.array([r[i] if i < len(r) else "" for r in body], dtype=object)
    return out


SERIES_COLUMNS = ("magnetization", "sigma_y", "value")


def read_series_csv(path: Path | str, column: str | None = None, period: float = 1.0) -> StroboscopicSeries:
    """Load a stroboscopic series; an ``n = 0`` row, if present, becomes ``initial``.

    Without ``column`` the first of ``magnetization``, ``sigma_y``, ``value`` found
    is used, or the only column of a single-column file.
    """
    data = read_csv(path)
    if column is None:
        candidates = [c for c in SERIES_COLUMNS if c in data]
        if candidates:
            column = candidates[0]
        elif len(data) == 1:
            column = next(iter(data))
        else:
            raise ValueError(f"{path}: cannot tell which column holds the series; "
                             f"pass one of {sorted(data)}")
    if column not in data:
        raise ValueError(f"{path}: no column {column!r}")
    values = np.asarray(data[column], dtype=float)
    initial = None
    if "n" in data and len(data["n"]) and data["n"][0] == 0:
        initial, values = float(values[0]), values[1:]
    return StroboscopicSeries(values=values, period=period, label=str(path), initial=initial)


@dataclass
class RunManifest:
    subcommand: str
    config: dict
    parameters: dict
    engine: str | None
    outputs: list
    tool_version: str = field(default_factory=tool_version)
    timestamp: str = field(
        default_factory=lambda: _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"))
    wall_time: float | None = None
    criterion: list | None = None
    summary: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(_jsonable(asdict(self)), indent=2, sort_keys=True) + "\n"


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, Path):
        return str(obj)
    return obj


def write_manifest(path: Path | str, manifest: RunManifest) -> Path:
    return atomic_write_text(path, manifest.to_json())


def read_manifest(path: Path | str) -> dict:
    with open(path) as fh:
        return json.load(fh)


def load_config(path: Path | str) -> dict:
    """Flat key/value configuration from TOML, or the ``config`` block of a manifest."""
    path = Path(path)
    try:
        if path.suffix == ".json":
            data = read_manifest(path)
            if "config" not in data:
                raise ConfigError(f"{path}: JSON file is not a run manifest (no 'config')")
            return dict(data["config"])
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    nested = [k for k, v in data.items() if isinstance(v, dict)]
    if nested:
        raise ConfigError(f"{path}: configuration must be flat; found table(s) {nested}")
    return data


def check_keys(config: Mapping[str, Any], allowed, context: str) -> None:
    unknown = sorted(set(config) - set(allowed))
    if unknown:
        raise ConfigError(f"{context}: unknown key(s) {', '.join(unknown)}; "
                          f"allowed: {', '.join(sorted(allowed))}")
