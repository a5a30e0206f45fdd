"""Run artifacts: raw field snapshots with JSON sidecars, the diagnostics
CSV, restart checkpoints and PGM images.

A snapshot is ``<field>_<step>.bin`` (little-endian float64, row-major, no
header) next to ``<field>_<step>.json`` holding exactly the keys of
``SIDECAR_KEYS``.
"""
from __future__ import annotations

import json
import os
from dataclasses import fields as dc_fields
from pathlib import Path
from typing import IO

import numpy as np

from . import grid as G
from .diagnostics import SERIES_COLUMNS, DiagnosticsRecord
from .errors import FormatError, IoError

SIDECAR_KEYS = ("field", "nx", "ny", "lx", "ly", "time", "bc", "layout")
LAYOUTS = ("cell_center", "x_face", "y_face")
STATE_FIELDS = (("phi", "cell_center"), ("mu", "cell_center"), ("p", "cell_center"),
                ("v_x", "x_face"), ("v_y", "y_face"))
_DTYPE = np.dtype("<f8")


def layout_shape(nx: int, ny: int, layout: str) -> tuple[int, int]:
    if layout == "cell_center":
        return ny, nx
    if layout == "x_face":
        return ny, nx + 1
    if layout == "y_face":
        return ny + 1, nx
    raise FormatError(f"unknown layout {layout!r}")


def snapshot_stem(name: str, step: int) -> str:
    return f"{name}_{step:06d}"


def write_snapshot(path, name: str, array: np.ndarray, grid: G.Grid, time: float, layout: str) -> Path:
    """Write one field; ``path`` is the basename without extension."""
    path = Path(path)
    if array.shape != layout_shape(grid.nx, grid.ny, layout):
        raise FormatError(f"{name}: shape {array.shape} does not fit layout {layout!r}")
    meta = {
        "field": name,
        "nx": grid.nx,
        "ny": grid.ny,
        "lx": grid.lx,
        "ly": grid.ly,
        "time": float(time),
        "bc": grid.bc,
        "layout": layout,
    }
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.with_suffix(".bin").write_bytes(np.ascontiguousarray(array, dtype=_DTYPE).tobytes())
        path.with_suffix(".json").write_text(json.dumps(meta, indent=1) + "\n")
    except OSError as exc:
        raise IoError(f"cannot write snapshot {path}: {exc}") from exc
    return path


def read_snapshot(path, grid: G.Grid | None = None) -> tuple[np.ndarray, dict]:
    """Load ``path`` (.bin, .json or bare stem); returns ``(array, sidecar)``.

    With ``grid`` given, the sidecar geometry must match it exactly.
    """
    path = Path(path)
    if path.suffix in (".bin", ".json"):
        path = path.with_suffix("")
    try:
        meta = json.loads(path.with_suffix(".json").read_text())
        payload = path.with_suffix(".bin").read_bytes()
    except (OSError, json.JSONDecodeError) as exc:
        raise IoError(f"cannot read snapshot {path}: {exc}") from exc
    if not isinstance(meta, dict) or set(meta) != set(SIDECAR_KEYS):
        raise FormatError(f"{path}.json: sidecar keys must be {', '.join(SIDECAR_KEYS)}")
    if meta["layout"] not in LAYOUTS:
        raise FormatError(f"{path}.json: unknown layout {meta['layout']!r}")
    if grid is not None:
        for key in ("nx", "ny", "lx", "ly", "bc"):
            if meta[key] != getattr(grid, key):
                raise FormatError(f"{path}.json: {key}={meta[key]!r} but grid has {getattr(grid, key)!r}")
    shape = layout_shape(meta["nx"], meta["ny"], meta["layout"])
    expected = 8 * shape[0] * shape[1]
    if len(payload) != expected:
        raise FormatError(f"{path}.bin: expected {expected} bytes, found {len(payload)}")
    return np.frombuffer(payload, dtype=_DTYPE).reshape(shape).astype(np.float64), meta


def write_state(state, directory) -> list[Path]:
    """Snapshot every field of ``state`` (velocity as two face layouts)."""
    directory = Path(directory)
    arrays = {"phi": state.phi, "mu": state.mu, "p": state.p, "v_x": state.vel.u, "v_y": state.vel.v}
    return [
        write_snapshot(directory / snapshot_stem(name, state.step), name, arrays[name], state.grid, state.t, layout)
        for name, layout in STATE_FIELDS
    ]


def write_checkpoint(state, record: DiagnosticsRecord | None, directory) -> Path:
    """Fields plus ``state_<step>.json`` with the step counter and the last
    diagnostics record, so a restart continues the running accumulators."""
    directory = Path(directory)
    write_state(state, directory)
    path = directory / f"state_{state.step:06d}.json"
    doc = {"step": state.step, "t": state.t, "record": None if record is None else record.values()}
    try:
        path.write_text(json.dumps(doc, indent=1) + "\n")
    except OSError as exc:
        raise IoError(f"cannot write checkpoint {path}: {exc}") from exc
    return path


def read_checkpoint(directory, step: int, grid: G.Grid):
    """Inverse of :func:`write_checkpoint`; returns ``(State, record or None)``."""
    from .stepper import State

    directory = Path(directory)
    path = directory / f"state_{step:06d}.json"
    try:
        doc = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise IoError(f"cannot read checkpoint {path}: {exc}") from exc
    arrays = {}
    for name, layout in STATE_FIELDS:
        arr, meta = read_snapshot(directory / snapshot_stem(name, step), grid)
        if meta["layout"] != layout or meta["field"] != name:
            raise FormatError(f"{name}: unexpected sidecar {meta['field']!r}/{meta['layout']!r}")
        arrays[name] = arr
    state = State(
        grid, arrays["phi"], G.VectorField(arrays["v_x"], arrays["v_y"]), arrays["p"], arrays["mu"],
        float(doc["t"]), int(doc["step"]),
    )
    rec = doc.get("record")
    if rec is not None:
        names = {f.name for f in dc_fields(DiagnosticsRecord)}
        rec = DiagnosticsRecord(**{k: v for k, v in rec.items() if k in names})
    return state, rec


# --------------------------------------------------------------------------
# Time series

HEADER = ",".join(SERIES_COLUMNS)


def format_row(record: DiagnosticsRecord) -> str:
    return ",".join("%.17g" % v for v in record.row())


class SeriesWriter:
    """Single-writer CSV sink; the header goes out before the first row."""

    def __init__(self, stream: IO[str]):
        self.stream = stream
        self.started = False

    def write(self, record: DiagnosticsRecord) -> None:
        try:
            if not self.started:
                self.stream.write(HEADER + "\n")
                self.started = True
            self.stream.write(format_row(record) + "\n")
        except OSError as exc:
            raise IoError(f"cannot write series: {exc}") from exc


def write_series(record: DiagnosticsRecord, stream: IO[str]) -> None:
    """Append one row; the header is emitted if the stream is still empty."""
    try:
        empty = stream.tell() == 0
    except (OSError, ValueError):
        empty = not getattr(stream, "_series_started", False)
    w = SeriesWriter(stream)
    w.started = not empty
    w.write(record)
    try:
        stream._series_started = True
    except AttributeError:
        pass


def read_series(path) -> np.ndarray:
    """Structured array with the series columns."""
    with open(path) as fh:
        header = fh.readline().strip()
        if header != HEADER:
            raise FormatError(f"{path}: unexpected header {header!r}")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return np.rec.fromarrays(data.T, names=list(SERIES_COLUMNS))


# --------------------------------------------------------------------------
# Images

PGM_RANGE = (-1.2, 1.2)


def pgm_levels(phi: np.ndarray) -> np.ndarray:
    """Gray levels: linear map of [-1.2, 1.2] to [0, 255], halves rounded up."""
    lo, hi = PGM_RANGE
    scaled = (np.asarray(phi, dtype=float) - lo) / (hi - lo) * 255.0
    return np.clip(np.floor(scaled + 0.5), 0, 255).astype(np.uint8)


def render_pgm(phi: np.ndarray, path) -> Path:
    """Binary P5 image; the first image row is the top (largest y) of the domain."""
    img = pgm_levels(phi)[::-1]
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "wb") as fh:
            fh.write(f"P5\n{img.shape[1]} {img.shape[0]}\n255\n".encode("ascii"))
            fh.write(np.ascontiguousarray(img).tobytes())
    except OSError as exc:
        raise IoError(f"cannot write image {path}: {exc}") from exc
    return path


def read_pgm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    parts = data.split(maxsplit=4)
    if parts[0] != b"P5":
        raise FormatError(f"{path}: not a binary PGM")
    w, h = int(parts[1]), int(parts[2])
    # single whitespace byte after maxval, then exactly w*h pixels
    return np.frombuffer(data[len(data) - w * h:], dtype=np.uint8).reshape(h, w)


def ensure_dir(path) -> Path:
    try:
        os.makedirs(path, exist_ok=True)
    except OSError as exc:
        raise IoError(f"cannot create {path}: {exc}") from exc
    return Path(path)
