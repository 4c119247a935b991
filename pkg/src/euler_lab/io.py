"""Persistence: field snapshots, trace CSV, deterministic JSON reports.

Snapshot layout: one UTF-8 JSON header line holding grid shape, time,
dtype, byte order, a SHA-256 checksum of the payload, and optionally the
diagnostic sample computed at write time; the header is terminated by
newline + NUL, then the raw payload follows.  The payload is the
physical-space field as little-endian float64, component-major, x varying
fastest within each component.  Any language can parse it with a JSON
library and a reshape.

Trace CSV: fixed column order, %.17e per value (enough digits that a
float64 survives write -> read -> write byte-identically).
"""

from __future__ import annotations

import hashlib
import json
import os

import numpy as np

from .errors import CorruptSnapshotError, UsageError
from .monitor import SAMPLE_COLUMNS, RegularitySample, RegularityTrace
from .spectral import Grid3, SpectralField3, to_physical

SNAPSHOT_FORMAT = "euler-lab-snapshot-1"
_HEADER_END = b"\n\x00"


def _payload_bytes(data: np.ndarray) -> bytes:
    # component-major, then x fastest: store each component as (z, y, x)
    return np.ascontiguousarray(data.transpose(0, 3, 2, 1)).astype("<f8").tobytes()


def _json_bytes(obj) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False).encode(
        "utf-8"
    )


def write_snapshot(
    path,
    u: SpectralField3,
    time: float,
    sample: RegularitySample | None = None,
    diag: dict | None = None,
) -> None:
    """Store the physical-space velocity with metadata and checksum.

    ``diag`` carries the evaluator settings the in-run sample was computed
    with (exponent, budgets, the run's initial L2 norm), so a later
    diagnose pass can reproduce the sample exactly.
    """
    up = to_physical(u)
    if not up.is_vector:
        raise UsageError("snapshots hold vector fields")
    data = np.asarray(up.data, dtype=np.float64)
    if not np.all(np.isfinite(data)):
        raise UsageError("refusing to write a snapshot with non-finite values")
    payload = _payload_bytes(data)
    header = {
        "format": SNAPSHOT_FORMAT,
        "field": "velocity",
        "components": 3,
        "n": up.grid.n,
        "box_length": up.grid.box_length,
        "time": float(time),
        "dtype": "float64",
        "byte_order": "little",
        "order": "component-major, x-fastest",
        "sha256": hashlib.sha256(payload).hexdigest(),
        "sample": None if sample is None else {
            name: getattr(sample, name) for name in SAMPLE_COLUMNS
        },
        "diag": diag,
    }
    with open(path, "wb") as fh:
        fh.write(_json_bytes(header))
        fh.write(_HEADER_END)
        fh.write(payload)


def read_snapshot(path):
    """Returns (physical velocity field, header dict).

    Raises CorruptSnapshotError on a malformed header, truncation, or a
    checksum mismatch.
    """
    with open(path, "rb") as fh:
        raw = fh.read()
    sep = raw.find(_HEADER_END)
    if sep < 0:
        raise CorruptSnapshotError(f"{path}: no header terminator")
    try:
        header = json.loads(raw[:sep].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CorruptSnapshotError(f"{path}: bad header ({exc})") from exc
    if header.get("format") != SNAPSHOT_FORMAT:
        raise CorruptSnapshotError(f"{path}: unknown format {header.get('format')!r}")
    payload = raw[sep + len(_HEADER_END):]
    if hashlib.sha256(payload).hexdigest() != header.get("sha256"):
        raise CorruptSnapshotError(f"{path}: checksum mismatch")
    n = int(header["n"])
    expected = 3 * n * n * n * 8
    if len(payload) != expected:
        raise CorruptSnapshotError(
            f"{path}: payload is {len(payload)} bytes, expected {expected}"
        )
    arr = np.frombuffer(payload, dtype="<f8").reshape(3, n, n, n)
    data = np.ascontiguousarray(arr.transpose(0, 3, 2, 1))
    grid = Grid3(n=n, box_length=float(header["box_length"]))
    return SpectralField3.from_physical(grid, data), header


def snapshot_sample(header: dict) -> RegularitySample | None:
    raw = header.get("sample")
    if raw is None:
        return None
    return RegularitySample(**{name: float(raw[name]) for name in SAMPLE_COLUMNS})


# --------------------------------------------------------------------------
# Trace CSV.
# --------------------------------------------------------------------------

TRACE_HEADER = ",".join(SAMPLE_COLUMNS)


def write_trace_csv(path, trace: RegularityTrace) -> None:
    lines = [TRACE_HEADER]
    for s in trace.samples:
        row = s.as_row()
        if not all(np.isfinite(v) for v in row):
            raise UsageError(f"refusing to write non-finite trace row at t={s.t}")
        lines.append(",".join("%.17e" % v for v in row))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_trace_csv(path) -> RegularityTrace:
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines or lines[0] != TRACE_HEADER:
        raise UsageError(f"{path}: trace header does not match {TRACE_HEADER!r}")
    trace = RegularityTrace()
    for ln in lines[1:]:
        parts = ln.split(",")
        if len(parts) != len(SAMPLE_COLUMNS):
            raise UsageError(f"{path}: row has {len(parts)} fields")
        vals = [float(p) for p in parts]
        trace.samples.append(RegularitySample(**dict(zip(SAMPLE_COLUMNS, vals))))
    return trace


# --------------------------------------------------------------------------
# JSON reports.
# --------------------------------------------------------------------------

def write_json(path, obj) -> None:
    """Deterministic JSON: sorted keys, fixed separators, trailing newline."""
    def default(o):
        if isinstance(o, np.ndarray):
            return [float(x) for x in o]
        if isinstance(o, (np.floating, np.integer)):
            return o.item()
        raise TypeError(f"not JSON-serializable: {type(o)!r}")

    text = json.dumps(obj, sort_keys=True, indent=2, default=default)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text + "\n")


def read_json(path):
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def ensure_dir(path) -> None:
    os.makedirs(path, exist_ok=True)
