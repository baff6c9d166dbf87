"""Binary field snapshots, state sidecars, CSV, and JSON report files.

Snapshot layout: a 16-byte header (magic "MHD25FLD", u32 n, u32 count,
little-endian) followed by `count` row-major little-endian float64 arrays of
length n^2.
"""

from __future__ import annotations

import datetime
import hashlib
import json
import struct
from pathlib import Path

import numpy as np

from .grid import Grid, SpectralField
from .system import MhdState, Params

MAGIC = b"MHD25FLD"
_HEADER = struct.Struct("<8sII")
STATE_FIELD_ORDER = ("a", "u1", "u2", "theta", "b")


class SnapshotError(ValueError):
    """Malformed snapshot file."""


def encode_field_snapshot(arrays: list[np.ndarray]) -> bytes:
    if not arrays:
        raise SnapshotError("snapshot needs at least one field")
    n = arrays[0].shape[0]
    chunks = [_HEADER.pack(MAGIC, n, len(arrays))]
    for arr in arrays:
        if arr.shape != (n, n):
            raise SnapshotError(f"field shape {arr.shape} does not match n={n}")
        chunks.append(np.ascontiguousarray(arr, dtype="<f8").tobytes())
    return b"".join(chunks)


def write_field_snapshot(path, arrays: list[np.ndarray]) -> None:
    Path(path).write_bytes(encode_field_snapshot(arrays))


def read_field_snapshot(path) -> list[np.ndarray]:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise SnapshotError("snapshot shorter than its header")
    magic, n, count = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise SnapshotError(f"bad magic {magic!r}")
    expected = _HEADER.size + count * n * n * 8
    if len(raw) != expected:
        raise SnapshotError(f"expected {expected} bytes, found {len(raw)}")
    out = []
    offset = _HEADER.size
    for _ in range(count):
        arr = np.frombuffer(raw, dtype="<f8", count=n * n, offset=offset)
        out.append(arr.reshape(n, n).astype(np.float64))
        offset += n * n * 8
    return out


def content_hash(arrays: list[np.ndarray]) -> str:
    return hashlib.sha256(encode_field_snapshot(arrays)).hexdigest()


def write_state(prefix, state, params: Params, extra: dict | None = None) -> str:
    """Write <prefix>.mhdsnap plus a JSON sidecar; returns the content hash.

    Works for any state object exposing .fields() and .time; the sidecar
    records the field order so readers stay format-agnostic.
    """
    prefix = Path(prefix)
    fields = state.fields()
    order = list(fields.keys())
    arrays = [fields[name].values for name in order]
    blob = encode_field_snapshot(arrays)
    prefix.with_suffix(".mhdsnap").write_bytes(blob)
    digest = hashlib.sha256(blob).hexdigest()
    sidecar = {
        "time": state.time,
        "params": params.to_dict(),
        "field_order": order,
        "n": state.grid.n,
        "length": state.grid.length,
        "sha256": digest,
    }
    if extra:
        sidecar.update(extra)
    write_json(prefix.with_suffix(".json"), sidecar)
    return digest


def read_state(prefix, grid: Grid | None = None) -> tuple[MhdState, dict]:
    """Read a primitive state written by write_state."""
    prefix = Path(prefix)
    if prefix.suffix in (".mhdsnap", ".json"):
        prefix = prefix.with_suffix("")
    meta = json.loads(prefix.with_suffix(".json").read_text())
    arrays = read_field_snapshot(prefix.with_suffix(".mhdsnap"))
    if grid is None:
        grid = Grid(meta["n"], meta["length"])
    elif grid.n != meta["n"]:
        raise SnapshotError(f"snapshot n={meta['n']} does not match grid n={grid.n}")
    named = dict(zip(meta["field_order"], arrays))
    missing = [f for f in STATE_FIELD_ORDER if f not in named]
    if missing:
        raise SnapshotError(f"snapshot lacks primitive fields {missing}")
    fv = {name: SpectralField.from_values(grid, named[name]) for name in STATE_FIELD_ORDER}
    state = MhdState(
        grid, fv["a"], (fv["u1"], fv["u2"]), fv["theta"], fv["b"], float(meta["time"])
    )
    return state, meta


def write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def write_norm_report(path, report: dict) -> None:
    required = {"norm_kind", "s", "r", "range", "value", "j_contributions"}
    missing = required - report.keys()
    if missing:
        raise ValueError(f"norm report lacks keys {sorted(missing)}")
    write_json(path, report)


def write_csv(path, header: list[str], rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(f"{v:.17g}" if isinstance(v, float) else str(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def read_csv_columns(path) -> dict[str, np.ndarray]:
    lines = Path(path).read_text().strip().splitlines()
    if not lines:
        raise ValueError(f"{path} is empty")
    header = lines[0].split(",")
    data = np.array([[float(v) for v in line.split(",")] for line in lines[1:]])
    if data.size == 0:
        raise ValueError(f"{path} has no data rows")
    return {name: data[:, i] for i, name in enumerate(header)}


def write_manifest(out_dir, command: str, config: dict, hashes: dict | None = None) -> None:
    """Resolved-run manifest; the timestamp lives here and only here."""
    manifest = {
        "command": command,
        "config": config,
        "content_hashes": hashes or {},
        "created_at": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "format_version": 1,
    }
    write_json(Path(out_dir) / "manifest.json", manifest)
