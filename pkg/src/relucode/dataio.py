"""Dataset file I/O.

Two interchangeable forms: CSV with header ``x1,...,xm[,label]`` for
hand-made fixtures, and binary RCD-F32 (magic ``RCDF``, u32 rows, u32 cols,
f32 row-major) for larger runs. Binary labels live in a ``<file>.labels``
sidecar, one integer per line. Points always come back as float64.
"""

from __future__ import annotations

import csv
import re
import struct
from pathlib import Path

import numpy as np

from .errors import FormatError

F32_MAGIC = b"RCDF"

_HEADER_RE = re.compile(r"x(\d+)$")


def _labels_sidecar(path: Path) -> Path:
    return path.with_name(path.name + ".labels")


def load_dataset(path):
    """Returns (points, labels-or-None); format sniffed from the magic."""
    path = Path(path)
    head = path.read_bytes()[:4] if path.stat().st_size >= 4 else b""
    if head == F32_MAGIC:
        return _load_f32(path)
    return _load_csv(path)


def _load_csv(path: Path):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [row for row in csv.reader(fh) if row]
    if not rows:
        raise FormatError("empty dataset", location=str(path))
    header = [h.strip() for h in rows[0]]
    has_label = header and header[-1] == "label"
    coord_names = header[:-1] if has_label else header
    for i, name in enumerate(coord_names):
        m = _HEADER_RE.match(name)
        if not m or int(m.group(1)) != i + 1:
            raise FormatError(
                f"bad dataset header: expected x1..x{len(coord_names)}[,label], got {header}",
                location=str(path),
            )
    if not coord_names:
        raise FormatError("dataset header has no coordinate columns", location=str(path))
    if len(rows) == 1:
        raise FormatError("empty dataset", location=str(path))
    m = len(coord_names)
    points = np.empty((len(rows) - 1, m))
    labels = [] if has_label else None
    for r, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise FormatError(
                f"row has {len(row)} fields, header has {len(header)}",
                location=f"{path}:{r}",
            )
        try:
            points[r - 2] = [float(v) for v in row[:m]]
        except ValueError:
            raise FormatError(
                f"non-numeric coordinate in {row[:m]}", location=f"{path}:{r}"
            ) from None
        if has_label:
            labels.append(_parse_label(row[m], path, r))
    return points, (np.asarray(labels) if has_label else None)


def _parse_label(text: str, path, line):
    text = text.strip()
    try:
        return int(text)
    except ValueError:
        raise FormatError(
            f"non-integer label {text!r}", location=f"{path}:{line}"
        ) from None


def _load_f32(path: Path):
    data = path.read_bytes()
    if len(data) < 12:
        raise FormatError("truncated RCD-F32 header", location=str(path))
    rows, cols = struct.unpack_from("<II", data, 4)
    if rows == 0 or cols == 0:
        raise FormatError("empty dataset", location=str(path))
    expected = 12 + 4 * rows * cols
    if len(data) != expected:
        raise FormatError(
            f"expected {expected} bytes for {rows}x{cols} f32, got {len(data)}",
            location=str(path),
        )
    points = (
        np.frombuffer(data, dtype="<f4", offset=12, count=rows * cols)
        .reshape(rows, cols)
        .astype(np.float64)
    )
    labels = None
    sidecar = _labels_sidecar(path)
    if sidecar.exists():
        raw = [ln for ln in sidecar.read_text(encoding="utf-8").split() if ln]
        if len(raw) != rows:
            raise FormatError(
                f"{len(raw)} labels for {rows} points", location=str(sidecar)
            )
        try:
            labels = np.asarray([int(v) for v in raw])
        except ValueError:
            raise FormatError("non-integer label", location=str(sidecar)) from None
    return points, labels


def save_dataset(points, labels=None, path=None, fmt=None) -> Path:
    """fmt "csv" or "f32"; defaults to csv for a .csv suffix, else f32."""
    path = Path(path)
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2:
        raise ValueError("points must be a 2-D array")
    if labels is not None and len(labels) != len(points):
        raise ValueError(f"{len(labels)} labels for {len(points)} points")
    if fmt is None:
        fmt = "csv" if path.suffix == ".csv" else "f32"
    if fmt == "csv":
        header = [f"x{i + 1}" for i in range(points.shape[1])]
        if labels is not None:
            header.append("label")
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            for i, p in enumerate(points):
                row = [f"{v:.17g}" for v in p]
                if labels is not None:
                    row.append(str(int(labels[i])))
                writer.writerow(row)
    elif fmt == "f32":
        with open(path, "wb") as fh:
            fh.write(F32_MAGIC)
            fh.write(struct.pack("<II", *points.shape))
            fh.write(points.astype("<f4").tobytes())
        if labels is not None:
            _labels_sidecar(path).write_text(
                "\n".join(str(int(v)) for v in labels) + "\n", encoding="utf-8"
            )
    else:
        raise ValueError(f"unknown dataset format {fmt!r}")
    return path


def load_labels(path) -> np.ndarray:
    """Plain label file: one integer per line."""
    raw = [ln for ln in Path(path).read_text(encoding="utf-8").split() if ln]
    if not raw:
        raise FormatError("empty label file", location=str(path))
    try:
        return np.asarray([int(v) for v in raw])
    except ValueError:
        raise FormatError("non-integer label", location=str(path)) from None
