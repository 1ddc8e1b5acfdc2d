"""Binary field files, 16-bit PGM export and focus-stack manifests.

Field file layout (little-endian)::

    magic     8 bytes  b"STBIFLD1"
    kind      u8       0 complex field, 1 hologram, 2 phase map
    width     u32
    height    u32
    pitch_um  f64
    defocus   f64
    payload   f64 * W*H (complex: interleaved re, im)
    mask      u8  * W*H (phase maps only, 1 = valid)
"""

from __future__ import annotations

import csv
import os
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np

from .errors import FileFormatError, RangeError, StbiError
from .field_core import ComplexField, Hologram, PhaseMap

__all__ = [
    "MAGIC",
    "FieldHeader",
    "write_field_file",
    "read_field_file",
    "read_field_header",
    "export_pgm16",
    "write_manifest",
    "read_manifest",
]

MAGIC = b"STBIFLD1"
_HEADER = struct.Struct("<8sBIIdd")
KIND_FIELD, KIND_HOLOGRAM, KIND_PHASE = 0, 1, 2

GridObject = Union[ComplexField, Hologram, PhaseMap]


@dataclass(frozen=True)
class FieldHeader:
    kind: int
    width: int
    height: int
    pixel_pitch: float
    defocus: float


def _kind_of(obj) -> int:
    if isinstance(obj, ComplexField):
        return KIND_FIELD
    if isinstance(obj, Hologram):
        return KIND_HOLOGRAM
    if isinstance(obj, PhaseMap):
        return KIND_PHASE
    raise StbiError(f"cannot serialise {type(obj).__name__}")


def write_field_file(path, obj: GridObject, defocus: float | None = None) -> None:
    """Serialise a field, hologram or phase map.

    ``defocus`` defaults to the hologram's own value, 0 for the other kinds.
    """
    kind = _kind_of(obj)
    values = obj.values
    if not np.all(np.isfinite(values)):
        raise StbiError("refusing to write non-finite values")
    if defocus is None:
        defocus = obj.defocus if kind == KIND_HOLOGRAM else 0.0
    h, w = values.shape
    header = _HEADER.pack(MAGIC, kind, w, h, float(obj.pixel_pitch), float(defocus))
    if kind == KIND_FIELD:
        payload = np.ascontiguousarray(values, dtype="<c16").view("<f8")
    else:
        payload = np.ascontiguousarray(values, dtype="<f8")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload.tobytes())
        if kind == KIND_PHASE:
            fh.write(obj.mask.astype(np.uint8).tobytes())


def _parse_header(buf: bytes) -> FieldHeader:
    if len(buf) < _HEADER.size:
        raise FileFormatError("file shorter than the field header")
    magic, kind, w, h, pitch, defocus = _HEADER.unpack_from(buf)
    if magic != MAGIC:
        raise FileFormatError(f"bad magic {magic!r}")
    if kind not in (KIND_FIELD, KIND_HOLOGRAM, KIND_PHASE):
        raise FileFormatError(f"unknown field kind {kind}")
    return FieldHeader(kind, w, h, pitch, defocus)


def read_field_header(path) -> FieldHeader:
    with open(path, "rb") as fh:
        return _parse_header(fh.read(_HEADER.size))


def read_field_file(path) -> GridObject:
    """Inverse of :func:`write_field_file`.

    Phase maps come back with ``wrapped=False``; the format has no flag for it.
    """
    buf = Path(path).read_bytes()
    hdr = _parse_header(buf)
    n = hdr.width * hdr.height
    floats = 2 * n if hdr.kind == KIND_FIELD else n
    expected = _HEADER.size + 8 * floats + (n if hdr.kind == KIND_PHASE else 0)
    if len(buf) != expected:
        raise FileFormatError(f"payload size {len(buf)} does not match header (expected {expected})")
    data = np.frombuffer(buf, dtype="<f8", count=floats, offset=_HEADER.size)
    if not np.all(np.isfinite(data)):
        raise FileFormatError("payload contains non-finite values")
    shape = (hdr.height, hdr.width)
    if hdr.kind == KIND_FIELD:
        values = data.view("<c16").reshape(shape).astype(np.complex128)
        return ComplexField(values, hdr.pixel_pitch)
    values = data.reshape(shape).astype(np.float64)
    if hdr.kind == KIND_HOLOGRAM:
        return Hologram(values, hdr.pixel_pitch, hdr.defocus)
    raw = np.frombuffer(buf, dtype=np.uint8, count=n, offset=_HEADER.size + 8 * floats)
    if np.any(raw > 1):
        raise FileFormatError("mask bytes must be 0 or 1")
    return PhaseMap(values, hdr.pixel_pitch, raw.reshape(shape).astype(bool), wrapped=False)


def export_pgm16(image: np.ndarray, path, lo: float, hi: float) -> None:
    """Write a binary 16-bit PGM mapping [lo, hi] linearly onto [0, 65535].

    Samples are rounded half-up and clamped; byte order is big-endian.
    """
    if not lo < hi:
        raise RangeError(f"display range must satisfy lo < hi (got {lo}, {hi})")
    img = np.asarray(image, dtype=np.float64)
    if img.ndim != 2:
        raise StbiError("PGM export needs a 2-D image")
    scaled = np.floor((img - lo) / (hi - lo) * 65535.0 + 0.5)
    samples = np.clip(np.nan_to_num(scaled, nan=0.0), 0, 65535).astype(">u2")
    h, w = img.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n65535\n".encode("ascii"))
        fh.write(samples.tobytes())


def write_manifest(path, filenames, defocus, truth_index: int | None, step: float) -> None:
    """Stack manifest: ``#`` key=value lines, then ``index,filename,defocus_um`` rows."""
    with open(path, "w", newline="") as fh:
        if truth_index is not None:
            fh.write(f"# truth_index={truth_index}\n")
        fh.write(f"# defocus_step_um={step!r}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "filename", "defocus_um"])
        for k, (name, z) in enumerate(zip(filenames, defocus)):
            w.writerow([k, name, repr(float(z))])


def read_manifest(path):
    """Return (rows, meta) where rows are (index, absolute path, defocus_um)."""
    path = Path(path)
    meta = {}
    body = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if line.startswith("#"):
                key, _, val = line[1:].strip().partition("=")
                meta[key.strip()] = val.strip()
            elif line.strip():
                body.append(line)
    reader = csv.DictReader(body)
    if reader.fieldnames != ["index", "filename", "defocus_um"]:
        raise FileFormatError("manifest header must be index,filename,defocus_um")
    rows = []
    for k, r in enumerate(reader):
        if int(r["index"]) != k:
            raise FileFormatError("manifest indices must run 0, 1, 2, ...")
        rows.append((k, path.parent / r["filename"], float(r["defocus_um"])))
    return rows, meta
