"""File formats: image input, jet channel dumps, feature caches, NSC models.

Feature cache (``.bin``), all integers little-endian::

    magic   b"JPFC"   version u16
    records until EOF, each:
        u16 path length, path (utf-8)
        u16 label length, label (utf-8)
        16 bytes config fingerprint (ascii hex)
        u32 feature count, then that many float64

Model file (``.nsc``)::

    magic   b"JPNS"   version u16   C u32   feature_dim u32
    per class: u16 label length, label (utf-8), u32 n_c,
               basis as dim * n_c float64, column-major
"""

from __future__ import annotations

import csv
import io
import os
import struct
from pathlib import Path

import numpy as np
from PIL import Image

from .classify import ClassModel

__all__ = [
    "load_image",
    "load_models",
    "read_feature_cache",
    "save_channel",
    "save_models",
    "write_feature_cache",
    "write_feature_csv",
]

CACHE_MAGIC = b"JPFC"
MODEL_MAGIC = b"JPNS"
FORMAT_VERSION = 1
_F64 = np.dtype("<f8")


def load_image(path) -> np.ndarray:
    """Grayscale float64 image; colour channels are averaged."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"image not found: {path}")
    with Image.open(path) as im:
        if im.mode in ("I;16", "I;16B", "I;16L", "I", "F", "L"):
            arr = np.asarray(im, dtype=np.float64)
        else:
            arr = np.asarray(im.convert("RGB"), dtype=np.float64).mean(axis=2)
    return arr


def save_channel(path, channel) -> None:
    """Write one 2-D array as CSV or 16-bit binary PGM, chosen by extension.

    PGM output is affinely rescaled to the full 0..65535 range.
    """
    path = Path(path)
    channel = np.asarray(channel, dtype=np.float64)
    ext = path.suffix.lower()
    if ext == ".csv":
        np.savetxt(path, channel, delimiter=",", fmt="%.17g")
    elif ext == ".pgm":
        lo, hi = channel.min(), channel.max()
        scale = 65535.0 / (hi - lo) if hi > lo else 0.0
        data = np.rint((channel - lo) * scale).astype(">u2")
        h, w = channel.shape
        with open(path, "wb") as f:
            f.write(f"P5\n{w} {h}\n65535\n".encode("ascii"))
            f.write(data.tobytes())
    else:
        raise ValueError(f"unsupported dump format {ext!r}; use .csv or .pgm")


def _put_str(buf: io.BufferedIOBase, s: str) -> None:
    raw = str(s).encode("utf-8")
    buf.write(struct.pack("<H", len(raw)))
    buf.write(raw)


def _get_str(buf) -> str:
    (n,) = struct.unpack("<H", _read_exact(buf, 2))
    return _read_exact(buf, n).decode("utf-8")


def _read_exact(buf, n: int) -> bytes:
    data = buf.read(n)
    if len(data) != n:
        raise ValueError("truncated file")
    return data


def write_feature_cache(path, records) -> None:
    """``records`` yields ``(path, label, fingerprint, values)`` tuples.

    Written to a temporary file and renamed, so readers never see a partial
    cache.
    """
    path = Path(path)
    tmp = path.with_name(path.name + f".tmp{os.getpid()}")
    with open(tmp, "wb") as f:
        f.write(CACHE_MAGIC + struct.pack("<H", FORMAT_VERSION))
        for rel, label, fp, values in records:
            fp = fp.encode("ascii")
            if len(fp) != 16:
                raise ValueError(f"fingerprint must be 16 hex chars, got {fp!r}")
            values = np.asarray(values, dtype=_F64)
            _put_str(f, rel)
            _put_str(f, label)
            f.write(fp)
            f.write(struct.pack("<I", values.size))
            f.write(values.tobytes())
    os.replace(tmp, path)


def read_feature_cache(path) -> list[tuple[str, str, str, np.ndarray]]:
    data = Path(path).read_bytes()
    if len(data) < 6 or data[:4] != CACHE_MAGIC:
        raise ValueError(f"{path} is not a feature cache")
    (version,) = struct.unpack("<H", data[4:6])
    if version != FORMAT_VERSION:
        raise ValueError(f"{path}: unsupported cache version {version}")
    f = io.BytesIO(data)
    f.seek(6)
    out = []
    while f.tell() < len(data):
        rel = _get_str(f)
        label = _get_str(f)
        fp = _read_exact(f, 16).decode("ascii")
        (count,) = struct.unpack("<I", _read_exact(f, 4))
        values = np.frombuffer(_read_exact(f, 8 * count), dtype=_F64).astype(np.float64)
        out.append((rel, label, fp, values))
    return out


def write_feature_csv(stream_or_path, records) -> None:
    """CSV export with header ``path,label,f0..f{d-1}``."""
    records = list(records)
    if isinstance(stream_or_path, (str, os.PathLike)):
        with open(stream_or_path, "w", newline="") as f:
            write_feature_csv(f, records)
        return
    dim = len(records[0][-1]) if records else 0
    w = csv.writer(stream_or_path, lineterminator="\n")
    w.writerow(["path", "label"] + [f"f{i}" for i in range(dim)])
    for rec in records:
        rel, label, values = rec[0], rec[1], rec[-1]
        w.writerow([rel, label] + [repr(float(v)) for v in values])


def save_models(path, models: list[ClassModel]) -> None:
    if not models:
        raise ValueError("no models to save")
    dim = models[0].feature_dim
    with open(path, "wb") as f:
        f.write(MODEL_MAGIC + struct.pack("<HII", FORMAT_VERSION, len(models), dim))
        for m in models:
            if m.feature_dim != dim:
                raise ValueError("models disagree on feature dimension")
            _put_str(f, m.label)
            f.write(struct.pack("<I", m.subspace_dim))
            f.write(np.asarray(m.basis, dtype=_F64).tobytes(order="F"))


def load_models(path) -> list[ClassModel]:
    """Read models back; labels come back as strings."""
    with open(path, "rb") as f:
        head = _read_exact(f, 14)
        if head[:4] != MODEL_MAGIC:
            raise ValueError(f"{path} is not an NSC model file")
        version, n_classes, dim = struct.unpack("<HII", head[4:])
        if version != FORMAT_VERSION:
            raise ValueError(f"{path}: unsupported model version {version}")
        models = []
        for _ in range(n_classes):
            label = _get_str(f)
            (n_c,) = struct.unpack("<I", _read_exact(f, 4))
            raw = np.frombuffer(_read_exact(f, 8 * dim * n_c), dtype=_F64)
            basis = raw.reshape((dim, n_c), order="F").astype(np.float64)
            models.append(ClassModel(label, basis))
    return models
