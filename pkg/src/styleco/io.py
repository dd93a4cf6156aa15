"""On-disk formats: PGM images, header-prefixed binary matrices, manifests,
constraint files and CSV tables."""

from __future__ import annotations

import csv
import hashlib
import json
import struct
from pathlib import Path

import numpy as np


def write_pgm(path, pixels) -> None:
    """8-bit binary PGM; float input in [0, 1] is scaled to 0..255."""
    arr = np.asarray(pixels)
    if arr.dtype != np.uint8:
        arr = np.clip(np.rint(arr * 255), 0, 255).astype(np.uint8)
    h, w = arr.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode())
        fh.write(arr.tobytes())


def read_pgm(path) -> np.ndarray:
    """Return the raw uint8 raster of a binary PGM."""
    data = Path(path).read_bytes()
    tokens, pos = [], 0
    while len(tokens) < 4:
        while data[pos : pos + 1].isspace():
            pos += 1
        if data[pos : pos + 1] == b"#":
            pos = data.index(b"\n", pos) + 1
            continue
        end = pos
        while not data[end : end + 1].isspace():
            end += 1
        tokens.append(data[pos:end])
        pos = end
    if tokens[0] != b"P5":
        raise ValueError(f"{path}: not a binary PGM")
    w, h, maxval = (int(t) for t in tokens[1:])
    if maxval != 255:
        raise ValueError(f"{path}: only 8-bit PGM supported")
    pos += 1
    return np.frombuffer(data[pos : pos + w * h], dtype=np.uint8).reshape(h, w).copy()


_MAGIC = b"STYMAT1\n"


def write_matrix(path, array, **meta) -> None:
    """Little-endian row-major matrix with a JSON header.

    Layout: magic, uint64 header length, UTF-8 JSON header (dims, dtype, and
    any extra metadata), raw data.
    """
    arr = np.asarray(array)
    dtype = np.dtype(arr.dtype).newbyteorder("<")
    header = dict(meta, dims=list(arr.shape), dtype=dtype.str)
    blob = json.dumps(header, sort_keys=True).encode()
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<Q", len(blob)))
        fh.write(blob)
        fh.write(np.ascontiguousarray(arr, dtype=dtype).tobytes())


def read_matrix(path):
    """Return (array, header dict)."""
    data = Path(path).read_bytes()
    if not data.startswith(_MAGIC):
        raise ValueError(f"{path}: not a matrix file")
    off = len(_MAGIC)
    (n,) = struct.unpack("<Q", data[off : off + 8])
    header = json.loads(data[off + 8 : off + 8 + n])
    arr = np.frombuffer(data[off + 8 + n :], dtype=np.dtype(header["dtype"]))
    return arr.reshape(header["dims"]).copy(), header


def read_manifest(path):
    """Lines of ``<mesh path> <shape_id>``; relative paths resolve against the manifest."""
    path = Path(path)
    out = []
    for lineno, line in enumerate(path.read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) == 1:
            mesh_path, sid = parts[0], Path(parts[0]).stem
        elif len(parts) == 2:
            mesh_path, sid = parts
        else:
            raise ValueError(f"{path}:{lineno}: expected '<path> <shape_id>'")
        p = Path(mesh_path)
        out.append((p if p.is_absolute() else path.parent / p, sid))
    ids = [s for _, s in out]
    if len(set(ids)) != len(ids):
        raise ValueError(f"{path}: duplicate shape ids")
    return out


def read_constraints(path):
    """Return (triplets, labels) from ``T a b c`` / ``L shape_id class`` records."""
    triplets, labels = [], {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if parts[0] == "T" and len(parts) == 4:
            triplets.append(tuple(parts[1:]))
        elif parts[0] == "L" and len(parts) == 3:
            labels[parts[1]] = parts[2]
        else:
            raise ValueError(f"{path}:{lineno}: bad constraint record {line!r}")
    return triplets, labels


def read_truth(path) -> dict:
    """CSV with a header; first column shape_id, second column the style class."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return {r[0]: r[1] for r in rows[1:] if r}


def write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def sha256_file(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()
