"""Matrix, record and image files.

* CSV matrices: a header line ``m,n`` followed by ``m`` rows of ``n``
  values written with 17 significant digits, so a round trip is exact.
* Records (lists of dicts or dataclasses) as CSV with a header or as JSON.
* Binary PGM (P5) images with maxval <= 255, read into ``[0, 1]``.
"""

import csv
import dataclasses
import enum
import io
import json
import math
import os

import numpy as np


class ParseError(ValueError):
    """Malformed input; carries the 1-based line and/or byte offset."""

    def __init__(self, msg, line=None, offset=None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if offset is not None:
            where.append(f"offset {offset}")
        super().__init__(f"{msg} ({', '.join(where)})" if where else msg)
        self.line = line
        self.offset = offset


# --- CSV matrices -----------------------------------------------------------

def write_matrix_csv(A, path):
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2:
        raise ValueError("expected a 2-d matrix")
    with open(path, "w", newline="") as fh:
        fh.write(f"{A.shape[0]},{A.shape[1]}\n")
        for row in A:
            fh.write(",".join(f"{x:.17g}" for x in row) + "\n")


def read_matrix_csv(path):
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ParseError("empty file", line=1)
    try:
        m, n = (int(x) for x in lines[0].split(","))
    except ValueError:
        raise ParseError("header must be 'm,n'", line=1) from None
    if m < 0 or n < 0:
        raise ParseError("negative dimensions", line=1)
    body = [ln for ln in lines[1:]]
    while body and not body[-1].strip():
        body.pop()
    if len(body) != m:
        raise ParseError(f"expected {m} rows, found {len(body)}", line=len(lines) + 1)
    A = np.empty((m, n))
    for i, ln in enumerate(body):
        cells = ln.split(",")
        if len(cells) != n:
            raise ParseError(f"expected {n} values, found {len(cells)}", line=i + 2)
        for j, c in enumerate(cells):
            try:
                A[i, j] = float(c)
            except ValueError:
                raise ParseError(f"bad number {c!r} in column {j + 1}", line=i + 2) from None
    return A


# --- PGM images -------------------------------------------------------------

def _pgm_tokens(data, count, pos):
    """Read `count` whitespace-separated header tokens, skipping comments."""
    out = []
    n = len(data)
    while len(out) < count:
        while pos < n and (chr(data[pos]).isspace() or data[pos] == ord("#")):
            if data[pos] == ord("#"):
                while pos < n and data[pos] not in (10, 13):
                    pos += 1
            else:
                pos += 1
        start = pos
        while pos < n and not chr(data[pos]).isspace() and data[pos] != ord("#"):
            pos += 1
        if start == pos:
            raise ParseError("truncated PGM header", offset=pos)
        out.append((data[start:pos].decode("ascii", "replace"), start))
    return out, pos


def read_pgm(path):
    """Decode a binary P5 image into a ``(height, width)`` array in ``[0, 1]``."""
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:2] != b"P5":
        raise ParseError("not a binary PGM (magic 'P5' missing)", offset=0)
    toks, pos = _pgm_tokens(data, 3, 2)
    vals = []
    for text, off in toks:
        if not text.isdigit():
            raise ParseError(f"bad header field {text!r}", offset=off)
        vals.append(int(text))
    width, height, maxval = vals
    if not 0 < maxval <= 255:
        raise ParseError(f"maxval {maxval} outside 1..255", offset=toks[2][1])
    if pos >= len(data) or not chr(data[pos]).isspace():
        raise ParseError("missing whitespace after header", offset=pos)
    pos += 1
    raster = data[pos:pos + width * height]
    if len(raster) < width * height:
        raise ParseError(f"raster has {len(raster)} of {width * height} bytes",
                         offset=pos + len(raster))
    img = np.frombuffer(raster, dtype=np.uint8).reshape(height, width)
    if (img > maxval).any():
        raise ParseError("pixel exceeds maxval", offset=pos + int(np.argmax(img.ravel() > maxval)))
    return img.astype(np.float64) / maxval


def write_pgm(img, path, maxval=255):
    """Write values in ``[0, 1]`` as a P5 image, rounding to `maxval` levels."""
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 2:
        raise ValueError("image must be 2-d")
    if not 0 < maxval <= 255:
        raise ValueError("maxval must lie in 1..255")
    px = np.rint(np.clip(img, 0.0, 1.0) * maxval).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{img.shape[1]} {img.shape[0]}\n{maxval}\n".encode("ascii"))
        fh.write(px.tobytes())


def images_to_matrix(paths):
    """Stack images as columns, each vectorized in raster (row-major) order."""
    imgs = [read_pgm(p) for p in paths]
    if not imgs:
        raise ValueError("no images given")
    shape = imgs[0].shape
    if any(im.shape != shape for im in imgs):
        raise ValueError("images differ in size")
    return np.column_stack([im.ravel() for im in imgs])


def images_to_tensor(paths):
    """Stack images along a third mode: ``(height, width, count)``."""
    imgs = [read_pgm(p) for p in paths]
    if not imgs:
        raise ValueError("no images given")
    if any(im.shape != imgs[0].shape for im in imgs):
        raise ValueError("images differ in size")
    return np.stack(imgs, axis=2)


def load_matrix(path, fmt=None):
    """Load a matrix from CSV, or a PGM image as a single column."""
    fmt = fmt or os.path.splitext(str(path))[1].lstrip(".").lower()
    if fmt == "csv":
        return read_matrix_csv(path)
    if fmt == "pgm":
        return read_pgm(path).reshape(-1, 1)
    raise ValueError(f"unknown matrix format {fmt!r}")


# --- records ----------------------------------------------------------------

def _plain(value):
    if isinstance(value, enum.Enum):
        return value.value
    if isinstance(value, np.generic):
        return value.item()
    return value


def _as_dict(rec):
    if dataclasses.is_dataclass(rec):
        rec = dataclasses.asdict(rec)
    return {k: _plain(v) for k, v in rec.items()}


def _fields(records, fields):
    if fields is not None:
        return list(fields)
    if records:
        return list(records[0])
    return []


def records_to_csv(records, fields=None):
    rows = [_as_dict(r) for r in records]
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=_fields(rows, fields), lineterminator="\n")
    w.writeheader()
    for row in rows:
        w.writerow({k: (f"{v:.17g}" if isinstance(v, float) else v) for k, v in row.items()})
    return buf.getvalue()


def records_to_json(records):
    def clean(v):
        return None if isinstance(v, float) and not math.isfinite(v) else v
    rows = [{k: clean(v) for k, v in _as_dict(r).items()} for r in records]
    return json.dumps(rows, indent=1)


def emit(records, fmt, path, fields=None):
    """Write records as ``csv`` or ``json``; '-' writes to stdout."""
    if fmt == "csv":
        text = records_to_csv(records, fields)
    elif fmt == "json":
        text = records_to_json(records)
    else:
        raise ValueError(f"unknown record format {fmt!r}")
    if str(path) == "-":
        print(text, end="" if text.endswith("\n") else "\n")
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)
