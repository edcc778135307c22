"""Artifact formats: PPM (P6), PBM (P4), CSV and JSON, all written atomically."""
import csv
import io
import json
import os
import tempfile

import numpy as np


def _umask():
    mask = os.umask(0)
    os.umask(mask)
    return mask


def atomic_write_bytes(path, data: bytes):
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        # mkstemp creates 0600; give the artifact ordinary permissions
        os.chmod(tmp, 0o666 & ~_umask())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def ppm_bytes(rgb):
    rgb = np.ascontiguousarray(rgb, dtype=np.uint8)
    if rgb.ndim != 3 or rgb.shape[2] != 3:
        raise ValueError("expected an (H, W, 3) uint8 array")
    h, w, _ = rgb.shape
    return f"P6\n{w} {h}\n255\n".encode("ascii") + rgb.tobytes()


def write_ppm(path, rgb):
    atomic_write_bytes(path, ppm_bytes(rgb))


def _tokens(data):
    """Yield header tokens of a netpbm file and the offset after the last one."""
    pos = 0
    out = []
    while len(out) < 4:
        while data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            pos = data.index(b"\n", pos) + 1
            continue
        start = pos
        while not data[pos:pos + 1].isspace():
            pos += 1
        out.append(data[start:pos])
        if out[0] == b"P4" and len(out) == 3:
            break
    return out, pos + 1


def read_ppm(path):
    with open(path, "rb") as fh:
        data = fh.read()
    toks, off = _tokens(data)
    if toks[0] != b"P6":
        raise ValueError("not a binary PPM (P6) file")
    w, h = int(toks[1]), int(toks[2])
    return np.frombuffer(data, dtype=np.uint8, count=w * h * 3, offset=off).reshape(h, w, 3)


def pbm_bytes(mask):
    """PBM P4; a set cell is written as 1 (black)."""
    mask = np.asarray(mask, dtype=bool)
    h, w = mask.shape
    packed = np.packbits(mask, axis=1)
    return f"P4\n{w} {h}\n".encode("ascii") + packed.tobytes()


def write_pbm(path, mask):
    atomic_write_bytes(path, pbm_bytes(mask))


def read_pbm(path):
    with open(path, "rb") as fh:
        data = fh.read()
    toks, off = _tokens(data)
    if toks[0] != b"P4":
        raise ValueError("not a binary PBM (P4) file")
    w, h = int(toks[1]), int(toks[2])
    row_bytes = (w + 7) // 8
    packed = np.frombuffer(data, dtype=np.uint8, count=row_bytes * h, offset=off).reshape(h, row_bytes)
    return np.unpackbits(packed, axis=1)[:, :w].astype(bool)


def write_json(path, obj):
    text = json.dumps(obj, indent=2, sort_keys=True, allow_nan=False)
    atomic_write_bytes(path, (text + "\n").encode("utf-8"))


def csv_bytes(header, rows):
    """CSV with floats written by repr, so values round-trip exactly."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([repr(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue().encode("utf-8")


def write_csv(path, header, rows):
    atomic_write_bytes(path, csv_bytes(header, rows))
