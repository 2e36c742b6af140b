"""Binary PGM (P5) and PPM (P6) reading and writing.

Header: magic, width, height, maxval as ASCII separated by whitespace
(``#`` comments allowed), one whitespace byte, then raster rows top to
bottom. Samples are one byte when maxval < 256, else two bytes big-endian.
"""

import numpy as np

from .errors import FormatError


def _tokens(buf, count):
    out, pos, n = [], 0, len(buf)
    while len(out) < count:
        while pos < n and buf[pos:pos + 1].isspace():
            pos += 1
        if pos < n and buf[pos:pos + 1] == b"#":
            while pos < n and buf[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < n and not buf[pos:pos + 1].isspace() and buf[pos:pos + 1] != b"#":
            pos += 1
        if start == pos:
            raise FormatError("truncated PNM header")
        out.append(buf[start:pos])
    return out, pos + 1


def decode(buf):
    """Return an integer array (H, W) for P5 or (H, W, 3) for P6, and maxval."""
    toks, pos = _tokens(buf, 4)
    magic = toks[0]
    if magic not in (b"P5", b"P6"):
        raise FormatError(f"unsupported PNM magic {magic!r}")
    try:
        w, h, maxval = (int(t) for t in toks[1:])
    except ValueError:
        raise FormatError("non-integer PNM header field") from None
    if not (0 < maxval < 65536) or w <= 0 or h <= 0:
        raise FormatError("invalid PNM dimensions or maxval")
    ch = 3 if magic == b"P6" else 1
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    need = w * h * ch * dtype.itemsize
    if len(buf) - pos < need:
        raise FormatError("truncated PNM raster")
    arr = np.frombuffer(buf, dtype=dtype, count=w * h * ch, offset=pos)
    arr = arr.reshape((h, w, 3) if ch == 3 else (h, w)).astype(np.uint16 if maxval > 255 else np.uint8)
    return arr, maxval


def encode(arr, maxval=None):
    a = np.asarray(arr)
    if a.ndim == 3 and a.shape[2] == 3:
        magic = b"P6"
    elif a.ndim == 2:
        magic = b"P5"
    else:
        raise FormatError(f"cannot encode array of shape {a.shape} as PNM")
    if maxval is None:
        maxval = 255 if a.dtype == np.uint8 or a.max(initial=0) <= 255 else 65535
    if a.min(initial=0) < 0 or a.max(initial=0) > maxval:
        raise FormatError("pixel values outside [0, maxval]")
    dtype = ">u2" if maxval > 255 else "u1"
    header = b"%s\n%d %d\n%d\n" % (magic, a.shape[1], a.shape[0], maxval)
    return header + np.ascontiguousarray(a).astype(dtype).tobytes()


def read(path):
    with open(path, "rb") as fh:
        return decode(fh.read())


def write(path, arr, maxval=None):
    with open(path, "wb") as fh:
        fh.write(encode(arr, maxval))


def read_gray(path):
    """Image as float64 in [0, 1]; colour is averaged to gray."""
    arr, maxval = read(path)
    img = arr.astype(np.float64) / maxval
    return img.mean(axis=2) if img.ndim == 3 else img


def write_gray(path, img):
    """Write a [0, 1] float image as 8-bit PGM (values clipped)."""
    q = np.rint(np.clip(np.asarray(img, dtype=np.float64), 0.0, 1.0) * 255).astype(np.uint8)
    write(path, q, 255)
