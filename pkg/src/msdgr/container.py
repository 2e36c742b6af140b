"""Reader and writer for the MSDG binary array container.

Layout (all integers 4-byte little-endian unsigned)::

    b"MSDG" | version | count | count x record
    record = name_len | utf-8 name | rank | rank x dim | float32 LE data

Arrays are stored as float32 in row-major order. Reading a file and writing
the result back reproduces the input byte for byte.
"""

import struct
from collections import OrderedDict

import numpy as np

from .errors import FormatError

MAGIC = b"MSDG"
VERSION = 1

_U32 = struct.Struct("<I")


def dumps(arrays, version=VERSION):
    """Serialize a mapping of name -> array to bytes (insertion order kept)."""
    parts = [MAGIC, _U32.pack(version), _U32.pack(len(arrays))]
    for name, arr in arrays.items():
        a = np.asarray(arr)
        if not np.all(np.isfinite(a)):
            raise FormatError(f"array {name!r} holds non-finite values")
        raw = name.encode("utf-8")
        parts.append(_U32.pack(len(raw)))
        parts.append(raw)
        parts.append(_U32.pack(a.ndim))
        parts.extend(_U32.pack(d) for d in a.shape)
        parts.append(np.ascontiguousarray(a, dtype="<f4").tobytes())
    return b"".join(parts)


def loads(buf):
    """Parse container bytes into an ordered dict of float32 arrays."""
    view = memoryview(buf)
    if bytes(view[:4]) != MAGIC:
        raise FormatError("not an MSDG container (bad magic)")
    pos = 4

    def u32():
        nonlocal pos
        if pos + 4 > len(view):
            raise FormatError("truncated container")
        (v,) = _U32.unpack_from(view, pos)
        pos += 4
        return v

    version = u32()
    if version != VERSION:
        raise FormatError(f"unsupported container version {version}")
    out = OrderedDict()
    for _ in range(u32()):
        n = u32()
        if pos + n > len(view):
            raise FormatError("truncated array name")
        try:
            name = bytes(view[pos:pos + n]).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise FormatError("array name is not valid UTF-8") from exc
        pos += n
        shape = tuple(u32() for _ in range(u32()))
        size = int(np.prod(shape, dtype=np.int64)) if shape else 1
        nbytes = 4 * size
        if pos + nbytes > len(view):
            raise FormatError(f"truncated data for array {name!r}")
        arr = np.frombuffer(view[pos:pos + nbytes], dtype="<f4").reshape(shape)
        pos += nbytes
        if name in out:
            raise FormatError(f"duplicate array name {name!r}")
        out[name] = arr.copy()
    if pos != len(view):
        raise FormatError("trailing bytes after last array")
    return out


def save(path, arrays):
    with open(path, "wb") as fh:
        fh.write(dumps(arrays))


def load(path):
    with open(path, "rb") as fh:
        return loads(fh.read())


def encode_text(text):
    """Pack a string into a float32-exact array of UTF-8 byte values."""
    return np.frombuffer(text.encode("utf-8"), dtype=np.uint8).astype(np.float32)


def decode_text(arr):
    return bytes(np.asarray(arr, dtype=np.float32).astype(np.uint8)).decode("utf-8")


def encode_int(value):
    """Pack a non-negative 64-bit integer into four float32-exact 16-bit limbs."""
    value = int(value)
    if not 0 <= value < 1 << 64:
        raise ValueError("integer out of range for container metadata")
    return np.array([(value >> (16 * k)) & 0xFFFF for k in range(4)], dtype=np.float32)


def decode_int(arr):
    limbs = np.asarray(arr, dtype=np.float32).astype(np.int64)
    return sum(int(v) << (16 * k) for k, v in enumerate(limbs))
