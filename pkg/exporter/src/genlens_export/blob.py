"""Writer for the CGMB weight-blob container.

The layout, shared with the consuming engine, is: magic b"CGMB", u32
version (currently 1), u32 tensor count, then one table entry per tensor in
lexicographic name order (u16 name length, utf-8 name, u8 dtype code with 0
meaning float32, u8 ndim, one u32 per dimension, u64 byte offset into the
payload), then the concatenated row-major little-endian float32 payload in
the same order, then a u32 CRC-32 over every preceding byte.  All integers
little-endian.  The fixed tensor order makes writing the same dict twice
produce identical bytes.
"""

from __future__ import annotations

import struct
import zlib

import numpy as np

MAGIC = b"CGMB"
VERSION = 1
_DTYPE_F32 = 0


def dump_tensors(tensors: dict[str, np.ndarray]) -> bytes:
    """Serialize name-to-array pairs as one CGMB byte string."""
    chunks: list[bytes] = []
    payload: list[bytes] = []
    offset = 0
    for name in sorted(tensors):
        arr = np.asarray(tensors[name], dtype="<f4", order="C")
        encoded = name.encode("utf-8")
        entry = struct.pack("<H", len(encoded)) + encoded
        entry += struct.pack("<BB", _DTYPE_F32, arr.ndim)
        entry += struct.pack(f"<{arr.ndim}I", *arr.shape)
        entry += struct.pack("<Q", offset)
        chunks.append(entry)
        raw = arr.tobytes(order="C")
        payload.append(raw)
        offset += len(raw)
    body = MAGIC + struct.pack("<II", VERSION, len(tensors)) + b"".join(chunks) + b"".join(payload)
    return body + struct.pack("<I", zlib.crc32(body) & 0xFFFFFFFF)
