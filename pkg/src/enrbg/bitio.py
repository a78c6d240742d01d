"""Packed-bit file I/O and bit/byte conversion helpers.

Bit order is MSB-first throughout: the first bit of a stream becomes the
most significant bit of the first byte. Packed-bit files carry a "QBIT"
magic and a 64-bit little-endian bit count, so a trailing partial byte is
unambiguous.
"""

from __future__ import annotations

import struct

import numpy as np

from .errors import FormatError, ValidationError

QBIT_MAGIC = b"QBIT"
_HEADER = struct.Struct("<4sQ")


def as_bit_array(bits) -> np.ndarray:
    """Coerce array-like 0/1 data to a flat uint8 array."""
    arr = np.asarray(bits)
    if arr.dtype != np.uint8:
        arr = arr.astype(np.uint8)
    arr = arr.ravel()
    if arr.size and arr.max() > 1:
        raise ValidationError("bit array contains values other than 0 and 1")
    return arr


def pack_bits(bits) -> bytes:
    """Pack bits MSB-first; the final byte is zero-padded on the right."""
    arr = as_bit_array(bits)
    return np.packbits(arr).tobytes()


def unpack_bits(data: bytes, n_bits: int) -> np.ndarray:
    """Unpack the first n_bits from MSB-first packed bytes."""
    if n_bits < 0:
        raise ValidationError("n_bits must be non-negative")
    if len(data) * 8 < n_bits:
        raise ValidationError(f"need {n_bits} bits but only {len(data) * 8} packed")
    return np.unpackbits(np.frombuffer(data, dtype=np.uint8), count=n_bits)


def bits_to_bytes(bits) -> bytes:
    """Repack a bit sequence to whole bytes, dropping any trailing partial byte."""
    arr = as_bit_array(bits)
    n = arr.size - arr.size % 8
    return np.packbits(arr[:n]).tobytes()


def write_bit_file(path, bits) -> int:
    """Write a QBIT packed-bit file; returns the number of bits written."""
    arr = as_bit_array(bits)
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(QBIT_MAGIC, arr.size))
        fh.write(np.packbits(arr).tobytes())
    return arr.size


def read_bit_file(path) -> np.ndarray:
    """Read a QBIT packed-bit file back into a uint8 bit array."""
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < _HEADER.size:
        raise FormatError(f"{path}: truncated header at byte offset {len(data)}")
    magic, n_bits = _HEADER.unpack_from(data)
    if magic != QBIT_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r} at byte offset 0")
    payload = data[_HEADER.size:]
    need = (n_bits + 7) // 8
    if len(payload) < need:
        raise FormatError(
            f"{path}: payload short at byte offset {_HEADER.size + len(payload)} "
            f"(need {need} bytes for {n_bits} bits)"
        )
    return unpack_bits(payload, n_bits)


def write_ascii_bits(path, bits) -> int:
    """Export bits as ASCII '0'/'1' characters (external test-suite input)."""
    arr = as_bit_array(bits)
    with open(path, "wb") as fh:
        fh.write((arr + ord("0")).astype(np.uint8).tobytes())
    return arr.size


def write_packed_bits(path, bits) -> int:
    """Export bits as headerless packed bytes (external test-suite input).

    Only whole bytes are written; a trailing partial byte is dropped.
    """
    data = bits_to_bytes(bits)
    with open(path, "wb") as fh:
        fh.write(data)
    return len(data) * 8
