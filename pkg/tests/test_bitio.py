import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from enrbg import bitio
from enrbg.errors import FormatError, ValidationError


@given(st.lists(st.integers(0, 1), max_size=200))
def test_pack_unpack_roundtrip(bits):
    packed = bitio.pack_bits(bits)
    assert bitio.unpack_bits(packed, len(bits)).tolist() == bits


def test_pack_bits_msb_first():
    assert bitio.pack_bits([1, 0, 1, 0]) == b"\xa0"
    assert bitio.pack_bits([0, 0, 0, 0, 0, 0, 0, 1, 1]) == b"\x01\x80"


def test_as_bit_array_rejects_non_bits():
    with pytest.raises(ValidationError):
        bitio.as_bit_array([0, 2, 1])


def test_bit_file_roundtrip(tmp_path):
    bits = np.array([1, 0, 1, 1, 0, 0, 1, 0, 1, 1, 1], dtype=np.uint8)
    path = tmp_path / "x.qbit"
    assert bitio.write_bit_file(path, bits) == 11
    assert bitio.read_bit_file(path).tolist() == bits.tolist()


def test_bit_file_bad_magic(tmp_path):
    path = tmp_path / "x.qbit"
    path.write_bytes(b"NOPE" + bytes(12))
    with pytest.raises(FormatError, match="byte offset 0"):
        bitio.read_bit_file(path)


def test_bit_file_truncated_header(tmp_path):
    path = tmp_path / "x.qbit"
    path.write_bytes(b"QBIT\x01")
    with pytest.raises(FormatError, match="byte offset 5"):
        bitio.read_bit_file(path)


def test_bit_file_short_payload(tmp_path):
    path = tmp_path / "x.qbit"
    path.write_bytes(b"QBIT" + (100).to_bytes(8, "little") + b"\xff")
    with pytest.raises(FormatError, match="payload short"):
        bitio.read_bit_file(path)


def test_ascii_export(tmp_path):
    path = tmp_path / "bits.txt"
    bitio.write_ascii_bits(path, [1, 0, 1, 1])
    assert path.read_bytes() == b"1011"


def test_packed_export_drops_partial_byte(tmp_path):
    path = tmp_path / "bits.bin"
    n = bitio.write_packed_bits(path, [1] * 8 + [0] * 8 + [1, 1, 1])
    assert n == 16
    assert path.read_bytes() == b"\xff\x00"


def test_bits_to_bytes():
    assert bitio.bits_to_bytes([1, 0, 1, 0, 1, 0, 1, 0, 1]) == b"\xaa"
