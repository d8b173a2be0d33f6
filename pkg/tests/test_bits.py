import numpy as np
import pytest
from hypothesis import given, strategies as st

from mdvnizk.bits import (DecodeError, Reader, as_bits, bits_to_bytes, bits_to_ints, bits_to_str, bytes_to_bits,
                          encode_varint, int_to_bits, ints_to_bits)
from mdvnizk.rng import child, make_rng


@given(st.binary(max_size=64))
def test_bytes_bits_round_trip(data):
    assert bits_to_bytes(bytes_to_bits(data)) == data


@given(st.integers(0, 2**63 - 1))
def test_varint_round_trip(n):
    r = Reader(encode_varint(n))
    assert r.varint() == n and r.done()


@given(st.lists(st.integers(0, 4095), max_size=20))
def test_fixed_width_ints(values):
    bits = ints_to_bits(values, 12)
    assert bits_to_ints(bits, 12).tolist() == values
    for i, v in enumerate(values):
        assert int(sum(int(b) << (11 - j) for j, b in enumerate(bits[12 * i:12 * i + 12]))) == v


def test_int_to_bits_msb_first():
    assert bits_to_str(int_to_bits(6, 4)) == "0110"


def test_as_bits_rejects_non_bits():
    with pytest.raises(ValueError):
        as_bits("012")
    with pytest.raises(ValueError):
        as_bits([0, 2])


def test_reader_errors():
    with pytest.raises(DecodeError):
        Reader(b"ab").take(3)
    with pytest.raises(DecodeError):
        Reader(b"XY").expect(b"AB")
    with pytest.raises(DecodeError):
        Reader(b"\xff" * 10).varint()
    r = Reader(b"a")
    with pytest.raises(DecodeError):
        r.finish()
    with pytest.raises(DecodeError):
        bytes_to_bits(b"a", 9)


def test_rng_streams_are_reproducible_and_labeled():
    a, b = make_rng(7, "x"), make_rng(7, "x")
    assert a.bytes(16) == b.bytes(16)
    assert make_rng(7, "x").bytes(16) != make_rng(7, "y").bytes(16)
    assert child(make_rng(1), "c").bytes(8) == child(make_rng(1), "c").bytes(8)
