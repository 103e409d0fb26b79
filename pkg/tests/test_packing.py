import numpy as np
import pytest

from softgrep.packing import (
    PackError,
    bit_width,
    group_bytes,
    pack,
    pack_matrix,
    pack_stream,
    prefix_bounds,
    unpack,
    unpack_matrix,
    unpack_stream_slice,
)


def test_bit_width_known_values():
    assert bit_width(400_000) == 19
    assert bit_width(2) == 1
    assert bit_width(1) == 1
    assert bit_width(524_288) == 19
    assert bit_width(524_289) == 20


def test_entry_size_l12_v400k():
    assert group_bytes(12, bit_width(400_000)) == 29


def test_entry_size_one_bit():
    assert group_bytes(1, bit_width(2)) == 1


def test_pack_rejects_overflow():
    with pytest.raises(PackError, match="overflows"):
        pack([4], 2)


def test_roundtrip_simple():
    tokens = [5, 0, 3, 7]
    data = pack(tokens, 3)
    assert len(data) == group_bytes(4, 3)
    assert unpack(data, 3, 4).tolist() == tokens


def test_roundtrip_random():
    rng = np.random.default_rng(0)
    for _ in range(300):
        bits = int(rng.integers(1, 25))
        length = int(rng.integers(1, 16))
        tokens = rng.integers(0, 1 << bits, size=length)
        assert unpack(pack(tokens, bits), bits, length).tolist() == tokens.tolist()


def test_matrix_matches_scalar_path():
    rng = np.random.default_rng(1)
    rows = rng.integers(0, 1 << 13, size=(64, 12), dtype=np.uint32)
    packed = pack_matrix(rows, 13)
    for i in range(rows.shape[0]):
        assert packed[i].tobytes() == pack(rows[i], 13)
    back = unpack_matrix(packed, 13, 12)
    assert np.array_equal(back, rows)


def test_byte_order_equals_token_order():
    # packed entries must sort exactly like their token sequences
    rng = np.random.default_rng(2)
    for bits in (3, 7, 13, 19):
        rows = rng.integers(0, 1 << bits, size=(200, 5), dtype=np.uint32)
        packed = [pack(r, bits) for r in rows]
        by_bytes = sorted(range(200), key=lambda i: packed[i])
        by_tokens = sorted(range(200), key=lambda i: tuple(rows[i]))
        assert [tuple(rows[i]) for i in by_bytes] == [tuple(rows[i]) for i in by_tokens]


def test_stream_roundtrip_and_slices():
    rng = np.random.default_rng(3)
    bits = 11
    tokens = rng.integers(0, 1 << bits, size=997, dtype=np.uint32)
    blob = pack_stream(tokens, bits)
    assert unpack_stream_slice(blob, bits, 0, 997).tolist() == tokens.tolist()
    for _ in range(50):
        a, b = sorted(rng.integers(0, 998, size=2))
        assert unpack_stream_slice(blob, bits, a, b).tolist() == tokens[a:b].tolist()


def test_prefix_bounds_bracket_exactly():
    rng = np.random.default_rng(4)
    bits, length = 5, 4
    rows = rng.integers(0, 1 << bits, size=(500, length), dtype=np.uint32)
    packed = sorted(pack(r, bits) for r in rows)
    for plen in (1, 2, 3, 4):
        pat = rows[rng.integers(0, 500)][:plen]
        lo, hi = prefix_bounds(pat, bits, length)
        inside = [p for p in packed if lo <= p <= hi]
        expected = [
            pack(r, bits) for r in rows if tuple(r[:plen]) == tuple(pat)
        ]
        assert sorted(inside) == sorted(expected)
