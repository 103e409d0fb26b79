"""Fixed-width bit packing of token ids.

Every token occupies exactly ``b`` bits and a group of ``L`` tokens occupies
``ceil(L*b/8)`` bytes.  Bits are laid out most-significant-first within each
group so that unsigned byte-wise comparison of two packed groups equals
lexicographic comparison of their token-id sequences; trailing pad bits in the
last byte are zero.
"""

from __future__ import annotations

import numpy as np


class PackError(ValueError):
    pass


def bit_width(vocab_size: int) -> int:
    """Bits needed per token id for ids in [0, vocab_size)."""
    if vocab_size < 1:
        raise PackError("vocabulary size must be positive")
    return max(1, int(vocab_size - 1).bit_length())


def group_bytes(length: int, bits: int) -> int:
    """Byte size of a packed group of `length` tokens at `bits` bits each."""
    return (length * bits + 7) // 8


def pack(tokens, bits: int) -> bytes:
    """Pack a token sequence into bytes, MSB-first, zero-padded at the end."""
    toks = np.asarray(tokens, dtype=np.uint64)
    if toks.ndim != 1:
        raise PackError("expected a 1-D token sequence")
    if toks.size and int(toks.max()) >= (1 << bits):
        raise PackError("token overflows bit width")
    return pack_matrix(toks.reshape(1, -1), bits).tobytes()


def unpack(data: bytes, bits: int, count: int) -> np.ndarray:
    """Inverse of pack(): recover `count` token ids from `data`."""
    need = group_bytes(count, bits)
    if len(data) < need:
        raise PackError(f"need {need} bytes to unpack {count} tokens, got {len(data)}")
    arr = np.frombuffer(data[:need], dtype=np.uint8).reshape(1, need)
    return unpack_matrix(arr, bits, count)[0]


def pack_matrix(rows: np.ndarray, bits: int) -> np.ndarray:
    """Pack each row of an (n, L) id matrix into an (n, group_bytes) uint8 matrix."""
    rows = np.ascontiguousarray(rows, dtype=np.uint32)
    n, length = rows.shape
    nbytes = group_bytes(length, bits)
    if n == 0:
        return np.empty((0, nbytes), dtype=np.uint8)
    octets = rows.astype(">u4").view(np.uint8).reshape(n, length, 4)
    bit_rows = np.unpackbits(octets, axis=2)[:, :, 32 - bits:].reshape(n, length * bits)
    pad = nbytes * 8 - length * bits
    if pad:
        bit_rows = np.concatenate(
            [bit_rows, np.zeros((n, pad), dtype=np.uint8)], axis=1
        )
    return np.packbits(bit_rows, axis=1)


def unpack_matrix(packed: np.ndarray, bits: int, length: int) -> np.ndarray:
    """Inverse of pack_matrix(): (n, group_bytes) uint8 -> (n, length) uint32."""
    packed = np.ascontiguousarray(packed, dtype=np.uint8)
    n = packed.shape[0]
    if n == 0:
        return np.empty((0, length), dtype=np.uint32)
    bit_rows = np.unpackbits(packed, axis=1)[:, : length * bits].reshape(n, length, bits)
    full = np.zeros((n, length, 32), dtype=np.uint8)
    full[:, :, 32 - bits:] = bit_rows
    return np.packbits(full, axis=2).view(">u4").reshape(n, length).astype(np.uint32)


def pack_stream(tokens: np.ndarray, bits: int) -> bytes:
    """Pack a flat token stream (no per-group padding except the final byte)."""
    toks = np.ascontiguousarray(tokens, dtype=np.uint32)
    if toks.size and int(toks.max()) >= (1 << bits):
        raise PackError("token overflows bit width")
    if toks.size == 0:
        return b""
    octets = toks.astype(">u4").view(np.uint8).reshape(-1, 4)
    bit_rows = np.unpackbits(octets, axis=1)[:, 32 - bits:].reshape(-1)
    return np.packbits(bit_rows).tobytes()


def unpack_stream_slice(buf, bits: int, start: int, stop: int) -> np.ndarray:
    """Decode tokens [start, stop) from a packed stream (bytes or mmap)."""
    if stop <= start:
        return np.empty(0, dtype=np.uint32)
    first_byte = (start * bits) // 8
    last_byte = (stop * bits + 7) // 8
    chunk = np.frombuffer(buf[first_byte:last_byte], dtype=np.uint8)
    bit_arr = np.unpackbits(chunk)
    offset = start * bits - first_byte * 8
    count = stop - start
    bit_rows = bit_arr[offset: offset + count * bits].reshape(count, bits)
    full = np.zeros((count, 32), dtype=np.uint8)
    full[:, 32 - bits:] = bit_rows
    return np.packbits(full, axis=1).view(">u4").reshape(count).astype(np.uint32)


def prefix_bounds(pattern, bits: int, length: int) -> tuple[bytes, bytes]:
    """Smallest and largest packed `length`-token group starting with `pattern`.

    Any packed group g has `pattern` as its token prefix iff lo <= g <= hi
    under byte comparison, which makes prefix range search a plain bisect.
    """
    pat = np.asarray(pattern, dtype=np.uint64)
    ell = pat.size
    if ell > length:
        raise PackError("pattern longer than group length")
    nbytes = group_bytes(length, bits)
    used_bits = ell * bits
    base = bytearray(pack(pat, bits))
    base.extend(b"\x00" * (nbytes - len(base)))
    lo = bytes(base)
    hi = bytearray(lo)
    full_bytes, rem = divmod(used_bits, 8)
    if rem:
        hi[full_bytes] |= (1 << (8 - rem)) - 1
        full_bytes += 1
    for i in range(full_bytes, nbytes):
        hi[i] = 0xFF
    return lo, bytes(hi)
