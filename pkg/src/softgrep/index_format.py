"""On-disk layout of a staged index directory.

Files (integer fields little-endian, fixed width; bit-exact layout in
FORMAT.md):
  meta        JSON: dimensions, counts and per-file sha256 checksums
  X.rle       run records: packed L-gram entry, occurrence count u64,
              position-list offset u64
  Y.dir       one record per block of B runs: first entry, last entry,
              byte offset u64, byte length u64, cumulative occurrence
              count u64, cumulative run count u64
  pos.bin     u64 window-start positions grouped per run, run order
  kgram2.set  magic + count + sorted u64 keys of corpus 2-grams of
              high-frequency words
  kgram3.set  same for rank-sum-limited 3-grams
  tokens.bin  the tokenized corpus file (see corpus.py)
  vocab.txt   word<TAB>count per line, line number = token id
"""

from __future__ import annotations

import hashlib
import json
import os
import struct
from pathlib import Path

import numpy as np

FORMAT_VERSION = 1

META_FILE = "meta"
X_FILE = "X.rle"
Y_FILE = "Y.dir"
POS_FILE = "pos.bin"
KGRAM2_FILE = "kgram2.set"
KGRAM3_FILE = "kgram3.set"
TOKENS_FILE = "tokens.bin"
VOCAB_FILE = "vocab.txt"

KGRAM2_MAGIC = b"SGK2"
KGRAM3_MAGIC = b"SGK3"
_KGRAM_HEADER = struct.Struct("<4sQ")

RANK_LIMIT_2 = 100_000   # both words of a cached 2-gram rank in the top 100K
RANK_SUM_LIMIT_3 = 10_000  # the three ranks of a cached 3-gram sum to 10K or less

DEFAULT_L = 12
DEFAULT_B = 192


class IndexFormatError(ValueError):
    pass


def run_record_size(entry_bytes: int) -> int:
    return entry_bytes + 16


def y_record_size(entry_bytes: int) -> int:
    return 2 * entry_bytes + 32


def bigram_key(a, b):
    base = RANK_LIMIT_2 + 1
    return np.uint64(a) * np.uint64(base) + np.uint64(b)


def trigram_key(a, b, c):
    base = np.uint64(RANK_SUM_LIMIT_3 + 1)
    return (np.uint64(a) * base + np.uint64(b)) * base + np.uint64(c)


def bigram_qualifies(a: int, b: int) -> bool:
    return 1 <= a <= RANK_LIMIT_2 and 1 <= b <= RANK_LIMIT_2


def trigram_qualifies(a: int, b: int, c: int) -> bool:
    return a >= 1 and b >= 1 and c >= 1 and a + b + c <= RANK_SUM_LIMIT_3


def write_kgram_set(path: str | os.PathLike, magic: bytes, keys: np.ndarray) -> None:
    keys = np.asarray(keys, dtype="<u8")
    with open(path, "wb") as f:
        f.write(_KGRAM_HEADER.pack(magic, keys.size))
        f.write(keys.tobytes())


def read_kgram_set(path: str | os.PathLike, magic: bytes) -> np.ndarray:
    with open(path, "rb") as f:
        raw_magic, count = _KGRAM_HEADER.unpack(f.read(_KGRAM_HEADER.size))
        if raw_magic != magic:
            raise IndexFormatError(f"bad k-gram table magic in {path}")
        return np.frombuffer(f.read(count * 8), dtype="<u8")


def file_sha256(path: str | os.PathLike) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_meta(index_dir: str | os.PathLike, meta: dict) -> None:
    path = Path(index_dir) / META_FILE
    with open(path, "w", encoding="utf-8") as f:
        json.dump(meta, f, indent=2, sort_keys=True)
        f.write("\n")


def read_meta(index_dir: str | os.PathLike) -> dict:
    path = Path(index_dir) / META_FILE
    if not path.exists():
        raise IndexFormatError(f"no index found at {index_dir}")
    with open(path, "r", encoding="utf-8") as f:
        meta = json.load(f)
    if meta.get("format_version") != FORMAT_VERSION:
        raise IndexFormatError(f"unsupported index version: {meta.get('format_version')}")
    return meta
