"""Exact pattern lookups over a staged index with a bounded disk-access
contract: count/exists resolve with at most two block fetches (one per range
boundary), and exactly one when the whole match range lives in one block.

The RAM directory stores each block's first and last entry, so a boundary
that coincides with a block edge resolves without touching the neighbouring
block; interior blocks are never read because the directory carries
cumulative occurrence counts.
"""

from __future__ import annotations

import os
import threading
from collections import OrderedDict
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import index_format as fmt
from .corpus import (
    SEPARATOR_ID,
    TokenStore,
    Vocabulary,
    read_vocabulary,
    tokenize_query,
)
from .packing import prefix_bounds, unpack_matrix

DEFAULT_CACHE_BLOCKS = 1024


class IndexLookupError(ValueError):
    pass


@dataclass
class IoCounter:
    """Per-call instrumentation: distinct block fetches and actual disk reads."""

    block_reads: int = 0
    cache_misses: int = 0
    _seen: set = field(default_factory=set)

    def record(self, block_id: int, miss: bool) -> None:
        if block_id not in self._seen:
            self._seen.add(block_id)
            self.block_reads += 1
            if miss:
                self.cache_misses += 1


@dataclass
class LookupRange:
    lo_run: int
    hi_run: int
    count: int

    @property
    def n_runs(self) -> int:
        return self.hi_run - self.lo_run


@dataclass
class _Block:
    start_run: int
    entries: np.ndarray      # S-dtype, sorted
    counts: np.ndarray       # u64
    pos_offsets: np.ndarray  # u64
    csum: np.ndarray         # cumulative counts, len == n_runs + 1


def _padded(value, eb: int) -> bytes:
    # numpy S-dtype scalars drop trailing nulls; restore the fixed width
    return bytes(value).ljust(eb, b"\x00")


class IndexReader:
    """Read-only view of an index directory; safe for concurrent use."""

    def __init__(self, index_dir: str | os.PathLike,
                 cache_blocks: int = DEFAULT_CACHE_BLOCKS):
        self.dir = Path(index_dir)
        self.meta = fmt.read_meta(self.dir)
        self.L = self.meta["L"]
        self.B = self.meta["B"]
        self.bits = self.meta["b"]
        self.entry_bytes = self.meta["entry_bytes"]
        self.rec = self.meta["run_record_size"]
        self.n = self.meta["n"]
        self.n_windows = self.meta["n_windows"]
        self.n_runs = self.meta["n_runs"]
        self.n_blocks = self.meta["n_blocks"]

        eb = self.entry_bytes
        ydtype = np.dtype([
            ("first", f"S{eb}"), ("last", f"S{eb}"),
            ("off", "<u8"), ("blen", "<u8"), ("cum", "<u8"), ("cruns", "<u8"),
        ])
        ybytes = (self.dir / fmt.Y_FILE).read_bytes()
        ydir = np.frombuffer(ybytes, dtype=ydtype)
        if ydir.size != self.n_blocks:
            raise IndexLookupError("directory size disagrees with meta")
        self._y_first = ydir["first"]
        self._y_last = ydir["last"]
        self._y_off = ydir["off"]
        self._y_blen = ydir["blen"]
        self._y_cum = ydir["cum"]
        self._y_cruns = ydir["cruns"]

        self._run_dtype = np.dtype(
            [("entry", f"S{eb}"), ("count", "<u8"), ("pos", "<u8")]
        )
        self._x_fd = os.open(self.dir / fmt.X_FILE, os.O_RDONLY)
        self._pos_fd = os.open(self.dir / fmt.POS_FILE, os.O_RDONLY)
        self.tokens = TokenStore(self.dir / fmt.TOKENS_FILE)
        self.vocabulary: Vocabulary = read_vocabulary(self.dir / fmt.VOCAB_FILE)
        self.kgram2 = fmt.read_kgram_set(self.dir / fmt.KGRAM2_FILE, fmt.KGRAM2_MAGIC)
        self.kgram3 = fmt.read_kgram_set(self.dir / fmt.KGRAM3_FILE, fmt.KGRAM3_MAGIC)

        self._cache: OrderedDict[int, _Block] = OrderedDict()
        self._cache_blocks = cache_blocks
        self._lock = threading.Lock()

    def close(self) -> None:
        os.close(self._x_fd)
        os.close(self._pos_fd)
        self.tokens.close()

    def tokenize(self, text: str):
        """Tokenize query text with the tokenizer the index was built with."""
        return tokenize_query(text, self.vocabulary,
                              self.meta.get("tokenizer", "text"))

    def clear_cache(self) -> None:
        with self._lock:
            self._cache.clear()

    def ram_bytes(self) -> int:
        """Approximate resident footprint of the directory and k-gram tables."""
        y = self.n_blocks * fmt.y_record_size(self.entry_bytes)
        return y + 8 * (self.kgram2.size + self.kgram3.size)

    # -- block fetch ------------------------------------------------------

    def _fetch_block(self, block_id: int, io: IoCounter | None) -> _Block:
        with self._lock:
            cached = self._cache.get(block_id)
            if cached is not None:
                self._cache.move_to_end(block_id)
                if io is not None:
                    io.record(block_id, miss=False)
                return cached
        off = int(self._y_off[block_id])
        blen = int(self._y_blen[block_id])
        raw = os.pread(self._x_fd, blen, off)
        runs = np.frombuffer(raw, dtype=self._run_dtype)
        block = _Block(
            start_run=int(self._y_cruns[block_id]),
            entries=runs["entry"],
            counts=runs["count"],
            pos_offsets=runs["pos"],
            csum=np.concatenate(
                [np.zeros(1, dtype=np.uint64),
                 np.cumsum(runs["count"], dtype=np.uint64)]
            ),
        )
        if io is not None:
            io.record(block_id, miss=True)
        with self._lock:
            self._cache[block_id] = block
            if len(self._cache) > self._cache_blocks:
                self._cache.popitem(last=False)
        return block

    # -- range search -----------------------------------------------------

    def _check_pattern(self, pattern) -> list[int]:
        pat = [int(t) for t in pattern]
        if not pat:
            raise IndexLookupError("empty pattern")
        if len(pat) > self.L:
            raise IndexLookupError("query exceeds index window")
        if any(t == SEPARATOR_ID for t in pat):
            raise IndexLookupError("pattern contains the document separator")
        return pat

    def find_range(self, pattern, io: IoCounter | None = None) -> LookupRange:
        """Maximal run range whose entries start with `pattern`, with its count.

        Needs at most two block fetches; one when both boundaries fall in the
        same block. A range fully determined by the RAM directory costs one
        fetch, used to validate the on-disk boundary entry.
        """
        pat = self._check_pattern(pattern)
        if io is None:
            io = IoCounter()
        lo_key, hi_key = prefix_bounds(pat, self.bits, self.L)
        total = self.n_windows
        nb = self.n_blocks

        read_blocks: list[int] = []

        a = int(np.searchsorted(self._y_first, lo_key, side="left"))
        if a == 0:
            r_lo, cum_lo = 0, 0
        elif _padded(self._y_last[a - 1], self.entry_bytes) < lo_key:
            if a < nb:
                r_lo, cum_lo = int(self._y_cruns[a]), int(self._y_cum[a])
            else:
                r_lo, cum_lo = self.n_runs, total
        else:
            block = self._fetch_block(a - 1, io)
            read_blocks.append(a - 1)
            i = int(np.searchsorted(block.entries, lo_key, side="left"))
            r_lo = block.start_run + i
            cum_lo = int(self._y_cum[a - 1]) + int(block.csum[i])

        b = int(np.searchsorted(self._y_first, hi_key, side="right"))
        if b == 0:
            r_hi, cum_hi = 0, 0
        elif _padded(self._y_last[b - 1], self.entry_bytes) <= hi_key:
            if b < nb:
                r_hi, cum_hi = int(self._y_cruns[b]), int(self._y_cum[b])
            else:
                r_hi, cum_hi = self.n_runs, total
        else:
            block = self._fetch_block(b - 1, io)
            read_blocks.append(b - 1)
            i = int(np.searchsorted(block.entries, hi_key, side="right"))
            r_hi = block.start_run + i
            cum_hi = int(self._y_cum[b - 1]) + int(block.csum[i])

        count = cum_hi - cum_lo
        if count > 0 and not read_blocks:
            # Both boundaries sit on block edges: fetch the first matching
            # block once to cross-check the directory against X itself.
            block_id = a if a < nb else nb - 1
            block = self._fetch_block(block_id, io)
            first = _padded(block.entries[0], self.entry_bytes)
            if not (lo_key <= first <= hi_key):
                raise IndexLookupError("directory/X mismatch at block boundary")
        return LookupRange(lo_run=r_lo, hi_run=r_hi, count=count)

    def kgram_prune_check(self, pattern) -> str:
        """'absent_skip' when the table proves the pattern cannot occur."""
        pat = [int(t) for t in pattern]
        if len(pat) == 2 and fmt.bigram_qualifies(*pat):
            key = fmt.bigram_key(pat[0], pat[1])
            pos = int(np.searchsorted(self.kgram2, key))
            if pos >= self.kgram2.size or self.kgram2[pos] != key:
                return "absent_skip"
        elif len(pat) == 3 and fmt.trigram_qualifies(*pat):
            key = fmt.trigram_key(pat[0], pat[1], pat[2])
            pos = int(np.searchsorted(self.kgram3, key))
            if pos >= self.kgram3.size or self.kgram3[pos] != key:
                return "absent_skip"
        return "must_lookup"

    def exists(self, pattern, io: IoCounter | None = None,
               use_kgram: bool = True) -> bool:
        if use_kgram and self.meta.get("kgram_tables"):
            if self.kgram_prune_check(pattern) == "absent_skip":
                return False
        return self.find_range(pattern, io).count > 0

    # -- display path -----------------------------------------------------

    def read_runs(self, lo_run: int, hi_run: int):
        """Run records [lo_run, hi_run) as (entries, counts, pos_offsets)."""
        if hi_run <= lo_run:
            empty = np.empty(0, dtype=self._run_dtype)
            return empty["entry"], empty["count"], empty["pos"]
        raw = os.pread(
            self._x_fd, (hi_run - lo_run) * self.rec, lo_run * self.rec
        )
        runs = np.frombuffer(raw, dtype=self._run_dtype)
        return runs["entry"], runs["count"], runs["pos"]

    def run_tokens(self, entries: np.ndarray) -> np.ndarray:
        """Decode packed run entries into an (n_runs, L) id matrix."""
        mat = np.ascontiguousarray(entries).view(np.uint8)
        return unpack_matrix(mat.reshape(entries.size, self.entry_bytes),
                             self.bits, self.L)

    def positions_of_run(self, pos_offset: int, count: int) -> np.ndarray:
        raw = os.pread(self._pos_fd, count * 8, pos_offset * 8)
        return np.frombuffer(raw, dtype="<u8")

    def occurrences(self, pattern, limit: int = 10, context: int = 8):
        """Up to `limit` corpus positions of `pattern` with surrounding words."""
        if limit < 1:
            raise IndexLookupError("limit must be >= 1")
        pat = self._check_pattern(pattern)
        rng = self.find_range(pat)
        out = []
        if rng.count == 0:
            return out
        _, counts, offsets = self.read_runs(rng.lo_run, rng.hi_run)
        words = self.vocabulary.words
        plen = len(pat)
        for cnt, off in zip(counts, offsets):
            take = min(int(cnt), limit - len(out))
            for pos in self.positions_of_run(int(off), int(cnt))[:take]:
                pos = int(pos)
                left = self.tokens.decode_slice(pos - context, pos)
                mid = self.tokens.decode_slice(pos, pos + plen)
                right = self.tokens.decode_slice(pos + plen, pos + plen + context)
                out.append((
                    pos,
                    " ".join(words[t] for t in left),
                    " ".join(words[t] for t in mid),
                    " ".join(words[t] for t in right),
                ))
            if len(out) >= limit:
                break
        return out
