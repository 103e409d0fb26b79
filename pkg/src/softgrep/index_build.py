"""Build a staged index: sort all L-token windows, run-length compress the
sorted array onto disk, and keep a sparse per-block directory for RAM.

Every corpus position gets a window; the last L-1 windows are padded with the
separator token, which never occurs in queries, so lookups agree with an
unpadded index while short corpora and tail positions stay searchable.
"""

from __future__ import annotations

import heapq
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from . import index_format as fmt
from .corpus import SEPARATOR_ID, TokenizedCorpus, write_corpus, write_vocabulary
from .packing import group_bytes, pack_matrix

DEFAULT_MEMORY_BUDGET = 256 << 20  # bytes of packed windows sorted in RAM at once
_CHUNK_ROWS = 1 << 19


class IndexBuildError(ValueError):
    pass


@dataclass
class BuildReport:
    n: int
    n_runs: int
    n_blocks: int
    external_chunks: int


def compress_runs(entries: Iterable[bytes]) -> Iterator[tuple[bytes, int]]:
    """Merge adjacent equal entries of a sorted stream into (entry, count) runs."""
    current: bytes | None = None
    count = 0
    for e in entries:
        if current is None:
            current, count = e, 1
        elif e == current:
            count += 1
        elif e > current:
            yield current, count
            current, count = e, 1
        else:
            raise IndexBuildError("sort violation")
    if current is not None:
        yield current, count


def decompress_runs(runs: Iterable[tuple[bytes, int]]) -> Iterator[bytes]:
    for entry, count in runs:
        for _ in range(count):
            yield entry


def build_index(
    corpus: TokenizedCorpus,
    out_dir: str | os.PathLike,
    L: int = fmt.DEFAULT_L,
    B: int = fmt.DEFAULT_B,
    memory_budget: int = DEFAULT_MEMORY_BUDGET,
    build_kgram: bool = True,
    tokenizer_kind: str = "text",
) -> BuildReport:
    if L < 1:
        raise IndexBuildError("L must be >= 1")
    if B < 2:
        raise IndexBuildError("B must be >= 2")
    if corpus.n < 1:
        raise IndexBuildError("empty corpus")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    vocab = corpus.vocabulary
    bits = vocab.bit_width
    eb = group_bytes(L, bits)
    rec = fmt.run_record_size(eb)

    write_corpus(corpus, out / fmt.TOKENS_FILE)
    write_vocabulary(vocab, out / fmt.VOCAB_FILE)

    n = corpus.n
    padded = np.concatenate(
        [corpus.tokens, np.full(L - 1, SEPARATOR_ID, dtype=np.uint32)]
    )
    row_cost = eb + 8 * ((eb + 7) // 8) + 16  # packed row + sort keys + order/pos
    if n * row_cost > memory_budget:
        n_runs, n_blocks, chunks = _build_external(
            padded, n, L, bits, eb, B, rec, out, memory_budget
        )
    else:
        n_runs, n_blocks = _build_in_memory(padded, n, L, bits, eb, B, rec, out)
        chunks = 0

    if build_kgram:
        _build_kgram_tables(corpus.tokens, out)
    else:
        fmt.write_kgram_set(out / fmt.KGRAM2_FILE, fmt.KGRAM2_MAGIC, np.empty(0, "<u8"))
        fmt.write_kgram_set(out / fmt.KGRAM3_FILE, fmt.KGRAM3_MAGIC, np.empty(0, "<u8"))

    meta = {
        "format_version": fmt.FORMAT_VERSION,
        "V": vocab.size,
        "b": bits,
        "L": L,
        "B": B,
        "n": n,
        "n_windows": n,
        "n_runs": n_runs,
        "n_blocks": n_blocks,
        "doc_count": len(corpus.doc_offsets),
        "entry_bytes": eb,
        "run_record_size": rec,
        "tokenizer": tokenizer_kind,
        "rank_limit_2": fmt.RANK_LIMIT_2,
        "rank_sum_limit_3": fmt.RANK_SUM_LIMIT_3,
        "kgram_tables": bool(build_kgram),
        "checksums": {
            name: fmt.file_sha256(out / name)
            for name in (
                fmt.X_FILE, fmt.Y_FILE, fmt.POS_FILE,
                fmt.KGRAM2_FILE, fmt.KGRAM3_FILE, fmt.TOKENS_FILE, fmt.VOCAB_FILE,
            )
        },
    }
    fmt.write_meta(out, meta)
    return BuildReport(n=n, n_runs=n_runs, n_blocks=n_blocks, external_chunks=chunks)


def _pack_windows(padded: np.ndarray, start: int, stop: int, L: int, bits: int) -> np.ndarray:
    windows = np.lib.stride_tricks.sliding_window_view(padded[start: stop + L - 1], L)
    return pack_matrix(windows, bits)


def _sort_order(packed: np.ndarray) -> np.ndarray:
    """Indices sorting packed rows byte-lexicographically (stable)."""
    n, eb = packed.shape
    nwords = (eb + 7) // 8
    if eb % 8:
        full = np.zeros((n, nwords * 8), dtype=np.uint8)
        full[:, :eb] = packed
    else:
        full = packed
    keys = full.view(">u8").reshape(n, nwords)
    return np.lexsort(tuple(keys[:, w] for w in range(nwords - 1, -1, -1)))


class _DirectoryBuilder:
    """Accumulates Y records while runs stream out in sorted order."""

    def __init__(self, eb: int, B: int, rec: int):
        self.eb, self.B, self.rec = eb, B, rec
        self.rows: list[tuple[bytes, bytes, int, int, int, int]] = []
        self._first: bytes | None = None
        self._last: bytes | None = None
        self._count = 0
        self._start_run = 0
        self._cum_before = 0
        self._cum = 0
        self.n_runs = 0

    def add_run(self, entry: bytes, count: int) -> None:
        if self._count == 0:
            self._first = entry
            self._start_run = self.n_runs
            self._cum_before = self._cum
        self._last = entry
        self._count += 1
        self.n_runs += 1
        self._cum += count
        if self._count == self.B:
            self._close_block()

    def _close_block(self) -> None:
        self.rows.append(
            (self._first, self._last, self._start_run * self.rec,
             self._count * self.rec, self._cum_before, self._start_run)
        )
        self._count = 0

    def finish(self) -> list[tuple[bytes, bytes, int, int, int, int]]:
        if self._count:
            self._close_block()
        return self.rows

    def write(self, out: Path) -> int:
        rows = self.finish()
        with open(out / fmt.Y_FILE, "wb") as f:
            for first, last, off, blen, cum, runs in rows:
                f.write(first)
                f.write(last)
                f.write(off.to_bytes(8, "little"))
                f.write(blen.to_bytes(8, "little"))
                f.write(cum.to_bytes(8, "little"))
                f.write(runs.to_bytes(8, "little"))
        return len(rows)


def _build_in_memory(padded, n, L, bits, eb, B, rec, out: Path):
    packed = np.empty((n, eb), dtype=np.uint8)
    for start in range(0, n, _CHUNK_ROWS):
        stop = min(start + _CHUNK_ROWS, n)
        packed[start:stop] = _pack_windows(padded, start, stop, L, bits)
    order = _sort_order(packed)
    packed = packed[order]

    if n > 1:
        changed = np.any(packed[1:] != packed[:-1], axis=1)
        starts = np.concatenate([[0], np.flatnonzero(changed) + 1]).astype(np.int64)
    else:
        starts = np.array([0], dtype=np.int64)
    counts = np.diff(np.append(starts, n)).astype(np.uint64)
    entries = packed[starts]
    n_runs = entries.shape[0]

    records = np.zeros((n_runs, rec), dtype=np.uint8)
    records[:, :eb] = entries
    records[:, eb: eb + 8] = counts.astype("<u8").view(np.uint8).reshape(n_runs, 8)
    records[:, eb + 8:] = starts.astype("<u8").view(np.uint8).reshape(n_runs, 8)
    records.tofile(out / fmt.X_FILE)
    order.astype("<u8").tofile(out / fmt.POS_FILE)

    cum = np.concatenate(
        [np.zeros(1, dtype=np.uint64), np.cumsum(counts, dtype=np.uint64)]
    )
    block_starts = np.arange(0, n_runs, B, dtype=np.int64)
    block_ends = np.minimum(block_starts + B, n_runs)
    n_blocks = block_starts.size
    yrec = fmt.y_record_size(eb)
    ybuf = np.zeros((n_blocks, yrec), dtype=np.uint8)
    ybuf[:, :eb] = entries[block_starts]
    ybuf[:, eb: 2 * eb] = entries[block_ends - 1]

    def put_u64(col: int, values: np.ndarray) -> None:
        ybuf[:, col: col + 8] = values.astype("<u8").view(np.uint8).reshape(n_blocks, 8)

    put_u64(2 * eb, block_starts * rec)
    put_u64(2 * eb + 8, (block_ends - block_starts) * rec)
    put_u64(2 * eb + 16, cum[block_starts])
    put_u64(2 * eb + 24, block_starts)
    ybuf.tofile(out / fmt.Y_FILE)
    return n_runs, n_blocks


def _build_external(padded, n, L, bits, eb, B, rec, out: Path, memory_budget: int):
    """Sorted fixed-size chunks spilled to disk, then a k-way streaming merge."""
    chunk_rows = max(1024, memory_budget // (eb + 24))
    spill_rec = eb + 8  # entry + big-endian position: record bytes sort correctly
    tmpdir = tempfile.TemporaryDirectory(dir=out, prefix=".sort-")
    chunk_paths: list[str] = []
    try:
        for start in range(0, n, chunk_rows):
            stop = min(start + chunk_rows, n)
            packed = _pack_windows(padded, start, stop, L, bits)
            order = _sort_order(packed)
            rows = stop - start
            buf = np.zeros((rows, spill_rec), dtype=np.uint8)
            buf[:, :eb] = packed[order]
            buf[:, eb:] = (order + start).astype(">u8").view(np.uint8).reshape(rows, 8)
            path = os.path.join(tmpdir.name, f"chunk{len(chunk_paths):05d}")
            buf.tofile(path)
            chunk_paths.append(path)

        merged = heapq.merge(*(_iter_records(p, spill_rec) for p in chunk_paths))
        directory = _DirectoryBuilder(eb, B, rec)
        n_runs = 0
        with open(out / fmt.X_FILE, "wb") as xf, open(out / fmt.POS_FILE, "wb") as pf:
            run_entry: bytes | None = None
            run_count = 0
            pos_written = 0

            def flush():
                nonlocal n_runs
                xf.write(run_entry)
                xf.write(run_count.to_bytes(8, "little"))
                xf.write((pos_written - run_count).to_bytes(8, "little"))
                directory.add_run(run_entry, run_count)
                n_runs += 1

            for record in merged:
                entry = record[:eb]
                if run_entry is None:
                    run_entry, run_count = entry, 1
                elif entry == run_entry:
                    run_count += 1
                else:
                    flush()
                    run_entry, run_count = entry, 1
                pf.write(record[eb:][::-1])  # big-endian spill -> little-endian store
                pos_written += 1
            if run_entry is not None:
                flush()
        n_blocks = directory.write(out)
    finally:
        tmpdir.cleanup()
    return n_runs, n_blocks, len(chunk_paths)


def _iter_records(path: str, rec_size: int, batch: int = 8192) -> Iterator[bytes]:
    with open(path, "rb") as f:
        while True:
            blob = f.read(rec_size * batch)
            if not blob:
                return
            for i in range(0, len(blob), rec_size):
                yield blob[i: i + rec_size]


def _build_kgram_tables(tokens: np.ndarray, out: Path) -> None:
    toks = tokens.astype(np.uint64)
    r2 = np.uint64(fmt.RANK_LIMIT_2)
    if toks.size >= 2:
        a, b = toks[:-1], toks[1:]
        mask = (a >= 1) & (a <= r2) & (b >= 1) & (b <= r2)
        keys2 = np.unique(fmt.bigram_key(a[mask], b[mask]))
    else:
        keys2 = np.empty(0, dtype=np.uint64)
    if toks.size >= 3:
        a, b, c = toks[:-2], toks[1:-1], toks[2:]
        mask = (a >= 1) & (b >= 1) & (c >= 1) & (
            a + b + c <= np.uint64(fmt.RANK_SUM_LIMIT_3)
        )
        keys3 = np.unique(fmt.trigram_key(a[mask], b[mask], c[mask]))
    else:
        keys3 = np.empty(0, dtype=np.uint64)
    fmt.write_kgram_set(out / fmt.KGRAM2_FILE, fmt.KGRAM2_MAGIC, keys2)
    fmt.write_kgram_set(out / fmt.KGRAM3_FILE, fmt.KGRAM3_MAGIC, keys3)
