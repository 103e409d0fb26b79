"""Tokenization, vocabulary construction and the tokenized-corpus file.

One input line is one document.  Documents are joined with a reserved
separator token (id 0) that sorts below every real word and is never produced
by query tokenization.  Token ids are assigned in descending frequency order,
so for every real word frequency_rank(id) == id.
"""

from __future__ import annotations

import os
import re
import struct
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator

import numpy as np

from .packing import bit_width, pack_stream, unpack_stream_slice

SEPARATOR_ID = 0
SEPARATOR_WORD = "<|sep|>"

CORPUS_MAGIC = b"SGTK"
CORPUS_VERSION = 1
_HEADER = struct.Struct("<4sHQBQQ")  # magic, version, V, b, n, doc_count

_WORD_RE = re.compile(r"\w+|[^\w\s]", re.UNICODE)


class CorpusError(ValueError):
    pass


def tokenize_text(line: str) -> list[str]:
    """Default tokenizer: lowercase, split words and single punctuation marks."""
    return _WORD_RE.findall(line.lower())


def tokenize_pretokenized(line: str) -> list[str]:
    """Pass-through tokenizer for corpora that are already space-separated tokens."""
    return line.split()


TOKENIZERS: dict[str, Callable[[str], list[str]]] = {
    "text": tokenize_text,
    "pretokenized": tokenize_pretokenized,
}


@dataclass
class Vocabulary:
    """Dense id <-> surface mapping with frequency ranks (1 = most frequent)."""

    words: list[str]
    counts: list[int]
    id_of: dict[str, int] = field(init=False)

    def __post_init__(self):
        self.id_of = {w: i for i, w in enumerate(self.words)}
        if self.words[SEPARATOR_ID] != SEPARATOR_WORD:
            raise CorpusError("separator must occupy id 0")

    @property
    def size(self) -> int:
        return len(self.words)

    @property
    def separator_id(self) -> int:
        return SEPARATOR_ID

    @property
    def bit_width(self) -> int:
        return bit_width(self.size)

    def frequency_rank(self, token_id: int) -> int:
        # Real words are id-ordered by descending count; the separator ranks last.
        return token_id if token_id != SEPARATOR_ID else self.size

    def encode_word(self, word: str) -> int:
        try:
            return self.id_of[word]
        except KeyError:
            raise CorpusError(f"unknown token: {word!r}") from None

    def __contains__(self, word: str) -> bool:
        return word in self.id_of


def build_vocabulary(lines: Iterable[str], tokenizer_kind: str = "text") -> Vocabulary:
    """Count tokens over `lines` and assign ids by descending frequency.

    Ties are broken by first occurrence. Raises on an empty stream.
    """
    tok = TOKENIZERS[tokenizer_kind]
    counts: Counter[str] = Counter()
    first_seen: dict[str, int] = {}
    total = 0
    for line in lines:
        for w in tok(line):
            counts[w] += 1
            if w not in first_seen:
                first_seen[w] = total
                total += 1
    if not counts:
        raise CorpusError("empty corpus")
    ordered = sorted(counts, key=lambda w: (-counts[w], first_seen[w]))
    words = [SEPARATOR_WORD] + ordered
    word_counts = [0] + [counts[w] for w in ordered]
    return Vocabulary(words, word_counts)


@dataclass
class TokenizedCorpus:
    """Id sequence over a vocabulary with document start offsets."""

    tokens: np.ndarray  # uint32
    doc_offsets: list[int]
    vocabulary: Vocabulary

    @property
    def n(self) -> int:
        return int(self.tokens.size)

    @property
    def bit_width(self) -> int:
        return self.vocabulary.bit_width

    def decode(self, start: int, stop: int) -> list[str]:
        words = self.vocabulary.words
        return [words[t] for t in self.tokens[start:stop]]


def tokenize_corpus(
    lines: Iterable[str],
    vocabulary: Vocabulary,
    tokenizer_kind: str = "text",
) -> TokenizedCorpus:
    """Encode one document per line, inserting a separator between documents.

    Lines that tokenize to nothing are skipped. Unknown tokens raise, since the
    vocabulary is frozen after build_vocabulary().
    """
    tok = TOKENIZERS[tokenizer_kind]
    ids: list[int] = []
    doc_offsets: list[int] = []
    for line in lines:
        words = tok(line)
        if not words:
            continue
        if doc_offsets:
            ids.append(SEPARATOR_ID)
        doc_offsets.append(len(ids))
        ids.extend(vocabulary.encode_word(w) for w in words)
    if not doc_offsets:
        raise CorpusError("empty corpus")
    return TokenizedCorpus(np.asarray(ids, dtype=np.uint32), doc_offsets, vocabulary)


def tokenize_query(query: str, vocabulary: Vocabulary, tokenizer_kind: str = "text"):
    """Tokenize a query; returns (surface tokens, id-or-None per token)."""
    words = TOKENIZERS[tokenizer_kind](query)
    ids = [vocabulary.id_of.get(w) for w in words]
    return words, ids


def write_corpus(corpus: TokenizedCorpus, path: str | os.PathLike) -> None:
    """Write header + bit-packed token stream (layout documented in FORMAT.md)."""
    b = corpus.bit_width
    header = _HEADER.pack(
        CORPUS_MAGIC, CORPUS_VERSION, corpus.vocabulary.size, b,
        corpus.n, len(corpus.doc_offsets),
    )
    with open(path, "wb") as f:
        f.write(header)
        f.write(pack_stream(corpus.tokens, b))


def read_corpus_header(path: str | os.PathLike) -> dict:
    with open(path, "rb") as f:
        raw = f.read(_HEADER.size)
    magic, version, v, b, n, docs = _HEADER.unpack(raw)
    if magic != CORPUS_MAGIC:
        raise CorpusError(f"not a tokenized corpus file: {path}")
    if version != CORPUS_VERSION:
        raise CorpusError(f"unsupported corpus file version {version}")
    return {"V": v, "b": b, "n": n, "doc_count": docs, "header_size": _HEADER.size}


def read_corpus_tokens(path: str | os.PathLike) -> tuple[np.ndarray, dict]:
    """Decode the full token stream of a corpus file."""
    info = read_corpus_header(path)
    with open(path, "rb") as f:
        f.seek(info["header_size"])
        payload = f.read()
    tokens = unpack_stream_slice(payload, info["b"], 0, info["n"])
    return tokens, info


class TokenStore:
    """Random access into an on-disk packed token stream without full decode."""

    def __init__(self, path: str | os.PathLike):
        self.info = read_corpus_header(path)
        self._file = open(path, "rb")
        self._base = self.info["header_size"]
        self.n = self.info["n"]
        self.bits = self.info["b"]

    def decode_slice(self, start: int, stop: int) -> np.ndarray:
        start = max(0, start)
        stop = min(self.n, stop)
        if stop <= start:
            return np.empty(0, dtype=np.uint32)
        first_byte = (start * self.bits) // 8
        last_byte = (stop * self.bits + 7) // 8
        self._file.seek(self._base + first_byte)
        buf = self._file.read(last_byte - first_byte)
        return _decode_local(buf, self.bits, start, stop, first_byte)

    def close(self) -> None:
        self._file.close()


def _decode_local(buf: bytes, bits: int, start: int, stop: int, first_byte: int) -> np.ndarray:
    bit_arr = np.unpackbits(np.frombuffer(buf, dtype=np.uint8))
    offset = start * bits - first_byte * 8
    count = stop - start
    rows = bit_arr[offset: offset + count * bits].reshape(count, bits)
    full = np.zeros((count, 32), dtype=np.uint8)
    full[:, 32 - bits:] = rows
    return np.packbits(full, axis=1).view(">u4").reshape(count).astype(np.uint32)


def write_vocabulary(vocab: Vocabulary, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for word, count in zip(vocab.words, vocab.counts):
            f.write(f"{word}\t{count}\n")


def read_vocabulary(path: str | os.PathLike) -> Vocabulary:
    words: list[str] = []
    counts: list[int] = []
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            line = line.rstrip("\n")
            if not line:
                continue
            word, _, cnt = line.rpartition("\t")
            words.append(word)
            counts.append(int(cnt))
    return Vocabulary(words, counts)


def iter_lines(path: str | os.PathLike) -> Iterator[str]:
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            yield line.rstrip("\n")
