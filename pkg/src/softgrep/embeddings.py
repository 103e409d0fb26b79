"""Word embeddings: loading, cosine machinery, whitened norms and neighbors.

The insertion/deletion weight of a word is the squared norm of its embedding
after frequency-weighted (Zipfian) whitening; frequent low-information words
get small weights.  gamma' is calibrated so that deleting the word with the
50th-smallest weight from a 5-token query scales the score by exactly 1/e.
"""

from __future__ import annotations

import os
import struct
from dataclasses import dataclass

import numpy as np

from .corpus import Vocabulary

EMB_MAGIC = b"SGEM"
_EMB_HEADER = struct.Struct("<4sQQ")  # magic, rows, dim

CALIBRATION_QUERY_LEN = 5
CALIBRATION_ORDER = 50  # word with the 50th-lowest whitened norm


class EmbeddingError(ValueError):
    pass


@dataclass
class GammaParams:
    gamma_prime: float

    def __post_init__(self):
        if self.gamma_prime <= 0:
            raise EmbeddingError("gamma' must be positive")

    def gamma_of(self, query_len: int) -> float:
        return query_len * self.gamma_prime


class EmbeddingTable:
    """Unit-normalized vectors for the subset of the vocabulary that has them."""

    def __init__(self, token_ids: np.ndarray, raw_vectors: np.ndarray):
        if raw_vectors.ndim != 2:
            raise EmbeddingError("expected a 2-D vector matrix")
        norms = np.linalg.norm(raw_vectors, axis=1)
        if np.any(norms == 0):
            raise EmbeddingError("degenerate embedding")
        self.token_ids = np.asarray(token_ids, dtype=np.int64)
        self.raw = np.asarray(raw_vectors, dtype=np.float64)
        self.vectors = self.raw / norms[:, None]
        self.dim = self.raw.shape[1]
        self.row_of = {int(t): i for i, t in enumerate(self.token_ids)}
        self.whitened_sq_norm: dict[int, float] = {}

    def __contains__(self, token_id: int) -> bool:
        return int(token_id) in self.row_of

    def cosine(self, a: int, b: int) -> float | None:
        """Cosine of two token ids; None when either has no embedding."""
        if a == b:
            return 1.0
        ra = self.row_of.get(int(a))
        rb = self.row_of.get(int(b))
        if ra is None or rb is None:
            return None
        return float(self.vectors[ra] @ self.vectors[rb])

    def neighbors(self, token_id: int, min_cosine: float) -> list[tuple[int, float]]:
        """All tokens with cosine >= min_cosine, by full scan.

        Always includes the token itself at cosine 1.0; a token without an
        embedding falls back to that singleton. Sorted by cosine descending,
        then token id ascending.
        """
        if not (0.0 < min_cosine <= 1.0):
            raise EmbeddingError("min_cosine must be in (0, 1]")
        row = self.row_of.get(int(token_id))
        if row is None:
            return [(int(token_id), 1.0)]
        dots = self.vectors @ self.vectors[row]
        hits = np.flatnonzero(dots >= min_cosine)
        out = {int(self.token_ids[i]): float(dots[i]) for i in hits}
        out[int(token_id)] = 1.0
        return sorted(out.items(), key=lambda kv: (-kv[1], kv[0]))


def load_embeddings(path: str | os.PathLike, vocabulary: Vocabulary) -> EmbeddingTable:
    """Load text-format ("word v1 .. vd" lines) or binary-cache embeddings.

    Only words present in the vocabulary are kept. An optional leading
    "count dim" header line in text files is detected and skipped.
    """
    with open(path, "rb") as f:
        magic = f.read(4)
    if magic == EMB_MAGIC:
        return _load_binary(path, vocabulary)
    return _load_text(path, vocabulary)


def _load_text(path, vocabulary: Vocabulary) -> EmbeddingTable:
    ids: list[int] = []
    rows: list[np.ndarray] = []
    dim = None
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f):
            parts = line.rstrip("\n").split(" ")
            if not parts or parts == [""]:
                continue
            if lineno == 0 and len(parts) == 2 and all(p.isdigit() for p in parts):
                continue  # "count dim" header
            word, values = parts[0], parts[1:]
            vec = np.array([float(v) for v in values], dtype=np.float64)
            if dim is None:
                dim = vec.size
            elif vec.size != dim:
                raise EmbeddingError(
                    f"dimension mismatch at line {lineno + 1}: {vec.size} != {dim}"
                )
            tid = vocabulary.id_of.get(word)
            if tid is None or tid == vocabulary.separator_id:
                continue
            if not np.any(vec):
                raise EmbeddingError(f"degenerate embedding for {word!r}")
            ids.append(tid)
            rows.append(vec)
    if not rows:
        raise EmbeddingError(f"no vocabulary words found in {path}")
    return EmbeddingTable(np.array(ids), np.vstack(rows))


def _load_binary(path, vocabulary: Vocabulary) -> EmbeddingTable:
    with open(path, "rb") as f:
        magic, rows, dim = _EMB_HEADER.unpack(f.read(_EMB_HEADER.size))
        ids = np.frombuffer(f.read(rows * 8), dtype="<u8").astype(np.int64)
        mat = np.frombuffer(f.read(rows * dim * 8), dtype="<f8").reshape(rows, dim)
    keep = np.array([int(t) < vocabulary.size for t in ids], dtype=bool)
    return EmbeddingTable(ids[keep], mat[keep])


def write_binary_cache(table: EmbeddingTable, path: str | os.PathLike) -> None:
    with open(path, "wb") as f:
        f.write(_EMB_HEADER.pack(EMB_MAGIC, len(table.token_ids), table.dim))
        f.write(table.token_ids.astype("<u8").tobytes())
        f.write(table.raw.astype("<f8").tobytes())


def zipfian_whiten(
    table: EmbeddingTable, unigram_probabilities: dict[int, float]
) -> dict[int, float]:
    """Squared norms after frequency-weighted centering and diagonal scaling.

    Each dimension is centered by the probability-weighted mean and divided by
    the square root of the probability-weighted variance. If every dimension
    is degenerate (all vectors identical) the norms are all zero; a partially
    degenerate basis cannot be whitened and raises.
    """
    probs = np.array(
        [unigram_probabilities.get(int(t), 0.0) for t in table.token_ids],
        dtype=np.float64,
    )
    total = probs.sum()
    if total <= 0:
        raise EmbeddingError("unigram probabilities sum to zero over embeddings")
    probs = probs / total
    mean = probs @ table.raw
    centered = table.raw - mean
    var = probs @ (centered ** 2)
    degenerate = var <= 1e-15
    if degenerate.all():
        return {int(t): 0.0 for t in table.token_ids}
    if degenerate.any():
        raise EmbeddingError("degenerate dimension")
    whitened = centered / np.sqrt(var)
    sq = (whitened ** 2).sum(axis=1)
    return {int(t): float(v) for t, v in zip(table.token_ids, sq)}


def calibrate_gamma_prime(whitened_sq_norm: dict[int, float]) -> GammaParams:
    """gamma' = v50 / 5, so exp(-v50 / (5 * gamma')) == 1/e exactly."""
    values = np.array(sorted(whitened_sq_norm.values()), dtype=np.float64)
    if values.size < CALIBRATION_ORDER:
        raise EmbeddingError(
            f"need at least {CALIBRATION_ORDER} whitened norms, got {values.size}"
        )
    v50 = float(values[CALIBRATION_ORDER - 1])
    return GammaParams(gamma_prime=v50 / CALIBRATION_QUERY_LEN)


def read_norms_file(path: str | os.PathLike, vocabulary: Vocabulary) -> dict[int, float]:
    """Read a "word value" override file of whitened squared norms."""
    out: dict[int, float] = {}
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            word, value = line.rsplit(maxsplit=1)
            tid = vocabulary.id_of.get(word)
            if tid is not None:
                out[tid] = float(value)
    return out


def unigram_probabilities(vocabulary: Vocabulary) -> dict[int, float]:
    """Relative frequencies of real words from the stored vocabulary counts."""
    total = sum(vocabulary.counts[1:])
    if total == 0:
        return {}
    return {
        i: c / total
        for i, c in enumerate(vocabulary.counts)
        if i != vocabulary.separator_id and c > 0
    }
