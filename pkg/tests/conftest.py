from __future__ import annotations

import numpy as np
import pytest

from softgrep.corpus import SEPARATOR_WORD, TokenizedCorpus, Vocabulary
from softgrep.embeddings import EmbeddingTable, GammaParams
from softgrep.index_build import build_index
from softgrep.lookup import IndexReader


def synthetic_vocabulary(n_words: int) -> Vocabulary:
    words = [SEPARATOR_WORD] + [f"w{i}" for i in range(1, n_words + 1)]
    counts = [0] + list(range(n_words, 0, -1))
    return Vocabulary(words, counts)


def random_corpus(rng: np.random.Generator, n_tokens: int, n_words: int,
                  zipf: float | None = None, doc_len: int = 200) -> TokenizedCorpus:
    """Synthetic id corpus with separators roughly every doc_len tokens."""
    vocab = synthetic_vocabulary(n_words)
    if zipf is None:
        ids = rng.integers(1, n_words + 1, size=n_tokens)
    else:
        weights = 1.0 / np.arange(1, n_words + 1) ** zipf
        weights /= weights.sum()
        ids = rng.choice(np.arange(1, n_words + 1), size=n_tokens, p=weights)
    ids = ids.astype(np.uint32)
    doc_offsets = [0]
    step = max(2, doc_len)
    for pos in range(step, n_tokens, step):
        ids[pos] = 0
        doc_offsets.append(pos + 1)
    return TokenizedCorpus(ids, doc_offsets, vocab)


def clustered_embeddings(rng: np.random.Generator, vocab: Vocabulary,
                         dim: int = 8, cluster_size: int = 6,
                         spread: float = 0.35) -> EmbeddingTable:
    """Groups of words share a direction, so neighbor sets are non-trivial."""
    n = vocab.size - 1
    n_clusters = max(1, n // cluster_size)
    centers = rng.normal(size=(n_clusters, dim))
    centers /= np.linalg.norm(centers, axis=1, keepdims=True)
    ids = np.arange(1, n + 1)
    vecs = centers[(ids - 1) % n_clusters] + spread * rng.normal(size=(n, dim))
    norms = np.linalg.norm(vecs, axis=1)
    vecs[norms == 0] = 1.0 / np.sqrt(dim)
    return EmbeddingTable(ids, vecs)


def naive_count_and_positions(tokens: np.ndarray, pattern) -> tuple[int, np.ndarray]:
    """Linear-scan oracle for occurrence counting, independent of the index."""
    pat = np.asarray(pattern, dtype=tokens.dtype)
    n, m = tokens.size, pat.size
    if m == 0 or m > n:
        return 0, np.empty(0, dtype=np.int64)
    mask = tokens[: n - m + 1] == pat[0]
    for j in range(1, m):
        mask &= tokens[j: n - m + 1 + j] == pat[j]
    positions = np.flatnonzero(mask)
    return int(positions.size), positions


@pytest.fixture(scope="session")
def small_index(tmp_path_factory):
    rng = np.random.default_rng(7)
    corpus = random_corpus(rng, 20_000, 50, zipf=1.2)
    out = tmp_path_factory.mktemp("smallidx")
    build_index(corpus, out, L=8, B=16)
    reader = IndexReader(out)
    yield corpus, reader
    reader.close()
