import numpy as np
import pytest

from conftest import naive_count_and_positions, random_corpus
from softgrep.corpus import SEPARATOR_WORD, TokenizedCorpus, Vocabulary
from softgrep.index_build import build_index
from softgrep.lookup import IndexReader, IoCounter, IndexLookupError


def test_two_stage_descent_small_text(tmp_path):
    # alphabetical ids make the sorted 2-gram order easy to verify by hand
    text = "pattern match for a trillion scale corpus".split()
    words = [SEPARATOR_WORD] + sorted(set(text))
    vocab = Vocabulary(words, [0] + [1] * (len(words) - 1))
    tokens = np.array([vocab.id_of[w] for w in text], dtype=np.uint32)
    corpus = TokenizedCorpus(tokens, [0], vocab)
    out = tmp_path / "idx"
    build_index(corpus, out, L=2, B=3)
    reader = IndexReader(out)
    io = IoCounter()
    rng = reader.find_range([vocab.id_of["pattern"], vocab.id_of["match"]], io)
    assert (rng.lo_run, rng.hi_run, rng.count) == (4, 5, 1)
    assert io.block_reads == 1
    reader.close()


def test_counts_and_positions_match_naive_scan(small_index):
    corpus, reader = small_index
    rng = np.random.default_rng(40)
    toks = corpus.tokens
    for trial in range(400):
        plen = int(rng.integers(1, reader.L + 1))
        if trial % 2 == 0:
            start = int(rng.integers(0, corpus.n - plen))
            pattern = [int(t) for t in toks[start: start + plen]]
            if 0 in pattern:
                continue
        else:
            pattern = [int(t) for t in rng.integers(1, 51, size=plen)]
        want_count, want_pos = naive_count_and_positions(toks, pattern)
        got = reader.find_range(pattern)
        assert got.count == want_count
        if want_count:
            hits = reader.occurrences(pattern, limit=want_count + 5, context=3)
            assert sorted(p for p, *_ in hits) == want_pos.tolist()


def test_block_read_contract(small_index):
    corpus, reader = small_index
    rng = np.random.default_rng(41)
    toks = corpus.tokens
    ones = twos = 0
    for trial in range(2000):
        plen = int(rng.integers(1, reader.L + 1))
        if trial % 2 == 0:
            start = int(rng.integers(0, corpus.n - plen))
            pattern = [int(t) for t in toks[start: start + plen]]
            if 0 in pattern:
                continue
        else:
            pattern = [int(t) for t in rng.integers(1, 51, size=plen)]
        reader.clear_cache()
        io = IoCounter()
        rng_ = reader.find_range(pattern, io)
        assert io.block_reads <= 2
        assert io.cache_misses == io.block_reads  # cold cache
        if rng_.count > 0:
            lo_block = rng_.lo_run // reader.B
            hi_block = (rng_.hi_run - 1) // reader.B
            if lo_block == hi_block:
                assert io.block_reads == 1
                ones += 1
            else:
                twos += 1
    assert ones > 100 and twos > 10  # both regimes exercised


def test_exists_and_kgram_short_circuit(small_index):
    corpus, reader = small_index
    rng = np.random.default_rng(42)
    toks = corpus.tokens
    for _ in range(200):
        a, b = int(rng.integers(1, 51)), int(rng.integers(1, 51))
        io = IoCounter()
        got = reader.exists([a, b], io, use_kgram=True)
        want = naive_count_and_positions(toks, [a, b])[0] > 0
        assert got == want
        if not want:
            assert io.block_reads == 0  # absent qualifying bigram: table answers


def test_monotone_counts_under_extension(small_index):
    corpus, reader = small_index
    rng = np.random.default_rng(43)
    for _ in range(100):
        start = int(rng.integers(0, corpus.n - 4))
        pattern = [int(t) for t in corpus.tokens[start: start + 4]]
        if 0 in pattern:
            continue
        counts = [reader.find_range(pattern[: k + 1]).count for k in range(4)]
        assert all(counts[i] >= counts[i + 1] for i in range(3))


def test_lookup_errors(small_index):
    _, reader = small_index
    with pytest.raises(IndexLookupError, match="empty pattern"):
        reader.find_range([])
    with pytest.raises(IndexLookupError, match="exceeds"):
        reader.find_range([1] * (reader.L + 1))
    with pytest.raises(IndexLookupError, match="separator"):
        reader.find_range([1, 0])
    with pytest.raises(IndexLookupError, match="limit"):
        reader.occurrences([1], limit=0)


def test_occurrence_contexts_decode_corpus(small_index):
    corpus, reader = small_index
    rng = np.random.default_rng(44)
    words = corpus.vocabulary.words
    for _ in range(20):
        start = int(rng.integers(5, corpus.n - 8))
        pattern = [int(t) for t in corpus.tokens[start: start + 3]]
        if 0 in pattern:
            continue
        hits = reader.occurrences(pattern, limit=3, context=4)
        assert hits
        for pos, left, mid, right in hits:
            assert mid == " ".join(words[t] for t in corpus.tokens[pos: pos + 3])
            assert left == " ".join(
                words[t] for t in corpus.tokens[max(0, pos - 4): pos]
            )


def test_occurrences_respect_limit(small_index):
    corpus, reader = small_index
    token = int(np.argmax(np.bincount(corpus.tokens)[1:]) + 1)
    hits = reader.occurrences([token], limit=7)
    assert len(hits) == 7


def test_absent_pattern_empty_range(small_index):
    _, reader = small_index
    # token 50 exists; a pattern of eight successive rare tokens will not
    rng_ = reader.find_range([50] * 8)
    assert rng_.count == 0 and rng_.lo_run == rng_.hi_run
