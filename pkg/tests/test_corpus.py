import numpy as np
import pytest

from softgrep.corpus import (
    CorpusError,
    SEPARATOR_ID,
    TokenStore,
    build_vocabulary,
    read_corpus_tokens,
    read_vocabulary,
    tokenize_corpus,
    tokenize_query,
    tokenize_text,
    write_corpus,
    write_vocabulary,
)


def test_tokenizer_lowercases_and_splits_punctuation():
    assert tokenize_text("Hello, World!") == ["hello", ",", "world", "!"]
    assert tokenize_text("a  b\tc") == ["a", "b", "c"]


def test_build_vocabulary_ranks_by_count_then_first_seen():
    vocab = build_vocabulary(["a b a"])
    assert vocab.words[0] == "<|sep|>"
    assert vocab.id_of["a"] == 1
    assert vocab.id_of["b"] == 2
    assert vocab.frequency_rank(1) == 1
    assert vocab.frequency_rank(2) == 2
    assert vocab.frequency_rank(SEPARATOR_ID) == vocab.size


def test_build_vocabulary_empty_stream_errors():
    with pytest.raises(CorpusError, match="empty corpus"):
        build_vocabulary([])


def test_rank_permutation_against_counting_oracle():
    rng = np.random.default_rng(5)
    words = [f"t{i}" for i in range(200)]
    lines = [
        " ".join(rng.choice(words, p=_zipf_probs(200), size=50))
        for _ in range(2000)
    ]
    vocab = build_vocabulary(lines)
    # independent counting pass
    from collections import Counter

    oracle = Counter(w for line in lines for w in line.split())
    counts = [vocab.counts[vocab.id_of[w]] for w in oracle]
    assert counts == [oracle[w] for w in oracle]
    ordered = vocab.counts[1:]
    assert all(ordered[i] >= ordered[i + 1] for i in range(len(ordered) - 1))


def _zipf_probs(n):
    p = 1.0 / np.arange(1, n + 1) ** 1.1
    return p / p.sum()


def test_tokenize_corpus_separator_layout():
    vocab = build_vocabulary(["a b", "c"])
    corpus = tokenize_corpus(["a b", "c"], vocab)
    a, b, c = vocab.id_of["a"], vocab.id_of["b"], vocab.id_of["c"]
    assert corpus.tokens.tolist() == [a, b, SEPARATOR_ID, c]
    assert corpus.doc_offsets == [0, 3]
    assert corpus.tokens[corpus.doc_offsets[1] - 1] == SEPARATOR_ID


def test_tokenize_corpus_single_doc_has_no_separator():
    vocab = build_vocabulary(["x y z"])
    corpus = tokenize_corpus(["x y z"], vocab)
    assert SEPARATOR_ID not in corpus.tokens.tolist()


def test_tokenize_corpus_unknown_token_errors():
    vocab = build_vocabulary(["a b"])
    with pytest.raises(CorpusError, match="unknown token"):
        tokenize_corpus(["a z"], vocab)


def test_query_tokenization_returns_none_for_oov():
    vocab = build_vocabulary(["alpha beta"])
    words, ids = tokenize_query("Alpha gamma", vocab)
    assert words == ["alpha", "gamma"]
    assert ids[0] == vocab.id_of["alpha"]
    assert ids[1] is None


def test_corpus_file_roundtrip(tmp_path):
    rng = np.random.default_rng(6)
    lines = [" ".join(rng.choice([f"w{i}" for i in range(30)], size=20))
             for _ in range(40)]
    vocab = build_vocabulary(lines)
    corpus = tokenize_corpus(lines, vocab)
    path = tmp_path / "tokens.bin"
    write_corpus(corpus, path)
    tokens, info = read_corpus_tokens(path)
    assert info["V"] == vocab.size
    assert info["doc_count"] == len(corpus.doc_offsets)
    assert np.array_equal(tokens, corpus.tokens)

    store = TokenStore(path)
    for _ in range(30):
        a, b = sorted(rng.integers(0, corpus.n + 1, size=2))
        assert store.decode_slice(int(a), int(b)).tolist() == \
            corpus.tokens[a:b].tolist()
    store.close()


def test_vocabulary_file_roundtrip(tmp_path):
    vocab = build_vocabulary(["the cat sat on the mat", "the dog"])
    path = tmp_path / "vocab.txt"
    write_vocabulary(vocab, path)
    back = read_vocabulary(path)
    assert back.words == vocab.words
    assert back.counts == vocab.counts


def test_packed_roundtrip_random_sequences():
    rng = np.random.default_rng(7)
    for _ in range(100):
        n_words = int(rng.integers(2, 500))
        length = int(rng.integers(1, 400))
        lines = [" ".join(f"w{rng.integers(0, n_words)}" for _ in range(length))]
        vocab = build_vocabulary(lines)
        corpus = tokenize_corpus(lines, vocab)
        from softgrep.packing import pack_stream, unpack_stream_slice

        blob = pack_stream(corpus.tokens, vocab.bit_width)
        back = unpack_stream_slice(blob, vocab.bit_width, 0, corpus.n)
        assert np.array_equal(back, corpus.tokens)
