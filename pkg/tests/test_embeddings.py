import numpy as np
import pytest

from softgrep.corpus import build_vocabulary
from softgrep.embeddings import (
    EmbeddingError,
    EmbeddingTable,
    calibrate_gamma_prime,
    load_embeddings,
    read_norms_file,
    unigram_probabilities,
    write_binary_cache,
    zipfian_whiten,
)


@pytest.fixture
def toy_vocab():
    return build_vocabulary(["red green blue red green red"])


def test_load_text_embeddings(tmp_path, toy_vocab):
    path = tmp_path / "vecs.txt"
    path.write_text("red 1 0\ngreen 0 1\nblue 3 4\n")
    table = load_embeddings(path, toy_vocab)
    assert table.dim == 2
    row = table.row_of[toy_vocab.id_of["blue"]]
    assert np.allclose(table.vectors[row], [0.6, 0.8])
    norms = np.linalg.norm(table.vectors, axis=1)
    assert np.allclose(norms, 1.0, atol=1e-6)


def test_load_text_header_detection(tmp_path, toy_vocab):
    path = tmp_path / "vecs.txt"
    path.write_text("3 2\nred 1 0\ngreen 0 1\nblue 3 4\n")
    table = load_embeddings(path, toy_vocab)
    assert len(table.token_ids) == 3


def test_dimension_mismatch_errors(tmp_path, toy_vocab):
    path = tmp_path / "vecs.txt"
    path.write_text("red 1 0\ngreen 0 1 2\n")
    with pytest.raises(EmbeddingError, match="dimension mismatch"):
        load_embeddings(path, toy_vocab)


def test_zero_vector_errors(tmp_path, toy_vocab):
    path = tmp_path / "vecs.txt"
    path.write_text("red 0 0\n")
    with pytest.raises(EmbeddingError, match="degenerate embedding"):
        load_embeddings(path, toy_vocab)


def test_binary_cache_roundtrip(tmp_path, toy_vocab):
    path = tmp_path / "vecs.txt"
    path.write_text("red 1 0\ngreen 0 1\nblue 3 4\n")
    table = load_embeddings(path, toy_vocab)
    cache = tmp_path / "vecs.bin"
    write_binary_cache(table, cache)
    back = load_embeddings(cache, toy_vocab)
    assert np.allclose(back.vectors, table.vectors)
    assert back.token_ids.tolist() == table.token_ids.tolist()


def test_unit_norm_property_bulk(tmp_path):
    rng = np.random.default_rng(8)
    words = [f"w{i}" for i in range(1000)]
    vocab = build_vocabulary([" ".join(words)])
    lines = [f"{w} " + " ".join(f"{x:.5f}" for x in rng.normal(size=16))
             for w in words]
    path = tmp_path / "vecs.txt"
    path.write_text("\n".join(lines))
    table = load_embeddings(path, vocab)
    assert np.allclose(np.linalg.norm(table.vectors, axis=1), 1.0, atol=1e-6)


def test_cosine_properties():
    rng = np.random.default_rng(9)
    ids = np.arange(1, 40)
    table = EmbeddingTable(ids, rng.normal(size=(39, 8)))
    for _ in range(200):
        a, b = rng.integers(1, 40, size=2)
        cab = table.cosine(int(a), int(b))
        assert abs(cab) <= 1 + 1e-6
        assert cab == pytest.approx(table.cosine(int(b), int(a)))
    assert table.cosine(5, 5) == 1.0


def test_neighbors_match_brute_force():
    rng = np.random.default_rng(10)
    ids = np.arange(1, 201)
    table = EmbeddingTable(ids, rng.normal(size=(200, 8)))
    for token in rng.integers(1, 201, size=10):
        for thr in (0.3, 0.6, 0.9):
            got = table.neighbors(int(token), thr)
            row = table.row_of[int(token)]
            dots = table.vectors @ table.vectors[row]
            want = {int(ids[i]) for i in np.flatnonzero(dots >= thr)}
            want.add(int(token))
            assert {t for t, _ in got} == want
            cosines = [c for _, c in got]
            assert cosines == sorted(cosines, reverse=True)
    # monotone in threshold
    loose = {t for t, _ in table.neighbors(3, 0.2)}
    tight = {t for t, _ in table.neighbors(3, 0.8)}
    assert tight <= loose


def test_neighbors_threshold_one_is_singleton():
    rng = np.random.default_rng(11)
    table = EmbeddingTable(np.arange(1, 30), rng.normal(size=(29, 6)))
    assert table.neighbors(4, 1.0) == [(4, 1.0)]


def test_neighbors_oov_fallback():
    rng = np.random.default_rng(12)
    table = EmbeddingTable(np.arange(1, 5), rng.normal(size=(4, 3)))
    assert table.neighbors(99, 0.5) == [(99, 1.0)]


def test_whitening_identical_vectors_gives_zero():
    ids = np.arange(1, 6)
    table = EmbeddingTable(ids, np.tile([1.0, 2.0], (5, 1)))
    norms = zipfian_whiten(table, {int(i): 0.2 for i in ids})
    assert all(v == 0.0 for v in norms.values())


def test_whitening_partially_degenerate_dimension_errors():
    table = EmbeddingTable(np.array([1, 2]), np.array([[1.0, 0.0], [-1.0, 0.0]]))
    with pytest.raises(EmbeddingError, match="degenerate dimension"):
        zipfian_whiten(table, {1: 0.5, 2: 0.5})


def test_whitening_tracks_information_content():
    # frequent words sit near the weighted mean -> small whitened norms
    rng = np.random.default_rng(13)
    n = 2000
    probs = 1.0 / np.arange(1, n + 1) ** 1.3
    probs /= probs.sum()
    base = rng.normal(size=8)
    vecs = np.empty((n, 8))
    info_scale = np.sqrt(-np.log(probs))
    for i in range(n):
        wobble = 0.05 + 0.3 * info_scale[i]
        vecs[i] = base + wobble * rng.normal(size=8)
    table = EmbeddingTable(np.arange(1, n + 1), vecs)
    norms = zipfian_whiten(table, {i + 1: probs[i] for i in range(n)})
    v = np.array([norms[i + 1] for i in range(n)])
    info = -np.log(probs)
    rho = _spearman(v, info)
    assert rho > 0.2


def _spearman(a, b):
    ra = np.argsort(np.argsort(a)).astype(float)
    rb = np.argsort(np.argsort(b)).astype(float)
    ra -= ra.mean()
    rb -= rb.mean()
    return float((ra @ rb) / np.sqrt((ra @ ra) * (rb @ rb)))


def test_calibration_reference_constant():
    norms = {i: 200.0 + i for i in range(100)}
    norms[0] = 108.5  # becomes the 50th-smallest after the shifts below
    values = [108.5 + 0.001 * i for i in range(50)] + [500.0 + i for i in range(60)]
    norms = {i: v for i, v in enumerate(sorted(values, reverse=True))}
    gamma = calibrate_gamma_prime(norms)
    v50 = sorted(norms.values())[49]
    assert gamma.gamma_prime == pytest.approx(v50 / 5)


def test_calibration_simple_value():
    norms = {i: float(i + 1) for i in range(60)}  # v50 == 50
    gamma = calibrate_gamma_prime(norms)
    assert gamma.gamma_prime == pytest.approx(10.0)
    # definition check: scaling factor exactly 1/e at v50 with m=5
    assert np.exp(-50.0 / (5 * gamma.gamma_prime)) == pytest.approx(np.exp(-1))


def test_calibration_needs_50_words():
    with pytest.raises(EmbeddingError, match="at least 50"):
        calibrate_gamma_prime({i: 1.0 * i for i in range(49)})


def test_norms_file_and_unigram_probs(tmp_path):
    vocab = build_vocabulary(["a a a b b c"])
    path = tmp_path / "norms.txt"
    path.write_text("a 1.5\nb 2.5\nmissing 9.9\n")
    norms = read_norms_file(path, vocab)
    assert norms == {vocab.id_of["a"]: 1.5, vocab.id_of["b"]: 2.5}
    probs = unigram_probabilities(vocab)
    assert probs[vocab.id_of["a"]] == pytest.approx(0.5)
    assert sum(probs.values()) == pytest.approx(1.0)
