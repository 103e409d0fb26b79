"""softgrep: semantics-aware pattern search over tokenized corpora."""

__version__ = "0.1.0"

from .corpus import (
    TokenizedCorpus,
    Vocabulary,
    build_vocabulary,
    tokenize_corpus,
    tokenize_query,
)
from .embeddings import (
    EmbeddingTable,
    GammaParams,
    calibrate_gamma_prime,
    load_embeddings,
    zipfian_whiten,
)
from .index_build import build_index, compress_runs, decompress_runs
from .lookup import IndexReader, IoCounter, LookupRange
from .search import SearchConfig, Searcher, SearchStats
from .similarity import (
    Alignment,
    ScoredPattern,
    SimilarityParams,
    edit_factor,
    pattern_similarity,
    prefix_upper_bound,
    smooth_min,
)

__all__ = [
    "Alignment",
    "EmbeddingTable",
    "GammaParams",
    "IndexReader",
    "IoCounter",
    "LookupRange",
    "ScoredPattern",
    "SearchConfig",
    "Searcher",
    "SearchStats",
    "SimilarityParams",
    "TokenizedCorpus",
    "Vocabulary",
    "build_index",
    "build_vocabulary",
    "calibrate_gamma_prime",
    "compress_runs",
    "decompress_runs",
    "edit_factor",
    "load_embeddings",
    "pattern_similarity",
    "prefix_upper_bound",
    "smooth_min",
    "tokenize_corpus",
    "tokenize_query",
    "zipfian_whiten",
]
