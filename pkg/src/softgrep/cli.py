"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from . import __version__
from .contamination import audit_documents, format_report, read_dataset
from .corpus import CorpusError, build_vocabulary, iter_lines, tokenize_corpus
from .embeddings import (
    EmbeddingError,
    GammaParams,
    calibrate_gamma_prime,
    load_embeddings,
    read_norms_file,
    unigram_probabilities,
    zipfian_whiten,
)
from .index_build import DEFAULT_MEMORY_BUDGET, IndexBuildError, build_index
from .index_format import DEFAULT_B, DEFAULT_L, IndexFormatError, file_sha256, read_meta
from .lookup import IndexReader, IndexLookupError
from .render import result_payload
from .search import DEFAULT_K, SearchConfig, Searcher, SearchError
from .similarity import DEFAULT_EDIT_BUDGET, DEFAULT_FLOOR, EXTENDED_FLOOR

DATA_ERRORS = (
    CorpusError, EmbeddingError, IndexBuildError, IndexFormatError,
    IndexLookupError, SearchError, OSError, ValueError,
)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        sys.exit(1)


def _build_parser() -> _Parser:
    p = _Parser(prog="softgrep", description="soft pattern search over corpora")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    idx = sub.add_parser("index", help="index management")
    idx_sub = idx.add_subparsers(dest="index_command", required=True)
    b = idx_sub.add_parser("build", help="build an index from a text corpus")
    b.add_argument("corpus", help="UTF-8 text, one document per line")
    b.add_argument("--out", required=True, help="output index directory")
    b.add_argument("--L", type=int, default=DEFAULT_L)
    b.add_argument("--B", type=int, default=DEFAULT_B)
    b.add_argument("--tokenizer", choices=("text", "pretokenized"), default="text")
    b.add_argument("--memory-budget", type=int, default=DEFAULT_MEMORY_BUDGET,
                   help="bytes of window data sorted in RAM before spilling")
    b.add_argument("--no-kgram", action="store_true")

    s = sub.add_parser("search", help="soft search")
    s.add_argument("index_dir")
    s.add_argument("query")
    s.add_argument("--k", type=int, default=DEFAULT_K)
    s.add_argument("--floor", type=float, default=DEFAULT_FLOOR)
    s.add_argument("--extended", action="store_true",
                   help=f"lower the similarity floor to {EXTENDED_FLOOR}")
    s.add_argument("--budget", type=int, default=DEFAULT_EDIT_BUDGET)
    s.add_argument("--no-kgram", action="store_true")
    s.add_argument("--no-lastbits", action="store_true")
    _embedding_flags(s)

    c = sub.add_parser("count", help="exact occurrence count")
    c.add_argument("index_dir")
    c.add_argument("pattern")

    o = sub.add_parser("occur", help="show occurrences with context")
    o.add_argument("index_dir")
    o.add_argument("pattern")
    o.add_argument("--limit", type=int, default=10)
    o.add_argument("--context", type=int, default=8)

    a = sub.add_parser("audit", help="contamination audit of a dataset")
    a.add_argument("index_dir")
    a.add_argument("dataset", help="one problem per line")
    a.add_argument("--column", type=int, default=None,
                   help="tab-separated column holding the question text")
    a.add_argument("--overlap", action="store_true",
                   help="use overlapping chunk windows")
    a.add_argument("--budget", type=int, default=DEFAULT_EDIT_BUDGET)
    a.add_argument("--json-out", default=None,
                   help="write one JSON record per document to this file")
    _embedding_flags(a)

    st = sub.add_parser("stats", help="index statistics and checksum verification")
    st.add_argument("index_dir")

    sv = sub.add_parser("serve", help="run the HTTP API")
    sv.add_argument("index_dir", nargs="?",
                    default=os.environ.get("SOFTGREP_INDEX"))
    sv.add_argument("--port", type=int,
                    default=int(os.environ.get("SOFTGREP_PORT", "8000")))
    sv.add_argument("--host", default=os.environ.get("SOFTGREP_HOST", "127.0.0.1"))
    sv.add_argument("--cache-blocks", type=int,
                    default=int(os.environ.get("SOFTGREP_CACHE_BLOCKS", "1024")))
    _embedding_flags(sv)
    return p


def _embedding_flags(p) -> None:
    p.add_argument("--embeddings", default=None, help="word vector file")
    p.add_argument("--norms", default=None,
                   help="whitened squared-norm override file (word value per line)")
    p.add_argument("--gamma-prime", type=float, default=None)


def make_searcher(index_dir, embeddings_path=None, norms_path=None,
                  gamma_prime=None, cache_blocks=1024) -> Searcher:
    index = IndexReader(index_dir, cache_blocks=cache_blocks)
    table = None
    norms: dict[int, float] = {}
    if embeddings_path:
        table = load_embeddings(embeddings_path, index.vocabulary)
        if norms_path:
            norms = read_norms_file(norms_path, index.vocabulary)
        else:
            norms = zipfian_whiten(table, unigram_probabilities(index.vocabulary))
    elif norms_path:
        norms = read_norms_file(norms_path, index.vocabulary)
    if gamma_prime is not None:
        gamma = GammaParams(gamma_prime)
    elif len(norms) >= 50:
        gamma = calibrate_gamma_prime(norms)
    else:
        gamma = GammaParams(1.0)
        if norms:
            print("warning: fewer than 50 norms; gamma' defaults to 1.0",
                  file=sys.stderr)
    return Searcher(index, table, norms, gamma)


def _cmd_index_build(args) -> int:
    vocab = build_vocabulary(iter_lines(args.corpus), args.tokenizer)
    corpus = tokenize_corpus(iter_lines(args.corpus), vocab, args.tokenizer)
    report = build_index(
        corpus, args.out, L=args.L, B=args.B,
        memory_budget=args.memory_budget, build_kgram=not args.no_kgram,
        tokenizer_kind=args.tokenizer,
    )
    print(f"indexed {report.n} tokens: {report.n_runs} runs in "
          f"{report.n_blocks} blocks ({report.external_chunks} spill chunks)")
    return 0


def _cmd_search(args) -> int:
    searcher = make_searcher(args.index_dir, args.embeddings, args.norms,
                             args.gamma_prime)
    floor = EXTENDED_FLOOR if args.extended else args.floor
    config = SearchConfig(
        k=args.k, floor=floor, edit_budget=args.budget,
        use_kgram=not args.no_kgram, use_lastbits=not args.no_lastbits,
    )
    words, ids = searcher.index.tokenize(args.query)
    if not words:
        print("error: empty query", file=sys.stderr)
        return 1
    results, stats = searcher.search(ids, config)
    print(f"query: {' '.join(words)}")
    vocab_words = searcher.index.vocabulary.words
    for rank, sp in enumerate(results, start=1):
        row = result_payload(sp, words, vocab_words)
        print(f"{rank:3d}. {row['similarity']:5.1f}%  ({row['count']})  "
              f"{row['rendered']}")
    if not results:
        print(f"no matches with similarity >= {floor}")
    print(f"alpha={stats.final_alpha:.2f} lookups={stats.total_lookups}")
    print(f"elapsed: {stats.elapsed_ms:.1f} ms", file=sys.stderr)
    return 0


def _pattern_ids(index: IndexReader, pattern: str) -> list[int]:
    words, ids = index.tokenize(pattern)
    if not words:
        raise IndexLookupError("empty pattern")
    missing = [w for w, i in zip(words, ids) if i is None]
    if missing:
        raise IndexLookupError(f"token(s) not in corpus vocabulary: {missing}")
    return ids


def _cmd_count(args) -> int:
    index = IndexReader(args.index_dir)
    rng = index.find_range(_pattern_ids(index, args.pattern))
    print(rng.count)
    return 0


def _cmd_occur(args) -> int:
    index = IndexReader(args.index_dir)
    hits = index.occurrences(_pattern_ids(index, args.pattern),
                             limit=args.limit, context=args.context)
    for pos, left, mid, right in hits:
        print(f"{pos}\t{left} [{mid}] {right}")
    if not hits:
        print("no occurrences")
    return 0


def _cmd_audit(args) -> int:
    searcher = make_searcher(args.index_dir, args.embeddings, args.norms,
                             args.gamma_prime)
    docs = read_dataset(args.dataset, column=args.column)
    summary = audit_documents(docs, searcher, edit_budget=args.budget,
                              overlap=args.overlap)
    print(format_report(summary))
    if args.json_out:
        with open(args.json_out, "w", encoding="utf-8") as f:
            for r in summary.results:
                f.write(r.to_json() + "\n")
    return 0


def _cmd_stats(args) -> int:
    meta = read_meta(args.index_dir)
    for key in ("V", "b", "L", "B", "n", "n_windows", "n_runs", "n_blocks",
                "doc_count", "entry_bytes"):
        print(f"{key}: {meta[key]}")
    bad = 0
    for name, expected in meta["checksums"].items():
        actual = file_sha256(Path(args.index_dir) / name)
        status = "ok" if actual == expected else "MISMATCH"
        bad += status != "ok"
        print(f"checksum {name}: {status}")
    return 2 if bad else 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .server import create_app

    if not args.index_dir:
        print("error: no index directory (argument or SOFTGREP_INDEX)",
              file=sys.stderr)
        return 1
    app = create_app(args.index_dir, embeddings_path=args.embeddings,
                     norms_path=args.norms, gamma_prime=args.gamma_prime,
                     cache_blocks=args.cache_blocks)
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


_COMMANDS = {
    "search": _cmd_search,
    "count": _cmd_count,
    "occur": _cmd_occur,
    "audit": _cmd_audit,
    "stats": _cmd_stats,
    "serve": _cmd_serve,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "index":
            return _cmd_index_build(args)
        return _COMMANDS[args.command](args)
    except DATA_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
