"""Benchmark contamination auditing.

Each document is cut into 10-token chunks; a chunk counts as leaked when the
corpus contains a pattern with similarity >= 0.6 to it. The per-document score
eta is the leaked fraction of chunks, and eta >= 0.8 flags the document dirty.
A document whose chunks are all found verbatim is dirty by exact matching
alone; the interesting findings are dirty documents whose best matches stay
below 1.0 (numeral substitutions, dropped function words and the like).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable

from .search import SearchConfig, Searcher

CHUNK_TOKENS = 10
SOFTMATCH_THRESHOLD = 0.6
DIRTY_ETA = 0.8


class AuditError(ValueError):
    pass


@dataclass
class ChunkResult:
    tokens: list[str]
    matched: bool
    best_similarity: float
    best_pattern: str | None


@dataclass
class AuditResult:
    doc_id: int
    text: str
    chunks: list[ChunkResult]
    eta: float
    dirty: bool
    dirty_exact: bool

    def to_json(self) -> str:
        return json.dumps({
            "doc_id": self.doc_id,
            "eta": round(self.eta, 4),
            "dirty": self.dirty,
            "dirty_exact": self.dirty_exact,
            "chunks": [
                {
                    "text": " ".join(c.tokens),
                    "matched": c.matched,
                    "best_similarity": round(c.best_similarity, 4),
                    "best_pattern": c.best_pattern,
                }
                for c in self.chunks
            ],
        }, ensure_ascii=False)


@dataclass
class AuditSummary:
    total: int = 0
    skipped: int = 0
    dirty: int = 0
    dirty_exact: int = 0
    dirty_soft_only: int = 0
    results: list[AuditResult] = field(default_factory=list)


def chunk_tokens(tokens: list, size: int = CHUNK_TOKENS, overlap: bool = False) -> list[list]:
    """Non-overlapping `size`-token windows; a short tail survives only when it
    is the whole document. With overlap=True, every start offset is used."""
    if not tokens:
        raise AuditError("empty document")
    if len(tokens) <= size:
        return [list(tokens)]
    if overlap:
        return [list(tokens[i: i + size]) for i in range(len(tokens) - size + 1)]
    full = len(tokens) // size
    return [list(tokens[i * size: (i + 1) * size]) for i in range(full)]


def softmatch_chunk(words: list[str], searcher: Searcher,
                    config: SearchConfig) -> ChunkResult:
    """1/0 leak decision for one chunk, with the best match kept as evidence."""
    _, ids = searcher.index.tokenize(" ".join(words))
    results, _ = searcher.search(ids, config)
    if not results:
        return ChunkResult(words, False, 0.0, None)
    best = results[0]
    vocab_words = searcher.index.vocabulary.words
    rendered = " ".join(vocab_words[t] for t in best.pattern)
    return ChunkResult(words, best.similarity >= SOFTMATCH_THRESHOLD,
                       best.similarity, rendered)


def audit_documents(
    documents: Iterable[str],
    searcher: Searcher,
    edit_budget: int = 2,
    overlap: bool = False,
) -> AuditSummary:
    """Score every document; unreadable/empty records are skipped, not fatal."""
    need = CHUNK_TOKENS + edit_budget
    if searcher.index.L < need:
        raise AuditError(
            f"index window L={searcher.index.L} is too small to audit "
            f"{CHUNK_TOKENS}-token chunks with edit budget {edit_budget}; "
            f"rebuild the index with L >= {need}"
        )
    config = SearchConfig(k=1, floor=SOFTMATCH_THRESHOLD, edit_budget=edit_budget)
    summary = AuditSummary()
    for doc_id, text in enumerate(documents):
        summary.total += 1
        try:
            words, _ = searcher.index.tokenize(text)
            chunks = chunk_tokens(words, overlap=overlap)
        except (AuditError, TypeError):
            summary.skipped += 1
            continue
        chunk_results = [softmatch_chunk(c, searcher, config) for c in chunks]
        matched = sum(1 for c in chunk_results if c.matched)
        eta = matched / len(chunk_results)
        dirty = eta >= DIRTY_ETA
        dirty_exact = all(c.best_similarity >= 1.0 - 1e-12 for c in chunk_results)
        result = AuditResult(
            doc_id=doc_id, text=text, chunks=chunk_results,
            eta=eta, dirty=dirty, dirty_exact=dirty_exact,
        )
        summary.results.append(result)
        if dirty:
            summary.dirty += 1
            if dirty_exact:
                summary.dirty_exact += 1
            elif any(
                SOFTMATCH_THRESHOLD <= c.best_similarity < 1.0 - 1e-12
                for c in chunk_results
            ):
                summary.dirty_soft_only += 1
    return summary


def read_dataset(path: str, column: int | None = None) -> list[str]:
    """One problem per line; `column` selects a tab-separated field (0-based)."""
    docs: list[str] = []
    with open(path, "r", encoding="utf-8", errors="replace") as f:
        for line in f:
            line = line.rstrip("\n")
            if column is not None:
                parts = line.split("\t")
                line = parts[column] if column < len(parts) else ""
            docs.append(line)
    return docs


def format_report(summary: AuditSummary) -> str:
    lines = [
        f"documents audited: {summary.total} (skipped {summary.skipped})",
        f"dirty (eta >= {DIRTY_ETA}): {summary.dirty}",
        f"  dirty by exact match: {summary.dirty_exact}",
        f"  dirty only under soft matching: {summary.dirty_soft_only}",
        "",
    ]
    for r in summary.results:
        if not r.dirty:
            continue
        kind = "exact" if r.dirty_exact else "soft"
        lines.append(f"doc {r.doc_id}: eta={r.eta:.2f} dirty ({kind})")
        for c in r.chunks:
            mark = "+" if c.matched else "-"
            best = f"{c.best_similarity * 100:.1f}%" if c.best_pattern else "no match"
            lines.append(f"  {mark} [{best}] {' '.join(c.tokens)}")
            if c.best_pattern and c.best_similarity < 1.0:
                lines.append(f"      corpus: {c.best_pattern}")
    return "\n".join(lines)
