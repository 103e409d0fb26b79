"""Top-K soft search: enumerate corpus-occurring patterns similar to a query.

Patterns are grown one token per level. Each level proposes substitution,
insertion and deletion extensions whose score upper bound clears the current
threshold, then keeps only candidates that occur in the corpus (one exact
lookup each). Two shortcuts preserve results exactly: cached 2/3-gram
existence tables answer some lookups from RAM, and candidates with few index
runs are finished by scanning their run entries instead of generating and
looking up every extension. The threshold relaxes through a fixed ladder
until K results are found or the floor is reached.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .corpus import SEPARATOR_ID
from .embeddings import EmbeddingTable, GammaParams
from .lookup import IndexReader, LookupRange
from .similarity import (
    DEFAULT_BETA,
    DEFAULT_EDIT_BUDGET,
    DEFAULT_FLOOR,
    QueryContext,
    ScoredPattern,
    SimilarityParams,
    best_final,
    extend_states,
    initial_states,
    state_alignment,
    upper_bound,
)

DEFAULT_K = 20
DEFAULT_ALPHA_SCHEDULE = (0.9, 0.8, 0.7, 0.6, 0.5)
LASTBITS_MAX_RUNS = 50


class SearchError(ValueError):
    pass


@dataclass
class SearchConfig:
    k: int = DEFAULT_K
    floor: float = DEFAULT_FLOOR
    edit_budget: int = DEFAULT_EDIT_BUDGET
    beta: float = DEFAULT_BETA
    use_kgram: bool = True
    use_lastbits: bool = True
    lastbits_max_runs: int = LASTBITS_MAX_RUNS
    alpha_schedule: tuple = DEFAULT_ALPHA_SCHEDULE

    def __post_init__(self):
        if self.k < 1:
            raise SearchError("K must be >= 1")
        if not (0 < self.floor <= 1):
            raise SearchError("floor must be in (0, 1]")


@dataclass
class SearchStats:
    total_lookups: int = 0
    generated_per_level: list[int] = field(default_factory=list)
    surviving_per_level: list[int] = field(default_factory=list)
    kgram_skips: int = 0
    lastbits_scans: int = 0
    alpha_schedule_used: list[float] = field(default_factory=list)
    final_alpha: float = 0.0
    elapsed_ms: float = 0.0


class Searcher:
    """Binds an index to embeddings, whitened norms and the gamma scale."""

    def __init__(
        self,
        index: IndexReader,
        embeddings: EmbeddingTable | None,
        norms: dict[int, float] | None,
        gamma: GammaParams,
    ):
        self.index = index
        self.embeddings = embeddings
        self.norms = norms or {}
        self.gamma = gamma
        # ascending (v, token) pairs drive insertion-candidate cutoffs
        items = sorted((v, t) for t, v in self.norms.items())
        self._norm_values = np.array([v for v, _ in items], dtype=np.float64)
        self._norm_tokens = [t for _, t in items]

    def params(self, config: SearchConfig) -> SimilarityParams:
        return SimilarityParams(
            gamma=self.gamma, beta=config.beta,
            floor=config.floor, edit_budget=config.edit_budget,
        )

    def context(self, query_ids, config: SearchConfig) -> QueryContext:
        return QueryContext(query_ids, self.embeddings, self.norms, self.params(config))

    # -- public entry points ------------------------------------------------

    def search(self, query_ids, config: SearchConfig) -> tuple[list[ScoredPattern], SearchStats]:
        """Adaptive search: relax the threshold until >= K results or the floor."""
        t0 = time.perf_counter()
        ctx = self._checked_context(query_ids, config)
        stats = SearchStats()
        results: list[ScoredPattern] = []
        for alpha in self._ladder(config):
            stats.alpha_schedule_used.append(alpha)
            stats.final_alpha = alpha
            results = self._search_at_alpha(ctx, alpha, config, stats)
            if len(results) >= config.k:
                break
        stats.elapsed_ms = (time.perf_counter() - t0) * 1e3
        return results[: config.k], stats

    def search_fixed_alpha(self, query_ids, alpha: float, config: SearchConfig):
        """One pass at a fixed threshold; returns every qualifying pattern."""
        t0 = time.perf_counter()
        ctx = self._checked_context(query_ids, config)
        stats = SearchStats()
        stats.alpha_schedule_used.append(alpha)
        stats.final_alpha = alpha
        results = self._search_at_alpha(ctx, alpha, config, stats)
        stats.elapsed_ms = (time.perf_counter() - t0) * 1e3
        return results, stats

    def _ladder(self, config: SearchConfig) -> list[float]:
        steps = [a for a in config.alpha_schedule if a > config.floor]
        return sorted(steps, reverse=True) + [config.floor]

    def _checked_context(self, query_ids, config: SearchConfig) -> QueryContext:
        if not query_ids:
            raise SearchError("empty query")
        if len(query_ids) + config.edit_budget > self.index.L:
            raise SearchError(
                f"query of {len(query_ids)} tokens with edit budget "
                f"{config.edit_budget} exceeds the index window L={self.index.L}; "
                "shorten the query or rebuild the index with a larger window"
            )
        return self.context(query_ids, config)

    # -- one fixed-threshold pass --------------------------------------------

    def _search_at_alpha(self, ctx: QueryContext, alpha: float,
                         config: SearchConfig, stats: SearchStats) -> list[ScoredPattern]:
        if not self._answerable(ctx):
            return []
        neighbor_cache: dict[int, list[tuple[int, float]]] = {}
        insertable = self._insertable_tokens(ctx, alpha)
        found: dict[tuple[int, ...], ScoredPattern] = {}

        level_candidates: dict[tuple[int, ...], tuple[list, LookupRange | None]] = {
            (): (initial_states(ctx), None)
        }
        for level in range(1, ctx.max_pattern_len + 1):
            generated: dict[tuple[int, ...], list] = {}
            for prefix, (states, rng) in level_candidates.items():
                if (
                    config.use_lastbits
                    and rng is not None
                    and 0 < rng.n_runs <= config.lastbits_max_runs
                ):
                    stats.lastbits_scans += 1
                    self._scan_resolve(ctx, alpha, config, stats, found,
                                       prefix, states, rng)
                    continue
                for token in self._extension_tokens(
                    ctx, alpha, states, neighbor_cache, insertable
                ):
                    new_states = extend_states(ctx, states, token, level)
                    if not new_states:
                        continue
                    if upper_bound(ctx, new_states) < alpha:
                        continue
                    generated[prefix + (token,)] = new_states
            stats.generated_per_level.append(len(generated))

            survivors: dict[tuple[int, ...], tuple[list, LookupRange | None]] = {}
            for cand, states in generated.items():
                if (
                    config.use_kgram
                    and self.index.meta.get("kgram_tables")
                    and len(cand) in (2, 3)
                    and self.index.kgram_prune_check(cand) == "absent_skip"
                ):
                    stats.kgram_skips += 1
                    continue
                rng = self.index.find_range(cand)
                stats.total_lookups += 1
                if rng.count == 0:
                    continue
                survivors[cand] = (states, rng)
                self._collect_final(ctx, alpha, found, cand, states, rng.count)
            stats.surviving_per_level.append(len(survivors))
            if not survivors:
                break
            level_candidates = survivors

        ranked = sorted(
            found.values(), key=lambda sp: (-sp.similarity, -sp.count, sp.pattern)
        )
        return ranked

    def _answerable(self, ctx: QueryContext) -> bool:
        # an out-of-vocabulary query token can neither match nor be deleted
        return all(qid is not None for qid in ctx.query_ids)

    def _insertable_tokens(self, ctx: QueryContext, alpha: float) -> list[int]:
        """Tokens whose insertion factor exp(-v/gamma) alone stays >= alpha."""
        if ctx.params.edit_budget == 0 or self._norm_values.size == 0:
            return []
        if alpha >= 1.0:
            cutoff = 0.0
        else:
            cutoff = -ctx.gamma * math.log(alpha)
        hi = int(np.searchsorted(self._norm_values, cutoff, side="right"))
        return self._norm_tokens[:hi]

    def _extension_tokens(self, ctx, alpha, states, neighbor_cache, insertable):
        tokens: set[int] = set()
        can_insert = False
        for (i, e, _, _, _, _) in states:
            if e < ctx.params.edit_budget:
                can_insert = True
            if i < ctx.m:
                qid = ctx.query_ids[i]
                if qid is None:
                    continue
                cached = neighbor_cache.get(qid)
                if cached is None:
                    if self.embeddings is None:
                        cached = [(qid, 1.0)]
                    else:
                        cached = self.embeddings.neighbors(qid, alpha)
                    neighbor_cache[qid] = cached
                tokens.update(t for t, _ in cached)
        if can_insert:
            tokens.update(insertable)
        tokens.discard(SEPARATOR_ID)
        return sorted(tokens)

    def _collect_final(self, ctx, alpha, found, pattern, states, count):
        best = best_final(ctx, states)
        if best is None:
            return
        sim, state = best
        if sim < alpha:
            return
        found[pattern] = ScoredPattern(
            pattern=pattern, similarity=sim,
            alignment=state_alignment(state), count=int(count),
        )

    # -- last-bits: finish a rare prefix by scanning its run entries ---------

    def _scan_resolve(self, ctx, alpha, config, stats, found, prefix, states, rng):
        entries, counts, _ = self.index.read_runs(rng.lo_run, rng.hi_run)
        token_matrix = self.index.run_tokens(entries)
        self._scan_children(
            ctx, alpha, config, found, prefix, states,
            token_matrix, counts.astype(np.int64), 0, token_matrix.shape[0],
        )

    def _scan_children(self, ctx, alpha, config, found, prefix, states,
                       token_matrix, counts, lo, hi):
        level = len(prefix) + 1
        if level > ctx.max_pattern_len:
            return
        column = token_matrix[lo:hi, level - 1]
        # runs are sorted, so equal continuation tokens are adjacent
        boundaries = np.flatnonzero(np.diff(column)) + 1
        starts = np.concatenate([[0], boundaries]) + lo
        ends = np.concatenate([boundaries, [hi - lo]]) + lo
        for rs, re_ in zip(starts, ends):
            token = int(token_matrix[rs, level - 1])
            if token == SEPARATOR_ID:
                continue
            new_states = extend_states(ctx, states, token, level)
            if not new_states:
                continue
            if upper_bound(ctx, new_states) < alpha:
                continue
            child = prefix + (token,)
            child_count = int(counts[rs:re_].sum())
            self._collect_final(ctx, alpha, found, child, new_states, child_count)
            self._scan_children(ctx, alpha, config, found, child, new_states,
                                token_matrix, counts, rs, re_)
