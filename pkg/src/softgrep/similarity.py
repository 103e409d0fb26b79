"""Query/pattern similarity: smooth minimum over matched cosines, scaled by
an exp(-v/gamma) factor per inserted or deleted word.

The alignment search is exact: per DP cell we keep the Pareto frontier of
(S, P) pairs, where S accumulates beta^(1-c) - 1 over matches and P accumulates
whitened-norm penalties over edits.  The final score
    (1 - log_beta(S + 1)) * exp(-P / gamma)
is monotone decreasing in both coordinates, so the frontier suffices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .embeddings import EmbeddingTable, GammaParams

DEFAULT_BETA = 1e4
DEFAULT_FLOOR = 0.45
EXTENDED_FLOOR = 0.20
DEFAULT_EDIT_BUDGET = 2


class SimilarityError(ValueError):
    pass


def smooth_min(cosines: Sequence[float], beta: float = DEFAULT_BETA) -> float:
    """1 - log_beta(sum(beta^(1-c) - 1) + 1): a smooth minimum of the cosines."""
    if len(cosines) == 0:
        raise SimilarityError("no aligned terms")
    if beta <= 1:
        raise SimilarityError("beta must exceed 1")
    lb = math.log(beta)
    s = sum(math.expm1((1.0 - c) * lb) for c in cosines)
    return 1.0 - math.log1p(s) / lb


def edit_factor(v: float, gamma: float) -> float:
    """Score multiplier for inserting or deleting a word of squared norm v."""
    if v < 0 or gamma <= 0:
        raise SimilarityError("need v >= 0 and gamma > 0")
    return math.exp(-v / gamma)


@dataclass
class SimilarityParams:
    gamma: GammaParams
    beta: float = DEFAULT_BETA
    floor: float = DEFAULT_FLOOR
    edit_budget: int = DEFAULT_EDIT_BUDGET

    def __post_init__(self):
        if self.beta <= 1:
            raise SimilarityError("beta must exceed 1")
        if not (0 < self.floor <= 1):
            raise SimilarityError("floor must be in (0, 1]")
        if self.edit_budget < 0:
            raise SimilarityError("edit budget must be >= 0")


@dataclass
class Alignment:
    """Edit script between query and pattern.

    ops entries: ("match", qpos, ppos, cosine), ("del", qpos, v),
    ("ins", ppos, v). sum_term is S, penalty_sum is P as defined above.
    """

    ops: tuple
    sum_term: float
    penalty_sum: float

    @property
    def edits(self) -> int:
        return sum(1 for op in self.ops if op[0] != "match")


@dataclass
class ScoredPattern:
    pattern: tuple[int, ...]
    similarity: float
    alignment: Alignment
    count: int = 0


class QueryContext:
    """Per-query scoring context: cosines, penalties and the DP machinery."""

    def __init__(
        self,
        query_ids: Sequence[int | None],
        embeddings: EmbeddingTable | None,
        norms: dict[int, float],
        params: SimilarityParams,
    ):
        if len(query_ids) == 0:
            raise SimilarityError("empty query")
        self.query_ids = list(query_ids)
        self.m = len(query_ids)
        self.embeddings = embeddings
        self.norms = norms
        self.params = params
        self.gamma = params.gamma.gamma_of(self.m)
        self._log_beta = math.log(params.beta)
        self.max_pattern_len = self.m + params.edit_budget
        # one dense cosine row per query position: cosine() becomes an
        # array lookup in the hot alignment loops
        self._cos_rows: list = []
        if embeddings is not None and len(embeddings.token_ids):
            width = int(embeddings.token_ids.max()) + 1
        else:
            width = 0
        cache: dict[int, object] = {}
        for qid in self.query_ids:
            if qid is None or embeddings is None or qid not in embeddings:
                self._cos_rows.append(None)
                continue
            row = cache.get(qid)
            if row is None:
                dots = embeddings.vectors @ embeddings.vectors[embeddings.row_of[qid]]
                row = np.full(width, np.nan)
                row[embeddings.token_ids] = dots
                cache[qid] = row
            self._cos_rows.append(row)
        self._del_pen = [
            norms.get(qid) if qid is not None else None for qid in self.query_ids
        ]

    def cosine(self, qpos: int, token: int) -> float | None:
        """Cosine between query token at qpos and `token`; None = unmatched."""
        qid = self.query_ids[qpos]
        if qid == token:
            return 1.0 if qid is not None else None
        row = self._cos_rows[qpos]
        if row is None or token >= row.size:
            return None
        cos = row[token]
        return float(cos) if cos == cos else None

    def penalty(self, token: int | None) -> float | None:
        """Whitened squared norm for an edit on `token`; None = not editable."""
        if token is None:
            return None
        return self.norms.get(int(token))

    def match_term(self, cosine: float) -> float:
        return math.expm1((1.0 - cosine) * self._log_beta)

    def score(self, s: float, p: float) -> float:
        """Score of an (S, P) accumulator pair; negative smooth-min scores 0."""
        sm = 1.0 - math.log1p(s) / self._log_beta
        if sm <= 0.0:
            return 0.0
        return sm * math.exp(-p / self.gamma)


# Alignment DP states are tuples (i, e, matched, S, P, ops_link) where
# ops_link is a backward-linked (op, parent) chain shared across states.


def initial_states(ctx: QueryContext) -> list[tuple]:
    return _delete_closure(ctx, [(0, 0, False, 0.0, 0.0, None)])


def extend_states(ctx: QueryContext, states: list[tuple], token: int, level: int) -> list[tuple]:
    """All states reachable by consuming one more pattern token, then deletions.

    `level` is the pattern length after appending `token`.
    """
    budget = ctx.params.edit_budget
    out: list[tuple] = []
    ins_pen = ctx.penalty(token)
    for (i, e, matched, s, p, ops) in states:
        if i < ctx.m:
            cos = ctx.cosine(i, token)
            if cos is not None:
                out.append(
                    (i + 1, e, True, s + ctx.match_term(cos), p,
                     (("match", i, level - 1, cos), ops))
                )
        if e < budget and ins_pen is not None:
            out.append(
                (i, e + 1, matched, s, p + ins_pen, (("ins", level - 1, ins_pen), ops))
            )
    return _prune(ctx, _delete_closure(ctx, out), level)


def _delete_closure(ctx: QueryContext, states: list[tuple]) -> list[tuple]:
    budget = ctx.params.edit_budget
    out = list(states)
    frontier = states
    while frontier:
        nxt = []
        for (i, e, matched, s, p, ops) in frontier:
            if i < ctx.m and e < budget:
                pen = ctx._del_pen[i]
                if pen is not None:
                    nxt.append((i + 1, e + 1, matched, s, p + pen, (("del", i, pen), ops)))
        out.extend(nxt)
        frontier = nxt
    return out


def _prune(ctx: QueryContext, states: list[tuple], level: int) -> list[tuple]:
    """Drop uncompletable states and Pareto-dominated (S, P) per (i, e, matched)."""
    budget = ctx.params.edit_budget
    room = ctx.max_pattern_len - level
    buckets: dict[tuple[int, int, bool], list[tuple]] = {}
    for st in states:
        i, e, matched = st[0], st[1], st[2]
        if (ctx.m - i) > room + (budget - e):
            continue
        bucket = buckets.setdefault((i, e, matched), [])
        s, p = st[3], st[4]
        if any(o[3] <= s and o[4] <= p for o in bucket):
            continue
        bucket[:] = [o for o in bucket if not (s <= o[3] and p <= o[4])]
        bucket.append(st)
    return [st for bucket in buckets.values() for st in bucket]


def upper_bound(ctx: QueryContext, states: Iterable[tuple]) -> float:
    """Max score over partial states; a true bound on any completion's score."""
    best = 0.0
    for st in states:
        sc = ctx.score(st[3], st[4])
        if sc > best:
            best = sc
    return best


def final_candidates(ctx: QueryContext, states: Iterable[tuple]):
    """States that consumed the whole query with at least one match."""
    return [st for st in states if st[0] == ctx.m and st[2]]


def best_final(ctx: QueryContext, states: Iterable[tuple]) -> tuple[float, tuple] | None:
    best: tuple[float, tuple] | None = None
    for st in final_candidates(ctx, states):
        sc = ctx.score(st[3], st[4])
        if sc > 0 and (best is None or sc > best[0]):
            best = (sc, st)
    return best


def state_alignment(state: tuple) -> Alignment:
    ops = []
    link = state[5]
    while link is not None:
        op, link = link
        ops.append(op)
    ops.reverse()
    return Alignment(ops=tuple(ops), sum_term=state[3], penalty_sum=state[4])


def pattern_similarity(
    query_ids: Sequence[int | None],
    pattern: Sequence[int],
    embeddings: EmbeddingTable | None,
    norms: dict[int, float],
    params: SimilarityParams,
) -> tuple[float, Alignment | None]:
    """Best alignment score between query and pattern; (0.0, None) if none.

    Exact over all alignments with at most edit_budget insertions+deletions.
    """
    ctx = QueryContext(query_ids, embeddings, norms, params)
    return context_similarity(ctx, pattern)


def context_similarity(ctx: QueryContext, pattern: Sequence[int]) -> tuple[float, Alignment | None]:
    if len(pattern) == 0:
        return 0.0, None
    if abs(len(pattern) - ctx.m) > ctx.params.edit_budget:
        return 0.0, None
    saved = ctx.max_pattern_len
    ctx.max_pattern_len = min(saved, len(pattern))
    try:
        states = initial_states(ctx)
        for level, token in enumerate(pattern, start=1):
            states = extend_states(ctx, states, int(token), level)
            if not states:
                return 0.0, None
    finally:
        ctx.max_pattern_len = saved
    best = best_final(ctx, states)
    if best is None:
        return 0.0, None
    return best[0], state_alignment(best[1])


def prefix_upper_bound(
    query_ids: Sequence[int | None],
    prefix: Sequence[int],
    embeddings: EmbeddingTable | None,
    norms: dict[int, float],
    params: SimilarityParams,
) -> float:
    """Upper bound on the similarity of any pattern extending `prefix`."""
    ctx = QueryContext(query_ids, embeddings, norms, params)
    states = initial_states(ctx)
    for level, token in enumerate(prefix, start=1):
        states = extend_states(ctx, states, int(token), level)
        if not states:
            return 0.0
    return upper_bound(ctx, states)
