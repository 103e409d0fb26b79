"""Turn alignments into per-token edit annotations and display strings.

Annotation ops: match, substitute (pattern word differs from the aligned
query word), insert (pattern word with no query counterpart) and delete
(query word missing from the pattern). The UI and CLI derive all styling
from these records; similarity math never leaves the engine.
"""

from __future__ import annotations

from .similarity import Alignment, ScoredPattern


def annotate(alignment: Alignment, query_words: list[str],
             pattern_words: list[str]) -> list[dict]:
    out: list[dict] = []
    for op in alignment.ops:
        kind = op[0]
        if kind == "match":
            _, qpos, ppos, cos = op
            word = pattern_words[ppos]
            if word == query_words[qpos]:
                out.append({"op": "match", "token": word})
            else:
                out.append({
                    "op": "substitute", "token": word,
                    "query_token": query_words[qpos],
                })
        elif kind == "ins":
            _, ppos, _v = op
            out.append({"op": "insert", "token": pattern_words[ppos]})
        else:
            _, qpos, _v = op
            out.append({"op": "delete", "token": query_words[qpos]})
    return out


_MARKS = {"match": "{}", "substitute": "*{}*", "insert": "+{}+", "delete": "~{}~"}


def render_text(annotations: list[dict]) -> str:
    return " ".join(_MARKS[a["op"]].format(a["token"]) for a in annotations)


def result_payload(sp: ScoredPattern, query_words: list[str],
                   vocab_words: list[str]) -> dict:
    pattern_words = [vocab_words[t] for t in sp.pattern]
    annotations = annotate(sp.alignment, query_words, pattern_words)
    return {
        "pattern": pattern_words,
        "rendered": render_text(annotations),
        "similarity": round(sp.similarity * 100, 1),
        "count": sp.count,
        "annotations": annotations,
    }
