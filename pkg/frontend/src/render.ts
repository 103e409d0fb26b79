/** Pure HTML renderers. The UI does no similarity math: every token style
 * derives from the API's edit annotations, and similarity/count are shown
 * verbatim as delivered. Pure string functions keep snapshot tests DOM-free.
 */

import type {
  Annotation,
  Occurrence,
  SearchResponse,
  SearchStats,
} from "./types.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function renderToken(a: Annotation): string {
  const token = escapeHtml(a.token);
  switch (a.op) {
    case "substitute": {
      const title = a.query_token
        ? ` title="for &quot;${escapeHtml(a.query_token)}&quot;"`
        : "";
      return `<span class="tok tok-substitute"${title}>${token}</span>`;
    }
    case "insert":
      return `<span class="tok tok-insert">${token}</span>`;
    case "delete":
      return `<del class="tok tok-delete">${token}</del>`;
    default:
      return `<span class="tok tok-match">${token}</span>`;
  }
}

export function renderResultRow(
  row: { similarity: number; count: number; annotations: Annotation[] },
  rank: number,
): string {
  const tokens = row.annotations.map(renderToken).join(" ");
  return (
    `<tr class="result" data-rank="${rank}">` +
    `<td class="rank">${rank}</td>` +
    `<td class="pattern">${tokens}</td>` +
    `<td class="similarity">${row.similarity}%</td>` +
    `<td class="count">${row.count}</td>` +
    `<td class="expand"><button class="show-context" data-rank="${rank}">context</button></td>` +
    `</tr>` +
    `<tr class="context-row" data-rank="${rank}" hidden><td colspan="5"></td></tr>`
  );
}

export function renderResults(response: SearchResponse): string {
  if (response.results.length === 0) {
    return `<p class="empty">no matches at or above the similarity floor</p>`;
  }
  const rows = response.results
    .map((row, i) => renderResultRow(row, i + 1))
    .join("\n");
  return (
    `<table class="results">` +
    `<thead><tr><th>#</th><th>pattern</th><th>sim.</th><th>count</th><th></th></tr></thead>` +
    `<tbody>\n${rows}\n</tbody></table>`
  );
}

export function renderStats(stats: SearchStats, truncated: boolean): string {
  const parts = [
    `${stats.elapsed_ms.toFixed(1)} ms`,
    `alpha ${stats.final_alpha.toFixed(2)}`,
    `${stats.total_lookups} lookups`,
  ];
  if (truncated) parts.push("truncated");
  return escapeHtml(parts.join(" · "));
}

export function renderOccurrences(occurrences: Occurrence[]): string {
  if (occurrences.length === 0) {
    return `<p class="empty">no stored occurrences</p>`;
  }
  const items = occurrences
    .map(
      (o) =>
        `<li><span class="pos">${o.position}</span> ` +
        `${escapeHtml(o.left)} <mark>${escapeHtml(o.match)}</mark> ` +
        `${escapeHtml(o.right)}</li>`,
    )
    .join("");
  return `<ul class="kwic">${items}</ul>`;
}

export function renderError(message: string, retryable = true): string {
  const retry = retryable
    ? ` <button class="retry">retry</button>`
    : "";
  return `<p class="error">${escapeHtml(message)}${retry}</p>`;
}
