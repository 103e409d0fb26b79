/** Browser wiring: debounced queries, newest-request-wins cancellation,
 * URL-backed state and on-demand KWIC context expansion. */

import {
  renderError,
  renderOccurrences,
  renderResults,
  renderStats,
} from "./render.js";
import {
  buildOccurrencesUrl,
  buildSearchUrl,
  fromQueryString,
  toQueryString,
  type FormState,
} from "./state.js";
import type { OccurrencesResponse, SearchResponse } from "./types.js";

const DEBOUNCE_MS = 300;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

const queryInput = el<HTMLInputElement>("query");
const kInput = el<HTMLInputElement>("k");
const floorInput = el<HTMLInputElement>("floor");
const extendedInput = el<HTMLInputElement>("extended");
const budgetInput = el<HTMLInputElement>("budget");
const resultsBox = el<HTMLDivElement>("results");
const statsBox = el<HTMLDivElement>("stats");

let inflight: AbortController | null = null;
let debounceTimer: number | undefined;
let lastResponse: SearchResponse | null = null;

function currentState(): FormState {
  return {
    q: queryInput.value.trim(),
    k: Number(kInput.value) || 20,
    floor: Number(floorInput.value) || 0.45,
    extended: extendedInput.checked,
    budget: Number(budgetInput.value) || 0,
  };
}

function applyState(state: FormState): void {
  queryInput.value = state.q;
  kInput.value = String(state.k);
  floorInput.value = String(state.floor);
  extendedInput.checked = state.extended;
  budgetInput.value = String(state.budget);
}

function scheduleSearch(): void {
  window.clearTimeout(debounceTimer);
  debounceTimer = window.setTimeout(runSearch, DEBOUNCE_MS);
}

async function runSearch(): Promise<void> {
  const state = currentState();
  history.replaceState(null, "", `?${toQueryString(state)}`);
  if (!state.q) {
    resultsBox.innerHTML = "";
    statsBox.textContent = "";
    return;
  }
  inflight?.abort();
  const controller = new AbortController();
  inflight = controller;
  statsBox.textContent = "searching…";
  try {
    const resp = await fetch(buildSearchUrl(state), {
      signal: controller.signal,
    });
    const body = await resp.json();
    if (controller !== inflight) return; // a newer request superseded this one
    if (!resp.ok) {
      resultsBox.innerHTML = renderError(body.message ?? "request failed");
      statsBox.textContent = "";
      return;
    }
    lastResponse = body as SearchResponse;
    resultsBox.innerHTML = renderResults(lastResponse);
    statsBox.innerHTML = renderStats(lastResponse.stats, lastResponse.truncated);
  } catch (err) {
    if ((err as Error).name === "AbortError") return;
    resultsBox.innerHTML = renderError(String(err));
    statsBox.textContent = "";
  }
}

async function toggleContext(rank: number): Promise<void> {
  if (!lastResponse) return;
  const row = lastResponse.results[rank - 1];
  if (!row) return;
  const holder = resultsBox.querySelector<HTMLTableRowElement>(
    `tr.context-row[data-rank="${rank}"]`,
  );
  if (!holder) return;
  if (!holder.hidden) {
    holder.hidden = true;
    return;
  }
  const cell = holder.querySelector("td");
  if (!cell) return;
  cell.textContent = "loading…";
  holder.hidden = false;
  try {
    const resp = await fetch(
      buildOccurrencesUrl(row.pattern.join(" "), 10, 8),
    );
    const body = (await resp.json()) as OccurrencesResponse;
    cell.innerHTML = resp.ok
      ? renderOccurrences(body.occurrences)
      : renderError("context unavailable", false);
  } catch (err) {
    cell.innerHTML = renderError(String(err));
  }
}

resultsBox.addEventListener("click", (ev) => {
  const target = ev.target as HTMLElement;
  if (target.classList.contains("show-context")) {
    void toggleContext(Number(target.dataset.rank));
  } else if (target.classList.contains("retry")) {
    void runSearch();
  }
});

queryInput.addEventListener("input", scheduleSearch);
for (const input of [kInput, floorInput, budgetInput]) {
  input.addEventListener("change", () => void runSearch());
}
extendedInput.addEventListener("change", () => void runSearch());
el<HTMLFormElement>("search-form").addEventListener("submit", (ev) => {
  ev.preventDefault();
  window.clearTimeout(debounceTimer);
  void runSearch();
});

applyState(fromQueryString(location.search));
if (queryInput.value) void runSearch();
