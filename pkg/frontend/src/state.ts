/** Form state lives in the URL query string so refresh reproduces the view. */

export const EXTENDED_FLOOR = 0.2;
export const DEFAULT_FLOOR = 0.45;
export const DEFAULT_K = 20;
export const DEFAULT_BUDGET = 2;

export interface FormState {
  q: string;
  k: number;
  floor: number;
  extended: boolean;
  budget: number;
}

export function defaultState(): FormState {
  return {
    q: "",
    k: DEFAULT_K,
    floor: DEFAULT_FLOOR,
    extended: false,
    budget: DEFAULT_BUDGET,
  };
}

/** Effective similarity floor: the extended toggle overrides the slider. */
export function effectiveFloor(state: FormState): number {
  return state.extended ? EXTENDED_FLOOR : state.floor;
}

export function buildSearchUrl(state: FormState, base = ""): string {
  const params = new URLSearchParams({
    q: state.q,
    k: String(state.k),
    floor: String(effectiveFloor(state)),
    budget: String(state.budget),
  });
  return `${base}/api/search?${params.toString()}`;
}

export function buildOccurrencesUrl(
  pattern: string,
  limit: number,
  context: number,
  base = "",
): string {
  const params = new URLSearchParams({
    pattern,
    limit: String(limit),
    context: String(context),
  });
  return `${base}/api/occurrences?${params.toString()}`;
}

export function toQueryString(state: FormState): string {
  const params = new URLSearchParams();
  if (state.q) params.set("q", state.q);
  if (state.k !== DEFAULT_K) params.set("k", String(state.k));
  if (state.floor !== DEFAULT_FLOOR) params.set("floor", String(state.floor));
  if (state.extended) params.set("extended", "1");
  if (state.budget !== DEFAULT_BUDGET) params.set("budget", String(state.budget));
  return params.toString();
}

export function fromQueryString(qs: string): FormState {
  const params = new URLSearchParams(qs);
  const state = defaultState();
  state.q = params.get("q") ?? "";
  const k = Number(params.get("k"));
  if (Number.isFinite(k) && k >= 1) state.k = k;
  const floor = Number(params.get("floor"));
  if (Number.isFinite(floor) && floor > 0 && floor <= 1) state.floor = floor;
  state.extended = params.get("extended") === "1";
  const budget = Number(params.get("budget"));
  if (Number.isFinite(budget) && budget >= 0) state.budget = budget;
  return state;
}
