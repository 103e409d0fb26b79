import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import { describe, expect, it } from "vitest";

import {
  renderOccurrences,
  renderResultRow,
  renderResults,
  renderStats,
  renderToken,
} from "../src/render.js";
import type { SearchResponse } from "../src/types.js";

const here = dirname(fileURLToPath(import.meta.url));
const fixture: SearchResponse = JSON.parse(
  readFileSync(join(here, "../fixtures/search_response.json"), "utf-8"),
);

describe("result rendering", () => {
  it("renders the fixture exactly (snapshot)", () => {
    expect(renderResults(fixture)).toMatchSnapshot();
  });

  it("gives substitution, insertion and deletion distinct styles", () => {
    const html = renderResults(fixture);
    expect(html).toContain('class="tok tok-substitute"');
    expect(html).toContain('class="tok tok-insert"');
    expect(html).toContain('class="tok tok-delete"');
    expect(html).toContain('class="tok tok-match"');
    const classes = ["tok-substitute", "tok-insert", "tok-delete"].map(
      (c) => html.split(c).length - 1,
    );
    expect(classes).toEqual([1, 1, 1]); // exactly one of each in the fixture
  });

  it("shows similarity and count verbatim from the API", () => {
    const html = renderResults(fixture);
    expect(html).toContain(">85.4%</td>");
    expect(html).toContain(">12662</td>");
    expect(html).toContain(">84.2%</td>");
    expect(html).toContain(">76.6%</td>");
    expect(html).toContain(">14</td>");
  });

  it("marks deleted tokens with a strikethrough element", () => {
    expect(renderToken({ op: "delete", token: "the" })).toBe(
      '<del class="tok tok-delete">the</del>',
    );
  });

  it("names the replaced query word on substitutions", () => {
    const html = renderToken({
      op: "substitute",
      token: "significance",
      query_token: "importance",
    });
    expect(html).toContain('title="for &quot;importance&quot;"');
  });

  it("escapes HTML in tokens", () => {
    const html = renderToken({ op: "match", token: "<b>&x" });
    expect(html).toContain("&lt;b&gt;&amp;x");
  });

  it("renders the empty state explicitly", () => {
    const empty: SearchResponse = {
      ...fixture,
      results: [],
    };
    expect(renderResults(empty)).toContain("no matches");
  });

  it("renders a per-row expansion slot", () => {
    const html = renderResultRow(fixture.results[0]!, 1);
    expect(html).toContain('class="show-context" data-rank="1"');
    expect(html).toContain('class="context-row" data-rank="1" hidden');
  });
});

describe("stats and occurrences", () => {
  it("formats latency, alpha and lookup count", () => {
    const html = renderStats(fixture.stats, false);
    expect(html).toBe("55.0 ms · alpha 0.70 · 212 lookups");
  });

  it("flags truncation", () => {
    expect(renderStats(fixture.stats, true)).toContain("truncated");
  });

  it("renders KWIC lines (snapshot)", () => {
    const html = renderOccurrences([
      {
        position: 421,
        left: "medals at the",
        match: "olympics gold medalist",
        right: "ceremony in paris",
      },
    ]);
    expect(html).toMatchSnapshot();
    expect(html).toContain("<mark>olympics gold medalist</mark>");
  });
});
