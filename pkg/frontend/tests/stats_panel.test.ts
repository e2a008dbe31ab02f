import { afterEach, describe, expect, it, vi } from "vitest";
import { Console, STATS_POLL_MS } from "../src/app";
import { AskgClient } from "../src/api";
import { renderStats } from "../src/panels/stats";
import { statsResponse, stubFetch } from "./helpers";

afterEach(() => {
  vi.unstubAllGlobals();
  vi.useRealTimers();
  document.body.innerHTML = "";
});

describe("stats dashboard", () => {
  it("mirrors the /api/stats payload verbatim", () => {
    const stats = statsResponse();
    const panel = renderStats(stats);
    for (const [label, count] of Object.entries(stats.nodes)) {
      const item = panel.querySelector(`.node-counts li[data-label="${label}"]`)!;
      expect(item.textContent).toBe(`${label}: ${count}`);
    }
    for (const [type, count] of Object.entries(stats.relationships)) {
      const item = panel.querySelector(`.rel-counts li[data-type="${type}"]`)!;
      expect(item.textContent).toBe(`${type}: ${count}`);
    }
    expect(panel.querySelector(".cache-counters")!.textContent).toContain("hits_exact: 3");
    const logRow = panel.querySelectorAll(".query-log tr")[1]!;
    expect(logRow.textContent).toContain("Find Boeing 737 accidents");
    expect(logRow.textContent).toContain("17");
  });

  it("draws one bar per node label", () => {
    const stats = statsResponse();
    const panel = renderStats(stats);
    expect(panel.querySelectorAll(".bar-chart rect")).toHaveLength(
      Object.keys(stats.nodes).length,
    );
  });

  it("polls /api/stats on the 2 second cadence", async () => {
    vi.useFakeTimers();
    const stub = stubFetch();
    const root = document.createElement("div");
    document.body.appendChild(root);
    const console_ = new Console(new AskgClient("", "s"));
    console_.mount(root);
    console_.startPolling();
    await vi.advanceTimersByTimeAsync(STATS_POLL_MS * 3 + 50);
    console_.stopPolling();
    const statsCalls = stub.calls.filter((c) => c.url.includes("/api/stats"));
    expect(statsCalls.length).toBeGreaterThanOrEqual(3);
    expect(root.querySelector(".stats-panel .node-counts")).not.toBeNull();
  });

  it("keeps the last data and shows the banner when polling fails", async () => {
    vi.useFakeTimers();
    const stub = stubFetch();
    const root = document.createElement("div");
    document.body.appendChild(root);
    const console_ = new Console(new AskgClient("", "s"));
    console_.mount(root);
    console_.startPolling();
    await vi.advanceTimersByTimeAsync(STATS_POLL_MS + 50);
    stub.failAll();
    await vi.advanceTimersByTimeAsync(STATS_POLL_MS + 50);
    console_.stopPolling();
    expect(root.querySelector<HTMLElement>(".offline-banner")!.hidden).toBe(false);
    expect(root.querySelector(".stats-panel .node-counts")).not.toBeNull();
  });
});
