import { ApiError, AskgClient } from "./api";
import { renderResults } from "./panels/results";
import { renderStats } from "./panels/stats";
import { renderSubgraph } from "./panels/subgraph";
import { renderTurn, type Turn } from "./panels/query";
import type { QueryResponse, StatsResponse } from "./types";

export const STATS_POLL_MS = 2000;

export class Console {
  client: AskgClient;
  root!: HTMLElement;
  transcript: Turn[] = [];
  lastQuestion = "";
  lastPageSize: number | undefined;
  lastStats: StatsResponse | null = null;
  private inFlight = false;
  private queue: string[] = [];
  private pollTimer: ReturnType<typeof setInterval> | null = null;

  constructor(client?: AskgClient) {
    this.client = client ?? new AskgClient();
  }

  mount(root: HTMLElement): void {
    this.root = root;
    root.innerHTML = `
      <header class="topbar">
        <h1>Aviation Safety Knowledge Graph</h1>
        <div class="offline-banner" hidden>Server unreachable - showing last known data.</div>
      </header>
      <main>
        <section class="panel query-panel">
          <form class="ask-form">
            <input class="ask-input" type="text"
                   placeholder="Ask about accidents, aircraft, airports..." />
            <button class="ask-submit" type="submit">Ask</button>
          </form>
          <div class="transcript"></div>
        </section>
        <section class="panel results-panel"></section>
        <section class="panel subgraph-panel"></section>
        <section class="panel stats-panel"></section>
      </main>`;

    const form = root.querySelector<HTMLFormElement>(".ask-form")!;
    form.addEventListener("submit", (event) => {
      event.preventDefault();
      const input = root.querySelector<HTMLInputElement>(".ask-input")!;
      const question = input.value.trim();
      if (question) {
        input.value = "";
        void this.submit(question);
      }
    });
  }

  startPolling(): void {
    this.pollTimer = setInterval(() => void this.refreshStats(), STATS_POLL_MS);
    void this.refreshStats();
  }

  stopPolling(): void {
    if (this.pollTimer !== null) clearInterval(this.pollTimer);
    this.pollTimer = null;
  }

  // One in-flight query per session; later submissions queue up.
  async submit(question: string): Promise<void> {
    if (this.inFlight) {
      this.queue.push(question);
      return;
    }
    this.inFlight = true;
    try {
      await this.runQuestion(question, 1);
    } finally {
      this.inFlight = false;
      const next = this.queue.shift();
      if (next) await this.submit(next);
    }
  }

  async goToPage(page: number): Promise<void> {
    if (this.lastQuestion) await this.runQuestion(this.lastQuestion, page);
  }

  private async runQuestion(question: string, page: number): Promise<void> {
    this.lastQuestion = question;
    let turn: Turn;
    try {
      const size = page > 1 ? this.lastPageSize : undefined;
      const response = await this.client.query(question, page, size);
      this.lastPageSize = response.page.size;
      turn = { question, response };
      this.setOffline(false);
      this.renderResultPanels(response);
    } catch (error) {
      if (error instanceof ApiError) {
        turn = {
          question,
          error: { status: error.status, message: error.message, diagnostics: error.diagnostics },
        };
      } else {
        this.setOffline(true);
        turn = { question, error: { status: 0, message: "server unreachable" } };
      }
    }
    this.transcript.push(turn);
    this.renderTranscript();
  }

  private renderTranscript(): void {
    const box = this.root.querySelector<HTMLElement>(".transcript")!;
    box.innerHTML = "";
    for (const turn of this.transcript) box.appendChild(renderTurn(turn));
  }

  private renderResultPanels(response: QueryResponse): void {
    const resultsPanel = this.root.querySelector<HTMLElement>(".results-panel")!;
    resultsPanel.innerHTML = "";
    resultsPanel.appendChild(
      renderResults(response, { onPage: (page) => void this.goToPage(page) }),
    );
    const subgraphPanel = this.root.querySelector<HTMLElement>(".subgraph-panel")!;
    subgraphPanel.innerHTML = "";
    if (response.subgraph.nodes.length) {
      subgraphPanel.appendChild(renderSubgraph(response.subgraph));
    } else {
      const empty = document.createElement("div");
      empty.className = "empty-state";
      empty.textContent = "No subgraph to display.";
      subgraphPanel.appendChild(empty);
    }
  }

  async refreshStats(): Promise<void> {
    try {
      this.lastStats = await this.client.stats();
      this.setOffline(false);
    } catch {
      this.setOffline(true);
      if (!this.lastStats) return;
    }
    const panel = this.root.querySelector<HTMLElement>(".stats-panel")!;
    panel.innerHTML = "";
    panel.appendChild(renderStats(this.lastStats));
  }

  private setOffline(offline: boolean): void {
    const banner = this.root.querySelector<HTMLElement>(".offline-banner")!;
    banner.hidden = !offline;
  }
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  const console_ = new Console();
  console_.mount(document.getElementById("app")!);
  console_.startPolling();
}
