import type { QueryResponse } from "../types";

export interface Turn {
  question: string;
  response?: QueryResponse;
  error?: { status: number; message: string; diagnostics?: Record<string, string> };
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function renderVerifiedBadge(response: QueryResponse): HTMLElement {
  const badge = el("span", response.answer.verified ? "badge verified" : "badge unverified");
  badge.textContent = response.answer.verified ? "verified" : "unverified";
  return badge;
}

export function renderTurn(turn: Turn): HTMLElement {
  const root = el("article", "turn");
  root.appendChild(el("div", "question", turn.question));

  if (turn.error) {
    const box = el("div", "error-box");
    box.appendChild(el("div", "error-message", turn.error.message));
    if (turn.error.status === 422 && turn.error.diagnostics) {
      const hint = el("div", "rephrase-hint", "Could not translate this question - try rephrasing.");
      box.appendChild(hint);
      const list = el("ul", "diagnostics");
      for (const [provider, detail] of Object.entries(turn.error.diagnostics)) {
        list.appendChild(el("li", undefined, `${provider}: ${detail}`));
      }
      box.appendChild(list);
    }
    root.appendChild(box);
    return root;
  }

  const response = turn.response!;
  const answer = el("div", "answer");
  answer.appendChild(el("span", "answer-text", response.answer.text));
  answer.appendChild(renderVerifiedBadge(response));
  root.appendChild(answer);

  if (!response.answer.verified && response.answer.violations.length) {
    const list = el("ul", "violations");
    for (const violation of response.answer.violations) {
      list.appendChild(el("li", undefined, violation));
    }
    root.appendChild(list);
  }

  const details = el("details", "cypher-block");
  details.appendChild(el("summary", undefined, `Cypher (${response.source})`));
  const code = el("pre", "cypher");
  code.textContent = response.cypher;
  details.appendChild(code);
  root.appendChild(details);

  if (response.warnings.length) {
    const list = el("ul", "warnings");
    for (const warning of response.warnings) {
      list.appendChild(el("li", undefined, warning));
    }
    root.appendChild(list);
  }

  const meta = el("div", "meta");
  const tier = response.cache.tier;
  meta.textContent = `cache: ${tier} | ${response.elapsed_ms.toFixed(1)} ms`;
  root.appendChild(meta);
  return root;
}
