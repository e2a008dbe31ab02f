import type { Cell, QueryResponse, SubgraphNode } from "../types";

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

function cellText(cell: Cell): string {
  if (cell === null) return "";
  if (typeof cell === "object") {
    const props = cell.properties as Record<string, unknown>;
    for (const key of ["event_id", "name", "icao", "registration"]) {
      if (props[key] !== undefined && props[key] !== "") return String(props[key]);
    }
    return `${cell.labels.join(":")}#${cell.id}`;
  }
  return String(cell);
}

export interface ResultHandlers {
  onPage?: (page: number) => void;
  onNodeDetail?: (node: SubgraphNode) => void;
}

export function renderResults(response: QueryResponse, handlers: ResultHandlers = {}): HTMLElement {
  const root = el("section", "results");
  if (!response.rows.length) {
    root.appendChild(el("div", "empty-state", "No rows returned."));
    return root;
  }

  const nodeIndex = new Map<number, SubgraphNode>();
  for (const node of response.subgraph.nodes) nodeIndex.set(node.id, node);

  const table = el("table", "results-table");
  const head = el("tr");
  for (const column of response.columns) head.appendChild(el("th", undefined, column));
  head.appendChild(el("th", undefined, "provenance"));
  table.appendChild(head);

  response.rows.forEach((row, i) => {
    const tr = el("tr");
    for (const cell of row) tr.appendChild(el("td", undefined, cellText(cell)));
    const prov = el("td", "provenance-cell");
    for (const nodeId of response.provenance[i] ?? []) {
      const badge = el("button", "provenance-badge", `#${nodeId}`);
      badge.type = "button";
      badge.addEventListener("click", () => {
        const node = nodeIndex.get(nodeId);
        if (node && handlers.onNodeDetail) handlers.onNodeDetail(node);
        const existing = badge.querySelector(".node-popover");
        if (existing) {
          existing.remove();
          return;
        }
        if (node) {
          const pop = el("div", "node-popover");
          pop.appendChild(el("div", "popover-labels", node.labels.join(", ")));
          for (const [key, value] of Object.entries(node.properties)) {
            pop.appendChild(el("div", "popover-prop", `${key}: ${value}`));
          }
          badge.appendChild(pop);
        }
      });
      prov.appendChild(badge);
    }
    tr.appendChild(prov);
    table.appendChild(tr);
  });
  root.appendChild(table);

  const pager = el("div", "pager");
  const prev = el("button", "pager-prev", "prev");
  prev.type = "button";
  prev.disabled = response.page.number <= 1;
  prev.addEventListener("click", () => handlers.onPage?.(response.page.number - 1));
  const next = el("button", "pager-next", "next");
  next.type = "button";
  next.disabled = !response.page.has_more;
  next.addEventListener("click", () => handlers.onPage?.(response.page.number + 1));
  pager.appendChild(prev);
  pager.appendChild(el("span", "page-label", `page ${response.page.number}`));
  pager.appendChild(next);
  root.appendChild(pager);
  return root;
}
