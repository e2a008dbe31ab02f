import type { StatsResponse } from "../types";

const SVG_NS = "http://www.w3.org/2000/svg";

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

function barChart(counts: Record<string, number>, width = 420, height = 160): SVGSVGElement {
  const svg = document.createElementNS(SVG_NS, "svg");
  svg.setAttribute("viewBox", `0 0 ${width} ${height}`);
  svg.setAttribute("class", "bar-chart");
  const keys = Object.keys(counts).sort();
  const max = Math.max(1, ...keys.map((k) => counts[k]));
  const band = width / Math.max(keys.length, 1);
  keys.forEach((key, i) => {
    const barHeight = ((height - 30) * counts[key]) / max;
    const rect = document.createElementNS(SVG_NS, "rect");
    rect.setAttribute("x", String(i * band + 6));
    rect.setAttribute("y", String(height - 18 - barHeight));
    rect.setAttribute("width", String(Math.max(band - 12, 4)));
    rect.setAttribute("height", String(barHeight));
    rect.setAttribute("class", "bar");
    svg.appendChild(rect);
    const label = document.createElementNS(SVG_NS, "text");
    label.setAttribute("x", String(i * band + band / 2));
    label.setAttribute("y", String(height - 4));
    label.setAttribute("text-anchor", "middle");
    label.setAttribute("class", "bar-label");
    label.textContent = key;
    svg.appendChild(label);
    const value = document.createElementNS(SVG_NS, "text");
    value.setAttribute("x", String(i * band + band / 2));
    value.setAttribute("y", String(height - 22 - barHeight));
    value.setAttribute("text-anchor", "middle");
    value.setAttribute("class", "bar-value");
    value.textContent = String(counts[key]);
    svg.appendChild(value);
  });
  return svg;
}

export function renderStats(stats: StatsResponse): HTMLElement {
  const root = el("section", "stats");

  const nodesBox = el("div", "stats-nodes");
  nodesBox.appendChild(el("h3", undefined, "Nodes per label"));
  nodesBox.appendChild(barChart(stats.nodes));
  const nodeList = el("ul", "node-counts");
  for (const [label, count] of Object.entries(stats.nodes).sort()) {
    const item = el("li");
    item.dataset.label = label;
    item.textContent = `${label}: ${count}`;
    nodeList.appendChild(item);
  }
  nodesBox.appendChild(nodeList);
  root.appendChild(nodesBox);

  const relsBox = el("div", "stats-rels");
  relsBox.appendChild(el("h3", undefined, "Relationships per type"));
  const relList = el("ul", "rel-counts");
  for (const [type, count] of Object.entries(stats.relationships).sort()) {
    const item = el("li");
    item.dataset.type = type;
    item.textContent = `${type}: ${count}`;
    relList.appendChild(item);
  }
  relsBox.appendChild(relList);
  root.appendChild(relsBox);

  const cacheBox = el("div", "stats-cache");
  cacheBox.appendChild(el("h3", undefined, "Cache"));
  const cacheList = el("ul", "cache-counters");
  for (const [counter, value] of Object.entries(stats.cache)) {
    cacheList.appendChild(el("li", undefined, `${counter}: ${value}`));
  }
  cacheBox.appendChild(cacheList);
  root.appendChild(cacheBox);

  const logBox = el("div", "stats-log");
  logBox.appendChild(el("h3", undefined, "Query log"));
  const table = el("table", "query-log");
  const head = el("tr");
  for (const column of ["question", "cache", "rows", "verified", "ms"]) {
    head.appendChild(el("th", undefined, column));
  }
  table.appendChild(head);
  for (const entry of [...stats.query_log].reverse()) {
    const tr = el("tr");
    tr.appendChild(el("td", undefined, entry.question));
    tr.appendChild(el("td", undefined, entry.cache));
    tr.appendChild(el("td", undefined, String(entry.rows)));
    tr.appendChild(el("td", undefined, entry.verified ? "yes" : "no"));
    tr.appendChild(el("td", undefined, entry.elapsed_ms.toFixed(1)));
    table.appendChild(tr);
  }
  logBox.appendChild(table);
  root.appendChild(logBox);
  return root;
}
