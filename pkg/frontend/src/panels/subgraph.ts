import type { Subgraph, SubgraphNode } from "../types";

const SVG_NS = "http://www.w3.org/2000/svg";

const LABEL_COLORS: Record<string, string> = {
  Accident: "#e76f51",
  Aircraft: "#2a9d8f",
  Manufacturer: "#264653",
  Airport: "#e9c46a",
  Airline: "#8ab17d",
  Location: "#6d597a",
};

function nodeCaption(node: SubgraphNode): string {
  const props = node.properties;
  for (const key of ["event_id", "name", "icao", "registration"]) {
    if (props[key] !== undefined && props[key] !== "") return String(props[key]);
  }
  return `#${node.id}`;
}

// Circular layout: stable, dependency-free, and fine for the bounded
// subgraphs the server returns.
export function renderSubgraph(subgraph: Subgraph, size = 420): SVGSVGElement {
  const svg = document.createElementNS(SVG_NS, "svg");
  svg.setAttribute("viewBox", `0 0 ${size} ${size}`);
  svg.setAttribute("class", "subgraph");

  const nodes = subgraph.nodes;
  const center = size / 2;
  const radius = Math.max(40, center - 60);
  const position = new Map<number, { x: number; y: number }>();
  nodes.forEach((node, i) => {
    const angle = (2 * Math.PI * i) / Math.max(nodes.length, 1) - Math.PI / 2;
    position.set(node.id, {
      x: center + radius * Math.cos(angle),
      y: center + radius * Math.sin(angle),
    });
  });

  for (const rel of subgraph.relationships) {
    const from = position.get(rel.source);
    const to = position.get(rel.target);
    if (!from || !to) continue;
    const line = document.createElementNS(SVG_NS, "line");
    line.setAttribute("x1", String(from.x));
    line.setAttribute("y1", String(from.y));
    line.setAttribute("x2", String(to.x));
    line.setAttribute("y2", String(to.y));
    line.setAttribute("class", `edge edge-${rel.type}`);
    svg.appendChild(line);
    const label = document.createElementNS(SVG_NS, "text");
    label.setAttribute("x", String((from.x + to.x) / 2));
    label.setAttribute("y", String((from.y + to.y) / 2 - 4));
    label.setAttribute("class", "edge-label");
    label.textContent = rel.type;
    svg.appendChild(label);
  }

  for (const node of nodes) {
    const at = position.get(node.id)!;
    const group = document.createElementNS(SVG_NS, "g");
    group.setAttribute("class", `node node-${node.labels[0] ?? "unknown"}`);
    const circle = document.createElementNS(SVG_NS, "circle");
    circle.setAttribute("cx", String(at.x));
    circle.setAttribute("cy", String(at.y));
    circle.setAttribute("r", "16");
    circle.setAttribute("fill", LABEL_COLORS[node.labels[0] ?? ""] ?? "#999");
    group.appendChild(circle);
    const caption = document.createElementNS(SVG_NS, "text");
    caption.setAttribute("x", String(at.x));
    caption.setAttribute("y", String(at.y + 30));
    caption.setAttribute("text-anchor", "middle");
    caption.setAttribute("class", "node-caption");
    caption.textContent = nodeCaption(node);
    group.appendChild(caption);
    svg.appendChild(group);
  }
  return svg;
}
