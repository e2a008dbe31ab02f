"""Report rendering: delimited outputs with matplotlib figures alongside."""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from ..graphstore import PropertyGraph  # noqa: E402
from ..resolve import MergeCandidate  # noqa: E402

TIER_COLORS = {"rule": "#2a9d8f", "lexical": "#e9c46a", "embedding": "#e76f51"}


def render_resolution_figures(
    candidates: list[MergeCandidate], report_csv: str | Path
) -> list[Path]:
    """Similarity histogram and per-tier counts next to the report CSV."""
    base = Path(report_csv)
    out: list[Path] = []

    fig, ax = plt.subplots(figsize=(6, 4))
    for tier in ("rule", "lexical", "embedding"):
        sims = [c.similarity for c in candidates if c.tier == tier]
        if sims:
            ax.hist(sims, bins=20, range=(0.0, 1.0), alpha=0.7,
                    label=f"{tier} ({len(sims)})", color=TIER_COLORS[tier])
    ax.set_xlabel("cosine similarity")
    ax.set_ylabel("candidate pairs")
    ax.set_title("Merge candidates by similarity")
    if candidates:
        ax.legend()
    sim_path = base.with_name(base.stem + "_similarity.png")
    fig.tight_layout()
    fig.savefig(sim_path, dpi=120)
    plt.close(fig)
    out.append(sim_path)

    fig, ax = plt.subplots(figsize=(4, 4))
    tiers = ["rule", "lexical", "embedding"]
    counts = [sum(1 for c in candidates if c.tier == t) for t in tiers]
    ax.bar(tiers, counts, color=[TIER_COLORS[t] for t in tiers])
    ax.set_ylabel("candidate pairs")
    ax.set_title("Candidates per tier")
    tier_path = base.with_name(base.stem + "_tiers.png")
    fig.tight_layout()
    fig.savefig(tier_path, dpi=120)
    plt.close(fig)
    out.append(tier_path)
    return out


def _write_counts_csv(path: Path, header: tuple[str, str], counts: dict[str, int]):
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for key in sorted(counts):
            writer.writerow([key, counts[key]])


def _bar_figure(path: Path, counts: dict[str, int], title: str, ylabel: str):
    fig, ax = plt.subplots(figsize=(7, 4))
    keys = sorted(counts)
    ax.bar(keys, [counts[k] for k in keys], color="#264653")
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.tick_params(axis="x", rotation=30)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_graph_report(graph: PropertyGraph, out_dir: str | Path) -> dict[str, Path]:
    """Node/relationship distribution: CSVs plus bar-chart figures."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    node_counts = graph.node_counts()
    rel_counts = graph.rel_counts()

    paths = {
        "node_csv": out_dir / "node_counts.csv",
        "node_png": out_dir / "node_counts.png",
        "rel_csv": out_dir / "rel_counts.csv",
        "rel_png": out_dir / "rel_counts.png",
    }
    _write_counts_csv(paths["node_csv"], ("label", "count"), node_counts)
    _write_counts_csv(paths["rel_csv"], ("type", "count"), rel_counts)
    _bar_figure(paths["node_png"], node_counts, "Nodes per label", "nodes")
    _bar_figure(paths["rel_png"], rel_counts, "Relationships per type", "relationships")
    return paths
