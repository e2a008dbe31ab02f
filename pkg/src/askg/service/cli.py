"""Command-line interface.

Every verb supports --json for machine-readable output and exits
non-zero with a one-line reason on failure.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .. import annotate as annotate_mod
from .. import ingest as ingest_mod
from .. import resolve as resolve_mod
from ..cypher import PageRequest
from ..cypher.errors import CypherError
from ..graphstore import GraphError, PropertyGraph
from ..translate import ConversationContext, Turn, UntranslatableError
from .config import Config, ConfigError, load_config
from .pipeline import (
    QueryService,
    ServiceError,
    build_graph,
    registry_from_merges,
)
from .report import render_graph_report, render_resolution_figures

_ERRORS = (
    ingest_mod.IngestError,
    resolve_mod.ResolveError,
    annotate_mod.AnnotateError,
    GraphError,
    CypherError,
    ConfigError,
    ServiceError,
    UntranslatableError,
    OSError,
    ValueError,
)


def _emit(payload: dict, as_json: bool, human: list[str]):
    if as_json:
        click.echo(json.dumps(payload, indent=2, default=str))
    else:
        for line in human:
            click.echo(line)


def _fail(exc: Exception):
    click.echo(f"error: {exc}", err=True)
    sys.exit(1)


@click.group()
def main():
    """Aviation safety knowledge graph engine."""


@main.command("gen-fixture")
@click.option("--records", "-n", type=int, required=True, help="Data rows to generate.")
@click.option("--seed", type=int, default=7, show_default=True)
@click.option("--alias-rate", type=float, default=0.2, show_default=True)
@click.option("--malformed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(), default="fixture", show_default=True)
@click.option("--json", "as_json", is_flag=True)
def gen_fixture(records, seed, alias_rate, malformed, out, as_json):
    """Write a deterministic synthetic accident-record fixture."""
    try:
        paths = ingest_mod.gen_fixture(records, seed, alias_rate, out, malformed=malformed)
    except _ERRORS as exc:
        _fail(exc)
    payload = {"csv": str(paths.csv), "truth": str(paths.truth), "counts": str(paths.counts)}
    _emit(payload, as_json, [f"wrote {paths.csv}", f"wrote {paths.truth}", f"wrote {paths.counts}"])


@main.command()
@click.option("--input", "input_path", type=click.Path(), required=True)
@click.option("--out", type=click.Path(), required=True, help="Staging directory.")
@click.option("--json", "as_json", is_flag=True)
def ingest(input_path, out, as_json):
    """Parse and normalize a raw CSV into a staging directory."""
    try:
        staging = ingest_mod.parse_csv(input_path)
        out_dir = Path(out)
        out_dir.mkdir(parents=True, exist_ok=True)
        ingest_mod.write_csv(staging, out_dir / "staging.csv")
        with (out_dir / "rejects.csv").open("w", encoding="utf-8") as fh:
            fh.write("line,reason\n")
            for rej in staging.rejects:
                fh.write(f"{rej.line_no},{json.dumps(rej.reason)}\n")
        meta = {
            "provenance": staging.provenance,
            "records": len(staging.records),
            "rejects": len(staging.rejects),
        }
        (out_dir / "meta.json").write_text(json.dumps(meta, indent=2) + "\n", "utf-8")
    except _ERRORS as exc:
        _fail(exc)
    _emit(
        meta,
        as_json,
        [f"staged {meta['records']} records ({meta['rejects']} rejected) -> {out}"],
    )


@main.command()
@click.option("--staging", type=click.Path(), required=True)
@click.option("--threshold", type=float, default=0.8, show_default=True)
@click.option("--apply", "apply_merges", is_flag=True,
              help="Apply rule- and lexical-tier merges to the entity registry.")
@click.option("--report", "report_path", type=click.Path(), required=True)
@click.option("--no-figures", is_flag=True, help="Skip figure rendering.")
@click.option("--json", "as_json", is_flag=True)
def resolve(staging, threshold, apply_merges, report_path, no_figures, as_json):
    """Run three-tier entity resolution over a staging directory."""
    try:
        staged = ingest_mod.parse_csv(Path(staging) / "staging.csv")
        candidates_by_kind = resolve_mod.extract_candidates(staged)
        all_candidates = []
        registry: dict[str, dict[str, str]] = {}
        entity_summary: dict[str, int] = {}
        cluster_count = 0
        for kind, candidates in candidates_by_kind.items():
            entities = resolve_mod.resolve_entities(candidates)
            entity_summary[kind] = len(entities)
            merge_candidates = resolve_mod.find_merge_candidates(entities, threshold)
            all_candidates.extend(merge_candidates)
            cluster_count += len(resolve_mod.clusters_from_candidates(entities, merge_candidates))
            if apply_merges:
                accepted = [c for c in merge_candidates if c.tier in ("rule", "lexical")]
                merged = resolve_mod.apply_merges(entities, accepted)
                registry[kind] = registry_from_merges(merged, kind)
        resolve_mod.write_merge_report(all_candidates, report_path)
        figures = []
        if not no_figures:
            figures = [str(p) for p in render_resolution_figures(all_candidates, report_path)]
        if apply_merges:
            (Path(staging) / "entities.json").write_text(
                json.dumps(registry, indent=2, sort_keys=True) + "\n", "utf-8"
            )
    except _ERRORS as exc:
        _fail(exc)
    payload = {
        "entities": entity_summary,
        "candidates": len(all_candidates),
        "clusters": cluster_count,
        "report": str(report_path),
        "figures": figures,
        "applied": apply_merges,
    }
    human = [
        f"{sum(entity_summary.values())} entities, {len(all_candidates)} merge candidates, "
        f"{cluster_count} clusters at threshold {threshold}",
        f"report -> {report_path}",
    ]
    human.extend(f"figure -> {f}" for f in figures)
    if apply_merges:
        human.append(f"entity registry -> {Path(staging) / 'entities.json'}")
    _emit(payload, as_json, human)


@main.command()
@click.option("--staging", type=click.Path(), required=True)
@click.option("--snapshot", type=click.Path(), required=True)
@click.option("--batch-size", type=int, default=500, show_default=True)
@click.option("--json", "as_json", is_flag=True)
def build(staging, snapshot, batch_size, as_json):
    """Build the property graph from a staging directory and snapshot it."""
    try:
        staged = ingest_mod.parse_csv(Path(staging) / "staging.csv")
        registry = None
        registry_path = Path(staging) / "entities.json"
        if registry_path.is_file():
            registry = json.loads(registry_path.read_text("utf-8"))
        graph, report = build_graph(staged, registry, batch_size=batch_size)
        graph.snapshot_save(snapshot)
    except _ERRORS as exc:
        _fail(exc)
    payload = {
        "nodes": graph.node_counts(),
        "relationships": graph.rel_counts(),
        "created": report.nodes_created,
        "updated": report.nodes_updated,
        "rels_created": report.rels_created,
        "failures": report.failures,
        "snapshot": str(snapshot),
    }
    _emit(
        payload,
        as_json,
        [
            f"nodes: {graph.node_counts()}",
            f"relationships: {graph.rel_counts()}",
            f"import failures: {len(report.failures)}",
            f"snapshot -> {snapshot}",
        ],
    )


@main.group()
def annotate():
    """Train or apply the narrative span classifier."""


@annotate.command("train")
@click.option("--corpus", type=click.Path(), required=True, help="label<TAB>text lines.")
@click.option("--model-out", type=click.Path(), required=True)
@click.option("--learning-rate", type=float, default=0.1, show_default=True)
@click.option("--l2", type=float, default=1e-4, show_default=True)
@click.option("--epochs", type=int, default=500, show_default=True)
@click.option("--tol", type=float, default=1e-6, show_default=True)
@click.option("--json", "as_json", is_flag=True)
def annotate_train(corpus, model_out, learning_rate, l2, epochs, tol, as_json):
    try:
        texts, labels = annotate_mod.read_labeled_corpus(corpus)
        tfidf = annotate_mod.fit_tfidf(texts)
        ontology = annotate_mod.default_ontology()
        model = annotate_mod.train_logreg(
            tfidf.transform(texts),
            labels,
            annotate_mod.Hyperparams(learning_rate, l2, epochs, tol),
            class_order=list(ontology.entity_types),
        )
        annotate_mod.save_model(model_out, tfidf, model)
    except _ERRORS as exc:
        _fail(exc)
    payload = {
        "samples": len(texts),
        "classes": model.classes,
        "epochs_run": len(model.losses),
        "final_loss": model.losses[-1],
        "model": str(model_out),
    }
    _emit(payload, as_json, [
        f"trained on {len(texts)} spans, {len(model.classes)} classes, "
        f"{len(model.losses)} epochs, final loss {model.losses[-1]:.6f}",
        f"model -> {model_out}",
    ])


@annotate.command("predict")
@click.option("--model", "model_path", type=click.Path(), required=True)
@click.option("--text", "texts", multiple=True, help="Span to classify (repeatable).")
@click.option("--input", "input_path", type=click.Path(), help="File with one span per line.")
@click.option("--json", "as_json", is_flag=True)
def annotate_predict(model_path, texts, input_path, as_json):
    try:
        tfidf, model = annotate_mod.load_model(model_path)
        spans = list(texts)
        if input_path:
            spans.extend(
                line for line in Path(input_path).read_text("utf-8").splitlines() if line.strip()
            )
        if not spans:
            raise annotate_mod.AnnotateError("no spans given (use --text or --input)")
        results = [annotate_mod.predict_span(tfidf, model, s) for s in spans]
    except _ERRORS as exc:
        _fail(exc)
    payload = {
        "predictions": [
            {"text": r.text, "label": r.label, "confidence": round(r.confidence, 6)}
            for r in results
        ]
    }
    _emit(payload, as_json, [f"{r.label}\t{r.confidence:.4f}\t{r.text}" for r in results])


def _load_service(snapshot: str | None, config_path: str | None) -> QueryService:
    config = load_config(config_path) if config_path else load_config()
    if snapshot:
        config.snapshot = snapshot
    if not config.snapshot:
        raise ConfigError("no snapshot configured (use --snapshot or the config file)")
    graph = PropertyGraph.snapshot_load(config.snapshot)
    return QueryService(graph, config)


def _session_file(service: QueryService, session: str) -> Path:
    d = Path(service.config.sessions_dir)
    d.mkdir(parents=True, exist_ok=True)
    return d / f"{session}.json"


def _load_session(service: QueryService, session: str):
    path = _session_file(service, session)
    if path.is_file():
        raw = json.loads(path.read_text("utf-8"))
        turns = tuple(
            Turn(t["question"], t["query"], tuple(tuple(s) for s in t["salient"]))
            for t in raw.get("turns", [])
        )
        service.contexts[session] = ConversationContext(session_id=session, turns=turns)


def _save_session(service: QueryService, session: str):
    context = service.contexts.get(session)
    if context is None:
        return
    payload = {
        "session_id": session,
        "turns": [
            {"question": t.question, "query": t.query, "salient": [list(s) for s in t.salient]}
            for t in context.turns
        ],
    }
    _session_file(service, session).write_text(json.dumps(payload, indent=2) + "\n", "utf-8")


@main.command()
@click.argument("question")
@click.option("--snapshot", type=click.Path())
@click.option("--config", "config_path", type=click.Path())
@click.option("--cypher-only", is_flag=True, help="Print the translated query and stop.")
@click.option("--session", default=None, help="Conversation session id.")
@click.option("--page-size", type=int, default=None)
@click.option("--json", "as_json", is_flag=True)
def query(question, snapshot, config_path, cypher_only, session, page_size, as_json):
    """Ask a natural-language question against a graph snapshot."""
    try:
        service = _load_service(snapshot, config_path)
        session_id = session or "cli"
        if session:
            _load_session(service, session_id)
        if cypher_only:
            from ..translate import translate

            context = service.contexts.get(
                session_id, ConversationContext(session_id=session_id)
            )
            result = translate(
                question, service.graph.schema, context=context,
                providers=service.providers, hop_ceiling=service.config.hop_ceiling,
            )
            payload = {"cypher": result.query, "source": result.source,
                       "warnings": result.validation}
            _emit(payload, as_json, [result.query])
            return
        page = PageRequest(size=page_size) if page_size else None
        response = service.ask(question, session_id=session_id, page=page)
        if session:
            _save_session(service, session_id)
    except _ERRORS as exc:
        _fail(exc)
    human = [
        f"cypher: {response['cypher']}",
        f"answer: {response['answer']['text']}",
        f"verified: {response['answer']['verified']}",
        f"rows: {len(response['rows'])} (has_more={response['page']['has_more']})",
    ]
    if response["warnings"]:
        human.append(f"warnings: {'; '.join(response['warnings'])}")
    _emit(response, as_json, human)


@main.command()
@click.option("--config", "config_path", type=click.Path())
@click.option("--snapshot", type=click.Path())
@click.option("--host", default=None)
@click.option("--port", type=int, default=None)
@click.option("--json", "as_json", is_flag=True)
def serve(config_path, snapshot, host, port, as_json):
    """Serve the HTTP API over a graph snapshot."""
    try:
        service = _load_service(snapshot, config_path)
        bind_host = host or service.config.host
        bind_port = port or service.config.port
        startup = {
            "status": "serving",
            "host": bind_host,
            "port": bind_port,
            "snapshot": service.config.snapshot,
            "nodes": sum(service.graph.node_counts().values()),
        }
        _emit(startup, as_json, [f"serving {startup['nodes']} nodes on {bind_host}:{bind_port}"])
        from .app import create_app

        import uvicorn

        uvicorn.run(
            create_app(service),
            host=bind_host,
            port=bind_port,
            log_level="info",
        )
    except _ERRORS as exc:
        _fail(exc)


@main.command()
@click.option("--snapshot", type=click.Path(), required=True)
@click.option("--out", type=click.Path(), required=True)
@click.option("--json", "as_json", is_flag=True)
def report(snapshot, out, as_json):
    """Render node/relationship distribution reports with figures."""
    try:
        graph = PropertyGraph.snapshot_load(snapshot)
        paths = render_graph_report(graph, out)
    except _ERRORS as exc:
        _fail(exc)
    payload = {name: str(p) for name, p in paths.items()}
    _emit(payload, as_json, [f"{name} -> {p}" for name, p in payload.items()])


if __name__ == "__main__":
    main()
