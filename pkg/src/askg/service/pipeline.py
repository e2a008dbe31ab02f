"""End-to-end wiring: staging -> graph build, and the query service that
binds cache, translation, planning, execution, and grounding."""

from __future__ import annotations

import json
import threading
import time
import uuid
from dataclasses import dataclass, field

from .. import resolve as resolve_mod
from ..cache import QueryCache
from ..cypher import PageRequest, execute, parse, plan, pretty
from ..cypher.errors import CypherError, PageError
from ..graphstore import (
    EndpointRef,
    GraphSchema,
    ImportBatch,
    ImportReport,
    NodeSpec,
    PropertyGraph,
    RelSpec,
    default_schema,
)
from ..ground import compose
from ..ingest import StagingSet
from ..translate import (
    ConversationContext,
    DeterministicStubProvider,
    RemoteProvider,
    TranslationResult,
    UntranslatableError,
    translate,
    update_context,
)
from .config import Config


def _int_or_none(text: str):
    try:
        return int(text)
    except (TypeError, ValueError):
        return None


def build_staging_batch(
    staging: StagingSet,
    registry: dict[str, dict[str, str]] | None = None,
    batch_size: int = 500,
) -> ImportBatch:
    """Turn staged records into an upsert batch for the default schema.

    ``registry`` (kind -> surface -> display form) comes from an applied
    resolution run; absent entries fall through to the raw surface.
    """
    registry = registry or {}

    def display(kind: str, surface: str) -> str:
        return registry.get(kind, {}).get(surface, surface)

    nodes: list[NodeSpec] = []
    rels: list[RelSpec] = []
    seen_nodes: set[tuple[str, str]] = set()

    def add_node(label: str, key_prop: str, props: dict):
        key = (label, str(props[key_prop]))
        if key in seen_nodes:
            return
        seen_nodes.add(key)
        nodes.append(NodeSpec(label, key_prop, {k: v for k, v in props.items() if v not in (None, "")}))

    for rec in staging.records:
        make = display("manufacturer", rec.acft_make) if rec.acft_make else ""
        operator = display("airline", rec.operator_name) if rec.operator_name else ""

        accident_props = {
            "event_id": rec.event_id,
            "event_type": rec.event_type,
            "event_date": rec.event_date,
            "event_year": rec.event_year,
            "city": rec.city,
            "state": rec.state,
            "injury_level": rec.injury_level,
            "probable_cause": rec.probable_cause,
        }
        fatal = _int_or_none(rec.value("fatal_injury_count"))
        if fatal is not None:
            accident_props["fatal_injury_count"] = fatal
        add_node("Accident", "event_id", accident_props)

        if rec.registration:
            add_node(
                "Aircraft",
                "registration",
                {
                    "registration": rec.registration,
                    "make": make,
                    "model": rec.acft_model,
                    "category": rec.value("acft_category"),
                },
            )
            rels.append(
                RelSpec(
                    "INVOLVED_IN",
                    EndpointRef("Aircraft", "registration", rec.registration),
                    EndpointRef("Accident", "event_id", rec.event_id),
                )
            )
            if make:
                add_node("Manufacturer", "name", {"name": make})
                rels.append(
                    RelSpec(
                        "MANUFACTURED_BY",
                        EndpointRef("Aircraft", "registration", rec.registration),
                        EndpointRef("Manufacturer", "name", make),
                    )
                )
            if operator:
                add_node("Airline", "name", {"name": operator})
                rels.append(
                    RelSpec(
                        "OPERATED_BY",
                        EndpointRef("Aircraft", "registration", rec.registration),
                        EndpointRef("Airline", "name", operator),
                    )
                )
        if rec.airport_icao:
            add_node(
                "Airport",
                "icao",
                {
                    "icao": rec.airport_icao,
                    "name": rec.value("airport_name"),
                    "city": rec.city,
                    "state": rec.state,
                },
            )
            rels.append(
                RelSpec(
                    "OCCURRED_AT",
                    EndpointRef("Accident", "event_id", rec.event_id),
                    EndpointRef("Airport", "icao", rec.airport_icao),
                )
            )
        if rec.city:
            loc_name = f"{rec.city}, {rec.state}" if rec.state else rec.city
            add_node(
                "Location",
                "name",
                {"name": loc_name, "city": rec.city, "state": rec.state},
            )
            rels.append(
                RelSpec(
                    "LOCATED_IN",
                    EndpointRef("Accident", "event_id", rec.event_id),
                    EndpointRef("Location", "name", loc_name),
                )
            )
    return ImportBatch(nodes=nodes, relationships=rels, batch_size=batch_size)


def build_graph(
    staging: StagingSet,
    registry: dict | None = None,
    schema: GraphSchema | None = None,
    batch_size: int = 500,
) -> tuple[PropertyGraph, ImportReport]:
    graph = PropertyGraph(schema or default_schema())
    batch = build_staging_batch(staging, registry, batch_size=batch_size)
    report = graph.bulk_import(batch)
    return graph, report


def registry_from_merges(merged: list[resolve_mod.ResolvedEntity], kind: str) -> dict[str, str]:
    """surface -> display form (the lexicographically least alias) per entity."""
    mapping: dict[str, str] = {}
    for ent in merged:
        display = min(ent.aliases) if ent.aliases else ent.canonical
        for alias in ent.aliases:
            mapping[alias] = display
    return mapping


@dataclass
class QueryLogEntry:
    timestamp: float
    session_id: str
    question: str
    query: str
    cache: str  # exact | semantic | miss | bypass
    rows: int
    elapsed_ms: float
    verified: bool
    warnings: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "timestamp": self.timestamp,
            "session_id": self.session_id,
            "question": self.question,
            "query": self.query,
            "cache": self.cache,
            "rows": self.rows,
            "elapsed_ms": self.elapsed_ms,
            "verified": self.verified,
            "warnings": list(self.warnings),
        }


class ServiceError(Exception):
    def __init__(self, message: str, status: int = 500, detail: dict | None = None):
        super().__init__(message)
        self.status = status
        self.detail = detail or {}


_FOLLOW_UP_PREFIXES = ("what about", "how about")


def _is_follow_up(question: str) -> bool:
    return question.strip().lower().startswith(_FOLLOW_UP_PREFIXES)


class QueryService:
    """Shared engine behind both the HTTP API and the CLI."""

    def __init__(
        self,
        graph: PropertyGraph,
        config: Config | None = None,
        providers: list | None = None,
        clock=time.time,
    ):
        self.graph = graph
        self.config = config or Config()
        self.clock = clock
        self.cache = QueryCache(
            ttl=self.config.cache_ttl,
            capacity=self.config.cache_capacity,
            semantic_threshold=self.config.semantic_threshold,
        )
        self.providers = providers if providers is not None else self._build_providers()
        self.contexts: dict[str, ConversationContext] = {}
        self.query_log: list[QueryLogEntry] = []
        self._log_lock = threading.Lock()
        self._session_locks: dict[str, threading.Lock] = {}
        self._sessions_guard = threading.Lock()

    def _build_providers(self) -> list:
        chain = []
        for spec in self.config.providers:
            if spec.kind == "deterministic_stub":
                chain.append(DeterministicStubProvider(hop_ceiling=self.config.hop_ceiling))
            else:
                chain.append(
                    RemoteProvider(
                        endpoint=spec.endpoint,
                        model=spec.model,
                        timeout=spec.timeout,
                        kind=spec.kind,
                    )
                )
        return chain

    def _session_lock(self, session_id: str) -> threading.Lock:
        with self._sessions_guard:
            if session_id not in self._session_locks:
                self._session_locks[session_id] = threading.Lock()
            return self._session_locks[session_id]

    # -- write notifications -----------------------------------------------

    def import_batch(self, batch: ImportBatch) -> ImportReport:
        """Graph write path: runs the import and flushes result caches."""
        report = self.graph.bulk_import(batch)
        self.cache.invalidate_all()
        return report

    def apply_schema(self, schema: GraphSchema) -> dict:
        report = self.graph.apply_schema(schema)
        self.cache.invalidate_all(include_plans=True)
        return report

    # -- query paths ---------------------------------------------------------

    def ask(
        self,
        question: str,
        session_id: str | None = None,
        page: PageRequest | None = None,
    ) -> dict:
        """Full pipeline: cache, translate, plan, execute, ground, log."""
        if not question or not question.strip():
            raise ServiceError("question must be non-empty", status=400)
        if page is not None and page.size is not None and page.size > self.config.max_page_size:
            raise PageError(
                f"page size {page.size} exceeds the limit of {self.config.max_page_size}"
            )
        session = session_id or "default"
        now = self.clock()
        t0 = time.perf_counter()
        follow_up = _is_follow_up(question)
        cacheable = not follow_up and (page is None or (page.number == 1 and page.size is None))

        if cacheable:
            hit = self.cache.get(question, now)
            if hit is not None:
                payload = dict(hit.value)
                payload["cache"] = {"tier": hit.tier, "similarity": round(hit.similarity, 6)}
                payload["elapsed_ms"] = round((time.perf_counter() - t0) * 1000.0, 3)
                # the conversation still advanced: record the turn so
                # follow-up questions can substitute against it
                with self._session_lock(session):
                    context = self.contexts.get(session, ConversationContext(session_id=session))
                    try:
                        ast = parse(payload["cypher"], hop_ceiling=self.config.hop_ceiling)
                    except CypherError:
                        pass
                    else:
                        self.contexts[session] = update_context(
                            context, question, ast, payload["cypher"]
                        )
                self._log(now, session, question, payload["cypher"], hit.tier,
                          len(payload["rows"]), payload["elapsed_ms"],
                          payload["answer"]["verified"], payload["warnings"])
                return payload

        with self._session_lock(session):
            context = self.contexts.get(session, ConversationContext(session_id=session))
            try:
                result: TranslationResult = translate(
                    question,
                    self.graph.schema,
                    context=context,
                    providers=self.providers,
                    hop_ceiling=self.config.hop_ceiling,
                )
            except UntranslatableError as exc:
                raise ServiceError(
                    str(exc), status=422, detail={"diagnostics": exc.diagnostics}
                ) from exc

            normalized = pretty(result.ast)
            plan_hit = self.cache.get_plan(normalized, now)
            if plan_hit is not None:
                query_plan = plan_hit.value
            else:
                query_plan = plan(result.ast, self.graph.schema)
                self.cache.put_plan(normalized, query_plan, now)

            resultset = execute(
                self.graph,
                query_plan,
                page=page,
                default_page_size=self.config.default_page_size,
                max_page_size=self.config.max_page_size,
            )
            answer = compose(question, result.query, resultset)
            self.contexts[session] = update_context(
                context, question, result.ast, result.query
            )

        warnings = sorted(set(result.validation) | set(resultset.warnings))
        elapsed_ms = round((time.perf_counter() - t0) * 1000.0, 3)
        payload = {
            "cypher": result.query,
            "source": result.source,
            "columns": resultset.columns,
            "rows": [list(r) for r in resultset.rows],
            "page": resultset.page,
            "provenance": [list(p) for p in resultset.provenance],
            "answer": answer.to_dict(),
            "subgraph": self._subgraph(resultset),
            "warnings": warnings,
            "stats": resultset.stats,
            "cache": {"tier": "miss"},
            "elapsed_ms": elapsed_ms,
        }
        if cacheable:
            cached = dict(payload)
            self.cache.put(question, cached, now)
        self._log(now, session, question, result.query, "miss",
                  len(resultset.rows), elapsed_ms, answer.verified, warnings)
        return payload

    def run_cypher(
        self,
        query_text: str,
        params: dict | None = None,
        page: PageRequest | None = None,
    ) -> dict:
        """Expert escape hatch: execute raw query text."""
        now = self.clock()
        ast = parse(query_text, hop_ceiling=self.config.hop_ceiling)
        normalized = pretty(ast)
        plan_hit = self.cache.get_plan(normalized, now)
        if plan_hit is not None:
            query_plan = plan_hit.value
        else:
            query_plan = plan(ast, self.graph.schema)
            self.cache.put_plan(normalized, query_plan, now)
        resultset = execute(
            self.graph,
            query_plan,
            params=params,
            page=page,
            default_page_size=self.config.default_page_size,
            max_page_size=self.config.max_page_size,
        )
        out = resultset.to_dict()
        out["plan"] = query_plan.render()
        return out

    def _subgraph(self, resultset) -> dict:
        """Induced subgraph over the returned rows' provenance (bounded)."""
        ids: set[int] = set()
        for prov in resultset.provenance:
            ids.update(prov)
            if len(ids) >= 200:
                break
        nodes = []
        for nid in sorted(ids):
            node = self.graph.nodes.get(nid)
            if node is None:
                continue
            nodes.append(
                {
                    "id": nid,
                    "labels": sorted(node.labels),
                    "properties": dict(sorted(node.properties.items())),
                }
            )
        rels = []
        for rel in self.graph.relationships.values():
            if rel.source in ids and rel.target in ids:
                rels.append(
                    {
                        "id": rel.rel_id,
                        "type": rel.type,
                        "source": rel.source,
                        "target": rel.target,
                    }
                )
        rels.sort(key=lambda r: r["id"])
        return {"nodes": nodes, "relationships": rels}

    # -- observability ------------------------------------------------------

    def _log(self, ts, session, question, query, cache, rows, elapsed_ms, verified, warnings):
        entry = QueryLogEntry(
            timestamp=ts,
            session_id=session,
            question=question,
            query=query,
            cache=cache,
            rows=rows,
            elapsed_ms=max(elapsed_ms, 0.0),
            verified=verified,
            warnings=list(warnings),
        )
        with self._log_lock:
            self.query_log.append(entry)
            if self.config.query_log:
                with open(self.config.query_log, "a", encoding="utf-8") as fh:
                    fh.write(json.dumps(entry.to_dict()) + "\n")

    def stats(self) -> dict:
        with self._log_lock:
            tail = [e.to_dict() for e in self.query_log[-50:]]
        return {
            "nodes": self.graph.node_counts(),
            "relationships": self.graph.rel_counts(),
            "cache": self.cache.metrics(),
            "query_log": tail,
        }

    def schema_info(self) -> dict:
        schema = self.graph.schema
        return {
            "labels": {label: list(props) for label, props in sorted(schema.node_labels.items())},
            "relationship_types": {
                t: [list(p) for p in pairs]
                for t, pairs in sorted(schema.relationship_types.items())
            },
            "unique_constraints": [list(c) for c in schema.unique_constraints],
            "indexes": [[label, list(props)] for label, props in schema.all_indexes()],
        }

    def health(self) -> dict:
        return {
            "status": "ok",
            "graph_loaded": bool(self.graph.nodes),
            "provider_reachable": bool(self.providers),
        }


def new_correlation_id() -> str:
    return uuid.uuid4().hex[:12]
