"""Acceptance suite: one test per shipping criterion, at its stated
tolerance. Each prints a PASS/FAIL line (run with -s to stream them)."""

import json
import random
import time
from collections import Counter

import numpy as np
import pytest
from click.testing import CliRunner
from fastapi.testclient import TestClient

from askg import annotate, ingest, resolve
from askg.cache import QueryCache
from askg.cypher import PageRequest, execute, parse, plan
from askg.graphstore import (
    GraphError,
    ImportBatch,
    NodeSpec,
    PropertyGraph,
    default_schema,
)
from askg.ground import GroundedAnswer, compose, verify
from askg.service.app import create_app
from askg.service.cli import main as cli_main
from askg.service.config import Config
from askg.service.pipeline import QueryService, build_graph
from askg.translate import (
    ConversationContext,
    load_fewshot,
    translate_rule_based,
    update_context,
)
from generators import random_graph, random_query
from oracle_interpreter import OracleInterpreter, freeze_engine_rows

_results: list[tuple[str, bool]] = []


def record(name: str, ok: bool, detail: str = ""):
    line = f"[ACCEPTANCE] {'PASS' if ok else 'FAIL'} - {name}"
    if detail and not ok:
        line += f" ({detail})"
    print(line, flush=True)
    _results.append((name, ok))
    assert ok, f"{name}: {detail}"


@pytest.fixture(scope="session", autouse=True)
def summary():
    yield
    passed = sum(1 for _, ok in _results if ok)
    print(f"\n[ACCEPTANCE] {passed}/{len(_results)} criteria passed", flush=True)


def test_executor_oracle_equivalence():
    """>=100 random queries over <=50-node graphs match the naive
    interpreter's row multisets exactly, within 60 s."""
    started = time.perf_counter()
    rng = random.Random(90210)
    graphs = [random_graph(rng, max_nodes=50) for _ in range(12)]
    checked = 0
    try:
        while checked < 120:
            graph = graphs[checked % len(graphs)]
            text, params = random_query(rng)
            ast = parse(text)
            query_plan = plan(ast, graph.schema)
            engine = []
            number = 1
            while True:
                rs = execute(graph, query_plan, params=params,
                             page=PageRequest(number=number, size=1000))
                engine.extend(freeze_engine_rows(rs.rows))
                if ast.limit is not None or not rs.page["has_more"]:
                    break
                number += 1
            oracle = OracleInterpreter(graph, params).run(ast)
            if ast.order_by:
                assert engine == oracle, text
            else:
                assert Counter(engine) == Counter(oracle), text
            checked += 1
        elapsed = time.perf_counter() - started
        record(
            "executor/oracle equivalence (120 queries)",
            elapsed < 60.0,
            f"took {elapsed:.1f}s",
        )
    except AssertionError as exc:
        record("executor/oracle equivalence (120 queries)", False, str(exc)[:200])


def test_alias_resolution(staging_1000, fixture_1000):
    triple = ["B737-800", "737-800", "Boeing 737-800"]
    entities = resolve.resolve_entities(
        [resolve.EntityCandidate(s, "model") for s in triple]
    )
    candidates = resolve.find_merge_candidates(entities, 0.8)
    clusters = resolve.clusters_from_candidates(entities, candidates)
    triple_ok = len(clusters) == 1 and {
        a for e in clusters[0] for a in e.aliases
    } == set(triple)

    truth = ingest.read_truth_clusters(fixture_1000.truth)
    model_entities = resolve.resolve_entities(
        resolve.extract_candidates(staging_1000)["model"]
    )
    fixture_candidates = resolve.find_merge_candidates(model_entities, 0.8)
    fixture_clusters = resolve.clusters_from_candidates(model_entities, fixture_candidates)
    got = {
        frozenset(a for e in cluster for a in e.aliases) for cluster in fixture_clusters
    }
    want = {frozenset(line[1:]) for line in truth}
    reconstruct_ok = got == want and len(got) == len(truth)

    tight = {
        (c.left.entity_id, c.right.entity_id)
        for c in resolve.find_merge_candidates(model_entities, 0.95)
    }
    loose = {
        (c.left.entity_id, c.right.entity_id) for c in fixture_candidates
    }
    monotone_ok = tight <= loose

    record(
        "alias resolution (triple cluster, K-cluster reconstruction, monotonicity)",
        triple_ok and reconstruct_ok and monotone_ok,
        f"triple={triple_ok} reconstruct={reconstruct_ok} monotone={monotone_ok}",
    )


def test_schema_enforcement():
    graph = PropertyGraph(default_schema())
    graph.create_node({"Aircraft"}, {"registration": "N12345"})
    graph.create_node({"Airport"}, {"icao": "KLAX"})
    dup_reg = dup_icao = False
    try:
        graph.create_node({"Aircraft"}, {"registration": "N12345"})
    except GraphError:
        dup_reg = True
    try:
        graph.create_node({"Airport"}, {"icao": "KLAX"})
    except GraphError:
        dup_icao = True

    before = graph.canonical_digest()
    batch = ImportBatch(
        nodes=[NodeSpec("Aircraft", "registration", {"registration": f"N{i}"})
               for i in range(20)],
        batch_size=20,
    )

    def failpoint(index):
        if index == 13:
            raise RuntimeError("injected mid-batch fault")

    report = graph.bulk_import(batch, failpoint=failpoint)
    atomic_ok = graph.canonical_digest() == before and report.nodes_created == 0

    record(
        "schema enforcement (duplicate registration/icao rejected, atomic batches)",
        dup_reg and dup_icao and atomic_ok,
        f"reg={dup_reg} icao={dup_icao} atomic={atomic_ok}",
    )


@pytest.fixture(scope="module")
def big_graph():
    graph = PropertyGraph(default_schema())
    rng = random.Random(1)
    makes = [f"Maker{i}" for i in range(50)]
    for i in range(100_000):
        graph.create_node(
            {"Aircraft"},
            {"registration": f"N{i:06d}", "make": makes[i % 50], "model": f"M{rng.randrange(40)}"},
        )
    return graph


def test_plan_analysis_and_index_performance(big_graph):
    q = parse("MATCH (x:Accident) WHERE x.city = 'Miami' RETURN x")
    warning_ok = "missing index on :Accident(city)" in plan(q, default_schema()).warnings

    rng = random.Random(7)
    equal_ok = True
    for _ in range(1000):
        props = {"make": f"Maker{rng.randrange(60)}"}
        if rng.random() < 0.5:
            props["model"] = f"M{rng.randrange(50)}"
        if big_graph.lookup("Aircraft", props) != big_graph.lookup(
            "Aircraft", props, force_scan=True
        ):
            equal_ok = False
            break

    def best_of(fn, runs=5):
        times = []
        for _ in range(runs):
            t0 = time.perf_counter()
            fn()
            times.append(time.perf_counter() - t0)
        return min(times)

    indexed = best_of(lambda: big_graph.lookup("Aircraft", {"make": "Maker7"}))
    scanned = best_of(
        lambda: big_graph.lookup("Aircraft", {"make": "Maker7"}, force_scan=True)
    )
    speedup = scanned / max(indexed, 1e-9)
    record(
        "plan analysis (exact warning, index/scan equivalence, >=10x speedup)",
        warning_ok and equal_ok and speedup >= 10.0,
        f"warning={warning_ok} equal={equal_ok} speedup={speedup:.1f}x",
    )


def test_translation_fixtures():
    pairs = load_fewshot()
    all_match = True
    for pair in pairs:
        if parse(translate_rule_based(pair["question"])) != parse(pair["query"]):
            all_match = False
            break
    fig5 = parse(translate_rule_based("Show top two accidents with Boeing flights at KLAX"))
    fig5_ok = fig5.limit == 2

    ctx = ConversationContext(session_id="acc")
    first = translate_rule_based("Find Boeing 737 accidents")
    ctx = update_context(ctx, "Find Boeing 737 accidents", parse(first), first)
    follow = translate_rule_based("what about Airbus?", ctx)
    follow_ok = parse(follow) == parse(
        "MATCH (a:Aircraft)-[:INVOLVED_IN]->(x:Accident) "
        "WHERE a.make = 'Airbus' AND a.model CONTAINS '737' RETURN x"
    )
    record(
        f"translation fixtures ({len(pairs)} gold pairs, Fig-5 LIMIT 2, follow-up substitution)",
        all_match and len(pairs) == 12 and fig5_ok and follow_ok,
        f"gold={all_match} fig5={fig5_ok} follow={follow_ok}",
    )


def test_grounding_closure():
    from test_ground import TestClosureFuzz, _node, _rs

    fuzz = TestClosureFuzz()
    rng = random.Random(777)
    closure_ok = True
    for _ in range(500):
        rs = fuzz._random_results(rng)
        answer = compose("q", "c", rs)
        if verify(answer, rs) or not answer.verified:
            closure_ok = False
            break

    rs = _rs(["x"], [[_node(1, event_id="EV1")]], provenance=[[1]])
    tampered = GroundedAnswer(
        text="Matching records: 'EV1', 'PHANTOM'.", provenance=[1],
        citations=[], verified=True,
    )
    detect_ok = len(verify(tampered, rs)) >= 1

    empty = compose("q", "c", _rs(["x"], []))
    empty_ok = empty.verified and empty.provenance == []

    record(
        "grounding closure (500 fuzz trials, leak detection, empty-result answers)",
        closure_ok and detect_ok and empty_ok,
        f"closure={closure_ok} detect={detect_ok} empty={empty_ok}",
    )


def test_cache_contract(staging_1000):
    graph, _ = build_graph(staging_1000)
    cached = QueryService(graph, Config())
    uncached = QueryService(graph, Config())
    uncached.cache.get = lambda *a, **k: None
    questions = ["Find Boeing 737 accidents", "How many Cessna accidents are there?"]
    keys = ("cypher", "columns", "rows", "page", "provenance", "answer", "warnings")
    transparency_ok = True
    for _ in range(3):
        for q in questions:
            a = cached.ask(q)
            b = uncached.ask(q)
            if {k: a[k] for k in keys} != {k: b[k] for k in keys}:
                transparency_ok = False

    cache = QueryCache(ttl=1.0)
    cache.put("q", "r", now=0.0)
    ttl_ok = (
        cache.get("q", now=0.999) is not None
        and cache.get("q", now=1.0) is not None
        and cache.get("q", now=1.001) is None
    )

    lru = QueryCache(capacity=1024, ttl=1e9)
    for i in range(1025):
        lru.put(f"q{i}", i, now=float(i))
    lru_ok = (
        lru.metrics()["entries"] == 1024
        and lru.get("q0", now=1030.0) is None
        and lru.get("q1", now=1030.0) is not None
    )

    fresh = QueryService(graph, Config())
    q = questions[0]
    fresh.ask(q)
    hit = fresh.ask(q)["cache"]["tier"] == "exact"
    fresh.import_batch(
        ImportBatch(nodes=[NodeSpec("Manufacturer", "name", {"name": "Zeppelin"})])
    )
    invalidation_ok = hit and fresh.ask(q)["cache"] == {"tier": "miss"}

    record(
        "cache contract (transparency, TTL boundary, LRU bound, write invalidation)",
        transparency_ok and ttl_ok and lru_ok and invalidation_ok,
        f"transparent={transparency_ok} ttl={ttl_ok} lru={lru_ok} inval={invalidation_ok}",
    )


def test_classifier():
    rng = np.random.default_rng(11)
    x = rng.normal(size=(12, 5))
    y_idx = rng.integers(0, 3, size=12)
    weights = rng.normal(scale=0.5, size=(3, 5))
    bias = rng.normal(scale=0.5, size=3)
    _, grad_w, grad_b = annotate.loss_and_gradients(weights, bias, x, y_idx, 1e-3)
    eps = 1e-5
    worst = 0.0
    for i in range(3):
        for j in range(5):
            up, down = weights.copy(), weights.copy()
            up[i, j] += eps
            down[i, j] -= eps
            numeric = (
                annotate.loss_and_gradients(up, bias, x, y_idx, 1e-3)[0]
                - annotate.loss_and_gradients(down, bias, x, y_idx, 1e-3)[0]
            ) / (2 * eps)
            worst = max(worst, abs(numeric - grad_w[i, j]))
    grad_ok = worst < 1e-6

    texts = [
        "cessna 172 airplane", "boeing 737 jet", "piper cub airplane",
        "daytona beach florida", "denver colorado city", "chicago illinois city",
    ]
    labels = ["Vehicle"] * 3 + ["Location"] * 3
    tfidf = annotate.fit_tfidf(texts)
    model = annotate.train_logreg(
        tfidf.transform(texts), labels,
        annotate.Hyperparams(learning_rate=0.1),
    )
    preds = [
        annotate.predict_span(tfidf, model, t).label for t in texts
    ]
    accuracy_ok = preds == labels
    monotone_ok = bool((np.diff(model.losses) <= 1e-12).all())

    record(
        "classifier (gradient check <1e-6, separable accuracy 1.0, monotone loss)",
        grad_ok and accuracy_ok and monotone_ok,
        f"grad_worst={worst:.2e} acc={accuracy_ok} monotone={monotone_ok}",
    )


def test_end_to_end_smoke(tmp_path):
    started = time.perf_counter()
    runner = CliRunner()
    fx = tmp_path / "fx"
    staging = tmp_path / "staging"
    snapshot = tmp_path / "graph.askg"
    steps = [
        ["gen-fixture", "-n", "1000", "--seed", "7", "--alias-rate", "0.2",
         "--out", str(fx)],
        ["ingest", "--input", str(fx / "fixture.csv"), "--out", str(staging)],
        ["resolve", "--staging", str(staging), "--threshold", "0.8", "--apply",
         "--report", str(tmp_path / "merges.csv"), "--no-figures"],
        ["build", "--staging", str(staging), "--snapshot", str(snapshot)],
    ]
    for step in steps:
        result = runner.invoke(cli_main, step)
        assert result.exit_code == 0, (step, result.output)

    graph = PropertyGraph.snapshot_load(snapshot)
    service = QueryService(graph, Config())
    client = TestClient(create_app(service))

    verified_ok = True
    for question in [
        "Find Boeing 737 accidents",
        "How many Cessna accidents are there?",
        "Show top two accidents with Boeing flights at KLAX",
    ]:
        r = client.post("/api/query", json={"question": question})
        body = r.json()
        if r.status_code != 200 or not body["answer"]["verified"] or not body["cypher"]:
            verified_ok = False

    counts = json.loads((fx / "fixture.counts.json").read_text())
    stats = client.get("/api/stats").json()
    counts_ok = (
        stats["nodes"] == counts["nodes"]
        and stats["relationships"] == counts["relationships"]
    )
    elapsed = time.perf_counter() - started
    record(
        "end-to-end smoke (CLI pipeline -> API, verified answers, generator counts)",
        verified_ok and counts_ok and elapsed < 120.0,
        f"verified={verified_ok} counts={counts_ok} took {elapsed:.1f}s",
    )
