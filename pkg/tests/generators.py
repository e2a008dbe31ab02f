"""Random small graphs and random query text for oracle-equivalence tests."""

from __future__ import annotations

import random

from askg.graphstore import GraphSchema, PropertyGraph

LABELS = ["Person", "City", "Thing"]
REL_TYPES = ["KNOWS", "NEAR", "HAS"]
NAMES = ["ada", "bo", "cy", "dee", "eli", "flo"]
WORDS = ["red", "reddish", "blue", "green", "greenish"]


def test_schema() -> GraphSchema:
    return GraphSchema(
        node_labels={
            "Person": ["p", "q", "name", "flag", "s"],
            "City": ["p", "q", "name", "flag", "s"],
            "Thing": ["p", "q", "name", "flag", "s"],
        },
        relationship_types={
            "KNOWS": [(a, b) for a in LABELS for b in LABELS],
            "NEAR": [(a, b) for a in LABELS for b in LABELS],
            "HAS": [(a, b) for a in LABELS for b in LABELS],
        },
        unique_constraints=[],
        indexes=[("Person", ("p",)), ("Thing", ("p", "q"))],
    )


def random_graph(rng: random.Random, max_nodes: int = 50) -> PropertyGraph:
    graph = PropertyGraph(test_schema())
    n = rng.randint(2, max_nodes)
    ids = []
    for _ in range(n):
        label = rng.choice(LABELS)
        props = {}
        if rng.random() < 0.9:
            # occasionally a string where a number is expected, to exercise
            # the type-mismatch rules
            props["p"] = rng.choice(WORDS) if rng.random() < 0.1 else rng.randint(0, 5)
        if rng.random() < 0.6:
            props["q"] = rng.randint(0, 9)
        if rng.random() < 0.8:
            props["name"] = rng.choice(NAMES)
        if rng.random() < 0.4:
            props["flag"] = rng.random() < 0.5
        if rng.random() < 0.5:
            props["s"] = rng.choice(WORDS)
        ids.append(graph.create_node({label}, props))
    m = rng.randint(0, min(120, n * 3))
    for _ in range(m):
        src, dst = rng.choice(ids), rng.choice(ids)
        props = {"weight": rng.randint(1, 9)} if rng.random() < 0.5 else {}
        graph.create_relationship(rng.choice(REL_TYPES), src, dst, props)
    return graph


def _literal(rng: random.Random) -> str:
    roll = rng.random()
    if roll < 0.45:
        return str(rng.randint(0, 6))
    if roll < 0.75:
        return f"'{rng.choice(NAMES + WORDS)}'"
    if roll < 0.85:
        return rng.choice(["true", "false"])
    return str(rng.randint(0, 20) / 2)


def _prop_ref(rng: random.Random, variables: list[str]) -> str:
    var = rng.choice(variables)
    prop = rng.choice(["p", "q", "name", "flag", "s", "missing"])
    return f"{var}.{prop}"


def _comparison(rng: random.Random, variables: list[str], params: dict) -> str:
    left = _prop_ref(rng, variables)
    roll = rng.random()
    if roll < 0.12 and params:
        name = rng.choice(sorted(params))
        op = rng.choice(["=", "<>", "<", "<=", ">", ">="])
        return f"{left} {op} ${name}"
    if roll < 0.3:
        return f"{left} {rng.choice(['CONTAINS', 'STARTS WITH'])} '{rng.choice(['re', 'gree', 'a', 'ish'])}'"
    op = rng.choice(["=", "<>", "<", "<=", ">", ">="])
    return f"{left} {op} {_literal(rng)}"


def _where(rng: random.Random, variables: list[str], params: dict, depth: int = 0) -> str:
    if depth < 2 and rng.random() < 0.35:
        op = rng.choice(["AND", "OR"])
        a = _where(rng, variables, params, depth + 1)
        b = _where(rng, variables, params, depth + 1)
        return f"({a} {op} {b})"
    if rng.random() < 0.15:
        return f"NOT ({_where(rng, variables, params, depth + 1)})"
    return _comparison(rng, variables, params)


def random_query(rng: random.Random) -> tuple[str, dict]:
    """Query text plus a parameter map."""
    params: dict = {}
    if rng.random() < 0.25:
        params["v"] = rng.randint(0, 5)

    shape = rng.random()
    rel_vars: list[str] = []
    if shape < 0.2:
        label = rng.choice(LABELS + [None])
        pattern = f"(a{':' + label if label else ''})"
        variables = ["a"]
    elif shape < 0.45:
        t = rng.choice(REL_TYPES + [None])
        arrow = rng.choice(["-[{}]->", "<-[{}]-", "-[{}]-"])
        body = (":" + t) if t else ""
        if rng.random() < 0.4:
            body = "r" + body
            rel_vars = ["r"]
        la = rng.choice(LABELS + [None])
        lb = rng.choice(LABELS + [None])
        pattern = (
            f"(a{':' + la if la else ''})"
            + arrow.format(body)
            + f"(b{':' + lb if lb else ''})"
        )
        variables = ["a", "b"]
    elif shape < 0.62:
        t = rng.choice(REL_TYPES)
        lo = rng.randint(1, 2)
        hi = rng.randint(lo, 3)
        # label/inline-prop the right endpoint sometimes, so the planner
        # roots there and the executor walks the hop range backwards
        lb = rng.choice(LABELS + [None, None])
        suffix = f":{lb}" if lb else ""
        if lb and rng.random() < 0.5:
            suffix += f" {{p: {rng.randint(0, 5)}}}"
        arrow = rng.choice([f"-[:{t}*{lo}..{hi}]->", f"<-[:{t}*{lo}..{hi}]-", f"-[:{t}*{lo}..{hi}]-"])
        pattern = f"(a){arrow}(b{suffix})"
        variables = ["a", "b"]
    elif shape < 0.82:
        t1, t2 = rng.choice(REL_TYPES), rng.choice(REL_TYPES)
        arrow2 = rng.choice([f"-[:{t2}]->", f"<-[:{t2}]-"])
        la = rng.choice(LABELS + [None])
        pattern = f"(a{':' + la if la else ''})-[:{t1}]->(b){arrow2}(c)"
        variables = ["a", "b", "c"]
    else:
        la, lb = rng.choice(LABELS), rng.choice(LABELS)
        if rng.random() < 0.5:
            pattern = f"(a:{la}), (b:{lb})"
        else:
            pattern = f"(a:{la})-[:{rng.choice(REL_TYPES)}]->(b), (b)-[:{rng.choice(REL_TYPES)}]->(c)"
            variables = ["a", "b", "c"]
            parts = [f"MATCH {pattern}"]
            return _finish(rng, parts, variables, rel_vars, params)
        variables = ["a", "b"]

    # inline property map occasionally
    if rng.random() < 0.25 and pattern.startswith("(a:"):
        idx = pattern.index(")")
        pattern = pattern[:idx] + f" {{p: {rng.randint(0, 5)}}}" + pattern[idx:]

    parts = [f"MATCH {pattern}"]
    return _finish(rng, parts, variables, rel_vars, params)


def _finish(rng, parts, variables, rel_vars, params):
    if rng.random() < 0.75:
        parts.append("WHERE " + _where(rng, variables + rel_vars, params))

    aggregated = rng.random() < 0.35
    distinct = not aggregated and rng.random() < 0.3
    items: list[str] = []
    if aggregated:
        if rng.random() < 0.5:
            items.append(f"{rng.choice(variables)}.{rng.choice(['p', 'q', 'name'])}")
        agg = rng.choice(
            [
                "count(*)",
                f"count({rng.choice(variables)})",
                f"count({_prop_ref(rng, variables)})",
                f"sum({rng.choice(variables)}.p)",
                f"min({_prop_ref(rng, variables)})",
                f"max({_prop_ref(rng, variables)})",
                f"avg({rng.choice(variables)}.q)",
            ]
        )
        items.append(agg)
    else:
        count = rng.randint(1, min(3, len(variables) + 1))
        pool = list(variables)
        for _ in range(count):
            if rng.random() < 0.45:
                items.append(rng.choice(pool))
            else:
                items.append(_prop_ref(rng, pool))
        if rel_vars and rng.random() < 0.3:
            items.append(f"count({rel_vars[0]})")
            aggregated = True
    seen = set()
    unique_items = []
    for it in items:
        if it not in seen:
            seen.add(it)
            unique_items.append(it)
    items = unique_items

    rendered = []
    for i, item in enumerate(items):
        if rng.random() < 0.2:
            rendered.append(f"{item} AS c{i}")
        else:
            rendered.append(item)
    parts.append(("RETURN DISTINCT " if distinct else "RETURN ") + ", ".join(rendered))

    if rng.random() < 0.45:
        if aggregated or distinct:
            candidates = [it for it in items if "(" not in it]
        else:
            candidates = [f"{rng.choice(variables)}.{rng.choice(['p', 'q', 'name'])}"]
        if candidates:
            order = rng.choice(candidates)
            parts.append(f"ORDER BY {order}{' DESC' if rng.random() < 0.5 else ''}")

    if rng.random() < 0.25:
        parts.append(f"SKIP {rng.randint(0, 3)}")
    if rng.random() < 0.3:
        parts.append(f"LIMIT {rng.randint(1, 10)}")
    return " ".join(parts), params
