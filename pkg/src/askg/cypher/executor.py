"""Query execution over a PropertyGraph.

Value semantics (shared, by definition, with the reference interpreter
used in tests):

* A property absent from a node/relationship evaluates as ABSENT; any
  comparison against ABSENT is false, including ``<>``.
* ``=`` / ``<>`` across different value types are false / true; ordered
  comparisons (< <= > >=) across incompatible types are false and bump
  the ``type_mismatches`` stat, as do CONTAINS / STARTS WITH over
  non-string operands.
* Sort order is total: booleans < numbers < strings < nodes <
  relationships < ABSENT; DESC reverses the whole order; ties are broken
  by row provenance ids ascending.
* Aggregates skip ABSENT; sum/avg also skip non-numeric values; empty
  sum is 0, empty avg/min/max are ABSENT.
* Variable-length patterns contribute one row per distinct reachable
  endpoint inside the hop window (breadth-first, deduplicated).
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from functools import cmp_to_key

from ..graphstore import PropertyGraph
from .ast_nodes import (
    Aggregate,
    BoolOp,
    Comparison,
    Expr,
    Literal,
    NodePattern,
    NotOp,
    Parameter,
    PathPattern,
    PropertyAccess,
    Query,
    Variable,
)
from .errors import ExecutionError, PageError
from .planner import AccessPath, QueryPlan
from .printer import print_expr

DEFAULT_PAGE_SIZE = 100
MAX_PAGE_SIZE = 1000


class _Absent:
    __slots__ = ()

    def __repr__(self):
        return "ABSENT"


ABSENT = _Absent()


@dataclass(frozen=True)
class NodeRef:
    id: int


@dataclass(frozen=True)
class RelRef:
    id: int


@dataclass(frozen=True)
class PageRequest:
    number: int = 1
    size: int | None = None


@dataclass
class ResultSet:
    columns: list[str]
    rows: list[tuple]
    provenance: list[tuple[int, ...]]
    page: dict
    stats: dict
    warnings: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "columns": self.columns,
            "rows": [list(r) for r in self.rows],
            "provenance": [list(p) for p in self.provenance],
            "page": self.page,
            "stats": self.stats,
            "warnings": self.warnings,
        }


# -- value helpers ------------------------------------------------------------


def _is_number(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _type_rank(v) -> int:
    if isinstance(v, bool):
        return 0
    if _is_number(v):
        return 1
    if isinstance(v, str):
        return 2
    if isinstance(v, NodeRef):
        return 3
    if isinstance(v, RelRef):
        return 4
    if v is ABSENT or v is None:
        return 9
    return 8


def _eq(a, b) -> bool:
    if a is ABSENT or b is ABSENT:
        return False
    if isinstance(a, bool) or isinstance(b, bool):
        return isinstance(a, bool) and isinstance(b, bool) and a == b
    if _is_number(a) and _is_number(b):
        return a == b
    if isinstance(a, str) and isinstance(b, str):
        return a == b
    if isinstance(a, NodeRef) and isinstance(b, NodeRef):
        return a.id == b.id
    if isinstance(a, RelRef) and isinstance(b, RelRef):
        return a.id == b.id
    return False


def _ordered(op: str, a, b, stats: dict) -> bool:
    if a is ABSENT or b is ABSENT:
        return False
    comparable = (
        (_is_number(a) and _is_number(b))
        or (isinstance(a, str) and isinstance(b, str))
        or (isinstance(a, bool) and isinstance(b, bool))
    )
    if not comparable:
        stats["type_mismatches"] += 1
        return False
    if op == "<":
        return a < b
    if op == "<=":
        return a <= b
    if op == ">":
        return a > b
    return a >= b


def _string_op(op: str, a, b, stats: dict) -> bool:
    if a is ABSENT or b is ABSENT:
        return False
    if not (isinstance(a, str) and isinstance(b, str)):
        stats["type_mismatches"] += 1
        return False
    return a.startswith(b) if op == "STARTS WITH" else b in a


def _cmp_total(a, b) -> int:
    ra, rb = _type_rank(a), _type_rank(b)
    if ra != rb:
        return -1 if ra < rb else 1
    if ra == 9 or a == b:
        return 0
    if ra == 3 or ra == 4:
        a, b = a.id, b.id
    return -1 if a < b else 1


# -- expression evaluation ------------------------------------------------------


class _Evaluator:
    def __init__(self, graph: PropertyGraph, params: dict, stats: dict):
        self.graph = graph
        self.params = params
        self.stats = stats

    def resolve_static(self, expr: Expr):
        """Literal or parameter value (used for index keys and inline maps)."""
        if isinstance(expr, Literal):
            return ABSENT if expr.value is None else expr.value
        if isinstance(expr, Parameter):
            if expr.name not in self.params:
                raise ExecutionError(f"missing parameter ${expr.name}")
            value = self.params[expr.name]
            return ABSENT if value is None else value
        raise ExecutionError(f"expected literal or parameter, got {print_expr(expr)}")

    def value(self, expr: Expr, binding: dict):
        if isinstance(expr, (Literal, Parameter)):
            return self.resolve_static(expr)
        if isinstance(expr, Variable):
            return binding[expr.name]
        if isinstance(expr, PropertyAccess):
            ref = binding[expr.variable]
            if isinstance(ref, NodeRef):
                props = self.graph.nodes[ref.id].properties
            elif isinstance(ref, RelRef):
                props = self.graph.relationships[ref.id].properties
            else:
                return ABSENT
            return props.get(expr.prop, ABSENT)
        raise ExecutionError(f"cannot evaluate {print_expr(expr)} as a value")

    def truth(self, expr: Expr, binding: dict) -> bool:
        if isinstance(expr, BoolOp):
            if expr.op == "AND":
                return all(self.truth(op, binding) for op in expr.operands)
            return any(self.truth(op, binding) for op in expr.operands)
        if isinstance(expr, NotOp):
            return not self.truth(expr.operand, binding)
        if isinstance(expr, Comparison):
            a = self.value(expr.left, binding)
            b = self.value(expr.right, binding)
            if expr.op == "=":
                return _eq(a, b)
            if expr.op == "<>":
                if a is ABSENT or b is ABSENT:
                    return False
                return not _eq(a, b)
            if expr.op in ("<", "<=", ">", ">="):
                return _ordered(expr.op, a, b, self.stats)
            return _string_op(expr.op, a, b, self.stats)
        if isinstance(expr, Literal) and isinstance(expr.value, bool):
            return expr.value
        raise ExecutionError(f"non-boolean predicate {print_expr(expr)}")


# -- pattern matching -------------------------------------------------------------


def _node_matches(graph: PropertyGraph, ev: _Evaluator, nid: int, pat: NodePattern) -> bool:
    node = graph.nodes[nid]
    if pat.label is not None and pat.label not in node.labels:
        return False
    for prop, expr in pat.properties:
        want = ev.resolve_static(expr)
        if want is ABSENT or not _eq(node.properties.get(prop, ABSENT), want):
            return False
    return True


def _reachable(
    graph: PropertyGraph, start: int, rel_type: str | None, direction: str,
    min_hops: int, max_hops: int,
) -> list[int]:
    seen = {start}
    frontier = [start]
    found: set[int] = set()
    for depth in range(1, max_hops + 1):
        nxt: list[int] = []
        for nid in frontier:
            for _, other in graph.incident(nid, rel_type, direction):
                if other not in seen:
                    seen.add(other)
                    nxt.append(other)
                    if depth >= min_hops:
                        found.add(other)
        frontier = nxt
        if not frontier:
            break
    return sorted(found)


def _root_candidates(
    graph: PropertyGraph, ev: _Evaluator, pattern: PathPattern, root: int,
    access: AccessPath, plan_eq: dict, binding: dict, stats: dict,
) -> list[int]:
    pat = pattern.nodes[root]
    if pat.variable is not None and pat.variable in binding:
        ref = binding[pat.variable]
        return [ref.id] if isinstance(ref, NodeRef) else []
    if access.kind == "index_lookup":
        inline = dict(pat.properties)
        source = plan_eq.get(pat.variable, {}) if pat.variable else inline
        values = {}
        for prop in access.properties:
            expr = source.get(prop, inline.get(prop))
            value = ev.resolve_static(expr)
            if value is ABSENT:
                return []
            values[prop] = value
        ids = graph.lookup(access.label, values)
    elif access.kind == "label_scan":
        ids = graph.lookup(access.label, {})
    else:
        ids = sorted(graph.nodes)
    stats["rows_scanned"] += len(ids)
    return ids


def _match_pattern(
    graph: PropertyGraph,
    ev: _Evaluator,
    pattern: PathPattern,
    root: int,
    access: AccessPath,
    plan_eq: dict,
    binding: dict,
    stats: dict,
) -> list[dict]:
    """All extensions of ``binding`` that embed this path pattern."""

    def bind_node(b: dict, pos: int, nid: int) -> dict | None:
        if not _node_matches(graph, ev, nid, pattern.nodes[pos]):
            return None
        var = pattern.nodes[pos].variable
        if var is None:
            return b
        if var in b:
            prior = b[var]
            if not (isinstance(prior, NodeRef) and prior.id == nid):
                return None
            return b
        new = dict(b)
        new[var] = NodeRef(nid)
        return new

    def bind_rel(b: dict, rel_pat, rid: int) -> dict | None:
        if rel_pat.variable is None:
            return b
        if rel_pat.variable in b:
            prior = b[rel_pat.variable]
            if not (isinstance(prior, RelRef) and prior.id == rid):
                return None
            return b
        new = dict(b)
        new[rel_pat.variable] = RelRef(rid)
        return new

    def node_of(b: dict, pos_key: str) -> int:
        return b[pos_key].id

    # states carry the binding plus the node id at each matched position
    def extend(states: list[tuple[dict, dict[int, int]]], frm: int, to: int) -> list:
        """Extend matches from position ``frm`` to adjacent position ``to``."""
        rel_index = min(frm, to)
        rel_pat = pattern.rels[rel_index]
        forward = to > frm
        # pattern direction 'out' points from rels[i]'s left node (i) to
        # right node (i+1); walking backwards inverts the travel direction.
        direction = rel_pat.direction
        if not forward and direction in ("out", "in"):
            direction = "in" if direction == "out" else "out"
        out: list[tuple[dict, dict[int, int]]] = []
        for b, pos_nodes in states:
            start = pos_nodes[frm]
            if rel_pat.var_length:
                for other in _reachable(
                    graph, start, rel_pat.type, direction,
                    rel_pat.min_hops, rel_pat.max_hops,
                ):
                    nb = bind_node(b, to, other)
                    if nb is not None:
                        np = dict(pos_nodes)
                        np[to] = other
                        out.append((nb, np))
            else:
                for rid, other in graph.incident(start, rel_pat.type, direction):
                    nb = bind_node(b, to, other)
                    if nb is None:
                        continue
                    nb = bind_rel(nb, rel_pat, rid)
                    if nb is None:
                        continue
                    np = dict(pos_nodes)
                    np[to] = other
                    out.append((nb, np))
        return out

    states: list[tuple[dict, dict[int, int]]] = []
    for nid in _root_candidates(graph, ev, pattern, root, access, plan_eq, binding, stats):
        if nid not in graph.nodes:
            continue
        nb = bind_node(binding, root, nid)
        if nb is not None:
            states.append((nb, {root: nid}))

    for pos in range(root + 1, len(pattern.nodes)):
        states = extend(states, pos - 1, pos)
    for pos in range(root - 1, -1, -1):
        states = extend(states, pos + 1, pos)
    return [b for b, _ in states]


# -- projection / aggregation -----------------------------------------------------


def _node_dict(graph: PropertyGraph, nid: int) -> dict:
    node = graph.nodes[nid]
    return {
        "id": node.node_id,
        "labels": sorted(node.labels),
        "properties": dict(sorted(node.properties.items())),
    }


def _rel_dict(graph: PropertyGraph, rid: int) -> dict:
    rel = graph.relationships[rid]
    return {
        "id": rel.rel_id,
        "type": rel.type,
        "source": rel.source,
        "target": rel.target,
        "properties": dict(sorted(rel.properties.items())),
    }


def _project_cell(graph: PropertyGraph, value):
    if value is ABSENT:
        return None
    if isinstance(value, NodeRef):
        return _node_dict(graph, value.id)
    if isinstance(value, RelRef):
        return _rel_dict(graph, value.id)
    return value


def _freeze(cell):
    """Hashable shape of a projected cell; numbers unify across int/float."""
    if isinstance(cell, dict):
        if "labels" in cell:
            return ("node", cell["id"])
        return ("rel", cell["id"])
    if isinstance(cell, bool):
        return ("bool", cell)
    if isinstance(cell, (int, float)):
        return ("num", float(cell))
    return (type(cell).__name__, cell)


def canonical_row(cells: tuple) -> tuple:
    """Representation-independent row shape (used for final sort ties)."""
    return tuple(None if c is None else _freeze(c) for c in cells)


def _provenance(binding: dict) -> tuple[int, ...]:
    return tuple(sorted({v.id for v in binding.values() if isinstance(v, NodeRef)}))


def _aggregate(func: str, values: list):
    present = [v for v in values if v is not ABSENT]
    if func == "count":
        return len(present)
    if func in ("sum", "avg"):
        nums = [v for v in present if _is_number(v)]
        if func == "sum":
            return sum(nums) if nums else 0
        return sum(nums) / len(nums) if nums else ABSENT
    if not present:
        return ABSENT
    best = present[0]
    for v in present[1:]:
        c = _cmp_total(v, best)
        if (func == "min" and c < 0) or (func == "max" and c > 0):
            best = v
    return best


def execute(
    graph: PropertyGraph,
    plan_obj: QueryPlan,
    params: dict | None = None,
    page: PageRequest | None = None,
    default_page_size: int = DEFAULT_PAGE_SIZE,
    max_page_size: int = MAX_PAGE_SIZE,
) -> ResultSet:
    """Run a planned query: match, filter, aggregate, order, paginate."""
    t0 = time.perf_counter()
    query: Query = plan_obj.query
    params = params or {}
    page = page or PageRequest()
    if page.number < 1:
        raise PageError("page number must be >= 1")
    size = page.size if page.size is not None else default_page_size
    if size < 1:
        raise PageError("page size must be >= 1")
    if size > max_page_size:
        raise PageError(f"page size {size} exceeds the limit of {max_page_size}")

    stats = {"rows_scanned": 0, "type_mismatches": 0}
    ev = _Evaluator(graph, params, stats)

    with graph.lock.read_lock():
        bindings: list[dict] = [{}]
        for i, pattern in enumerate(query.patterns):
            root, access = plan_obj.roots[i]
            nxt: list[dict] = []
            for b in bindings:
                nxt.extend(
                    _match_pattern(
                        graph, ev, pattern, root, access, plan_obj.eq_predicates, b, stats
                    )
                )
            bindings = nxt
            if not bindings:
                break

        if query.where is not None:
            bindings = [b for b in bindings if ev.truth(query.where, b)]

        columns = [item.alias or print_expr(item.expr) for item in query.return_items]

        if query.has_aggregates():
            rows = _aggregate_rows(graph, ev, query, bindings)
        else:
            rows = [
                (
                    tuple(
                        _project_cell(graph, ev.value(item.expr, b))
                        for item in query.return_items
                    ),
                    _provenance(b),
                    b,
                )
                for b in bindings
            ]

        if query.distinct:
            seen: dict = {}
            for cells, prov, b in rows:
                key = tuple(_freeze(c) for c in cells)
                if key in seen:
                    prior = seen[key]
                    seen[key] = (prior[0], tuple(sorted(set(prior[1]) | set(prov))), prior[2])
                else:
                    seen[key] = (cells, prov, b)
            rows = list(seen.values())

        if query.order_by:
            rows = _order_rows(graph, ev, query, rows)

        all_rows = [(cells, prov) for cells, prov, _ in rows]

    skip = query.skip or 0
    total = len(all_rows)
    if query.limit is not None:
        window = all_rows[skip : skip + query.limit]
        page_info = {
            "number": 1,
            "size": query.limit,
            "has_more": skip + query.limit < total,
        }
    else:
        start = skip + (page.number - 1) * size
        window = all_rows[start : start + size]
        page_info = {
            "number": page.number,
            "size": size,
            "has_more": start + size < total,
        }

    stats["elapsed_ms"] = round((time.perf_counter() - t0) * 1000.0, 3)
    return ResultSet(
        columns=columns,
        rows=[cells for cells, _ in window],
        provenance=[prov for _, prov in window],
        page=page_info,
        stats=stats,
        warnings=list(plan_obj.warnings),
    )


def _aggregate_rows(graph, ev: _Evaluator, query: Query, bindings: list[dict]):
    group_items = [
        (i, item) for i, item in enumerate(query.return_items)
        if not isinstance(item.expr, Aggregate)
    ]
    agg_items = [
        (i, item) for i, item in enumerate(query.return_items)
        if isinstance(item.expr, Aggregate)
    ]
    groups: dict = {}
    order: list = []
    for b in bindings:
        key_cells = tuple(
            _project_cell(graph, ev.value(item.expr, b)) for _, item in group_items
        )
        key = tuple(_freeze(c) for c in key_cells)
        if key not in groups:
            groups[key] = (key_cells, [], set())
            order.append(key)
        groups[key][1].append(b)
        groups[key][2].update(_provenance(b))

    if not bindings and not group_items:
        groups[()] = ((), [], set())
        order.append(())

    rows = []
    for key in order:
        key_cells, members, prov = groups[key]
        cells: list = [None] * len(query.return_items)
        for (i, _), cell in zip(group_items, key_cells):
            cells[i] = cell
        for i, item in agg_items:
            agg: Aggregate = item.expr
            if agg.argument is None:
                value = len(members)
            else:
                value = _aggregate(
                    agg.func, [ev.value(agg.argument, m) for m in members]
                )
            cells[i] = _project_cell(graph, value)
        rep = members[0] if members else {}
        rows.append((tuple(cells), tuple(sorted(prov)), rep))
    return rows


def _order_rows(graph, ev: _Evaluator, query: Query, rows):
    aggregated = query.has_aggregates()
    col_exprs = [item.expr for item in query.return_items]

    def key_values(row):
        cells, prov, binding = row
        values = []
        for item in query.order_by:
            if aggregated or query.distinct:
                try:
                    idx = col_exprs.index(item.expr)
                except ValueError:
                    raise ExecutionError(
                        "ORDER BY on aggregated/distinct queries must reference a returned expression"
                    ) from None
                cell = cells[idx]
                if isinstance(cell, dict):
                    values.append(NodeRef(cell["id"]) if "labels" in cell else RelRef(cell["id"]))
                else:
                    values.append(ABSENT if cell is None else cell)
            else:
                values.append(ev.value(item.expr, binding))
        return values

    keyed = [(key_values(row), row) for row in rows]
    directions = [item.ascending for item in query.order_by]

    def compare(a, b):
        for (va, vb), asc in zip(zip(a[0], b[0]), directions):
            c = _cmp_total(va, vb)
            if c:
                return c if asc else -c
        pa, pb = a[1][1], b[1][1]
        if pa != pb:
            return -1 if pa < pb else 1
        ca, cb = repr(canonical_row(a[1][0])), repr(canonical_row(b[1][0]))
        if ca != cb:
            return -1 if ca < cb else 1
        return 0

    keyed.sort(key=cmp_to_key(compare))
    return [row for _, row in keyed]
