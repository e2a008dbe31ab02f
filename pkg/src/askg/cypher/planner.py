"""Access-path selection and schema validation ahead of execution.

The planner never changes results: it picks, per pattern, which node to
start from and whether the start set comes from an index, a label scan,
or a full scan. Every indexable equality predicate that no index can
serve produces a ``missing index on :Label(prop)`` warning, and unknown
labels/types/properties are flagged (they match nothing at execution).
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..graphstore import GraphSchema
from .ast_nodes import (
    Comparison,
    Literal,
    Parameter,
    PropertyAccess,
    Query,
    conjuncts,
)
from .printer import print_expr


@dataclass(frozen=True)
class AccessPath:
    kind: str  # index_lookup | label_scan | full_scan
    label: str | None = None
    properties: tuple[str, ...] = ()

    def render(self) -> str:
        if self.kind == "index_lookup":
            return f"index_lookup :{self.label}({', '.join(self.properties)})"
        if self.kind == "label_scan":
            return f"label_scan :{self.label}"
        return "full_scan"


@dataclass
class QueryPlan:
    query: Query
    roots: list[tuple[int, AccessPath]]  # (node position, access path) per pattern
    warnings: list[str] = field(default_factory=list)
    # property-equality predicates usable per variable: var -> {prop: Expr}
    eq_predicates: dict[str, dict[str, object]] = field(default_factory=dict)

    def render(self) -> str:
        lines = ["plan:"]
        for i, (root, path) in enumerate(self.roots):
            pattern = self.query.patterns[i]
            var = pattern.nodes[root].variable or "_"
            lines.append(f"  pattern {i}: root={var}@{root} access={path.render()}")
        if self.warnings:
            lines.append("  warnings:")
            lines.extend(f"    - {w}" for w in self.warnings)
        return "\n".join(lines)


def _equality_predicates(query: Query) -> dict[str, dict[str, object]]:
    """var -> {property: value-expression} from inline maps and AND-ed WHERE."""
    eq: dict[str, dict[str, object]] = {}
    for pattern in query.patterns:
        for node in pattern.nodes:
            if node.variable is None:
                continue
            for prop, value in node.properties:
                eq.setdefault(node.variable, {})[prop] = value
    for term in conjuncts(query.where):
        if not isinstance(term, Comparison) or term.op != "=":
            continue
        sides = [term.left, term.right]
        for a, b in (sides, sides[::-1]):
            if isinstance(a, PropertyAccess) and isinstance(b, (Literal, Parameter)):
                eq.setdefault(a.variable, {}).setdefault(a.prop, b)
                break
    return eq


def _var_labels(query: Query) -> dict[str, str]:
    labels: dict[str, str] = {}
    for pattern in query.patterns:
        for node in pattern.nodes:
            if node.variable and node.label:
                labels.setdefault(node.variable, node.label)
    return labels


def plan(query: Query, schema: GraphSchema) -> QueryPlan:
    eq = _equality_predicates(query)
    var_labels = _var_labels(query)
    indexes = set(schema.all_indexes())
    warnings: list[str] = []
    seen_warning: set[str] = set()

    def warn(text: str):
        if text not in seen_warning:
            seen_warning.add(text)
            warnings.append(text)

    for pattern in query.patterns:
        for node in pattern.nodes:
            if node.label and node.label not in schema.node_labels:
                warn(f"unknown label :{node.label}")
        for rel in pattern.rels:
            if rel.type and rel.type not in schema.relationship_types:
                warn(f"unknown relationship type :{rel.type}")

    # property predicates against declared label properties
    for var, props in eq.items():
        label = var_labels.get(var)
        if label is None or label not in schema.node_labels:
            continue
        declared = set(schema.node_labels[label])
        for prop in props:
            if prop not in declared:
                warn(f"unknown property {prop} on :{label}")

    roots: list[tuple[int, AccessPath]] = []
    chosen_props: dict[str, tuple[str, ...]] = {}
    for pattern in query.patterns:
        best: tuple[int, int, int, AccessPath] | None = None  # (rank, width, -pos, path)
        for pos, node in enumerate(pattern.nodes):
            label = node.label
            available = set(eq.get(node.variable, {})) if node.variable else {
                p for p, _ in node.properties
            }
            path = AccessPath(kind="full_scan")
            rank, width = 0, 0
            if label is not None:
                path = AccessPath(kind="label_scan", label=label)
                rank = 1
                usable = [
                    props
                    for ix_label, props in indexes
                    if ix_label == label and set(props) <= available
                ]
                if usable:
                    props = max(usable, key=lambda p: (len(p), p))
                    path = AccessPath(kind="index_lookup", label=label, properties=props)
                    rank, width = 2, len(props)
            key = (rank, width, -pos, path)
            if best is None or key[:3] > best[:3]:
                best = key
        assert best is not None
        root_pos, root_path = -best[2], best[3]
        roots.append((root_pos, root_path))
        root_var = pattern.nodes[root_pos].variable
        if root_path.kind == "index_lookup" and root_var:
            chosen_props[root_var] = root_path.properties

    # missing-index warnings: equality predicates no index can serve
    for var, props in eq.items():
        label = var_labels.get(var)
        if label is None or label not in schema.node_labels:
            continue
        covered = set(chosen_props.get(var, ()))
        for prop in props:
            if prop in covered:
                continue
            if (label, (prop,)) in indexes:
                continue
            warn(f"missing index on :{label}({prop})")

    return QueryPlan(query=query, roots=roots, warnings=warnings, eq_predicates=eq)


def describe_predicates(plan_obj: QueryPlan) -> str:
    parts = []
    for var, props in sorted(plan_obj.eq_predicates.items()):
        for prop, value in sorted(props.items()):
            parts.append(f"{var}.{prop} = {print_expr(value)}")
    return ", ".join(parts)
