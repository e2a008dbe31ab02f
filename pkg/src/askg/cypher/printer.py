"""Canonical query rendering; parse(pretty(parse(q))) == parse(q)."""

from __future__ import annotations

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
    RelPattern,
    Variable,
)


def _literal(value) -> str:
    if value is None:
        return "NULL"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, str):
        escaped = value.replace("\\", "\\\\").replace("'", "\\'")
        return f"'{escaped}'"
    return repr(value)


def print_expr(expr: Expr, parent_op: str | None = None) -> str:
    if isinstance(expr, Literal):
        return _literal(expr.value)
    if isinstance(expr, Parameter):
        return f"${expr.name}"
    if isinstance(expr, Variable):
        return expr.name
    if isinstance(expr, PropertyAccess):
        return f"{expr.variable}.{expr.prop}"
    if isinstance(expr, Aggregate):
        arg = "*" if expr.argument is None else print_expr(expr.argument)
        return f"{expr.func}({arg})"
    if isinstance(expr, Comparison):
        return f"{print_expr(expr.left)} {expr.op} {print_expr(expr.right)}"
    if isinstance(expr, NotOp):
        return f"NOT {_maybe_paren(expr.operand)}"
    if isinstance(expr, BoolOp):
        joined = f" {expr.op} ".join(_maybe_paren(op, expr.op) for op in expr.operands)
        return joined
    raise TypeError(f"unprintable expression {expr!r}")


def _maybe_paren(expr: Expr, parent_op: str | None = None) -> str:
    text = print_expr(expr)
    if isinstance(expr, BoolOp) and expr.op != parent_op:
        return f"({text})"
    if isinstance(expr, BoolOp) and parent_op is None:
        return f"({text})"
    return text


def _node(node: NodePattern) -> str:
    inner = node.variable or ""
    if node.label:
        inner += f":{node.label}"
    if node.properties:
        body = ", ".join(f"{k}: {print_expr(v)}" for k, v in node.properties)
        inner += f" {{{body}}}" if inner else f"{{{body}}}"
    return f"({inner})"


def _rel(rel: RelPattern) -> str:
    inner = rel.variable or ""
    if rel.type:
        inner += f":{rel.type}"
    if rel.var_length:
        if rel.min_hops == rel.max_hops:
            inner += f"*{rel.min_hops}"
        else:
            inner += f"*{rel.min_hops}..{rel.max_hops}"
    body = f"[{inner}]" if inner else "[]"
    if rel.direction == "out":
        return f"-{body}->"
    if rel.direction == "in":
        return f"<-{body}-"
    return f"-{body}-"


def _pattern(pattern: PathPattern) -> str:
    parts = [_node(pattern.nodes[0])]
    for rel, node in zip(pattern.rels, pattern.nodes[1:]):
        parts.append(_rel(rel))
        parts.append(_node(node))
    return "".join(parts)


def pretty(query: Query) -> str:
    parts = ["MATCH " + ", ".join(_pattern(p) for p in query.patterns)]
    if query.where is not None:
        parts.append("WHERE " + print_expr(query.where))
    items = []
    for item in query.return_items:
        text = print_expr(item.expr)
        if item.alias:
            text += f" AS {item.alias}"
        items.append(text)
    distinct = "DISTINCT " if query.distinct else ""
    parts.append(f"RETURN {distinct}" + ", ".join(items))
    if query.order_by:
        rendered = [
            print_expr(o.expr) + ("" if o.ascending else " DESC") for o in query.order_by
        ]
        parts.append("ORDER BY " + ", ".join(rendered))
    if query.skip is not None:
        parts.append(f"SKIP {query.skip}")
    if query.limit is not None:
        parts.append(f"LIMIT {query.limit}")
    return " ".join(parts)
