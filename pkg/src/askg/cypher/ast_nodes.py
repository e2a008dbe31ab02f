"""Query AST. All nodes are frozen dataclasses so parsed queries compare
structurally, which the round-trip and translation tests rely on."""

from __future__ import annotations

from dataclasses import dataclass


class Expr:
    pass


@dataclass(frozen=True)
class Literal(Expr):
    value: object  # str | int | float | bool | None


@dataclass(frozen=True)
class Parameter(Expr):
    name: str


@dataclass(frozen=True)
class Variable(Expr):
    name: str


@dataclass(frozen=True)
class PropertyAccess(Expr):
    variable: str
    prop: str


@dataclass(frozen=True)
class Comparison(Expr):
    op: str  # = <> < <= > >= CONTAINS STARTS WITH
    left: Expr
    right: Expr


@dataclass(frozen=True)
class BoolOp(Expr):
    op: str  # AND | OR
    operands: tuple[Expr, ...]


@dataclass(frozen=True)
class NotOp(Expr):
    operand: Expr


@dataclass(frozen=True)
class Aggregate(Expr):
    func: str  # count | sum | avg | min | max
    argument: Expr | None  # None means count(*)


@dataclass(frozen=True)
class NodePattern:
    variable: str | None = None
    label: str | None = None
    properties: tuple[tuple[str, Expr], ...] = ()


@dataclass(frozen=True)
class RelPattern:
    variable: str | None = None
    type: str | None = None
    direction: str = "out"  # out | in | undirected
    min_hops: int = 1
    max_hops: int = 1
    var_length: bool = False


@dataclass(frozen=True)
class PathPattern:
    nodes: tuple[NodePattern, ...]
    rels: tuple[RelPattern, ...] = ()


@dataclass(frozen=True)
class ReturnItem:
    expr: Expr
    alias: str | None = None


@dataclass(frozen=True)
class OrderItem:
    expr: Expr
    ascending: bool = True


@dataclass(frozen=True)
class Query:
    patterns: tuple[PathPattern, ...]
    return_items: tuple[ReturnItem, ...]
    where: Expr | None = None
    distinct: bool = False
    order_by: tuple[OrderItem, ...] = ()
    skip: int | None = None
    limit: int | None = None

    def node_variables(self) -> set[str]:
        return {
            n.variable
            for p in self.patterns
            for n in p.nodes
            if n.variable is not None
        }

    def rel_variables(self) -> set[str]:
        return {
            r.variable
            for p in self.patterns
            for r in p.rels
            if r.variable is not None
        }

    def has_aggregates(self) -> bool:
        return any(isinstance(item.expr, Aggregate) for item in self.return_items)


def walk(expr: Expr):
    """Yield expr and every sub-expression."""
    yield expr
    if isinstance(expr, Comparison):
        yield from walk(expr.left)
        yield from walk(expr.right)
    elif isinstance(expr, BoolOp):
        for op in expr.operands:
            yield from walk(op)
    elif isinstance(expr, NotOp):
        yield from walk(expr.operand)
    elif isinstance(expr, Aggregate) and expr.argument is not None:
        yield from walk(expr.argument)


def conjuncts(expr: Expr | None):
    """Top-level AND-ed terms of a boolean expression."""
    if expr is None:
        return
    if isinstance(expr, BoolOp) and expr.op == "AND":
        for op in expr.operands:
            yield from conjuncts(op)
    else:
        yield expr
