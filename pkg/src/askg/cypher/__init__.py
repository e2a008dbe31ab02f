"""Cypher-subset query engine: lexer, parser, planner, executor.

Read-only grammar:

    MATCH pattern (, pattern)* [WHERE expr]
    RETURN [DISTINCT] item (, item)*
    [ORDER BY expr [ASC|DESC] (, ...)*] [SKIP n] [LIMIT n]

Matching follows homomorphism semantics (a variable may bind the same
node as another; relationships are not required to be distinct within a
path). Variable-length patterns bind the set of distinct endpoints
reachable within the hop window, one row per endpoint.
"""

from .ast_nodes import (
    Aggregate,
    BoolOp,
    Comparison,
    Literal,
    NodePattern,
    NotOp,
    OrderItem,
    Parameter,
    PathPattern,
    PropertyAccess,
    Query,
    RelPattern,
    ReturnItem,
    Variable,
)
from .errors import CypherError, CypherSyntaxError, ExecutionError, PageError
from .executor import PageRequest, ResultSet, execute
from .parser import parse
from .planner import AccessPath, QueryPlan, plan
from .printer import pretty

__all__ = [
    "Aggregate",
    "BoolOp",
    "Comparison",
    "Literal",
    "NodePattern",
    "NotOp",
    "OrderItem",
    "Parameter",
    "PathPattern",
    "PropertyAccess",
    "Query",
    "RelPattern",
    "ReturnItem",
    "Variable",
    "CypherError",
    "CypherSyntaxError",
    "ExecutionError",
    "PageError",
    "PageRequest",
    "ResultSet",
    "execute",
    "parse",
    "AccessPath",
    "QueryPlan",
    "plan",
    "pretty",
]
