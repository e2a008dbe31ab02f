"""Recursive-descent parser and semantic checks for the query subset."""

from __future__ import annotations

from .ast_nodes import (
    Aggregate,
    BoolOp,
    Comparison,
    Expr,
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
    walk,
)
from .errors import CypherSyntaxError
from .lexer import Token, tokenize

DEFAULT_HOP_CEILING = 5

_AGGREGATES = {"COUNT", "SUM", "AVG", "MIN", "MAX"}


class _Parser:
    def __init__(self, tokens: list[Token], hop_ceiling: int):
        self.tokens = tokens
        self.pos = 0
        self.hop_ceiling = hop_ceiling

    # -- token plumbing ------------------------------------------------------

    @property
    def cur(self) -> Token:
        return self.tokens[self.pos]

    def at_keyword(self, *words: str) -> bool:
        return self.cur.kind == "KEYWORD" and self.cur.text.upper() in words

    def take(self) -> Token:
        tok = self.cur
        self.pos += 1
        return tok

    def expect(self, kind: str, expected: str) -> Token:
        if self.cur.kind != kind:
            self.fail(f"unexpected {self._describe(self.cur)}", {expected})
        return self.take()

    def expect_keyword(self, word: str) -> Token:
        if not self.at_keyword(word):
            self.fail(f"unexpected {self._describe(self.cur)}", {word})
        return self.take()

    @staticmethod
    def _describe(tok: Token) -> str:
        return "end of input" if tok.kind == "EOF" else f"{tok.text!r}"

    def fail(self, message: str, expected: set[str] | None = None):
        raise CypherSyntaxError(message, self.cur.line, self.cur.column, expected)

    # -- grammar -------------------------------------------------------------

    def parse_query(self) -> Query:
        self.expect_keyword("MATCH")
        patterns = [self.parse_pattern()]
        while self.cur.kind == "COMMA":
            self.take()
            patterns.append(self.parse_pattern())

        where = None
        if self.at_keyword("WHERE"):
            self.take()
            where = self.parse_or()

        self.expect_keyword("RETURN")
        distinct = False
        if self.at_keyword("DISTINCT"):
            self.take()
            distinct = True
        items = [self.parse_return_item()]
        while self.cur.kind == "COMMA":
            self.take()
            items.append(self.parse_return_item())

        order_by: list[OrderItem] = []
        if self.at_keyword("ORDER"):
            self.take()
            self.expect_keyword("BY")
            order_by.append(self.parse_order_item())
            while self.cur.kind == "COMMA":
                self.take()
                order_by.append(self.parse_order_item())

        skip = limit = None
        if self.at_keyword("SKIP"):
            self.take()
            skip = self.expect("INT", "non-negative integer").value
        if self.at_keyword("LIMIT"):
            self.take()
            limit = self.expect("INT", "non-negative integer").value
        if self.cur.kind != "EOF":
            self.fail(f"unexpected {self._describe(self.cur)} after query", {"end of input"})

        return Query(
            patterns=tuple(patterns),
            where=where,
            return_items=tuple(items),
            distinct=distinct,
            order_by=tuple(order_by),
            skip=skip,
            limit=limit,
        )

    def parse_pattern(self) -> PathPattern:
        nodes = [self.parse_node_pattern()]
        rels: list[RelPattern] = []
        while self.cur.kind in ("DASH", "LT"):
            rels.append(self.parse_rel_pattern())
            nodes.append(self.parse_node_pattern())
        return PathPattern(nodes=tuple(nodes), rels=tuple(rels))

    def parse_node_pattern(self) -> NodePattern:
        self.expect("LPAREN", "(")
        variable = label = None
        if self.cur.kind == "IDENT":
            variable = self.take().text
        if self.cur.kind == "COLON":
            self.take()
            label = self.expect("IDENT", "label").text
        props: list[tuple[str, Expr]] = []
        if self.cur.kind == "LBRACE":
            self.take()
            while True:
                key = self.expect("IDENT", "property name").text
                self.expect("COLON", ":")
                props.append((key, self.parse_value_atom()))
                if self.cur.kind == "COMMA":
                    self.take()
                    continue
                break
            self.expect("RBRACE", "}")
        self.expect("RPAREN", ")")
        return NodePattern(variable=variable, label=label, properties=tuple(props))

    def parse_rel_pattern(self) -> RelPattern:
        direction = "undirected"
        if self.cur.kind == "LT":
            self.take()
            self.expect("DASH", "-")
            direction = "in"
        else:
            self.expect("DASH", "-")

        variable = rel_type = None
        min_hops = max_hops = 1
        var_length = False
        if self.cur.kind == "LBRACKET":
            self.take()
            if self.cur.kind == "IDENT":
                variable = self.take().text
            if self.cur.kind == "COLON":
                self.take()
                rel_type = self.expect("IDENT", "relationship type").text
            if self.cur.kind == "STAR":
                star = self.take()
                var_length = True
                min_hops, max_hops = 1, self.hop_ceiling
                if self.cur.kind == "INT":
                    min_hops = self.take().value
                    max_hops = min_hops
                if self.cur.kind == "DOTDOT":
                    self.take()
                    max_hops = self.hop_ceiling
                    if self.cur.kind == "INT":
                        max_hops = self.take().value
                if not 1 <= min_hops <= max_hops <= self.hop_ceiling:
                    raise CypherSyntaxError(
                        f"hop range {min_hops}..{max_hops} outside 1..{self.hop_ceiling}",
                        star.line,
                        star.column,
                    )
            self.expect("RBRACKET", "]")

        if direction == "in":
            self.expect("DASH", "-")
        else:
            self.expect("DASH", "-")
            if self.cur.kind == "GT":
                self.take()
                direction = "out"
        return RelPattern(
            variable=variable,
            type=rel_type,
            direction=direction,
            min_hops=min_hops,
            max_hops=max_hops,
            var_length=var_length,
        )

    # -- expressions -----------------------------------------------------------

    @staticmethod
    def _splice(operands: list[Expr], op: str, new: Expr) -> None:
        # AND/OR are associative: flatten so parenthesization round-trips
        if isinstance(new, BoolOp) and new.op == op:
            operands.extend(new.operands)
        else:
            operands.append(new)

    def parse_or(self) -> Expr:
        operands: list[Expr] = []
        self._splice(operands, "OR", self.parse_and())
        while self.at_keyword("OR"):
            self.take()
            self._splice(operands, "OR", self.parse_and())
        if len(operands) == 1:
            return operands[0]
        return BoolOp(op="OR", operands=tuple(operands))

    def parse_and(self) -> Expr:
        operands: list[Expr] = []
        self._splice(operands, "AND", self.parse_not())
        while self.at_keyword("AND"):
            self.take()
            self._splice(operands, "AND", self.parse_not())
        if len(operands) == 1:
            return operands[0]
        return BoolOp(op="AND", operands=tuple(operands))

    def parse_not(self) -> Expr:
        if self.at_keyword("NOT"):
            self.take()
            return NotOp(operand=self.parse_not())
        if self.cur.kind == "LPAREN":
            self.take()
            inner = self.parse_or()
            self.expect("RPAREN", ")")
            return inner
        return self.parse_comparison()

    def parse_comparison(self) -> Expr:
        left = self.parse_value_atom()
        op = None
        if self.cur.kind == "EQ":
            op = "="
        elif self.cur.kind == "NE":
            op = "<>"
        elif self.cur.kind == "LT":
            op = "<"
        elif self.cur.kind == "LE":
            op = "<="
        elif self.cur.kind == "GT":
            op = ">"
        elif self.cur.kind == "GE":
            op = ">="
        elif self.at_keyword("CONTAINS"):
            op = "CONTAINS"
        elif self.at_keyword("STARTS"):
            self.take()
            self.expect_keyword("WITH")
            return Comparison(op="STARTS WITH", left=left, right=self.parse_value_atom())
        if op is None:
            if isinstance(left, Literal) and isinstance(left.value, bool):
                return left
            self.fail(
                "comparison operator expected",
                {"=", "<>", "<", "<=", ">", ">=", "CONTAINS", "STARTS WITH"},
            )
        self.take()
        return Comparison(op=op, left=left, right=self.parse_value_atom())

    def parse_value_atom(self) -> Expr:
        tok = self.cur
        if tok.kind in ("INT", "FLOAT"):
            self.take()
            return Literal(tok.value)
        if tok.kind == "DASH":
            self.take()
            num = self.cur
            if num.kind not in ("INT", "FLOAT"):
                self.fail("number expected after unary minus", {"number"})
            self.take()
            return Literal(-num.value)
        if tok.kind == "STRING":
            self.take()
            return Literal(tok.value)
        if tok.kind == "PARAM":
            self.take()
            return Parameter(tok.value)
        if tok.kind == "KEYWORD" and tok.text.upper() in ("TRUE", "FALSE"):
            self.take()
            return Literal(tok.text.upper() == "TRUE")
        if tok.kind == "KEYWORD" and tok.text.upper() == "NULL":
            self.take()
            return Literal(None)
        if tok.kind == "IDENT":
            name = self.take().text
            if name.upper() in _AGGREGATES and self.cur.kind == "LPAREN":
                return self.parse_aggregate(name)
            if self.cur.kind == "DOT":
                self.take()
                prop = self.expect("IDENT", "property name").text
                return PropertyAccess(variable=name, prop=prop)
            return Variable(name)
        self.fail(
            f"value expected, got {self._describe(tok)}",
            {"literal", "parameter", "variable", "property access"},
        )

    def parse_aggregate(self, name: str) -> Expr:
        self.expect("LPAREN", "(")
        func = name.lower()
        argument: Expr | None
        if self.cur.kind == "STAR":
            if func != "count":
                self.fail("only count(*) accepts *", {"expression"})
            self.take()
            argument = None
        else:
            argument = self.parse_value_atom()
            if isinstance(argument, Aggregate):
                self.fail("nested aggregates are not allowed")
        self.expect("RPAREN", ")")
        return Aggregate(func=func, argument=argument)

    def parse_return_item(self) -> ReturnItem:
        expr = self.parse_value_atom()
        alias = None
        if self.at_keyword("AS"):
            self.take()
            alias = self.expect("IDENT", "alias").text
        return ReturnItem(expr=expr, alias=alias)

    def parse_order_item(self) -> OrderItem:
        expr = self.parse_value_atom()
        if isinstance(expr, Aggregate):
            self.fail("aggregates are not allowed in ORDER BY")
        ascending = True
        if self.at_keyword("ASC"):
            self.take()
        elif self.at_keyword("DESC"):
            self.take()
            ascending = False
        return OrderItem(expr=expr, ascending=ascending)


def _semantic_check(query: Query):
    node_vars = query.node_variables()
    rel_vars = query.rel_variables()
    clash = node_vars & rel_vars
    if clash:
        raise CypherSyntaxError(
            f"variable used for both node and relationship: {sorted(clash)}", 1, 1
        )
    for pattern in query.patterns:
        for rel in pattern.rels:
            if rel.var_length and rel.variable is not None:
                raise CypherSyntaxError(
                    "variable binding on variable-length relationships is not supported",
                    1,
                    1,
                )
    rel_seen: set[str] = set()
    for pattern in query.patterns:
        for rel in pattern.rels:
            if rel.variable:
                if rel.variable in rel_seen:
                    raise CypherSyntaxError(
                        f"relationship variable {rel.variable!r} bound more than once", 1, 1
                    )
                rel_seen.add(rel.variable)

    bound = node_vars | rel_vars
    exprs: list[Expr] = [item.expr for item in query.return_items]
    if query.where is not None:
        exprs.append(query.where)
    exprs.extend(item.expr for item in query.order_by)
    for pattern in query.patterns:
        for node in pattern.nodes:
            exprs.extend(value for _, value in node.properties)
    for root in exprs:
        for sub in walk(root):
            if isinstance(sub, Variable) and sub.name not in bound:
                raise CypherSyntaxError(f"unbound variable {sub.name!r}", 1, 1)
            if isinstance(sub, PropertyAccess) and sub.variable not in bound:
                raise CypherSyntaxError(f"unbound variable {sub.variable!r}", 1, 1)


def parse(text: str, hop_ceiling: int = DEFAULT_HOP_CEILING) -> Query:
    """Parse query text into an AST; raises CypherSyntaxError with
    line/column and the expected-token set on malformed input."""
    tokens = tokenize(text)
    query = _Parser(tokens, hop_ceiling).parse_query()
    _semantic_check(query)
    return query
