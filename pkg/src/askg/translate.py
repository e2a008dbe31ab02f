"""Natural-language to Cypher translation.

A provider chain is tried in order; every candidate query is parsed and
schema-validated, with one repair round per provider before failing
over. The chain always ends in the deterministic rule-based translator,
so the whole pipeline works offline and is a pure function of
(question, schema, context) when no remote provider is configured.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field, replace
from importlib import resources

import httpx

from .cypher import parse, plan, pretty
from .cypher.ast_nodes import (
    Aggregate,
    BoolOp,
    Comparison,
    Expr,
    Literal,
    NodePattern,
    OrderItem,
    PathPattern,
    PropertyAccess,
    Query,
    RelPattern,
    ReturnItem,
    Variable,
    conjuncts,
)
from .cypher.errors import CypherError
from .graphstore import GraphSchema

MAX_PROMPT_CHARS = 8000
CONTEXT_TURN_BOUND = 5


class TranslateError(Exception):
    pass


class UntranslatableError(TranslateError):
    """No provider produced a valid query; carries per-provider diagnostics."""

    def __init__(self, question: str, diagnostics: dict[str, str]):
        self.question = question
        self.diagnostics = diagnostics
        detail = "; ".join(f"{name}: {msg}" for name, msg in diagnostics.items())
        super().__init__(f"could not translate {question!r} ({detail})")


class ProviderError(TranslateError):
    pass


# -- lexicon -------------------------------------------------------------------

MANUFACTURERS = [
    "Beechcraft", "Bombardier", "Robinson", "Embraer", "Cessna",
    "Cirrus", "Airbus", "Boeing", "Mooney", "Piper",
]

AIRLINES = [
    "Delta Air Lines", "United Airlines", "American Airlines",
    "Southwest Airlines", "SkyWest Airlines", "Alaska Airlines",
]

STATES = {
    "alabama": "AL", "alaska": "AK", "arizona": "AZ", "arkansas": "AR",
    "california": "CA", "colorado": "CO", "connecticut": "CT",
    "florida": "FL", "georgia": "GA", "illinois": "IL", "indiana": "IN",
    "massachusetts": "MA", "michigan": "MI", "minnesota": "MN",
    "montana": "MT", "nevada": "NV", "new jersey": "NJ", "new mexico": "NM",
    "new york": "NY", "north carolina": "NC", "ohio": "OH",
    "oklahoma": "OK", "oregon": "OR", "pennsylvania": "PA",
    "tennessee": "TN", "texas": "TX", "utah": "UT", "virginia": "VA",
    "washington": "WA", "wisconsin": "WI",
}

INJURY_WORDS = {"fatal": "FATAL", "serious": "SERIOUS", "minor": "MINOR"}

NUMBER_WORDS = {
    "one": 1, "two": 2, "three": 3, "four": 4, "five": 5,
    "six": 6, "seven": 7, "eight": 8, "nine": 9, "ten": 10,
}

_AIRPORT_RE = re.compile(r"\b([Kk][A-Za-z]{3})\b")
_YEAR_RE = re.compile(r"\b((?:19|20)\d{2})\b")
_MODEL_RE = re.compile(r"\b([A-Za-z]?\d{3}(?:-\d{1,4})?[A-Za-z]{0,2})\b")
_TOP_N_RE = re.compile(r"\btop\s+(\d+|one|two|three|four|five|six|seven|eight|nine|ten)\b")
_FOLLOW_UP_RE = re.compile(r"^\s*(?:what|how)\s+about\s+(.+?)\s*\??\s*$", re.IGNORECASE)


def load_fewshot() -> list[dict[str, str]]:
    raw = resources.files("askg.data").joinpath("fewshot.json").read_text("utf-8")
    return json.loads(raw)


# -- conversation context ------------------------------------------------------


@dataclass(frozen=True)
class Turn:
    question: str
    query: str
    salient: tuple[tuple[str, str, str], ...]


@dataclass(frozen=True)
class ConversationContext:
    session_id: str
    turns: tuple[Turn, ...] = ()
    bound: int = CONTEXT_TURN_BOUND

    def last_query(self) -> str | None:
        return self.turns[-1].query if self.turns else None


def _var_labels(query: Query) -> dict[str, str]:
    labels: dict[str, str] = {}
    for pattern in query.patterns:
        for node in pattern.nodes:
            if node.variable and node.label:
                labels.setdefault(node.variable, node.label)
    return labels


def salient_entities(ast: Query, result_columns: list[str] | None = None) -> list[tuple[str, str, str]]:
    """Equality filters plus returned node labels, as (label, property, value)."""
    labels = _var_labels(ast)
    out: list[tuple[str, str, str]] = []
    for term in conjuncts(ast.where):
        if (
            isinstance(term, Comparison)
            and term.op == "="
            and isinstance(term.left, PropertyAccess)
            and isinstance(term.right, Literal)
        ):
            label = labels.get(term.left.variable, "")
            out.append((label, term.left.prop, str(term.right.value)))
    for node_pattern in (n for p in ast.patterns for n in p.nodes):
        for prop, expr in node_pattern.properties:
            if isinstance(expr, Literal):
                out.append((node_pattern.label or "", prop, str(expr.value)))
    for item in ast.return_items:
        if isinstance(item.expr, Variable):
            label = labels.get(item.expr.name)
            if label:
                out.append((label, "", ""))
    return out


def update_context(
    context: ConversationContext,
    question: str,
    ast: Query,
    query_text: str,
) -> ConversationContext:
    """Append a turn; never mutates the prior context object."""
    turn = Turn(question=question, query=query_text, salient=tuple(salient_entities(ast)))
    turns = context.turns + (turn,)
    if len(turns) > context.bound:
        turns = turns[-context.bound :]
    return replace(context, turns=turns)


# -- prompt construction ---------------------------------------------------------

SYSTEM_PREAMBLE = (
    "You translate aviation safety questions into Cypher queries over the "
    "schema below. Use only the listed labels, relationship types, and "
    "properties. Return exactly one query and nothing else."
)


def render_schema(schema: GraphSchema) -> str:
    lines = ["Node labels:"]
    for label in sorted(schema.node_labels):
        props = ", ".join(schema.node_labels[label])
        lines.append(f"  (:{label}) properties: {props}")
    lines.append("Relationships:")
    for rel_type in sorted(schema.relationship_types):
        for src, dst in schema.relationship_types[rel_type]:
            lines.append(f"  (:{src})-[:{rel_type}]->(:{dst})")
    lines.append("Unique constraints:")
    for label, prop in schema.unique_constraints:
        lines.append(f"  :{label}({prop})")
    lines.append("Indexes:")
    for label, props in schema.all_indexes():
        lines.append(f"  :{label}({', '.join(props)})")
    return "\n".join(lines)


@dataclass(frozen=True)
class PromptTemplate:
    preamble: str = SYSTEM_PREAMBLE
    fewshot: tuple[tuple[str, str], ...] = tuple(
        (pair["question"], pair["query"]) for pair in load_fewshot()
    )

    def __post_init__(self):
        if len(self.fewshot) < 3:
            raise TranslateError("prompt template needs at least 3 few-shot pairs")


def build_prompt(
    question: str,
    schema: GraphSchema,
    context: ConversationContext | None = None,
    template: PromptTemplate | None = None,
    max_chars: int = MAX_PROMPT_CHARS,
) -> str:
    """Deterministic prompt: preamble, schema, examples, context, question.

    Context turns are listed newest-first and dropped oldest-first when
    the rendered prompt would exceed ``max_chars``.
    """
    template = template or PromptTemplate()
    head = [template.preamble, "", render_schema(schema), "", "Examples:"]
    for q, c in template.fewshot:
        head.append(f"Q: {q}")
        head.append(f"C: {c}")
    tail = ["", f"Question: {question}", "Cypher:"]

    turns = list(context.turns) if context else []
    while True:
        if turns:
            ctx_lines = ["", "Conversation context (newest first):"]
            for turn in reversed(turns):
                ents = "; ".join(
                    f"({label}, {prop}, {value})" if prop else f"({label})"
                    for label, prop, value in turn.salient
                ) or "none"
                ctx_lines.append(f"- asked {turn.question!r} -> {turn.query} [entities: {ents}]")
        else:
            ctx_lines = ["", "Conversation context: (empty)"]
        prompt = "\n".join(head + ctx_lines + tail)
        if len(prompt) <= max_chars or not turns:
            return prompt
        turns.pop(0)


# -- deterministic rule-based translator ----------------------------------------


def _find_lexicon(question: str, lexicon: list[str]) -> str | None:
    low = question.lower()
    for term in sorted(lexicon, key=len, reverse=True):
        if re.search(rf"\b{re.escape(term.lower())}\b", low):
            return term
    return None


def _find_state(question: str) -> str | None:
    low = question.lower()
    for name in sorted(STATES, key=len, reverse=True):
        if re.search(rf"\b{re.escape(name)}\b", low):
            return STATES[name]
    return None


def _find_model(question: str, make: str | None) -> str | None:
    for match in _MODEL_RE.finditer(question):
        text = match.group(1)
        if _YEAR_RE.fullmatch(text):
            continue
        return text.upper() if text[0].isalpha() else text
    return None


@dataclass
class _Intent:
    subject: str = "accidents"  # accidents | aircraft
    count: bool = False
    top_n: int | None = None
    make: str | None = None
    model: str | None = None
    airport: str | None = None
    state: str | None = None
    year: int | None = None
    injury: str | None = None
    airline: str | None = None
    manufactured_by: bool = False
    operated_by: bool = False


def _parse_intent(question: str) -> _Intent:
    low = question.lower()
    intent = _Intent()
    if re.search(r"\baircraft\b|\bairplanes?\b|\bplanes?\b", low) and not re.search(
        r"\baccidents?\b|\bincidents?\b", low
    ):
        intent.subject = "aircraft"
    if low.startswith("how many") or re.search(r"\bcount\b", low):
        intent.count = True
    m = _TOP_N_RE.search(low)
    if m:
        raw = m.group(1)
        intent.top_n = int(raw) if raw.isdigit() else NUMBER_WORDS[raw]
    intent.make = _find_lexicon(question, MANUFACTURERS)
    intent.airline = _find_lexicon(question, AIRLINES)
    intent.model = _find_model(question, intent.make)
    am = _AIRPORT_RE.search(question)
    if am:
        intent.airport = am.group(1).upper()
    intent.state = _find_state(question)
    ym = _YEAR_RE.search(question)
    if ym:
        intent.year = int(ym.group(1))
    for word, level in INJURY_WORDS.items():
        if re.search(rf"\b{word}\b", low):
            intent.injury = level
            break
    intent.operated_by = bool(re.search(r"\boperated by\b|\boperator\b", low))
    intent.manufactured_by = bool(re.search(r"\bmanufactured by\b|\bmade by\b", low))
    return intent


def _eq(var: str, prop: str, value) -> Comparison:
    return Comparison(op="=", left=PropertyAccess(var, prop), right=Literal(value))


def _and(terms: list[Expr]) -> Expr | None:
    if not terms:
        return None
    if len(terms) == 1:
        return terms[0]
    return BoolOp(op="AND", operands=tuple(terms))


def _build_query(intent: _Intent) -> Query:
    if intent.subject == "aircraft":
        if intent.operated_by and intent.airline:
            pattern = PathPattern(
                nodes=(
                    NodePattern("a", "Aircraft"),
                    NodePattern("l", "Airline"),
                ),
                rels=(RelPattern(type="OPERATED_BY", direction="out"),),
            )
            where = _eq("l", "name", intent.airline)
        elif intent.manufactured_by and intent.make:
            pattern = PathPattern(
                nodes=(
                    NodePattern("a", "Aircraft"),
                    NodePattern("m", "Manufacturer"),
                ),
                rels=(RelPattern(type="MANUFACTURED_BY", direction="out"),),
            )
            where = _eq("m", "name", intent.make)
        else:
            terms = []
            if intent.make:
                terms.append(_eq("a", "make", intent.make))
            if intent.model:
                terms.append(
                    Comparison(
                        op="CONTAINS",
                        left=PropertyAccess("a", "model"),
                        right=Literal(intent.model),
                    )
                )
            if not terms:
                raise UntranslatableError(
                    "", {"fallback": "no recognizable aircraft filter in question"}
                )
            pattern = PathPattern(nodes=(NodePattern("a", "Aircraft"),))
            where = _and(terms)
        expr = Aggregate(func="count", argument=Variable("a")) if intent.count else Variable("a")
        return Query(
            patterns=(pattern,),
            where=where,
            return_items=(ReturnItem(expr=expr),),
        )

    # accidents subject
    needs_aircraft = intent.make is not None or intent.model is not None
    nodes: list[NodePattern] = []
    rels: list[RelPattern] = []
    if needs_aircraft:
        nodes.append(NodePattern("a", "Aircraft"))
        rels.append(RelPattern(type="INVOLVED_IN", direction="out"))
    nodes.append(NodePattern("x", "Accident"))
    if intent.airport:
        rels.append(RelPattern(type="OCCURRED_AT", direction="out"))
        nodes.append(NodePattern("p", "Airport"))

    terms: list[Expr] = []
    if intent.make:
        terms.append(_eq("a", "make", intent.make))
    if intent.model:
        terms.append(
            Comparison(
                op="CONTAINS",
                left=PropertyAccess("a", "model"),
                right=Literal(intent.model),
            )
        )
    if intent.airport:
        terms.append(_eq("p", "icao", intent.airport))
    if intent.state:
        terms.append(_eq("x", "state", intent.state))
    if intent.year is not None:
        terms.append(_eq("x", "event_year", intent.year))
    if intent.injury:
        terms.append(_eq("x", "injury_level", intent.injury))

    if not terms and intent.top_n is None and not intent.count:
        raise UntranslatableError(
            "", {"fallback": "no recognizable filter or intent in question"}
        )

    if intent.count:
        items = (ReturnItem(expr=Aggregate(func="count", argument=Variable("x"))),)
        order: tuple[OrderItem, ...] = ()
        limit = None
    else:
        items = (ReturnItem(expr=Variable("x")),)
        order = ()
        limit = None
        if intent.top_n is not None:
            order = (OrderItem(expr=PropertyAccess("x", "event_date"), ascending=False),)
            limit = intent.top_n

    return Query(
        patterns=(PathPattern(nodes=tuple(nodes), rels=tuple(rels)),),
        where=_and(terms),
        return_items=items,
        order_by=order,
        limit=limit,
    )


_KIND_PROPS = {
    "manufacturer": [("make", "="), ("name", "=")],
    "airline": [("name", "=")],
    "airport": [("icao", "=")],
    "state": [("state", "=")],
    "year": [("event_year", "=")],
    "injury": [("injury_level", "=")],
    "model": [("model", "CONTAINS")],
}


def _classify_follow_up(entity_text: str) -> tuple[str, object] | None:
    text = entity_text.strip().strip("?").strip()
    make = _find_lexicon(text, MANUFACTURERS)
    if make:
        return "manufacturer", make
    airline = _find_lexicon(text, AIRLINES)
    if airline:
        return "airline", airline
    m = _AIRPORT_RE.fullmatch(text)
    if m:
        return "airport", m.group(1).upper()
    state = _find_state(text)
    if state:
        return "state", state
    if _YEAR_RE.fullmatch(text):
        return "year", int(text)
    if text.lower() in INJURY_WORDS:
        return "injury", INJURY_WORDS[text.lower()]
    if _MODEL_RE.fullmatch(text):
        return "model", text.upper() if text[0].isalpha() else text
    return None


def _substitute(expr: Expr, kind: str, value) -> tuple[Expr, bool]:
    """Replace the literal of the filter matching the follow-up kind."""
    if isinstance(expr, BoolOp):
        changed = False
        operands = []
        for op in expr.operands:
            new, did = _substitute(op, kind, value)
            operands.append(new)
            changed = changed or did
        return BoolOp(op=expr.op, operands=tuple(operands)), changed
    if isinstance(expr, Comparison) and isinstance(expr.left, PropertyAccess):
        for prop, op in _KIND_PROPS[kind]:
            if expr.left.prop == prop and expr.op == op:
                return Comparison(op=expr.op, left=expr.left, right=Literal(value)), True
    return expr, False


def translate_rule_based(
    question: str, context: ConversationContext | None = None, hop_ceiling: int = 5
) -> str:
    """Keyword/pattern translation over the aviation lexicon.

    Always returns a parseable query or raises UntranslatableError.
    """
    follow = _FOLLOW_UP_RE.match(question)
    if follow:
        prior = context.last_query() if context else None
        if prior is None:
            raise UntranslatableError(
                question, {"fallback": "follow-up question without conversation context"}
            )
        classified = _classify_follow_up(follow.group(1))
        if classified is None:
            raise UntranslatableError(
                question,
                {"fallback": f"cannot classify follow-up entity {follow.group(1)!r}"},
            )
        kind, value = classified
        ast = parse(prior, hop_ceiling=hop_ceiling)
        if ast.where is None:
            raise UntranslatableError(
                question, {"fallback": "previous query has no filter to substitute"}
            )
        new_where, changed = _substitute(ast.where, kind, value)
        if not changed:
            raise UntranslatableError(
                question,
                {"fallback": f"previous query has no {kind} filter to substitute"},
            )
        return pretty(replace(ast, where=new_where))

    intent = _parse_intent(question)
    try:
        return pretty(_build_query(intent))
    except UntranslatableError as exc:
        raise UntranslatableError(question, exc.diagnostics) from None


# -- providers -----------------------------------------------------------------


@dataclass(frozen=True)
class TranslationRequest:
    question: str
    prompt: str
    context: ConversationContext | None


class DeterministicStubProvider:
    """Offline translator provider; terminates every provider chain."""

    kind = "deterministic_stub"
    name = "deterministic-stub"

    def __init__(self, hop_ceiling: int = 5):
        self.hop_ceiling = hop_ceiling

    def complete(self, request: TranslationRequest) -> str:
        return translate_rule_based(
            request.question, request.context, hop_ceiling=self.hop_ceiling
        )


class RemoteProvider:
    """Chat-completion endpoint speaking the documented JSON wire shape."""

    def __init__(
        self,
        endpoint: str,
        model: str,
        timeout: float = 10.0,
        kind: str = "remote_primary",
        transport: httpx.BaseTransport | None = None,
    ):
        self.endpoint = endpoint
        self.model = model
        self.timeout = timeout
        self.kind = kind
        self.name = f"{kind}:{model}"
        self._transport = transport

    def complete(self, request: TranslationRequest) -> str:
        payload = {
            "model": self.model,
            "messages": [{"role": "user", "content": request.prompt}],
            "temperature": 0,
        }
        try:
            with httpx.Client(timeout=self.timeout, transport=self._transport) as client:
                response = client.post(self.endpoint, json=payload)
                response.raise_for_status()
                body = response.json()
            content = body["choices"][0]["message"]["content"]
        except (httpx.HTTPError, KeyError, IndexError, ValueError) as exc:
            raise ProviderError(f"{self.name}: {exc}") from exc
        return _strip_fences(content)


def _strip_fences(text: str) -> str:
    text = text.strip()
    if text.startswith("```"):
        text = re.sub(r"^```[a-zA-Z]*\n?", "", text)
        text = re.sub(r"\n?```$", "", text)
    return text.strip()


# -- translation driver ------------------------------------------------------------


@dataclass
class TranslationResult:
    query: str
    ast: Query
    source: str  # llm | fallback | repaired
    validation: list[str] = field(default_factory=list)
    attempts: int = 0


def _validate(text: str, schema: GraphSchema, hop_ceiling: int) -> tuple[Query, list[str]]:
    """Parse and schema-check; unknown labels/types are fatal."""
    ast = parse(text, hop_ceiling=hop_ceiling)
    warnings = plan(ast, schema).warnings
    fatal = [
        w for w in warnings
        if w.startswith("unknown label") or w.startswith("unknown relationship type")
    ]
    if fatal:
        raise TranslateError("; ".join(fatal))
    return ast, warnings


def translate(
    question: str,
    schema: GraphSchema,
    context: ConversationContext | None = None,
    providers: list | None = None,
    template: PromptTemplate | None = None,
    hop_ceiling: int = 5,
) -> TranslationResult:
    """Run the provider chain until a candidate validates.

    Each provider gets one repair round: its failed candidate's error is
    appended to the prompt and it is asked once more before failover.
    """
    if providers is None:
        providers = [DeterministicStubProvider(hop_ceiling=hop_ceiling)]
    if not providers:
        raise TranslateError("provider chain is empty")

    prompt = build_prompt(question, schema, context, template)
    diagnostics: dict[str, str] = {}
    attempts = 0
    for provider in providers:
        request = TranslationRequest(question=question, prompt=prompt, context=context)
        repaired = False
        while True:
            attempts += 1
            try:
                text = provider.complete(request)
            except UntranslatableError as exc:
                diagnostics[provider.name] = str(exc)
                break
            except ProviderError as exc:
                diagnostics[provider.name] = str(exc)
                break
            try:
                ast, warnings = _validate(text, schema, hop_ceiling)
            except (CypherError, TranslateError) as exc:
                if repaired:
                    diagnostics[provider.name] = f"invalid after repair: {exc}"
                    break
                repaired = True
                request = TranslationRequest(
                    question=question,
                    prompt=(
                        f"{prompt}\n\nYour previous query was rejected: {exc}\n"
                        "Return a corrected query only."
                    ),
                    context=context,
                )
                continue
            if provider.kind == "deterministic_stub":
                source = "fallback"
            else:
                source = "repaired" if repaired else "llm"
            return TranslationResult(
                query=text, ast=ast, source=source, validation=warnings, attempts=attempts
            )
    raise UntranslatableError(question, diagnostics)
