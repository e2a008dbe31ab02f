"""Grounded answer composition and leak detection.

``compose`` builds answer text exclusively from result cells using
fixed templates; every data value it inserts is recorded as a citation.
``verify`` independently re-extracts quoted strings and bare numbers
from the text and checks each against the result cells, so any content
that did not come from retrieved rows is reported as a violation. The
two functions form a closure: verify(compose(...)) always passes.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .cypher.executor import ResultSet

# Non-value vocabulary compose may use freely.
TEMPLATE_WORDS = frozenset(
    """
    no matching records found the result is there are query returned
    value values for top listed include includes and of a an
    """.split()
)

_AGGREGATE_COL = re.compile(r"^(count|sum|avg|min|max)\(")
_QUOTED = re.compile(r"'((?:[^'\\]|\\.)*)'")
_NUMBER = re.compile(r"(?<![\w'.-])-?\d+(?:\.\d+)?(?![\w'.])")
_DISPLAY_KEYS = ("event_id", "name", "icao", "registration", "canonical")


@dataclass
class GroundedAnswer:
    text: str
    provenance: list[int]
    citations: list[dict]  # {value, row, column}
    verified: bool
    violations: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "text": self.text,
            "provenance": list(self.provenance),
            "citations": list(self.citations),
            "verified": self.verified,
            "violations": list(self.violations),
        }


def canonical_number(value) -> str:
    """Numbers rendered without separators; integral floats as integers."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float) and value.is_integer():
        return str(int(value))
    return str(value)


def _cell_strings(cell) -> set[str]:
    """Every string a cell can justify, including values nested in maps."""
    if cell is None:
        return set()
    if isinstance(cell, dict):
        out: set[str] = set()
        for v in cell.values():
            if isinstance(v, dict):
                out |= _cell_strings(v)
            elif isinstance(v, list):
                for item in v:
                    out |= _cell_strings(item)
            else:
                out |= _cell_strings(v)
        return out
    if isinstance(cell, (int, float, bool)):
        return {canonical_number(cell)}
    return {str(cell)}


def _display_value(cell) -> str | None:
    """Representative scalar for a cell in a listing."""
    if cell is None:
        return None
    if isinstance(cell, dict):
        props = cell.get("properties", cell)
        for key in _DISPLAY_KEYS:
            if key in props and props[key] != "":
                return canonical_number(props[key]) if not isinstance(props[key], str) else props[key]
        for key in sorted(props):
            if isinstance(props[key], (str, int, float, bool)) and props[key] != "":
                value = props[key]
                return value if isinstance(value, str) else canonical_number(value)
        return None
    if isinstance(cell, (int, float, bool)):
        return canonical_number(cell)
    return str(cell)


def _quote(value: str) -> str:
    return "'" + value.replace("\\", "\\\\").replace("'", "\\'") + "'"


def compose(question: str, query: str, results: ResultSet, list_limit: int = 5) -> GroundedAnswer:
    """Deterministic template answer whose every value comes from the rows."""
    rows = results.rows
    if not rows:
        answer = GroundedAnswer(
            text="No matching records found.",
            provenance=[],
            citations=[],
            verified=False,
        )
        return _finalize(answer, results)

    citations: list[dict] = []
    aggregate_single = (
        len(rows) == 1
        and len(results.columns) == 1
        and _AGGREGATE_COL.match(results.columns[0]) is not None
    )
    if aggregate_single:
        cell = rows[0][0]
        rendered = canonical_number(cell) if isinstance(cell, (int, float, bool)) else str(cell)
        if results.columns[0].startswith("count("):
            text = f"There are {rendered} matching records."
        else:
            text = f"The result is {rendered}."
        citations.append({"value": rendered, "row": 0, "column": 0})
        provenance = sorted(set(results.provenance[0])) if results.provenance else []
        answer = GroundedAnswer(
            text=text, provenance=provenance, citations=citations, verified=False
        )
        return _finalize(answer, results)

    listed = min(len(rows), list_limit)
    parts: list[str] = []
    provenance: set[int] = set()
    for i in range(listed):
        value = _display_value(rows[i][0])
        if value is None:
            continue
        if _NUMBER.fullmatch(value):
            parts.append(value)
        else:
            parts.append(_quote(value))
        citations.append({"value": value, "row": i, "column": 0})
        provenance.update(results.provenance[i])
    lead = "Matching records include:" if len(rows) > listed else "Matching records:"
    text = f"{lead} {', '.join(parts)}." if parts else "Matching records found."
    answer = GroundedAnswer(
        text=text,
        provenance=sorted(provenance),
        citations=citations,
        verified=False,
    )
    return _finalize(answer, results)


def _finalize(answer: GroundedAnswer, results: ResultSet) -> GroundedAnswer:
    verdict = verify(answer, results)
    answer.verified = not verdict
    answer.violations = verdict
    return answer


def verify(answer: GroundedAnswer, results: ResultSet) -> list[str]:
    """Check every extracted value and provenance id against the results.

    Returns the list of violations; empty means the answer passes. The
    extraction is independent of how the answer was composed: quoted
    strings and bare numeric tokens in the text are the claimed values.
    """
    violations: list[str] = []
    cell_values: set[str] = set()
    for row in results.rows:
        for cell in row:
            cell_values |= _cell_strings(cell)

    text = answer.text
    claimed: list[str] = []
    without_quotes = _QUOTED.sub(" ", text)
    for m in _QUOTED.finditer(text):
        claimed.append(m.group(1).replace("\\'", "'").replace("\\\\", "\\"))
    claimed.extend(m.group(0) for m in _NUMBER.finditer(without_quotes))

    for value in claimed:
        if value in cell_values:
            continue
        if value.lower() in TEMPLATE_WORDS:
            continue
        violations.append(f"value {value!r} does not appear in the retrieved results")

    allowed_ids = set()
    for prov in results.provenance:
        allowed_ids.update(prov)
    for node_id in answer.provenance:
        if node_id not in allowed_ids:
            violations.append(f"provenance id {node_id} is not part of the result provenance")

    for citation in answer.citations:
        row, col = citation.get("row"), citation.get("column")
        if (
            not isinstance(row, int)
            or not isinstance(col, int)
            or row >= len(results.rows)
            or col >= len(results.columns)
        ):
            violations.append(f"citation {citation!r} points outside the result set")
            continue
        if str(citation.get("value")) not in _cell_strings(results.rows[row][col]):
            violations.append(
                f"citation value {citation.get('value')!r} not found in row {row} column {col}"
            )
    return violations
