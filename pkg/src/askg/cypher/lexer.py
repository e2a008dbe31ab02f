"""Hand-rolled tokenizer with line/column tracking."""

from __future__ import annotations

from dataclasses import dataclass

from .errors import CypherSyntaxError

KEYWORDS = {
    "MATCH", "WHERE", "RETURN", "ORDER", "BY", "SKIP", "LIMIT",
    "AND", "OR", "NOT", "DISTINCT", "AS", "ASC", "DESC",
    "CONTAINS", "STARTS", "WITH", "TRUE", "FALSE", "NULL",
}

_PUNCT = {
    "(": "LPAREN",
    ")": "RPAREN",
    "[": "LBRACKET",
    "]": "RBRACKET",
    "{": "LBRACE",
    "}": "RBRACE",
    ":": "COLON",
    ",": "COMMA",
    ".": "DOT",
    "-": "DASH",
    "<": "LT",
    ">": "GT",
    "=": "EQ",
    "*": "STAR",
}

_TWO_CHAR = {
    "<=": "LE",
    ">=": "GE",
    "<>": "NE",
    "..": "DOTDOT",
}

_ESCAPES = {"n": "\n", "t": "\t", "\\": "\\", "'": "'", '"': '"'}


@dataclass(frozen=True)
class Token:
    kind: str  # IDENT | KEYWORD | INT | FLOAT | STRING | PARAM | punct kinds | EOF
    text: str
    value: object
    line: int
    column: int

    def keyword(self) -> str | None:
        return self.text.upper() if self.kind == "KEYWORD" else None


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    i, line, col = 0, 1, 1
    n = len(text)

    def err(msg: str):
        raise CypherSyntaxError(msg, line, col)

    while i < n:
        ch = text[i]
        if ch == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        start_line, start_col = line, col
        two = text[i : i + 2]
        if two in _TWO_CHAR:
            tokens.append(Token(_TWO_CHAR[two], two, None, start_line, start_col))
            i += 2
            col += 2
            continue
        if ch in _PUNCT:
            tokens.append(Token(_PUNCT[ch], ch, None, start_line, start_col))
            i += 1
            col += 1
            continue
        if ch in "'\"":
            quote = ch
            i += 1
            col += 1
            buf = []
            while i < n and text[i] != quote:
                c = text[i]
                if c == "\n":
                    err("unterminated string literal")
                if c == "\\":
                    if i + 1 >= n:
                        err("dangling escape in string literal")
                    esc = text[i + 1]
                    if esc not in _ESCAPES:
                        err(f"unknown escape \\{esc}")
                    buf.append(_ESCAPES[esc])
                    i += 2
                    col += 2
                    continue
                buf.append(c)
                i += 1
                col += 1
            if i >= n:
                err("unterminated string literal")
            i += 1
            col += 1
            tokens.append(Token("STRING", quote + "".join(buf) + quote, "".join(buf), start_line, start_col))
            continue
        if ch == "$":
            j = i + 1
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            if j == i + 1:
                err("parameter name expected after $")
            name = text[i + 1 : j]
            tokens.append(Token("PARAM", text[i:j], name, start_line, start_col))
            col += j - i
            i = j
            continue
        if ch.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            is_float = False
            if j < n - 1 and text[j] == "." and text[j + 1].isdigit():
                is_float = True
                j += 1
                while j < n and text[j].isdigit():
                    j += 1
            raw = text[i:j]
            value: object = float(raw) if is_float else int(raw)
            tokens.append(Token("FLOAT" if is_float else "INT", raw, value, start_line, start_col))
            col += j - i
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            word = text[i:j]
            kind = "KEYWORD" if word.upper() in KEYWORDS else "IDENT"
            tokens.append(Token(kind, word, word, start_line, start_col))
            col += j - i
            i = j
            continue
        err(f"unexpected character {ch!r}")

    tokens.append(Token("EOF", "", None, line, col))
    return tokens
