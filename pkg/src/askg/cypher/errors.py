class CypherError(Exception):
    pass


class CypherSyntaxError(CypherError):
    """Lex/parse/semantic failure with position and expectation info."""

    def __init__(self, message: str, line: int, column: int, expected: set[str] | None = None):
        self.line = line
        self.column = column
        self.expected = set(expected or ())
        suffix = ""
        if self.expected:
            suffix = f" (expected {', '.join(sorted(self.expected))})"
        super().__init__(f"line {line}:{column}: {message}{suffix}")


class ExecutionError(CypherError):
    pass


class PageError(CypherError):
    pass
