"""Exception hierarchy shared by every stage of the toolchain."""

from __future__ import annotations


class RegCbacError(Exception):
    """Base class for all toolchain errors."""

    code = "Error"

    def __init__(self, message: str, *, citation: str = "-") -> None:
        super().__init__(message)
        self.citation = citation


# -- regulatory model ---------------------------------------------------------

class MalformedCitation(RegCbacError, ValueError):
    code = "MalformedCitation"


class MalformedMarker(RegCbacError, ValueError):
    code = "MalformedMarker"


class DuplicateCitation(RegCbacError, ValueError):
    code = "DuplicateCitation"


class OrphanProvision(RegCbacError, ValueError):
    code = "OrphanProvision"


class UnknownScopeId(RegCbacError, KeyError):
    code = "UnknownScopeId"

    def __str__(self) -> str:  # KeyError quotes its message otherwise
        return self.args[0]


# -- references ---------------------------------------------------------------

class UnresolvableRelativeReference(RegCbacError, ValueError):
    code = "UnresolvableRelativeReference"


class CyclicReference(RegCbacError):
    code = "CyclicReference"

    def __init__(self, cycle: list[str]) -> None:
        super().__init__("reference cycle: " + " -> ".join(cycle), citation=cycle[0])
        self.cycle = cycle


class DepthExceeded(RegCbacError):
    code = "DepthExceeded"


# -- lexicon ------------------------------------------------------------------

class LexiconError(RegCbacError, ValueError):
    code = "LexiconError"


class MalformedLine(LexiconError):
    code = "MalformedLine"


class DuplicateEntry(LexiconError):
    code = "DuplicateEntry"


class CyclicRoleEdge(LexiconError):
    code = "CyclicRoleEdge"


class TermNotAmbiguous(LexiconError, KeyError):
    code = "TermNotAmbiguous"

    def __str__(self) -> str:
        return self.args[0]


class UnknownRole(LexiconError, KeyError):
    code = "UnknownRole"

    def __str__(self) -> str:
        return self.args[0]


# -- policy language ----------------------------------------------------------

class PolicySyntaxError(RegCbacError, ValueError):
    """Raised by the condition and policy parsers; carries a 1-based position."""

    code = "SyntaxError"

    def __init__(self, message: str, line: int, column: int, expected: str | None = None) -> None:
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column
        self.expected = expected


class UnknownKeyword(PolicySyntaxError):
    code = "UnknownKeyword"


# -- decision engine ----------------------------------------------------------

class ValidationFailed(RegCbacError):
    code = "ValidationFailed"

    def __init__(self, diagnostics: list) -> None:
        errors = [d for d in diagnostics if d.severity == "error"]
        super().__init__(f"policy failed validation with {len(errors)} error(s)")
        self.diagnostics = diagnostics


class LogWriteFailure(RegCbacError, OSError):
    code = "LogWriteFailure"
