from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

SEVERITIES = ("error", "warning", "info")


@dataclass(frozen=True)
class Diagnostic:
    """One tab-separated diagnostic record: severity, code, citation, detail."""

    severity: str
    code: str
    citation: str = "-"
    detail: str = ""

    def __post_init__(self) -> None:
        if self.severity not in SEVERITIES:
            raise ValueError(f"unknown severity {self.severity!r}")

    def to_line(self) -> str:
        detail = self.detail.replace("\t", " ").replace("\n", " ")
        return f"{self.severity}\t{self.code}\t{self.citation}\t{detail}"

    @classmethod
    def from_line(cls, line: str) -> "Diagnostic":
        severity, code, citation, detail = line.rstrip("\n").split("\t", 3)
        return cls(severity, code, citation, detail)

    @classmethod
    def from_exception(cls, exc, severity: str = "error") -> "Diagnostic":
        return cls(severity, getattr(exc, "code", type(exc).__name__),
                   getattr(exc, "citation", "-"), str(exc))


def has_errors(diagnostics: Iterable[Diagnostic]) -> bool:
    return any(d.severity == "error" for d in diagnostics)


def format_diagnostics(diagnostics: Iterable[Diagnostic]) -> str:
    return "".join(d.to_line() + "\n" for d in diagnostics)


def dedupe(diagnostics: Iterable[Diagnostic]) -> list[Diagnostic]:
    return list(dict.fromkeys(diagnostics))
