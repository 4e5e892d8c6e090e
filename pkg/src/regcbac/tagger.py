"""Longest-match phrase tagging of resolved provision text."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

from .conditions import And, Or, parse_condition
from .diagnostics import Diagnostic
from .lexicon import TOKEN_RE, ElementCategory, Lexicon, disambiguate
from .references import ResolvedProvision
from .regmodel import CitationId

COVERAGE_WARNING = 0.30
REPORT_HEADER = "Element\tElement Classification"


@dataclass(frozen=True)
class TaggedElement:
    span: tuple[int, int] | None  # None only for the RuleId element
    surface: str
    category: ElementCategory
    canonical: str

    @property
    def report_text(self) -> str:
        if self.category in (ElementCategory.RULE_ID, ElementCategory.CONDITION):
            return self.canonical
        return self.surface


@dataclass(frozen=True)
class ElementTable:
    rule_id: CitationId
    elements: tuple[TaggedElement, ...]
    condition_expr_text: str = ""
    text: str = ""
    coverage: float = 0.0
    diagnostics: tuple[Diagnostic, ...] = field(default=(), compare=False)

    def of(self, category: ElementCategory) -> list[TaggedElement]:
        return [e for e in self.elements if e.category is category]

    def rows(self) -> list[tuple[str, str]]:
        return [(e.report_text, e.category.label) for e in self.elements]


def tag_provision(resolved: ResolvedProvision, lexicon: Lexicon) -> ElementTable:
    text = resolved.text
    citation = resolved.id.display
    toks = [(m.group(0), m.start(), m.end()) for m in TOKEN_RE.finditer(text)]
    lowered = [t[0].lower() for t in toks]

    matches: list[tuple[int, int, tuple]] = []  # (first token, last token, payload)
    i = 0
    while i < len(toks):
        if toks[i][0].startswith("(R"):
            matches.append((i, i, ("placeholder", ElementCategory.CONDITION, toks[i][0])))
            i += 1
            continue
        hit = lexicon.longest_match(lowered, i)
        if hit is None:
            i += 1
            continue
        length, payload = hit
        matches.append((i, i + length - 1, payload))
        i += length

    context = {p[2] for _, _, p in matches if p[0] == "entry"}
    diagnostics: list[Diagnostic] = []
    raw: list[TaggedElement] = []
    for first, last, (how, category, canonical) in matches:
        if how == "ambig":
            category, canonical = disambiguate(canonical, lexicon, context, diagnostics, citation)
        start, end = toks[first][1], toks[last][2]
        raw.append(TaggedElement((start, end), text[start:end], category, canonical))

    elements, groups = _group_conditions(raw, text)
    rule = TaggedElement(None, resolved.id.normalized, ElementCategory.RULE_ID, resolved.id.normalized)

    tagged_chars = sum(len("".join(e.surface.split())) for e in elements)
    total_chars = len("".join(text.split()))
    coverage = tagged_chars / total_chars if total_chars else 1.0
    if total_chars and coverage < COVERAGE_WARNING:
        diagnostics.append(Diagnostic("warning", "LowCoverage", citation,
                                      f"{coverage:.0%} of characters tagged"))
    return ElementTable(resolved.id, (rule, *elements), _join_groups(groups), text,
                        round(coverage, 6), tuple(diagnostics))


def _member_text(canonical: str) -> str:
    if canonical.startswith("(R"):
        return canonical
    expr = parse_condition(canonical)
    return f"({canonical})" if isinstance(expr, (And, Or)) else canonical


def _group_conditions(raw: list[TaggedElement], text: str) -> tuple[list[TaggedElement], list[tuple[str, bool]]]:
    """Merge runs of conditions joined only by or/and (and commas) into one element.

    Returns the merged element list and, per condition group, its expression
    text plus whether it contains a top-level OR.
    """
    out: list[TaggedElement] = []
    groups: list[tuple[str, bool]] = []
    run: list[TaggedElement] = []
    connectives: list[str] = []

    def flush() -> None:
        if not run:
            return
        parts = [_member_text(run[0].canonical)]
        for conn, member in zip(connectives, run[1:]):
            parts.append(conn)
            parts.append(_member_text(member.canonical))
        expr = " ".join(parts)
        start, end = run[0].span[0], run[-1].span[1]
        out.append(TaggedElement((start, end), text[start:end], ElementCategory.CONDITION, expr))
        groups.append((expr, "OR" in connectives))
        run.clear()
        connectives.clear()

    for e in raw:
        if e.category is ElementCategory.CONDITION:
            if run:
                gap = text[run[-1].span[1]:e.span[0]].replace(",", " ").split()
                if len(gap) <= 1 and (not gap or gap[0].lower() in ("or", "and")):
                    connectives.append(gap[0].upper() if gap else "AND")
                    run.append(e)
                    continue
                flush()
            run.append(e)
        else:
            flush()
            out.append(e)
    flush()
    return out, groups


def _join_groups(groups: list[tuple[str, bool]]) -> str:
    if len(groups) == 1:
        return groups[0][0]
    return " AND ".join(f"({expr})" if has_or else expr for expr, has_or in groups)


def format_elements_report(tables: Iterable[ElementTable]) -> str:
    """Two-column report, one block per provision, blocks separated by a blank line."""
    blocks = ["\n".join(f"{element}\t{label}" for element, label in t.rows()) for t in tables]
    return REPORT_HEADER + "\n" + "\n\n".join(blocks) + ("\n" if blocks else "")


def parse_elements_report(text: str) -> dict[str, list[tuple[str, str]]]:
    """Read a report back into rule id -> rows."""
    lines = text.splitlines()
    if not lines or lines[0] != REPORT_HEADER:
        raise ValueError("not an elements report")
    out: dict[str, list[tuple[str, str]]] = {}
    current: list[tuple[str, str]] | None = None
    for line in lines[1:]:
        if not line:
            current = None
            continue
        element, label = line.split("\t")
        if current is None:
            current = out.setdefault(element, [])
        current.append((element, label))
    return out
