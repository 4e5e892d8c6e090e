"""Two-activity pipeline: scope and resolve, then extract and compile."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .compiler import attach_exceptions, compile_rules, validate_policy
from .diagnostics import Diagnostic, format_diagnostics, has_errors
from .dsl import print_policy
from .errors import RegCbacError
from .lexicon import ElementCategory, Lexicon
from .model import AccessRule
from .references import DEFAULT_MAX_DEPTH, ResolvedProvision, build_graph, resolve
from .regmodel import CitationId, RegDocument, parse_document, scope_filter
from .tagger import ElementTable, format_elements_report, tag_provision

OUTPUT_FILES = ("resolved.txt", "elements.tsv", "policy.cbac", "diagnostics.tsv")


@dataclass
class PipelineResult:
    stage: str = "done"  # last stage reached; the failing one when not ok
    document: RegDocument | None = None
    resolved: dict[CitationId, ResolvedProvision] = field(default_factory=dict)
    tables: list[ElementTable] = field(default_factory=list)
    rules: list[AccessRule] = field(default_factory=list)
    diagnostics: list[Diagnostic] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not has_errors(self.diagnostics)

    def outputs(self) -> dict[str, str]:
        """File name -> content for every stage that completed."""
        out: dict[str, str] = {}
        if self.resolved:
            out["resolved.txt"] = "".join(f"{r.id.display}: {r.text}".rstrip() + "\n"
                                          for r in self.resolved.values() if r.text.strip())
        if self.tables:
            out["elements.tsv"] = format_elements_report(self.tables)
        if self.stage == "done":
            out["policy.cbac"] = print_policy(self.rules)
        out["diagnostics.tsv"] = format_diagnostics(self.diagnostics)
        return out

    def write(self, out_dir: str | Path) -> None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        for name, content in self.outputs().items():
            with open(out_dir / name, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(content)


def _operator_parent(doc: RegDocument, cid: CitationId, tables: dict[CitationId, ElementTable]) -> ElementTable | None:
    p = cid.parent
    while p is not None:
        t = tables.get(p)
        if t is not None and t.of(ElementCategory.OPERATOR):
            return t
        p = p.parent
    return None


def run_pipeline(text: str, lexicon: Lexicon, *, scope: list[CitationId] | None = None,
                 max_depth: int = DEFAULT_MAX_DEPTH) -> PipelineResult:
    """Run every stage in order; the first stage reporting an error stops the run."""
    result = PipelineResult()

    result.stage = "ingest"
    try:
        doc = parse_document(text)
        if scope:
            doc = scope_filter(doc, scope)
    except RegCbacError as exc:
        result.diagnostics.append(Diagnostic.from_exception(exc))
        return result
    result.document = doc

    result.stage = "resolve"
    graph = build_graph(doc)
    result.resolved, diags = resolve(doc, max_depth, graph=graph)
    result.diagnostics += diags
    if not result.ok:
        return result

    result.stage = "extract"
    tables: dict[CitationId, ElementTable] = {}
    for p in doc.walk():
        if not p.text.strip():
            continue
        table = tag_provision(result.resolved[p.id], lexicon)
        tables[p.id] = table
        result.tables.append(table)
        result.diagnostics += table.diagnostics

    result.stage = "compile"
    rules: list[AccessRule] = []
    for cid, table in tables.items():
        compiled, diags = compile_rules(table, lexicon, parent=_operator_parent(doc, cid, tables),
                                        has_children=bool(doc.index[cid].children))
        rules += compiled
        result.diagnostics += diags
    rules, diags = attach_exceptions(rules, graph)
    result.diagnostics += diags
    result.rules = rules
    if not result.ok:
        return result

    result.stage = "validate"
    result.diagnostics += validate_policy(rules)
    if not result.ok:
        return result
    result.stage = "done"
    return result
