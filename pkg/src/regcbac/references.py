"""Cross-reference detection, the provision reference graph, and resolution.

Recognized reference shapes:

* explicit citations ``§164.512(d)``, optionally introduced by a connective
  such as "as provided in", "as permitted by", "pursuant to";
* relative paragraphs ``paragraph (a)(2)(i) of this section`` and
  ``pursuant to paragraph (i)``;
* exceptions ``except as provided in <citation or paragraph>``.

Resolution replaces every reference in a provision's text. A reference is
inlined (the target's resolved text in square brackets) only when the target
is purely declarative, that is when its own text is non-empty and carries no
modal verb. Everything else becomes a placeholder token ``(R164_512_d)`` that
later compiles into a rule-reference condition. Exceptions become
``[except R...]`` markers and are consumed as exception edges when rules are
compiled.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .diagnostics import Diagnostic, dedupe
from .graphs import cyclic_components
from .errors import CyclicReference, DepthExceeded, UnresolvableRelativeReference
from .regmodel import CitationId, Provision, RegDocument, normalize_citation

EXPLICIT = "explicit-citation"
RELATIVE = "relative-paragraph"
EXCEPTION = "exception"

INLINE = "inline"
PLACEHOLDER = "placeholder"
EXCEPTION_MARK = "exception"

DEFAULT_MAX_DEPTH = 8

_CONNECTIVES = (
    r"except\s+as\s+provided\s+in",
    r"as\s+provided\s+in",
    r"as\s+permitted\s+by",
    r"as\s+required\s+by",
    r"pursuant\s+to",
    r"subject\s+to",
)
# Relative labels are homogeneous (a / 2 / ii / A) so that placeholder tokens
# such as (R164_512_d) can never be mistaken for a paragraph label.
_REL_LABEL = r"\((?:[a-z]+|[0-9]+|[A-Z]+)\)"
_REFERENCE_RE = re.compile(
    r"(?:(?P<conn>(?i:" + "|".join(_CONNECTIVES) + r"))\s+)?"
    r"(?:(?P<cite>§\s*\d+\.\d+(?:\s*\([A-Za-z0-9]+\))*)"
    r"|(?P<rel>(?i:paragraph)\s+(?P<labels>(?:" + _REL_LABEL + r")+)(?P<this>(?i:\s+of\s+this\s+section))?))"
)
_LABELS_RE = re.compile(r"\(([A-Za-z0-9]+)\)")
_CONDITIONING = ("provided", "pursuant to", "subject to", "as permitted by", "except as")
_MODAL_RE = re.compile(r"\b(?:may|must|shall)\b", re.IGNORECASE)


@dataclass(frozen=True)
class ReferenceMention:
    source: CitationId
    span: tuple[int, int]
    surface: str
    target: CitationId
    kind: str

    @property
    def is_conditioning(self) -> bool:
        lowered = " ".join(self.surface.lower().split())
        return lowered.startswith(_CONDITIONING)


@dataclass
class ReferenceGraph:
    nodes: set[CitationId] = field(default_factory=set)
    edges: list[tuple[CitationId, CitationId, str]] = field(default_factory=list)
    dangling: set[CitationId] = field(default_factory=set)
    mentions: dict[CitationId, list[ReferenceMention]] = field(default_factory=dict)
    diagnostics: list[Diagnostic] = field(default_factory=list)

    def successors(self, cid: CitationId, *, kinds: tuple[str, ...] | None = None) -> list[CitationId]:
        return [t for s, t, k in self.edges if s == cid and (kinds is None or k in kinds)]

    def reachable(self, start: CitationId) -> set[CitationId]:
        """Nodes reachable from ``start`` through one or more edges."""
        adjacency: dict[CitationId, list[CitationId]] = {}
        for s, t, _ in self.edges:
            adjacency.setdefault(s, []).append(t)
        seen: set[CitationId] = set()
        stack = list(adjacency.get(start, ()))
        while stack:
            n = stack.pop()
            if n in seen:
                continue
            seen.add(n)
            stack.extend(adjacency.get(n, ()))
        return seen

    def cycles(self) -> list[list[CitationId]]:
        """Strongly connected components that contain a cycle (non-exception edges)."""
        return cyclic_components(
            sorted(self.nodes), [(s, t) for s, t, k in self.edges if k != EXCEPTION]
        )


@dataclass(frozen=True)
class Substitution:
    span: tuple[int, int]
    mode: str
    target: CitationId


@dataclass(frozen=True)
class ResolvedProvision:
    id: CitationId
    text: str
    substitutions: tuple[Substitution, ...] = ()
    transitive_targets: frozenset[CitationId] = frozenset()


def _relative_target(source: CitationId, labels: list[str], this_section: bool,
                     doc: RegDocument | None, surface: str) -> CitationId:
    section = source.segments[:2]
    if this_section or source.depth <= 2:
        return CitationId(section + tuple(labels))
    if doc is None:
        return CitationId(source.segments[:-1] + tuple(labels))
    for k in range(source.depth - 1, 1, -1):
        candidate = CitationId(source.segments[:k] + tuple(labels))
        if candidate in doc:
            return candidate
    raise UnresolvableRelativeReference(
        f"{surface!r} in {source.display} matches no provision", citation=source.display
    )


def detect_references(provision: Provision, doc: RegDocument | None = None) -> list[ReferenceMention]:
    """Find every reference in ``provision.text``, left to right.

    With ``doc`` given, relative paragraphs are resolved against the provisions
    that actually exist (nearest enclosing level first) and an unmatched one
    raises :class:`UnresolvableRelativeReference`. Without it, relative labels
    are assumed to name a sibling.
    """
    return _detect(provision, doc, None)


def _detect(provision: Provision, doc: RegDocument | None,
            unresolved: list[Diagnostic] | None) -> list[ReferenceMention]:
    out: list[ReferenceMention] = []
    for m in _REFERENCE_RE.finditer(provision.text):
        conn = (m.group("conn") or "").lower()
        if m.group("cite"):
            target = normalize_citation(m.group("cite"))
            kind = EXPLICIT
        else:
            labels = _LABELS_RE.findall(m.group("labels"))
            try:
                target = _relative_target(provision.id, labels, bool(m.group("this")), doc, m.group(0))
            except UnresolvableRelativeReference as exc:
                if unresolved is None:
                    raise
                unresolved.append(Diagnostic.from_exception(exc))
                continue
            kind = RELATIVE
        if conn.startswith("except"):
            kind = EXCEPTION
        out.append(ReferenceMention(provision.id, m.span(), m.group(0), target, kind))
    return out


def build_graph(doc: RegDocument) -> ReferenceGraph:
    """One edge per detected mention; targets outside ``doc`` are marked dangling."""
    graph = ReferenceGraph(nodes=set(doc.index))
    for p in doc.walk():
        mentions = _detect(p, doc, graph.diagnostics)
        graph.mentions[p.id] = mentions
        for m in mentions:
            graph.edges.append((m.source, m.target, m.kind))
            graph.nodes.add(m.target)
            if m.target not in doc:
                graph.dangling.add(m.target)
    return graph


def _placeholder(target: CitationId) -> str:
    return f"({target.normalized})"


def resolve(doc: RegDocument, max_depth: int = DEFAULT_MAX_DEPTH, *, strict: bool = False,
            graph: ReferenceGraph | None = None) -> tuple[dict[CitationId, ResolvedProvision], list[Diagnostic]]:
    """Produce reference-free text for every provision of ``doc``.

    Cycles and depth overruns are reported as error diagnostics and the
    offending references fall back to placeholders, so the call always
    terminates. With ``strict=True`` the first such error is raised instead.
    """
    if max_depth < 1:
        raise ValueError("max_depth must be positive")
    graph = graph or build_graph(doc)
    diagnostics: list[Diagnostic] = list(graph.diagnostics)

    cyclic = graph.cycles()
    component_of: dict[CitationId, int] = {}
    for i, comp in enumerate(cyclic):
        for n in comp:
            component_of[n] = i
        diagnostics.append(Diagnostic("error", CyclicReference.code, comp[0].display,
                                      "cycle: " + ",".join(c.normalized for c in comp)))
        if strict:
            raise CyclicReference([c.normalized for c in comp])

    for target in sorted(graph.dangling):
        sources = sorted({s for s, t, _ in graph.edges if t == target})
        diagnostics.append(Diagnostic("warning", "DanglingTarget", sources[0].display,
                                      f"{target.normalized} is outside the ingested document"))

    memo: dict[tuple[CitationId, int], tuple[str, tuple[Substitution, ...]]] = {}

    def in_same_cycle(a: CitationId, b: CitationId) -> bool:
        return a in component_of and component_of.get(b) == component_of[a]

    def text_of(cid: CitationId, depth: int) -> tuple[str, tuple[Substitution, ...]]:
        key = (cid, depth)
        if key in memo:
            return memo[key]
        provision = doc.index[cid]
        pieces: list[str] = []
        subs: list[Substitution] = []
        cursor = 0
        for m in graph.mentions.get(cid, ()):
            pieces.append(provision.text[cursor:m.span[0]])
            cursor = m.span[1]
            if m.kind == EXCEPTION:
                pieces.append(f"[except {m.target.normalized}]")
                subs.append(Substitution(m.span, EXCEPTION_MARK, m.target))
                continue
            target = doc.index.get(m.target)
            inline = (
                target is not None
                and target.text != ""
                and not m.is_conditioning
                and not _MODAL_RE.search(target.text)
                and not in_same_cycle(cid, m.target)
            )
            if inline and depth + 1 > max_depth:
                diagnostics.append(Diagnostic("error", DepthExceeded.code, cid.display,
                                              f"inlining {m.target.normalized} exceeds depth {max_depth}"))
                if strict:
                    raise DepthExceeded(f"inlining {m.target.normalized} exceeds depth {max_depth}",
                                        citation=cid.display)
                inline = False
            if inline:
                pieces.append(f"[{text_of(m.target, depth + 1)[0]}]")
                subs.append(Substitution(m.span, INLINE, m.target))
            else:
                pieces.append(_placeholder(m.target))
                subs.append(Substitution(m.span, PLACEHOLDER, m.target))
        pieces.append(provision.text[cursor:])
        memo[key] = ("".join(pieces), tuple(subs))
        return memo[key]

    resolved: dict[CitationId, ResolvedProvision] = {}
    for p in doc.walk():
        text, subs = text_of(p.id, 0)
        resolved[p.id] = ResolvedProvision(p.id, text, subs, frozenset(graph.reachable(p.id)))
    return resolved, dedupe(diagnostics)
