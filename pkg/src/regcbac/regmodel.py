"""Provision trees for structured regulatory text.

A regulation is ingested from a line-oriented markup where every provision
starts with a citation marker::

    §164.528(a)(2)(i): If a health oversight agency ...
    §164.528(a)(2)(ii): pursuant to paragraph (i) the covered entity must ...

Nesting comes from the citation segments alone. Missing ancestors (the part,
the section, intermediate paragraphs) are synthesized with empty text unless
``strict=True`` is passed, in which case they raise :class:`OrphanProvision`.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from typing import Iterable, Iterator

from .errors import (
    DuplicateCitation,
    MalformedCitation,
    MalformedMarker,
    OrphanProvision,
    UnknownScopeId,
)

KINDS = ("part", "subpart", "section", "paragraph", "point")

_LABEL = r"[A-Za-z0-9]+"
_CITATION_RE = re.compile(
    r"^§\s*(?P<part>\d+)(?:\.(?P<section>\d+)(?P<labels>(?:\s*\(\s*" + _LABEL + r"\s*\))*))?\s*$"
)
_PAREN_LABEL_RE = re.compile(r"\(\s*(" + _LABEL + r")\s*\)")
_NORMALIZED_RE = re.compile(r"^R\d+(?:_" + _LABEL + r")*$")


@dataclass(frozen=True, order=True)
class CitationId:
    """Canonical identifier of one provision, e.g. ``R164_528_a_2_i``."""

    segments: tuple[str, ...]

    def __post_init__(self) -> None:
        segs = tuple(self.segments)
        object.__setattr__(self, "segments", segs)
        if not segs or not segs[0].isdigit():
            raise MalformedCitation(f"citation segments must start with a numeric part: {segs!r}")
        if len(segs) >= 2 and not segs[1].isdigit():
            raise MalformedCitation(f"section label must be numeric: {segs!r}")
        for s in segs:
            if not re.fullmatch(_LABEL, s):
                raise MalformedCitation(f"bad citation label {s!r}")

    @property
    def normalized(self) -> str:
        return "R" + "_".join(self.segments)

    @property
    def display(self) -> str:
        out = "§" + self.segments[0]
        if len(self.segments) > 1:
            out += "." + self.segments[1]
        return out + "".join(f"({s})" for s in self.segments[2:])

    @property
    def depth(self) -> int:
        return len(self.segments)

    @property
    def parent(self) -> CitationId | None:
        return CitationId(self.segments[:-1]) if len(self.segments) > 1 else None

    def child(self, label: str) -> CitationId:
        return CitationId(self.segments + (label,))

    def is_ancestor_of(self, other: CitationId) -> bool:
        n = len(self.segments)
        return len(other.segments) > n and other.segments[:n] == self.segments

    @classmethod
    def from_normalized(cls, text: str) -> CitationId:
        if not _NORMALIZED_RE.match(text):
            raise MalformedCitation(f"not a normalized citation: {text!r}")
        return cls(tuple(text[1:].split("_")))

    def __str__(self) -> str:
        return self.normalized


def normalize_citation(citation: str) -> CitationId:
    """Parse ``§<part>.<section>(label)...`` into a :class:`CitationId`.

    A bare part (``§164``) is also accepted so that whole parts can be named.
    """
    m = _CITATION_RE.match(citation.strip())
    if not m:
        raise MalformedCitation(f"malformed citation {citation!r}", citation=citation)
    segments = [m.group("part")]
    if m.group("section") is not None:
        segments.append(m.group("section"))
        segments.extend(_PAREN_LABEL_RE.findall(m.group("labels") or ""))
    return CitationId(tuple(segments))


def kind_for_depth(depth: int) -> str:
    if depth == 1:
        return "part"
    if depth == 2:
        return "section"
    if depth <= 4:
        return "paragraph"
    return "point"


@dataclass(frozen=True)
class Provision:
    id: CitationId
    kind: str
    text: str
    children: tuple[Provision, ...] = ()
    mentions: tuple = ()

    def walk(self) -> Iterator[Provision]:
        yield self
        for c in self.children:
            yield from c.walk()

    def subtree_text(self) -> str:
        return " ".join(p.text for p in self.walk() if p.text)


@dataclass(frozen=True)
class RegDocument:
    roots: tuple[Provision, ...] = ()
    index: dict[CitationId, Provision] = field(default=None, compare=False, repr=False)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        object.__setattr__(self, "roots", tuple(self.roots))
        index: dict[CitationId, Provision] = {}
        for p in self.walk():
            if p.id in index:
                raise DuplicateCitation(f"duplicate citation {p.id.display}", citation=p.id.display)
            index[p.id] = p
        object.__setattr__(self, "index", index)

    def walk(self) -> Iterator[Provision]:
        for r in self.roots:
            yield from r.walk()

    def __len__(self) -> int:
        return len(self.index)

    def __contains__(self, cid: object) -> bool:
        return cid in self.index

    def parent_of(self, cid: CitationId) -> Provision | None:
        parent = cid.parent
        return self.index.get(parent) if parent is not None else None


class _Node:
    __slots__ = ("id", "text", "explicit", "children")

    def __init__(self, cid: CitationId, text: str, explicit: bool) -> None:
        self.id = cid
        self.text = text
        self.explicit = explicit
        self.children: list[_Node] = []

    def freeze(self) -> Provision:
        return Provision(self.id, kind_for_depth(self.id.depth), self.text,
                         tuple(c.freeze() for c in self.children))


_MARKER_RE = re.compile(r"^(?P<cite>§[^:]*):(?P<body>.*)$")


def parse_document(text: str, *, strict: bool = False) -> RegDocument:
    """Parse the ingestion markup into a :class:`RegDocument`."""
    markers: list[tuple[int, CitationId, list[str]]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("§"):
            m = _MARKER_RE.match(line)
            if not m:
                raise MalformedMarker(f"line {lineno}: marker without ':'", citation=line.split()[0])
            try:
                cid = normalize_citation(m.group("cite"))
            except MalformedCitation as exc:
                raise MalformedMarker(f"line {lineno}: {exc}", citation=m.group("cite").strip()) from exc
            body = m.group("body").strip()
            markers.append((lineno, cid, [body] if body else []))
        else:
            if not markers:
                raise MalformedMarker(f"line {lineno}: text before the first provision marker")
            markers[-1][2].append(line)

    nodes: dict[CitationId, _Node] = {}
    roots: list[_Node] = []

    def ensure(cid: CitationId, lineno: int) -> _Node:
        node = nodes.get(cid)
        if node is not None:
            return node
        if strict:
            raise OrphanProvision(f"line {lineno}: no provision {cid.display} for child marker",
                                  citation=cid.display)
        return attach(_Node(cid, "", explicit=False), lineno)

    def attach(node: _Node, lineno: int) -> _Node:
        parent_id = node.id.parent
        if parent_id is None:
            roots.append(node)
        else:
            ensure(parent_id, lineno).children.append(node)
        nodes[node.id] = node
        return node

    for lineno, cid, body in markers:
        joined = " ".join(body)
        existing = nodes.get(cid)
        if existing is not None:
            if existing.explicit:
                raise DuplicateCitation(f"line {lineno}: duplicate marker {cid.display}", citation=cid.display)
            existing.text = joined
            existing.explicit = True
            continue
        attach(_Node(cid, joined, explicit=True), lineno)

    return RegDocument(tuple(r.freeze() for r in roots))


def render_document(doc: RegDocument) -> str:
    """Serialize a document back to the ingestion markup (inverse of parsing)."""
    return "".join(f"{p.id.display}: {p.text}".rstrip() + "\n" for p in doc.walk())


def lookup(doc: RegDocument, cid: CitationId) -> Provision | None:
    return doc.index.get(cid)


def scope_filter(doc: RegDocument, scope: Iterable[CitationId]) -> RegDocument:
    """Keep only the subtrees rooted at ``scope`` ids, in document order.

    Scope ids nested under another scope id are absorbed by the outer one.
    """
    wanted = list(dict.fromkeys(scope))
    for cid in wanted:
        if cid not in doc.index:
            raise UnknownScopeId(f"scope citation {cid.display} is not in the document",
                                 citation=cid.display)
    keep = {c for c in wanted if not any(o.is_ancestor_of(c) for o in wanted)}
    return RegDocument(tuple(p for p in doc.walk() if p.id in keep))


def with_mentions(doc: RegDocument, mentions: dict[CitationId, list]) -> RegDocument:
    """Return a copy of ``doc`` whose provisions carry their reference mentions."""

    def rebuild(p: Provision) -> Provision:
        return replace(p, children=tuple(rebuild(c) for c in p.children),
                       mentions=tuple(mentions.get(p.id, ())))

    return RegDocument(tuple(rebuild(r) for r in doc.roots))
