"""Curated phrase lexicon: categories, ambiguity sets, is-a hierarchy.

File format, one record per line, ``|``-separated::

    role|covered entity|covered-entity
    modal|must not|mustNot
    ambig|disclosure|action:disclose:|datatype:accounting-of-disclosures:accounting
    isa|health-oversight-agency|government-agency
    # comment

Recognized entry categories are ``role``, ``action``, ``purpose``,
``datatype``, ``ownertype``, ``temporal``, ``obligation`` and ``condition``.
A ``condition`` canonical is condition text such as ``CONSENT(patient)``; a
``temporal`` canonical is ``temporary``, ``until:<attr>`` or ``during:<purpose>``.
"""

from __future__ import annotations

import re
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable

from .conditions import is_bare_word, parse_condition
from .diagnostics import Diagnostic
from .errors import (
    CyclicRoleEdge,
    DuplicateEntry,
    MalformedLine,
    PolicySyntaxError,
    TermNotAmbiguous,
    UnknownRole,
)
from .model import Modality, TemporalConstraint


class ElementCategory(str, Enum):
    RULE_ID = "RuleId"
    ROLE = "Role"
    OPERATOR = "Operator"
    TEMPORAL_FACTOR = "TemporalFactor"
    ACTION = "Action"
    CONDITION = "Condition"
    PURPOSE = "Purpose"
    DATA_TYPE = "DataType"
    DATA_OWNER_TYPE = "DataOwnerType"
    OBLIGATION = "Obligation"

    @property
    def label(self) -> str:
        """Human-facing classification used in element reports."""
        return _LABELS[self]


_LABELS = {
    ElementCategory.RULE_ID: "Rule Id",
    ElementCategory.ROLE: "Role",
    ElementCategory.OPERATOR: "Operator",
    ElementCategory.TEMPORAL_FACTOR: "Temporal factor",
    ElementCategory.ACTION: "Action",
    ElementCategory.CONDITION: "Condition",
    ElementCategory.PURPOSE: "Purpose",
    ElementCategory.DATA_TYPE: "Data type",
    ElementCategory.DATA_OWNER_TYPE: "Data owner type",
    ElementCategory.OBLIGATION: "Obligation",
}

FILE_CATEGORIES = {
    "role": ElementCategory.ROLE,
    "action": ElementCategory.ACTION,
    "purpose": ElementCategory.PURPOSE,
    "datatype": ElementCategory.DATA_TYPE,
    "ownertype": ElementCategory.DATA_OWNER_TYPE,
    "temporal": ElementCategory.TEMPORAL_FACTOR,
    "obligation": ElementCategory.OBLIGATION,
    "condition": ElementCategory.CONDITION,
}

TOKEN_RE = re.compile(r"\(R\d+(?:_[A-Za-z0-9]+)*\)|\w+(?:['’\-]\w+)*|[^\w\s]")


def phrase_key(phrase: str) -> tuple[str, ...]:
    return tuple(t.lower() for t in TOKEN_RE.findall(phrase))


def _category(name: str) -> ElementCategory:
    key = name.strip().lower()
    if key in FILE_CATEGORIES:
        return FILE_CATEGORIES[key]
    for cat in ElementCategory:
        if cat.value.lower() == key:
            return cat
    raise ValueError(f"unknown category {name!r}")


@dataclass(frozen=True)
class LexEntry:
    phrase: str
    category: ElementCategory
    canonical: str


@dataclass(frozen=True)
class Candidate:
    category: ElementCategory
    canonical: str
    triggers: tuple[str, ...] = ()


def _check_canonical(category: ElementCategory, canonical: str, where: str) -> None:
    if category is ElementCategory.CONDITION:
        try:
            parse_condition(canonical)
        except PolicySyntaxError as exc:
            raise MalformedLine(f"{where}: bad condition {canonical!r}: {exc}") from exc
    elif category is ElementCategory.TEMPORAL_FACTOR:
        try:
            TemporalConstraint.parse(canonical)
        except ValueError as exc:
            raise MalformedLine(f"{where}: bad temporal canonical {canonical!r}") from exc
    elif not is_bare_word(canonical):
        raise MalformedLine(f"{where}: canonical {canonical!r} must be a single name")


@dataclass
class Lexicon:
    entries: list[LexEntry] = field(default_factory=list)
    ambiguities: dict[str, tuple[Candidate, ...]] = field(default_factory=dict)
    role_edges: list[tuple[str, str]] = field(default_factory=list)
    modal_map: dict[str, Modality] = field(default_factory=dict)

    def __post_init__(self) -> None:
        seen: set[tuple[tuple[str, ...], ElementCategory]] = set()
        for e in self.entries:
            key = phrase_key(e.phrase)
            if not key:
                raise MalformedLine(f"empty phrase for {e.category.value}")
            if (key, e.category) in seen:
                raise DuplicateEntry(f"duplicate {e.category.value} entry {e.phrase!r}")
            seen.add((key, e.category))
            _check_canonical(e.category, e.canonical, f"entry {e.phrase!r}")
        for term, candidates in self.ambiguities.items():
            if not phrase_key(term):
                raise MalformedLine("empty ambiguity term")
            if len(candidates) < 2:
                raise MalformedLine(f"ambiguity {term!r} needs at least two candidates")
            for c in candidates:
                _check_canonical(c.category, c.canonical, f"ambiguity {term!r}")
        for phrase in self.modal_map:
            if not phrase_key(phrase):
                raise MalformedLine("empty modal phrase")
        self._check_acyclic()
        self._build_index()

    def _check_acyclic(self) -> None:
        adjacency: dict[str, list[str]] = {}
        for a, b in self.role_edges:
            adjacency.setdefault(a, []).append(b)
        state: dict[str, int] = {}

        def visit(n: str, path: list[str]) -> None:
            state[n] = 1
            for m in adjacency.get(n, ()):
                if state.get(m) == 1:
                    cycle = path[path.index(m):] + [m] if m in path else [n, m]
                    raise CyclicRoleEdge("is-a cycle: " + " -> ".join(cycle))
                if m not in state:
                    visit(m, path + [m])
            state[n] = 2

        for n in list(adjacency):
            if n not in state:
                visit(n, [n])

    def _build_index(self) -> None:
        trie: dict = {}

        def insert(phrase: str, payload: tuple, override: bool) -> None:
            node = trie
            for tok in phrase_key(phrase):
                node = node.setdefault(tok, {})
            if override or "" not in node:
                node[""] = payload

        for e in self.entries:
            insert(e.phrase, ("entry", e.category, e.canonical), override=False)
        for phrase, modality in self.modal_map.items():
            insert(phrase, ("modal", ElementCategory.OPERATOR, modality.value), override=True)
        for term in self.ambiguities:
            insert(term, ("ambig", None, term), override=True)
        self._trie = trie
        self._parents: dict[str, list[str]] = {}
        for a, b in self.role_edges:
            self._parents.setdefault(a, []).append(b)

    def longest_match(self, tokens: list[str], start: int) -> tuple[int, tuple] | None:
        """Longest phrase starting at ``tokens[start]``: (length, payload)."""
        node = self._trie
        best = None
        for i in range(start, len(tokens)):
            node = node.get(tokens[i])
            if node is None:
                break
            if "" in node:
                best = (i - start + 1, node[""])
        return best

    def generalize(self, canonical: str) -> list[str]:
        """``canonical`` followed by its is-a ancestors in breadth-first order."""
        out = [canonical]
        seen = {canonical}
        queue = deque([canonical])
        while queue:
            for parent in self._parents.get(queue.popleft(), ()):
                if parent not in seen:
                    seen.add(parent)
                    out.append(parent)
                    queue.append(parent)
        return out

    @property
    def known_roles(self) -> set[str]:
        roles = {e.canonical for e in self.entries if e.category is ElementCategory.ROLE}
        for candidates in self.ambiguities.values():
            roles.update(c.canonical for c in candidates if c.category is ElementCategory.ROLE)
        for a, b in self.role_edges:
            roles.update((a, b))
        return roles

    def canonicals(self, category: ElementCategory) -> set[str]:
        return {e.canonical for e in self.entries if e.category is category}

    def extended(self, entries: Iterable[LexEntry]) -> "Lexicon":
        return Lexicon(self.entries + list(entries), dict(self.ambiguities),
                       list(self.role_edges), dict(self.modal_map))


def load_lexicon(text: str) -> Lexicon:
    entries: list[LexEntry] = []
    ambiguities: dict[str, tuple[Candidate, ...]] = {}
    edges: list[tuple[str, str]] = []
    modals: dict[str, Modality] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = [f.strip() for f in line.split("|")]
        kind = fields[0].lower()
        where = f"line {lineno}"
        try:
            if kind in FILE_CATEGORIES:
                if len(fields) != 3 or not fields[1] or not fields[2]:
                    raise MalformedLine(f"{where}: expected {kind}|<phrase>|<canonical>")
                entries.append(LexEntry(fields[1], FILE_CATEGORIES[kind], fields[2]))
            elif kind == "modal":
                if len(fields) != 3 or not fields[1]:
                    raise MalformedLine(f"{where}: expected modal|<phrase>|may|must|mustNot")
                modals[fields[1]] = Modality(fields[2])
            elif kind == "ambig":
                if len(fields) < 4 or not fields[1]:
                    raise MalformedLine(f"{where}: ambiguity needs a term and two or more candidates")
                if fields[1] in ambiguities:
                    raise DuplicateEntry(f"{where}: ambiguity {fields[1]!r} declared twice")
                ambiguities[fields[1]] = tuple(_parse_candidate(f, where) for f in fields[2:])
            elif kind == "isa":
                if len(fields) != 3 or not fields[1] or not fields[2]:
                    raise MalformedLine(f"{where}: expected isa|<specific>|<generic>")
                if fields[1] == fields[2]:
                    raise CyclicRoleEdge(f"{where}: {fields[1]!r} is-a itself")
                edges.append((fields[1], fields[2]))
            else:
                raise MalformedLine(f"{where}: unknown record type {fields[0]!r}")
        except ValueError as exc:
            if isinstance(exc, (MalformedLine, DuplicateEntry, CyclicRoleEdge)):
                raise
            raise MalformedLine(f"{where}: {exc}") from exc
    return Lexicon(entries, ambiguities, edges, modals)


def _parse_candidate(text: str, where: str) -> Candidate:
    head, sep, triggers = text.rpartition(":")
    category, sep2, canonical = head.partition(":")
    if not sep or not sep2 or not canonical:
        raise MalformedLine(f"{where}: candidate {text!r} is not <category>:<canonical>:<triggers>")
    trig = tuple(t.strip() for t in triggers.split(",") if t.strip())
    return Candidate(_category(category), canonical.strip(), trig)


def disambiguate(term: str, lexicon: Lexicon, context: set[str] | frozenset[str],
                 diagnostics: list[Diagnostic] | None = None,
                 citation: str = "-") -> tuple[ElementCategory, str]:
    """Choose one meaning of an ambiguous term from co-occurring canonicals.

    The candidate whose triggers overlap ``context`` the most wins, earlier
    candidates winning ties. With no overlap at all the first candidate is
    returned and an ``Ambiguity`` warning is appended to ``diagnostics``.
    """
    candidates = lexicon.ambiguities.get(term)
    if candidates is None:
        key = phrase_key(term)
        for t, cands in lexicon.ambiguities.items():
            if phrase_key(t) == key:
                candidates = cands
                break
    if candidates is None:
        raise TermNotAmbiguous(f"{term!r} is not an ambiguous lexicon term")
    best, best_score = candidates[0], 0
    for c in candidates:
        score = len(set(c.triggers) & set(context))
        if score > best_score:
            best, best_score = c, score
    if best_score == 0 and diagnostics is not None:
        diagnostics.append(Diagnostic("warning", "Ambiguity", citation,
                                      f"{term!r} defaulted to {best.category.value}:{best.canonical}"))
    return best.category, best.canonical


def generalize_role(role: str, lexicon: Lexicon) -> list[str]:
    if role not in lexicon.known_roles:
        raise UnknownRole(f"unknown role {role!r}")
    return lexicon.generalize(role)
