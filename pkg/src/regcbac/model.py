"""CBAC domain types.

A rule reads, slot for slot::

    ALLOW <active role> TO PERFORM <operation> ON <data type>
    RELATED TO <data owner type> FOR <purpose>
    PROVIDED <condition> CARRY OUT <obligations>

Slots nobody extracted hold the wildcard ``any``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping

from .conditions import TRUE, ConditionExpr, Consent, RuleRef, is_bare_word, iter_atoms
from .regmodel import CitationId

ANY = "any"
BASE_OPERATIONS = ("read", "write", "delete")


class Effect(str, Enum):
    ALLOW = "allow"
    DENY = "deny"
    OBLIGE = "oblige"


class Modality(str, Enum):
    MAY = "may"
    MUST = "must"
    MUST_NOT = "mustNot"

    @property
    def effect(self) -> Effect:
        return {Modality.MAY: Effect.ALLOW, Modality.MUST: Effect.OBLIGE,
                Modality.MUST_NOT: Effect.DENY}[self]


@dataclass(frozen=True)
class TemporalConstraint:
    """``temporary``, ``until:<attribute>`` or ``during:<purpose>``."""

    kind: str
    arg: str | None = None
    note: str = field(default="", compare=False)

    def __post_init__(self) -> None:
        if self.kind == "temporary":
            if self.arg is not None:
                raise ValueError("temporary takes no argument")
        elif self.kind in ("until", "during"):
            if not self.arg or not is_bare_word(self.arg):
                raise ValueError(f"{self.kind} needs a name argument, got {self.arg!r}")
        else:
            raise ValueError(f"unknown temporal kind {self.kind!r}")

    def serialize(self) -> str:
        return self.kind if self.arg is None else f"{self.kind}:{self.arg}"

    @classmethod
    def parse(cls, text: str, note: str = "") -> "TemporalConstraint":
        kind, _, arg = text.partition(":")
        return cls(kind, arg or None, note)


@dataclass(frozen=True)
class Obligation:
    action: str
    params: Mapping[str, str] = field(default_factory=dict)
    temporal: TemporalConstraint | None = None

    def __post_init__(self) -> None:
        if not is_bare_word(self.action):
            raise ValueError(f"obligation action {self.action!r} is not a valid name")
        for key, value in self.params.items():
            if not is_bare_word(key) or "\n" in value:
                raise ValueError(f"bad obligation parameter {key!r}={value!r}")
        if "temporal" in self.params:
            raise ValueError("'temporal' is reserved; use the temporal field")
        object.__setattr__(self, "params", dict(self.params))

    def __hash__(self) -> int:
        return hash((self.action, tuple(sorted(self.params.items())), self.temporal))

    def record_params(self) -> dict[str, str]:
        """Parameters as logged, with the temporal constraint folded in."""
        out = dict(self.params)
        if self.temporal is not None:
            out["temporal"] = self.temporal.serialize()
        return dict(sorted(out.items()))


@dataclass(frozen=True)
class Role:
    canonical: str
    generalizations: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        gens = tuple(self.generalizations) or (self.canonical,)
        if gens[0] != self.canonical:
            raise ValueError("a role must head its own generalization list")
        object.__setattr__(self, "generalizations", gens)


@dataclass(frozen=True)
class AccessRule:
    id: str
    effect: Effect
    active_role: str = ANY
    operation: str = ANY
    data_type: str = ANY
    data_owner_type: str = ANY
    purpose: str = ANY
    condition: ConditionExpr = TRUE
    obligations: tuple[Obligation, ...] = ()
    exceptions: tuple[str, ...] = ()
    provenance: CitationId = field(default_factory=lambda: CitationId(("0",)))
    temporal: TemporalConstraint | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "effect", Effect(self.effect))
        object.__setattr__(self, "obligations", tuple(self.obligations))
        object.__setattr__(self, "exceptions", tuple(self.exceptions))
        for name in ("id",) + self.SLOTS:
            value = getattr(self, name)
            if not is_bare_word(value):
                raise ValueError(f"rule {self.id!r}: {name} {value!r} is not a valid name")
        if self.operation != self.operation.lower():
            raise ValueError(f"rule {self.id!r}: operation must be lowercase")
        if self.effect is Effect.OBLIGE and not self.obligations:
            raise ValueError(f"rule {self.id!r}: oblige rules need at least one obligation")
        if not all(is_bare_word(e) for e in self.exceptions):
            raise ValueError(f"rule {self.id!r}: invalid exception id in {self.exceptions!r}")
        for atom in iter_atoms(self.condition):
            if isinstance(atom, RuleRef):
                word = atom.rule_id
            elif isinstance(atom, Consent):
                word = atom.owner
            else:
                word = atom.name
            if not is_bare_word(word):
                raise ValueError(f"rule {self.id!r}: invalid name in condition atom {atom!r}")

    SLOTS = ("active_role", "operation", "data_type", "data_owner_type", "purpose")

    def slots(self) -> tuple[str, str, str, str, str]:
        return (self.active_role, self.operation, self.data_type, self.data_owner_type, self.purpose)
