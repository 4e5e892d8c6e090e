"""Request evaluation: candidate matching, conditions, exceptions, combining."""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping

from .compiler import validate_policy
from .conditions import And, Attribute, ConditionExpr, Consent, Not, Or, RuleRef, TrueExpr
from .diagnostics import Diagnostic
from .errors import ValidationFailed
from .lexicon import Lexicon
from .model import ANY, AccessRule, Effect, Obligation


class Outcome(str, Enum):
    PERMIT = "permit"
    DENY = "deny"


class Disposition(str, Enum):
    MATCHED = "matched"
    EXCEPTED = "excepted"
    CONDITION_FAILED = "condition-failed"


REQUEST_KEYS = ("role", "operation", "datatype", "ownertype", "purpose", "attributes", "consents")


@dataclass(frozen=True)
class AccessRequest:
    active_role: str
    operation: str
    data_type: str = ANY
    data_owner_type: str = ANY
    purpose: str = ANY
    attributes: Mapping[str, str] = field(default_factory=dict)
    consents: frozenset[str] = frozenset()

    def __post_init__(self) -> None:
        for name in ("active_role", "operation", "data_type", "data_owner_type", "purpose"):
            value = getattr(self, name)
            if not value or re.search(r"[\s,]", value):
                raise ValueError(f"request {name} must be a single canonical name, got {value!r}")
        object.__setattr__(self, "attributes", dict(self.attributes))
        object.__setattr__(self, "consents", frozenset(self.consents))

    def slots(self) -> tuple[str, str, str, str, str]:
        return (self.active_role, self.operation, self.data_type, self.data_owner_type, self.purpose)

    def to_line(self) -> str:
        fields = dict(zip(REQUEST_KEYS, self.slots()))
        parts = [f"{k}={v}" for k, v in fields.items()]
        if self.attributes:
            parts.append("attributes=" + ",".join(f"{k}={v}" for k, v in sorted(self.attributes.items())))
        if self.consents:
            parts.append("consents=" + ",".join(sorted(self.consents)))
        return "\t".join(parts)

    @property
    def digest(self) -> str:
        return hashlib.sha256(self.to_line().encode("utf-8")).hexdigest()[:16]


def parse_request(line: str) -> AccessRequest:
    """One request from ``key=value`` fields separated by tabs or spaces."""
    fields: dict[str, str] = {}
    for part in line.split():
        key, sep, value = part.partition("=")
        if not sep or key not in REQUEST_KEYS:
            raise ValueError(f"bad request field {part!r}")
        if key in fields:
            raise ValueError(f"request field {key!r} given twice")
        fields[key] = value
    for key in ("role", "operation"):
        if key not in fields:
            raise ValueError(f"request is missing {key!r}")
    attributes: dict[str, str] = {}
    for pair in filter(None, fields.get("attributes", "").split(",")):
        name, sep, value = pair.partition("=")
        if not sep or not name:
            raise ValueError(f"bad attribute {pair!r}")
        attributes[name] = value
    consents = frozenset(filter(None, fields.get("consents", "").split(",")))
    return AccessRequest(fields["role"], fields["operation"], fields.get("datatype", ANY),
                         fields.get("ownertype", ANY), fields.get("purpose", ANY), attributes, consents)


def parse_requests(text: str) -> list[AccessRequest]:
    """Blank lines and ``#`` comment lines are skipped."""
    out = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        try:
            out.append(parse_request(line))
        except ValueError as exc:
            raise ValueError(f"line {lineno}: {exc}") from None
    return out


@dataclass(frozen=True)
class RuleOutcome:
    rule_id: str
    effect: Effect
    disposition: Disposition
    excepted_by: tuple[str, ...] = ()


@dataclass(frozen=True)
class Decision:
    outcome: Outcome
    matched: tuple[RuleOutcome, ...] = ()
    obligations: tuple[tuple[str, Obligation], ...] = ()
    default_applied: bool = False

    @property
    def permitted(self) -> bool:
        return self.outcome is Outcome.PERMIT

    def summary(self) -> str:
        trace = ",".join(f"{m.rule_id}:{m.disposition.value}" for m in self.matched) or "-"
        return f"{self.outcome.value}\t{trace}\tobligations={len(self.obligations)}"


class PolicyIndex:
    """Immutable after construction; safe to share between threads."""

    def __init__(self, rules: Iterable[AccessRule], lexicon: Lexicon | None = None,
                 diagnostics: Iterable[Diagnostic] = ()) -> None:
        self.rules: dict[str, AccessRule] = {r.id: r for r in rules}
        self.lexicon = lexicon
        self.diagnostics = tuple(diagnostics)
        self._by_ref: dict[str, list[AccessRule]] = {}
        for r in sorted(self.rules.values(), key=lambda r: r.id):
            self._by_ref.setdefault(r.id, []).append(r)
            if r.provenance.normalized != r.id:
                self._by_ref.setdefault(r.provenance.normalized, []).append(r)
        self._buckets: dict[tuple[str, str, str], list[AccessRule]] = {}
        for r in self.rules.values():
            self._buckets.setdefault((r.active_role, r.operation, r.data_type), []).append(r)

    def __len__(self) -> int:
        return len(self.rules)

    def closure(self, value: str) -> list[str]:
        """``value``, its is-a ancestors, then the wildcard."""
        up = self.lexicon.generalize(value) if self.lexicon is not None else [value]
        return up + ([ANY] if ANY not in up else [])

    def matches(self, rule: AccessRule, request: AccessRequest) -> bool:
        return all(slot in self.closure(value) for slot, value in zip(rule.slots(), request.slots()))

    def candidates(self, request: AccessRequest) -> list[AccessRule]:
        roles = self.closure(request.active_role)
        ops = self.closure(request.operation)
        dtypes = self.closure(request.data_type)
        owners = set(self.closure(request.data_owner_type))
        purposes = set(self.closure(request.purpose))
        found: dict[str, AccessRule] = {}
        for r in roles:
            for o in ops:
                for d in dtypes:
                    for rule in self._buckets.get((r, o, d), ()):
                        if rule.data_owner_type in owners and rule.purpose in purposes:
                            found[rule.id] = rule
        return [found[k] for k in sorted(found)]

    def holds(self, expr: ConditionExpr, request: AccessRequest, _depth: int = 0) -> bool:
        """Evaluate a condition. A rule reference holds when the condition of
        some rule with that id or provenance holds; an unknown reference does not."""
        if isinstance(expr, TrueExpr):
            return True
        if isinstance(expr, Attribute):
            actual = request.attributes.get(expr.name)
            return actual == expr.value if expr.comparator == "=" else actual != expr.value
        if isinstance(expr, Consent):
            return expr.owner in request.consents
        if isinstance(expr, Not):
            return not self.holds(expr.child, request, _depth)
        if isinstance(expr, And):
            return all(self.holds(c, request, _depth) for c in expr.children)
        if isinstance(expr, Or):
            return any(self.holds(c, request, _depth) for c in expr.children)
        if isinstance(expr, RuleRef):
            if _depth >= len(self.rules):
                return False
            return any(self.holds(r.condition, request, _depth + 1) for r in self._by_ref.get(expr.rule_id, ()))
        raise TypeError(f"not a condition: {expr!r}")


def compile_policy(rules: Iterable[AccessRule], lexicon: Lexicon | None = None) -> PolicyIndex:
    rules = list(rules)
    diagnostics = validate_policy(rules)
    errors = [d for d in diagnostics if d.severity == "error"]
    if errors:
        raise ValidationFailed(errors)
    return PolicyIndex(rules, lexicon, diagnostics)


def _excepted_by(rule: AccessRule, index: PolicyIndex, request: AccessRequest) -> tuple[str, ...]:
    """Exception rules that knock ``rule`` out for this request.

    An allow or oblige rule falls when a listed exception matches the request
    and either its condition fails or it is a deny. A deny rule falls when a
    listed allow exception matches and its condition holds.
    """
    hits = []
    for eid in rule.exceptions:
        exc = index.rules.get(eid)
        if exc is None or not index.matches(exc, request):
            continue
        satisfied = index.holds(exc.condition, request)
        if rule.effect is Effect.DENY:
            if exc.effect is Effect.ALLOW and satisfied:
                hits.append(eid)
        elif exc.effect is Effect.DENY or not satisfied:
            hits.append(eid)
    return tuple(hits)


def evaluate(index: PolicyIndex, request: AccessRequest) -> Decision:
    outcomes: list[RuleOutcome] = []
    surviving: list[AccessRule] = []
    for rule in index.candidates(request):
        if not index.holds(rule.condition, request):
            outcomes.append(RuleOutcome(rule.id, rule.effect, Disposition.CONDITION_FAILED))
            continue
        by = _excepted_by(rule, index, request)
        if by:
            outcomes.append(RuleOutcome(rule.id, rule.effect, Disposition.EXCEPTED, by))
            continue
        outcomes.append(RuleOutcome(rule.id, rule.effect, Disposition.MATCHED))
        surviving.append(rule)

    effects = {r.effect for r in surviving}
    if Effect.DENY in effects:
        return Decision(Outcome.DENY, tuple(outcomes))
    if Effect.ALLOW in effects:
        obligations = dict.fromkeys((r.id, o) for r in surviving for o in r.obligations
                                    if r.effect in (Effect.ALLOW, Effect.OBLIGE))
        return Decision(Outcome.PERMIT, tuple(outcomes), tuple(obligations))
    return Decision(Outcome.DENY, tuple(outcomes), default_applied=True)
