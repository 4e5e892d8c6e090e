"""Compile element tables into CBAC rules, attach exceptions, validate policies."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field, replace
from typing import Iterable

from .conditions import And, ConditionExpr, Not, Or, conjoin, parse_condition, rule_refs
from .diagnostics import Diagnostic
from .errors import PolicySyntaxError
from .graphs import cyclic_components
from .lexicon import ElementCategory as C
from .lexicon import Lexicon
from .model import ANY, AccessRule, Effect, Modality, Obligation, TemporalConstraint
from .references import EXCEPTION, ReferenceGraph
from .regmodel import CitationId
from .tagger import ElementTable, TaggedElement


@dataclass
class _Draft:
    effect: Effect
    operation: str = ANY
    slots: dict[str, str] = field(default_factory=dict)
    obligations: list[Obligation] = field(default_factory=list)
    temporal: TemporalConstraint | None = None


def _first(elements: Iterable[TaggedElement], category: C) -> TaggedElement | None:
    return next((e for e in elements if e.category is category), None)


def _canon(e: TaggedElement | None) -> str:
    return ANY if e is None else e.canonical


def _temporal(e: TaggedElement | None) -> TemporalConstraint | None:
    return None if e is None else TemporalConstraint.parse(e.canonical, note=e.surface)


def compile_rules(table: ElementTable, lexicon: Lexicon, *, parent: ElementTable | None = None,
                  has_children: bool = False) -> tuple[list[AccessRule], list[Diagnostic]]:
    """Assign tagged elements to the seven CBAC slots.

    ``parent`` is the element table of the nearest enclosing provision that has
    an operator. A point without its own operator (the "(A)...; (B)...; and
    (C)..." layout) continues that stem sentence: it borrows the stem's
    operator, subject role and any slot it does not fill itself, and its
    condition is conjoined with the stem's. ``has_children`` marks a stem whose
    actions live in its points, so a missing action is not an error there.
    """
    cite = table.rule_id.display
    diags: list[Diagnostic] = []
    body = [e for e in table.elements if e.category is not C.RULE_ID]
    op_index = [i for i, e in enumerate(body) if e.category is C.OPERATOR]

    try:
        condition = parse_condition(table.condition_expr_text)
    except PolicySyntaxError as exc:
        return [], [Diagnostic("error", "BadCondition", cite, str(exc))]

    pools: list[list[TaggedElement]] = [body]
    if op_index:
        subject = _first(body[:op_index[0]], C.ROLE)
        bounds = op_index + [len(body)]
        segments = [(Modality(body[a].canonical), body[a + 1:b]) for a, b in zip(bounds, bounds[1:])]
    elif parent is not None and parent.of(C.OPERATOR):
        pbody = [e for e in parent.elements if e.category is not C.RULE_ID]
        p_op = next(i for i, e in enumerate(pbody) if e.category is C.OPERATOR)
        subject = _first(pbody[:p_op], C.ROLE)
        segment = list(body)
        if not any(e.category is C.ACTION for e in segment):
            segment += [e for e in pbody[p_op + 1:] if e.category is C.ACTION]
        segments = [(Modality(pbody[p_op].canonical), segment)]
        pools.append(pbody)
        condition = conjoin(parse_condition(parent.condition_expr_text), condition)
    else:
        if table.text.strip():
            diags.append(Diagnostic("warning", "NoOperator", cite, "no modal operator; provision skipped"))
        return [], diags

    owner_canonicals = lexicon.canonicals(C.DATA_OWNER_TYPE)

    def pick(segment: list[TaggedElement], category: C) -> TaggedElement | None:
        for pool in [segment] + pools:
            found = _first(pool, category)
            if found is not None:
                return found
        return None

    drafts: list[_Draft] = []
    for modality, segment in segments:
        owner = _first(segment, C.DATA_OWNER_TYPE)
        recipients = []
        for e in segment:
            if e.category is C.ROLE:
                if owner is None and e.canonical in owner_canonicals:
                    owner = e
                else:
                    recipients.append(e.canonical)
        if owner is None:
            owner = pick(segment, C.DATA_OWNER_TYPE)
        if recipients:
            diags.append(Diagnostic("info", "RecipientContext", cite, ",".join(recipients)))
        slots = {
            "active_role": _canon(subject),
            "data_type": _canon(pick(segment, C.DATA_TYPE)),
            "data_owner_type": _canon(owner),
            "purpose": _canon(pick(segment, C.PURPOSE)),
        }
        temporal = _temporal(pick(segment, C.TEMPORAL_FACTOR))
        actions = [e for e in segment if e.category is C.ACTION]
        extra = [Obligation(e.canonical) for e in segment if e.category is C.OBLIGATION]

        if modality is Modality.MUST:
            obligations = [Obligation(part, temporal=temporal)
                           for a in actions for part in a.canonical.split("+") if part]
            obligations += [replace(o, temporal=temporal) for o in extra]
            if not obligations:
                if has_children:
                    diags.append(Diagnostic("info", "StemOnly", cite, "obligations are stated in the points below"))
                else:
                    diags.append(Diagnostic("error", "UnmappedAction", cite, "'must' without an action to oblige"))
                continue
            drafts.append(_Draft(Effect.OBLIGE, ANY, slots, obligations))
            continue

        effect = modality.effect
        if not actions:
            if has_children:
                diags.append(Diagnostic("info", "StemOnly", cite, "actions are stated in the points below"))
                continue
            drafts.append(_Draft(effect, ANY, slots, list(extra), temporal))
            continue
        for a in actions:
            operation, *more = a.canonical.split("+")
            if not operation:
                diags.append(Diagnostic("error", "UnmappedAction", cite, f"action {a.canonical!r} has no operation"))
                continue
            obligations = [Obligation(m) for m in more if m] + extra
            drafts.append(_Draft(effect, operation.lower(), slots, obligations, temporal))

    base = table.rule_id.normalized
    rules = []
    for k, d in enumerate(drafts, start=1):
        rid = base if len(drafts) == 1 else f"{base}_{k}"
        rules.append(AccessRule(rid, d.effect, operation=d.operation, condition=condition,
                                obligations=tuple(d.obligations), provenance=table.rule_id,
                                temporal=d.temporal, **d.slots))
    return rules, diags


def attach_exceptions(rules: list[AccessRule], graph: ReferenceGraph) -> tuple[list[AccessRule], list[Diagnostic]]:
    """Fill each rule's exception list; nothing else about a rule changes.

    Two sources feed it. An exception mention ("except as provided in X")
    inside provision P makes every rule compiled from X an exception of the
    rules compiled from P. And a descendant provision whose allow/deny rule
    differs from an enclosing allow/deny rule in effect or condition (a
    point that narrows the paragraph granting the right) is attached to it.
    """
    diags: list[Diagnostic] = []
    by_prov: dict[CitationId, list[AccessRule]] = {}
    for r in rules:
        by_prov.setdefault(r.provenance, []).append(r)
    extra: dict[str, list[str]] = {r.id: [] for r in rules}

    for source, target, kind in graph.edges:
        if kind != EXCEPTION:
            continue
        excepting = by_prov.get(target)
        if not excepting:
            diags.append(Diagnostic("warning", "DanglingException", source.display,
                                    f"{target.normalized} produced no rule"))
            continue
        for r in by_prov.get(source, ()):
            extra[r.id].extend(x.id for x in excepting)

    permissive = (Effect.ALLOW, Effect.DENY)
    ordered = sorted(rules, key=lambda r: r.id)
    for a in ordered:
        if a.effect not in permissive:
            continue
        for b in ordered:
            if (b.effect in permissive and a.provenance.is_ancestor_of(b.provenance)
                    and (b.effect != a.effect or b.condition != a.condition)):
                extra[a.id].append(b.id)

    out = [replace(r, exceptions=tuple(dict.fromkeys(r.exceptions + tuple(extra[r.id]))))
           if extra[r.id] else r for r in rules]
    return out, diags


def _compound_nodes(expr: ConditionExpr):
    if isinstance(expr, (And, Or)):
        yield expr
        for c in expr.children:
            yield from _compound_nodes(c)
    elif isinstance(expr, Not):
        yield from _compound_nodes(expr.child)


def referenced_rules(rules: list[AccessRule]) -> dict[str, list[str]]:
    """Rule id -> ids of the rules its condition refers to (by id or provenance)."""
    targets: dict[str, list[str]] = {}
    for r in rules:
        targets.setdefault(r.id, []).append(r.id)
        if r.provenance.normalized != r.id:
            targets.setdefault(r.provenance.normalized, []).append(r.id)
    return {r.id: [t for ref in rule_refs(r.condition) for t in targets.get(ref, ())] for r in rules}


def validate_policy(rules: list[AccessRule]) -> list[Diagnostic]:
    diags: list[Diagnostic] = []
    counts = Counter(r.id for r in rules)
    for rid, n in sorted(counts.items()):
        if n > 1:
            diags.append(Diagnostic("error", "DuplicateRuleId", rid, f"rule id used {n} times"))

    known = set(counts) | {r.provenance.normalized for r in rules}
    for r in sorted(rules, key=lambda r: r.id):
        for ref in dict.fromkeys(rule_refs(r.condition)):
            if ref not in known:
                diags.append(Diagnostic("warning", "DanglingRuleRef", r.id, f"condition refers to unknown rule {ref}"))
        for e in r.exceptions:
            if e not in counts:
                diags.append(Diagnostic("error", "UnknownException", r.id, f"exception {e} is not a rule"))
        for node in _compound_nodes(r.condition):
            if len(set(node.children)) < len(node.children):
                diags.append(Diagnostic("warning", "RedundantCondition", r.id,
                                        f"repeated operand in {type(node).__name__}"))
        if r.effect is Effect.OBLIGE and not r.obligations:
            diags.append(Diagnostic("error", "EmptyObligation", r.id, "oblige rule without obligations"))

    refs = referenced_rules(rules)
    for cycle in cyclic_components(sorted(counts), [(a, b) for a, bs in refs.items() for b in bs]):
        diags.append(Diagnostic("error", "ConditionCycle", cycle[0], "cycle: " + ",".join(cycle)))
    return diags
