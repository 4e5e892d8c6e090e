"""The ``.cbac`` policy language: parser and canonical printer.

A rule block::

    RULE R164_528_a_2_i FROM §164.528(a)(2)(i)
    OBLIGE covered-entity
    TO PERFORM any
    ON any
    RELATED TO any
    FOR any
    PROVIDED (R164_512_d) OR (R164_512_d)
    CARRY OUT suspend-accounting-of-disclosures[temporal=temporary]

``EXCEPT a, b`` lists exception rule ids and ``TEMPORAL <kind>`` carries a
rule-level temporal constraint. Keywords are case-sensitive; ``--`` starts a
comment.
"""

from __future__ import annotations

from .conditions import TRUE, TokenStream, TrueExpr, parse_condition_tokens, print_condition, quote_value, tokenize
from .errors import PolicySyntaxError
from .model import AccessRule, Effect, Obligation, TemporalConstraint
from .regmodel import normalize_citation

_EFFECTS = {"ALLOW": Effect.ALLOW, "DENY": Effect.DENY, "OBLIGE": Effect.OBLIGE}


def _parse_obligation(ts: TokenStream) -> Obligation:
    action = ts.expect_word("obligation name")
    params: dict[str, str] = {}
    temporal = None
    if ts.at_op("["):
        ts.next()
        while True:
            key_tok = ts.peek()
            key = ts.expect_word("parameter name")
            ts.expect_op("=")
            value = ts.expect_value()
            if key in params or (key == "temporal" and temporal is not None):
                raise PolicySyntaxError(f"duplicate parameter {key!r}", key_tok.line, key_tok.column)
            if key == "temporal":
                temporal = _temporal(value, key_tok)
            else:
                params[key] = value
            if ts.at_op("]"):
                ts.next()
                break
            ts.expect_op(",")
    return Obligation(action, params, temporal)


def _temporal(value: str, tok) -> TemporalConstraint:
    try:
        return TemporalConstraint.parse(value)
    except ValueError as exc:
        raise PolicySyntaxError(str(exc), tok.line, tok.column) from None


def _word_list(ts: TokenStream, what: str) -> list[str]:
    items = [ts.expect_word(what)]
    while ts.at_op(","):
        ts.next()
        items.append(ts.expect_word(what))
    return items


def _parse_rule(ts: TokenStream) -> AccessRule:
    head = ts.expect_kw("RULE")
    rule_id = ts.expect_word("rule id")
    ts.expect_kw("FROM")
    if ts.peek().kind != "cite":
        raise ts.fail("citation")
    cite_tok = ts.next()
    provenance = normalize_citation(cite_tok.value)

    if not ts.at_kw(*_EFFECTS):
        raise ts.fail("'ALLOW', 'DENY' or 'OBLIGE'")
    effect = _EFFECTS[ts.next().value]
    role = ts.expect_word("role")
    ts.expect_kw("TO")
    ts.expect_kw("PERFORM")
    operation = ts.expect_word("operation")
    ts.expect_kw("ON")
    data_type = ts.expect_word("data type")
    ts.expect_kw("RELATED")
    ts.expect_kw("TO")
    owner = ts.expect_word("data owner type")
    ts.expect_kw("FOR")
    purpose = ts.expect_word("purpose")

    condition = TRUE
    if ts.at_kw("PROVIDED"):
        ts.next()
        condition = parse_condition_tokens(ts)
    obligations: list[Obligation] = []
    if ts.at_kw("CARRY"):
        ts.next()
        ts.expect_kw("OUT")
        obligations.append(_parse_obligation(ts))
        while ts.at_op(","):
            ts.next()
            obligations.append(_parse_obligation(ts))
    exceptions: list[str] = []
    if ts.at_kw("EXCEPT"):
        ts.next()
        exceptions = _word_list(ts, "rule id")
    temporal = None
    if ts.at_kw("TEMPORAL"):
        ts.next()
        tok = ts.peek()
        temporal = _temporal(ts.expect_word("temporal constraint"), tok)

    if not (ts.at_kw("RULE") or ts.peek().kind == "eof"):
        raise ts.fail("'RULE' or end of input")
    try:
        return AccessRule(rule_id, effect, role, operation, data_type, owner, purpose, condition,
                          tuple(obligations), tuple(exceptions), provenance, temporal)
    except ValueError as exc:
        raise PolicySyntaxError(str(exc), head.line, head.column) from None


def parse_policy(text: str) -> list[AccessRule]:
    """Parse every RULE block in ``text``, in file order."""
    ts = TokenStream(tokenize(text))
    rules: list[AccessRule] = []
    while ts.peek().kind != "eof":
        rules.append(_parse_rule(ts))
    return rules


def _format_obligation(o: Obligation) -> str:
    params = o.record_params()
    if not params:
        return o.action
    return o.action + "[" + ",".join(f"{k}={quote_value(v)}" for k, v in params.items()) + "]"


def format_rule(rule: AccessRule) -> str:
    lines = [
        f"RULE {rule.id} FROM {rule.provenance.display}",
        f"{rule.effect.name} {rule.active_role}",
        f"TO PERFORM {rule.operation}",
        f"ON {rule.data_type}",
        f"RELATED TO {rule.data_owner_type}",
        f"FOR {rule.purpose}",
    ]
    if not isinstance(rule.condition, TrueExpr):
        lines.append(f"PROVIDED {print_condition(rule.condition)}")
    if rule.obligations:
        lines.append("CARRY OUT " + ", ".join(_format_obligation(o) for o in rule.obligations))
    if rule.exceptions:
        lines.append("EXCEPT " + ", ".join(rule.exceptions))
    if rule.temporal is not None:
        lines.append(f"TEMPORAL {rule.temporal.serialize()}")
    return "\n".join(lines) + "\n"


def print_policy(rules: list[AccessRule]) -> str:
    """Canonical text: rules sorted by id, one clause per line, blank line between rules."""
    return "\n".join(sorted((format_rule(r) for r in rules), key=lambda t: (t.split(" ", 2)[1], t)))
