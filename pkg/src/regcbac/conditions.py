"""Condition expressions and the tokenizer shared with the policy language.

Grammar (AND binds tighter than OR, chains are n-ary)::

    cond := and ("OR" and)*
    and  := term ("AND" term)*
    term := "(" rule-id ")" | "NOT" term | "(" cond ")"
          | name ("=" | "!=") value | "CONSENT" "(" name ")"
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterator, Union

from .errors import PolicySyntaxError, UnknownKeyword

KEYWORDS = frozenset({
    "RULE", "FROM", "ALLOW", "DENY", "OBLIGE", "TO", "PERFORM", "ON", "RELATED",
    "FOR", "PROVIDED", "CARRY", "OUT", "EXCEPT", "TEMPORAL", "OR", "AND", "NOT",
    "CONSENT",
})

BARE_WORD = re.compile(r"[A-Za-z0-9_][A-Za-z0-9_.:/@+\-]*")
_KEYWORD_SHAPE = re.compile(r"[A-Z]{2,}")

_TOKEN_RE = re.compile(
    r"(?P<comment>--[^\n]*)"
    r"|(?P<ws>\s+)"
    r"|(?P<cite>§\s*\d+(?:\.\d+)?(?:[ \t]*\([A-Za-z0-9]+\))*)"
    r'|(?P<string>"(?:[^"\\\n]|\\.)*")'
    r"|(?P<op>!=|=|\(|\)|\[|\]|,)"
    r"|(?P<word>" + BARE_WORD.pattern + ")"
)


@dataclass(frozen=True)
class Token:
    kind: str  # kw, word, string, cite, op, eof
    value: str
    line: int
    column: int


def is_bare_word(text: str) -> bool:
    return bool(BARE_WORD.fullmatch(text)) and not _KEYWORD_SHAPE.fullmatch(text)


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise PolicySyntaxError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        value = m.group(0)
        column = pos - line_start + 1
        if kind == "word" and _KEYWORD_SHAPE.fullmatch(value):
            if value not in KEYWORDS:
                raise UnknownKeyword(f"unknown keyword {value!r}", line, column)
            kind = "kw"
        elif kind == "string":
            value = _unquote(value)
        if kind not in ("ws", "comment"):
            tokens.append(Token(kind, value, line, column))
        newlines = m.group(0).count("\n")
        if newlines:
            line += newlines
            line_start = pos + m.group(0).rindex("\n") + 1
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


def _unquote(s: str) -> str:
    return re.sub(r"\\(.)", r"\1", s[1:-1])


def quote_value(value: str) -> str:
    if is_bare_word(value):
        return value
    return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'


# -- expression tree ----------------------------------------------------------

@dataclass(frozen=True)
class TrueExpr:
    def __repr__(self) -> str:
        return "TRUE"


TRUE = TrueExpr()


@dataclass(frozen=True)
class RuleRef:
    rule_id: str


@dataclass(frozen=True)
class Attribute:
    name: str
    comparator: str
    value: str

    def __post_init__(self) -> None:
        if self.comparator not in ("=", "!="):
            raise ValueError(f"comparator must be '=' or '!=', got {self.comparator!r}")


@dataclass(frozen=True)
class Consent:
    owner: str


@dataclass(frozen=True)
class And:
    children: tuple["ConditionExpr", ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "children", tuple(self.children))
        if len(self.children) < 2:
            raise ValueError("And needs at least two children")


@dataclass(frozen=True)
class Or:
    children: tuple["ConditionExpr", ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "children", tuple(self.children))
        if len(self.children) < 2:
            raise ValueError("Or needs at least two children")


@dataclass(frozen=True)
class Not:
    child: "ConditionExpr"


ConditionExpr = Union[TrueExpr, RuleRef, Attribute, Consent, And, Or, Not]


def iter_atoms(expr: ConditionExpr) -> Iterator[ConditionExpr]:
    if isinstance(expr, (And, Or)):
        for c in expr.children:
            yield from iter_atoms(c)
    elif isinstance(expr, Not):
        yield from iter_atoms(expr.child)
    elif not isinstance(expr, TrueExpr):
        yield expr


def rule_refs(expr: ConditionExpr) -> list[str]:
    return [a.rule_id for a in iter_atoms(expr) if isinstance(a, RuleRef)]


def conjoin(*exprs: ConditionExpr) -> ConditionExpr:
    parts = [e for e in exprs if not isinstance(e, TrueExpr)]
    if not parts:
        return TRUE
    if len(parts) == 1:
        return parts[0]
    return And(tuple(parts))


# -- parsing ------------------------------------------------------------------

class TokenStream:
    def __init__(self, tokens: list[Token]) -> None:
        self.tokens = tokens
        self.pos = 0

    def peek(self, offset: int = 0) -> Token:
        return self.tokens[min(self.pos + offset, len(self.tokens) - 1)]

    def next(self) -> Token:
        tok = self.peek()
        self.pos += 1
        return tok

    def at_kw(self, *values: str) -> bool:
        tok = self.peek()
        return tok.kind == "kw" and tok.value in values

    def at_op(self, value: str) -> bool:
        tok = self.peek()
        return tok.kind == "op" and tok.value == value

    def fail(self, expected: str) -> PolicySyntaxError:
        tok = self.peek()
        found = "end of input" if tok.kind == "eof" else repr(tok.value)
        return PolicySyntaxError(f"expected {expected}, found {found}", tok.line, tok.column, expected)

    def expect_kw(self, value: str) -> Token:
        if not self.at_kw(value):
            raise self.fail(f"'{value}'")
        return self.next()

    def expect_op(self, value: str) -> Token:
        if not self.at_op(value):
            raise self.fail(f"'{value}'")
        return self.next()

    def expect_word(self, what: str = "name") -> str:
        tok = self.peek()
        if tok.kind != "word":
            raise self.fail(what)
        return self.next().value

    def expect_value(self) -> str:
        tok = self.peek()
        if tok.kind not in ("word", "string"):
            raise self.fail("value")
        return self.next().value


def parse_condition_tokens(ts: TokenStream) -> ConditionExpr:
    children = [_parse_and(ts)]
    while ts.at_kw("OR"):
        ts.next()
        children.append(_parse_and(ts))
    return children[0] if len(children) == 1 else Or(tuple(children))


def _parse_and(ts: TokenStream) -> ConditionExpr:
    children = [_parse_term(ts)]
    while ts.at_kw("AND"):
        ts.next()
        children.append(_parse_term(ts))
    return children[0] if len(children) == 1 else And(tuple(children))


def _parse_term(ts: TokenStream) -> ConditionExpr:
    if ts.at_kw("NOT"):
        ts.next()
        return Not(_parse_term(ts))
    if ts.at_kw("CONSENT"):
        ts.next()
        ts.expect_op("(")
        owner = ts.expect_word("owner name")
        ts.expect_op(")")
        return Consent(owner)
    if ts.at_op("("):
        ts.next()
        if ts.peek().kind == "word" and ts.peek(1).kind == "op" and ts.peek(1).value == ")":
            rule_id = ts.next().value
            ts.next()
            return RuleRef(rule_id)
        inner = parse_condition_tokens(ts)
        ts.expect_op(")")
        return inner
    if ts.peek().kind == "word":
        name = ts.next().value
        if ts.at_op("=") or ts.at_op("!="):
            comparator = ts.next().value
            return Attribute(name, comparator, ts.expect_value())
        raise ts.fail("'=' or '!='")
    raise ts.fail("condition term")


def parse_condition(text: str) -> ConditionExpr:
    """Parse a condition; empty text means the unconditional ``TRUE``."""
    ts = TokenStream(tokenize(text))
    if ts.peek().kind == "eof":
        return TRUE
    expr = parse_condition_tokens(ts)
    if ts.peek().kind != "eof":
        raise ts.fail("'AND', 'OR' or end of condition")
    return expr


# -- printing -----------------------------------------------------------------

def print_condition(expr: ConditionExpr) -> str:
    """Canonical text with the fewest parentheses that parse back to ``expr``."""
    if isinstance(expr, TrueExpr):
        return ""
    return _fmt(expr, None)


def _fmt(expr: ConditionExpr, context: str | None) -> str:
    if isinstance(expr, RuleRef):
        return f"({expr.rule_id})"
    if isinstance(expr, Attribute):
        return f"{expr.name} {expr.comparator} {quote_value(expr.value)}"
    if isinstance(expr, Consent):
        return f"CONSENT({expr.owner})"
    if isinstance(expr, Not):
        return "NOT " + _fmt(expr.child, "not")
    if isinstance(expr, Or):
        body = " OR ".join(_fmt(c, "or") for c in expr.children)
        return f"({body})" if context is not None else body
    if isinstance(expr, And):
        body = " AND ".join(_fmt(c, "and") for c in expr.children)
        return f"({body})" if context in ("and", "not") else body
    if isinstance(expr, TrueExpr):
        raise ValueError("TRUE can only appear as a whole condition")
    raise TypeError(f"not a condition: {expr!r}")
