"""``regcbac`` command line.

Exit status is 0 when a command ran without error diagnostics, 2 otherwise.
Diagnostics go to standard error, one ``severity<TAB>code<TAB>citation<TAB>detail``
line each.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .audit import AuditLog, fixed_clock, read_records, record_obligations
from .diagnostics import Diagnostic, format_diagnostics
from .dsl import parse_policy
from .engine import compile_policy, evaluate, parse_requests
from .errors import RegCbacError, ValidationFailed
from .lexicon import load_lexicon
from .pipeline import run_pipeline
from .references import DEFAULT_MAX_DEPTH
from .regmodel import normalize_citation, parse_document, render_document

EXIT_OK = 0
EXIT_ERROR = 2


def _emit(diagnostics) -> None:
    sys.stderr.write(format_diagnostics(diagnostics))


def _fail(code: str, detail: str, citation: str = "-") -> int:
    _emit([Diagnostic("error", code, citation, detail)])
    return EXIT_ERROR


def _read(path: str) -> str:
    return Path(path).read_text(encoding="utf-8")


def _iso_stamp(text: str) -> str:
    try:
        fixed_clock(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an ISO-8601 timestamp: {text!r}") from None
    return text


def _load_lexicon(path: str | None):
    if path is None:
        text = resources.files("regcbac").joinpath("data/seed.lexicon").read_text(encoding="utf-8")
    else:
        text = _read(path)
    return load_lexicon(text)


@dataclass(frozen=True)
class RunManifest:
    """Everything one pipeline run depends on."""

    input_paths: tuple[str, ...]
    out_dir: str
    scope: tuple[str, ...] = ()
    lexicon_path: str | None = None
    max_depth: int = DEFAULT_MAX_DEPTH

    def __post_init__(self) -> None:
        if not self.input_paths or not all(self.input_paths):
            raise ValueError("at least one input document is required")
        if not self.out_dir:
            raise ValueError("an output directory is required")
        if self.max_depth < 1:
            raise ValueError("--max-depth must be positive")

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> "RunManifest":
        return cls(tuple(args.docs), args.out, tuple(args.scope), args.lexicon, args.max_depth)


def cmd_ingest(args: argparse.Namespace) -> int:
    try:
        doc = parse_document(_read(args.doc))
    except RegCbacError as exc:
        _emit([Diagnostic.from_exception(exc)])
        return EXIT_ERROR
    Path(args.out).write_text(render_document(doc), encoding="utf-8", newline="\n")
    return EXIT_OK


def cmd_pipeline(args: argparse.Namespace) -> int:
    try:
        manifest = RunManifest.from_args(args)
    except ValueError as exc:
        return _fail("BadArgument", str(exc))
    try:
        scope = [normalize_citation(s) for s in manifest.scope]
        lexicon = _load_lexicon(manifest.lexicon_path)
    except RegCbacError as exc:
        _emit([Diagnostic.from_exception(exc)])
        return EXIT_ERROR
    text = "\n".join(_read(p) for p in manifest.input_paths)
    result = run_pipeline(text, lexicon, scope=scope, max_depth=manifest.max_depth)
    result.write(manifest.out_dir)
    _emit(result.diagnostics)
    return EXIT_OK if result.ok else EXIT_ERROR


def cmd_evaluate(args: argparse.Namespace) -> int:
    try:
        lexicon = _load_lexicon(args.lexicon)
        rules = parse_policy(_read(args.policy))
        index = compile_policy(rules, lexicon)
        requests = parse_requests(_read(args.requests))
    except ValidationFailed as exc:
        _emit(exc.diagnostics)
        return EXIT_ERROR
    except RegCbacError as exc:
        _emit([Diagnostic.from_exception(exc)])
        return EXIT_ERROR
    except ValueError as exc:
        return _fail("BadRequest", str(exc))
    _emit(index.diagnostics)

    clock = fixed_clock(args.fixed_clock) if args.fixed_clock else None
    try:
        log = AuditLog(args.audit, clock)
        for request in requests:
            decision = evaluate(index, request)
            print(decision.summary())
            record_obligations(decision, request, log)
    except RegCbacError as exc:
        _emit([Diagnostic.from_exception(exc)])
        return EXIT_ERROR
    return EXIT_OK


def cmd_audit_show(args: argparse.Namespace) -> int:
    try:
        records = read_records(args.path)
    except (OSError, ValueError) as exc:
        return _fail("AuditReadFailure", str(exc))
    for r in records:
        print(r.to_line())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="regcbac", description="Regulatory text to CBAC policy toolchain")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse a document and write its canonical form")
    p.add_argument("doc")
    p.add_argument("out")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("pipeline", help="scope, resolve, tag, compile")
    p.add_argument("docs", nargs="+", metavar="DOC")
    p.add_argument("--scope", action="append", default=[], help="citation to keep (repeatable)")
    p.add_argument("--lexicon", help="lexicon file (default: bundled seed lexicon)")
    p.add_argument("--max-depth", type=int, default=DEFAULT_MAX_DEPTH)
    p.add_argument("--out", required=True, help="run directory")
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("evaluate", help="decide requests against a policy and audit obligations")
    p.add_argument("policy")
    p.add_argument("requests")
    p.add_argument("audit")
    p.add_argument("--lexicon", help="lexicon supplying is-a hierarchies (default: bundled seed lexicon)")
    p.add_argument("--fixed-clock", metavar="ISO8601", type=_iso_stamp, help="freeze audit timestamps")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("audit", help="audit log tools")
    audit_sub = p.add_subparsers(dest="audit_command", required=True)
    show = audit_sub.add_parser("show", help="print the records of an audit log")
    show.add_argument("path")
    show.set_defaults(func=cmd_audit_show)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except OSError as exc:
        return _fail("IOError", str(exc))


if __name__ == "__main__":
    raise SystemExit(main())
