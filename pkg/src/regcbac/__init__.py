"""Regulatory text to context-based access control (CBAC) policies.

Stages: parse the provision tree, resolve cross-references, tag context
elements with a curated lexicon, compile CBAC rules, evaluate requests.
"""

from .audit import AuditLog, AuditRecord, record_obligations
from .compiler import attach_exceptions, compile_rules, validate_policy
from .conditions import parse_condition, print_condition
from .diagnostics import Diagnostic
from .dsl import parse_policy, print_policy
from .engine import AccessRequest, Decision, PolicyIndex, compile_policy, evaluate
from .errors import RegCbacError
from .lexicon import ElementCategory, Lexicon, disambiguate, generalize_role, load_lexicon
from .model import ANY, AccessRule, Effect, Modality, Obligation, TemporalConstraint
from .pipeline import run_pipeline
from .references import build_graph, detect_references, resolve
from .regmodel import CitationId, RegDocument, normalize_citation, parse_document, scope_filter
from .tagger import ElementTable, tag_provision

__all__ = [
    "ANY", "AccessRequest", "AccessRule", "AuditLog", "AuditRecord", "CitationId", "Decision",
    "Diagnostic", "Effect", "ElementCategory", "ElementTable", "Lexicon", "Modality", "Obligation",
    "PolicyIndex", "RegCbacError", "RegDocument", "TemporalConstraint", "attach_exceptions",
    "build_graph", "compile_policy", "compile_rules", "detect_references", "disambiguate",
    "evaluate", "generalize_role", "load_lexicon", "normalize_citation", "parse_condition",
    "parse_document", "parse_policy", "print_condition", "print_policy", "record_obligations",
    "resolve", "run_pipeline", "scope_filter", "tag_provision", "validate_policy",
]
