from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import fixture_text
from oracles import bfs_reachable
from regcbac.errors import CyclicReference, DepthExceeded, UnresolvableRelativeReference
from regcbac.references import (
    EXCEPTION,
    EXPLICIT,
    INLINE,
    PLACEHOLDER,
    RELATIVE,
    build_graph,
    detect_references,
    resolve,
)
from regcbac.regmodel import CitationId, Provision, lookup, normalize_citation, parse_document

C = normalize_citation


def _prov(cite: str, text: str) -> Provision:
    cid = C(cite)
    return Provision(cid, "paragraph", text)


class TestDetect:
    def test_explicit_citation(self, corpus_text):
        doc = parse_document(corpus_text)
        mentions = detect_references(lookup(doc, C("§164.528(a)(2)(i)")), doc)
        assert [(m.kind, m.target.normalized) for m in mentions] == [(EXPLICIT, "R164_512_d")] * 2
        assert mentions[0].surface == "as provided in §164.512(d)"

    def test_relative_paragraph(self, corpus_text):
        doc = parse_document(corpus_text)
        mentions = detect_references(lookup(doc, C("§164.528(a)(2)(ii)")), doc)
        assert [(m.kind, m.target.normalized) for m in mentions] == [(RELATIVE, "R164_528_a_2_i")]
        assert mentions[0].surface == "pursuant to paragraph (i)"
        assert mentions[0].is_conditioning

    def test_no_references(self):
        assert detect_references(_prov("§164.502(a)", "A covered entity may disclose.")) == []

    def test_spans_point_at_surface(self):
        p = _prov("§164.502(a)", "See §164.512(d) and paragraph (b) of this section.")
        for m in detect_references(p):
            assert p.text[m.span[0]:m.span[1]] == m.surface
        assert [m.target.normalized for m in detect_references(p)] == ["R164_512_d", "R164_502_b"]

    def test_exception_kind(self):
        p = _prov("§164.502(a)", "A covered entity may not disclose, except as provided in §164.512(c).")
        (m,) = detect_references(p)
        assert m.kind == EXCEPTION and m.target == C("§164.512(c)")

    def test_relative_without_document_is_a_sibling(self):
        (m,) = detect_references(_prov("§164.528(a)(2)(ii)", "pursuant to paragraph (i)"))
        assert m.target == C("§164.528(a)(2)(i)")

    def test_multi_label_relative_of_this_section(self):
        (m,) = detect_references(_prov("§164.528(b)", "as described in paragraph (a)(2)(i) of this section"))
        assert m.target == C("§164.528(a)(2)(i)")

    def test_unresolvable_relative(self):
        doc = parse_document("§164.528(a)(2)(ii): pursuant to paragraph (z) the entity must act.\n")
        with pytest.raises(UnresolvableRelativeReference):
            detect_references(lookup(doc, C("§164.528(a)(2)(ii)")), doc)
        graph = build_graph(doc)
        assert graph.edges == []
        assert [d.code for d in graph.diagnostics] == ["UnresolvableRelativeReference"]

    def test_placeholder_tokens_are_not_references(self):
        p = _prov("§164.502(a)", "If (R164_512_d) or (R164_512_d) holds.")
        assert detect_references(p) == []

    def test_detection_is_deterministic(self, corpus_text):
        doc = parse_document(corpus_text)
        assert build_graph(doc).edges == build_graph(doc).edges


class TestGraph:
    def test_chain(self, corpus_text):
        graph = build_graph(parse_document(corpus_text))
        ii, i, d = C("§164.528(a)(2)(ii)"), C("§164.528(a)(2)(i)"), C("§164.512(d)")
        assert {(s, t) for s, t, _ in graph.edges} == {(ii, i), (i, d)}
        assert len(graph.edges) == 3  # (a)(2)(i) cites 512(d) twice
        assert d in graph.reachable(ii)

    def test_no_mentions(self):
        graph = build_graph(parse_document(fixture_text("part164.txt")))
        assert graph.edges == [] and len(graph.nodes) == 30

    def test_self_loop(self):
        graph = build_graph(parse_document(fixture_text("cycle_self.txt")))
        a = C("§164.901(a)")
        assert (a, a, RELATIVE) in graph.edges
        assert graph.cycles() == [[a]]

    def test_dangling_targets(self):
        doc = parse_document("§164.502(a): may disclose as provided in §164.999(z).\n")
        graph = build_graph(doc)
        assert graph.dangling == {C("§164.999(z)")}
        assert C("§164.999(z)") in graph.nodes

    def test_edge_endpoints_are_nodes(self, corpus_text):
        graph = build_graph(parse_document(corpus_text))
        assert all(s in graph.nodes and t in graph.nodes for s, t, _ in graph.edges)


class TestResolve:
    def test_chain_placeholders(self, corpus_text):
        doc = parse_document(corpus_text)
        resolved, diags = resolve(doc)
        ii = resolved[C("§164.528(a)(2)(ii)")]
        assert "(R164_528_a_2_i)" in ii.text and "pursuant to" not in ii.text
        assert C("§164.512(d)") in ii.transitive_targets
        assert [s.mode for s in ii.substitutions] == [PLACEHOLDER]
        i = resolved[C("§164.528(a)(2)(i)")]
        assert "(R164_512_d) or (R164_512_d)" in i.text
        assert not [d for d in diags if d.severity == "error"]

    def test_identity_without_mentions(self):
        doc = parse_document("§164.502(a): A covered entity may disclose.\n")
        resolved, _ = resolve(doc)
        assert resolved[C("§164.502(a)")].text == "A covered entity may disclose."
        assert resolved[C("§164.502(a)")].substitutions == ()

    def test_two_node_cycle(self):
        doc = parse_document(fixture_text("cycle_two.txt"))
        _, diags = resolve(doc)
        (d,) = [d for d in diags if d.code == "CyclicReference"]
        assert d.severity == "error" and d.detail == "cycle: R164_900_a,R164_900_b"
        with pytest.raises(CyclicReference) as err:
            resolve(doc, strict=True)
        assert err.value.cycle == ["R164_900_a", "R164_900_b"]

    def test_declarative_target_is_inlined(self):
        doc = parse_document(
            "§164.501(a): The term record means any item of information.\n"
            "§164.502(a): A covered entity must keep the record as defined in §164.501(a).\n")
        resolved, _ = resolve(doc)
        r = resolved[C("§164.502(a)")]
        assert r.text == ("A covered entity must keep the record as defined in "
                          "[The term record means any item of information.].")
        assert [s.mode for s in r.substitutions] == [INLINE]

    def test_conditioning_mention_is_a_placeholder_even_when_declarative(self):
        doc = parse_document(
            "§164.501(a): The term record means any item of information.\n"
            "§164.502(a): A covered entity may disclose subject to §164.501(a).\n")
        resolved, _ = resolve(doc)
        assert resolved[C("§164.502(a)")].text == "A covered entity may disclose (R164_501_a)."

    def test_exception_mark(self):
        doc = parse_document("§164.502(a): may not disclose, except as provided in §164.512(c).\n"
                             "§164.512(c): may disclose.\n")
        resolved, _ = resolve(doc)
        assert resolved[C("§164.502(a)")].text == "may not disclose, [except R164_512_c]."

    def test_dangling_target_warns_and_keeps_placeholder(self):
        doc = parse_document("§164.502(a): may disclose as provided in §164.999(z).\n")
        resolved, diags = resolve(doc)
        assert "(R164_999_z)" in resolved[C("§164.502(a)")].text
        assert [(d.severity, d.code) for d in diags] == [("warning", "DanglingTarget")]

    def _chain(self, n: int) -> str:
        lines = [f"§164.{500 + k}(a): text {k} see §164.{501 + k}(a)." for k in range(n)]
        return "\n".join(lines + [f"§164.{500 + n}(a): end of chain."])

    def test_depth_exceeded(self):
        doc = parse_document(self._chain(4))
        _, diags = resolve(doc, max_depth=2)
        assert "DepthExceeded" in {d.code for d in diags}
        with pytest.raises(DepthExceeded):
            resolve(doc, max_depth=2, strict=True)

    def test_acyclic_within_depth_has_no_depth_error(self):
        resolved, diags = resolve(parse_document(self._chain(4)), max_depth=4)
        assert not diags
        assert resolved[C("§164.500(a)")].text.count("[") == 4

    def test_max_depth_must_be_positive(self):
        with pytest.raises(ValueError):
            resolve(parse_document(""), max_depth=0)


# -- generated reference documents -------------------------------------------------

SECTIONS = [C(f"§164.{s}({p})") for s in (502, 506, 512) for p in "abc"]


@st.composite
def reference_documents(draw):
    lines = []
    for cid in SECTIONS:
        parts = [draw(st.sampled_from(["The entity may act.", "Declarative text.", "The entity must act."]))]
        for target in draw(st.lists(st.sampled_from(SECTIONS + [C("§164.999(z)")]), max_size=3)):
            connective = draw(st.sampled_from(["see", "as provided in", "pursuant to", "except as provided in"]))
            parts.append(f"{connective} {target.display}")
        lines.append(f"{cid.display}: " + " ".join(parts))
    return parse_document("\n".join(lines))


@settings(max_examples=150)
@given(reference_documents(), st.integers(1, 8))
def test_resolution_is_a_fixed_point_and_terminates(doc, depth):
    resolved, _ = resolve(doc, max_depth=depth)
    for r in resolved.values():
        leftover = detect_references(Provision(r.id, "paragraph", r.text))
        assert [m for m in leftover if m.kind in (EXPLICIT, RELATIVE)] == []


@settings(max_examples=150)
@given(reference_documents())
def test_transitive_targets_match_bfs_oracle(doc):
    graph = build_graph(doc)
    edges = [(s, t) for s, t, _ in graph.edges]
    resolved, _ = resolve(doc, graph=graph)
    for cid, r in resolved.items():
        assert r.transitive_targets == bfs_reachable(edges, cid)


@settings(max_examples=100)
@given(reference_documents())
def test_edges_equal_mentions(doc):
    graph = build_graph(doc)
    mentions = [(m.source, m.target, m.kind) for p in doc.walk() for m in detect_references(p, doc)]
    assert sorted(graph.edges) == sorted(mentions)


def test_cycle_members_are_reported_exactly():
    doc = parse_document(fixture_text("cycle_two.txt"))
    cycles = build_graph(doc).cycles()
    assert cycles == [[CitationId(("164", "900", "a")), CitationId(("164", "900", "b"))]]
