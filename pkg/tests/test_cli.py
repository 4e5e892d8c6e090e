from __future__ import annotations

import subprocess
import sys
from pathlib import Path

import pytest

from conftest import data_text, fixture_text
from regcbac.cli import RunManifest, main
from regcbac.pipeline import OUTPUT_FILES, run_pipeline
from regcbac.regmodel import normalize_citation

DATA = Path(__file__).resolve().parents[1] / "src" / "regcbac" / "data"
FIXTURES = Path(__file__).resolve().parent / "fixtures"
STAMP = "2024-01-02T03:04:05+00:00"


def _run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


class TestIngest:
    def test_valid_document(self, capsys, tmp_path):
        code, _, err = _run(capsys, "ingest", FIXTURES / "part164.txt", tmp_path / "doc.txt")
        assert code == 0 and err == ""
        assert (tmp_path / "doc.txt").read_text(encoding="utf-8").count("\n") == 30

    def test_duplicate_citation(self, capsys, tmp_path):
        code, _, err = _run(capsys, "ingest", FIXTURES / "duplicate.txt", tmp_path / "doc.txt")
        assert code == 2
        assert err.startswith("error\tDuplicateCitation\t§164.528(a)(2)(i)")
        assert not (tmp_path / "doc.txt").exists()

    def test_empty_file(self, capsys, tmp_path):
        (tmp_path / "empty.txt").write_text("", encoding="utf-8")
        code, _, _ = _run(capsys, "ingest", tmp_path / "empty.txt", tmp_path / "doc.txt")
        assert code == 0 and (tmp_path / "doc.txt").read_text(encoding="utf-8") == ""

    def test_missing_input(self, capsys, tmp_path):
        code, _, err = _run(capsys, "ingest", tmp_path / "nope.txt", tmp_path / "doc.txt")
        assert code == 2 and "\tIOError\t" in err


class TestPipeline:
    def test_corpus(self, capsys, tmp_path):
        code, _, err = _run(capsys, "pipeline", DATA / "hipaa_fixture.txt", "--out", tmp_path)
        assert code == 0
        assert sorted(p.name for p in tmp_path.iterdir()) == sorted(OUTPUT_FILES)
        elements = (tmp_path / "elements.tsv").read_text(encoding="utf-8")
        assert "(R164_512_d) OR (R164_512_d)\tCondition" in elements
        assert "RULE R164_528_a_2_i FROM §164.528(a)(2)(i)" in (tmp_path / "policy.cbac").read_text(encoding="utf-8")
        assert (tmp_path / "diagnostics.tsv").read_text(encoding="utf-8") == err

    def test_scope_outside_document(self, capsys, tmp_path):
        code, _, err = _run(capsys, "pipeline", DATA / "hipaa_fixture.txt", "--scope", "§164.999", "--out", tmp_path)
        assert code == 2 and "\tUnknownScopeId\t" in err
        assert not (tmp_path / "policy.cbac").exists()

    def test_cyclic_document(self, capsys, tmp_path):
        code, _, err = _run(capsys, "pipeline", FIXTURES / "cycle_two.txt", "--out", tmp_path)
        assert code == 2
        assert "error\tCyclicReference\t§164.900(a)\tcycle: R164_900_a,R164_900_b" in err
        assert not (tmp_path / "elements.tsv").exists()

    def test_bad_scope_citation(self, capsys, tmp_path):
        code, _, err = _run(capsys, "pipeline", DATA / "hipaa_fixture.txt", "--scope", "164", "--out", tmp_path)
        assert code == 2 and "MalformedCitation" in err

    def test_bad_depth(self, capsys, tmp_path):
        code, _, err = _run(capsys, "pipeline", DATA / "hipaa_fixture.txt", "--max-depth", "0", "--out", tmp_path)
        assert code == 2 and "\tBadArgument\t" in err

    def test_manifest_validation(self):
        with pytest.raises(ValueError):
            RunManifest((), "out")
        with pytest.raises(ValueError):
            RunManifest(("doc.txt",), "")
        assert RunManifest(("doc.txt",), "out").max_depth == 8

    def test_runs_are_byte_identical(self, capsys, tmp_path):
        for name in ("one", "two"):
            assert _run(capsys, "pipeline", DATA / "hipaa_fixture.txt", "--out", tmp_path / name)[0] == 0
        for f in OUTPUT_FILES:
            assert (tmp_path / "one" / f).read_bytes() == (tmp_path / "two" / f).read_bytes()

    def test_scoped_run_keeps_only_the_scope(self, seed_lexicon):
        result = run_pipeline(data_text("hipaa_fixture.txt"), seed_lexicon, scope=[normalize_citation("§164.512")])
        assert result.ok
        assert {r.provenance.segments[1] for r in result.rules} == {"512"}

    def test_stage_names(self, seed_lexicon):
        assert run_pipeline(fixture_text("cycle_two.txt"), seed_lexicon).stage == "resolve"
        assert run_pipeline(fixture_text("duplicate.txt"), seed_lexicon).stage == "ingest"
        assert run_pipeline("", seed_lexicon).stage == "done"


class TestEvaluate:
    def _write(self, tmp_path, name, text):
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return path

    def test_fixture_requests(self, capsys, tmp_path):
        audit = tmp_path / "audit.tsv"
        code, out, _ = _run(capsys, "evaluate", DATA / "hipaa_512c.cbac", DATA / "hipaa_512c.requests", audit,
                            "--fixed-clock", STAMP)
        assert code == 0
        assert out.splitlines() == [
            "deny\tR164_512_c_1:excepted,R164_512_c_1_ii:condition-failed\tobligations=0",
            "permit\tR164_512_c_1:matched,R164_512_c_1_ii:matched\tobligations=2",
        ]
        lines = audit.read_text(encoding="utf-8").splitlines()
        assert [line.split("\t")[0] for line in lines] == ["1", "2"]
        assert all(line.split("\t")[1] == STAMP for line in lines)

    def test_empty_requests(self, capsys, tmp_path):
        requests = self._write(tmp_path, "none.requests", "")
        code, out, _ = _run(capsys, "evaluate", DATA / "hipaa_512c.cbac", requests, tmp_path / "audit.tsv")
        assert code == 0 and out == ""

    def test_validation_failure(self, capsys, tmp_path):
        policy = self._write(tmp_path, "bad.cbac",
                             "RULE A FROM §1.2 ALLOW any TO PERFORM x ON any RELATED TO any FOR any PROVIDED (B)\n"
                             "RULE B FROM §1.3 ALLOW any TO PERFORM x ON any RELATED TO any FOR any PROVIDED (A)\n")
        code, out, err = _run(capsys, "evaluate", policy, DATA / "hipaa_512c.requests", tmp_path / "audit.tsv")
        assert code == 2 and out == "" and "\tConditionCycle\t" in err

    def test_syntax_error(self, capsys, tmp_path):
        policy = self._write(tmp_path, "bad.cbac", "RULE A FROM §1.2 ALLOW any ON any\n")
        code, _, err = _run(capsys, "evaluate", policy, DATA / "hipaa_512c.requests", tmp_path / "audit.tsv")
        assert code == 2 and "expected 'TO'" in err

    def test_bad_request_line(self, capsys, tmp_path):
        requests = self._write(tmp_path, "bad.requests", "role=a\n")
        code, _, err = _run(capsys, "evaluate", DATA / "hipaa_512c.cbac", requests, tmp_path / "audit.tsv")
        assert code == 2 and "\tBadRequest\t" in err and "line 1" in err

    def test_bad_clock_is_a_usage_error(self, capsys, tmp_path):
        with pytest.raises(SystemExit) as err:
            main(["evaluate", str(DATA / "hipaa_512c.cbac"), str(DATA / "hipaa_512c.requests"),
                  str(tmp_path / "audit.tsv"), "--fixed-clock", "bogus"])
        assert err.value.code == 2

    def test_audit_write_failure(self, capsys, tmp_path):
        code, _, err = _run(capsys, "evaluate", DATA / "hipaa_512c.cbac", DATA / "hipaa_512c.requests",
                            tmp_path / "no-dir" / "audit.tsv")
        assert code == 2 and "\tLogWriteFailure\t" in err


class TestAuditShow:
    def test_show(self, capsys, tmp_path):
        audit = tmp_path / "audit.tsv"
        _run(capsys, "evaluate", DATA / "hipaa_512c.cbac", DATA / "hipaa_512c.requests", audit, "--fixed-clock", STAMP)
        code, out, _ = _run(capsys, "audit", "show", audit)
        assert code == 0 and out == audit.read_text(encoding="utf-8")

    def test_missing_log(self, capsys, tmp_path):
        code, _, err = _run(capsys, "audit", "show", tmp_path / "none.tsv")
        assert code == 2 and "\tAuditReadFailure\t" in err


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "regcbac", "ingest", str(FIXTURES / "duplicate.txt"),
                           str(tmp_path / "out.txt")], capture_output=True, text=True, encoding="utf-8")
    assert proc.returncode == 2 and "DuplicateCitation" in proc.stderr
