import json
import re

import pytest

from igrowth.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.mark.parametrize("argv", [
    ("compare", "corpus/divisors.ig", "--against", "tau", "-N", "30"),
    ("compare", "corpus/amb_quad.ig", "--against", "rational:z^4(1+3z)/((1-z)^3(1+z)^2)", "-N", "20"),
    ("compare", "corpus/intermediate.ig", "--against", "pow2_floor_sqrt", "-N", "25"),
    ("compare", "corpus:gm_partitions", "--against", "partitions", "-N", "15", "--start", "1"),
])
def test_compare_examples_equal(capsys, argv):
    code, out, _ = run(capsys, *argv)
    assert code == 0 and "EQUAL" in out


def test_compare_coefficient_list(capsys):
    assert run(capsys, "compare", "1,1,2,3,5", "--against", "coeffs:1,1,2,3,5")[0] == 0
    code, out, _ = run(capsys, "compare", "1,1,2,3,5", "--against", "coeffs:1,1,2,4,5")
    assert code == 4 and "DIFFER at n=3" in out


def test_compare_bad_spec_is_parse_error(capsys):
    code, _, err = run(capsys, "compare", "corpus:sqr", "--against", "rational:(1-z", "-N", "5")
    assert code == 2 and err


def test_missing_file_and_bad_grammar(capsys, tmp_path):
    assert run(capsys, "analyze", str(tmp_path / "nope.ig"))[0] == 2
    bad = tmp_path / "bad.ig"
    bad.write_text("start S\nvars S\nterminals a\nS -> a Q\n")
    code, _, err = run(capsys, "analyze", str(bad))
    assert code == 2 and "bad.ig" in err


def test_solver_error_exit_code(capsys, tmp_path):
    loop = tmp_path / "loop.ig"
    loop.write_text("start S\nvars S R\nterminals a\nS -> R\nR -> R | a\n")
    assert run(capsys, "analyze", str(loop), "--method", "dsv", "-N", "5")[0] == 3


def test_analyze_json_fields(capsys):
    code, out, _ = run(capsys, "analyze", "corpus:sqr", "-N", "8", "--json")
    assert code == 0
    rep = json.loads(out)
    assert {"name", "method", "order", "coeffs", "class", "flags", "verdict", "ms"} <= rep.keys()
    assert rep["coeffs"] == ["0", "1", "1", "0", "1", "0", "0", "0", "1"]
    assert rep["verdict"] == "EQUAL" and rep["class"] == "single_index"


def test_big_coefficients_survive_json(capsys):
    code, out, _ = run(capsys, "analyze", "corpus:double_ww", "-N", "130", "--method", "dsv", "--json")
    assert code == 0
    coeffs = [int(c) for c in json.loads(out)["coeffs"]]
    assert coeffs[130] == 2 ** 65 and coeffs[129] == 0


def test_analyze_text_report(capsys):
    code, out, _ = run(capsys, "analyze", "corpus:gm_partitions", "-N", "10", "--method", "both")
    assert code == 0 and "EQUAL" in out and "42" in out


def test_check_reports_class_and_ambiguity(capsys):
    code, out, _ = run(capsys, "check", "corpus:composites", "--max-len", "8", "--json")
    assert code == 0
    rep = json.loads(out)
    assert json.dumps(rep)
    code, out, _ = run(capsys, "check", "corpus:serial")
    assert code == 0 and "serial" in out


def test_corpus_list(capsys):
    code, out, _ = run(capsys, "corpus", "list")
    assert code == 0
    for name in ("sqr", "ordering", "cs_exercise", "bg_full"):
        assert name in out


def test_corpus_run_deterministic(capsys):
    names = ["sqr", "double_ww", "anbncn"]
    code, a, _ = run(capsys, "corpus", "run", *names)
    assert code == 0
    _, b, _ = run(capsys, "corpus", "run", *reversed(names))
    _, c, _ = run(capsys, "corpus", "run", "-j", "3", *names)
    def strip(text):
        return sorted(re.sub(r"\(\d+\.\d+ s\)", "", l) for l in text.splitlines())
    assert strip(a) == strip(b) == strip(c) and sum("PASS" in l for l in strip(a)) == 3


def test_corpus_run_unknown_entry(capsys):
    assert run(capsys, "corpus", "run", "nope")[0] == 2


def test_compare_against_file(capsys, tmp_path):
    ref = tmp_path / "ref.txt"
    ref.write_text("0 1 1 0 1 0 0 0 1\n")
    assert run(capsys, "compare", "corpus:sqr", "--against", f"file:{ref}", "-N", "8")[0] == 0
    assert run(capsys, "compare", "corpus:sqr", "--against", f"file:{tmp_path / 'gone'}")[0] == 2
