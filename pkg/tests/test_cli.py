"""The command-line surface: thin wrappers whose outputs equal library calls."""
from __future__ import annotations

import json
from importlib import resources

import pytest
from click.testing import CliRunner

from opprog import classify, default_lexicon, evaluate, parse_program
from opprog.cli import main


@pytest.fixture()
def runner():
    return CliRunner()


@pytest.fixture()
def sample_file(tmp_path):
    src = resources.files("opprog").joinpath("data").joinpath("sample_problems.jsonl")
    dest = tmp_path / "sample.jsonl"
    dest.write_text(src.read_text(encoding="utf-8"), encoding="utf-8")
    return str(dest)


def test_exec_fencing_matches_library(runner, registry, consts):
    text = "divide(10,20)|multiply(#0,const_2)|add(20,#1)"
    result = runner.invoke(main, ["--json", "exec", text])
    assert result.exit_code == 0, result.output
    payload = json.loads(result.output)
    trace = evaluate(parse_program(text), [], registry, consts)
    assert payload["steps"] == list(trace.step_values) == [0.5, 1.0, 21.0]
    assert payload["final"] == 21.0


def test_exec_human_output_contains_values(runner):
    result = runner.invoke(main, ["exec", "divide(10,20)|multiply(#0,const_2)|add(20,#1)"])
    assert result.exit_code == 0
    assert "0.5" in result.output and "21" in result.output


def test_exec_empty_is_usage_error(runner):
    result = runner.invoke(main, ["exec", ""])
    assert result.exit_code == 2
    assert "Usage" in result.output


def test_exec_with_problem_numbers(runner):
    result = runner.invoke(main, [
        "--json", "exec", "add(n0,n2)|multiply(n1,const_0.2778)|divide(#0,#1)|floor(#2)",
        "--problem",
        "how long does a train 110 m long running at the speed of 72 km / hr "
        "takes to cross a bridge 132 m length ?"])
    assert result.exit_code == 0
    assert json.loads(result.output)["final"] == 12.0


def test_exec_reads_stdin(runner):
    result = runner.invoke(main, ["--json", "exec", "-"], input="add(1,2)")
    assert result.exit_code == 0
    assert json.loads(result.output)["final"] == 3.0


def test_exec_domain_error_is_machine_readable(runner):
    result = runner.invoke(main, ["exec", "divide(n0,n1)", "--numbers", "1,0"])
    assert result.exit_code == 1
    payload = json.loads(result.output.strip().splitlines()[-1])
    assert payload["error"] == "DomainError"


def test_parse_canonicalizes(runner):
    result = runner.invoke(main, ["parse", "add(85, 89) add(174, 80)"])
    assert result.exit_code == 0
    assert result.output.strip() == "add(85,89)|add(174,80)"


def test_parse_syntax_error_usage(runner):
    result = runner.invoke(main, ["parse", "add(n0,"])
    assert result.exit_code == 2


def test_categorize_matches_library(runner):
    text = ("a cistern of capacity 8000 litres measures externally 3.3 m by "
            "2.6 m by 1.3 m and its walls are 5 cm thick .")
    result = runner.invoke(main, ["categorize", text])
    assert result.exit_code == 0
    assert result.output.strip() == classify(text, default_lexicon()).value == "physics"


def test_annotate_finds_gold(runner):
    result = runner.invoke(main, [
        "--json", "annotate",
        "--problem", "the marks are 85 , 89 , 80 and 95 over 4 exams",
        "--rationale", "85 + 89 = 174 . 174 + 80 = 254 . 254 + 95 = 349 . 349 / 4 = 87.25",
        "--answer", "87.25", "--max-steps", "4",
        "--ops", "add,subtract,multiply,divide"])
    assert result.exit_code == 0, result.output
    payload = json.loads(result.output)
    assert payload["status"] == "accepted"
    assert "add(n0,n1)|add(n2,#0)|add(n3,#1)|divide(#2,n4)" in payload["programs"]


def test_enumerate_single_solution(runner):
    result = runner.invoke(main, [
        "--json", "enumerate", "--numbers", "10,20", "--target", "30",
        "--max-len", "1", "--ops", "add,subtract,multiply,divide"])
    payload = json.loads(result.output)
    assert payload["programs"] == ["add(n0,n1)"]


def test_stats_table(runner, sample_file):
    result = runner.invoke(main, ["stats", sample_file])
    assert result.exit_code == 0
    assert "Category" in result.output and "All" in result.output
    result_json = runner.invoke(main, ["--json", "stats", sample_file])
    payload = json.loads(result_json.output)
    assert payload["total"]["count"] == 8


def test_validate_reports_and_fix(runner, sample_file, tmp_path):
    result = runner.invoke(main, ["--json", "validate", sample_file])
    payload = json.loads(result.output)
    assert payload["checked"] == 7 and payload["valid"] == 7
    out = tmp_path / "fixed.jsonl"
    result = runner.invoke(main, ["validate", sample_file, "--fix",
                                  "--output", str(out)])
    assert result.exit_code == 0
    assert out.exists()


def test_duplicates_clusters_fencing_pair(runner, sample_file):
    result = runner.invoke(main, ["--json", "duplicates", sample_file])
    payload = json.loads(result.output)
    assert ["fencing", "fencing_wide"] in payload["clusters"]


def test_expand_roundtrip(runner, tmp_path, sample_file):
    target = {
        "id": "fencing_new",
        "Problem": ("a rectangular field is to be fenced on three sides leaving "
                    "a side of 40 feet uncovered . if the area of the field is "
                    "100 sq . feet , how many feet of fencing will be required ?"),
        "Rationale": "",
        "options": ["a ) 45", "b ) 46", "c ) 47", "d ) 48", "e ) 49"],
        "correct": "a", "category": None, "program": None,
    }
    unannotated = tmp_path / "unannotated.jsonl"
    unannotated.write_text(json.dumps(target) + "\n")
    out = tmp_path / "expanded.jsonl"
    result = runner.invoke(main, [
        "--json", "expand", "--annotated", sample_file,
        "--unannotated", str(unannotated), "--output", str(out)])
    assert result.exit_code == 0, result.output
    payload = json.loads(result.output)
    assert payload["accepted"] == 1  # 100/40*2+40 = 45
    assert '"program": "divide(n1,n0)|multiply(#0,const_2)|add(n0,#1)"' in out.read_text()


def test_eval_empty_beams_and_gold_beams(runner, sample_file, tmp_path):
    result = runner.invoke(main, ["--json", "eval", "--dataset", sample_file,
                                  "--beams", "empty", "--seed", "7"])
    payload = json.loads(result.output)
    assert payload["fallback_random"] == 8
    # gold beams: every annotated record scores; the unannotated one is random
    records = [json.loads(line) for line in
               open(sample_file, encoding="utf-8")]
    beams = [{"id": r["id"], "programs": [r["program"]] if r["program"] else []}
             for r in records]
    beam_file = tmp_path / "beams.jsonl"
    beam_file.write_text("\n".join(json.dumps(b) for b in beams))
    result = runner.invoke(main, ["--json", "eval", "--dataset", sample_file,
                                  "--beams", str(beam_file)])
    payload = json.loads(result.output)
    assert payload["correct"] >= 7


def test_byte_identical_reruns(runner, sample_file):
    args = ["--json", "eval", "--dataset", sample_file, "--beams", "empty",
            "--seed", "3"]
    first = runner.invoke(main, args).output
    second = runner.invoke(main, args).output
    assert first == second


def test_serve_help_lists_config_surface(runner):
    result = runner.invoke(main, ["serve", "--help"])
    assert result.exit_code == 0
    for flag in ("--port", "--dataset", "--event-log", "--trust-threshold"):
        assert flag in result.output


def test_config_file_and_flag_precedence(runner, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"abs_tol": 5.0}))
    # file tolerance applies: 21.4 matches option 21 under abs_tol 5
    result = runner.invoke(main, [
        "--json", "--config", str(cfg), "enumerate", "--numbers", "20,1.4",
        "--target", "21", "--max-len", "1", "--ops", "add"])
    assert json.loads(result.output)["count"] == 1
    # flag overrides file: tight tolerance finds nothing
    result = runner.invoke(main, [
        "--json", "--config", str(cfg), "--abs-tol", "0.01", "enumerate",
        "--numbers", "20,1.4", "--target", "21", "--max-len", "1",
        "--ops", "add"])
    assert json.loads(result.output)["count"] == 0
