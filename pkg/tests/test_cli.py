"""CLI surface: exit codes, problem files, reports, determinism."""

import json

from hhokit.cli import main


def run(argv, capsys):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_examples_list(capsys):
    code, out, _ = run(["examples", "list"], capsys)
    assert code == 0
    assert len(out.strip().splitlines()) >= 5
    assert "kdv" in out


def test_examples_show(capsys):
    code, out, _ = run(["examples", "show", "n4-second-order"], capsys)
    assert code == 0
    data = json.loads(out)
    assert data["operators"]["C"]["T"] == {"1,2,3": "1"}
    assert data["operators"]["C"]["g0"] == {"3,4": "1"}


def test_examples_run_all(capsys):
    code, out, _ = run(["examples", "run", "--all"], capsys)
    assert code == 0
    assert "FAIL" not in out


def test_check_compat_kdv_operator(capsys):
    code, out, _ = run(["check-compat", "--example", "kdv", "--operator", "A2"], capsys)
    assert code == 0
    assert "[pass]" in out


def test_find_bivectors_kdv(capsys):
    code, out, _ = run(["find-bivectors", "--example", "kdv",
                        "--order", "3", "--degree", "1"], capsys)
    assert code == 0
    assert "dimension 2" in out
    assert "p1_x3" in out


def test_classify_oriented_assoc(capsys):
    code, out, _ = run(["classify", "--example", "oriented-assoc"], capsys)
    assert code == 1  # haantjes-zero fails: the system is not diagonalizable
    assert "[pass] linear-degeneracy" in out
    assert "[FAIL] haantjes-zero" in out


def test_math_failure_exits_one(capsys):
    code, out, _ = run(["check-compat", "--example", "hydro2-fail",
                        "--operator", "A"], capsys)
    assert code == 1
    assert "[FAIL]" in out


def test_input_errors_exit_two(tmp_path, capsys):
    code, _, err = run(["check-op", "--example", "no-such-example"], capsys)
    assert code == 2 and "input error" in err
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    code, _, err = run(["check-op", "--file", str(bad)], capsys)
    assert code == 2
    missing = tmp_path / "missing.json"
    code, _, err = run(["check-op", "--file", str(missing)], capsys)
    assert code == 2
    parse_err = tmp_path / "parse.json"
    parse_err.write_text(json.dumps({
        "n": 1, "system": {"type": "fluxes", "f": ["u1_x + $"]}}))
    code, _, err = run(["check-op", "--file", str(parse_err)], capsys)
    assert code == 2 and "column" in err


def test_degenerate_metric_exits_two(tmp_path, capsys):
    problem = {
        "n": 2,
        "system": {"type": "conservative", "V": ["u1", "u2"]},
        "operators": {"C": {"order": 2, "T": {}, "g0": {}}},
    }
    path = tmp_path / "degenerate.json"
    path.write_text(json.dumps(problem))
    code, _, err = run(["check-compat", "--file", str(path), "--operator", "C"], capsys)
    assert code == 2
    assert "det g" in err or "degenerate" in err.lower()


def test_problem_file_roundtrip(tmp_path, capsys):
    problem = {
        "n": 1,
        "system": {"type": "fluxes", "f": ["u1_x3 + u1*u1_x"]},
        "operators": {"A": {"bivector": ["p1_x"]}},
    }
    path = tmp_path / "kdv.json"
    path.write_text(json.dumps(problem))
    code, out, _ = run(["check-compat", "--file", str(path), "--operator", "A"], capsys)
    assert code == 0


def test_json_report_deterministic_and_parseable(tmp_path, capsys):
    out1 = tmp_path / "r1.json"
    out2 = tmp_path / "r2.json"
    run(["find-bivectors", "--example", "kdv", "--order", "3", "--degree", "1",
         "--json", str(out1)], capsys)
    run(["find-bivectors", "--example", "kdv", "--order", "3", "--degree", "1",
         "--json", str(out2)], capsys)
    assert out1.read_bytes() == out2.read_bytes()
    payload = json.loads(out1.read_text())
    assert payload["schema"] == 1
    assert payload["input_hash"]
    # every emitted basis expression parses back to the same normal form
    from hhokit.grammar import format_diffpoly, parse
    for fam in payload["families"]:
        for member in fam["basis"]:
            for expr in member:
                assert format_diffpoly(parse(expr)) == expr


def test_task_block_supplies_defaults(capsys):
    # the n4 example carries a task block: no flags needed
    code, out, _ = run(["find-fluxes", "--example", "n4-second-order",
                        "--no-classify"], capsys)
    assert code == 0
    assert "dimension 10" in out


def test_variables_naming_length_checked(tmp_path, capsys):
    problem = {"n": 2, "variables": ["a"],
               "system": {"type": "fluxes", "f": ["u1_x", "u2_x"]}}
    path = tmp_path / "names.json"
    path.write_text(json.dumps(problem))
    code, _, err = run(["classify", "--file", str(path)], capsys)
    assert code == 2


def test_reduce_nonzero_residual(tmp_path, capsys):
    problem = {
        "n": 1,
        "system": {"type": "fluxes", "f": ["u1_x3 + u1*u1_x"]},
        "operators": {"A": {"bivector": ["u1*p1_x"]}},
    }
    path = tmp_path / "reduce.json"
    path.write_text(json.dumps(problem))
    code, out, _ = run(["reduce", "--file", str(path), "--operator", "A"], capsys)
    assert code == 1
    assert "residual A" in out


def test_symmetries_and_r_in_problem_files(tmp_path, capsys):
    problem = {
        "n": 2,
        "system": {"type": "hydrodynamic", "V": [["u1", "u2"], ["u2", "u1"]]},
        "symmetries": [["u1_x + u2_x", "u1_x + u2_x"]],
        "operators": {
            "B": {"bivector": ["p1_x + (u1_x + u2_x)*r1",
                               "p2_x + (u1_x + u2_x)*r1"]},
        },
    }
    path = tmp_path / "nonlocal.json"
    path.write_text(json.dumps(problem))
    code, out, _ = run(["check-compat", "--file", str(path), "--operator", "B"], capsys)
    assert code == 0
    assert "[pass]" in out
