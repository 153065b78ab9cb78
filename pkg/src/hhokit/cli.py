"""Command-line frontend.

Problems are single JSON documents; expressions inside them use the engine
grammar.  Subcommands: check-op, check-compat, find-bivectors, find-fluxes,
classify, reduce, examples.  Exit codes: 0 pass/success, 1 a requested check
failed mathematically, 2 malformed input (including degenerate metrics).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from fractions import Fraction

from . import __version__
from .catalog import examples_catalog, get_entry
from .covering import (
    BivectorForm,
    EvolutionSystem,
    bivector_residual,
    build_cotangent,
    extract_conditions,
    operator_to_bivector,
)
from .errors import DegenerateMetricError, ExpressionError, HhoError, InputError
from .geometry import (
    Connection,
    Metric,
    SecondOrderData,
    ThirdOrderData,
    char_square_check,
    first_order_hamiltonian_check,
    first_order_operator,
    haantjes_zero_check,
    linear_degeneracy_check,
    nonlocal_first_order_check,
    second_order_canonical_check,
    second_order_compat,
    third_order_compat,
    third_order_hamiltonian_check,
    third_order_nonlocal_checks,
    third_order_operator,
    tsarev_check,
)
from .grammar import format_diffpoly, format_ratfunc, parse, parse_scalar
from .rational import Poly
from .solver import (
    find_bivectors,
    find_fluxes_second_order,
    find_fluxes_third_order,
    make_flux_ansatz,
    make_operator_ansatz,
)

SCHEMA_VERSION = 1


# -- problem loading -------------------------------------------------------------


class Problem:
    def __init__(self, data: dict, source_bytes: bytes | None = None):
        self.raw = data
        self.input_hash = (hashlib.sha256(source_bytes).hexdigest()
                           if source_bytes is not None else None)
        try:
            self.n = int(data["n"])
        except (KeyError, TypeError, ValueError):
            raise InputError("problem needs an integer field 'n'")
        names = data.get("variables")
        if names is not None and len(names) != self.n:
            raise InputError("the 'variables' naming list must have n entries")
        self.variable_names = names
        self.task = data.get("task", {})
        if not isinstance(self.task, dict):
            raise InputError("'task' must be an object of default settings")
        self.system = self._load_system(data.get("system"))
        self.symmetries = [tuple(parse(x) for x in phi)
                           for phi in data.get("symmetries", [])]
        for phi in self.symmetries:
            if len(phi) != self.n:
                raise InputError("each symmetry needs n components")
        self.operators = data.get("operators", {})

    def _load_system(self, spec):
        if spec is None:
            return None
        kind = spec.get("type")
        if kind == "fluxes":
            fluxes = [parse(x) for x in _require(spec, "f", kind)]
            if len(fluxes) != self.n:
                raise InputError(f"expected {self.n} fluxes")
            return EvolutionSystem.general(fluxes)
        if kind == "hydrodynamic":
            V = _require(spec, "V", kind)
            mat = [[parse_scalar(x) for x in row] for row in V]
            if len(mat) != self.n or any(len(r) != self.n for r in mat):
                raise InputError("velocity matrix must be n x n")
            return EvolutionSystem.hydrodynamic(mat)
        if kind in ("conservative", "potential"):
            V = [parse_scalar(x) for x in _require(spec, "V", kind)]
            if len(V) != self.n:
                raise InputError(f"expected {self.n} flux potentials")
            maker = (EvolutionSystem.conservative if kind == "conservative"
                     else EvolutionSystem.potential)
            return maker(V)
        raise InputError(f"unknown system type {kind!r}")

    def operator_spec(self, name: str) -> dict:
        try:
            return self.operators[name]
        except KeyError:
            raise InputError(f"no operator named {name!r} in the problem")

    def vflux(self):
        if self.system is None or self.system.flux_potentials is None:
            raise InputError("this task needs a conservative (or potential) system")
        return self.system.flux_potentials


def _require(spec, key, where):
    if key not in spec:
        raise InputError(f"missing field {key!r} in {where} block")
    return spec[key]


def _scalar_matrix(rows, n, what):
    mat = [[parse_scalar(x) for x in row] for row in rows]
    if len(mat) != n or any(len(r) != n for r in mat):
        raise InputError(f"{what} must be {n} x {n}")
    return mat


def _scalar_cube(planes, n, what):
    cube = [[[parse_scalar(x) for x in row] for row in plane] for plane in planes]
    if len(cube) != n or any(len(p) != n or any(len(r) != n for r in p) for p in cube):
        raise InputError(f"{what} must be {n} x {n} x {n}")
    return cube


def _sparse_or_full_skew(data, n, rank):
    """T/g0 fields accept either full arrays or sparse skew generators."""
    if isinstance(data, dict):
        gens = {}
        for key, val in data.items():
            idx = tuple(int(p) for p in key.split(","))
            if len(idx) != rank:
                raise InputError(f"generator key {key!r} needs {rank} indices")
            gens[idx] = Fraction(val)
        return gens
    return None


def load_operator(problem: Problem, name: str):
    spec = problem.operator_spec(name)
    n = problem.n
    if "bivector" in spec:
        exprs = spec["bivector"]
        if len(exprs) != n:
            raise InputError("bivector needs n components")
        return ("bivector", tuple(parse(x) for x in exprs))
    order = spec.get("order")
    if order == 1:
        g = Metric(_scalar_matrix(_require(spec, "g", "operator"), n, "g"),
                   variance=spec.get("variance", "upper"))
        gamma = _scalar_cube(_require(spec, "Gamma", "operator"), n, "Gamma")
        conn = Connection(g, gamma)
        W = None
        if "W" in spec:
            W = _scalar_matrix(spec["W"], n, "W")
        return ("first", g, conn, W)
    if order == 2:
        t_raw = _require(spec, "T", "operator")
        g0_raw = _require(spec, "g0", "operator")
        t_gens = _sparse_or_full_skew(t_raw, n, 3)
        g0_gens = _sparse_or_full_skew(g0_raw, n, 2)
        if t_gens is not None or g0_gens is not None:
            if t_gens is None or g0_gens is None:
                raise InputError("T and g0 must both be sparse or both full arrays")
            return ("second", SecondOrderData.from_generators(n, t_gens, g0_gens))
        T = [[[Fraction(x) for x in row] for row in plane] for plane in t_raw]
        g0 = [[Fraction(x) for x in row] for row in g0_raw]
        return ("second", SecondOrderData(T, g0))
    if order == 3:
        g = Metric(_scalar_matrix(_require(spec, "g", "operator"), n, "g"),
                   variance=spec.get("variance", "lower"))
        c_raw = spec.get("c", "from-metric")
        if c_raw == "from-metric":
            data = ThirdOrderData.from_lower_metric(g.lower())
        else:
            data = ThirdOrderData(g, _scalar_cube(c_raw, n, "c"))
        w_list = [_scalar_matrix(w, n, "w") for w in spec.get("w", [])]
        weights = [Fraction(x) for x in spec.get("weights", ["1"] * len(w_list))]
        if len(weights) != len(w_list):
            raise InputError("weights must match the number of tails")
        return ("third", data, w_list, weights)
    raise InputError(f"operator {name!r} needs 'order' in 1..3 or a 'bivector' field")


# -- report assembly ----------------------------------------------------------------


class Report:
    def __init__(self, command: str, problem: Problem | None):
        self.payload = {
            "schema": SCHEMA_VERSION,
            "engine": f"hhokit {__version__}",
            "command": command,
            "input_hash": problem.input_hash if problem else None,
            "verdicts": [],
            "families": [],
            "residual_dumps": [],
        }
        self.failed = False

    def add_condition(self, rep, full=False, limit=20):
        entry = {
            "name": rep.name,
            "pass": rep.passed,
            "notes": list(rep.notes),
            "residuals": [],
        }
        shown = rep.residuals if full else rep.residuals[:limit]
        for fam, idx, rf in shown:
            entry["residuals"].append(
                {"family": fam, "at": list(idx), "expr": format_ratfunc(rf)})
        if not full and len(rep.residuals) > limit:
            entry["residuals_truncated"] = len(rep.residuals) - limit
        self.payload["verdicts"].append(entry)
        if not rep.passed:
            self.failed = True

    def add_verdict(self, name: str, passed: bool, notes=()):
        self.payload["verdicts"].append(
            {"name": name, "pass": passed, "notes": list(notes), "residuals": []})
        if not passed:
            self.failed = True

    def add_residual_dump(self, label: str, components, full=False, limit=20):
        dump = []
        for i, comp in enumerate(components, start=1):
            terms = comp.sorted_terms()
            shown = terms if full else terms[:limit]
            from .jets import DiffPoly
            text = format_diffpoly(DiffPoly(dict(shown)))
            item = {"component": i, "terms": len(terms), "normal_form": text}
            if not full and len(terms) > limit:
                item["truncated"] = True
            dump.append(item)
        self.payload["residual_dumps"].append({"label": label, "components": dump})

    def add_family(self, family, kind: str):
        basis = []
        for member in family.basis:
            if kind == "bivector":
                basis.append([format_diffpoly(c) for c in member])
            else:
                basis.append([format_ratfunc(c) for c in member])
        entry = {"dimension": family.dimension, "basis": basis}
        if family.classification:
            entry["classification"] = {
                key: {"pass": rep.passed, "notes": list(rep.notes)}
                for key, rep in sorted(family.classification.items())}
        self.payload["families"].append(entry)

    def finish(self, json_path=None, stream=None):
        if stream is None:
            stream = sys.stdout
        self.payload["status"] = "fail" if self.failed else "pass"
        for v in self.payload["verdicts"]:
            mark = "pass" if v["pass"] else "FAIL"
            print(f"[{mark}] {v['name']}", file=stream)
            for note in v["notes"]:
                print(f"       note: {note}", file=stream)
            for r in v["residuals"][:5]:
                print(f"       residual {r['family']} at {r['at']}: {r['expr']}",
                      file=stream)
            if len(v["residuals"]) > 5:
                print(f"       ... {len(v['residuals']) - 5} more residuals "
                      f"(see --json output)", file=stream)
        for fam in self.payload["families"]:
            print(f"solution family: dimension {fam['dimension']}", file=stream)
            for k, member in enumerate(fam["basis"], start=1):
                print(f"  basis {k}:", file=stream)
                for i, expr in enumerate(member, start=1):
                    print(f"    [{i}] {expr}", file=stream)
            if "classification" in fam:
                for key, val in fam["classification"].items():
                    mark = "pass" if val["pass"] else "FAIL"
                    print(f"  classification {key}: {mark}", file=stream)
                    for note in val["notes"]:
                        print(f"       note: {note}", file=stream)
        for dump in self.payload["residual_dumps"]:
            print(f"residual {dump['label']}:", file=stream)
            for item in dump["components"]:
                suffix = " (truncated)" if item.get("truncated") else ""
                print(f"  component {item['component']} ({item['terms']} terms{suffix}):",
                      file=stream)
                print(f"    {item['normal_form']}", file=stream)
        if json_path:
            with open(json_path, "w") as fh:
                json.dump(self.payload, fh, indent=2, sort_keys=True)
                fh.write("\n")
        return 1 if self.failed else 0


# -- tasks ---------------------------------------------------------------------------


def _load_problem_arg(args) -> Problem:
    if getattr(args, "example", None):
        entry = get_entry_or_die(args.example)
        data = entry.problem
        blob = json.dumps(data, sort_keys=True).encode()
        return Problem(data, blob)
    if getattr(args, "file", None):
        with open(args.file, "rb") as fh:
            blob = fh.read()
        try:
            data = json.loads(blob)
        except json.JSONDecodeError as exc:
            raise InputError(f"not valid JSON: {exc}")
        return Problem(data, blob)
    raise InputError("provide --file PROBLEM.json or --example NAME")


def get_entry_or_die(name):
    try:
        return get_entry(name)
    except KeyError:
        raise InputError(f"no built-in example named {name!r}; try 'examples list'")


def _operator_names(problem, args):
    if args.operator:
        return [args.operator]
    names = sorted(problem.operators)
    if not names:
        raise InputError("the problem declares no operators")
    return names


def cmd_check_op(args):
    problem = _load_problem_arg(args)
    report = Report("check-op", problem)
    for name in _operator_names(problem, args):
        op = load_operator(problem, name)
        if op[0] == "first":
            report.add_condition(first_order_hamiltonian_check(op[1], op[2]),
                                 full=args.full)
        elif op[0] == "second":
            report.add_condition(second_order_canonical_check(op[1]), full=args.full)
        elif op[0] == "third":
            report.add_condition(third_order_hamiltonian_check(op[1]), full=args.full)
        else:
            raise InputError(
                f"{name!r} is a raw odd-variable vector; intrinsic operator "
                "checks need structured coefficients (use check-compat)")
    return report.finish(args.json)


def _register_symmetries(problem, ctx):
    for phi in problem.symmetries:
        ctx.register_symmetry(phi)


def cmd_check_compat(args):
    problem = _load_problem_arg(args)
    if problem.system is None:
        raise InputError("check-compat needs a system block")
    report = Report("check-compat", problem)
    for name in _operator_names(problem, args):
        op = load_operator(problem, name)
        if op[0] == "first":
            _, g, conn, W = op
            if problem.system.kind != "hydrodynamic":
                raise InputError("first-order compatibility needs a hydrodynamic system")
            V = problem.system.velocity
            if W is None:
                report.add_condition(tsarev_check(g, conn, V), full=args.full)
            else:
                report.add_condition(nonlocal_first_order_check(g, conn, W, V),
                                     full=args.full)
        elif op[0] == "second":
            report.add_condition(second_order_canonical_check(op[1]), full=args.full)
            report.add_condition(second_order_compat(op[1], problem.vflux()),
                                 full=args.full)
        elif op[0] == "third":
            _, data, w_list, weights = op
            report.add_condition(third_order_hamiltonian_check(data), full=args.full)
            report.add_condition(third_order_compat(data, problem.vflux()),
                                 full=args.full)
            if w_list:
                report.add_condition(
                    third_order_nonlocal_checks(data, w_list, weights, problem.vflux()),
                    full=args.full)
        else:
            ctx = build_cotangent(problem.system)
            _register_symmetries(problem, ctx)
            A = BivectorForm(op[1])
            residual = bivector_residual(ctx, A)
            ok = all(c.is_zero for c in residual)
            report.add_verdict(f"covering-residual[{name}]", ok)
            if not ok:
                report.add_residual_dump(name, residual, full=args.full)
    return report.finish(args.json)


def cmd_reduce(args):
    problem = _load_problem_arg(args)
    if problem.system is None:
        raise InputError("reduce needs a system block")
    report = Report("reduce", problem)
    ctx = build_cotangent(problem.system)
    _register_symmetries(problem, ctx)
    for name in _operator_names(problem, args):
        op = load_operator(problem, name)
        if op[0] == "bivector":
            A = BivectorForm(op[1])
        elif op[0] == "first":
            A = operator_to_bivector(first_order_operator(op[1], op[2]))
        elif op[0] == "third":
            A = operator_to_bivector(third_order_operator(op[1]))
        else:
            raise InputError("reduce supports bivector, first- or third-order operators")
        residual = bivector_residual(ctx, A)
        conditions = extract_conditions(residual)
        report.add_residual_dump(name, residual, full=args.full)
        report.add_verdict(f"residual-zero[{name}]",
                           all(c.is_zero for c in residual),
                           notes=[f"{len(conditions)} coefficient conditions"])
    return report.finish(args.json)


def _setting(args, problem, key, fallback):
    """CLI flag wins; then the problem's task block; then the fallback."""
    value = getattr(args, key.replace("-", "_"), None)
    if value is not None:
        return value
    if key in problem.task:
        return problem.task[key]
    return fallback


def cmd_find_bivectors(args):
    problem = _load_problem_arg(args)
    if problem.system is None:
        raise InputError("find-bivectors needs a system block")
    order = int(_setting(args, problem, "order", 1))
    degree = int(_setting(args, problem, "degree", 1))
    ansatz = make_operator_ansatz(problem.n, order, degree)
    family = find_bivectors(problem.system, ansatz)
    report = Report("find-bivectors", problem)
    report.add_family(family, "bivector")
    report.add_verdict(
        f"search(order<={order}, degree<={degree})", True,
        notes=[f"{len(ansatz.params)} ansatz parameters",
               f"dimension {family.dimension}"])
    return report.finish(args.json)


def cmd_find_fluxes(args):
    problem = _load_problem_arg(args)
    report = Report("find-fluxes", problem)
    name = _setting(args, problem, "operator", None)
    if name is None:
        raise InputError("find-fluxes needs --operator NAME")
    op = load_operator(problem, name)
    degree = int(_setting(args, problem, "degree", 2))
    den_text = _setting(args, problem, "denominator", None)
    den = Poly.one()
    if den_text:
        den_rf = parse_scalar(den_text)
        if not den_rf.is_poly:
            raise InputError("--denominator must be polynomial")
        den = den_rf.num
    ansatz = make_flux_ansatz(problem.n, degree, denominator=den)
    if op[0] == "second":
        family = find_fluxes_second_order(op[1], ansatz, classify=not args.no_classify)
    elif op[0] == "third":
        family = find_fluxes_third_order(op[1], ansatz, classify=not args.no_classify)
    else:
        raise InputError("find-fluxes needs a second- or third-order operator")
    report.add_family(family, "flux")
    report.add_verdict(f"search(degree<={degree})", True,
                       notes=[f"dimension {family.dimension}"])
    return report.finish(args.json)


def cmd_classify(args):
    problem = _load_problem_arg(args)
    if problem.system is None:
        raise InputError("classify needs a system block")
    try:
        J = problem.system.jacobian()
    except InputError:
        raise InputError("classify needs a hydrodynamic or conservative system")
    report = Report("classify", problem)
    report.add_condition(linear_degeneracy_check(J), full=args.full)
    report.add_condition(haantjes_zero_check(J), full=args.full)
    if problem.n % 2 == 0:
        report.add_condition(char_square_check(J), full=args.full)
    return report.finish(args.json)


def cmd_examples(args):
    if args.action == "list":
        for entry in examples_catalog():
            print(f"{entry.name:20s} {entry.title}")
        return 0
    if args.action == "show":
        entry = get_entry_or_die(args.name)
        print(json.dumps(entry.problem, indent=2, sort_keys=True))
        return 0
    if args.action == "run":
        entries = (examples_catalog() if args.all or args.name is None
                   else [get_entry_or_die(args.name)])
        failed = False
        for entry in entries:
            results = entry.run_goldens()
            ok = all(r.ok for r in results)
            failed = failed or not ok
            print(f"[{'pass' if ok else 'FAIL'}] {entry.name}")
            for r in results:
                mark = "ok" if r.ok else "XX"
                detail = f"  {r.detail}" if r.detail else ""
                print(f"    [{mark}] {r.name}{detail}")
        return 1 if failed else 0
    raise InputError(f"unknown examples action {args.action!r}")


# -- entry point -------------------------------------------------------------------------


def _add_common(p, with_operator=True):
    p.add_argument("--file", help="problem JSON file")
    p.add_argument("--example", help="name of a built-in example")
    if with_operator:
        p.add_argument("--operator", help="operator name (default: all declared)")
    p.add_argument("--json", help="write the structured report to this path")
    p.add_argument("--full", action="store_true",
                   help="do not truncate residual listings")


def build_parser():
    ap = argparse.ArgumentParser(
        prog="hhokit",
        description="Exact compatibility checks and searches for homogeneous "
                    "operators of evolutionary PDE systems.")
    ap.add_argument("--version", action="version", version=f"hhokit {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check-op", help="intrinsic operator conditions")
    _add_common(p)
    p.set_defaults(func=cmd_check_op)

    p = sub.add_parser("check-compat", help="operator/system compatibility")
    _add_common(p)
    p.set_defaults(func=cmd_check_compat)

    p = sub.add_parser("find-bivectors", help="linear search over an operator ansatz")
    _add_common(p, with_operator=False)
    p.add_argument("--order", type=int)
    p.add_argument("--degree", type=int)
    p.set_defaults(func=cmd_find_bivectors)

    p = sub.add_parser("find-fluxes", help="linear search for compatible fluxes")
    _add_common(p)
    p.add_argument("--degree", type=int)
    p.add_argument("--denominator", help="declared flux denominator (polynomial)")
    p.add_argument("--no-classify", action="store_true")
    p.set_defaults(func=cmd_find_fluxes)

    p = sub.add_parser("classify", help="linear degeneracy / diagonalizability")
    _add_common(p, with_operator=False)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("reduce", help="covering residual in normal form")
    _add_common(p)
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("examples", help="built-in catalog")
    p.add_argument("action", choices=["list", "show", "run"])
    p.add_argument("name", nargs="?")
    p.add_argument("--all", action="store_true")
    p.set_defaults(func=cmd_examples)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except ExpressionError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 2
    except (InputError, DegenerateMetricError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 2
    except HhoError as exc:
        print(f"engine error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
