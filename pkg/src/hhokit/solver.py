"""Undetermined-coefficients searches for operators and fluxes.

Templates carry fresh formal parameters linearly; the covering residual or
the closed-form compatibility conditions reduce to an exact linear system in
the parameters, whose reduced row echelon solution spans the answer.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .covering import BivectorForm, bivector_residual, build_cotangent, extract_conditions
from .errors import InputError
from .geometry import (
    SecondOrderData,
    ThirdOrderData,
    char_square_check,
    haantjes_zero_check,
    linear_degeneracy_check,
    second_order_canonical_check,
    second_order_compat,
    third_order_compat,
)
from .jets import DiffMonomial, DiffPoly, pjet, ujet
from .linsolve import LinearSystemSolution, linear_solve, substitute_solution
from .rational import Poly, RatFunc


@dataclass
class OperatorAnsatz:
    """Parameter-linear odd-linear vector template of bounded weight."""

    n: int
    order: int
    degree: int
    components: tuple
    params: tuple


@dataclass
class FluxAnsatz:
    """Parameter-linear flux vector; numerators polynomial over a fixed denominator."""

    n: int
    degree: int
    components: tuple
    params: tuple


@dataclass
class SolutionFamily:
    """Solved family: substitution, spanning basis, and its dimension."""

    substitution: LinearSystemSolution
    basis: tuple
    dimension: int
    classification: dict | None = None


def _jet_patterns(n: int, order: int):
    """Odd-linear differential monomials of homogeneity weight 1..order."""
    patterns = []

    def even_parts(weight, min_order, min_index):
        if weight == 0:
            yield ()
            return
        for k in range(min_order, weight + 1):
            start = min_index if k == min_order else 1
            for i in range(start, n + 1):
                for rest in even_parts(weight - k, k, i):
                    yield ((ujet(i, k), 1),) + rest

    def merge(factors):
        counts = {}
        for jv, _ in factors:
            counts[jv] = counts.get(jv, 0) + 1
        return tuple(sorted(counts.items()))

    for w in range(1, order + 1):
        for pw in range(0, w + 1):
            for j in range(1, n + 1):
                for even in even_parts(w - pw, 1, 1):
                    patterns.append(DiffMonomial(merge(even), pjet(j, pw)))
    return sorted(set(patterns), key=lambda m: (str(m),))


def _u_monomials(n: int, degree: int):
    """All monomials in u1..un of total degree <= degree, as Poly factors."""
    monos = [Poly.one()]
    frontier = [Poly.one()]
    for _ in range(degree):
        new = []
        seen = set()
        for p in frontier:
            for i in range(1, n + 1):
                q = p * Poly.var(i)
                key = next(iter(q.terms))
                if key not in seen:
                    seen.add(key)
                    new.append(q)
        monos.extend(new)
        frontier = new
    return monos


def make_operator_ansatz(n: int, order: int, degree_bound: int,
                         start_param: int = 1, size_cap: int = 10_000) -> OperatorAnsatz:
    """Template spanning all odd-linear monomials of weight up to ``order``
    with polynomial coefficient functions of u-degree up to ``degree_bound``,
    one fresh parameter per (component, monomial, coefficient) choice."""
    if order < 1:
        raise InputError("operator order must be >= 1")
    if degree_bound < 0:
        raise InputError("degree bound must be >= 0")
    patterns = _jet_patterns(n, order)
    coeff_monos = _u_monomials(n, degree_bound)
    count = n * len(patterns) * len(coeff_monos)
    if count > size_cap:
        raise InputError(f"ansatz would need {count} parameters (cap {size_cap})")
    pid = -start_param
    params = []
    comps = []
    for _ in range(n):
        terms = {}
        for pat in patterns:
            acc = RatFunc.zero()
            for cm in coeff_monos:
                acc = acc + RatFunc.from_poly(Poly.var(pid) * cm)
                params.append(pid)
                pid -= 1
            terms[pat] = acc
        comps.append(DiffPoly(terms))
    return OperatorAnsatz(n=n, order=order, degree=degree_bound,
                          components=tuple(comps), params=tuple(params))


def make_flux_ansatz(n: int, degree: int, denominator: Poly | None = None,
                     start_param: int = 1, size_cap: int = 10_000) -> FluxAnsatz:
    """Flux template: numerators of total degree <= degree over a declared
    denominator (rational template), parameters linear in the numerators."""
    coeff_monos = _u_monomials(n, degree)
    count = n * len(coeff_monos)
    if count > size_cap:
        raise InputError(f"ansatz would need {count} parameters (cap {size_cap})")
    den = denominator if denominator is not None else Poly.one()
    pid = -start_param
    params = []
    comps = []
    for _ in range(n):
        num = Poly.zero()
        for cm in coeff_monos:
            num = num + Poly.var(pid) * cm
            params.append(pid)
            pid -= 1
        comps.append(RatFunc(num, den))
    return FluxAnsatz(n=n, degree=degree, components=tuple(comps), params=tuple(params))


def _free_params(sol: LinearSystemSolution, ansatz_params):
    """Free directions: solver-free columns plus params no equation mentions."""
    if sol.inconsistent:
        return []
    seen = set(sol.free) | set(sol.pivots)
    extra = [p for p in ansatz_params if p not in seen]
    return sorted(set(sol.free) | set(extra), key=lambda pid: -pid)


def _basis_from_solution(sol: LinearSystemSolution, substitute, free_all):
    if sol.inconsistent:
        return ()
    return tuple(substitute({f: Fraction(1)}, free_all) for f in free_all)


def _subst_component(comp: DiffPoly, sol: LinearSystemSolution, assignment,
                     free_all) -> DiffPoly:
    out = DiffPoly.zero()
    for m, c in comp.terms.items():
        c2 = substitute_solution(c, sol)
        values = {pid: Fraction(assignment.get(pid, 0)) for pid in free_all}
        if values:
            c2 = c2.subs_params(values)
        if not c2.is_zero:
            out = out + DiffPoly.monomial(m, c2)
    return out


def find_bivectors(system, ansatz: OperatorAnsatz) -> SolutionFamily:
    """All members of the template whose covering residual vanishes."""
    ctx = build_cotangent(system)
    A = BivectorForm(components=ansatz.components)
    residual = bivector_residual(ctx, A)
    eqs = extract_conditions(residual)
    sol = linear_solve(eqs)
    free_all = _free_params(sol, ansatz.params)

    def member(assignment, free):
        return tuple(_subst_component(c, sol, assignment, free)
                     for c in ansatz.components)

    basis = _basis_from_solution(sol, member, free_all)
    return SolutionFamily(substitution=sol, basis=basis,
                          dimension=0 if sol.inconsistent else len(free_all))


def _flux_member(ansatz: FluxAnsatz, sol: LinearSystemSolution, assignment=None,
                 free_all=()):
    """Substitute the solution; assignment None keeps free parameters symbolic."""
    out = []
    for comp in ansatz.components:
        c2 = substitute_solution(comp, sol)
        if assignment is not None:
            values = {pid: Fraction(assignment.get(pid, 0)) for pid in free_all}
            if values:
                c2 = c2.subs_params(values)
        out.append(c2)
    return tuple(out)


def _classify_family(ansatz: FluxAnsatz, sol: LinearSystemSolution, with_square=False):
    """Classification of the generic member (free parameters kept symbolic)."""
    generic = _flux_member(ansatz, sol)
    n = ansatz.n
    V = tuple(tuple(generic[i].diff(j + 1) for j in range(n)) for i in range(n))
    out = {
        "linear-degeneracy": linear_degeneracy_check(V),
        "haantjes-zero": haantjes_zero_check(V),
    }
    if with_square:
        out["char-poly-square"] = char_square_check(V)
    return out


def find_fluxes_second_order(d: SecondOrderData, ansatz: FluxAnsatz,
                             classify: bool = True) -> SolutionFamily:
    """Fluxes compatible with the canonical second-order operator."""
    canonical = second_order_canonical_check(d)
    if not canonical.passed:
        raise InputError("second-order data is not in canonical form: "
                         + ", ".join(canonical.families_failing()))
    rep = second_order_compat(d, ansatz.components)
    sol = linear_solve([rf for _, _, rf in rep.residuals])
    free_all = _free_params(sol, ansatz.params)
    basis = _basis_from_solution(
        sol, lambda a, free: _flux_member(ansatz, sol, a, free), free_all)
    classification = _classify_family(ansatz, sol, with_square=True) if classify else None
    return SolutionFamily(substitution=sol, basis=basis,
                          dimension=0 if sol.inconsistent else len(free_all),
                          classification=classification)


def find_fluxes_third_order(d: ThirdOrderData, ansatz: FluxAnsatz,
                            classify: bool = True) -> SolutionFamily:
    """Fluxes compatible with the canonical third-order operator."""
    rep = third_order_compat(d, ansatz.components)
    sol = linear_solve([rf for _, _, rf in rep.residuals])
    free_all = _free_params(sol, ansatz.params)
    basis = _basis_from_solution(
        sol, lambda a, free: _flux_member(ansatz, sol, a, free), free_all)
    classification = _classify_family(ansatz, sol) if classify else None
    return SolutionFamily(substitution=sol, basis=basis,
                          dimension=0 if sol.inconsistent else len(free_all),
                          classification=classification)
