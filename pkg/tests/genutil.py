"""Seeded random generators shared by the unit and acceptance suites."""

from fractions import Fraction

from hhokit.geometry import Connection, Metric, ThirdOrderData, as_matrix, determinant
from hhokit.jets import DiffPoly, mono, pjet, rvar, ujet
from hhokit.rational import Poly, RatFunc


def rand_fraction(rng, lo=-4, hi=4, den_max=3):
    num = rng.randint(lo, hi)
    den = rng.randint(1, den_max)
    return Fraction(num, den)


def rand_poly(rng, nvars, degree, terms=3, allow_params=0):
    """Random polynomial in u1..u{nvars} (and optionally some parameters)."""
    p = Poly.zero()
    for _ in range(terms):
        m = Poly.const(rand_fraction(rng))
        for _ in range(rng.randint(0, degree)):
            vid = rng.randint(1, nvars)
            m = m * Poly.var(vid)
        if allow_params and rng.random() < 0.5:
            m = m * Poly.var(-rng.randint(1, allow_params))
        p = p + m
    return p


def rand_ratfunc(rng, nvars, degree=2):
    num = rand_poly(rng, nvars, degree)
    den = Poly.zero()
    while den.is_zero:
        den = rand_poly(rng, nvars, 1, terms=2)
    return RatFunc(num, den)


def rand_diffpoly(rng, nvars=2, max_order=3, terms=4, odd=True, slots=0):
    """Random differential polynomial with polynomial coefficients."""
    total = DiffPoly.zero()
    for _ in range(terms):
        even = {}
        for _ in range(rng.randint(0, 2)):
            jv = ujet(rng.randint(1, nvars), rng.randint(1, max_order))
            even[jv] = even.get(jv, 0) + 1
        odd_part = None
        if odd and rng.random() < 0.6:
            if slots and rng.random() < 0.4:
                odd_part = rvar(rng.randint(1, slots))
            else:
                odd_part = pjet(rng.randint(1, nvars), rng.randint(0, max_order))
        coeff = RatFunc.from_poly(rand_poly(rng, nvars, 2, terms=2))
        if coeff.is_zero:
            continue
        total = total + DiffPoly.monomial(mono(tuple(even.items()), odd_part), coeff)
    return total


def flat_first_order_instance(rng, n, constant_jacobian=False):
    """Flat operator data (g, Gamma) built by pulling the identity metric back
    through a unit-triangular polynomial change of coordinates.

    The map is ubar^i = d_i (u^i + q_i(u^n)) with q_n = 0, whose Jacobian J
    is triangular with constant determinant, so J^{-1} and the metric stay
    polynomial.  Returns (metric, connection, J, Jinv, ubar).
    """
    diag = [Fraction(rng.choice([1, 1, 2, 3]), rng.choice([1, 2])) for _ in range(n)]
    qs = []
    for _ in range(n - 1):
        q = Poly.var(n) * rand_fraction(rng)
        if not constant_jacobian:
            q = q + Poly.var(n, 2) * rand_fraction(rng)
        qs.append(q)
    qs.append(Poly.zero())
    ubar = [RatFunc.from_poly((Poly.var(i + 1) + qs[i]) * diag[i]) for i in range(n)]
    J = [[ubar[i].diff(j + 1) for j in range(n)] for i in range(n)]
    # (I + N)^{-1} = I - N for the strictly-upper last-column part
    Jinv = [[RatFunc.zero() for _ in range(n)] for _ in range(n)]
    for i in range(n):
        Jinv[i][i] = RatFunc.const(1 / diag[i])
    for i in range(n - 1):
        Jinv[i][n - 1] = -RatFunc.from_poly(qs[i].diff(n)) / diag[n - 1]
    Jr = as_matrix(J)
    Jinvr = as_matrix(Jinv)
    g_up = [[sum((Jinvr[i][k] * Jinvr[j][k] for k in range(n)), RatFunc.zero())
             for j in range(n)] for i in range(n)]
    metric = Metric(g_up, variance="upper")
    conn = Connection.levi_civita(metric)
    return metric, conn, Jr, Jinvr, tuple(ubar)


def hessian_velocity(rng, n, J, Jinv, ubar, degree=3):
    """Velocity matrix satisfying the compatibility pair by construction:
    a Hessian in the flat coordinates, pulled back as a (1,1)-tensor."""
    h = rand_poly(rng, n, degree, terms=5)
    hess = [[h.diff(i + 1).diff(j + 1) for j in range(n)] for i in range(n)]

    def compose(p):
        total = RatFunc.zero()
        for m, c in p.terms.items():
            term = RatFunc.const(c)
            for vid, e in m:
                term = term * ubar[vid - 1] ** e
            total = total + term
        return total

    Hbar = [[compose(hess[i][j]) for j in range(n)] for i in range(n)]
    V = [[sum((Jinv[i][a] * Hbar[a][b] * J[b][j] for a in range(n) for b in range(n)),
              RatFunc.zero()) for j in range(n)] for i in range(n)]
    return V


def random_velocity(rng, n, degree=2):
    return [[RatFunc.from_poly(rand_poly(rng, n, degree, terms=2)) for _ in range(n)]
            for _ in range(n)]


def constant_third_order_instance(rng, n):
    """Constant symmetric nondegenerate lowered metric (c = 0 follows)."""
    while True:
        entries = [[Fraction(0)] * n for _ in range(n)]
        for i in range(n):
            for j in range(i, n):
                v = Fraction(rng.randint(-3, 3))
                entries[i][j] = v
                entries[j][i] = v
        data = ThirdOrderData.from_lower_metric(
            [[RatFunc.const(x) for x in row] for row in entries])
        if not determinant(data.metric.lower()).is_zero:
            return data


def symmetric_affine_fluxes(rng, n, data):
    """Affine fluxes whose Jacobian M satisfies g M symmetric: M = g^{-1} S."""
    from hhokit.geometry import inverse
    g_up = inverse(data.metric.lower())
    S = [[Fraction(0)] * n for _ in range(n)]
    for i in range(n):
        for j in range(i, n):
            v = rand_fraction(rng)
            S[i][j] = v
            S[j][i] = v
    M = [[sum((g_up[i][k] * S[k][j] for k in range(n)), RatFunc.zero())
          for j in range(n)] for i in range(n)]
    vflux = []
    for i in range(n):
        acc = RatFunc.const(rand_fraction(rng))
        for j in range(n):
            acc = acc + M[i][j] * RatFunc.var(j + 1)
        vflux.append(acc)
    return vflux


def random_fluxes(rng, n, degree=2):
    return [RatFunc.from_poly(rand_poly(rng, n, degree, terms=3)) for _ in range(n)]
