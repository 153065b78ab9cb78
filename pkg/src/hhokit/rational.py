"""Exact scalar algebra: multivariate polynomials and rational functions over Q.

Everything downstream (jet polynomials, condition checkers, linear solving)
uses these scalars as coefficients.  A scalar lives in Q(u1..un)[c1..cm]:
a rational function of the field variables with formal parameters that are
only ever allowed in numerators.

Variables are identified by integer ids:

* ``vid > 0``  -- the field variable ``u{vid}``;
* ``vid < 0``  -- the formal parameter ``c{-vid}``.

A monomial is a tuple ``((vid, exp), ...)`` sorted by variable key, with all
exponents positive; the empty tuple is 1.  Polynomials are sparse dicts
monomial -> Fraction with no zero values, so equality of canonical forms is
dict equality.  The term order is graded lexicographic with field variables
before parameters.
"""

from __future__ import annotations

from fractions import Fraction
from math import gcd as int_gcd

from .errors import NonlinearAnsatzError, ParameterInDenominatorError

Mono = tuple  # ((vid, exp), ...)

_EMPTY: Mono = ()


def vkey(vid: int):
    """Sort key placing u1 < u2 < ... < c1 < c2 < ..."""
    return (0, vid) if vid > 0 else (1, -vid)


def var_name(vid: int) -> str:
    return f"u{vid}" if vid > 0 else f"c{-vid}"


def mono_mul(m1: Mono, m2: Mono) -> Mono:
    if not m1:
        return m2
    if not m2:
        return m1
    out = []
    i = j = 0
    n1, n2 = len(m1), len(m2)
    while i < n1 and j < n2:
        v1, e1 = m1[i]
        v2, e2 = m2[j]
        k1, k2 = vkey(v1), vkey(v2)
        if k1 == k2:
            out.append((v1, e1 + e2))
            i += 1
            j += 1
        elif k1 < k2:
            out.append(m1[i])
            i += 1
        else:
            out.append(m2[j])
            j += 1
    out.extend(m1[i:])
    out.extend(m2[j:])
    return tuple(out)


def mono_div(m1: Mono, m2: Mono):
    """m1 / m2, or None when m2 does not divide m1."""
    if not m2:
        return m1
    d2 = dict(m2)
    out = []
    for v, e in m1:
        r = e - d2.pop(v, 0)
        if r < 0:
            return None
        if r:
            out.append((v, r))
    if d2:
        return None
    return tuple(out)


def mono_gcd(m1: Mono, m2: Mono) -> Mono:
    d2 = dict(m2)
    out = []
    for v, e in m1:
        e2 = d2.get(v, 0)
        if e2:
            out.append((v, min(e, e2)))
    return tuple(out)


def mono_deg(m: Mono) -> int:
    return sum(e for _, e in m)


def mono_key(m: Mono):
    """Ascending sort by this key lists terms leading-first (graded lex)."""
    return (-mono_deg(m), tuple((vkey(v), -e) for v, e in m))


def mono_str(m: Mono) -> str:
    if not m:
        return "1"
    parts = []
    for v, e in sorted(m, key=lambda p: vkey(p[0])):
        parts.append(var_name(v) if e == 1 else f"{var_name(v)}^{e}")
    return "*".join(parts)


class Poly:
    """Sparse multivariate polynomial with Fraction coefficients."""

    __slots__ = ("terms",)

    def __init__(self, terms=None):
        if terms is None:
            self.terms = {}
        else:
            self.terms = {m: c for m, c in terms.items() if c}

    @staticmethod
    def _new(terms: dict) -> "Poly":
        p = object.__new__(Poly)
        p.terms = terms
        return p

    @classmethod
    def zero(cls) -> "Poly":
        return cls._new({})

    @classmethod
    def const(cls, c) -> "Poly":
        c = Fraction(c)
        return cls._new({_EMPTY: c} if c else {})

    @classmethod
    def one(cls) -> "Poly":
        return cls._new({_EMPTY: Fraction(1)})

    @classmethod
    def var(cls, vid: int, exp: int = 1) -> "Poly":
        if exp < 0:
            raise ValueError("negative exponent")
        if exp == 0:
            return cls.one()
        return cls._new({((vid, exp),): Fraction(1)})

    # -- predicates ---------------------------------------------------------

    @property
    def is_zero(self) -> bool:
        return not self.terms

    @property
    def is_const(self) -> bool:
        return not self.terms or (len(self.terms) == 1 and _EMPTY in self.terms)

    def const_value(self) -> Fraction:
        if not self.terms:
            return Fraction(0)
        if not self.is_const:
            raise ValueError("not a constant polynomial")
        return self.terms[_EMPTY]

    @property
    def is_monomial(self) -> bool:
        return len(self.terms) == 1

    def __bool__(self):
        return bool(self.terms)

    def __eq__(self, other):
        if not isinstance(other, Poly):
            return NotImplemented
        return self.terms == other.terms

    __hash__ = None

    # -- arithmetic ---------------------------------------------------------

    def __add__(self, other):
        if isinstance(other, (int, Fraction)):
            other = Poly.const(other)
        res = dict(self.terms)
        for m, c in other.terms.items():
            s = res.get(m)
            if s is None:
                res[m] = c
            else:
                s = s + c
                if s:
                    res[m] = s
                else:
                    del res[m]
        return Poly._new(res)

    def __sub__(self, other):
        if isinstance(other, (int, Fraction)):
            other = Poly.const(other)
        res = dict(self.terms)
        for m, c in other.terms.items():
            s = res.get(m)
            if s is None:
                res[m] = -c
            else:
                s = s - c
                if s:
                    res[m] = s
                else:
                    del res[m]
        return Poly._new(res)

    def __neg__(self):
        return Poly._new({m: -c for m, c in self.terms.items()})

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            c = Fraction(other)
            if not c:
                return Poly.zero()
            return Poly._new({m: v * c for m, v in self.terms.items()})
        if not self.terms or not other.terms:
            return Poly.zero()
        a, b = self.terms, other.terms
        if len(a) > len(b):
            a, b = b, a
        res = {}
        for m1, c1 in a.items():
            for m2, c2 in b.items():
                m = mono_mul(m1, m2)
                s = res.get(m)
                if s is None:
                    res[m] = c1 * c2
                else:
                    s = s + c1 * c2
                    if s:
                        res[m] = s
                    else:
                        del res[m]
        return Poly._new(res)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if n < 0:
            raise ValueError("negative exponent on polynomial")
        out = Poly.one()
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base if n > 1 else base
            n >>= 1
        return out

    # -- calculus and structure ---------------------------------------------

    def diff(self, vid: int) -> "Poly":
        res = {}
        for m, c in self.terms.items():
            for pos, (v, e) in enumerate(m):
                if v == vid:
                    if e == 1:
                        nm = m[:pos] + m[pos + 1:]
                    else:
                        nm = m[:pos] + ((v, e - 1),) + m[pos + 1:]
                    s = res.get(nm)
                    s = c * e if s is None else s + c * e
                    if s:
                        res[nm] = s
                    elif nm in res:
                        del res[nm]
                    break
        return Poly._new(res)

    def degree(self) -> int:
        """Total degree; -1 for the zero polynomial."""
        if not self.terms:
            return -1
        return max(mono_deg(m) for m in self.terms)

    def degree_in(self, vid: int) -> int:
        best = 0
        for m in self.terms:
            for v, e in m:
                if v == vid and e > best:
                    best = e
        return best

    def vars_used(self):
        seen = set()
        for m in self.terms:
            for v, _ in m:
                seen.add(v)
        return sorted(seen, key=vkey)

    def field_vars(self):
        return [v for v in self.vars_used() if v > 0]

    @property
    def has_params(self) -> bool:
        return any(v < 0 for m in self.terms for v, _ in m)

    def leading(self):
        """(monomial, coefficient) of the graded-lex leading term."""
        if not self.terms:
            return _EMPTY, Fraction(0)
        m = min(self.terms, key=mono_key)
        return m, self.terms[m]

    def evaluate(self, point: dict) -> Fraction:
        """Evaluate at a rational point {vid: Fraction}; all vars must be set."""
        total = Fraction(0)
        for m, c in self.terms.items():
            v = c
            for vid, e in m:
                v = v * point[vid] ** e
            total += v
        return total

    def subs_params(self, values: dict) -> "Poly":
        """Substitute rational values for parameters, keeping field variables."""
        res = Poly.zero()
        for m, c in self.terms.items():
            rest = []
            for vid, e in m:
                if vid < 0:
                    c = c * values[vid] ** e
                else:
                    rest.append((vid, e))
            res = res + Poly._new({tuple(rest): Fraction(1)}) * c
        return res

    def split_affine_params(self):
        """Decompose sum_k ck*rho_k(u) + rho_0(u) -> ({param_vid: rho_k}, rho_0).

        Raises NonlinearAnsatzError when a parameter occurs with degree >= 2
        or two parameters share a monomial.
        """
        linear: dict[int, Poly] = {}
        absolute = Poly.zero()
        for m, c in self.terms.items():
            pvars = [(v, e) for v, e in m if v < 0]
            if not pvars:
                absolute = absolute + Poly._new({m: c})
                continue
            if len(pvars) > 1 or pvars[0][1] > 1:
                raise NonlinearAnsatzError(f"nonlinear ansatz: parameter monomial {mono_str(m)}")
            pid = pvars[0][0]
            rest = tuple((v, e) for v, e in m if v > 0)
            tgt = linear.setdefault(pid, Poly.zero())
            linear[pid] = tgt + Poly._new({rest: c})
        return linear, absolute

    def content(self) -> Fraction:
        """Positive rational c with self/c integer and content-free (0 for 0)."""
        if not self.terms:
            return Fraction(0)
        num = 0
        den = 1
        for c in self.terms.values():
            num = int_gcd(num, c.numerator)
            den = den * c.denominator // int_gcd(den, c.denominator)
        return Fraction(num, den)

    def __str__(self):
        if not self.terms:
            return "0"
        chunks = []
        for m in sorted(self.terms, key=mono_key):
            c = self.terms[m]
            sign = "-" if c < 0 else "+"
            c = abs(c)
            if not m:
                body = str(c)
            elif c == 1:
                body = mono_str(m)
            else:
                body = f"{c}*{mono_str(m)}"
            chunks.append((sign, body))
        first_sign, first_body = chunks[0]
        out = ("-" if first_sign == "-" else "") + first_body
        for sign, body in chunks[1:]:
            out += f" {sign} {body}"
        return out

    __repr__ = __str__


# -- exact division and gcd --------------------------------------------------


def exact_div(a: Poly, b: Poly):
    """a / b when the division is exact, else None."""
    if b.is_zero:
        raise ZeroDivisionError("polynomial division by zero")
    if a.is_zero:
        return Poly.zero()
    if b.is_const:
        inv = 1 / b.const_value()
        return Poly._new({m: c * inv for m, c in a.terms.items()})
    bm, bc = b.leading()
    rem = dict(a.terms)
    quot = {}
    while rem:
        m = min(rem, key=mono_key)
        c = rem[m]
        qm = mono_div(m, bm)
        if qm is None:
            return None
        qc = c / bc
        quot[qm] = qc
        for m2, c2 in b.terms.items():
            mm = mono_mul(qm, m2)
            s = rem.get(mm)
            s = -qc * c2 if s is None else s - qc * c2
            if s:
                rem[mm] = s
            elif mm in rem:
                del rem[mm]
    return Poly._new(quot)


def _mono_common(p: Poly) -> Mono:
    """Largest monomial dividing every term of p (p nonzero)."""
    it = iter(p.terms)
    acc = next(it)
    for m in it:
        if not acc:
            break
        acc = mono_gcd(acc, m)
    return acc


def _normalize_unit(p: Poly) -> Poly:
    """Scale so the leading coefficient is 1 (canonical gcd representative)."""
    if p.is_zero:
        return p
    _, lc = p.leading()
    if lc == 1:
        return p
    inv = 1 / lc
    return Poly._new({m: c * inv for m, c in p.terms.items()})


def _univar(p: Poly, x: int) -> dict:
    """View p as a univariate polynomial in x with Poly coefficients."""
    out: dict[int, dict] = {}
    for m, c in p.terms.items():
        d = 0
        rest = []
        for v, e in m:
            if v == x:
                d = e
            else:
                rest.append((v, e))
        out.setdefault(d, {})[tuple(rest)] = c
    return {d: Poly._new(t) for d, t in out.items()}


def _from_univar(coeffs: dict, x: int) -> Poly:
    total = Poly.zero()
    for d, p in coeffs.items():
        total = total + p * Poly.var(x, d)
    return total


def _content_x(coeffs: dict) -> Poly:
    acc = Poly.zero()
    for p in coeffs.values():
        acc = poly_gcd(acc, p)
        if acc.is_const and not acc.is_zero:
            return Poly.one()
    return acc


def _uv_deg(coeffs: dict) -> int:
    return max(coeffs)


def _uv_mul_poly(coeffs: dict, q: Poly) -> dict:
    return {d: p * q for d, p in coeffs.items()}


def _uv_pseudo_rem(a: dict, b: dict) -> dict:
    """Pseudo-remainder prem(a, b): lc(b)^(deg a - deg b + 1) * a mod b."""
    da, db = _uv_deg(a), _uv_deg(b)
    lb = b[db]
    rem = dict(a)
    e = da - db + 1
    while rem and _uv_deg(rem) >= db:
        dr = _uv_deg(rem)
        lr = rem[dr]
        new = {}
        for d, p in rem.items():
            if d == dr:
                continue
            new[d] = p * lb
        for d, p in b.items():
            if d == db:
                continue
            dd = d + dr - db
            t = new.get(dd, Poly.zero()) - p * lr
            if t.is_zero:
                new.pop(dd, None)
            else:
                new[dd] = t
        rem = {d: p for d, p in new.items() if not p.is_zero}
        e -= 1
    if e > 0 and rem:
        scale = lb ** e
        rem = {d: p * scale for d, p in rem.items()}
    return rem


def poly_gcd(a: Poly, b: Poly) -> Poly:
    """GCD up to a unit, normalized to leading coefficient 1.

    Subresultant PRS with content/primitive-part recursion; monomial and
    trial-division fast paths cover the common shapes (pure powers in
    denominators, nested dets).
    """
    if a.is_zero:
        return _normalize_unit(b)
    if b.is_zero:
        return _normalize_unit(a)
    if a.is_const or b.is_const:
        return Poly.one()

    shared = mono_gcd(_mono_common(a), _mono_common(b))
    if shared:
        a = exact_div(a, Poly._new({shared: Fraction(1)}))
        b = exact_div(b, Poly._new({shared: Fraction(1)}))
    shared_poly = Poly._new({shared: Fraction(1)}) if shared else None

    def _with_shared(g: Poly) -> Poly:
        return _normalize_unit(g * shared_poly) if shared_poly else _normalize_unit(g)

    if a.is_const or b.is_const or a.is_monomial or b.is_monomial:
        return _with_shared(Poly.one())
    if a == b:
        return _with_shared(a)
    # trial division both ways
    if a.degree() >= b.degree() and exact_div(a, b) is not None:
        return _with_shared(b)
    if b.degree() >= a.degree() and exact_div(b, a) is not None:
        return _with_shared(a)

    common = set(a.vars_used()) & set(b.vars_used())
    if not common:
        return _with_shared(Poly.one())
    # shortest pseudo-remainder chain: smallest main-variable degree wins
    x = min(common, key=lambda v: (min(a.degree_in(v), b.degree_in(v)), vkey(v)))

    ua, ub = _univar(a, x), _univar(b, x)
    ca, cb = _content_x(ua), _content_x(ub)
    pa = {d: exact_div(p, ca) for d, p in ua.items()}
    pb = {d: exact_div(p, cb) for d, p in ub.items()}
    cont = poly_gcd(ca, cb)

    if _uv_deg(pa) < _uv_deg(pb):
        pa, pb = pb, pa
    g = Poly.one()
    h = Poly.one()
    while True:
        delta = _uv_deg(pa) - _uv_deg(pb)
        rem = _uv_pseudo_rem(pa, pb)
        if not rem:
            cb2 = _content_x(pb)
            prim = {d: exact_div(p, cb2) for d, p in pb.items()}
            return _with_shared(_from_univar(prim, x) * cont)
        if _uv_deg(rem) == 0:
            return _with_shared(cont)
        divisor = g * h ** delta
        pa = pb
        pb = {d: exact_div(p, divisor) for d, p in rem.items()}
        g = pa[_uv_deg(pa)]
        if delta >= 1:
            h = exact_div(g ** delta, h ** (delta - 1))
        # delta == 0 keeps h unchanged


# -- rational functions -------------------------------------------------------


class RatFunc:
    """Reduced fraction of Polys; denominator monic and parameter-free."""

    __slots__ = ("num", "den")

    def __init__(self, num, den=None):
        if isinstance(num, (int, Fraction)):
            num = Poly.const(num)
        if den is None:
            den = Poly.one()
        elif isinstance(den, (int, Fraction)):
            den = Poly.const(den)
        if den.is_zero:
            raise ZeroDivisionError("rational function with zero denominator")
        self.num, self.den = _reduce(num, den)

    @staticmethod
    def _new(num: Poly, den: Poly) -> "RatFunc":
        r = object.__new__(RatFunc)
        r.num = num
        r.den = den
        return r

    @classmethod
    def zero(cls):
        return cls._new(Poly.zero(), Poly.one())

    @classmethod
    def one(cls):
        return cls._new(Poly.one(), Poly.one())

    @classmethod
    def const(cls, c):
        return cls._new(Poly.const(c), Poly.one())

    @classmethod
    def var(cls, vid: int):
        return cls._new(Poly.var(vid), Poly.one())

    @classmethod
    def from_poly(cls, p: Poly):
        return cls._new(Poly._new(dict(p.terms)), Poly.one())

    @property
    def is_zero(self) -> bool:
        return self.num.is_zero

    @property
    def is_const(self) -> bool:
        return self.num.is_const and self.den.is_const

    def const_value(self) -> Fraction:
        return self.num.const_value() / self.den.const_value()

    @property
    def is_poly(self) -> bool:
        return self.den.is_const

    def __bool__(self):
        return not self.num.is_zero

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = RatFunc.const(other)
        if not isinstance(other, RatFunc):
            return NotImplemented
        return self.num == other.num and self.den == other.den

    __hash__ = None

    def __add__(self, other):
        if isinstance(other, (int, Fraction)):
            other = RatFunc.const(other)
        if self.num.is_zero:
            return other
        if other.num.is_zero:
            return self
        if self.den == other.den:
            return RatFunc(self.num + other.num, self.den)
        g = poly_gcd(self.den, other.den)
        if g.is_const:
            num = self.num * other.den + other.num * self.den
            den = self.den * other.den
        else:
            da = exact_div(self.den, g)
            db = exact_div(other.den, g)
            num = self.num * db + other.num * da
            den = self.den * db
        return RatFunc(num, den)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, (int, Fraction)):
            other = RatFunc.const(other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __neg__(self):
        return RatFunc._new(-self.num, self.den)

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            if not other:
                return RatFunc.zero()
            return RatFunc(self.num * other, self.den)
        if self.num.is_zero or other.num.is_zero:
            return RatFunc.zero()
        # cross-cancel before multiplying to keep intermediates small
        n1, d2 = _reduce(self.num, other.den)
        n2, d1 = _reduce(other.num, self.den)
        return RatFunc._new(n1 * n2, d1 * d2)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)):
            other = RatFunc.const(other)
        if other.num.is_zero:
            raise ZeroDivisionError("rational function division by zero")
        return RatFunc(self.num * other.den, self.den * other.num)

    def __rtruediv__(self, other):
        return RatFunc.const(other) / self

    def __pow__(self, n: int):
        if n < 0:
            return RatFunc.one() / self ** (-n)
        return RatFunc(self.num ** n, self.den ** n)

    def diff(self, vid: int) -> "RatFunc":
        dn = self.num.diff(vid)
        dd = self.den.diff(vid)
        if dd.is_zero:
            return RatFunc(dn, self.den)
        return RatFunc(dn * self.den - self.num * dd, self.den * self.den)

    def vars_used(self):
        seen = set(self.num.vars_used()) | set(self.den.vars_used())
        return sorted(seen, key=vkey)

    def field_vars(self):
        return [v for v in self.vars_used() if v > 0]

    @property
    def has_params(self) -> bool:
        return self.num.has_params

    def evaluate(self, point: dict) -> Fraction:
        d = self.den.evaluate(point)
        if not d:
            raise ZeroDivisionError("denominator vanishes at the sample point")
        return self.num.evaluate(point) / d

    def subs_params(self, values: dict) -> "RatFunc":
        return RatFunc(self.num.subs_params(values), self.den)

    def leading_sign(self) -> int:
        if self.num.is_zero:
            return 0
        _, c = self.num.leading()
        return 1 if c > 0 else -1

    def __str__(self):
        if self.den.is_const and self.den.const_value() == 1:
            return str(self.num)
        return f"({self.num})/({self.den})"

    __repr__ = __str__


def _reduce(num: Poly, den: Poly):
    """Canonical (num, den): gcd-reduced, den monic and parameter-free."""
    if num.is_zero:
        return Poly.zero(), Poly.one()
    if den.has_params:
        g = poly_gcd(num, den)
        if not g.is_const:
            num = exact_div(num, g)
            den = exact_div(den, g)
        if den.has_params:
            raise ParameterInDenominatorError(
                "formal parameters must stay linear: denominator contains a parameter")
    if den.is_const:
        inv = 1 / den.const_value()
        if inv != 1:
            num = num * inv
        return num, Poly.one()
    g = poly_gcd(num, den)
    if not g.is_const:
        num = exact_div(num, g)
        den = exact_div(den, g)
    if den.is_const:
        inv = 1 / den.const_value()
        return (num * inv if inv != 1 else num), Poly.one()
    _, lc = den.leading()
    if lc != 1:
        inv = 1 / lc
        num = num * inv
        den = den * inv
    return num, den


def rf_arith(a: RatFunc, b: RatFunc, op: str) -> RatFunc:
    """Named entry point for the four field operations."""
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "div":
        return a / b
    raise ValueError(f"unknown operation {op!r}")


def rf_partial(a: RatFunc, i: int) -> RatFunc:
    """Partial derivative with respect to the field variable u{i}."""
    if i <= 0:
        raise ValueError("field-variable index must be positive")
    return a.diff(i)
