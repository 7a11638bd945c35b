"""Exact polynomial arithmetic: characteristic polynomials and partition functions.

``UniPoly`` holds rational coefficients in ascending degree.  ``MultiPoly``
is sparse with exponent vectors packed into one integer key (lex order on
the variables in the given order equals the integer order of the keys), so
products and leading terms stay cheap.
"""

import math
import random
from fractions import Fraction
from itertools import combinations

import numpy as np

from . import kernels, linalg
from .arborescence import format_rational
from .configuration import StateSpace
from .errors import CapExceeded, ValidationError
from .operators import LANDSLIDE, SOURCE, operator_table

CHARPOLY_CAP = 256
BAREISS_CHARPOLY_MAX = 24
SUBSET_CAP = 20


# == univariate ===========================================================


class UniPoly:
    __slots__ = ("c",)

    def __init__(self, coeffs=()):
        c = [Fraction(v) for v in coeffs]
        while c and c[-1] == 0:
            c.pop()
        self.c = c

    @classmethod
    def x(cls):
        return cls([0, 1])

    @classmethod
    def from_roots(cls, roots):
        """prod (x - r)^m for (r, m) pairs."""
        out = cls([1])
        for r, m in roots:
            for _ in range(m):
                out = out * cls([-Fraction(r), 1])
        return out

    @property
    def degree(self):
        return len(self.c) - 1

    @property
    def lc(self):
        return self.c[-1] if self.c else Fraction(0)

    def __bool__(self):
        return bool(self.c)

    def __eq__(self, other):
        if not isinstance(other, UniPoly):
            other = UniPoly([other])
        return self.c == other.c

    def __hash__(self):
        return hash(tuple(self.c))

    def __add__(self, other):
        other = other if isinstance(other, UniPoly) else UniPoly([other])
        n = max(len(self.c), len(other.c))
        a = self.c + [Fraction(0)] * (n - len(self.c))
        b = other.c + [Fraction(0)] * (n - len(other.c))
        return UniPoly([u + v for u, v in zip(a, b)])

    __radd__ = __add__

    def __neg__(self):
        return UniPoly([-v for v in self.c])

    def __sub__(self, other):
        return self + (-(other if isinstance(other, UniPoly) else UniPoly([other])))

    def __rsub__(self, other):
        return UniPoly([other]) - self

    def __mul__(self, other):
        if not isinstance(other, UniPoly):
            return UniPoly([v * other for v in self.c])
        if not self.c or not other.c:
            return UniPoly()
        out = [Fraction(0)] * (len(self.c) + len(other.c) - 1)
        for i, a in enumerate(self.c):
            if a:
                for j, b in enumerate(other.c):
                    out[i + j] += a * b
        return UniPoly(out)

    __rmul__ = __mul__

    def __pow__(self, k):
        out, base = UniPoly([1]), self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def __call__(self, x):
        acc = Fraction(0) if not isinstance(x, float) else 0.0
        for v in reversed(self.c):
            acc = acc * x + v
        return acc

    def __divmod__(self, other):
        if not other.c:
            raise ZeroDivisionError("polynomial division by zero")
        r = list(self.c)
        q = [Fraction(0)] * max(0, len(r) - len(other.c) + 1)
        lc = other.lc
        for k in range(len(r) - len(other.c), -1, -1):
            f = r[k + len(other.c) - 1] / lc
            q[k] = f
            if f:
                for j, b in enumerate(other.c):
                    r[k + j] -= f * b
        return UniPoly(q), UniPoly(r)

    def __floordiv__(self, other):
        return divmod(self, other)[0]

    def __mod__(self, other):
        return divmod(self, other)[1]

    def exquo(self, other):
        q, r = divmod(self, other)
        if r:
            raise ArithmeticError("inexact polynomial division")
        return q

    def derivative(self):
        return UniPoly([i * v for i, v in enumerate(self.c)][1:])

    def monic(self):
        return self * (1 / self.lc) if self.c else self

    def __repr__(self):
        return f"UniPoly({[format_rational(v) for v in self.c]})"

    def to_json(self, var="lambda"):
        terms = [{"exp": [i], "coef": format_rational(v)} for i, v in enumerate(self.c) if v]
        return {"vars": [var], "terms": terms}


def uni_gcd(a, b):
    """Monic gcd over Q."""
    while b:
        a, b = b, a % b
    return a.monic() if a else a


def squarefree_decomposition(p):
    """Yun's algorithm: list of (factor, multiplicity) with monic squarefree factors."""
    if p.degree < 1:
        return []
    p = p.monic()
    out = []
    dp = p.derivative()
    a = uni_gcd(p, dp)
    b = p.exquo(a)
    c = dp.exquo(a)
    d = c - b.derivative()
    i = 1
    while b.degree > 0:
        a = uni_gcd(b, d)
        if a.degree > 0:
            out.append((a, i))
        b = b.exquo(a)
        c = d.exquo(a)
        d = c - b.derivative()
        i += 1
    return out


def rational_roots(p, extra_candidates=()):
    """Rational roots with multiplicity, plus the degree left unexplained.

    Candidates come from numeric roots of each squarefree factor (rounded
    through a bounded denominator) and from ``extra_candidates``; every
    candidate is confirmed by exact evaluation, so no false roots appear.
    """
    found = []
    left = p.degree if p else 0
    for f, mult in squarefree_decomposition(p):
        cands = set(Fraction(c) for c in extra_candidates)
        coeffs = [float(v) for v in reversed(f.c)]
        if f.degree >= 1:
            for z in np.roots(coeffs):
                if abs(z.imag) < 1e-6:
                    for bound in (10**3, 10**6, 10**9):
                        cands.add(Fraction(float(z.real)).limit_denominator(bound))
        for r in sorted(cands):
            if f.degree >= 1 and f(r) == 0:
                f = f.exquo(UniPoly([-r, 1]))
                found.append((r, mult))
                left -= mult
    merged = {}
    for r, m in found:
        merged[r] = merged.get(r, 0) + m
    return sorted(merged.items()), left


# -- integer polynomial helpers used by the fraction-free determinant ----


def _ip_trim(a):
    while a and a[-1] == 0:
        a.pop()
    return a


def _ip_sub(a, b):
    n = max(len(a), len(b))
    return _ip_trim([(a[i] if i < len(a) else 0) - (b[i] if i < len(b) else 0) for i in range(n)])


def _ip_mul(a, b):
    if not a or not b:
        return []
    out = [0] * (len(a) + len(b) - 1)
    for i, u in enumerate(a):
        if u:
            for j, v in enumerate(b):
                out[i + j] += u * v
    return out


def _ip_exquo(a, b):
    """Exact division of integer polynomials."""
    a = list(a)
    if not a:
        return []
    q = [0] * (len(a) - len(b) + 1)
    lc = b[-1]
    for k in range(len(a) - len(b), -1, -1):
        num = a[k + len(b) - 1]
        if num % lc:
            raise ArithmeticError("inexact integer polynomial division")
        f = num // lc
        q[k] = f
        if f:
            for j, v in enumerate(b):
                a[k + j] -= f * v
    if any(a):
        raise ArithmeticError("inexact integer polynomial division")
    return _ip_trim(q)


def bareiss_det_univariate(m):
    """Determinant of a square matrix of integer polynomials (ascending lists)."""
    m = [[list(e) for e in row] for row in m]
    n = len(m)
    if n == 0:
        return [1]
    sign, prev = 1, [1]
    for k in range(n - 1):
        piv = next((i for i in range(k, n) if m[i][k]), None)
        if piv is None:
            return []
        if piv != k:
            m[k], m[piv] = m[piv], m[k]
            sign = -sign
        akk = m[k][k]
        for i in range(k + 1, n):
            aik = m[i][k]
            for j in range(k + 1, n):
                num = _ip_sub(_ip_mul(m[i][j], akk), _ip_mul(aik, m[k][j]))
                m[i][j] = _ip_exquo(num, prev) if prev != [1] else num
            m[i][k] = []
        prev = akk
    det = m[n - 1][n - 1]
    return [sign * v for v in det]


def char_poly_exact(matrix, method="auto", cap=CHARPOLY_CAP):
    """det(M - lambda I) as a UniPoly with exact rational coefficients.

    With C = den * M this is den**(-N) * det(C - den*lambda*I).  "bareiss"
    eliminates over integer polynomials; "modular" runs the Hessenberg
    kernel modulo enough primes to cover a Hadamard-type coefficient bound
    and recombines by CRT.
    """
    n = matrix.size
    if n > cap:
        raise CapExceeded(f"characteristic polynomial limited to {cap} states, matrix has {n}")
    if method == "auto":
        method = "bareiss" if n <= BAREISS_CHARPOLY_MAX else "modular"
    den = matrix.den
    c = matrix.integer_dense()
    if method == "bareiss":
        rows = [[[int(c[i, j])] if c[i, j] else [] for j in range(n)] for i in range(n)]
        for i in range(n):
            rows[i][i] = _ip_trim([int(c[i, i]), -den])
        det = bareiss_det_univariate(rows)
        scale = Fraction(1, den**n)
        return UniPoly([v * scale for v in det])
    if method != "modular":
        raise ValidationError(f"unknown method {method!r}")
    colnorm = int(np.abs(c).sum(axis=0).max()) if n else 0
    bound = max((math.comb(n, m) * colnorm**m).bit_length() for m in range(n + 1))
    coeffs = linalg.charpoly_integer(c, bound)
    # det(M - lambda I) = (-1)^n den^-n sum_k c_k (den lambda)^k
    sign = -1 if n % 2 else 1
    return UniPoly([Fraction(sign * ck * den**k, den**n) for k, ck in enumerate(coeffs)])


def subset_eigenvalues(tree):
    """(y_S + x_S, T of the complement) for every vertex subset S."""
    verts = tree.vertices
    if len(verts) > SUBSET_CAP:
        raise CapExceeded(f"subset product limited to {SUBSET_CAP} vertices")
    leaves = tree.leaves() if verts else []
    out = []
    for k in range(len(verts) + 1):
        for S in combinations(verts, k):
            s = set(S)
            y = sum((tree.y[l] for l in leaves if tree.downset(l) <= s), Fraction(0))
            x = sum((tree.x[v] for v in S), Fraction(0))
            mult = math.prod(tree.threshold[v] for v in verts if v not in s)
            out.append((frozenset(S), y + x, mult))
    return out


def product_formula_roots(tree):
    merged = {}
    for _, lam, m in subset_eigenvalues(tree):
        merged[lam] = merged.get(lam, 0) + m
    return sorted(merged.items())


def char_poly_product_formula(tree):
    """(-1)^|Omega| prod_S (lambda - y_S - x_S)^(T of the complement)."""
    roots = product_formula_roots(tree)
    size = StateSpace(tree).size
    p = UniPoly.from_roots(roots)
    return -p if size % 2 else p


# == multivariate =========================================================

_BITS = 12
_MASK = (1 << _BITS) - 1


def _num(v):
    """Store integral coefficients as int: much faster than Fraction."""
    if isinstance(v, Fraction) and v.denominator == 1:
        return v.numerator
    return v


class MultiPoly:
    """Sparse polynomial over Q in named variables; keys pack exponents."""

    __slots__ = ("vars", "terms")

    def __init__(self, variables, terms=None):
        self.vars = tuple(variables)
        self.terms = {k: _num(v) for k, v in (terms or {}).items() if v}

    # -- packing ---------------------------------------------------------

    @property
    def nvars(self):
        return len(self.vars)

    def pack(self, exp):
        key = 0
        for e in exp:
            if not 0 <= e <= _MASK:
                raise CapExceeded("exponent too large for packed monomials")
            key = (key << _BITS) | e
        return key

    def unpack(self, key):
        out = []
        for _ in range(self.nvars):
            out.append(key & _MASK)
            key >>= _BITS
        return tuple(reversed(out))

    def _shift(self, i):
        return _BITS * (self.nvars - 1 - i)

    # -- constructors ----------------------------------------------------

    @classmethod
    def const(cls, variables, c):
        return cls(variables, {0: Fraction(c)} if c else {})

    @classmethod
    def var(cls, variables, name):
        p = cls(variables)
        i = p.vars.index(name)
        return cls(variables, {1 << p._shift(i): 1})

    @classmethod
    def from_dict(cls, variables, mapping):
        p = cls(variables)
        return cls(variables, {p.pack(e): Fraction(c) for e, c in mapping.items()})

    def _new(self, terms):
        return MultiPoly(self.vars, terms)

    def _coerce(self, other):
        if isinstance(other, MultiPoly):
            if other.vars != self.vars:
                raise ValidationError("variable order mismatch")
            return other
        return MultiPoly.const(self.vars, other)

    # -- arithmetic ------------------------------------------------------

    def __bool__(self):
        return bool(self.terms)

    def __eq__(self, other):
        return self.terms == self._coerce(other).terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def __add__(self, other):
        other = self._coerce(other)
        out = dict(self.terms)
        for k, v in other.terms.items():
            out[k] = out.get(k, 0) + v
        return self._new(out)

    __radd__ = __add__

    def __neg__(self):
        return self._new({k: -v for k, v in self.terms.items()})

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, MultiPoly):
            other = _num(Fraction(other))
            return self._new({k: v * other for k, v in self.terms.items()})
        other = self._coerce(other)
        out = {}
        for k1, v1 in self.terms.items():
            for k2, v2 in other.terms.items():
                k = k1 + k2
                out[k] = out.get(k, 0) + v1 * v2
        return self._new(out)

    __rmul__ = __mul__

    def __pow__(self, k):
        out, base = MultiPoly.const(self.vars, 1), self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def lead(self):
        k = max(self.terms)
        return k, self.terms[k]

    def is_const(self):
        return all(k == 0 for k in self.terms)

    def const_value(self):
        return Fraction(self.terms.get(0, 0))

    def exquo(self, other):
        """Exact division; raises ArithmeticError if ``other`` does not divide."""
        other = self._coerce(other)
        if not other:
            raise ZeroDivisionError("division by the zero polynomial")
        lk, lc = other.lead()
        lexp = self.unpack(lk)
        rem = dict(self.terms)
        q = {}
        while rem:
            k = max(rem)
            c = rem[k]
            e = self.unpack(k)
            if any(a < b for a, b in zip(e, lexp)):
                raise ArithmeticError("inexact multivariate division")
            dk = k - lk
            if isinstance(c, int) and isinstance(lc, int) and c % lc == 0:
                f = c // lc
            else:
                f = _num(Fraction(c) / lc)
            q[dk] = f
            for k2, v2 in other.terms.items():
                kk = dk + k2
                nv = rem.get(kk, 0) - f * v2
                if nv:
                    rem[kk] = nv
                else:
                    rem.pop(kk, None)
        return self._new(q)

    def degree_in(self, i):
        s = self._shift(i)
        return max(((k >> s) & _MASK for k in self.terms), default=-1)

    def total_degree(self):
        return max((sum(self.unpack(k)) for k in self.terms), default=-1)

    def coeffs_in(self, i):
        """Split as sum_d c_d * v_i^d; returns {d: MultiPoly without v_i}."""
        s = self._shift(i)
        out = {}
        for k, v in self.terms.items():
            d = (k >> s) & _MASK
            out.setdefault(d, {})[k - (d << s)] = v
        return {d: self._new(t) for d, t in out.items()}

    def mul_var_power(self, i, d):
        add = d << self._shift(i)
        return self._new({k + add: v for k, v in self.terms.items()})

    def evaluate(self, point):
        """Evaluate at a mapping or sequence of exact values."""
        if isinstance(point, dict):
            point = [point[v] for v in self.vars]
        total = Fraction(0)
        for k, c in self.terms.items():
            t = c
            for e, x in zip(self.unpack(k), point):
                if e:
                    t *= Fraction(x) ** e
            total += t
        return total

    def evaluate_mod(self, point, p):
        total = 0
        for k, c in self.terms.items():
            c = Fraction(c)
            t = c.numerator * pow(c.denominator, -1, p) % p
            for e, x in zip(self.unpack(k), point):
                if e:
                    t = t * pow(x, e, p) % p
            total += t
        return total % p

    def integer_content(self):
        """Positive rational c with self / c having coprime integer coefficients."""
        if not self.terms:
            return Fraction(1)
        den = 1
        for v in self.terms.values():
            den = math.lcm(den, Fraction(v).denominator)
        g = 0
        for v in self.terms.values():
            g = math.gcd(g, int(v * den))
        c = Fraction(g, den)
        return -c if self.lead()[1] < 0 else c

    def normalized(self):
        """Primitive integer form with positive leading coefficient."""
        return self * (1 / self.integer_content()) if self.terms else self

    def items(self):
        for k in sorted(self.terms, reverse=True):
            yield self.unpack(k), Fraction(self.terms[k])

    def to_json(self):
        return {
            "vars": list(self.vars),
            "terms": [{"exp": list(e), "coef": format_rational(c)} for e, c in self.items()],
        }

    def __repr__(self):
        if not self.terms:
            return "0"
        parts = []
        for e, c in self.items():
            mono = "*".join(f"{v}^{d}" if d > 1 else v for v, d in zip(self.vars, e) if d)
            cs = format_rational(c)
            parts.append(f"{cs}*{mono}" if mono and c != 1 else (mono or cs))
        return " + ".join(parts)


def bareiss_det(m):
    """Determinant of a square matrix of MultiPoly entries, fraction-free."""
    m = [list(row) for row in m]
    n = len(m)
    if n == 0:
        raise ValidationError("empty matrix")
    variables = m[0][0].vars
    sign, prev = 1, MultiPoly.const(variables, 1)
    for k in range(n - 1):
        piv = next((i for i in range(k, n) if m[i][k]), None)
        if piv is None:
            return MultiPoly(variables)
        if piv != k:
            m[k], m[piv] = m[piv], m[k]
            sign = -sign
        akk = m[k][k]
        for i in range(k + 1, n):
            aik = m[i][k]
            for j in range(k + 1, n):
                m[i][j] = (m[i][j] * akk - aik * m[k][j]).exquo(prev)
            m[i][k] = MultiPoly(variables)
        prev = akk
    return m[n - 1][n - 1] * sign


def _content(p, i):
    """gcd of the coefficients of p viewed as a polynomial in variable i."""
    g = None
    for c in p.coeffs_in(i).values():
        g = c if g is None else poly_gcd(g, c)
        if g.is_const():
            return MultiPoly.const(p.vars, 1)
    return g if g is not None else MultiPoly.const(p.vars, 1)


def _prem(a, b, i):
    """Pseudo-remainder of a by b in variable i."""
    db = b.degree_in(i)
    lcb = b.coeffs_in(i)[db]
    r = a
    da = r.degree_in(i)
    e = da - db + 1
    while r and r.degree_in(i) >= db:
        dr = r.degree_in(i)
        lcr = r.coeffs_in(i)[dr]
        r = r * lcb - (b * lcr).mul_var_power(i, dr - db)
        e -= 1
    return r * (lcb**e) if e > 0 else r


def poly_gcd(a, b):
    """gcd up to a rational scalar, normalized to a primitive integer form.

    Recursive primitive PRS; the main variable is the last variable that
    occurs in either argument.
    """
    if not a:
        return b.normalized()
    if not b:
        return a.normalized()
    live = [i for i in range(a.nvars) if a.degree_in(i) > 0 or b.degree_in(i) > 0]
    if not live:
        return MultiPoly.const(a.vars, 1)
    i = live[-1]
    if a.degree_in(i) == 0 or b.degree_in(i) == 0:
        # one side is free of the main variable: gcd divides its content
        other, flat = (a, b) if b.degree_in(i) == 0 else (b, a)
        return poly_gcd(_content(other, i), flat)
    ca, cb = _content(a, i), _content(b, i)
    pa, pb = a.exquo(ca), b.exquo(cb)
    c = poly_gcd(ca, cb)
    if pa.degree_in(i) < pb.degree_in(i):
        pa, pb = pb, pa
    while True:
        r = _prem(pa, pb, i)
        if not r:
            break
        if r.degree_in(i) == 0:
            pb = MultiPoly.const(a.vars, 1)
            break
        pa, pb = pb, r.exquo(_content(r, i))
    return (c * pb).normalized()


def adjugate_column_stationary(q):
    """Polynomial null vector W of a rank n-1 generator matrix Q (Q W = 0).

    Fraction-free elimination to echelon form, then back substitution with
    the free unknown set to the last pivot so every division is exact.
    """
    m = [list(row) for row in q]
    n = len(m)
    variables = m[0][0].vars
    zero = MultiPoly(variables)
    prev = MultiPoly.const(variables, 1)
    pivots = []
    r = 0
    for k in range(n):
        piv = next((i for i in range(r, n) if m[i][k]), None)
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        akk = m[r][k]
        for i in range(r + 1, n):
            aik = m[i][k]
            for j in range(k + 1, n):
                m[i][j] = (m[i][j] * akk - aik * m[r][j]).exquo(prev)
            m[i][k] = zero
        prev = akk
        pivots.append((r, k))
        r += 1
    free = [k for k in range(n) if k not in {c for _, c in pivots}]
    if len(free) != 1:
        raise ValidationError(f"matrix nullity is {len(free)}, expected 1")
    f = free[0]
    w = [zero] * n
    w[f] = prev
    for row, col in reversed(pivots):
        s = zero
        for j in range(col + 1, n):
            if m[row][j] and w[j]:
                s = s + m[row][j] * w[j]
        w[col] = (-s).exquo(m[row][col])
    return w


# == symbolic chains and the one-dimensional conjecture ==================


def rate_variables(tree):
    """Variable names: sources by vertex order, then topple rates."""
    srcs = [v for v in tree.vertices if v in set(tree.source_vertices())]
    return [f"y{v}" for v in srcs] + [f"x{v}" for v in tree.vertices], srcs


def symbolic_generator(tree, model=LANDSLIDE):
    """Generator matrix Q with Q[i][j] = sum of rates sending j to i, minus the exit rate."""
    names, srcs = rate_variables(tree)
    space = StateSpace(tree)
    n = space.size
    gens = [(SOURCE, v, f"y{v}") for v in srcs] + [(model, v, f"x{v}") for v in tree.vertices]
    acc = [[{} for _ in range(n)] for _ in range(n)]
    for kind, v, name in gens:
        var = MultiPoly.var(names, name)
        key = next(iter(var.terms))
        tab = operator_table(space, kind, v)
        for j in range(n):
            i = int(tab[j])
            if i != j:
                acc[i][j][key] = acc[i][j].get(key, 0) + 1
                acc[j][j][key] = acc[j][j].get(key, 0) - 1
    return [[MultiPoly(names, {k: Fraction(c) for k, c in e.items()}) for e in row] for row in acc], names


def conjecture_k(thresholds):
    big = [i + 1 for i, t in enumerate(thresholds) if t > 1]
    return min(big) if big else len(thresholds) + 1


def conjectured_factors(thresholds):
    """Linear factors of the conjectured 1-D partition function.

    Each factor is (set of x indices, exponent) standing for
    (y1 + sum of those x)^exponent.  When every threshold is 1 the index k
    is taken as n + 1 so the second product is empty.
    """
    n = len(thresholds)
    k = conjecture_k(thresholds)
    out = [((i,), thresholds[i - 1]) for i in range(1, k)]
    tail = list(range(k, n + 1))
    for size in range(1, len(tail) + 1):
        for S in combinations(tail, size):
            out.append((S, thresholds[min(S) - 1]))
    return out


def conjectured_z(thresholds):
    names = ["y1"] + [f"x{i}" for i in range(1, len(thresholds) + 1)]
    z = MultiPoly.const(names, 1)
    y = MultiPoly.var(names, "y1")
    for S, e in conjectured_factors(thresholds):
        lin = y
        for i in S:
            lin = lin + MultiPoly.var(names, f"x{i}")
        z = z * lin**e
    return z


# -- modular univariate helpers for the line engine ---------------------


def _pm_trim(a):
    while a and a[-1] == 0:
        a.pop()
    return a


def _pm_mul(a, b, p):
    if not a or not b:
        return []
    out = [0] * (len(a) + len(b) - 1)
    for i, u in enumerate(a):
        if u:
            for j, v in enumerate(b):
                out[i + j] = (out[i + j] + u * v) % p
    return _pm_trim(out)


def _pm_divmod(a, b, p):
    a = list(a)
    inv = pow(b[-1], p - 2, p)
    q = [0] * max(0, len(a) - len(b) + 1)
    for k in range(len(a) - len(b), -1, -1):
        f = a[k + len(b) - 1] * inv % p
        q[k] = f
        if f:
            for j, v in enumerate(b):
                a[k + j] = (a[k + j] - f * v) % p
    return _pm_trim(q), _pm_trim(a[: len(b) - 1])


def _pm_sub(a, b, p):
    n = max(len(a), len(b))
    return _pm_trim([((a[i] if i < len(a) else 0) - (b[i] if i < len(b) else 0)) % p for i in range(n)])


def _pm_monic(a, p):
    inv = pow(a[-1], p - 2, p)
    return [v * inv % p for v in a]


def _pm_gcd(a, b, p):
    while b:
        a, b = b, _pm_divmod(a, b, p)[1]
    return _pm_monic(a, p) if a else a


def _pm_lcm(a, b, p):
    g = _pm_gcd(a, b, p)
    return _pm_monic(_pm_divmod(_pm_mul(a, b, p), g, p)[0], p)


def _pm_ratrecon(m, u, num_deg, p):
    """n/d = u mod m with deg n <= num_deg; returns monic reduced d or None."""
    r0, r1 = m, u
    t0, t1 = [], [1]
    while r1 and len(r1) - 1 > num_deg:
        q, r = _pm_divmod(r0, r1, p)
        r0, r1 = r1, r
        t0, t1 = t1, _pm_sub(t0, _pm_mul(q, t1, p), p)
    if not t1:
        return None
    g = _pm_gcd(r1, t1, p) if r1 else _pm_monic(t1, p)
    d = _pm_divmod(t1, g, p)[0] if g else t1
    return _pm_monic(d, p)


def _line_denominator(tree, model, thresholds, p, rng):
    """LCD of the stationary law restricted to a random line, monic mod p.

    Also returns the conjectured partition function restricted to the
    same line.
    """
    names, srcs = rate_variables(tree)
    nv = len(names)
    a = [rng.randrange(1, p) for _ in range(nv)]
    b = [rng.randrange(1, p) for _ in range(nv)]
    space = StateSpace(tree)
    n = space.size
    gens = [operator_table(space, SOURCE, v) for v in srcs]
    gens += [operator_table(space, model, v) for v in tree.vertices]
    npts = 2 * n + 3
    pts, vals = [], []
    s = 0
    idx = np.arange(n)
    while len(pts) < npts:
        s += 1
        rates = [(ai + s * bi) % p for ai, bi in zip(a, b)]
        q = np.zeros((n, n), dtype=np.int64)
        for r, tab in zip(rates, gens):
            np.add.at(q, (tab, idx), r)
            q[idx, idx] -= r
        q %= p
        q[n - 1, :] = 1
        rhs = np.zeros(n, dtype=np.int64)
        rhs[n - 1] = 1
        x = kernels.solve_mod(q, rhs, p)
        if x is None:
            continue
        pts.append(s)
        vals.append([int(v) for v in x])
    # Lagrange interpolation of every state's values at once
    m = [1]
    for s in pts:
        m = _pm_mul(m, [(-s) % p, 1], p)
    basis = []
    for i, s in enumerate(pts):
        li, _ = _pm_divmod(m, [(-s) % p, 1], p)
        denom = 1
        for j, t in enumerate(pts):
            if j != i:
                denom = denom * (s - t) % p
        inv = pow(denom, p - 2, p)
        basis.append([c * inv % p for c in li] + [0] * (npts - len(li)))
    # p < 2**26 and fewer than 2**8 points keep these int64 sums exact
    vals = np.array(vals, dtype=np.int64)
    basis = np.array(basis, dtype=np.int64)
    interp = (vals.T @ basis) % p
    lcd = [1]
    for t in range(n):
        u = _pm_trim([int(c) for c in interp[t]])
        d = _pm_ratrecon(m, u, n - 1, p)
        if d is None:
            return None, None
        lcd = _pm_lcm(lcd, d, p)
    conj = [1]
    for S, e in conjectured_factors(thresholds):
        c0 = (a[0] + sum(a[i] for i in S)) % p
        c1 = (b[0] + sum(b[i] for i in S)) % p
        for _ in range(e):
            conj = _pm_mul(conj, [c0, c1], p)
    return lcd, _pm_monic(conj, p)


SYMBOLIC_MAX_STATES = 9


def verify_conjecture_1d(thresholds, engine="auto", lines=2, seed=0):
    """Compare the partition function of the 1-D landslide chain with the conjecture.

    The "symbolic" engine computes the null vector W of the generator with
    polynomial entries, G = gcd of its entries and checks
    sum(W) = c * Z_conj * G.  The "lines" engine restricts the rates to
    random lines modulo a prime, reconstructs every stationary probability
    as a rational function on the line and compares the monic lcm of their
    denominators with the restricted conjecture.
    """
    from .arborescence import line_tree

    thresholds = [int(t) for t in thresholds]
    if not thresholds or any(t < 1 for t in thresholds):
        raise ValidationError("thresholds must be positive integers")
    if len(thresholds) > 4 or max(thresholds) > 3:
        raise CapExceeded("conjecture checker limited to n <= 4 and thresholds <= 3")
    tree = line_tree(thresholds, y=1, x=[1] * len(thresholds))
    size = math.prod(t + 1 for t in thresholds)
    if engine == "auto":
        engine = "symbolic" if size <= SYMBOLIC_MAX_STATES else "lines"
    zc = conjectured_z(thresholds)
    report = {
        "thresholds": thresholds,
        "k": conjecture_k(thresholds),
        "k_defaulted": all(t == 1 for t in thresholds),
        "engine": engine,
        "conjecturedZ": zc,
    }
    if engine == "symbolic":
        q, names = symbolic_generator(tree, LANDSLIDE)
        w = adjugate_column_stationary(q)
        g = None
        for v in w:
            g = v if g is None else poly_gcd(g, v)
        total = MultiPoly(names)
        for v in w:
            total = total + v
        z = total.exquo(g).normalized()
        report["computedZ"] = z
        report["match"] = z == zc.normalized()
        return report
    if engine != "lines":
        raise ValidationError(f"unknown engine {engine!r}")
    rng = random.Random(seed)
    primes = linalg.primes_below(26, lines, skip=seed % 7)
    results = []
    ok = True
    for p in primes:
        lcd, conj = _line_denominator(tree, LANDSLIDE, thresholds, p, rng)
        same = lcd is not None and lcd == conj
        ok = ok and same
        results.append({"prime": p, "degree": None if lcd is None else len(lcd) - 1, "match": same})
    report["computedZ"] = None
    report["lines"] = results
    report["match"] = ok
    return report


def report_to_json(report):
    out = {}
    for k, v in report.items():
        out[k] = v.to_json() if isinstance(v, (MultiPoly, UniPoly)) else v
    return out
