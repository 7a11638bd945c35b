"""Transition matrices, ergodicity and stationary distributions.

Matrices are column-stochastic: entry (i, j) is the probability of moving
from state j to state i.  They are stored as sparse integer columns over a
common denominator, which keeps every entry exact without paying for a
Fraction per zero.
"""

import math
from fractions import Fraction

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from . import linalg
from .arborescence import format_rational, validate
from .configuration import StateSpace
from .errors import CapExceeded, HypothesisUnmet, NotErgodic, ValidationError
from .operators import LANDSLIDE, SOURCE, TRICKLE, operator_table

EXACT_CAP = 4096
BAREISS_MAX = 48


class TransitionMatrix:
    """Exact column-stochastic matrix: entry (i, j) = cols[j][i] / den."""

    def __init__(self, cols, den, model=None, space=None):
        self.cols = cols
        self.den = int(den)
        self.model = model
        self.space = space

    @classmethod
    def from_dense(cls, rows, model=None):
        """Build from a square array of rationals given row by row."""
        n = len(rows)
        entries = [[Fraction(v) for v in row] for row in rows]
        if any(len(r) != n for r in entries):
            raise ValidationError("matrix must be square")
        den = 1
        for r in entries:
            for v in r:
                den = math.lcm(den, v.denominator)
        cols = [{} for _ in range(n)]
        for i, r in enumerate(entries):
            for j, v in enumerate(r):
                if v:
                    cols[j][i] = int(v * den)
        return cls(cols, den, model=model)

    @property
    def size(self):
        return len(self.cols)

    def entry(self, i, j):
        return Fraction(self.cols[j].get(i, 0), self.den)

    def to_dense(self):
        n = self.size
        out = [[Fraction(0)] * n for _ in range(n)]
        for j, col in enumerate(self.cols):
            for i, a in col.items():
                out[i][j] = Fraction(a, self.den)
        return out

    def integer_dense(self):
        """den * M as an int64 array."""
        n = self.size
        out = np.zeros((n, n), dtype=np.int64)
        for j, col in enumerate(self.cols):
            for i, a in col.items():
                out[i, j] = a
        return out

    def to_float(self):
        return self.integer_dense() / float(self.den)

    def column_sums(self):
        return [Fraction(sum(col.values()), self.den) for col in self.cols]

    def apply(self, vec):
        """Exact product M v for a vector of rationals."""
        out = [Fraction(0)] * self.size
        for j, col in enumerate(self.cols):
            vj = vec[j]
            if vj:
                for i, a in col.items():
                    out[i] += a * vj
        return [v / self.den for v in out]

    def support(self):
        rows, cols = [], []
        for j, col in enumerate(self.cols):
            for i, a in col.items():
                if a:
                    rows.append(i)
                    cols.append(j)
        n = self.size
        # edge j -> i for every positive entry
        return csr_matrix((np.ones(len(rows), dtype=np.int8), (cols, rows)), shape=(n, n))

    def to_json(self):
        return [[format_rational(v) for v in row] for row in self.to_dense()]


def chain_generators(tree, model):
    """(kind, vertex, rate) for every generator of the chain, in canonical order."""
    if model not in (TRICKLE, LANDSLIDE):
        raise ValidationError(f"unknown model {model!r}")
    srcs = set(tree.source_vertices()) if tree.vertices else set()
    gens = [(SOURCE, v, tree.y[v]) for v in tree.vertices if v in srcs]
    gens += [(model, v, tree.x[v]) for v in tree.vertices]
    return gens


def build_transition(tree, model, space=None, strict=True):
    """M = sum of rate * (0/1 matrix of the generator)."""
    problems = validate(tree, strict=strict)
    if problems:
        raise ValidationError("; ".join(problems))
    space = space or StateSpace(tree)
    gens = chain_generators(tree, model)
    den = 1
    for _, _, r in gens:
        den = math.lcm(den, Fraction(r).denominator)
    n = space.size
    cols = [{} for _ in range(n)]
    for kind, v, rate in gens:
        a = int(rate * den)
        if not a:
            continue
        tab = operator_table(space, kind, v).tolist()
        for j, i in enumerate(tab):
            col = cols[j]
            col[i] = col.get(i, 0) + a
    return TransitionMatrix(cols, den, model=model, space=space)


def _period(adj, n):
    """Period of a strongly connected digraph given as csr adjacency."""
    level = np.full(n, -1, dtype=np.int64)
    level[0] = 0
    frontier = [0]
    g = 0
    indptr, indices = adj.indptr, adj.indices
    while frontier:
        nxt = []
        for u in frontier:
            for w in indices[indptr[u] : indptr[u + 1]]:
                if level[w] < 0:
                    level[w] = level[u] + 1
                    nxt.append(w)
                else:
                    g = math.gcd(g, int(level[u] + 1 - level[w]))
        frontier = nxt
    return g


def is_ergodic(matrix):
    """Strongly connected and aperiodic support digraph."""
    n = matrix.size
    adj = matrix.support()
    count, _ = connected_components(adj, directed=True, connection="strong")
    if count != 1:
        return False
    return _period(adj, n) == 1


def closed_class_count(matrix):
    """Number of closed communicating classes (the nullity of M - I)."""
    adj = matrix.support().tocoo()
    count, label = connected_components(matrix.support(), directed=True, connection="strong")
    leaving = np.zeros(count, dtype=bool)
    for u, w in zip(adj.row, adj.col):
        if label[u] != label[w]:
            leaving[label[u]] = True
    return int(np.count_nonzero(~leaving))


def _verifier(matrix):
    den = matrix.den

    def verify(nums, d):
        if sum(nums) != d:
            return False
        acc = [0] * matrix.size
        for j, col in enumerate(matrix.cols):
            nj = nums[j]
            if nj:
                for i, a in col.items():
                    acc[i] += a * nj
        return all(a == den * v for a, v in zip(acc, nums))

    return verify


def stationary_exact(matrix, method="auto", cap=EXACT_CAP):
    """Unique solution of M pi = pi with entries summing to one.

    The system (M - I) pi = 0 has its last equation replaced by the
    normalization.  ``method`` is "bareiss" (fraction-free elimination),
    "lifting" (p-adic lifting with exact verification) or "auto", which
    picks Bareiss for small matrices.
    """
    n = matrix.size
    if n > cap:
        raise CapExceeded(f"exact solve limited to {cap} states, chain has {n}")
    if closed_class_count(matrix) != 1:
        raise NotErgodic("stationary distribution is not unique (more than one closed class)")
    if method == "auto":
        method = "bareiss" if n <= BAREISS_MAX else "lifting"
    den = matrix.den
    if method == "bareiss":
        a = [[Fraction(0)] * n for _ in range(n)]
        for j, col in enumerate(matrix.cols):
            for i, v in col.items():
                a[i][j] = Fraction(v, den)
        for i in range(n):
            a[i][i] -= 1
        a[n - 1] = [Fraction(1)] * n
        b = [0] * (n - 1) + [1]
        x = linalg.bareiss_solve(a, b)
        if x is None:
            raise NotErgodic("singular stationary system")
        return x
    if method != "lifting":
        raise ValidationError(f"unknown method {method!r}")
    a = matrix.integer_dense()
    a[np.diag_indices(n)] -= den
    a[n - 1, :] = 1
    b = np.zeros(n, dtype=np.int64)
    b[n - 1] = 1
    res = linalg.dixon_solve(a, b, _verifier(matrix))
    if res is None:
        raise NotErgodic("singular stationary system")
    nums, d = res
    return [Fraction(v, d) for v in nums]


def master_equation_residual(matrix, dist):
    """max_t |(M pi)(t) - pi(t)|; zero exactly when dist is stationary."""
    out = matrix.apply(dist)
    return max((abs(a - b) for a, b in zip(out, dist)), default=Fraction(0))


# -- closed forms ---------------------------------------------------------


def _y_cum(tree):
    return {v: tree.cumulative_source_rate(v) for v in tree.vertices}


def rho(tree):
    """Per-vertex factors of the trickle product measure, as lists over h."""
    Y = _y_cum(tree)
    out = {}
    for v in tree.vertices:
        T, x = tree.threshold[v], tree.x[v]
        terms = [Y[v] ** h * x ** (T - h) for h in range(T + 1)]
        z = sum(terms, Fraction(0))
        if z == 0:
            raise ValidationError(f"degenerate product factor at {v!r} (x = Y = 0)")
        out[v] = [t / z for t in terms]
    return out


def _check_landslide_hypothesis(tree):
    if not tree.vertices:
        return
    root = tree.root
    bad = [v for v in tree.vertices if v != root and tree.threshold[v] != 1]
    if bad:
        raise HypothesisUnmet(
            "landslide product form needs threshold 1 at every non-root vertex; "
            f"violated at {', '.join(bad)}"
        )


def mu(tree):
    """Per-vertex factors of the landslide product measure."""
    _check_landslide_hypothesis(tree)
    Y = _y_cum(tree)
    out = {}
    for v in tree.vertices:
        T, x = tree.threshold[v], tree.x[v]
        s = Y[v] + x
        if s == 0:
            raise ValidationError(f"degenerate product factor at {v!r} (x = Y = 0)")
        out[v] = [Y[v] ** h * x / s ** (h + 1) for h in range(T)] + [Y[v] ** T / s**T]
    return out


def _product(space, factors):
    tree = space.tree
    cols = [factors[v] for v in tree.vertices]
    out = []
    for t in space.digits.tolist():
        p = Fraction(1)
        for c, f in zip(t, cols):
            p *= f[c]
        out.append(p)
    return out


def stationary_product_trickle(tree, space=None):
    return _product(space or StateSpace(tree), rho(tree))


def stationary_product_landslide(tree, space=None):
    return _product(space or StateSpace(tree), mu(tree))


def partition_function_trickle(tree):
    Y = _y_cum(tree)
    z = Fraction(1)
    for v in tree.vertices:
        T, x = tree.threshold[v], tree.x[v]
        z *= sum((Y[v] ** i * x ** (T - i) for i in range(T + 1)), Fraction(0))
    return z


def partition_function_landslide(tree):
    _check_landslide_hypothesis(tree)
    Y = _y_cum(tree)
    z = Fraction(1)
    for v in tree.vertices:
        z *= (Y[v] + tree.x[v]) ** tree.threshold[v]
    return z


def common_denominator(dist):
    d = 1
    for p in dist:
        d = math.lcm(d, Fraction(p).denominator)
    return d


# -- leaf recursion -------------------------------------------------------


def derived_chain(tree, leaf):
    """Rates of the chain on the tree minus ``leaf``.

    The leaf's source rate moves to its successor and every rate is divided
    by 1 - x_leaf.  The result is in extended-source mode.
    """
    tree._check(leaf)
    if tree.children(leaf):
        raise ValidationError(f"{leaf!r} is not a leaf")
    xl = tree.x[leaf]
    if xl == 1:
        raise ValidationError("derived chain undefined when the leaf topple rate is 1")
    scale = 1 - xl
    succ = tree.successor(leaf)
    sub = tree.delete_leaf(leaf)
    ys = {v: tree.y[v] / scale for v in sub.vertices}
    if succ is not None:
        ys[succ] = (tree.y[succ] + tree.y[leaf]) / scale
    xs = {v: tree.x[v] / scale for v in sub.vertices}
    return sub.with_rates(xs, ys, extended=True)


def winning_streak(tree, leaf):
    """The leaf factor pi(h) proportional to y^h x^(T - h)."""
    T, x, y = tree.threshold[leaf], tree.x[leaf], tree.y[leaf]
    terms = [y**h * x ** (T - h) for h in range(T + 1)]
    z = sum(terms, Fraction(0))
    return [t / z for t in terms]


def check_stationary_recursion(tree, leaf, model=TRICKLE):
    """True when pi x P' is stationary for the full chain.

    P' is computed by the exact solver on the derived chain, and the full
    chain is run in extended-source mode with the tree's own rates.
    """
    if model == LANDSLIDE and tree.threshold[leaf] != 1:
        raise HypothesisUnmet("leaf recursion for landslides needs threshold 1 at the leaf")
    full = tree.with_rates(extended=True)
    sub = derived_chain(full, leaf)
    sub_space = StateSpace(sub)
    if sub.vertices:
        p_sub = stationary_exact(build_transition(sub, model, sub_space, strict=False))
    else:
        p_sub = [Fraction(1)]
    pi = winning_streak(full, leaf)
    space = StateSpace(full)
    i = full.index[leaf]
    dist = []
    for t in space.digits.tolist():
        rest = t[:i] + t[i + 1 :]
        dist.append(pi[t[i]] * p_sub[sub_space.rank(tuple(rest))])
    matrix = build_transition(full, model, space, strict=False)
    return master_equation_residual(matrix, dist) == 0
