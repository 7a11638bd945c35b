"""Distance to stationarity: exact, simulated and bounded.

Exact distances are computed by powering the transition matrix on integer
numerators (the k-th power has denominator den**k), so total variation
values are exact rationals.  The Chernoff bound involves exp, which is
replaced by a certified rational upper bound when it is compared against
exact values.
"""

import csv
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import kernels
from .chain import build_transition, chain_generators, stationary_exact
from .configuration import StateSpace
from .errors import CapExceeded, ValidationError
from .operators import LANDSLIDE, operator_table

GENERATOR_ID = "splitmix64-counter"
EXACT_POWER_CAP = 4096
UPSET_STATE_CAP = 4096
_EXP_BITS = 64


# -- exact distances -----------------------------------------------------------


def _power_columns(matrix, starts):
    """Yield (k, P) with P[:, c] = den**k * M**k e_{starts[c]}, for k = 0, 1, ...

    Entries are Python ints held in an object array.
    """
    n = matrix.size
    p = np.zeros((n, len(starts)), dtype=object)
    p[:, :] = 0
    for c, s in enumerate(starts):
        p[s, c] = 1
    k = 0
    while True:
        yield k, p
        nxt = np.zeros_like(p)
        nxt[:, :] = 0
        for j, col in enumerate(matrix.cols):
            row = p[j]
            if not any(row):
                continue
            for i, a in col.items():
                nxt[i] = nxt[i] + a * row
        p = nxt
        k += 1


def _tv_columns(p, scale, pi_nums, pi_den):
    """Exact TV of every column of p / scale against pi_nums / pi_den."""
    diff = np.abs(p * pi_den - pi_nums[:, None] * scale)
    totals = diff.sum(axis=0)
    return [Fraction(int(t), 2 * scale * pi_den) for t in totals]


def _pi_integer(pi):
    den = 1
    for v in pi:
        den = math.lcm(den, v.denominator)
    nums = np.array([int(v * den) for v in pi], dtype=object)
    return nums, den


def distances(matrix, ks, initial=None, pi=None, cap=EXACT_POWER_CAP):
    """Exact TV distances at each k in ``ks``.

    ``initial`` is a state rank; None means the worst case over all initial
    states.  Returns {k: Fraction}.
    """
    n = matrix.size
    if n > cap:
        raise CapExceeded(f"exact distances limited to {cap} states, chain has {n}")
    pi = pi if pi is not None else stationary_exact(matrix)
    nums, pden = _pi_integer(pi)
    starts = list(range(n)) if initial is None else [initial]
    wanted = sorted(set(int(k) for k in ks))
    if not wanted:
        return {}
    if wanted[0] < 0:
        raise ValidationError("step counts must be non-negative")
    out = {}
    for k, p in _power_columns(matrix, starts):
        if k == wanted[0]:
            out[k] = max(_tv_columns(p, matrix.den**k, nums, pden))
            wanted.pop(0)
            if not wanted:
                break
    return out


def exact_distance(matrix, initial, k, pi=None):
    """TV distance of M**k applied to the point mass at ``initial`` (a rank)."""
    return distances(matrix, [k], initial=initial, pi=pi)[k]


def worst_case_distance(matrix, k, pi=None):
    return distances(matrix, [k], pi=pi)[k]


def all_distances(matrix, ks, pi=None):
    """{k: list of exact TV per initial state}."""
    pi = pi if pi is not None else stationary_exact(matrix)
    nums, pden = _pi_integer(pi)
    wanted = sorted(set(ks))
    out = {}
    for k, p in _power_columns(matrix, list(range(matrix.size))):
        if k == wanted[0]:
            out[k] = _tv_columns(p, matrix.den**k, nums, pden)
            wanted.pop(0)
            if not wanted:
                break
    return out


# -- bounds --------------------------------------------------------------------


def min_topple_rate(tree):
    p = min((Fraction(tree.x[v]) for v in tree.vertices), default=Fraction(0))
    if p <= 0:
        raise ValidationError("rate bound needs every topple rate to be positive")
    return p


def chernoff_threshold(tree):
    """Smallest real k for which the Chernoff bound applies: (n - 1) / p_x."""
    return Fraction(len(tree.vertices) - 1) / min_topple_rate(tree)


def chernoff_exponent(tree, k):
    """z with bound exp(-z), or None below the applicability threshold."""
    p = min_topple_rate(tree)
    n = len(tree.vertices)
    if k < chernoff_threshold(tree) or k <= 0:
        return None
    kp = k * p
    return (kp - (n - 1)) ** 2 / (2 * kp)


def chernoff_bound(tree, k):
    """Float value of the bound, or None when k is below (n - 1) / p_x."""
    z = chernoff_exponent(tree, k)
    if z is None:
        return None
    return math.exp(-float(z))


def exp_neg_upper(z):
    """A rational r with exp(-z) <= r for rational z >= 0.

    z is first rounded down to a dyadic rational, then exp(z') is bounded
    below by a partial Taylor sum; every term is positive so the partial sum
    never exceeds exp(z') <= exp(z).
    """
    z = Fraction(z)
    if z < 0:
        raise ValidationError("exponent must be non-negative")
    zd = Fraction(math.floor(z * 2**_EXP_BITS), 2**_EXP_BITS)
    total = Fraction(0)
    term = Fraction(1)
    i = 0
    while True:
        total += term
        i += 1
        term = term * zd / i
        if i > zd and term * 2**_EXP_BITS < total:
            break
    return 1 / total


def chernoff_upper(tree, k):
    """Certified rational upper bound of the Chernoff bound, or None."""
    z = chernoff_exponent(tree, k)
    return None if z is None else exp_neg_upper(z)


def binomial_tail(successes, k, p):
    """P(Bin(k, p) < successes) exactly."""
    p = Fraction(p)
    return sum(
        (math.comb(k, i) * p**i * (1 - p) ** (k - i) for i in range(min(successes, k + 1))),
        Fraction(0),
    )


def mixing_time_bound(tree, c):
    """2 (n + c - 1) / p_x."""
    return 2 * (len(tree.vertices) + Fraction(c) - 1) / min_topple_rate(tree)


def coupling_bound(table, probabilities, ks):
    """Probability that the right walk on the monoid is not yet constant after k steps.

    The walk starts at the identity and multiplies on the right by a
    generator drawn from ``probabilities``.  Returns {k: Fraction}.
    """
    probs = [Fraction(p) for p in probabilities]
    den = 1
    for p in probs:
        den = math.lcm(den, p.denominator)
    weights = [int(p * den) for p in probs]
    constant = np.array([table.is_constant(i) for i in range(table.size)])
    dist = np.zeros(table.size, dtype=object)
    dist[:] = 0
    dist[0] = 1
    wanted = sorted(set(ks))
    out = {}
    k = 0
    while wanted:
        if k == wanted[0]:
            out[k] = Fraction(int(dist[~constant].sum()), den**k)
            wanted.pop(0)
            continue
        nxt = np.zeros_like(dist)
        nxt[:] = 0
        for g, w in enumerate(weights):
            if w:
                np.add.at(nxt, table.right[:, g], w * dist)
        dist = nxt
        k += 1
    return out


# -- Monte Carlo -----------------------------------------------------------------


def _step_law(tree, model, space):
    gens = chain_generators(tree, model)
    den = 1
    for _, _, r in gens:
        den = math.lcm(den, Fraction(r).denominator)
    if den >= 2**31:
        raise ValidationError("Monte Carlo needs a common rate denominator below 2**31")
    weights = [int(Fraction(r) * den) for _, _, r in gens]
    if sum(weights) != den:
        raise ValidationError("generator rates must sum to one")
    keep = [i for i, w in enumerate(weights) if w]
    tables = np.array([operator_table(space, gens[i][0], gens[i][1]) for i in keep], dtype=np.int64)
    cumulative = np.cumsum([weights[i] for i in keep]).astype(np.int64)
    return tables, cumulative, den


def monte_carlo(tree, model, initial, k, trials, seed, space=None, pi=None, backend=None):
    """Empirical law after k steps over ``trials`` seeded trajectories.

    Returns a dict with the state counts, the empirical distribution as
    floats and, when ``pi`` is given, the TV distance to it.
    """
    if trials < 1:
        raise ValidationError("need at least one trial")
    space = space or StateSpace(tree)
    start = initial if isinstance(initial, (int, np.integer)) else space.rank(tuple(initial))
    tables, cumulative, den = _step_law(tree, model, space)
    sim = (backend or kernels).simulate
    final = sim(tables, cumulative, den, int(seed), int(start), int(k), int(trials))
    counts = np.bincount(np.asarray(final, dtype=np.int64), minlength=space.size)
    emp = counts / float(trials)
    out = {"counts": counts, "distribution": emp, "generator": GENERATOR_ID, "seed": int(seed)}
    if pi is not None:
        out["tv"] = 0.5 * float(np.abs(emp - np.array([float(v) for v in pi])).sum())
    return out


# -- deterministic upsets --------------------------------------------------------


def _upset_labels(space):
    return [(mask, space.class_ids(mask)) for mask in space.upsets]


def deterministic_upsets(space, images):
    """Bitmask of the minimal deterministic upset for each row of ``images``.

    An upset U is deterministic for m when states agreeing on U have the
    same image.  Upsets are tried in order of size, and the minimum
    deterministic one is unique, so the first hit is U(m).
    """
    if space.size > UPSET_STATE_CAP:
        raise CapExceeded(f"brute-force upsets limited to {UPSET_STATE_CAP} states")
    images = np.atleast_2d(np.asarray(images, dtype=np.int64))
    rows = images.shape[0]
    result = np.full(rows, -1, dtype=np.int64)
    pending = np.ones(rows, dtype=bool)
    for mask, ids in _upset_labels(space):
        width = int(ids.max()) + 1
        rep = np.full((rows, width), -1, dtype=np.int64)
        rep[:, ids] = images
        det = np.all(rep[:, ids] == images, axis=1) & pending
        result[det] = mask
        pending &= ~det
        if not pending.any():
            break
    return result


def deterministic_upset(space, image):
    """(vertex set U(m), u(m)) for one map."""
    mask = int(deterministic_upsets(space, image)[0])
    verts = frozenset(space.vertices_of(mask))
    return verts, len(verts)


def upset_statistic(table):
    """u(m) for every element of a generated monoid, as an int array."""
    masks = deterministic_upsets(table.space, table.images)
    return np.array([bin(int(m)).count("1") for m in masks], dtype=np.int64), masks


def minimal_vertices(tree, vertices):
    """Elements of an upset whose parent lies outside it."""
    vs = set(vertices)
    return [v for v in tree.vertices if v in vs and tree.parent[v] not in vs]


def check_upset_claims(table, pairs=10_000, seed=0):
    """Count violations of u(m m') <= u(m) and u(m tau_v) < u(m).

    The first is checked on ``pairs`` random pairs, the second on every
    element and every minimal vertex of its deterministic upset.
    """
    space = table.space
    tree = space.tree
    u, masks = upset_statistic(table)
    rng = np.random.default_rng(seed)
    a = rng.integers(0, table.size, size=pairs)
    b = rng.integers(0, table.size, size=pairs)
    mono = 0
    for i, j in zip(a.tolist(), b.tolist()):
        if u[table.multiply(i, j)] > u[i]:
            mono += 1
    tau = {v: g for g, (kind, v) in enumerate(table.kinds) if kind == LANDSLIDE}
    strict = checked = 0
    for i in range(table.size):
        for v in minimal_vertices(tree, space.vertices_of(int(masks[i]))):
            checked += 1
            if u[table.right[i, tau[v]]] >= u[i]:
                strict += 1
    return {"pairs": pairs, "monotone_violations": mono, "claim2_checked": checked,
            "claim2_violations": strict}


# -- reports ----------------------------------------------------------------------


@dataclass
class ConvergenceRow:
    k: int
    exact_tv: Fraction = None
    mc_tv: float = None
    trials: int = 0
    chernoff: float = None
    applicable: bool = False


@dataclass
class ConvergenceReport:
    rows: list = field(default_factory=list)
    seed: int = 0
    generator: str = GENERATOR_ID
    initial: tuple = None

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, delimiter=";", lineterminator="\n")
        w.writerow(["k", "exact_tv", "mc_tv", "chernoff", "applicable"])
        for r in self.rows:
            w.writerow(
                [
                    r.k,
                    "" if r.exact_tv is None else f"{r.exact_tv.numerator}/{r.exact_tv.denominator}",
                    "" if r.mc_tv is None else repr(r.mc_tv),
                    "n/a" if r.chernoff is None else repr(r.chernoff),
                    "true" if r.applicable else "false",
                ]
            )
        return buf.getvalue()


def convergence_report(tree, model, ks, initial=None, trials=0, seed=0, exact=True, space=None):
    """Exact (worst case when ``initial`` is None), simulated and bounded distances.

    Monte Carlo needs a starting state; with ``initial`` None the zero
    configuration is used for the simulated column.
    """
    space = space or StateSpace(tree)
    matrix = build_transition(tree, model, space)
    pi = stationary_exact(matrix)
    start = None if initial is None else space.rank(tuple(initial))
    ex = distances(matrix, ks, initial=start, pi=pi) if exact else {}
    report = ConvergenceReport(seed=seed, initial=None if initial is None else tuple(initial))
    for k in ks:
        row = ConvergenceRow(k=int(k), exact_tv=ex.get(k))
        if trials:
            mc = monte_carlo(tree, model, start or 0, k, trials, seed, space=space, pi=pi)
            row.mc_tv, row.trials = mc["tv"], trials
        row.chernoff = chernoff_bound(tree, k)
        row.applicable = row.chernoff is not None
        report.rows.append(row)
    return report
