"""Source, trickle and landslide operators, and their leaf-split structure.

Operators act on configurations (tuples in vertex order).  ``table`` gives
the same operator as a rank-indexed image array; composition of tables
follows the left-action convention ``(f g)(t) = f(g(t))``, i.e.
``compose(f, g) = f[g]``.
"""

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .configuration import StateSpace
from .errors import InternalError, ValidationError

SOURCE, TRICKLE, LANDSLIDE = "source", "trickle", "landslide"
KINDS = (SOURCE, TRICKLE, LANDSLIDE)
SYMBOL = {SOURCE: "σ", TRICKLE: "θ", LANDSLIDE: "τ"}

DEFAULT_TABLE_CAP = 10**6


def _path_idx(tree, v):
    return [tree.index[u] for u in tree.path_to_root(v)]


def source(tree, v, t):
    """Add a grain at the first non-full vertex on the path from v."""
    t = list(t)
    for u in _path_idx(tree, v):
        if t[u] < tree.threshold[tree.vertices[u]]:
            t[u] += 1
            break
    return tuple(t)


def trickle(tree, v, t):
    """Move one grain from v to the first non-full strict descendant (or out)."""
    t = list(t)
    path = _path_idx(tree, v)
    if t[path[0]] == 0:
        return tuple(t)
    t[path[0]] -= 1
    for u in path[1:]:
        if t[u] < tree.threshold[tree.vertices[u]]:
            t[u] += 1
            break
    return tuple(t)


def landslide(tree, v, t):
    """Empty v, filling the path below it greedily; leftovers leave at the root."""
    t = list(t)
    path = _path_idx(tree, v)
    grains = t[path[0]]
    t[path[0]] = 0
    for u in path[1:]:
        if not grains:
            break
        room = tree.threshold[tree.vertices[u]] - t[u]
        take = min(room, grains)
        t[u] += take
        grains -= take
    return tuple(t)


_DIRECT = {SOURCE: source, TRICKLE: trickle, LANDSLIDE: landslide}
_KERNEL = {
    SOURCE: kernels.source_table,
    TRICKLE: kernels.trickle_table,
    LANDSLIDE: kernels.landslide_table,
}


def apply(tree, kind, v, t):
    if kind not in _DIRECT:
        raise ValidationError(f"unknown operator kind {kind!r}")
    tree._check(v)
    return _DIRECT[kind](tree, v, t)


def operator_table(space, kind, v, backend=None):
    """Rank-indexed image array of one operator over the whole state space."""
    tree = space.tree
    tree._check(v)
    fn = _KERNEL[kind] if backend is None else getattr(backend, f"{kind}_table")
    path = np.array(_path_idx(tree, v), dtype=np.int64)
    return fn(space.radix, space.weight, path, space.size)


def compose(f, g):
    """Table of the map t -> f(g(t))."""
    return f[g]


def power(f, k):
    out = np.arange(f.shape[0], dtype=f.dtype)
    for _ in range(k):
        out = f[out]
    return out


@dataclass
class SandpileOperator:
    """One generator; the image table is built lazily and cached."""

    space: StateSpace
    kind: str
    vertex: str
    cap: int = DEFAULT_TABLE_CAP
    _table: np.ndarray = field(default=None, repr=False)

    @property
    def name(self):
        return f"{SYMBOL[self.kind]}_{self.vertex}"

    @property
    def materialized(self):
        return self.space.size <= self.cap

    @property
    def table(self):
        if self._table is None:
            if not self.materialized:
                raise ValidationError(
                    f"{self.name}: state space too large to tabulate ({self.space.size} > {self.cap})"
                )
            self._table = operator_table(self.space, self.kind, self.vertex)
            self._table.setflags(write=False)
        return self._table

    def __call__(self, t):
        if self._table is not None:
            return self.space.unrank(int(self._table[self.space.rank(t)]))
        return apply(self.space.tree, self.kind, self.vertex, t)


def generators(space, model, sources="chain"):
    """Generators in canonical order: sources by vertex order, then topples.

    ``sources`` is ``"chain"`` (the source vertices of the Markov chain),
    ``"all"`` (every vertex) or ``"none"``.
    """
    tree = space.tree
    if sources == "chain":
        src = [v for v in tree.vertices if v in set(tree.source_vertices())]
    elif sources == "all":
        src = list(tree.vertices)
    elif sources == "none":
        src = []
    else:
        raise ValidationError(f"unknown source set {sources!r}")
    topple = TRICKLE if model == TRICKLE else LANDSLIDE
    if model not in (TRICKLE, LANDSLIDE):
        raise ValidationError(f"unknown model {model!r}")
    ops = [SandpileOperator(space, SOURCE, v) for v in src]
    ops += [SandpileOperator(space, topple, v) for v in tree.vertices]
    return ops


# -- leaf splitting -------------------------------------------------------


def split(tree, leaf, t):
    """Split a configuration into (t_leaf, configuration of the tree minus leaf)."""
    i = tree.index[leaf]
    return t[i], tuple(t[:i]) + tuple(t[i + 1 :])


def join(tree, leaf, t_leaf, rest):
    i = tree.index[leaf]
    return tuple(rest[:i]) + (t_leaf,) + tuple(rest[i:])


def _source_power(sub, w, k, t):
    """sigma_w^k on the subtree; w None is the empty vertex (identity)."""
    for _ in range(k):
        if w is None:
            return t
        t = recursive_apply(sub, SOURCE, w, t)
    return t


def recursive_apply(tree, kind, v, t, leaf=None):
    """Evaluate an operator by peeling off a leaf and recursing.

    Uses only the leaf-split recursions: the leaf coordinate is updated by
    hand and the rest of the configuration is handed to the operator on
    the smaller tree.  Splits along the first leaf in vertex order unless
    ``leaf`` is given.
    """
    if not tree.vertices:
        return tuple(t)
    tree._check(v)
    if leaf is None:
        leaf = tree.leaves()[0]
    elif tree.children(leaf):
        raise ValidationError(f"{leaf!r} is not a leaf")
    sub = tree.delete_leaf(leaf)
    cap = tree.threshold[leaf]
    succ = tree.successor(leaf)
    h, rest = split(tree, leaf, t)
    if v != leaf:
        return join(tree, leaf, h, recursive_apply(sub, kind, v, rest))
    if kind == SOURCE:
        if h < cap:
            return join(tree, leaf, h + 1, rest)
        return join(tree, leaf, cap, _source_power(sub, succ, 1, rest))
    if kind == TRICKLE:
        if h > 0:
            return join(tree, leaf, h - 1, _source_power(sub, succ, 1, rest))
        return join(tree, leaf, 0, rest)
    if kind == LANDSLIDE:
        return join(tree, leaf, 0, _source_power(sub, succ, h, rest))
    raise ValidationError(f"unknown operator kind {kind!r}")


# -- wreath coordinates ---------------------------------------------------


def alpha(m):
    return tuple(min(h + 1, m) for h in range(m + 1))


def beta(m):
    return tuple(max(h - 1, 0) for h in range(m + 1))


def const(m, k):
    return (k,) * (m + 1)


def identity(m):
    return tuple(range(m + 1))


def classify_top(top):
    """Name a self-map of [0, m] as identity, alpha, beta or a constant."""
    m = len(top) - 1
    if top == identity(m):
        return "ε"
    if top == alpha(m):
        return "α"
    if top == beta(m):
        return "β"
    if len(set(top)) == 1:
        return f"const {top[0]}"
    return None


@dataclass
class WreathElement:
    """A map on [0, T_leaf] x Omega(tree minus leaf) in wreath coordinates.

    ``top`` is a tuple giving a self-map of [0, T_leaf]; ``branch[k]`` is the
    rank-indexed table acting on the subtree when the leaf holds k grains.
    """

    tree: object
    leaf: str
    top: tuple
    branch: tuple

    def __post_init__(self):
        self.sub = self.tree.delete_leaf(self.leaf)
        self.subspace = StateSpace(self.sub)
        self.space = StateSpace(self.tree)

    @property
    def top_label(self):
        return classify_top(self.top)

    def act(self, k, rank):
        return self.top[k], int(self.branch[k][rank])

    def to_table(self):
        """Image table on the full state space."""
        tree, leaf = self.tree, self.leaf
        out = np.empty(self.space.size, dtype=np.int64)
        for i in range(self.space.size):
            h, rest = split(tree, leaf, self.space.unrank(i))
            r = self.subspace.rank(rest)
            k2, r2 = self.act(h, r)
            out[i] = self.space.rank(join(tree, leaf, k2, self.subspace.unrank(r2)))
        return out

    def __mul__(self, other):
        """General wreath product rule: top maps compose, branches twist."""
        if other.leaf != self.leaf or other.tree != self.tree:
            raise ValidationError("wreath elements split along different leaves")
        top = tuple(self.top[other.top[i]] for i in range(len(self.top)))
        branch = tuple(
            compose(self.branch[other.top[i]], other.branch[i]) for i in range(len(self.top))
        )
        return WreathElement(self.tree, self.leaf, top, branch)

    def __eq__(self, other):
        return (
            isinstance(other, WreathElement)
            and self.leaf == other.leaf
            and self.top == other.top
            and all(np.array_equal(a, b) for a, b in zip(self.branch, other.branch))
        )


def _sub_source_tables(subspace, succ, count):
    """Tables of sigma_succ^i for i = 0..count on the subtree."""
    ident = np.arange(subspace.size, dtype=np.int64)
    if succ is None:
        return [ident] * (count + 1)
    step = operator_table(subspace, SOURCE, succ)
    out = [ident]
    for _ in range(count):
        out.append(compose(step, out[-1]))
    return out


def identity_wreath(tree, leaf):
    sub = tree.delete_leaf(leaf)
    ident = np.arange(StateSpace(sub).size, dtype=np.int64)
    m = tree.threshold[leaf]
    return WreathElement(tree, leaf, identity(m), (ident,) * (m + 1))


def wreath_decompose(tree, kind, v, leaf=None):
    """Wreath coordinates of a generator, written down from its definition."""
    if leaf is None:
        leaf = tree.leaves()[0]
    if tree.children(leaf):
        raise ValidationError(f"{leaf!r} is not a leaf")
    tree._check(v)
    sub = tree.delete_leaf(leaf)
    subspace = StateSpace(sub)
    m = tree.threshold[leaf]
    succ = tree.successor(leaf)
    if v != leaf:
        tab = operator_table(subspace, kind, v)
        return WreathElement(tree, leaf, identity(m), (tab,) * (m + 1))
    pw = _sub_source_tables(subspace, succ, m)
    ident = pw[0]
    if kind == SOURCE:
        return WreathElement(tree, leaf, alpha(m), (ident,) * m + (pw[1],))
    if kind == TRICKLE:
        return WreathElement(tree, leaf, beta(m), (ident,) + (pw[1],) * m)
    if kind == LANDSLIDE:
        return WreathElement(tree, leaf, const(m, 0), tuple(pw))
    raise ValidationError(f"unknown operator kind {kind!r}")


def decompose_table(space, table, leaf):
    """Recover wreath coordinates of an arbitrary map given as a table.

    Raises InternalError if the leaf coordinate of the image depends on
    anything but the leaf coordinate of the input.
    """
    tree = space.tree
    sub = tree.delete_leaf(leaf)
    subspace = StateSpace(sub)
    m = tree.threshold[leaf]
    i = tree.index[leaf]
    dig = space.digits
    img = dig[table]
    top = []
    branch = []
    others = [j for j in range(space.n) if j != i]
    sub_w = subspace.weight
    for k in range(m + 1):
        rows = np.nonzero(dig[:, i] == k)[0]
        tops = np.unique(img[rows, i])
        if tops.size != 1:
            raise InternalError("leaf coordinate of the image is not a function of the leaf coordinate")
        top.append(int(tops[0]))
        src = dig[rows][:, others] @ sub_w if others else np.zeros(rows.size, dtype=np.int64)
        dst = img[rows][:, others] @ sub_w if others else np.zeros(rows.size, dtype=np.int64)
        tab = np.empty(subspace.size, dtype=np.int64)
        tab[src] = dst
        branch.append(tab)
    return WreathElement(tree, leaf, tuple(top), tuple(branch))


def right_multiply_wreath(f, kind, v):
    """f * g for a generator g, using the right-multiplication shortcuts.

    Multiplying by the leaf landslide collapses the top map to a constant,
    multiplying by the leaf source shifts the branches, and any operator
    away from the leaf multiplies every branch.
    """
    tree, leaf = f.tree, f.leaf
    tree._check(v)
    m = tree.threshold[leaf]
    if v != leaf:
        g = operator_table(f.subspace, kind, v)
        return WreathElement(tree, leaf, f.top, tuple(compose(b, g) for b in f.branch))
    pw = _sub_source_tables(f.subspace, tree.successor(leaf), m + 1)
    if kind == LANDSLIDE:
        top = const(m, f.top[0])
        branch = tuple(compose(f.branch[0], pw[i]) for i in range(m + 1))
        return WreathElement(tree, leaf, top, branch)
    if kind == SOURCE:
        top = tuple(f.top[a] for a in alpha(m))
        ext = list(f.branch) + [compose(f.branch[m], pw[1])]
        return WreathElement(tree, leaf, top, tuple(ext[1 : m + 2]))
    if kind == TRICKLE:
        top = tuple(f.top[b] for b in beta(m))
        branch = (f.branch[0],) + tuple(compose(f.branch[i - 1], pw[1]) for i in range(1, m + 1))
        return WreathElement(tree, leaf, top, branch)
    raise ValidationError(f"unknown operator kind {kind!r}")
