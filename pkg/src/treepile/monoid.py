"""Transformation monoids generated by the sandpile operators.

Elements are dense image arrays over the ranked state space and are
identified by their bytes.  Composition follows the operator convention
``f * g = f[g]`` (apply g first), so a word ``g1 g2 ... gk`` denotes the map
``g1 o g2 o ... o gk``.
"""

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import breadth_first_order, connected_components

from .arborescence import format_rational
from .configuration import StateSpace, format_config
from .errors import CapExceeded, HypothesisUnmet, InternalError, ValidationError
from .operators import LANDSLIDE, SOURCE, SYMBOL, TRICKLE, operator_table

DEFAULT_MONOID_CAP = 200_000
ORACLE_MAX = 2000
GENERATOR_SETS = ("M", "N", "J", "chain")


def _dtype_for(n):
    if n <= 1 << 8:
        return np.uint8
    if n <= 1 << 16:
        return np.uint16
    return np.int32


def omega_power(m):
    """The idempotent power of a map given as an image array."""
    m = np.asarray(m)
    p = m
    while not np.array_equal(p[p], p):
        p = p[m]
    return p


def is_idempotent(m):
    m = np.asarray(m)
    return bool(np.array_equal(m[m], m))


def kernel_key(m):
    """Canonical label of the partition of states into fibres of m."""
    _, first, inv = np.unique(np.asarray(m), return_index=True, return_inverse=True)
    order = np.empty(len(first), dtype=np.int64)
    order[np.argsort(first, kind="stable")] = np.arange(len(first))
    return order[inv].astype(np.int32).tobytes()


class MonoidTable:
    """A generated monoid with its Cayley graphs.

    ``images`` is a (size, |states|) array, row 0 is the identity.
    ``right[i, g]`` is the index of ``m_i * g`` and ``left[i, g]`` the
    index of ``g * m_i``.
    """

    def __init__(self, images, words, names, tables, right, tag, space=None, kinds=None):
        self.images = images
        self.words = words
        self.names = list(names)
        self.tables = [np.asarray(t) for t in tables]
        self.right = right
        self.tag = tag
        self.space = space
        self.kinds = kinds
        self._index = {row.tobytes(): i for i, row in enumerate(images)}
        self._left = None
        self._ideals = None

    def __len__(self):
        return len(self.images)

    @property
    def size(self):
        return len(self.images)

    @property
    def n_generators(self):
        return len(self.names)

    def lookup(self, image):
        """Index of an image array, or None when it is not an element."""
        key = np.asarray(image, dtype=self.images.dtype).tobytes()
        return self._index.get(key)

    def index_of(self, image):
        i = self.lookup(image)
        if i is None:
            raise InternalError("map is not an element of the monoid")
        return i

    def multiply(self, i, j):
        a = self.images[i]
        return self.index_of(a[self.images[j]])

    def word(self, i):
        return "·".join(self.names[g] for g in self.words[i]) or "ε"

    def generator_index(self, g):
        """Monoid element equal to generator number g."""
        return self.index_of(self.tables[g])

    def is_constant(self, i):
        row = self.images[i]
        return bool(np.all(row == row[0]))

    def idempotents(self):
        im = self.images.astype(np.int64)
        rows = np.take_along_axis(im, im, axis=1)
        return [int(i) for i in np.flatnonzero(np.all(rows == im, axis=1))]

    def fixed_points(self, i):
        row = self.images[i]
        return int(np.count_nonzero(row == np.arange(len(row))))

    @property
    def left(self):
        if self._left is None:
            left = np.empty_like(self.right)
            for g, tab in enumerate(self.tables):
                prods = tab[self.images]
                for i, row in enumerate(prods):
                    j = self.lookup(row)
                    if j is None:
                        raise InternalError("generated table is not closed under left products")
                    left[i, g] = j
            self._left = left
        return self._left

    def _graph(self, sides):
        n, k = self.right.shape
        rows, cols = [], []
        for side in sides:
            edges = self.right if side == "right" else self.left
            rows.append(np.repeat(np.arange(n), k))
            cols.append(edges.reshape(-1))
        r = np.concatenate(rows) if rows else np.zeros(0, dtype=np.int64)
        c = np.concatenate(cols) if cols else np.zeros(0, dtype=np.int64)
        return csr_matrix((np.ones(len(r), dtype=np.int8), (r, c)), shape=(n, n))

    def reachable(self, i, sides=("right",)):
        """Boolean mask of everything reachable from element i."""
        mask = np.zeros(self.size, dtype=bool)
        if self.n_generators == 0:
            mask[i] = True
            return mask
        order = breadth_first_order(self._graph(sides), i, directed=True, return_predecessors=False)
        mask[order] = True
        return mask

    def ideal_masks(self):
        """For each generator x, the two-sided ideal MxM as a boolean mask."""
        if self._ideals is None:
            graph = self._graph(("right", "left")) if self.n_generators else None
            out = []
            for g in range(self.n_generators):
                mask = np.zeros(self.size, dtype=bool)
                order = breadth_first_order(
                    graph, self.generator_index(g), directed=True, return_predecessors=False
                )
                mask[order] = True
                out.append(mask)
            self._ideals = out
        return self._ideals

    def content(self, e):
        """Generators x with e in MxM, as generator indices."""
        if not is_idempotent(self.images[e]):
            raise ValidationError(f"element {self.word(e)} is not idempotent")
        return [g for g, mask in enumerate(self.ideal_masks()) if mask[e]]

    def omega(self, i):
        return self.index_of(omega_power(self.images[i]))


def generate(tables, names, cap=DEFAULT_MONOID_CAP, tag=None, space=None, kinds=None):
    """Close a set of generator tables under composition.

    Elements are discovered breadth first, extending each element by the
    generators in the given order, so every element's stored word is the
    shortlex-least word representing it.
    """
    tables = [np.asarray(t) for t in tables]
    if space is not None:
        n = space.size
    elif tables:
        n = len(tables[0])
    else:
        raise ValidationError("need a state space or at least one generator")
    dtype = _dtype_for(n)
    tables = [t.astype(np.int64) for t in tables]
    k = len(tables)
    capacity = 64
    images = np.empty((capacity, n), dtype=dtype)
    images[0] = np.arange(n)
    index = {images[0].tobytes(): 0}
    words = [()]
    right_rows = []
    count = 1
    start, stop = 0, 1
    while start < stop:
        frontier = images[start:stop]
        prods = [frontier[:, t] for t in tables]
        for a in range(stop - start):
            row_edges = []
            for g in range(k):
                row = prods[g][a]
                key = row.tobytes()
                j = index.get(key)
                if j is None:
                    if count >= cap:
                        raise CapExceeded(
                            f"monoid exceeds {cap} elements ({count} found so far)", found=count
                        )
                    if count == capacity:
                        capacity *= 2
                        grown = np.empty((capacity, n), dtype=dtype)
                        grown[:count] = images[:count]
                        images = grown
                        frontier = images[start:stop]
                    images[count] = row
                    index[key] = j = count
                    words.append(words[start + a] + (g,))
                    count += 1
                row_edges.append(j)
            right_rows.append(row_edges)
        start, stop = stop, count
    right = np.array(right_rows, dtype=np.int64).reshape(count, k)
    return MonoidTable(images[:count].copy(), words, names, tables, right, tag, space, kinds)


def monoid_generators(space, generator_set="M"):
    """(kind, vertex) pairs in BFS order for a named generator set.

    "M" is sigma_v and tau_v over all vertices, "N" uses theta_v instead of
    tau_v, "J" is the tau_v alone and "chain" keeps only the sources that
    the landslide chain actually uses.
    """
    tree = space.tree
    verts = list(tree.vertices)
    if generator_set == "M":
        return [(SOURCE, v) for v in verts] + [(LANDSLIDE, v) for v in verts]
    if generator_set == "N":
        return [(SOURCE, v) for v in verts] + [(TRICKLE, v) for v in verts]
    if generator_set == "J":
        return [(LANDSLIDE, v) for v in verts]
    if generator_set == "chain":
        srcs = set(tree.source_vertices()) if verts else set()
        return [(SOURCE, v) for v in verts if v in srcs] + [(LANDSLIDE, v) for v in verts]
    raise ValidationError(f"unknown generator set {generator_set!r}; expected one of {GENERATOR_SETS}")


def generate_monoid(tree_or_space, generator_set="M", cap=DEFAULT_MONOID_CAP, max_states=None):
    space = tree_or_space
    if not isinstance(space, StateSpace):
        space = StateSpace(tree_or_space, max_states=max_states)
    kinds = monoid_generators(space, generator_set)
    tables = [operator_table(space, kind, v) for kind, v in kinds]
    names = [f"{SYMBOL[kind]}_{v}" for kind, v in kinds]
    return generate(tables, names, cap=cap, tag=generator_set, space=space, kinds=kinds)


# -- R-triviality -----------------------------------------------------------


def is_r_trivial(table):
    """Check ex = e for every idempotent e and generator x in c(e).

    Returns (flag, certificate) where the certificate names the first
    violating (idempotent word, generator) pair.
    """
    for e in table.idempotents():
        for g in table.content(e):
            if table.right[e, g] != e:
                return False, (table.word(e), table.names[g])
    return True, None


def _principal_ideals(table, sides):
    return [table.reachable(i, sides).tobytes() for i in range(table.size)]


def is_r_trivial_direct(table, limit=ORACLE_MAX):
    """aM = bM forces a = b, checked by comparing every right ideal."""
    if table.size > limit:
        raise CapExceeded(f"direct oracle limited to {limit} elements", found=table.size)
    ideals = _principal_ideals(table, ("right",))
    return len(set(ideals)) == len(ideals)


def is_j_trivial(table, limit=ORACLE_MAX):
    """MaM = MbM forces a = b."""
    if table.size > limit:
        raise CapExceeded(f"direct oracle limited to {limit} elements", found=table.size)
    ideals = _principal_ideals(table, ("right", "left"))
    return len(set(ideals)) == len(ideals)


# -- idempotent lattice -------------------------------------------------------


@dataclass
class LatticeClass:
    rep: int
    members: list
    content: list
    fixed_points: int
    eigenvalue: Fraction = None
    multiplicity: int = None
    subset: frozenset = None


@dataclass
class IdempotentLattice:
    """L-classes of idempotents ordered by [e] <= [f] iff ef = e."""

    table: MonoidTable
    classes: list
    leq: np.ndarray
    top: int
    _by_key: dict = field(default_factory=dict, repr=False)

    def class_of(self, e):
        key = kernel_key(self.table.images[e])
        c = self._by_key.get(key)
        if c is None or not is_idempotent(self.table.images[e]):
            raise ValidationError(f"element {self.table.word(e)} is not an idempotent of the lattice")
        return c

    def meet(self, a, b):
        t = self.table
        e, f = self.classes[a].rep, self.classes[b].rep
        prod = t.images[e][t.images[f]]
        return self.class_of(t.index_of(omega_power(prod)))

    def below(self, a):
        return [b for b in range(len(self.classes)) if self.leq[b, a]]

    def check_axioms(self):
        """Partial order, top element [identity] and meets via (ef)^omega."""
        n = len(self.classes)
        leq = self.leq
        if not all(leq[a, a] for a in range(n)):
            return False
        for a in range(n):
            for b in range(n):
                if a != b and leq[a, b] and leq[b, a]:
                    return False
                if not leq[a, self.top]:
                    return False
        for a in range(n):
            for b in range(a, n):
                m = self.meet(a, b)
                if not (leq[m, a] and leq[m, b]):
                    return False
                lower = np.flatnonzero(leq[:, a] & leq[:, b])
                if not all(leq[c, m] for c in lower):
                    return False
        return True

    def to_json(self):
        t = self.table
        out = []
        for c in self.classes:
            out.append(
                {
                    "representative": t.word(c.rep),
                    "content": [t.names[g] for g in c.content],
                    "fixed_points": c.fixed_points,
                    "eigenvalue": None if c.eigenvalue is None else format_rational(c.eigenvalue),
                    "multiplicity": c.multiplicity,
                    "subset": None if c.subset is None else sorted(c.subset, key=str),
                }
            )
        order = [[a, b] for a in range(len(self.classes)) for b in range(len(self.classes))
                 if a != b and self.leq[a, b]]
        return {"monoid": t.tag, "top": self.top, "classes": out, "order": order}


def idempotent_lattice(table):
    ok, cert = is_r_trivial(table)
    if not ok:
        raise HypothesisUnmet(
            f"lattice of idempotents needs an R-trivial monoid; {cert[0]} * {cert[1]} differs"
        )
    groups = {}
    for e in table.idempotents():
        groups.setdefault(kernel_key(table.images[e]), []).append(e)
    classes, by_key = [], {}
    for key, members in groups.items():
        rep = members[0]
        a = table.images[rep]
        for f in members[1:]:
            b = table.images[f]
            if not (np.array_equal(a[b], a) and np.array_equal(b[a], b)):
                raise InternalError("idempotents with equal kernels are not L-equivalent")
        by_key[key] = len(classes)
        classes.append(LatticeClass(rep, members, table.content(rep), table.fixed_points(rep)))
    n = len(classes)
    leq = np.zeros((n, n), dtype=bool)
    for i, ci in enumerate(classes):
        e = table.images[ci.rep]
        for j, cj in enumerate(classes):
            leq[i, j] = np.array_equal(e[table.images[cj.rep]], e)
    top = by_key[kernel_key(table.images[0])]
    return IdempotentLattice(table, classes, leq, top, by_key)


# -- subsets and e_S ----------------------------------------------------------


def _tau_tables(table):
    space = table.space
    if space is None:
        raise ValidationError("monoid has no state space attached")
    return {v: operator_table(space, LANDSLIDE, v) for v in space.tree.vertices}


def e_S(table, S, taus=None):
    """Index of the idempotent (product of tau_v over S)^omega.

    The product is formed in vertex order and in reverse order; the two
    omega powers must agree.
    """
    taus = taus or _tau_tables(table)
    verts = [v for v in table.space.tree.vertices if v in set(S)]
    n = table.space.size
    forward = np.arange(n)
    backward = np.arange(n)
    for v in verts:
        forward = forward[taus[v]]
        backward = taus[v][backward]
    a, b = omega_power(forward), omega_power(backward)
    if not np.array_equal(a, b):
        raise InternalError(f"e_S depends on the product order for S = {sorted(verts)}")
    i = table.lookup(a)
    if i is None:
        raise ValidationError("e_S is not an element of this monoid")
    return i


def S_of_idempotent(table, e, lattice=None):
    """Union of the downsets of sources in c(e) with the topples in c(e)."""
    tree = table.space.tree
    if table.kinds is None:
        raise ValidationError("monoid generators carry no operator kinds")
    S = set()
    for g in table.content(e):
        kind, v = table.kinds[g]
        if kind == SOURCE:
            S |= tree.downset(v)
        elif kind == LANDSLIDE:
            S.add(v)
    S = frozenset(S)
    f = e_S(table, S)
    a, b = table.images[e], table.images[f]
    if not (np.array_equal(a[b], a) and np.array_equal(b[a], b)):
        raise InternalError(f"{table.word(e)} is not L-equivalent to e_S for S = {sorted(S)}")
    return S


def subset_correspondence(table, lattice):
    """Map each vertex subset S to the class of e_S, or None if not a bijection.

    A bijection must also reverse inclusion: [e_S] <= [e_S'] iff S contains S'.
    """
    tree = table.space.tree
    verts = list(tree.vertices)
    taus = _tau_tables(table)
    subsets = [frozenset(c) for r in range(len(verts) + 1) for c in combinations(verts, r)]
    mapping = {}
    for S in subsets:
        try:
            mapping[S] = lattice.class_of(e_S(table, S, taus))
        except ValidationError:
            return None
    if len(set(mapping.values())) != len(lattice.classes) or len(mapping) != len(lattice.classes):
        return None
    for S in subsets:
        for S2 in subsets:
            if bool(lattice.leq[mapping[S], mapping[S2]]) != (S >= S2):
                return None
    return mapping


# -- spectrum ----------------------------------------------------------------


def generator_probabilities(table, tree):
    """Step probability of each generator in the chain on ``tree``."""
    if table.kinds is None:
        raise ValidationError("monoid generators carry no operator kinds")
    srcs = set(tree.source_vertices()) if tree.vertices else set()
    out = []
    for kind, v in table.kinds:
        if kind == SOURCE:
            out.append(Fraction(tree.y[v]) if v in srcs else Fraction(0))
        else:
            out.append(Fraction(tree.x[v]))
    return out


def _generic_multiplicities(lattice):
    classes = lattice.classes
    order = sorted(range(len(classes)), key=lambda a: len(lattice.below(a)))
    mult = {}
    for a in order:
        mult[a] = classes[a].fixed_points - sum(mult[b] for b in lattice.below(a) if b != a)
    return mult


def _subset_multiplicities(table, mapping):
    taus = _tau_tables(table)
    fixed = {S: table.fixed_points(e_S(table, S, taus)) for S in mapping}
    return {
        S: sum((-1) ** (len(X) - len(S)) * fixed[X] for X in mapping if X >= S)
        for S in mapping
    }


def spectrum_via_monoid(table, probabilities, lattice=None, method="auto"):
    """Eigenvalues with multiplicities of the random walk driven by the generators.

    ``probabilities`` lists the step probability of each generator.  Each
    lattice class [e] receives the total probability of generators x with
    [x^omega] >= [e]; multiplicities come from Moebius inversion of the
    fixed-point counts.  With ``method="auto"`` the subset lattice is used
    when the e_S correspondence holds, and the generic computation must
    agree with it.
    """
    lattice = lattice or idempotent_lattice(table)
    probs = [Fraction(p) for p in probabilities]
    if len(probs) != table.n_generators:
        raise ValidationError("need one probability per generator")
    gen_class = [lattice.class_of(table.omega(table.generator_index(g))) for g in range(len(probs))]
    for a, c in enumerate(lattice.classes):
        c.eigenvalue = sum(
            (p for p, gc in zip(probs, gen_class) if lattice.leq[a, gc]), Fraction(0)
        )
    generic = _generic_multiplicities(lattice)
    mapping = None
    if method in ("auto", "subset") and table.space is not None and table.kinds is not None:
        mapping = subset_correspondence(table, lattice)
    if method == "subset" and mapping is None:
        raise HypothesisUnmet("idempotent lattice is not the subset lattice of the vertices")
    if mapping is not None:
        sub = _subset_multiplicities(table, mapping)
        for S, a in mapping.items():
            if sub[S] != generic[a]:
                raise InternalError("subset and generic Moebius inversion disagree")
            lattice.classes[a].subset = S
    for a, c in enumerate(lattice.classes):
        c.multiplicity = generic[a]
    return [(c.eigenvalue, c.multiplicity) for c in lattice.classes]


def spectrum_multiset(pairs):
    """Sorted (eigenvalue, total multiplicity) with zero multiplicities dropped."""
    acc = {}
    for lam, m in pairs:
        acc[lam] = acc.get(lam, 0) + m
    return sorted((lam, m) for lam, m in acc.items() if m)


# -- export ------------------------------------------------------------------


def _dot_escape(s):
    return s.replace("\\", "\\\\").replace('"', '\\"')


def export_cayley(table, side="right"):
    """Graphviz DOT text of the left or right Cayley graph."""
    if side not in ("left", "right"):
        raise ValidationError(f"side must be left or right, not {side!r}")
    edges = table.right if side == "right" else table.left
    lines = [f"digraph {side}_cayley {{"]
    for i in range(table.size):
        label = table.word(i)
        if table.is_constant(i) and table.space is not None:
            label += ":=" + format_config(table.space.unrank(int(table.images[i][0])))
        lines.append(f'  n{i} [label="{_dot_escape(label)}"];')
    for i in range(table.size):
        for g, j in enumerate(edges[i]):
            lines.append(f'  n{i} -> n{int(j)} [label="{_dot_escape(table.names[g])}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def cayley_edges(table, side="right"):
    edges = table.right if side == "right" else table.left
    return [(i, int(j), g) for i in range(table.size) for g, j in enumerate(edges[i])]


def right_cayley_acyclic(table):
    """True when the right Cayley graph has no cycles other than self-loops."""
    count, _ = connected_components(table._graph(("right",)), directed=True, connection="strong")
    return count == table.size


def lattice_json(lattice):
    return json.dumps(lattice.to_json(), indent=2, ensure_ascii=False)


def monoid_summary(table):
    idem = table.idempotents()
    return {
        "set": table.tag,
        "generators": table.names,
        "size": table.size,
        "idempotents": len(idem),
        "constants": sum(1 for i in range(table.size) if table.is_constant(i)),
        "longest_word": max((len(w) for w in table.words), default=0),
        "log2_size": round(math.log2(table.size), 3) if table.size else 0,
    }
