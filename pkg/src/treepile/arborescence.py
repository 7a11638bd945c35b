"""Rooted trees with thresholds and exact rates.

Edges point from a vertex to its parent, so every vertex has a unique
directed path down to the root.  The vertex order given at construction is
canonical: it fixes the state ranking and the generator order everywhere
else in the package.
"""

import json
from fractions import Fraction

from .errors import ValidationError

_VERTEX_KEYS = {"id", "parent", "threshold", "x", "y"}


def parse_rational(value):
    """Parse an integer or a ``"p/q"`` string into a Fraction.

    Floats are rejected: the core never touches floating point.
    """
    if isinstance(value, bool):
        raise ValidationError(f"not a rational: {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, Fraction):
        return value
    if isinstance(value, str):
        text = value.strip()
        if not text or any(c in text for c in ".eE"):
            raise ValidationError(f"not an exact rational: {value!r}")
        try:
            return Fraction(text)
        except (ValueError, ZeroDivisionError):
            raise ValidationError(f"not a rational: {value!r}") from None
    raise ValidationError(f"not an exact rational: {value!r}")


def format_rational(q):
    q = Fraction(q)
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


class Arborescence:
    """Immutable rooted tree.

    ``parent`` maps each vertex to its parent (``None`` for the root),
    ``threshold`` to T_v, ``x`` to the topple rate and ``y`` to the source
    rate.  The empty tree (no vertices) is allowed; it arises from deleting
    the last leaf.
    """

    def __init__(self, vertices, parent, threshold, x=None, y=None, extended=False):
        self.vertices = tuple(vertices)
        if len(set(self.vertices)) != len(self.vertices):
            raise ValidationError("duplicate vertex id")
        self.parent = {v: parent.get(v) for v in self.vertices}
        self.threshold = {v: int(threshold[v]) for v in self.vertices}
        x = x or {}
        y = y or {}
        self.x = {v: parse_rational(x.get(v, 0)) for v in self.vertices}
        self.y = {v: parse_rational(y.get(v, 0)) for v in self.vertices}
        self.extended = bool(extended)
        self.index = {v: i for i, v in enumerate(self.vertices)}
        for v, p in self.parent.items():
            if p is not None and p not in self.index:
                raise ValidationError(f"vertex {v!r} has unknown parent {p!r}")
        self._children = {v: [] for v in self.vertices}
        for v in self.vertices:
            p = self.parent[v]
            if p is not None:
                self._children[p].append(v)
        self._paths = {}

    # -- structure -------------------------------------------------------

    def __len__(self):
        return len(self.vertices)

    def __repr__(self):
        return f"Arborescence({list(self.vertices)!r})"

    def __eq__(self, other):
        if not isinstance(other, Arborescence):
            return NotImplemented
        return (
            self.vertices == other.vertices
            and self.parent == other.parent
            and self.threshold == other.threshold
            and self.x == other.x
            and self.y == other.y
        )

    def __hash__(self):
        return hash((self.vertices, tuple(self.parent[v] for v in self.vertices)))

    @property
    def root(self):
        roots = [v for v in self.vertices if self.parent[v] is None]
        if len(roots) != 1:
            raise ValidationError(f"expected one root, found {len(roots)}")
        return roots[0]

    @property
    def edges(self):
        return [(v, self.parent[v]) for v in self.vertices if self.parent[v] is not None]

    def children(self, v):
        self._check(v)
        return list(self._children[v])

    def _check(self, v):
        if v not in self.index:
            raise ValidationError(f"unknown vertex {v!r}")

    def path_to_root(self, v):
        """Return the path v -> ... -> root as a tuple of vertices."""
        self._check(v)
        path = self._paths.get(v)
        if path is None:
            path = [v]
            seen = {v}
            while self.parent[path[-1]] is not None:
                nxt = self.parent[path[-1]]
                if nxt in seen:
                    raise ValidationError(f"cycle through {nxt!r}")
                seen.add(nxt)
                path.append(nxt)
            path = tuple(path)
            self._paths[v] = path
        return path

    def downset(self, v):
        return frozenset(self.path_to_root(v))

    def is_above(self, w, v):
        """True when w >= v, i.e. v lies on the path from w to the root."""
        return v in self.path_to_root(w)

    def upset_of(self, v):
        """All w with w >= v (the subtree hanging above v)."""
        return frozenset(w for w in self.vertices if self.is_above(w, v))

    def leaves(self):
        """Vertices with no children; a lone root counts as a leaf."""
        if not self.vertices:
            raise ValidationError("empty tree has no leaves")
        return [v for v in self.vertices if not self._children[v]]

    def sources_above(self, v):
        """Leaves whose path to the root passes through v."""
        self._check(v)
        return [l for l in self.leaves() if v in self.path_to_root(l)]

    def cumulative_source_rate(self, v):
        if self.extended:
            return sum((self.y[w] for w in self.upset_of(v)), Fraction(0))
        return sum((self.y[l] for l in self.sources_above(v)), Fraction(0))

    def successor(self, v):
        self._check(v)
        return self.parent[v]

    def source_vertices(self):
        """Vertices carrying a source operator in the Markov chain."""
        if self.extended:
            return [v for v in self.vertices if self.y[v] != 0]
        return self.leaves()

    def delete_leaf(self, leaf):
        """Remove a leaf with its edge and threshold."""
        self._check(leaf)
        if self._children[leaf]:
            raise ValidationError(f"{leaf!r} is not a leaf")
        keep = [v for v in self.vertices if v != leaf]
        return Arborescence(
            keep,
            {v: self.parent[v] for v in keep},
            {v: self.threshold[v] for v in keep},
            {v: self.x[v] for v in keep},
            {v: self.y[v] for v in keep},
            extended=self.extended,
        )

    def with_rates(self, x=None, y=None, extended=None):
        return Arborescence(
            self.vertices,
            self.parent,
            self.threshold,
            x if x is not None else self.x,
            y if y is not None else self.y,
            extended=self.extended if extended is None else extended,
        )

    def with_thresholds(self, threshold):
        return Arborescence(
            self.vertices, self.parent, threshold, self.x, self.y, extended=self.extended
        )

    def total_rate(self):
        srcs = self.vertices if self.extended else self.leaves()
        return sum(self.x.values(), Fraction(0)) + sum((self.y[v] for v in srcs), Fraction(0))

    # -- (de)serialization ----------------------------------------------

    def to_dict(self):
        out = []
        for v in self.vertices:
            entry = {
                "id": v,
                "parent": self.parent[v],
                "threshold": self.threshold[v],
                "x": format_rational(self.x[v]),
            }
            if self.y[v]:
                entry["y"] = format_rational(self.y[v])
            out.append(entry)
        return {"vertices": out}


def validate(tree, strict=True):
    """Return a list of human-readable violations (empty when valid).

    With ``strict`` the rates must form a probability distribution on the
    generators of the chain; otherwise only the structure is checked.
    """
    problems = []
    if not tree.vertices:
        return problems
    roots = [v for v in tree.vertices if tree.parent[v] is None]
    if len(roots) == 0:
        problems.append("no root")
    elif len(roots) > 1:
        problems.append("multiple roots: " + ", ".join(map(str, roots)))
    for v in tree.vertices:
        seen = {v}
        cur = v
        while tree.parent[cur] is not None:
            cur = tree.parent[cur]
            if cur in seen:
                problems.append(f"cycle through {cur!r}")
                break
            seen.add(cur)
        if tree.threshold[v] < 1:
            problems.append(f"threshold of {v!r} must be >= 1")
        if tree.x[v] < 0 or tree.y[v] < 0:
            problems.append(f"negative rate at {v!r}")
    if problems or not strict:
        return problems
    leaves = set(tree.leaves())
    for v in tree.vertices:
        if tree.x[v] <= 0:
            problems.append(f"topple rate x of {v!r} must be positive")
        if v in leaves and tree.y[v] <= 0:
            problems.append(f"source rate y of leaf {v!r} must be positive")
        if v not in leaves and tree.y[v] != 0 and not tree.extended:
            problems.append(f"non-leaf {v!r} carries a source rate (extended mode is off)")
    total = sum(tree.x.values(), Fraction(0)) + sum(tree.y.values(), Fraction(0))
    if total != 1:
        problems.append(f"rates sum != 1 (sum is {format_rational(total)})")
    return problems


def tree_from_dict(data, extended=False):
    """Build a tree from the parsed JSON document, rejecting unknown keys."""
    if not isinstance(data, dict) or set(data) - {"vertices"} or "vertices" not in data:
        raise ValidationError('tree file must be an object with the single key "vertices"')
    entries = data["vertices"]
    if not isinstance(entries, list):
        raise ValidationError('"vertices" must be an array')
    vertices, parent, threshold, x, y = [], {}, {}, {}, {}
    for entry in entries:
        if not isinstance(entry, dict):
            raise ValidationError("vertex entries must be objects")
        unknown = set(entry) - _VERTEX_KEYS
        if unknown:
            raise ValidationError(f"unknown keys {sorted(unknown)} in vertex entry")
        missing = {"id", "parent", "threshold", "x"} - set(entry)
        if missing:
            raise ValidationError(f"missing keys {sorted(missing)} in vertex entry")
        vid = entry["id"]
        if not isinstance(vid, str):
            raise ValidationError("vertex id must be a string")
        if entry["parent"] is not None and not isinstance(entry["parent"], str):
            raise ValidationError("parent must be a string or null")
        th = entry["threshold"]
        if isinstance(th, bool) or not isinstance(th, int) or th < 1:
            raise ValidationError(f"threshold of {vid!r} must be a positive integer")
        vertices.append(vid)
        parent[vid] = entry["parent"]
        threshold[vid] = th
        x[vid] = parse_rational(entry["x"])
        y[vid] = parse_rational(entry.get("y", 0))
    if sum(1 for v in vertices if parent[v] is None) != 1:
        raise ValidationError("tree file must contain exactly one null parent")
    return Arborescence(vertices, parent, threshold, x, y, extended=extended)


def load_tree(path, extended=False):
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"invalid JSON: {exc}") from None
    return tree_from_dict(data, extended=extended)


def dump_tree(tree, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(tree.to_dict(), fh, indent=2)
        fh.write("\n")


def line_tree(thresholds, y=0, x=None):
    """The line 1 -> 2 -> ... -> n with the unique source at 1 and root n."""
    n = len(thresholds)
    names = [str(i + 1) for i in range(n)]
    parent = {names[i]: (names[i + 1] if i + 1 < n else None) for i in range(n)}
    th = dict(zip(names, thresholds))
    xs = dict(zip(names, x)) if x is not None else {}
    ys = {names[0]: y} if n else {}
    return Arborescence(names, parent, th, xs, ys)


def uniform_rates(tree):
    """Equal probability on every generator of the chain."""
    srcs = set(tree.source_vertices()) if tree.vertices else set()
    count = len(tree.vertices) + len(srcs)
    p = Fraction(1, count)
    return tree.with_rates(
        {v: p for v in tree.vertices}, {v: (p if v in srcs else 0) for v in tree.vertices}
    )
