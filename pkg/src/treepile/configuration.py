"""State space, mixed-radix ranking, zeta transform and dominance orders.

A configuration is a tuple of grain counts in the tree's vertex order.
Ranks are lexicographic with the first vertex as the most significant digit,
so for the two-leaf example the order is 000, 001, 010, ..., 111.
"""

from functools import cached_property

import numpy as np

from .errors import CapExceeded, ValidationError


def format_config(t):
    return ",".join(str(int(c)) for c in t)


def parse_config(text, space=None):
    text = text.strip()
    t = tuple(int(c) for c in text.split(",")) if text else ()
    if space is not None:
        space.check(t)
    return t


class StateSpace:
    """All configurations 0 <= t_v <= T_v of a tree."""

    def __init__(self, tree, max_states=None):
        self.tree = tree
        self.n = len(tree.vertices)
        self.radix = np.array([tree.threshold[v] + 1 for v in tree.vertices], dtype=np.int64)
        self.threshold = self.radix - 1
        weight = np.ones(self.n, dtype=np.int64)
        for i in range(self.n - 2, -1, -1):
            weight[i] = weight[i + 1] * self.radix[i + 1]
        self.weight = weight
        size = 1
        for r in self.radix:
            size *= int(r)
        self.size = size
        if max_states is not None and size > max_states:
            raise CapExceeded(f"state space has {size} states, cap is {max_states}")

    def __len__(self):
        return self.size

    def __iter__(self):
        for i in range(self.size):
            yield self.unrank(i)

    def check(self, t):
        if len(t) != self.n:
            raise ValidationError(f"configuration has {len(t)} entries, tree has {self.n} vertices")
        for c, r, v in zip(t, self.radix, self.tree.vertices):
            if not 0 <= c < r:
                raise ValidationError(f"grain count {c} at {v!r} outside [0, {r - 1}]")

    def rank(self, t):
        self.check(t)
        return int(sum(int(c) * int(w) for c, w in zip(t, self.weight)))

    def unrank(self, i):
        if not 0 <= i < self.size:
            raise ValidationError(f"rank {i} outside [0, {self.size})")
        out = []
        for w, r in zip(self.weight, self.radix):
            out.append(int(i // w % r))
        return tuple(out)

    @cached_property
    def digits(self):
        """(size, n) array whose row i is unrank(i)."""
        idx = np.arange(self.size, dtype=np.int64)
        return (idx[:, None] // self.weight[None, :]) % self.radix[None, :]

    @cached_property
    def above(self):
        """above[v, w] = 1 when w >= v in the tree order."""
        tree = self.tree
        a = np.zeros((self.n, self.n), dtype=np.int64)
        for w in tree.vertices:
            for v in tree.path_to_root(w):
                a[tree.index[v], tree.index[w]] = 1
        return a

    @cached_property
    def zeta_table(self):
        """zeta transform of every state, shape (size, n)."""
        return self.digits @ self.above.T

    def zeta(self, t):
        """Map vertex -> number of grains at or above it."""
        self.check(t)
        vec = self.above @ np.asarray(t, dtype=np.int64)
        return {v: int(vec[i]) for i, v in enumerate(self.tree.vertices)}

    # -- upsets ----------------------------------------------------------

    def mask(self, vertices):
        m = 0
        for v in vertices:
            m |= 1 << self.tree.index[v]
        return m

    def vertices_of(self, mask):
        return [v for i, v in enumerate(self.tree.vertices) if mask >> i & 1]

    def is_upset(self, mask):
        tree = self.tree
        for i, v in enumerate(tree.vertices):
            if mask >> i & 1:
                for c in tree.children(v):
                    if not mask >> tree.index[c] & 1:
                        return False
        return True

    @cached_property
    def full_mask(self):
        return (1 << self.n) - 1

    @cached_property
    def upsets(self):
        """Every upset of the vertex poset as a bitmask, sorted by size then value."""
        tree = self.tree
        if not tree.vertices:
            return [0]

        def subtree_mask(v):
            m = 1 << tree.index[v]
            for c in tree.children(v):
                m |= subtree_mask(c)
            return m

        def ups(v):
            # either v is in the upset (then its whole subtree is) or not
            res = [0]
            for c in tree.children(v):
                res = [a | b for a in res for b in ups(c)]
            res.append(subtree_mask(v))
            return res

        masks = sorted(set(ups(tree.root)), key=lambda m: (bin(m).count("1"), m))
        return masks

    def dominates(self, t, t2, upset=None):
        """True when t is dominated by t2 on the vertices of ``upset``.

        ``upset`` is a bitmask (default: all vertices, the full dominance
        order).
        """
        mask = self.full_mask if upset is None else upset
        if not self.is_upset(mask):
            raise ValidationError("vertex set is not an upset")
        self.check(t)
        self.check(t2)
        z1 = self.above @ np.asarray(t, dtype=np.int64)
        z2 = self.above @ np.asarray(t2, dtype=np.int64)
        for i in range(self.n):
            if mask >> i & 1 and z1[i] > z2[i]:
                return False
        return True

    def dominance_matrix(self, upset=None):
        """Boolean (size, size) matrix D[i, j] = state i dominated by state j."""
        mask = self.full_mask if upset is None else upset
        cols = [i for i in range(self.n) if mask >> i & 1]
        z = self.zeta_table[:, cols]
        if not cols:
            return np.ones((self.size, self.size), dtype=bool)
        return np.all(z[:, None, :] <= z[None, :, :], axis=2)

    def class_ids(self, mask):
        """Label states by their restriction to the vertices of ``mask``."""
        cols = [i for i in range(self.n) if mask >> i & 1]
        if not cols:
            return np.zeros(self.size, dtype=np.int64)
        sub = self.digits[:, cols]
        ids = np.zeros(self.size, dtype=np.int64)
        for k, c in enumerate(cols):
            ids = ids * self.radix[c] + sub[:, k]
        return ids
