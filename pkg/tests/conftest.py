import math
import random
from fractions import Fraction

from hypothesis import strategies as st

from treepile.arborescence import Arborescence, line_tree


def cherry(rates=None):
    """The three-vertex tree a, b -> r with unit thresholds.

    ``rates`` is (y_a, y_b, x_a, x_b, x_r); all 1/5 by default.
    """
    ya, yb, xa, xb, xr = rates or [Fraction(1, 5)] * 5
    return Arborescence(
        ["a", "b", "r"],
        {"a": "r", "b": "r", "r": None},
        {"a": 1, "b": 1, "r": 1},
        {"a": xa, "b": xb, "r": xr},
        {"a": ya, "b": yb},
    )


def random_rates(tree, rng, hi=9):
    """Positive integer weights on x_v and on y at the leaves, normalized."""
    leaves = set(tree.leaves())
    w = {("x", v): rng.randint(1, hi) for v in tree.vertices}
    w.update({("y", v): rng.randint(1, hi) for v in leaves})
    s = sum(w.values())
    return tree.with_rates(
        {v: Fraction(w["x", v], s) for v in tree.vertices},
        {v: Fraction(w["y", v], s) if v in leaves else Fraction(0) for v in tree.vertices},
    )


def random_tree(rng, n, max_threshold=3, max_states=None, thresholds=None):
    """Random recursive tree on n vertices with random rates; v0 is the root."""
    while True:
        vs = [f"v{i}" for i in range(n)]
        parent = {vs[0]: None}
        for i in range(1, n):
            parent[vs[i]] = vs[rng.randrange(i)]
        if thresholds is not None:
            th = {v: thresholds(v, parent, rng) for v in vs}
        else:
            th = {v: rng.randint(1, max_threshold) for v in vs}
        if max_states is None or math.prod(t + 1 for t in th.values()) <= max_states:
            break
    return random_rates(Arborescence(vs, parent, th), rng)


def uniform_line(thresholds):
    from treepile.arborescence import uniform_rates

    return uniform_rates(line_tree(thresholds, y=1, x=[1] * len(thresholds)))


@st.composite
def trees(draw, max_vertices=4, max_threshold=2):
    """Hypothesis strategy for small rated arborescences."""
    n = draw(st.integers(1, max_vertices))
    seed = draw(st.integers(0, 2**32 - 1))
    return random_tree(random.Random(seed), n, max_threshold=max_threshold)

