import random

import numpy as np
import pytest
from hypothesis import given, settings

from conftest import cherry, random_tree, trees
from test_arborescence import ten_vertex_tree
from treepile.arborescence import Arborescence
from treepile.configuration import StateSpace
from treepile.errors import InternalError, ValidationError
from treepile.operators import (
    LANDSLIDE,
    SOURCE,
    TRICKLE,
    SandpileOperator,
    alpha,
    apply,
    beta,
    compose,
    const,
    decompose_table,
    generators,
    identity,
    identity_wreath,
    landslide,
    operator_table,
    power,
    recursive_apply,
    right_multiply_wreath,
    source,
    trickle,
    wreath_decompose,
)

# Starting configuration shared by the hand-worked operator examples on the
# ten-vertex tree (all thresholds 2).
BASE = dict(a=1, b=1, c=2, d=1, f=1, g=2, h=0, j=2, k=2, r=2)


def threshold2_tree():
    return ten_vertex_tree(threshold=2)


def cfg(tree, **vals):
    return tuple(vals[v] for v in tree.vertices)


def changed(tree, before, after):
    return {v: (before[i], after[i]) for i, v in enumerate(tree.vertices) if before[i] != after[i]}


def test_source_figure_examples():
    t = threshold2_tree()
    start = cfg(t, **BASE)
    assert changed(t, start, source(t, "j", start)) == {"d": (1, 2)}
    # g, c and r are all full here, so sigma_g has nowhere to put the grain
    assert source(t, "g", start) == start
    full = tuple(t.threshold[v] for v in t.vertices)
    assert all(source(t, v, full) == full for v in t.vertices)


def test_trickle_figure_examples():
    t = threshold2_tree()
    start = cfg(t, **BASE)
    assert changed(t, start, trickle(t, "k", start)) == {"k": (2, 1), "f": (1, 2)}
    assert changed(t, start, trickle(t, "g", start)) == {"g": (2, 1)}
    assert trickle(t, "h", start) == start


def test_landslide_figure_examples():
    t = threshold2_tree()
    start = cfg(t, **BASE)
    assert changed(t, start, landslide(t, "k", start)) == {"k": (2, 0), "f": (1, 2), "b": (1, 2)}
    assert changed(t, start, landslide(t, "g", start)) == {"g": (2, 0)}


def test_root_topples_drop_grains():
    t = Arborescence(["r"], {"r": None}, {"r": 3})
    assert trickle(t, "r", (2,)) == (1,)
    assert trickle(t, "r", (0,)) == (0,)
    assert landslide(t, "r", (3,)) == (0,)


def test_unknown_vertex():
    with pytest.raises(ValidationError):
        apply(cherry(), SOURCE, "zz", (0, 0, 0))


def test_landslide_is_trickle_power_when_threshold_one():
    sp = StateSpace(cherry())
    for v in "abr":
        assert np.array_equal(operator_table(sp, LANDSLIDE, v), operator_table(sp, TRICKLE, v))


def _instances(count, max_states=1024, seed=11):
    rng = random.Random(seed)
    out = [cherry(), threshold2_tree().with_thresholds({v: 1 for v in threshold2_tree().vertices})]
    while len(out) < count:
        out.append(random_tree(rng, rng.randint(1, 6), max_states=max_states))
    return out


@pytest.mark.parametrize("tree", _instances(10), ids=lambda t: f"{len(t.vertices)}v")
def test_operator_identities_exhaustive(tree):
    sp = StateSpace(tree)
    states = list(sp)
    for v in tree.vertices:
        th = operator_table(sp, TRICKLE, v)
        ls = operator_table(sp, LANDSLIDE, v)
        assert np.array_equal(ls, power(th, tree.threshold[v]))
        for kind in (SOURCE, TRICKLE, LANDSLIDE):
            tab = operator_table(sp, kind, v)
            direct = [sp.rank(apply(tree, kind, v, t)) for t in states]
            assert tab.tolist() == direct
            for leaf in tree.leaves()[:2]:
                rec = [sp.rank(recursive_apply(tree, kind, v, t, leaf=leaf)) for t in states]
                assert rec == direct
                if len(tree.vertices) > 1:
                    assert np.array_equal(wreath_decompose(tree, kind, v, leaf).to_table(), tab)


def test_recursive_apply_examples():
    t = cherry()
    assert recursive_apply(t, LANDSLIDE, "a", (0, 1, 0), leaf="a") == (0, 1, 0)
    assert recursive_apply(t, SOURCE, "a", (0, 1, 0), leaf="a") == (1, 1, 0)
    assert recursive_apply(t, LANDSLIDE, "a", (1, 0, 1), leaf="a") == (0, 0, 1)
    assert recursive_apply(t, LANDSLIDE, "a", (1, 0, 0), leaf="a") == (0, 0, 1)
    with pytest.raises(ValidationError):
        recursive_apply(t, SOURCE, "a", (0, 0, 0), leaf="r")


def test_wreath_shapes():
    t = Arborescence(["l", "m", "r"], {"l": "m", "m": "r", "r": None}, {"l": 2, "m": 2, "r": 1})
    sub = StateSpace(t.delete_leaf("l"))
    s_m = operator_table(sub, SOURCE, "m")
    ident = np.arange(sub.size)
    tau = wreath_decompose(t, LANDSLIDE, "l", "l")
    assert tau.top == const(2, 0) and tau.top_label == "const 0"
    for i, b in enumerate(tau.branch):
        assert np.array_equal(b, power(s_m, i) if i else ident)
    theta = wreath_decompose(t, TRICKLE, "l", "l")
    assert theta.top == beta(2)
    assert np.array_equal(theta.branch[0], ident)
    assert all(np.array_equal(b, s_m) for b in theta.branch[1:])
    sig = wreath_decompose(t, SOURCE, "l", "l")
    assert sig.top == alpha(2)
    assert np.array_equal(sig.branch[2], s_m) and np.array_equal(sig.branch[0], ident)
    other = wreath_decompose(t, SOURCE, "r", "l")
    assert other.top == identity(2)
    assert all(np.array_equal(b, other.branch[0]) for b in other.branch)


def test_right_multiplication_rules():
    for tree in _instances(6, max_states=256, seed=5):
        if len(tree.vertices) < 2:
            continue
        sp = StateSpace(tree)
        leaf = tree.leaves()[0]
        eps = identity_wreath(tree, leaf)
        rng = random.Random(len(tree.vertices))
        gens = [(k, v) for v in tree.vertices for k in (SOURCE, TRICKLE, LANDSLIDE)]
        f, table = eps, np.arange(sp.size)
        for _ in range(8):
            kind, v = rng.choice(gens)
            g = operator_table(sp, kind, v)
            f = right_multiply_wreath(f, kind, v)
            table = compose(table, g)
            assert np.array_equal(f.to_table(), table)
            assert decompose_table(sp, table, leaf) == f
            assert f == f * identity_wreath(tree, leaf)
        assert right_multiply_wreath(eps, LANDSLIDE, leaf) == wreath_decompose(tree, LANDSLIDE, leaf, leaf)
        assert right_multiply_wreath(eps, SOURCE, leaf) == wreath_decompose(tree, SOURCE, leaf, leaf)


def test_decompose_rejects_mixing_map():
    sp = StateSpace(cherry())
    swap = np.array([sp.rank((t[2], t[1], t[0])) for t in sp])
    with pytest.raises(InternalError):
        decompose_table(sp, swap, "a")


def _order_check(tree):
    """Count violations of the dominance-order properties of the generators."""
    sp = StateSpace(tree)
    bad = 0
    for mask in sp.upsets:
        d = sp.dominance_matrix(mask)
        ids = sp.class_ids(mask)
        idx = np.arange(sp.size)
        for v in tree.vertices:
            for kind in (SOURCE, LANDSLIDE):
                g = operator_table(sp, kind, v)
                # preserves the preorder: t <= t' implies g t <= g t'
                bad += int(np.count_nonzero(d & ~d[np.ix_(g, g)]))
                # decreasing for topples, increasing for sources
                mono = d[g, idx] if kind == LANDSLIDE else d[idx, g]
                bad += int(np.count_nonzero(~mono))
                if not mask >> tree.index[v] & 1:
                    bad += int(np.count_nonzero(ids[g] != ids))
    srcs = [operator_table(sp, SOURCE, v) for v in tree.vertices]
    for a in srcs:
        for b in srcs:
            bad += int(np.count_nonzero(compose(a, b) != compose(b, a)))
    return bad


@pytest.mark.parametrize("tree", _instances(10, max_states=243, seed=3), ids=lambda t: f"{len(t.vertices)}v")
def test_order_properties(tree):
    assert _order_check(tree) == 0


@given(trees(max_vertices=4, max_threshold=2))
@settings(max_examples=20, deadline=None)
def test_generator_tables_are_total(tree):
    sp = StateSpace(tree)
    for op in generators(sp, LANDSLIDE, sources="all"):
        tab = op.table
        assert tab.min() >= 0 and tab.max() < sp.size
        assert op(sp.unrank(0)) == sp.unrank(int(tab[0]))


def test_sandpile_operator_cap():
    sp = StateSpace(cherry())
    op = SandpileOperator(sp, SOURCE, "a", cap=4)
    assert op.name == "σ_a" and not op.materialized
    assert op((0, 0, 0)) == (1, 0, 0)
    with pytest.raises(ValidationError):
        op.table
