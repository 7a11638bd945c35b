import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import cherry, trees
from test_arborescence import ten_vertex_tree
from treepile.arborescence import Arborescence
from treepile.configuration import StateSpace, format_config, parse_config
from treepile.errors import CapExceeded, ValidationError

# Ten-vertex tree, vertex order a b c d f g h j k r; a hand-checked configuration
SAMPLE_CONFIG = dict(h=0, j=1, k=2, d=1, f=0, g=0, a=1, b=2, c=1, r=1)


def test_sizes():
    assert StateSpace(cherry()).size == 8
    assert StateSpace(Arborescence([], {}, {})).size == 1
    assert StateSpace(ten_vertex_tree(threshold=2)).size == 3**10


def test_rank_examples():
    sp = StateSpace(cherry())
    assert sp.rank((0, 0, 0)) == 0
    assert sp.rank((1, 1, 1)) == 7
    assert sp.rank((0, 1, 1)) == 3
    with pytest.raises(ValidationError):
        sp.rank((2, 0, 0))
    with pytest.raises(ValidationError):
        sp.unrank(8)


def test_state_cap():
    with pytest.raises(CapExceeded):
        StateSpace(ten_vertex_tree(threshold=2), max_states=1000)


@given(trees(max_vertices=5, max_threshold=3), st.data())
@settings(max_examples=40, deadline=None)
def test_rank_bijection(tree, data):
    sp = StateSpace(tree)
    i = data.draw(st.integers(0, sp.size - 1))
    assert sp.rank(sp.unrank(i)) == i
    assert tuple(sp.digits[i]) == sp.unrank(i)


def test_zeta_transform():
    tree10 = ten_vertex_tree(threshold=2)
    sp = StateSpace(tree10)
    t = tuple(SAMPLE_CONFIG[v] for v in tree10.vertices)
    z = sp.zeta(t)
    assert z["r"] == 9
    assert z["b"] == SAMPLE_CONFIG["b"] + SAMPLE_CONFIG["d"] + SAMPLE_CONFIG["f"] + SAMPLE_CONFIG["h"] + SAMPLE_CONFIG["j"] + SAMPLE_CONFIG["k"]
    for leaf in tree10.leaves():
        assert z[leaf] == SAMPLE_CONFIG[leaf]
    assert set(sp.zeta((0,) * 10).values()) == {0}


def test_dominance_examples():
    sp = StateSpace(cherry())
    assert sp.dominates((1, 0, 1), (1, 0, 1))
    assert sp.dominates((0, 0, 0), (1, 1, 0))
    assert not sp.dominates((1, 0, 0), (0, 1, 1))
    with pytest.raises(ValidationError):
        sp.dominates((0, 0, 0), (1, 1, 1), upset=sp.mask(["r"]))


def test_upsets_of_cherry():
    sp = StateSpace(cherry())
    got = {frozenset(sp.vertices_of(m)) for m in sp.upsets}
    want = {frozenset(s) for s in [(), ("a",), ("b",), ("a", "b"), ("a", "b", "r")]}
    assert got == want


@given(trees(max_vertices=4, max_threshold=2))
@settings(max_examples=25, deadline=None)
def test_dominance_is_partial_order(tree):
    sp = StateSpace(tree)
    d = sp.dominance_matrix()
    assert d.diagonal().all()
    assert not np.any(d & d.T & ~np.eye(sp.size, dtype=bool))
    # transitivity via boolean matrix product
    two = (d.astype(int) @ d.astype(int)) > 0
    assert not np.any(two & ~d)
    for mask in sp.upsets:
        du = sp.dominance_matrix(mask)
        ids = sp.class_ids(mask)
        same = ids[:, None] == ids[None, :]
        assert np.all(du[same])


def test_config_serialization():
    sp = StateSpace(cherry())
    assert format_config((0, 1, 1)) == "0,1,1"
    assert parse_config("0,1,1", sp) == (0, 1, 1)
    with pytest.raises(ValidationError):
        parse_config("0,1", sp)
