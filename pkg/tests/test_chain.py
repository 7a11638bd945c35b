import random
from fractions import Fraction

import pytest

from conftest import cherry, random_rates, random_tree, uniform_line
from treepile import chain
from treepile.arborescence import Arborescence
from treepile.configuration import StateSpace
from treepile.errors import CapExceeded, HypothesisUnmet, NotErgodic, ValidationError
from treepile.operators import LANDSLIDE, TRICKLE


def random_positive_rates(rng, k=5, hi=30):
    w = [rng.randint(1, hi) for _ in range(k)]
    s = sum(w)
    return [Fraction(v, s) for v in w]


def cherry_matrix(ya, yb, xa, xb, xr):
    """Reference 8x8 matrix written out by hand, states 000..111 in lexicographic order."""
    rows = [
        [0, xr, 0, 0, 0, 0, 0, 0],
        [0, 0, xb, xb, xa, xa, 0, 0],
        [yb, 0, 0, xr, 0, 0, 0, 0],
        [0, yb, yb, 0, 0, 0, xa, xa],
        [ya, 0, 0, 0, 0, xr, 0, 0],
        [0, ya, 0, 0, ya, 0, xb, xb],
        [0, 0, ya, 0, yb, 0, 0, xr],
        [0, 0, 0, ya, 0, yb, ya + yb, 0],
    ]
    for j in range(8):
        rows[j][j] = 1 - sum(rows[i][j] for i in range(8))
    return rows


def cherry_closed_form(ya, yb, xa, xb, xr):
    z = (xa + ya) * (xb + yb) * (ya + yb + xr)
    fa, fb, fr = (xa, ya), (xb, yb), (xr, ya + yb)
    return [fa[a] * fb[b] * fr[r] / z for a in (0, 1) for b in (0, 1) for r in (0, 1)]


def test_single_vertex_matrix():
    x, y = Fraction(2, 3), Fraction(1, 3)
    tree = Arborescence(["r"], {"r": None}, {"r": 1}, {"r": x}, {"r": y})
    m = chain.build_transition(tree, LANDSLIDE)
    assert m.to_dense() == [[x, x], [y, y]]


def test_cherry_matrix_entries():
    rng = random.Random(0)
    for _ in range(5):
        rates = random_positive_rates(rng)
        tree = cherry(rates)
        for model in (TRICKLE, LANDSLIDE):
            assert chain.build_transition(tree, model).to_dense() == cherry_matrix(*rates)
    m = chain.build_transition(cherry(), TRICKLE)
    sp = m.space
    assert m.entry(sp.rank((0, 1, 1)), sp.rank((1, 1, 0))) == Fraction(1, 5)
    assert all(s == 1 for s in m.column_sums())


def test_cherry_uniform_values():
    m = chain.build_transition(cherry(), LANDSLIDE)
    pi = chain.stationary_exact(m)
    assert pi[0] == Fraction(1, 12)
    assert pi[7] == Fraction(1, 6)
    assert chain.partition_function_trickle(cherry()) == Fraction(12, 125)
    assert chain.master_equation_residual(m, pi) == 0


def test_cherry_closed_form_random():
    rng = random.Random(1)
    for _ in range(10):
        rates = random_positive_rates(rng)
        pi = chain.stationary_exact(chain.build_transition(cherry(rates), TRICKLE))
        assert pi == cherry_closed_form(*rates)


def test_solvers_agree():
    rng = random.Random(2)
    for _ in range(4):
        tree = random_tree(rng, rng.randint(2, 5), max_states=200)
        m = chain.build_transition(tree, LANDSLIDE)
        assert chain.stationary_exact(m, method="bareiss") == chain.stationary_exact(m, method="lifting")


def test_ergodicity_checks():
    assert chain.is_ergodic(chain.build_transition(cherry(), TRICKLE))
    flip = chain.TransitionMatrix.from_dense([[0, 1], [1, 0]])
    assert not chain.is_ergodic(flip)
    assert chain.closed_class_count(flip) == 1
    split = chain.TransitionMatrix.from_dense([[1, 0], [0, 1]])
    assert chain.closed_class_count(split) == 2
    with pytest.raises(NotErgodic):
        chain.stationary_exact(split)


def test_from_dense_validation():
    with pytest.raises(ValidationError):
        chain.TransitionMatrix.from_dense([[1, 0]])
    m = chain.TransitionMatrix.from_dense([["1/2", "1/3"], ["1/2", "2/3"]])
    assert m.den == 6
    assert chain.stationary_exact(m) == [Fraction(2, 5), Fraction(3, 5)]


def test_exact_cap():
    m = chain.build_transition(cherry(), TRICKLE)
    with pytest.raises(CapExceeded):
        chain.stationary_exact(m, cap=4)


def test_trickle_product_form_random():
    rng = random.Random(3)
    for _ in range(6):
        tree = random_tree(rng, rng.randint(1, 5), max_states=300)
        sp = StateSpace(tree)
        exact = chain.stationary_exact(chain.build_transition(tree, TRICKLE, sp))
        assert chain.stationary_product_trickle(tree, sp) == exact
        assert sum(exact) == 1


def test_rho_factors():
    tree = cherry()
    r = chain.rho(tree)
    assert r["a"] == [Fraction(1, 2), Fraction(1, 2)]
    assert r["r"] == [Fraction(1, 3), Fraction(2, 3)]


def test_landslide_product_form_and_hypothesis():
    rng = random.Random(4)
    for _ in range(4):
        tree = random_tree(
            rng, rng.randint(1, 4), thresholds=lambda v, parent, r: r.randint(1, 4) if parent[v] is None else 1
        )
        exact = chain.stationary_exact(chain.build_transition(tree, LANDSLIDE))
        assert chain.stationary_product_landslide(tree) == exact
    bad = uniform_line([2, 1])
    with pytest.raises(HypothesisUnmet):
        chain.mu(bad)
    with pytest.raises(HypothesisUnmet):
        chain.partition_function_landslide(bad)


def test_mu_single_root():
    y, x = Fraction(1, 4), Fraction(3, 4)
    tree = Arborescence(["r"], {"r": None}, {"r": 2}, {"r": x}, {"r": y})
    assert chain.mu(tree)["r"] == [x, y * x, y * y]
    assert sum(chain.mu(tree)["r"]) == 1


def test_landslide_not_product_in_general():
    tree = uniform_line([2, 2])
    exact = chain.stationary_exact(chain.build_transition(tree, LANDSLIDE))
    assert chain.stationary_product_trickle(tree) != exact


def test_leaf_recursion():
    rng = random.Random(5)
    for _ in range(6):
        tree = random_tree(rng, rng.randint(2, 5), max_states=150)
        for leaf in tree.leaves():
            assert chain.check_stationary_recursion(tree, leaf, TRICKLE)
    tree = random_rates(cherry(), rng)
    assert chain.check_stationary_recursion(tree, "a", LANDSLIDE)
    with pytest.raises(HypothesisUnmet):
        chain.check_stationary_recursion(uniform_line([2, 1]), "1", LANDSLIDE)


def test_derived_chain_rates():
    tree = cherry()
    sub = chain.derived_chain(tree.with_rates(extended=True), "a")
    assert sub.vertices == ("b", "r")
    assert sub.y["r"] == Fraction(1, 4)
    assert sub.x["b"] == Fraction(1, 4)
    total = sum(sub.x.values()) + sum(sub.y.values())
    assert total == 1
    with pytest.raises(ValidationError):
        chain.derived_chain(tree, "r")


def test_transition_json_round_trip():
    m = chain.build_transition(cherry(), TRICKLE)
    again = chain.TransitionMatrix.from_dense(m.to_json())
    assert again.to_dense() == m.to_dense()
