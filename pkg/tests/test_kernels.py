import random

import numpy as np
import pytest

from conftest import random_tree
from treepile import _pykernels, kernels
from treepile.configuration import StateSpace
from treepile.operators import LANDSLIDE, SOURCE, TRICKLE, operator_table

BACKENDS = kernels.available_backends()
MASK64 = (1 << 64) - 1


GOLDEN = 0x9E3779B97F4A7C15


def mix(z):
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def splitmix64_next(state):
    """Scalar reference: returns (new_state, output)."""
    state = (state + GOLDEN) & MASK64
    return state, mix(state)


def test_splitmix_reference_value():
    # first output of splitmix64 seeded with 0
    assert splitmix64_next(0)[1] == 0xE220A8397B1DCDAF


def test_backend_reported():
    assert kernels.BACKEND in BACKENDS
    assert "python" in BACKENDS


@pytest.mark.parametrize("name", sorted(BACKENDS))
def test_simulate_matches_scalar_reference(name):
    be = BACKENDS[name]
    rng = random.Random(1)
    tables = np.array([[rng.randrange(6) for _ in range(6)] for _ in range(3)], dtype=np.int64)
    cumulative = np.array([2, 5, 7], dtype=np.int64)
    seed, trials, steps = 12345, 5, 9
    got = be.simulate(tables, cumulative, 7, seed, 0, steps, trials)
    seeds = be.trajectory_seeds(seed, trials)
    for i in range(trials):
        s = int(seeds[i])
        state = 0
        for _ in range(steps):
            s, out = splitmix64_next(s)
            r = ((out >> 32) * 7) >> 32
            g = next(k for k, c in enumerate(cumulative) if r < c)
            state = int(tables[g, state])
        assert got[i] == state


def test_trajectory_seed_formula():
    seeds = _pykernels.trajectory_seeds(99, 3)
    for i in range(3):
        assert int(seeds[i]) == mix(99 ^ mix((i + 1) * GOLDEN & MASK64))


@pytest.mark.skipif(len(BACKENDS) < 2, reason="compiled extension not built")
def test_backends_agree_on_tables():
    rng = random.Random(4)
    for _ in range(15):
        tree = random_tree(rng, rng.randint(1, 6), max_states=2000)
        sp = StateSpace(tree)
        for v in tree.vertices:
            for kind in (SOURCE, TRICKLE, LANDSLIDE):
                ref = operator_table(sp, kind, v, backend=BACKENDS["python"])
                assert np.array_equal(operator_table(sp, kind, v, backend=BACKENDS["cython"]), ref)


@pytest.mark.skipif(len(BACKENDS) < 2, reason="compiled extension not built")
def test_backends_agree_on_simulation():
    rng = np.random.default_rng(0)
    tables = rng.integers(0, 50, size=(7, 50))
    cumulative = np.cumsum(rng.integers(1, 20, size=7))
    args = (tables, cumulative, int(cumulative[-1]), 2024, 3, 40, 500)
    a = BACKENDS["python"].simulate(*args)
    b = BACKENDS["cython"].simulate(*args)
    assert np.array_equal(np.asarray(a), np.asarray(b))


@pytest.mark.parametrize("name", sorted(BACKENDS))
def test_charpoly_mod_small(name):
    p = 1_000_003
    a = np.array([[2, 1], [3, 4]])
    # lambda^2 - 6 lambda + 5
    assert [int(c) for c in BACKENDS[name].charpoly_mod(a, p)] == [5, p - 6, 1]


@pytest.mark.parametrize("name", sorted(BACKENDS))
def test_charpoly_mod_against_numpy(name):
    p = 2_147_483_629
    rng = np.random.default_rng(7)
    for n in (1, 3, 6):
        a = rng.integers(-3, 4, size=(n, n))
        want = np.round(np.poly(a)[::-1]).astype(np.int64) % p
        got = np.asarray(BACKENDS[name].charpoly_mod(a, p), dtype=np.int64)
        assert np.array_equal(got, want)


@pytest.mark.parametrize("name", sorted(BACKENDS))
def test_solve_mod(name):
    p = 1_000_003
    rng = np.random.default_rng(3)
    a = rng.integers(0, p, size=(8, 8))
    x = rng.integers(0, p, size=8)
    b = [sum(int(a[i, j]) * int(x[j]) for j in range(8)) % p for i in range(8)]
    got = BACKENDS[name].solve_mod(a, np.array(b), p)
    assert [int(v) for v in got] == [int(v) for v in x]
    assert BACKENDS[name].solve_mod(np.zeros((2, 2), dtype=np.int64), np.ones(2, dtype=np.int64), p) is None


def test_pure_fallback_selected_by_environment():
    import os
    import subprocess
    import sys

    env = dict(os.environ, TREEPILE_PURE="1")
    out = subprocess.run(
        [sys.executable, "-c", "from treepile import kernels; print(kernels.BACKEND)"],
        env=env, capture_output=True, text=True, check=True,
    )
    assert out.stdout.strip() == "python"
