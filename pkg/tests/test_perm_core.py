import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from patternindep.errors import TieError
from patternindep.perm_core import (INV, REV, IDENTITY, PATTERN_NAMES, Permutation, apply_group,
                                    count_patterns4, count_patterns4_batch, count_patterns4_oracle,
                                    dihedral_group, permutation_from_sample, random_permutation,
                                    random_permutations, ranks)

from oracles import S4, brute_counts

perm_strategy = st.integers(1, 14).flatmap(lambda n: st.permutations(list(range(1, n + 1))))


def test_pattern_order_is_lexicographic():
    assert PATTERN_NAMES == tuple(S4)
    assert PATTERN_NAMES[0] == "1234" and PATTERN_NAMES[-1] == "4321"


@pytest.mark.parametrize("values, expected", [
    ((3.1, 1.2, 2.7), (3, 1, 2)),
    ((0.5, 0.9, 0.1, 0.7), (2, 4, 1, 3)),
    ((1.0, 2.0, 3.0, 4.0, 5.0), (1, 2, 3, 4, 5)),
])
def test_ranks(values, expected):
    assert ranks(values) == expected


def test_ranks_rejects_ties_unless_jittered():
    with pytest.raises(TieError):
        ranks([1.0, 2.0, 1.0])
    a = ranks([1.0, 2.0, 1.0], jitter_seed=7)
    b = ranks([1.0, 2.0, 1.0], jitter_seed=7)
    assert a == b
    assert a[1] == 3 and sorted(a) == [1, 2, 3]


def test_permutation_validates_bijection():
    with pytest.raises(ValueError):
        Permutation([1, 1, 2])
    with pytest.raises(ValueError):
        Permutation([0, 1, 2])


def test_permutation_from_sample_examples():
    assert permutation_from_sample([(1, 10), (2, 30), (3, 20)]) == (1, 3, 2)
    x = np.linspace(0, 1, 9)
    assert permutation_from_sample(np.column_stack([x, np.exp(x)])) == tuple(range(1, 10))
    assert permutation_from_sample(np.column_stack([x, -x])) == tuple(range(9, 0, -1))


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 30), st.integers(0, 2**31))
def test_permutation_from_sample_ignores_point_order(n, seed):
    rng = np.random.default_rng(seed)
    pts = rng.random((n, 2))
    shuffled = pts[rng.permutation(n)]
    assert permutation_from_sample(pts) == permutation_from_sample(shuffled)


def test_oracle_small_cases():
    c4 = count_patterns4_oracle(Permutation([1, 2, 3, 4]))
    assert c4["1234"] == 1 and c4.total == 1
    c5 = count_patterns4_oracle(Permutation([1, 2, 3, 4, 5]))
    assert c5["1234"] == 5 and c5.total == 5
    assert count_patterns4_oracle(Permutation([2, 1, 3])).total == 0


@settings(max_examples=80, deadline=None)
@given(perm_strategy)
def test_fast_counter_matches_pure_python_enumeration(p):
    fast = count_patterns4(Permutation(p))
    assert list(fast.counts) == brute_counts(p)
    assert fast.total == (math.comb(len(p), 4) if len(p) >= 4 else 0)


def test_identity_and_reversal_of_length_100():
    n = 100
    ident = count_patterns4(Permutation(range(1, n + 1)))
    assert ident["1234"] == 3_921_225 and ident.total == 3_921_225
    rev = count_patterns4(Permutation(range(n, 0, -1)))
    assert rev["4321"] == 3_921_225 and rev.total == 3_921_225


def test_batch_matches_single():
    rng = np.random.default_rng(3)
    P = random_permutations(40, 25, rng)
    B = count_patterns4_batch(P)
    for row, perm in zip(B, P):
        assert np.array_equal(row, count_patterns4(Permutation(perm + 1)).counts)


def test_counts_are_int64_for_large_n():
    n = 1700
    c = count_patterns4(Permutation(range(1, n + 1)))
    assert c.counts.dtype == np.int64
    assert c["1234"] == math.comb(n, 4) > 2**31


def test_group_examples():
    assert apply_group(REV, Permutation([1, 3, 2])) == (2, 3, 1)
    assert apply_group(INV, Permutation([2, 3, 1])) == (3, 1, 2)
    G = dihedral_group()
    assert len(G) == 8
    assert len({g.matrix for g in G}) == 8
    assert INV.then(INV).matrix == IDENTITY.matrix
    assert REV.then(REV).matrix == IDENTITY.matrix
    # closure
    mats = {g.matrix for g in G}
    assert all(a.then(b).matrix in mats for a in G for b in G)


@settings(max_examples=40, deadline=None)
@given(perm_strategy)
def test_inv_is_involution(p):
    P = Permutation(p)
    assert apply_group(INV, apply_group(INV, P)) == P


@settings(max_examples=40, deadline=None)
@given(st.integers(4, 16).flatmap(lambda n: st.permutations(list(range(1, n + 1)))))
def test_counts_equivariant_under_dihedral_group(p):
    P = Permutation(p)
    base = count_patterns4(P)
    for g in dihedral_group():
        moved = count_patterns4(apply_group(g, P))
        for name in PATTERN_NAMES:
            sigma = apply_group(g, Permutation([int(c) for c in name]))
            assert moved["".join(map(str, sigma))] == base[name]


def test_random_permutation_uniform_and_deterministic():
    assert random_permutation(1, 0) == (1,)
    rng = np.random.default_rng(11)
    P = random_permutations(3, 60_000, rng)
    keys, freq = np.unique(P @ np.array([9, 3, 1]), return_counts=True)
    assert len(keys) == 6
    assert np.all(np.abs(freq / 60_000 - 1 / 6) < 0.01)
    a = random_permutations(10, 5, np.random.default_rng(4))
    b = random_permutations(10, 5, np.random.default_rng(4))
    assert np.array_equal(a, b)


def test_quasirandom_frequencies():
    reps, n = 100_000, 20
    rng = np.random.default_rng(2024)
    t = count_patterns4_batch(random_permutations(n, reps, rng)) / math.comb(n, 4)
    mean = t.mean(axis=0)
    se = t.std(axis=0, ddof=1) / math.sqrt(reps)
    assert np.all(np.abs(mean - 1 / 24) <= 3.5 * se)
