"""Sign kernel and sparse map layer.

The transposition oracle below is the reference implementation for every
Koszul sign in the package: decompose the permutation into adjacent swaps
and multiply (-1)^{d_a d_b} per swap.
"""

from __future__ import annotations

import itertools
import random

import pytest
from hypothesis import given, strategies as st

from operadiq.exact import (
    Q, GradedBasis, LinMap, SignContext, TENSOR_SEP,
    interleave_sign, perm_sign, shuffle_sign, tensor_basis, tensor_map,
)


def transposition_sign_oracle(degrees, perm):
    """Bubble-sort the permuted sequence back; one Koszul factor per swap."""
    n = len(perm)
    inv = [0] * n
    for i, p in enumerate(perm):
        inv[p] = i
    seq = list(inv)  # original indices in their new positions
    sign = 1
    for i in range(n):
        for j in range(n - 1):
            if seq[j] > seq[j + 1]:
                if (degrees[seq[j]] * degrees[seq[j + 1]]) % 2:
                    sign = -sign
                seq[j], seq[j + 1] = seq[j + 1], seq[j]
    return sign


def random_graded_inputs(rng, n_max=7, deg_range=(-3, 4)):
    n = rng.randint(1, n_max)
    degrees = tuple(rng.randint(*deg_range) for _ in range(n))
    perm = list(range(n))
    rng.shuffle(perm)
    return degrees, tuple(perm)


def test_shuffle_sign_frozen_example():
    # degrees (1,1,0), blocks ({2},{1,3}) in 1-based notation
    ctx = SignContext((1, 1, 0))
    assert shuffle_sign(ctx, ((1,), (0, 2))) == -1


def test_perm_sign_identity_and_swap():
    ctx = SignContext((1, 1))
    assert perm_sign(ctx, (0, 1)) == 1
    assert perm_sign(ctx, (1, 0)) == -1
    assert perm_sign(SignContext((2, 1)), (1, 0)) == 1


def test_perm_sign_against_transposition_oracle_seeded():
    rng = random.Random(20240817)
    for _ in range(400):
        degrees, perm = random_graded_inputs(rng)
        assert perm_sign(SignContext(degrees), perm) == \
            transposition_sign_oracle(degrees, perm)


def test_shuffle_sign_matches_perm_sign_exhaustive_small():
    for degrees in itertools.product((0, 1, 2), repeat=4):
        ctx = SignContext(degrees)
        for k in range(5):
            for block in itertools.combinations(range(4), k):
                rest = tuple(i for i in range(4) if i not in block)
                order = list(block) + list(rest)
                perm = [0] * 4
                for pos, orig in enumerate(order):
                    perm[orig] = pos
                assert shuffle_sign(ctx, (block, rest)) == \
                    perm_sign(ctx, tuple(perm))


def test_perm_sign_multiplicativity():
    rng = random.Random(7)
    for _ in range(100):
        n = rng.randint(2, 6)
        degrees = tuple(rng.randint(0, 3) for _ in range(n))
        ctx = SignContext(degrees)
        p1 = list(range(n)); rng.shuffle(p1)
        # p2 must act on the reordered degrees
        p2 = list(range(n)); rng.shuffle(p2)
        comp = tuple(p2[p1[i]] for i in range(n))
        inv1 = [0] * n
        for i, p in enumerate(p1):
            inv1[p] = i
        degs_after = tuple(degrees[inv1[p]] for p in range(n))
        assert perm_sign(ctx, comp) == \
            perm_sign(ctx, tuple(p1)) * perm_sign(SignContext(degs_after), tuple(p2))


@given(st.lists(st.integers(min_value=-2, max_value=3), min_size=1, max_size=6),
       st.randoms(use_true_random=False))
def test_perm_sign_hypothesis(degrees, rnd):
    perm = list(range(len(degrees)))
    rnd.shuffle(perm)
    assert perm_sign(SignContext(tuple(degrees)), tuple(perm)) == \
        transposition_sign_oracle(degrees, perm)


# ---------------------------------------------------------------------------


def _basis(labels_by_degree, window=None):
    degs = list(labels_by_degree)
    if window is None:
        window = (min(degs), max(degs))
    return GradedBasis(window, labels_by_degree)


def test_graded_basis_validation():
    b = _basis({0: ["a"], 1: ["b", "c"]})
    assert b.degree("c") == 1
    assert b.dim() == 3 and b.dim(1) == 2
    with pytest.raises(ValueError):
        _basis({0: ["a"], 1: ["a"]})
    with pytest.raises(Exception):
        GradedBasis((0, 0), {1: ["x"]})


def test_linmap_degree_validation():
    b = _basis({0: ["a"], 1: ["b"]})
    LinMap(b, b, -1, {"b": {"a": Q(2)}})
    with pytest.raises(ValueError):
        LinMap(b, b, -1, {"a": {"b": Q(1)}})


def test_compose_against_dense_oracle():
    import sympy

    rng = random.Random(99)
    b1 = _basis({0: ["a%d" % i for i in range(3)]})
    b2 = _basis({1: ["b%d" % i for i in range(4)]}, window=(1, 1))
    b3 = _basis({2: ["c%d" % i for i in range(2)]}, window=(2, 2))

    def rand_map(src, tgt, deg):
        entries = {}
        for s in src.labels():
            col = {t: Q(rng.randint(-3, 3)) for t in tgt.labels()
                   if rng.random() < 0.7}
            entries[s] = col
        return LinMap(src, tgt, deg, entries)

    f = rand_map(b2, b3, 1)
    g = rand_map(b1, b2, 1)
    fg = f.compose(g)
    mf = sympy.Matrix([[f.column(s).get(t, 0) for s in b2.labels()]
                       for t in b3.labels()])
    mg = sympy.Matrix([[g.column(s).get(t, 0) for s in b1.labels()]
                       for t in b2.labels()])
    prod = mf * mg
    for j, s in enumerate(b1.labels()):
        for i, t in enumerate(b3.labels()):
            assert Q(int(prod[i, j])) == fg.column(s).get(t, Q(0))


def test_tensor_map_koszul_sign():
    # f (x) g with |g| odd picks up a sign over odd-degree first factors
    v = _basis({0: ["e"], 1: ["o"]})
    f = LinMap.identity(v)
    g = LinMap(v, v, -1, {"o": {"e": Q(1)}})
    fg = tensor_map([g, f])
    gf = tensor_map([f, g])
    sep = TENSOR_SEP
    assert gf.column("o" + sep + "o") == {"o" + sep + "e": Q(-1)}
    assert gf.column("e" + sep + "o") == {"e" + sep + "e": Q(1)}
    assert fg.column("o" + sep + "o") == {"e" + sep + "o": Q(1)}


def test_tensor_map_interchange():
    # (f1 (x) f2) o (g1 (x) g2) = (-1)^{|f2||g1|} (f1 o g1) (x) (f2 o g2)
    rng = random.Random(5)
    b = _basis({0: ["x0"], 1: ["x1"], 2: ["x2"]})

    def rand_map(deg):
        entries = {}
        for s in b.labels():
            col = {}
            for t in b.labels():
                if b.degree(t) - b.degree(s) == deg and rng.random() < 0.8:
                    col[t] = Q(rng.randint(-2, 2))
            entries[s] = col
        return LinMap(b, b, deg, entries)

    for df1, df2, dg1, dg2 in [(-1, -1, -1, 1), (-1, 1, 1, -1), (1, -1, -1, -1)]:
        f1, f2, g1, g2 = rand_map(df1), rand_map(df2), rand_map(dg1), rand_map(dg2)
        lhs = tensor_map([f1, f2]).compose(tensor_map([g1, g2]))
        sign = -1 if (df2 * dg1) % 2 else 1
        rhs = tensor_map([f1.compose(g1), f2.compose(g2)]).scale(sign)
        assert lhs == rhs


def test_interleave_sign_matches_tensor_map():
    assert interleave_sign([-1], [1], [1, 0]) == -1
    assert interleave_sign([-1, -1], [0, 1], [1, 1]) == -1
    # exponent 1*1 + 1*2 = 3
    assert interleave_sign([-1, -1], [1, 2], [1, 1, 1]) == -1


def test_tensor_basis_window():
    b = _basis({0: ["a"], 1: ["b"]})
    tb = tensor_basis(b, b)
    assert tb.window == (0, 2)
    assert tb.degree("b" + TENSOR_SEP + "b") == 2
    assert tb.dim() == 4
