import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import random_mhs
from suites import dsum
from hodgelim.errors import NotMHS, XiUnavailable
from hodgelim.filtrations import DecreasingFiltration, IncreasingFiltration, grades
from hodgelim.linalg import Matrix, Subspace, nilpotent_exp
from hodgelim.mhs import (
    MHS,
    CKSRecursion,
    ZeroWhenDeltaZero,
    bigrading,
    check_bigrading_axioms,
    delta_split,
    deligne_grading_of,
    hat_grading,
    in_lambda_minus,
    is_mhs,
    is_split_real,
    lambda_basis,
    lambda_minus,
    sl2_split,
)
from hodgelim.scalars import GQ

E = Matrix.unit
i = GQ(0, 1)


def hodge_tate(f0):
    W = IncreasingFiltration(2, {-2: Subspace.coordinate(2, [0]), 0: Subspace.full(2)})
    F = DecreasingFiltration(2, {-1: Subspace.full(2), 0: Subspace(2, [f0])})
    return MHS(F, W)


HT = hodge_tate([i, 1])  # F^0 = <e2 + i e1>
HT_SPLIT = hodge_tate([0, 1])


def pure_weight0(n=2):
    return MHS(DecreasingFiltration(n, {0: Subspace.full(n)}), IncreasingFiltration(n, {0: Subspace.full(n)}))


def two_step(f):
    """Weights {0, -1}: C e0 + H with H of weight -1, h1 and h2 = conj pair."""
    W = IncreasingFiltration(3, {-1: Subspace.coordinate(3, [1, 2]), 0: Subspace.full(3)})
    F = DecreasingFiltration(3, {-1: Subspace.full(3), 0: Subspace(3, [f, [0, 1, i]])})
    return MHS(F, W)


def test_is_mhs_examples():
    assert is_mhs(pure_weight0().F, pure_weight0().W)
    assert is_mhs(HT.F, HT.W)
    bad = hodge_tate([1, 0])
    assert not is_mhs(bad.F, bad.W)
    with pytest.raises(NotMHS):
        bigrading(bad)


def test_bigrading_pure_weight0():
    bg = bigrading(pure_weight0())
    assert bg.pieces == {(0, 0): Subspace.full(2)}
    assert bg.grading.is_zero()


def test_bigrading_hodge_tate():
    bg = bigrading(HT)
    assert bg.piece(0, 0) == Subspace(2, [[i, 1]])
    assert bg.piece(-1, -1) == Subspace(2, [[1, 0]])
    Y = bg.grading
    assert list(Y.apply([i, 1])) == [0, 0]
    assert list(Y.apply([1, 0])) == [-2, 0]
    assert all(check_bigrading_axioms(HT, bg).values())


def test_bigrading_direct_sum_is_blockwise():
    a, b = HT, two_step([1, 0, 0])
    W = IncreasingFiltration(5, {k: _dsum_space(a.W[k], b.W[k]) for k in range(-3, 1)})
    F = DecreasingFiltration(5, {p: _dsum_space(a.F[p], b.F[p]) for p in range(-2, 2)})
    Y = bigrading(MHS(F, W)).grading
    assert Y == dsum(bigrading(a).grading, bigrading(b).grading)


def _dsum_space(s, t):
    vecs = [list(v) + [0] * t.n for v in s.basis] + [[0] * s.n + list(v) for v in t.basis]
    return Subspace(s.n + t.n, vecs)


def test_lambda_minus_examples():
    assert lambda_minus(pure_weight0()).dim == 0
    assert lambda_minus(two_step([1, 0, 0])).dim == 0
    lm = lambda_minus(HT)
    assert lm.dim == 1
    assert lm == Subspace(4, [[0, 1, 0, 0]])  # e2 -> e1, row-major


def test_is_split_real_examples():
    assert is_split_real(pure_weight0())
    assert not is_split_real(HT)
    assert is_split_real(HT_SPLIT)


def test_delta_examples():
    assert delta_split(HT_SPLIT).delta.is_zero()
    d = delta_split(HT)
    assert d.delta == E(2, 0, 1)
    assert is_split_real(MHS(d.split_F, HT.W))


def test_delta_direct_sum_is_blockwise():
    W = IncreasingFiltration(4, {k: _dsum_space(HT.W[k], HT_SPLIT.W[k]) for k in range(-3, 1)})
    F = DecreasingFiltration(4, {p: _dsum_space(HT.F[p], HT_SPLIT.F[p]) for p in range(-2, 2)})
    d = delta_split(MHS(F, W)).delta
    assert d == dsum(E(2, 0, 1), Matrix.zeros(2))


def test_sl2_split_examples():
    res = sl2_split(HT_SPLIT)
    assert res.xi.is_zero() and res.split_F == HT_SPLIT.F
    m = two_step([1, 0, GQ(1, 2)])
    res = sl2_split(m)
    assert res.delta.is_zero() and res.xi.is_zero()
    assert hat_grading(m.F, m.W) == deligne_grading_of(m.F, m.W)


def test_zero_provider_refuses_unsplit_input():
    with pytest.raises(XiUnavailable):
        sl2_split(HT, ZeroWhenDeltaZero())


def test_cks_provider_splits_hodge_tate():
    res = sl2_split(HT, CKSRecursion())
    # delta is pure of type (-1,-1) here, so e^{-xi} = e^{-i delta}
    assert res.xi == E(2, 0, 1).scale(i)
    assert is_split_real(MHS(res.split_F, HT.W))
    # a (-1,-1) morphism twist does not change the splitting
    alpha = E(2, 0, 1).scale(3)
    twisted = MHS(HT.F.apply(nilpotent_exp(alpha.scale(i))), HT.W)
    assert sl2_split(twisted, CKSRecursion()).split_F == res.split_F


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.integers(2, 6))
def test_grading_grades_w(seed, n):
    F, W = random_mhs(random.Random(seed), n)
    Y = bigrading(MHS(F, W)).grading
    assert grades(Y, W)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6), st.integers(2, 5))
def test_delta_properties(seed, n):
    m = MHS(*random_mhs(random.Random(seed), n))
    bg = bigrading(m)
    d = delta_split(m)
    assert d.delta.is_real()
    assert in_lambda_minus(d.delta, bg)
    assert is_split_real(MHS(d.split_F, m.W))
    assert d.delta.is_zero() == is_split_real(m, bg)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6), st.integers(2, 5), st.integers(-3, 3))
def test_bigrading_equivariance(seed, n, c):
    rng = random.Random(seed)
    m = MHS(*random_mhs(rng, n))
    bg = bigrading(m)
    basis = lambda_basis(m, bg)
    if not basis:
        return
    lam = Matrix.zeros(n)
    for b in basis:
        lam = lam + b.scale(GQ(rng.randint(-2, 2), c))
    g = nilpotent_exp(lam)
    moved = bigrading(MHS(m.F.apply(g), m.W))
    for key, piece in bg.pieces.items():
        assert moved.piece(*key) == piece.apply(g)


def test_split_inputs_from_generator_have_zero_delta():
    rng = random.Random(11)
    for _ in range(10):
        m = MHS(*random_mhs(rng, rng.randint(2, 6), split=True))
        assert delta_split(m).delta.is_zero()
