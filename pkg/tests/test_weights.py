import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import enumerate_weight_flags, jordan_matrix, random_unipotent_real, relative_axioms_oracle
from suites import commuting_pairs, pure
from hodgelim.errors import DoesNotPreserveW, NotNilpotent, RelativeWeightMissing
from hodgelim.filtrations import IncreasingFiltration
from hodgelim.linalg import Matrix, Subspace
from hodgelim.scalars import GQ
from hodgelim.weights import (
    cone_element,
    default_cone_samples,
    kashiwara_checks,
    monodromy_relative,
    monodromy_weight,
    relative_axioms_hold,
)

E = Matrix.unit


def test_weight_of_zero():
    M = monodromy_weight(Matrix.zeros(3))
    assert M[-1].dim == 0 and M[0].dim == 3


def test_weight_of_jordan2():
    M = monodromy_weight(E(2, 0, 1))
    assert M[-2].dim == 0
    assert M[-1] == M[0] == Subspace.coordinate(2, [0])
    assert M[1].dim == 2


def test_weight_of_jordan3():
    M = monodromy_weight(E(3, 0, 1) + E(3, 1, 2))
    assert M[-3].dim == 0
    assert M[-2] == M[-1] == Subspace.coordinate(3, [0])
    assert M[0] == M[1] == Subspace.coordinate(3, [0, 1])
    assert M[2].dim == 3


def test_weight_rejects_non_nilpotent():
    with pytest.raises(NotNilpotent):
        monodromy_weight(Matrix.identity(2))


def test_relative_with_zero_n_is_w():
    W = IncreasingFiltration(3, {-1: Subspace.coordinate(3, [1, 2]), 0: Subspace.full(3)})
    res = monodromy_relative(Matrix.zeros(3), W)
    assert res.exists and res.M == W


def test_relative_pure_is_monodromy_weight():
    res = monodromy_relative(E(2, 0, 1), pure(2, 0))
    assert res.exists and res.M == monodromy_weight(E(2, 0, 1), 0)


def test_relative_missing():
    W = IncreasingFiltration(2, {-1: Subspace.coordinate(2, [0]), 0: Subspace.full(2)})
    res = monodromy_relative(E(2, 0, 1), W)
    assert not res.exists and res.reason


def test_relative_requires_w_preserved():
    W = IncreasingFiltration(2, {-1: Subspace.coordinate(2, [1]), 0: Subspace.full(2)})
    with pytest.raises(DoesNotPreserveW):
        monodromy_relative(E(2, 0, 1), W)


partitions = st.lists(st.integers(1, 3), min_size=1, max_size=3).filter(lambda p: sum(p) <= 6)


@settings(max_examples=30, deadline=None)
@given(partitions, st.integers(-3, 3), st.integers(0, 10**6))
def test_weight_shift(part, k, seed):
    rows, _ = jordan_matrix(part)
    g = random_unipotent_real(random.Random(seed), sum(part))
    N = g @ Matrix(rows) @ g.inverse()
    assert monodromy_weight(N, k) == monodromy_weight(N, 0).shift(-k)


@settings(max_examples=30, deadline=None)
@given(partitions, st.integers(-2, 2), st.integers(0, 10**6))
def test_pure_relative_equals_weight(part, k, seed):
    n = sum(part)
    rows, _ = jordan_matrix(part)
    g = random_unipotent_real(random.Random(seed), n)
    N = g @ Matrix(rows) @ g.inverse()
    res = monodromy_relative(N, pure(n, k))
    assert res.exists and res.M == monodromy_weight(N, k)


@settings(max_examples=30, deadline=None)
@given(partitions, st.fractions(min_value=1, max_value=9, max_denominator=5))
def test_rescale_invariance(part, lam):
    rows, _ = jordan_matrix(part)
    N = Matrix(rows)
    W = pure(N.nrows, 1)
    assert monodromy_relative(N.scale(GQ(lam)), W).M == monodromy_relative(N, W).M


@pytest.mark.parametrize("part", [[1], [2], [1, 1], [3], [2, 1], [2, 2], [3, 1], [4]])
def test_enumeration_finds_unique_flag(part):
    rows, _ = jordan_matrix(part)
    assert len(enumerate_weight_flags(rows, sum(part))) == 1


def test_kashiwara_single_n():
    W = pure(2, 1)
    rep = kashiwara_checks([E(2, 0, 1)], W, [(1,), (2,), (5,)])
    assert rep.ok and rep.cone_constancy[(0,)]


def test_kashiwara_commuting_pairs():
    for name, (Ns, W) in commuting_pairs().items():
        rep = kashiwara_checks(Ns, W)
        assert rep.ok, (name, rep.failures)


def test_kashiwara_idempotence():
    Ns, W = commuting_pairs()["extension"]
    for I in [(0,), (1,), (0, 1)]:
        C = cone_element(Ns, [int(k in I) for k in range(2)])
        M = monodromy_relative(C, W).M
        assert monodromy_relative(C, M).M == M


def test_kashiwara_reports_missing_filtration():
    W = IncreasingFiltration(2, {-1: Subspace.coordinate(2, [0]), 0: Subspace.full(2)})
    with pytest.raises(RelativeWeightMissing):
        kashiwara_checks([E(2, 0, 1)], W, [(1,)])


def test_default_cone_samples():
    s = default_cone_samples(3)
    assert len(s) == 3 + 3 + 8
    assert all(all(c > 0 for c in v) for v in s[6:])
    assert default_cone_samples(3) == s


def test_library_and_oracle_axiom_checks_agree():
    for name, (Ns, W) in commuting_pairs().items():
        for v in default_cone_samples(2, n_random=3):
            N = cone_element(Ns, v)
            M = monodromy_relative(N, W).M
            assert relative_axioms_hold(N, W, M) and relative_axioms_oracle(N, W, M)
            wrong = W if not N.is_zero() else None
            if wrong is not None and wrong != M:
                assert not relative_axioms_oracle(N, W, wrong)
