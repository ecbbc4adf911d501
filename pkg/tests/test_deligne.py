import numpy as np
import pytest

from suites import J, deligne_cases, extension3_data, pure, twist_suite
from hodgelim.deligne import (
    DeligneSystemData,
    GradingChain,
    check_axioms,
    conjugate_chain,
    deligne_grading,
    grading_chain,
    twist,
    twist_polynomiality_check,
    twist_ratios,
    y_from_t,
)
from hodgelim.errors import NonPositiveY, NotSplitLimit, XiUnavailable
from hodgelim.filtrations import DecreasingFiltration, IncreasingFiltration
from hodgelim.linalg import FLOAT, Matrix, Subspace, bracket, nilpotent_exp
from hodgelim.mhs import MHS, deligne_grading_of, sl2_split
from hodgelim.scalars import GQ
from hodgelim.weights import monodromy_relative

E = Matrix.unit
H = Matrix.diag([-1, 1])  # neutral element for J at center 0


def sl2_filtration():
    return DecreasingFiltration(2, {0: Subspace.full(2), 1: Subspace.coordinate(2, [1])})


# -- axioms


def test_axioms_single_jordan_block():
    rep = check_axioms(DeligneSystemData(pure(2, 0), [J], H))
    assert rep.ok, rep.failures


def test_axiom_four_fails_for_zero_grading():
    rep = check_axioms(DeligneSystemData(pure(2, 0), [J], Matrix.zeros(2)))
    assert not rep.verdicts["4"]
    assert any("[Y^r, N_1] != -2 N_1" in f for f in rep.failures)


def test_axioms_with_trailing_zero():
    rep = check_axioms(DeligneSystemData(pure(2, 0), [J, Matrix.zeros(2)], H))
    assert rep.ok, rep.failures


def test_axiom_one_fails_without_relative_filtration():
    W = IncreasingFiltration(2, {-1: Subspace.coordinate(2, [0]), 0: Subspace.full(2)})
    rep = check_axioms(DeligneSystemData(W, [J], H))
    assert not rep.verdicts["1"]


# -- one-step grading


def test_grading_with_zero_n_is_deligne_grading():
    W = IncreasingFiltration(2, {-2: Subspace.coordinate(2, [0]), 0: Subspace.full(2)})
    F = DecreasingFiltration(2, {-1: Subspace.full(2), 0: Subspace.coordinate(2, [1])})
    assert deligne_grading(Matrix.zeros(2), F, W) == deligne_grading_of(F, W)


def test_grading_on_pure_w_is_scalar():
    Y = deligne_grading(J, sl2_filtration(), pure(2, 1))
    assert Y == Matrix.identity(2)


@pytest.mark.parametrize("name, N, F, W", deligne_cases(), ids=[c[0] for c in deligne_cases()])
def test_grading_rescale_and_routes(name, N, F, W):
    M = monodromy_relative(N, W).M
    Fh = sl2_split(MHS(F, M)).split_F
    Y = deligne_grading(N, Fh, W)
    for lam in (2, GQ(1) / 3):
        assert deligne_grading(N.scale(GQ.coerce(lam)), Fh, W) == Y
    assert deligne_grading(N, Fh, W, method="characterization") == Y


def test_grading_needs_split_limit():
    W = IncreasingFiltration(2, {-2: Subspace.coordinate(2, [0]), 0: Subspace.full(2)})
    F = DecreasingFiltration(2, {-1: Subspace.full(2), 0: Subspace(2, [[GQ(0, 1), 1]])})
    with pytest.raises(NotSplitLimit):
        deligne_grading(Matrix.zeros(2), F, W)


def test_unknown_method():
    with pytest.raises(ValueError):
        deligne_grading(J, sl2_filtration(), pure(2, 1), method="guess")


# -- chains


def test_chain_collapses_for_zero_n():
    W = IncreasingFiltration(2, {-2: Subspace.coordinate(2, [0]), 0: Subspace.full(2)})
    F = DecreasingFiltration(2, {-1: Subspace.full(2), 0: Subspace.coordinate(2, [1])})
    ch = grading_chain([Matrix.zeros(2)], F, W)
    assert ch.Y(0) == ch.Y(1) == deligne_grading_of(F, W)


def test_chain_with_trailing_zero():
    Ns, F, W = extension3_data()
    one = grading_chain([Ns[0]], F, W)
    two = grading_chain([Ns[0], Matrix.zeros(3)], F, W)
    assert two.Y(0) == one.Y(0)


@pytest.mark.parametrize("name", list(twist_suite()))
def test_chain_invariants(name):
    Ns, F, W = twist_suite()[name]
    ch = grading_chain(Ns, F, W)
    inv = ch.invariant_report()
    assert all(inv.values()), inv
    for j in range(ch.r + 1):
        assert ch.Ws[j].preserved_by(ch.Y(0))
    assert ch.F(0).preserved_by(ch.Y(0))


def test_chain_limit_matches_numerics():
    """Y-hat^0 against the grading of e^{i N(y)} F-hat with y_1 >> y_2 >> 1."""
    from hodgelim.mhs import hat_grading

    Ns, F, W = twist_suite()["extension4"]
    ch = grading_chain(Ns, F, W)
    errs = []
    for y2 in (10.0, 100.0, 1000.0):
        y = (y2 * y2, y2)
        Nf = Ns[0].to_float().scale(y[0]) + Ns[1].to_float().scale(y[1])
        Fz = ch.F(ch.r).to_float().apply(nilpotent_exp(Nf.scale(1j)))
        errs.append((hat_grading(Fz, W.to_float()) - ch.Y(0).to_float()).max_abs())
    # the error decays like 1/y_2
    assert errs[-1] < 2e-3
    assert all(b < a / 5 for a, b in zip(errs, errs[1:]))


def test_conjugate_chain():
    Ns, F0, W = extension3_data()
    N = Ns[0]
    assert conjugate_chain([N], F0, W, Matrix.zeros(3)) == grading_chain([N], F0, W).Y(0)
    xi = E(3, 1, 0)  # commutes with N and preserves W and M(N, W)
    assert bracket(xi, N).is_zero()
    F = F0.apply(nilpotent_exp(xi))
    Y = conjugate_chain([N], F, W, xi)
    assert Y == grading_chain([N], F0, W).Y(0)
    with pytest.raises(XiUnavailable):
        conjugate_chain([N], F, W, E(3, 0, 1))


# -- twist


def _manual_chain(Y1, N):
    return GradingChain(Yhats=[Y1, Y1], Fhats=[], Hhats=[], Nhats=[], Ws=[], Ns=[N])


def test_twist_one_variable():
    t = twist(_manual_chain(Matrix.diag([1, -1]), J), [4.0])
    assert t.value.close(Matrix.diag([0.5, 2.0], FLOAT), 1e-14)


def test_twist_identity_when_ratios_are_one():
    Ns, F, W = twist_suite()["tensor"]
    ch = grading_chain(Ns, F, W)
    assert twist(ch, [1.0, 1.0]).value.close(Matrix.identity(4, FLOAT), 1e-14)


def test_twist_rejects_nonpositive():
    with pytest.raises(NonPositiveY):
        twist(_manual_chain(Matrix.diag([1, -1]), J), [0.0])


@pytest.mark.parametrize("name", ["tensor", "nested", "extension4"])
def test_partial_twist_rescales_earlier_n(name):
    Ns, F, W = twist_suite()[name]
    ch = grading_chain(Ns, F, W)
    y = (37.0, 5.0)
    t = twist(ch, y, iota=1).value
    lhs = t.inverse() @ Ns[0].to_float().scale(y[0]) @ t
    assert lhs.close(Ns[0].to_float().scale(y[0] / y[1]), 1e-10)


def test_ratios_round_trip():
    y = (40.0, 8.0, 2.0)
    assert np.allclose(y_from_t(twist_ratios(y)), y)
    assert twist_ratios(y) == (0.2, 0.25, 0.5)


def test_polynomiality_sl2_is_constant():
    F = sl2_filtration()
    ch = grading_chain([J], F, pure(2, 1))
    fit = twist_polynomiality_check(ch)
    assert fit.ok
    assert fit.constant_term.close(J.to_float().scale(1j), 1e-12)
    assert fit.residual < 1e-12


def test_polynomiality_zero_ns():
    W = IncreasingFiltration(2, {-2: Subspace.coordinate(2, [0]), 0: Subspace.full(2)})
    F = DecreasingFiltration(2, {-1: Subspace.full(2), 0: Subspace.coordinate(2, [1])})
    ch = grading_chain([Matrix.zeros(2), Matrix.zeros(2)], F, W)
    fit = twist_polynomiality_check(ch)
    assert fit.ok and fit.constant_term.max_abs() < 1e-14


def test_polynomiality_rank4():
    Ns, F, W = twist_suite()["extension4"]
    fit = twist_polynomiality_check(grading_chain(Ns, F, W), grid=(0.5, 0.25, 0.1))
    assert fit.ok and fit.residual < 1e-9
