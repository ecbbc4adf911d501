import csv
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import scenario
from hodgelim.errors import NoIntegralCandidate, NotNormalFunctionShape
from hodgelim.filtrations import DecreasingFiltration
from hodgelim.linalg import EXACT, Matrix, Subspace, nilpotent_exp
from hodgelim.normal_functions import (
    NormalFunctionData,
    SGrid,
    analyze_density,
    limiting_grading,
    newton_certify,
    report_lines,
    scan_zero_locus,
    write_zero_locus_csv,
    z_from_s,
    zero_test_point,
)
from hodgelim.scalars import GQ

i = GQ(0, 1)


def offset_extension(c):
    """Constant split extension with F^0 = <e0 + c h1, h1 + i h2>."""
    s = scenario("split_extension")
    s.Finf = DecreasingFiltration(3, {-1: Subspace.full(3), 0: Subspace(3, [[1, c, 0], [0, 1, i]])})
    return NormalFunctionData.from_scenario(s)


def nf(name):
    return NormalFunctionData.from_scenario(scenario(name))


# -- pointwise test


@pytest.mark.parametrize("c", [GQ(0), GQ(1), GQ(-3)])
def test_integral_offset_is_zero(c):
    t = zero_test_point(offset_extension(c), [i], mode=EXACT)
    assert t.zero and t.retraction_ok
    assert t.grading == Matrix([[0, 0, 0], [c, -1, 0], [0, 0, -1]])


def test_half_offset_is_not_zero():
    data = offset_extension(GQ(Fraction(1, 2)))
    assert not zero_test_point(data, [i], mode=EXACT).zero
    t = zero_test_point(data, [complex(0.3, 1.0)])
    assert not t.zero and t.residual == pytest.approx(0.5)
    assert t.retraction_ok is None


def test_shape_rejections():
    with pytest.raises(NotNormalFunctionShape):
        nf("pure_hs")
    with pytest.raises(NotNormalFunctionShape):
        nf("mixed_rank4")


@settings(max_examples=20, deadline=None)
@given(st.floats(0, 1), st.floats(0.2, 2.0), st.floats(0, 1), st.floats(0.2, 2.0), st.integers(0, 1))
def test_verdict_is_monodromy_invariant(x1, y1, x2, y2, j):
    for name in ("nf_diagonal", "nf_two_variable", "nf_generic"):
        data = nf(name)
        z = [complex(x1, y1), complex(x2, y2)][: data.r]
        z1 = list(z)
        z1[j % data.r] += 1
        assert zero_test_point(data, z).zero == zero_test_point(data, z1).zero


def test_z_from_s():
    z = z_from_s([0.25j])
    assert 0 <= z[0].real < 1 and z[0].imag > 0
    with pytest.raises(ValueError):
        z_from_s([0])


# -- scanning


def test_scan_split_is_all_hit():
    rep = scan_zero_locus(nf("split_extension"), SGrid.real_rays(1, 0.02, 0.5, 12))
    assert len(rep.hits) == rep.total == 12
    assert rep.density == "dense-suspect"
    assert len(rep.certified) == 12 and not rep.failed


def test_scan_diagonal_certifies_roots():
    grid = SGrid.real_rays(2, 0.02, 0.5, 12)
    rep = scan_zero_locus(nf("nf_diagonal"), grid)
    assert rep.hits and len(rep.certified) == len(rep.hits)
    for root in rep.certified:
        assert root.residual < 1e-12
        assert abs(root.s[0] - root.s[1]) <= grid.cell_size()


def test_scan_generic_is_empty():
    rep = scan_zero_locus(nf("nf_generic"), SGrid.real_rays(1, 0.02, 0.5, 12))
    assert rep.hits == [] and rep.density == "discrete" and rep.Y_Z is None


def test_newton_from_an_off_grid_start():
    data = nf("nf_diagonal")
    rep = scan_zero_locus(data, SGrid.real_rays(2, 0.02, 0.5, 8), certify=False)
    root = newton_certify(data.scenario, (0.21, 0.2), rep.Y_inf, rep.Y_Z)
    assert root.residual < 1e-12
    assert abs(root.s[0] - root.s[1]) < 1e-9


def test_csv_and_report(tmp_path):
    rep = scan_zero_locus(nf("split_extension"), SGrid.real_rays(1, 0.1, 0.4, 4))
    out = tmp_path / "z.csv"
    write_zero_locus_csv(rep, 1, out)
    rows = list(csv.reader(out.open()))
    assert rows[0] == ["kind", "s1_re", "s1_im", "residual", "steps"]
    assert [r[0] for r in rows[1:]] == ["hit"] * 4 + ["root"] * 4
    lines = report_lines(rep)
    assert lines[0] == "grid points: 4" and "density: dense-suspect" in lines


# -- density analysis


def test_gamma_zero_candidate_is_whole_space():
    data = nf("nf_gamma_zero")
    Y = limiting_grading(data.scenario)
    v = analyze_density(data, Y)
    assert v.verdict == "zero locus = S"
    assert v.omega == [] and v.commutes and v.kernels_equal


def test_non_commuting_candidate_refutes():
    data = nf("nf_gamma_zero")
    Y_Z = Matrix([[0, 0, 0], [0, -1, 0], [1, 0, -1]])
    v = analyze_density(data, Y_Z)
    assert v.verdict == "density refuted"
    assert v.omega == [0] and v.beta[(0, 0)] == 1 and v.b == 1


def test_commuting_but_different_candidate_has_empty_locus():
    v = analyze_density(nf("nf_gamma_zero"), Matrix([[0, 0, 0], [1, -1, 0], [0, 0, -1]]))
    assert v.omega == [] and v.verdict == "density refuted"
    assert v.locus.startswith("empty")


def test_non_integral_candidate_rejected():
    with pytest.raises(NoIntegralCandidate):
        analyze_density(nf("nf_gamma_zero"), Matrix([[0, 0, 0], [GQ(1) / 2, -1, 0], [0, 0, -1]]))


@settings(max_examples=20, deadline=None)
@given(st.lists(st.integers(-3, 3), min_size=2, max_size=2))
def test_kernels_agree_after_monodromy_shift(mu):
    data = nf("nf_two_variable")
    s = data.scenario
    g = nilpotent_exp(s.N_of([GQ(m) for m in mu], EXACT))
    Y_Z = g @ limiting_grading(s) @ g.inverse()
    v = analyze_density(data, Y_Z, mu=mu)
    assert v.kernels_equal


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(-2, 2), min_size=9, max_size=9))
def test_omega_empty_iff_commuting(entries):
    data = nf("nf_two_variable")
    Y_Z = Matrix([entries[0:3], entries[3:6], entries[6:9]])
    v = analyze_density(data, Y_Z)
    assert (v.omega == []) == v.commutes
    for j in v.omega:
        assert v.beta[(j, j)] == 1
