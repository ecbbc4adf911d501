import csv

import pytest

from conftest import fixture_path
from hodgelim.cli import main
from hodgelim.filtrations import DecreasingFiltration, IncreasingFiltration
from hodgelim.linalg import Matrix, Subspace
from hodgelim.orbits import OrbitScenario
from hodgelim.scalars import GQ
from hodgelim.scenario_io import save


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    cap = capsys.readouterr()
    return code, cap.out, cap.err


def fx(name):
    return fixture_path(name + ".json")


def test_validate(capsys):
    code, out, _ = run(capsys, "validate", fx("sl2_pure"))
    assert code == 0 and out.rstrip().endswith("verdict: pass")
    code, out, _ = run(capsys, "validate", fx("bad_gamma_origin"))
    assert code == 1 and "[admissibility:gamma-vanishes-at-origin] FAIL" in out


def test_malformed_input_exits_2(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(fx("sl2_pure").read_text().replace('"1"', '"1//2"', 1))
    code, _, err = run(capsys, "validate", bad)
    assert code == 2 and "line" in err
    with pytest.raises(SystemExit) as exc:
        main(["limit", str(fx("sl2_pure"))])
    assert exc.value.code == 2


def test_limit(capsys, tmp_path):
    csv_out = tmp_path / "lim.csv"
    seq = fx("nf_two_variable_sequence")
    code, out, _ = run(capsys, "limit", fx("nf_two_variable"), "--sequence", seq, "--out", csv_out)
    assert code == 0 and "verdict: converged" in out
    assert len(list(csv.reader(csv_out.open()))) == 41
    code, out, _ = run(capsys, "limit", fx("nf_two_variable"), "--sequence", seq, "--m-max", 20, "--tol", 0)
    assert code == 1 and "not converged" in out


def test_zero_locus(capsys, tmp_path):
    code, out, _ = run(capsys, "zero-locus", fx("split_extension"), "--grid", "0.1:0.4:6", "--out", tmp_path / "z.csv")
    assert code == 0
    assert "[zero-locus] hits: 6 in 1 cluster(s)" in out
    assert "[zero-locus] density: dense-suspect" in out
    code, _, err = run(capsys, "zero-locus", fx("pure_hs"))
    assert code == 1 and "shape error" in err
    code, _, _ = run(capsys, "zero-locus", fx("split_extension"), "--grid", "0:1:3")
    assert code == 2


def test_analyze_with_candidate(capsys):
    code, out, _ = run(capsys, "analyze", fx("nf_gamma_zero"), "--candidate", fx("nf_gamma_zero_candidate"))
    assert code == 0
    assert "[density-analysis] verdict: density refuted" in out
    assert "[density-analysis] Omega: [1]" in out
    code, out, _ = run(capsys, "analyze", fx("nf_gamma_zero"), "--grid", "0.1:0.3:3")
    assert code == 0 and "verdict: zero locus = S" in out


def test_xi_unavailable_exits_3(capsys, tmp_path):
    W = IncreasingFiltration(2, {-2: Subspace.coordinate(2, [0]), 0: Subspace.full(2)})
    F = DecreasingFiltration(2, {-1: Subspace.full(2), 0: Subspace(2, [[GQ(0, 1), 1]])})
    p = tmp_path / "ht.json"
    save(OrbitScenario(2, W, F, [Matrix.zeros(2)], name="hodge_tate"), p)
    code, _, err = run(capsys, "splittings", p)
    assert code == 3 and "xi provider unavailable" in err


@pytest.mark.parametrize("cmd", ["bigrading", "splittings", "gradings", "chain", "census", "bounded"])
def test_reports_run(capsys, cmd):
    code, out, _ = run(capsys, cmd, fx("mixed_rank4"))
    assert code == 0 and out


def test_output_is_deterministic(capsys):
    argv = ["zero-locus", fx("nf_diagonal"), "--grid", "0.05:0.5:10"]
    first = run(capsys, *argv)
    second = run(capsys, *argv)
    assert first == second
    argv = ["validate", fx("nf_two_variable"), "--seed", 7]
    assert run(capsys, *argv) == run(capsys, *argv)
