"""Command-line entry point: ``hodgelim <command> scenario.json [options]``.

Exit codes: 0 pass, 1 semantic failure, 2 input error, 3 missing xi provider.
"""
from __future__ import annotations

import argparse
import os
import sys

from . import linalg
from .asymptotics import (
    boundedness_scan,
    gamma_component_analysis,
    integral_grading_census,
    strip_samples,
    verify_main_limit,
    write_limit_csv,
)
from .deligne import deligne_grading, grading_chain, twist_polynomiality_check, weight_chain
from .errors import (
    HodgeLimError,
    NotAdmissible,
    NotNormalFunctionShape,
    ScenarioFormatError,
    ScheduleNotInStrip,
    ViolationFound,
    XiUnavailable,
)
from .linalg import EXACT, Matrix
from .mhs import MHS, bigrading, check_bigrading_axioms, deligne_grading_of, is_split_real, sl2_split
from .normal_functions import (
    NormalFunctionData,
    analyze_density,
    report_lines,
    scan_zero_locus,
    write_zero_locus_csv,
)
from .orbits import check_admissible_orbit
from .scalars import format_scalar
from .scenario_io import _Decoder, _Reader, load, parse_grid, sequence_load
from .weights import default_cone_samples, kashiwara_checks

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_XI = 0, 1, 2, 3


def _fmt(a: Matrix) -> str:
    if a.mode == EXACT:
        return "[" + "; ".join(" ".join(format_scalar(x) for x in row) for row in a.rows) + "]"
    rows = a.arr
    return "[" + "; ".join(" ".join(f"{v.real:.12g}" + (f"{v.imag:+.12g}i" if abs(v.imag) > 1e-15 else "") for v in row) for row in rows) + "]"


def _limit_weight(s):
    Ws = weight_chain(s.Ns, s.W)
    if any(w is None for w in Ws):
        raise NotAdmissible("relative weight filtrations do not exist for this scenario")
    return Ws


# ---------------------------------------------------------------------------
# commands


def cmd_validate(s, args, out) -> int:
    ok = True
    rep = check_admissible_orbit(s)
    for key, val in rep.verdicts.items():
        out(f"[admissibility:{key}] {'pass' if val else 'FAIL'}")
    for f in rep.failures:
        out(f"  failure: {f}")
    ok &= rep.ok
    if s.r:
        try:
            kr = kashiwara_checks(s.Ns, s.W, default_cone_samples(s.r, seed=args.seed))
            out(f"[relative-weight-cone] {'pass' if kr.ok else 'FAIL'}")
            for f in kr.failures:
                out(f"  failure: {f}")
            ok &= kr.ok
        except HodgeLimError as e:
            out(f"[relative-weight-cone] FAIL: {e}")
            ok = False
    if rep.ok and s.gamma:
        try:
            chain = grading_chain(s.Ns, s.Finf, s.W)
            gamma_component_analysis(s, chain)
            out("[gamma-weight-vanishing] pass")
        except ViolationFound as e:
            out(f"[gamma-weight-vanishing] FAIL: {e}")
            ok = False
    out(f"verdict: {'pass' if ok else 'fail'}")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_bigrading(s, args, out) -> int:
    M = _limit_weight(s)[-1]
    m = MHS(s.Finf, M)
    bg = bigrading(m)
    out("[limit-bigrading] pieces of (F_inf, M):")
    for (p, q), sp in sorted(bg.pieces.items()):
        out(f"  I^{{{p},{q}}}: dim {sp.dim}")
    out(f"  Y = {_fmt(bg.grading)}")
    ax = check_bigrading_axioms(m, bg)
    for k, v in ax.items():
        out(f"[bigrading-axiom:{k}] {'pass' if v else 'FAIL'}")
    return EXIT_OK if all(ax.values()) else EXIT_FAIL


def cmd_splittings(s, args, out) -> int:
    M = _limit_weight(s)[-1]
    m = MHS(s.Finf, M)
    res = sl2_split(m)
    out(f"[delta-splitting] delta = {_fmt(res.delta)}")
    out(f"[sl2-splitting] xi = {_fmt(res.xi)}")
    out(f"  split over R: {is_split_real(MHS(res.split_F, M))}")
    return EXIT_OK


def cmd_gradings(s, args, out) -> int:
    Ws = _limit_weight(s)
    M = Ws[-1]
    out(f"[limit-grading] Y_(F_inf, M) = {_fmt(deligne_grading_of(s.Finf, M))}")
    res = sl2_split(MHS(s.Finf, M))
    out(f"[split-limit-grading] Y-hat = {_fmt(deligne_grading_of(res.split_F, M))}")
    if s.r:
        N = s.N_of([1] * s.r, EXACT)
        try:
            Y = deligne_grading(N, res.split_F, s.W, M)
            out(f"[deligne-grading] Y(N_1 + ... + N_r, Y_M) = {_fmt(Y)}")
        except HodgeLimError as e:
            out(f"[deligne-grading] unavailable: {e}")
            return EXIT_FAIL
    return EXIT_OK


def cmd_chain(s, args, out) -> int:
    chain = grading_chain(s.Ns, s.Finf, s.W)
    for j in range(chain.r, -1, -1):
        out(f"[grading-chain] Y-hat^{j} = {_fmt(chain.Y(j))}")
    for j in range(1, chain.r + 1):
        out(f"[grading-chain] N-hat_{j} = {_fmt(chain.Nhats[j - 1])}")
    inv = chain.invariant_report()
    for k, v in inv.items():
        out(f"[chain-invariant:{k}] {'pass' if v else 'FAIL'}")
    ok = all(inv.values())
    if chain.r:
        fit = twist_polynomiality_check(chain)
        out(f"[twist-polynomiality] {'pass' if fit.ok else 'FAIL'} residual {fit.residual:.3e} constant error {fit.constant_error:.3e}")
        ok &= fit.ok
    return EXIT_OK if ok else EXIT_FAIL


def cmd_limit(s, args, out) -> int:
    spec = sequence_load(args.sequence, s.r)
    rep = verify_main_limit(s, spec, m_max=args.m_max, tol=args.tol, threads=args.threads)
    out(f"[main-limit] mode {rep.mode}; limit {_fmt(rep.rhs)}")
    for row in rep.rows[-5:]:
        out(f"  m = {row.m}: error {row.error:.6e}")
    for note in rep.notes:
        out(f"  note: {note}")
    out(f"verdict: {'converged' if rep.converged else 'not converged'} (tol {args.tol:g})")
    if args.out:
        write_limit_csv(rep, args.out)
    return EXIT_OK if rep.converged else EXIT_FAIL


def cmd_bounded(s, args, out) -> int:
    rep = boundedness_scan(s, threads=args.threads)
    out(f"[bounded-hat-grading] sup of lattice norm {rep.sup:.6g} at z = {tuple(complex(z) for z in rep.argmax)}")
    for y, v in rep.trend:
        out(f"  max Im z = {y:g}: {v:.6g}")
    out(f"verdict: {'growth suspected' if rep.growth_flag else 'bounded on samples'}")
    return EXIT_FAIL if rep.growth_flag else EXIT_OK


def cmd_census(s, args, out) -> int:
    res = integral_grading_census(s, strip_samples(s.r), tol=args.tol, threads=args.threads)
    out(f"[integral-grading-census] {len(res.gradings)} distinct integral grading(s) on {len(res.hits)} hit(s)")
    for i, g in enumerate(res.gradings):
        out(f"  #{i}: {_fmt(g)}")
    out(f"  hat grading agrees at hits: {res.hat_agrees}")
    return EXIT_OK


def cmd_zero_locus(s, args, out) -> int:
    nf = NormalFunctionData.from_scenario(s)
    grid = parse_grid(args.grid, s.r)
    rep = scan_zero_locus(nf, grid, tol=args.tol, certify=args.certify, threads=args.threads)
    if rep.Y_Z is not None:
        try:
            rep.analyzer = analyze_density(nf, rep.Y_Z)
        except XiUnavailable as e:
            out(f"  analyzer unavailable: {e}")
    for line in report_lines(rep):
        out(f"[zero-locus] {line}")
    if args.out:
        write_zero_locus_csv(rep, s.r, args.out)
    return EXIT_OK


def _read_candidate(path, n) -> Matrix:
    text = open(path).read()
    import json

    try:
        data = _Decoder().decode(text)
    except json.JSONDecodeError as e:
        raise ScenarioFormatError(e.msg, e.lineno, e.colno) from None
    return _Reader(text).matrix(data, n)


def cmd_analyze(s, args, out) -> int:
    nf = NormalFunctionData.from_scenario(s)
    if args.candidate:
        YZ = _read_candidate(args.candidate, s.dim)
    else:
        rep = scan_zero_locus(nf, parse_grid(args.grid, s.r), tol=args.tol, certify=False, threads=args.threads)
        if rep.Y_Z is None:
            out("[density-analysis] no integral grading found on the grid; supply --candidate")
            return EXIT_FAIL
        YZ = rep.Y_Z
    mu = [float(x) for x in args.mu.split(",")] if args.mu else None
    v = analyze_density(nf, YZ, mu=mu)
    for line in v.lines():
        out(f"[density-analysis] {line}")
    return EXIT_OK


COMMANDS = {
    "validate": cmd_validate,
    "bigrading": cmd_bigrading,
    "splittings": cmd_splittings,
    "gradings": cmd_gradings,
    "chain": cmd_chain,
    "limit": cmd_limit,
    "bounded": cmd_bounded,
    "census": cmd_census,
    "zero-locus": cmd_zero_locus,
    "analyze": cmd_analyze,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="seed for sampled cone points")
    common.add_argument("--threads", type=int, default=None, help="worker threads (default: HODGELIM_THREADS or 1)")
    common.add_argument("--svd-tol", type=float, default=None, help="relative SVD rank threshold in float mode")
    p = argparse.ArgumentParser(prog="hodgelim", description="Limits of mixed Hodge gradings along degenerations.")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name, parents=[common])
        sp.add_argument("scenario", help="scenario JSON file")
        if name == "limit":
            sp.add_argument("--sequence", required=True, help="sequence spec JSON file")
            sp.add_argument("--m-max", type=int, default=40)
            sp.add_argument("--tol", type=float, default=1e-3)
            sp.add_argument("--out", help="CSV output: m, y_j, t_j, error, norm")
        if name == "census":
            sp.add_argument("--tol", type=float, default=1e-8)
        if name in ("zero-locus", "analyze"):
            sp.add_argument("--grid", default="0.05:0.5:20", help="lo:hi:n per axis (comma separated) on real rays")
            sp.add_argument("--tol", type=float, default=1e-8)
        if name == "zero-locus":
            sp.add_argument("--certify", action=argparse.BooleanOptionalAction, default=True)
            sp.add_argument("--out", help="CSV output: kind, s_j re/im, residual, steps")
        if name == "analyze":
            sp.add_argument("--candidate", help="JSON matrix of scalar strings for Y_Z")
            sp.add_argument("--mu", help="comma separated real parts of the limit point (default 0)")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads is not None:
        os.environ["HODGELIM_THREADS"] = str(args.threads)
    if args.svd_tol is not None:
        linalg.set_svd_tol(args.svd_tol)

    def out(line):
        print(line)

    try:
        s = load(args.scenario)
        return COMMANDS[args.command](s, args, out)
    except (ScenarioFormatError, ScheduleNotInStrip) as e:
        print(f"input error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except XiUnavailable as e:
        print(f"xi provider unavailable: {e}", file=sys.stderr)
        return EXIT_XI
    except NotNormalFunctionShape as e:
        print(f"shape error: {e}", file=sys.stderr)
        return EXIT_FAIL
    except HodgeLimError as e:
        print(f"{type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
