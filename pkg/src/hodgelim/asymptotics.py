"""Limits of sl2-gradings along sl2-sequences, boundedness, integral census, Gamma weights."""
from __future__ import annotations

import csv
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .deligne import GradingChain, grading_chain, twist, weight_chain
from .errors import NotAdmissible, NotMHS, NumericalBreakdown, ViolationFound
from .filtrations import DecreasingFiltration
from .linalg import EXACT, FLOAT, Matrix, joint_eigenspaces, nilpotent_exp
from .mhs import MHS, deligne_grading_of, is_mhs, sl2_split
from .orbits import (
    GammaTerm,
    OrbitScenario,
    SL2SequenceSpec,
    check_admissible_orbit,
    gen_sequence,
    partial_gamma,
    period_operator,
)
from .scalars import GQ

log = logging.getLogger(__name__)

COND_LIMIT = 1e13


def default_threads() -> int:
    try:
        return max(1, int(os.environ.get("HODGELIM_THREADS", "1")))
    except ValueError:
        return 1


def _map(fn, items, threads: int | None):
    threads = default_threads() if threads is None else threads
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, items))


def lattice_norm(a: Matrix, lattice: Matrix | None) -> float:
    """Max absolute entry in the lattice basis."""
    if lattice is not None:
        L = lattice.to_float().arr
        a = Matrix(np.linalg.solve(L, a.to_float().arr @ L))
    return a.max_abs()


def permuted(s: OrbitScenario, sigma: Sequence[int]) -> OrbitScenario:
    """The scenario with variables reordered: new variable j is old variable sigma[j]."""
    if list(sigma) == list(range(s.r)):
        return s
    Ns = [s.Ns[k] for k in sigma]
    gamma = [GammaTerm(tuple(t.exps[k] for k in sigma), t.coeff) for t in s.gamma]
    return OrbitScenario(s.dim, s.W, s.Finf, Ns, gamma, s.lattice, s.polarizations, s.K_bound, s.name, s.metadata)


def _exact_or_none(v):
    try:
        return GQ(Fraction(complex(v).real), Fraction(complex(v).imag))
    except (OverflowError, ValueError):
        return None


def hat_grading_at(s: OrbitScenario, z: Sequence, xi=None, mode: str = FLOAT) -> Matrix:
    """Y-hat_{(F(z), W)} in the requested scalar mode."""
    g = period_operator(s, z, mode)
    if mode == FLOAT:
        c = np.linalg.cond(g.arr)
        if c > COND_LIMIT:
            raise NumericalBreakdown(f"period operator condition number {c:.3g} exceeds {COND_LIMIT:.0e}")
        F0, W = s.float_filtrations()
        F = F0.apply(g)
    else:
        F = s.Finf.apply(g)
        W = s.W
    if not is_mhs(F, W):
        raise NotMHS(f"F(z) is not a mixed Hodge structure at z = {tuple(complex(v) for v in z)}")
    res = sl2_split(MHS(F, W), xi)
    return deligne_grading_of(res.split_F, W)


def grading_at(s: OrbitScenario, z: Sequence, mode: str = FLOAT) -> Matrix:
    g = period_operator(s, z, mode)
    F, W = (s.Finf, s.W) if mode == EXACT else s.float_filtrations()
    # the bigrading raises NotMHS itself
    return deligne_grading_of(F.apply(g), W)


# ---------------------------------------------------------------------------
# limiting grading


@dataclass
class LimitRow:
    m: int
    y: tuple
    t: tuple
    error: float
    norm: float
    lhs: Matrix = field(repr=False)


@dataclass
class LimitReport:
    rows: list
    rhs: Matrix
    converged: bool
    tol: float
    mode: str
    substituted_limit: bool = False
    notes: list = field(default_factory=list)

    @property
    def errors(self) -> list:
        return [row.error for row in self.rows]

    @property
    def final_error(self) -> float:
        return self.rows[-1].error if self.rows else float("inf")


def converged_verdict(errors: Sequence[float], tol: float, window: int = 5) -> bool:
    """Final error below tol and strictly decreasing over the last `window` indices.

    A tail that is identically zero (exact agreement) also counts: there is
    no dip to guard against.
    """
    if not errors or not errors[-1] < tol:
        return False
    tail = list(errors[-window:])
    if all(e == 0.0 for e in tail):
        return True
    return all(b < a for a, b in zip(tail, tail[1:]))


def limit_rhs(s: OrbitScenario, spec: SL2SequenceSpec, xi=None, diverging: Sequence[int] | None = None):
    """Y(N(theta^1), Y(N(theta^2), ..., Y-hat_{(F_inf, W^r)})) and whether F_inf was substituted.

    When only some coordinates diverge, F_inf is replaced by the limit of
    e^{-sum_{diverging} z_j N_j} F(z(m)), evaluated from the limits of the
    bounded schedules, and the chain is taken over the diverging directions.
    """
    thetas = spec.thetas()
    if diverging is None:
        gs = [f.growth() for f in spec.v]
        diverging = [k for k, g in enumerate(gs) if g is None or g[0] > 0]
    Ns = [s.N_of(thetas[k], EXACT) for k in diverging]
    if len(diverging) == spec.d and all(
        all(spec.T[j, k] == 0 for k in range(spec.d)) is False for j in range(spec.r)
    ):
        return grading_chain(Ns, s.Finf, s.W, xi).Y(0), False
    # substitute the limit filtration; bounded coordinates enter through their limits
    big = 10**6
    ys = spec.y(big)
    xs = spec.xs(big)
    z_bounded = []
    for j in range(spec.r):
        involved = [k for k in diverging if spec.T[j, k] != 0]
        z_bounded.append(0j if involved else complex(xs[j], ys[j]))
    skip_mask = [any(spec.T[j, k] != 0 for k in diverging) for j in range(spec.r)]
    g = nilpotent_exp(s.N_of(z_bounded, FLOAT))
    if s.gamma:
        import cmath
        import math

        sv = [0j if skip_mask[j] else cmath.exp(2j * math.pi * z_bounded[j]) for j in range(spec.r)]
        gam = s.gamma_at(sv)
        if gam.max_abs() > 0:
            g = g @ nilpotent_exp(gam)
    F_lim = s.Finf.to_float().apply(g)
    Nf = [N.to_float() for N in Ns]
    chain = grading_chain(Nf, F_lim, s.W.to_float(), xi)
    return chain.Y(0), True


def verify_main_limit(
    s: OrbitScenario,
    spec: SL2SequenceSpec,
    xi=None,
    m_max: int = 40,
    tol: float = 1e-3,
    ms: Sequence[int] | None = None,
    mode: str = "auto",
    threads: int | None = None,
    check_admissible: bool = True,
) -> LimitReport:
    """Compare e^{-N(x(m))}.Y-hat_{(F(z(m)), W)} with the limiting grading for each m."""
    if check_admissible:
        rep = check_admissible_orbit(s)
        if not rep.ok:
            raise NotAdmissible("; ".join(rep.failures))
    ms = list(ms) if ms is not None else list(range(1, m_max + 1))
    points = [gen_sequence(spec, m) for m in ms]
    sigma = points[0].sigma
    if any(p.sigma != sigma for p in points):
        raise NotAdmissible("the ordering of the y-coordinates changes along the sequence")
    sc = permuted(s, sigma)
    rhs, substituted = limit_rhs(s, spec, xi)
    if mode == "auto":
        exact_ok = sc.gamma_is_zero and not substituted and all(
            _exact_or_none(v) is not None for p in points for v in p.z
        )
        mode = EXACT if exact_ok else FLOAT
    rhs_f = rhs.to_float()

    def one(p):
        if mode == EXACT:
            z = [_exact_or_none(v) for v in p.z]
            x = [GQ(Fraction(v)) for v in p.x]
        else:
            z = list(p.z)
            x = list(p.x)
        y_hat = hat_grading_at(sc, z, xi, mode)
        nx = sc.N_of(x, mode)
        lhs = nilpotent_exp(-nx) @ y_hat @ nilpotent_exp(nx)
        err = lattice_norm(lhs.to_float() - rhs_f, s.lattice)
        return LimitRow(m=p.m, y=p.y, t=p.t, error=err, norm=lattice_norm(lhs, s.lattice), lhs=lhs)

    rows = _map(one, points, threads)
    report = LimitReport(
        rows=rows,
        rhs=rhs,
        converged=converged_verdict([r.error for r in rows], tol),
        tol=tol,
        mode=mode,
        substituted_limit=substituted,
    )
    if substituted:
        report.notes.append("limit filtration substituted: only some coordinates diverge")
    return report


def one_variable_errors(s: OrbitScenario, ys: Sequence, xi=None, mode: str = EXACT) -> tuple[Matrix, list]:
    """||Y-hat_{(e^{iyN}F, W)} - Y(N, Y-hat_{(F, M)})|| for r = 1 orbits along the given y values."""
    if s.r != 1:
        raise ValueError("one-variable check needs r = 1")
    rhs = grading_chain(s.Ns, s.Finf, s.W, xi).Y(0)
    out = []
    for y in ys:
        z = [GQ(0, Fraction(y))] if mode == EXACT else [complex(0, y)]
        lhs = hat_grading_at(s, z, xi, mode)
        out.append(lattice_norm(lhs.to_float() - rhs.to_float(), s.lattice))
    return rhs, out


def write_limit_csv(report: LimitReport, path) -> None:
    r = len(report.rows[0].y) if report.rows else 0
    header = ["m"] + [f"y{j + 1}" for j in range(r)] + [f"t{j + 1}" for j in range(r)] + ["error", "norm"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in report.rows:
            w.writerow(
                [row.m]
                + [f"{v:.17g}" for v in row.y]
                + [f"{v:.17g}" for v in row.t]
                + [f"{row.error:.17g}", f"{row.norm:.17g}"]
            )


# ---------------------------------------------------------------------------
# boundedness and finiteness


def strip_samples(r: int, y_values: Sequence[float] = (1, 2, 5, 10, 50, 100, 1000), xs: Sequence[float] = (0.0, 0.5)):
    """Points of the vertical strip on a diagonal-free product grid (ordered y_1 >= ... >= y_r)."""
    from itertools import product

    pts = []
    for ys in product(y_values, repeat=r):
        if any(ys[j] < ys[j + 1] for j in range(r - 1)):
            continue
        for x in product(xs, repeat=r):
            pts.append(tuple(complex(a, b) for a, b in zip(x, ys)))
    return pts


@dataclass
class BoundednessReport:
    sup: float
    argmax: tuple
    trend: list  # (max y, max norm over samples with that max y)
    growth_flag: bool


def boundedness_scan(s: OrbitScenario, samples=None, xi=None, threads: int | None = None) -> BoundednessReport:
    rep = check_admissible_orbit(s)
    if not rep.ok:
        raise NotAdmissible("; ".join(rep.failures))
    samples = list(samples) if samples is not None else strip_samples(s.r)

    def one(z):
        return lattice_norm(hat_grading_at(s, z, xi, FLOAT), s.lattice)

    norms = _map(one, samples, threads)
    best = max(range(len(norms)), key=lambda i: norms[i])
    by_y: dict = {}
    for z, v in zip(samples, norms):
        key = max(complex(c).imag for c in z) if z else 0.0
        by_y[key] = max(by_y.get(key, 0.0), v)
    trend = sorted(by_y.items())
    vals = [v for _, v in trend]
    growth = len(vals) >= 3 and all(b > a * (1 + 1e-6) + 1e-9 for a, b in zip(vals[-3:], vals[-2:]))
    return BoundednessReport(sup=norms[best], argmax=samples[best], trend=trend, growth_flag=growth)


def _integral_matrix(a: Matrix, tol: float) -> Matrix | None:
    arr = a.to_float().arr
    rounded = np.round(arr.real)
    if np.max(np.abs(arr - rounded), initial=0.0) > tol:
        return None
    return Matrix([[int(v) for v in row] for row in rounded])


def census_grid(r: int, side: int = 40, seed: int = 0) -> list:
    """side x side sample points z in the strip.

    r = 1: polar grid s = rho e^{i phi} with rho in [0.01, 0.5] and phi in [0, 2 pi).
    r = 2: product of real rays s_j in [0.01, 0.5].
    r >= 3: side^2 seeded random points of the product polydisk of radius 0.5.
    """
    rhos = np.linspace(0.01, 0.5, side)
    if r == 1:
        phis = np.arange(side) / side
        return [(complex(float(ph), float(-np.log(rho) / (2 * np.pi))),) for rho in rhos for ph in phis]
    if r == 2:
        ys = [float(-np.log(rho) / (2 * np.pi)) for rho in rhos]
        return [(complex(0.0, a), complex(0.0, b)) for a in ys for b in ys]
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(side * side):
        rho = rng.uniform(0.01, 0.5, r)
        ph = rng.uniform(0, 1, r)
        out.append(tuple(complex(float(p), float(-np.log(q) / (2 * np.pi))) for p, q in zip(ph, rho)))
    return out


@dataclass
class CensusResult:
    gradings: list  # distinct integral gradings (exact, lattice basis)
    hits: list  # (sample z, index into gradings)
    hat_agrees: bool


def integral_grading_census(
    s: OrbitScenario, samples, tol: float = 1e-8, xi=None, threads: int | None = None, hat_checks: int = 3
) -> CensusResult:
    """Integral Deligne gradings among the sampled Y_{(F(z), W)}, in the lattice basis.

    At the first `hat_checks` hits of each distinct grading the sl2-split
    grading is recomputed and compared (integral gradings come from split
    structures, so the two must agree there).
    """
    L = s.lattice.to_float().arr if s.lattice is not None else None
    samples = list(samples)

    def one(z):
        try:
            y = grading_at(s, z, FLOAT)
        except NotMHS:
            return None
        arr = y.arr if L is None else np.linalg.solve(L, y.arr @ L)
        cand = _integral_matrix(Matrix(arr), tol)
        return None if cand is None else (cand, y)

    res = _map(one, samples, threads)
    gradings: list = []
    hits = []
    checks: list = []
    for z, out in zip(samples, res):
        if out is None:
            continue
        cand, y = out
        if cand not in gradings:
            gradings.append(cand)
        k = gradings.index(cand)
        hits.append((z, k))
        if sum(1 for c in checks if c[0] == k) < hat_checks:
            checks.append((k, z, y))

    def agree(item):
        _, z, y = item
        return (hat_grading_at(s, z, xi, FLOAT) - y).max_abs() <= 1e-7

    agrees = all(_map(agree, checks, threads))
    return CensusResult(gradings=gradings, hits=hits, hat_agrees=agrees)


# ---------------------------------------------------------------------------
# Gamma weight components


@dataclass
class GammaComponentReport:
    support: dict  # b -> list of (exps, component matrix)
    violations: list
    limits: list = field(default_factory=list)  # (m, max norm of Ad(t^-1) Gamma(s(m)))


def _ad_joint_components(a: Matrix, chain: GradingChain) -> dict:
    """Components of a under the joint ad action of Y-hat^1..Y-hat^r keyed by b = -(ad eigenvalues)."""
    r = chain.r
    ops = [chain.Y(j) for j in range(1, r + 1)]
    js = joint_eigenspaces(ops)
    from .linalg import direct_sum_basis

    keys = list(js)
    B = direct_sum_basis([js[k] for k in keys])
    Binv = B.inverse()
    labels = [k for k in keys for _ in range(js[k].dim)]
    coords = Binv @ a @ B
    n = a.nrows
    out: dict = {}
    for i in range(n):
        for j in range(n):
            c = coords[i, j]
            if c == 0:
                continue
            b = tuple(-(labels[i][k] - labels[j][k]) for k in range(r))
            part = out.setdefault(b, [[0] * n for _ in range(n)])
            part[i][j] = c
    return {b: B @ Matrix(m) @ Binv for b, m in sorted(out.items())}


def gamma_component_analysis(
    s: OrbitScenario, chain: GradingChain, spec: SL2SequenceSpec | None = None, ms: Sequence[int] = ()
) -> GammaComponentReport:
    """Split Gamma into Ad(t^{-1}(y)) weight components Gamma^b and test the negative-weight vanishing.

    For b with a negative entry and w = first such index, the part of
    Gamma^b free of s_1..s_w must vanish.
    """
    support: dict = {}
    for t in s.gamma:
        for b, comp in _ad_joint_components(t.coeff, chain).items():
            if not comp.is_zero():
                support.setdefault(b, []).append((t.exps, comp))
    violations = []
    for b, terms in support.items():
        neg = [j for j, v in enumerate(b) if v < 0]
        if not neg:
            continue
        w = neg[0] + 1
        free = [(e, c) for e, c in terms if not any(e[k] for k in range(w))]
        if free:
            violations.append((b, w, [e for e, _ in free]))
    report = GammaComponentReport(support=support, violations=violations)
    if spec is not None:
        import cmath
        import math

        for m in ms:
            p = gen_sequence(spec, m)
            sv = [cmath.exp(2j * math.pi * z) for z in p.z]
            gam = s.gamma_at(sv).arr
            tw = twist(chain, p.y).value.arr
            report.limits.append((m, float(np.max(np.abs(np.linalg.solve(tw, gam @ tw)), initial=0.0))))
    if violations:
        b, w, exps = violations[0]
        raise ViolationFound(
            f"Gamma component of weight {b} has a part free of s_1..s_{w} (exponents {exps})", b=b
        )
    return report


# ---------------------------------------------------------------------------
# twisted partial period maps


@dataclass
class TwistedScanReport:
    all_mhs: bool
    box: tuple  # (min, max) of real and imaginary parts of projector entries
    min_margin: float
    samples: int


def _projector(space) -> np.ndarray:
    b = np.array(space.to_float().basis, dtype=complex)
    if b.size == 0:
        n = space.n
        return np.zeros((n, n), dtype=complex)
    q, _ = np.linalg.qr(b.T)
    return q @ q.conj().T


def twisted_map_scan(s: OrbitScenario, j: int, samples, chain: GradingChain) -> TwistedScanReport:
    """Evaluate t^{-1}(y) e^{-sum x_k N_k}.F_j(z) on ordered samples and record a coordinate box.

    The margin is the smallest singular value of [F^p | conj F^{k-p+1}]
    over graded pieces, a distance to the locus where the Hodge
    decomposition degenerates.
    """
    kept = partial_gamma(s, j)
    sub = OrbitScenario(s.dim, s.W, s.Finf, s.Ns, kept, s.lattice, s.polarizations, s.K_bound, s.name)
    Wf = s.W.to_float()
    lo, hi = np.inf, -np.inf
    margin = np.inf
    all_mhs = True
    for z in samples:
        y = [complex(v).imag for v in z]
        x = [complex(v).real for v in z]
        if any(y[k] < y[k + 1] for k in range(len(y) - 1)) or min(y) < 1:
            raise NumericalBreakdown("twisted scan samples must satisfy y_1 >= ... >= y_r >= 1")
        g = period_operator(sub, z, FLOAT)
        tw = twist(chain, y).value
        op = Matrix(np.linalg.solve(tw.arr, nilpotent_exp(sub.N_of([-v for v in x], FLOAT)).arr @ g.arr))
        F = sub.Finf.to_float().apply(op)
        if not is_mhs(F, Wf):
            all_mhs = False
            continue
        for p in F.indices():
            P = _projector(F[p])
            lo = min(lo, float(P.real.min()), float(P.imag.min()))
            hi = max(hi, float(P.real.max()), float(P.imag.max()))
        Fbar = F.conj()
        for k in Wf.weights():
            for p in range(F.lo, F.hi + 2):
                a = (F[p] & Wf[k]) + Wf[k - 1]
                b = (Fbar[k - p + 1] & Wf[k]) + Wf[k - 1]
                if a.dim == Wf[k - 1].dim or b.dim == Wf[k - 1].dim:
                    continue
                mat = np.hstack([np.array(a.basis, dtype=complex).T, np.array(b.basis, dtype=complex).T])
                sv = np.linalg.svd(mat, compute_uv=False)
                # the W_{k-1} part appears twice; its multiplicity in the singular values is zero-like
                extra = Wf[k - 1].dim
                useful = sv[: mat.shape[1] - extra] if extra else sv
                if useful.size:
                    margin = min(margin, float(useful[-1]))
    return TwistedScanReport(all_mhs=all_mhs, box=(lo, hi), min_margin=float(margin), samples=len(samples))
