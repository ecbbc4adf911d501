"""Admissible normal functions: pointwise zero test, zero-locus scanning, density analysis."""
from __future__ import annotations

import cmath
import csv
import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Sequence

import numpy as np

from .asymptotics import _map, grading_at
from .deligne import grading_chain
from .errors import NoIntegralCandidate, NotMHS, NotMHSAtPoint, NotNormalFunctionShape
from .linalg import EXACT, FLOAT, Matrix, Subspace, bracket, nilpotent_exp
from .mhs import MHS, bigrading, flatten
from .orbits import OrbitScenario, period_operator
from .scalars import GQ


@dataclass
class NormalFunctionData:
    scenario: OrbitScenario
    w: int

    @classmethod
    def from_scenario(cls, s: OrbitScenario) -> "NormalFunctionData":
        ws = s.W.weights()
        if len(ws) != 2 or ws[1] != 0 or s.W.gr_dim(0) != 1 or ws[0] >= 0:
            raise NotNormalFunctionShape(
                "expected a weight filtration with exactly two jumps: Gr_0 of rank 1 and one negative weight"
            )
        try:
            s.lattice_basis().inverse()
        except ZeroDivisionError:
            raise NotNormalFunctionShape("lattice basis is singular") from None
        return cls(scenario=s, w=ws[0])

    @property
    def r(self) -> int:
        return self.scenario.r


def z_from_s(s: Sequence[complex]) -> tuple:
    """z with e^{2 pi i z} = s and Re z in [0, 1)."""
    out = []
    for v in s:
        v = complex(v)
        if v == 0:
            raise ValueError("s = 0 lies outside the punctured polydisk")
        z = cmath.log(v) / (2j * math.pi)
        x = z.real % 1.0
        out.append(complex(x, z.imag))
    return tuple(out)


# ---------------------------------------------------------------------------
# pointwise test


@dataclass
class ZeroTest:
    zero: bool
    grading: Matrix
    residual: float
    retraction_ok: bool | None = None


def _lattice_coords(a: Matrix, L: Matrix) -> Matrix:
    if a.mode == EXACT:
        return L.inverse() @ a @ L
    return Matrix(np.linalg.solve(L.to_float().arr, a.arr @ L.to_float().arr))


def zero_test_point(nf: NormalFunctionData, z: Sequence, tol: float = 1e-8, mode: str = FLOAT) -> ZeroTest:
    """Is Y_{(F(z), W)} in w End(V_Z)?  Exact when Gamma = 0 and z is in Q(i)."""
    s = nf.scenario
    try:
        Y = grading_at(s, z, mode)
    except NotMHS as e:
        raise NotMHSAtPoint(str(e)) from e
    L = s.lattice_basis()
    YL = _lattice_coords(Y, L if mode == EXACT else L.to_float())
    if mode == EXACT:
        q = YL.scale(GQ(1, 0) / nf.w)
        zero = q.is_integral()
        resid = 0.0 if zero else 1.0
    else:
        arr = YL.arr / nf.w
        resid = float(np.max(np.abs(arr - np.round(arr.real)), initial=0.0))
        zero = resid <= tol
        if zero and s.gamma_is_zero:
            # exact confirmation after rationalization
            q = YL.rationalize()
            zero = q.close(YL, tol * abs(nf.w)) and q.scale(GQ(1, 0) / nf.w).is_integral()
    retraction_ok = None
    if zero:
        retraction_ok = _retraction_check(nf, Y, z, mode)
    return ZeroTest(zero=zero, grading=Y, residual=resid, retraction_ok=retraction_ok)


def _retraction_check(nf: NormalFunctionData, Y: Matrix, z, mode: str) -> bool:
    """(1/w) Y preserves F(z) and W, is the identity on H = W_w and kills a lift of Z(0)."""
    s = nf.scenario
    c = GQ(1, 0) / nf.w if mode == EXACT else 1.0 / nf.w
    rho = Y.scale(c)
    g = period_operator(s, z, mode)
    F = (s.Finf if mode == EXACT else s.Finf.to_float()).apply(g)
    W = s.W if mode == EXACT else s.W.to_float()
    if not F.preserved_by(rho) or not W.preserved_by(rho):
        return False
    H = W[nf.w]
    for v in H.basis:
        img = rho.apply(v)
        if mode == EXACT:
            if list(img) != list(v):
                return False
        elif np.max(np.abs(np.asarray(img) - np.asarray(v))) > 1e-7:
            return False
    return (rho @ rho - rho).is_zero(None if mode == EXACT else 1e-7)


# ---------------------------------------------------------------------------
# scanning and certification


@dataclass
class SGrid:
    """Product grid of s-values, one axis per variable."""

    axes: list

    @classmethod
    def real_rays(cls, r: int, lo: float = 0.02, hi: float = 0.5, n: int = 40) -> "SGrid":
        ax = list(np.linspace(lo, hi, n))
        return cls(axes=[ax] * r)

    def points(self):
        for idx in product(*[range(len(a)) for a in self.axes]):
            yield idx, tuple(complex(self.axes[k][i]) for k, i in enumerate(idx))

    def cell_size(self) -> float:
        return max(float(np.max(np.abs(np.diff(np.asarray(a, dtype=complex))))) if len(a) > 1 else 0.0 for a in self.axes)


@dataclass
class CertifiedRoot:
    s: tuple
    residual: float
    steps: int
    start: tuple


@dataclass
class ZeroLocusReport:
    hits: list  # (grid index, s, grading, residual)
    certified: list
    failed: list  # starting points where refinement did not reach the target
    clusters: list
    density: str
    total: int
    Y_Z: Matrix | None = None
    Y_inf: Matrix | None = None
    analyzer: "DensityVerdict | None" = None


def _ad_exp_apply(G: Matrix, Y: np.ndarray) -> np.ndarray:
    """e^{G} Y e^{-G} via the finite ad-series."""
    out = Y.copy()
    term = Y.copy()
    n = Y.shape[0]
    for k in range(1, 2 * n):
        term = (G @ term - term @ G) / k
        if not term.any():
            break
        out = out + term
    return out


def _d_ad_exp(G: np.ndarray, dG: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """Derivative of sum_k ad(G)^k Y / k! in the direction dG."""
    n = Y.shape[0]

    def ad(a, b):
        return a @ b - b @ a

    # powers ad(G)^k Y
    powers = [Y]
    for _ in range(1, 2 * n):
        powers.append(ad(G, powers[-1]))
    out = np.zeros_like(Y)
    for k in range(1, 2 * n):
        # d ad(G)^k Y = sum_{i<k} ad(G)^i ad(dG) ad(G)^{k-1-i} Y
        acc = np.zeros_like(Y)
        for i in range(k):
            t = ad(dG, powers[k - 1 - i])
            for _ in range(i):
                t = ad(G, t)
            acc = acc + t
        out = out + acc / math.factorial(k)
    return out


def simple_residual(s: OrbitScenario, sv: Sequence[complex], Y_inf: np.ndarray, Y_Z: np.ndarray) -> np.ndarray:
    """e^{Gamma(s)}.Y_inf - e^{-N(z)}.Y_Z with z = log(s) / 2 pi i."""
    z = [cmath.log(v) / (2j * math.pi) for v in sv]
    G = s.gamma_at(sv).arr
    lhs = _ad_exp_apply(G, Y_inf)
    Nz = s.N_of(z, FLOAT).arr
    rhs = _ad_exp_apply(-Nz, Y_Z)
    return lhs - rhs


def newton_certify(
    s: OrbitScenario,
    s0: Sequence[complex],
    Y_inf: Matrix,
    Y_Z: Matrix,
    target: float = 1e-12,
    max_steps: int = 50,
) -> CertifiedRoot:
    """Minimum-norm Newton iteration on the holomorphic system e^{Gamma(s)}.Y_inf = e^{-N(z)}.Y_Z."""
    Yi = Y_inf.to_float().arr
    Yz = Y_Z.to_float().arr
    cur = np.array([complex(v) for v in s0])
    res = simple_residual(s, cur, Yi, Yz)
    rn = float(np.max(np.abs(res), initial=0.0))
    steps = 0
    while rn >= target and steps < max_steps:
        steps += 1
        G = s.gamma_at(cur).arr
        dGs = [m.arr for m in s.gamma_partials(cur)]
        z = [cmath.log(v) / (2j * math.pi) for v in cur]
        Nz = s.N_of(z, FLOAT).arr
        cols = []
        for j in range(s.r):
            dl = _d_ad_exp(G, dGs[j], Yi)
            # d/ds_j of e^{-N(z)}.Y_Z = -(1 / (2 pi i s_j)) e^{-N(z)}.[N_j, Y_Z]
            Nj = s.Ns[j].to_float().arr
            dr = -_ad_exp_apply(-Nz, Nj @ Yz - Yz @ Nj) / (2j * math.pi * cur[j])
            cols.append((dl - dr).reshape(-1))
        J = np.stack(cols, axis=1)
        step = -np.linalg.pinv(J) @ res.reshape(-1)
        lam = 1.0
        while True:
            trial = cur + lam * step
            if np.all(np.abs(trial) > 0):
                tres = simple_residual(s, trial, Yi, Yz)
                tn = float(np.max(np.abs(tres), initial=0.0))
                if tn < rn or lam < 1e-6:
                    break
            lam *= 0.5
        cur, res, rn = trial, tres, tn
    return CertifiedRoot(s=tuple(complex(v) for v in cur), residual=rn, steps=steps, start=tuple(complex(v) for v in s0))


def _clusters(idx_hits: list) -> list:
    """Connected components of grid indices (adjacency: Chebyshev distance 1)."""
    remaining = set(idx_hits)
    out = []
    while remaining:
        seed = min(remaining)
        comp = {seed}
        stack = [seed]
        remaining.discard(seed)
        while stack:
            cur = stack.pop()
            for delta in product((-1, 0, 1), repeat=len(cur)):
                nb = tuple(a + b for a, b in zip(cur, delta))
                if nb in remaining:
                    remaining.discard(nb)
                    comp.add(nb)
                    stack.append(nb)
        out.append(sorted(comp))
    return out


def scan_zero_locus(
    nf: NormalFunctionData,
    grid: SGrid,
    tol: float = 1e-8,
    certify: bool = True,
    Y_inf: Matrix | None = None,
    xi=None,
    threads: int | None = None,
) -> ZeroLocusReport:
    s = nf.scenario
    pts = list(grid.points())

    def one(item):
        idx, sv = item
        try:
            t = zero_test_point(nf, z_from_s(sv), tol)
        except NotMHSAtPoint:
            return None
        return (idx, sv, t.grading, t.residual) if t.zero else None

    res = _map(one, pts, threads)
    hits = [h for h in res if h is not None]
    clusters = _clusters([h[0] for h in hits])
    total = len(pts)
    side = max(len(a) for a in grid.axes)
    if total and len(hits) == total:
        density = "dense-suspect"
    elif any(len(c) >= max(3, side // 4) for c in clusters):
        density = "curve-suspect"
    else:
        density = "discrete"
    report = ZeroLocusReport(hits=hits, certified=[], failed=[], clusters=clusters, density=density, total=total)
    if not hits:
        return report
    # the integral grading found on the grid (in the working basis, exact)
    L = s.lattice_basis()
    first = hits[0][2]
    YL = _lattice_coords(first, L.to_float())
    YZ_L = Matrix([[int(round(v.real)) for v in row] for row in YL.arr])
    Y_Z = L @ YZ_L @ L.inverse()
    report.Y_Z = Y_Z
    if Y_inf is None:
        Y_inf = limiting_grading(s, xi=xi)
    report.Y_inf = Y_inf
    if certify:
        for idx, sv, _, _ in hits:
            root = newton_certify(s, sv, Y_inf, Y_Z)
            (report.certified if root.residual < 1e-12 else report.failed).append(root)
    return report


# ---------------------------------------------------------------------------
# density analysis


def limiting_chain(s: OrbitScenario, thetas: Sequence | None = None, xi=None):
    """Grading chain of N(theta^1), ..., N(theta^r) on the split limit, and Y_inf = e^{xi}.Y-hat^0."""
    thetas = list(thetas) if thetas is not None else [[1 if i == j else 0 for i in range(s.r)] for j in range(s.r)]
    Ns = [s.N_of(th, EXACT) for th in thetas]
    chain = grading_chain(Ns, s.Finf, s.W, xi)
    y = chain.Y(0)
    if chain.xi is not None and not chain.xi.is_zero():
        y = nilpotent_exp(chain.xi) @ y @ nilpotent_exp(-chain.xi)
    return chain, y


def limiting_grading(s: OrbitScenario, thetas: Sequence | None = None, xi=None) -> Matrix:
    return limiting_chain(s, thetas, xi)[1]


@dataclass
class DensityVerdict:
    verdict: str
    Y_inf: Matrix
    Y_Z: Matrix
    kernels_equal: bool
    omega: list
    beta: dict
    b: int
    commutes: bool
    gamma_samples: list = field(default_factory=list)
    locus: str = ""
    notes: list = field(default_factory=list)

    def lines(self) -> list:
        out = [f"verdict: {self.verdict}"]
        out.append(f"Y_inf == Y_Z: {self.Y_inf == self.Y_Z}")
        out.append(f"kernels of z -> [N(z), Y_inf] and z -> [N(z), Y_Z] agree: {self.kernels_equal}")
        out.append(f"Omega: {[j + 1 for j in self.omega]}")
        for (i, j), v in sorted(self.beta.items()):
            out.append(f"beta[{i + 1},{j + 1}] = {v}")
        if self.omega:
            out.append(f"b = {self.b}")
        if self.locus:
            out.append(f"locus: {self.locus}")
        out.extend(self.notes)
        return out


def _kernel(cols: list, r: int, mode: str) -> Subspace:
    if not cols:
        return Subspace.full(r, mode)
    m = Matrix([[c[k] for c in cols] for k in range(len(cols[0]))], mode)
    ns = m.nullspace()
    return Subspace(r, ns, mode) if len(ns) else Subspace.zero(r, mode)


def analyze_density(
    nf: NormalFunctionData,
    Y_Z: Matrix,
    thetas: Sequence | None = None,
    mu: Sequence | None = None,
    xi=None,
    s_samples: Sequence | None = None,
) -> DensityVerdict:
    """Test whether C(Y_Z) can be Zariski dense at the origin.

    Any nonempty Omega (a basis of the span of the [N_j, Y_Z]) refutes
    density, since beta_jj = 1 makes the exponentiated relation between
    gamma_j(s) and the monomials in s impossible as an identity.  With
    Omega empty the locus is {s : e^{Gamma(s)}.Y_inf = Y_Z}.
    """
    s = nf.scenario
    L = s.lattice_basis()
    if Y_Z.mode != EXACT or not (L.inverse() @ Y_Z @ L).is_integral():
        raise NoIntegralCandidate("Y_Z must be an exact integral operator in the lattice basis")
    r, n = s.r, s.dim
    chain, Y_inf = limiting_chain(s, thetas, xi)
    M = chain.Ws[-1]
    xi_op = chain.xi if chain.xi is not None else Matrix.zeros(n, n)
    mu = list(mu) if mu is not None else [0] * r
    xi_t = xi_op - s.N_of([GQ.coerce(Fraction(v)) if not isinstance(v, GQ) else v for v in mu], EXACT)
    L_inf = [flatten(bracket(N, Y_inf)) for N in s.Ns]
    L_Z = [flatten(bracket(N, Y_Z)) for N in s.Ns]
    kernels_equal = _kernel(L_inf, r, EXACT) == _kernel(L_Z, r, EXACT)
    # Omega and beta by exact elimination
    omega: list = []
    basis_vecs: list = []
    for j in range(r):
        cand = Subspace(n * n, basis_vecs + [L_Z[j]]) if basis_vecs or any(x != 0 for x in L_Z[j]) else None
        if cand is not None and cand.dim > len(basis_vecs):
            omega.append(j)
            basis_vecs.append(L_Z[j])
    beta: dict = {}
    if omega:
        A = Matrix([[basis_vecs[c][k] for c in range(len(omega))] for k in range(n * n)])
        for i in range(r):
            sol = A.solve(Matrix([[x] for x in L_Z[i]]))
            for c, j in enumerate(omega):
                beta[(i, j)] = sol[c, 0]
    denoms = [int(v.re.denominator) for v in beta.values()]
    b = 1
    for d in denoms:
        b = b * d // math.gcd(b, d)
    commutes = all(bracket(N, Y_Z).is_zero() for N in s.Ns)
    verdict = DensityVerdict(
        verdict="",
        Y_inf=Y_inf,
        Y_Z=Y_Z,
        kernels_equal=kernels_equal,
        omega=omega,
        beta=beta,
        b=b,
        commutes=commutes,
    )
    # gamma(s) = (e^{xi~} e^{Gamma(s)}.Y_inf)^{-1,-1} for the limit bigrading
    bg = bigrading(MHS(s.Finf.to_float(), M.to_float()))
    samples = list(s_samples) if s_samples is not None else [tuple([0.1] * r), tuple([0.05 + 0.05j] * r)]
    Lj = np.array([np.array([complex(x) for x in flatten(bracket(s.Ns[j], Y_inf))]) for j in omega]).T
    for sv in samples:
        g = nilpotent_exp(xi_t.to_float()) @ nilpotent_exp(s.gamma_at(sv))
        val = g @ Y_inf.to_float() @ g.inverse()
        comp = bg.component(val, -1, -1).arr.reshape(-1)
        if omega:
            coef, *_ = np.linalg.lstsq(Lj, comp, rcond=None)
            off = float(np.max(np.abs(Lj @ coef - comp), initial=0.0))
        else:
            coef, off = np.zeros(0), float(np.max(np.abs(comp), initial=0.0))
        verdict.gamma_samples.append((sv, [complex(c) for c in coef], off))
    if omega:
        verdict.verdict = "density refuted"
        verdict.notes.append(
            "beta_jj = 1 for j in Omega, while an identity exp(2 pi i b gamma_j(s)) = prod s_i^(b beta_ij) forces all beta_ij = 0"
        )
        return verdict
    # Omega empty: [N_i, Y_Z] = 0 and B(Y_Z) = {e^{Gamma(s)}.Y_inf = Y_Z}
    if Y_inf != Y_Z:
        verdict.verdict = "density refuted"
        verdict.locus = "empty near the origin: Gamma(0) = 0 forces Y_inf = Y_Z"
        return verdict
    trivial = all(bracket(t.coeff, Y_inf).is_zero() for t in s.gamma)
    if trivial:
        verdict.verdict = "zero locus = S"
        verdict.locus = "S (e^{Gamma(s)}.Y_inf = Y_inf identically)"
    else:
        verdict.verdict = "zero locus = {s : e^{Gamma(s)}.Y_inf = Y_Z}"
        verdict.locus = "{s : e^{Gamma(s)}.Y_inf = Y_Z}; density at the origin would force this to hold identically"
    return verdict


def _s_cells(sv) -> list:
    out = []
    for v in sv:
        out += [f"{complex(v).real:.17g}", f"{complex(v).imag:.17g}"]
    return out


def write_zero_locus_csv(report: ZeroLocusReport, r: int, path) -> None:
    """Hits and certified roots: kind, s_j (re, im pairs), residual, steps (roots only)."""
    head = ["kind"] + [f"s{j + 1}_{part}" for j in range(r) for part in ("re", "im")] + ["residual", "steps"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(head)
        for _, sv, _, res in report.hits:
            w.writerow(["hit"] + _s_cells(sv) + [f"{res:.17g}", ""])
        for root in report.certified:
            w.writerow(["root"] + _s_cells(root.s) + [f"{root.residual:.17g}", root.steps])
        for root in report.failed:
            w.writerow(["unrefined"] + _s_cells(root.s) + [f"{root.residual:.17g}", root.steps])


def report_lines(report: ZeroLocusReport) -> list:
    out = [
        f"grid points: {report.total}",
        f"hits: {len(report.hits)} in {len(report.clusters)} cluster(s)",
        f"certified roots: {len(report.certified)} (residual < 1e-12); unrefined: {len(report.failed)}",
        f"density: {report.density}",
    ]
    if report.Y_Z is not None:
        out.append(f"Y_Z: {report.Y_Z.to_strings()}")
    if report.analyzer is not None:
        out += ["analyzer:"] + ["  " + x for x in report.analyzer.lines()]
    return out
