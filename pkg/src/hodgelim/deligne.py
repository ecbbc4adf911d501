"""Deligne systems: axiom checks, the one-step grading Y(N, Y_M), grading chains, and t(y)."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product
from typing import Sequence

import numpy as np

from .errors import (
    FitFailure,
    FixedPointDivergence,
    NonPositiveY,
    NotAdmissible,
    NotSplitLimit,
    XiUnavailable,
)
from .filtrations import DecreasingFiltration, IncreasingFiltration, grades
from .linalg import (
    EXACT,
    FLOAT,
    Matrix,
    ad_components,
    bracket,
    component_of,
    eigen_projectors,
    joint_eigenspaces,
    nilpotent_exp,
    unipotent_log,
)
from .mhs import MHS, bigrading, deligne_grading_of, is_mhs, is_split_real, sl2_split
from .scalars import GQ
from .weights import monodromy_relative


def _i(mode: str):
    return GQ(0, 1) if mode == EXACT else 1j


# ---------------------------------------------------------------------------
# axioms


@dataclass
class DeligneSystemData:
    W0: IncreasingFiltration
    Ns: list
    Yr: Matrix


@dataclass
class AxiomReport:
    verdicts: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(self.verdicts.values())


def weight_chain(Ns: Sequence[Matrix], W: IncreasingFiltration):
    """W^0 = W, W^j = M(N_j, W^{j-1}); entries are None from the first missing filtration on."""
    chain = [W]
    for N in Ns:
        prev = chain[-1]
        if prev is None:
            chain.append(None)
            continue
        res = monodromy_relative(N, prev)
        chain.append(res.M if res.exists else None)
    return chain


def _in_weight_level(a: Matrix, W: IncreasingFiltration, level: int) -> bool:
    """a lies in W_level End(V): a W_k is inside W_{k+level} for all k."""
    return W.preserved_by(a, level)


def check_axioms(d: DeligneSystemData) -> AxiomReport:
    rep = AxiomReport()
    Ns = list(d.Ns)
    r = len(Ns)
    chain = weight_chain(Ns, d.W0)
    ok1 = all(c is not None for c in chain)
    rep.verdicts["1"] = ok1
    if not ok1:
        j = next(i for i, c in enumerate(chain) if c is None)
        rep.failures.append(f"axiom 1: M(N_{j}, W^{j - 1}) does not exist")
        for key in ("2", "3", "4"):
            rep.verdicts[key] = False
        return rep
    # axiom 2: W^{j+1} restricted to W^i_l equals M(N_{j+1}, W^j restricted to W^i_l) for i < j
    ok2 = True
    for j in range(1, r):
        for i in range(j):
            Wi = chain[i]
            for ell in range(Wi.lo, Wi.hi + 1):
                sub = Wi[ell]
                if not sub.dim or sub.dim == sub.n:
                    continue
                res = _restricted_relative(Ns[j], chain[j], sub)
                target = chain[j + 1]
                if res is None or not _agree_on(res, target, sub):
                    ok2 = False
                    rep.failures.append(f"axiom 2: restriction to W^{i}_{ell} fails at step {j + 1}")
    rep.verdicts["2"] = ok2
    ok3 = True
    for j in range(r + 1):
        for i in range(1, r + 1):
            N = Ns[i - 1]
            level = -2 if i <= j else 0
            if not _in_weight_level(N, chain[j], level):
                ok3 = False
                rep.failures.append(f"axiom 3: N_{i} not in W^{j}_{level} End(V)")
    rep.verdicts["3"] = ok3
    ok4 = grades(d.Yr, chain[r]) and all(c.preserved_by(d.Yr) for c in chain)
    if not ok4:
        rep.failures.append("axiom 4: Y^r does not split W^r or does not preserve every W^i")
    for i, N in enumerate(Ns, 1):
        if not (bracket(d.Yr, N) + N.scale(2)).is_zero():
            ok4 = False
            rep.failures.append(f"axiom 4: [Y^r, N_{i}] != -2 N_{i}")
    rep.verdicts["4"] = ok4
    return rep


def _agree_on(a: IncreasingFiltration, b: IncreasingFiltration, sub) -> bool:
    lo, hi = min(a.lo, b.lo) - 1, max(a.hi, b.hi) + 1
    return all((a[k] & sub) == (b[k] & sub) for k in range(lo, hi + 1))


def _restricted_relative(N: Matrix, W: IncreasingFiltration, sub):
    """M(N|sub, W|sub), expressed as a filtration of the ambient space (steps inside sub)."""
    b = sub.basis_matrix()
    coords = b.solve(N @ b)
    if coords is None:
        return None
    n_sub = sub.dim
    mode = W.mode

    def to_coords(space):
        inter = space & sub
        if not inter.dim:
            return []
        c = b.solve(inter.basis_matrix())
        return c.columns()

    from .linalg import Subspace

    Wsub = IncreasingFiltration(n_sub, {k: Subspace(n_sub, to_coords(W[k]), mode) for k in range(W.lo, W.hi + 1)}, mode)
    res = monodromy_relative(coords, Wsub)
    if not res.exists:
        return None
    steps = {}
    for k in range(res.M.lo, res.M.hi + 1):
        vecs = [b.apply(v) for v in res.M[k].basis]
        steps[k] = Subspace(sub.n, vecs, mode)
    return IncreasingFiltration(sub.n, steps, mode)


# ---------------------------------------------------------------------------
# one-step grading


def hat_component(N: Matrix, Y: Matrix) -> Matrix:
    """N-hat: the ad-Y degree 0 component of N."""
    return component_of(N, Y, 0)


def deligne_grading(
    N: Matrix,
    F: DecreasingFiltration,
    W: IncreasingFiltration,
    M: IncreasingFiltration | None = None,
    method: str = "auto",
) -> Matrix:
    """Y(N, Y_{(F,M)}), the fixed point Y = Y_{(e^{i N-hat(Y)} F, W)}.

    Iteration is seeded with Y_{(e^{iN}F, W)} and capped at dim V steps;
    when it does not become stationary the grading is solved from Deligne's
    characterization instead (see solve_by_characterization).  method
    "fixed-point" or "characterization" forces one route.
    """
    if method not in ("auto", "fixed-point", "characterization"):
        raise ValueError(f"unknown method {method!r}")
    mode = N.mode
    n = N.nrows
    if M is None:
        res = monodromy_relative(N, W)
        if not res.exists:
            raise NotAdmissible(f"M(N, W) does not exist: {res.reason}")
        M = res.M
    lim = MHS(F, M)
    if not is_mhs(F, M):
        raise NotAdmissible("(F, M(N, W)) is not a mixed Hodge structure")
    if not is_split_real(lim):
        raise NotSplitLimit("(F, M) is not split over R")
    if N.is_zero():
        return deligne_grading_of(F, W)
    iu = _i(mode)
    if method != "characterization":
        y = deligne_grading_of(F.apply(nilpotent_exp(N.scale(iu))), W)
        for _ in range(max(n, 1) + 1):
            nh = hat_component(N, y)
            y_next = deligne_grading_of(F.apply(nilpotent_exp(nh.scale(iu))), W)
            if _same(y_next, y, mode):
                return y_next
            y = y_next
        if method == "fixed-point":
            raise FixedPointDivergence("fixed-point iteration did not settle within dim V + 1 steps")
    sol = solve_by_characterization(N, bigrading(lim).grading, W)
    if sol is None:
        raise FixedPointDivergence("fixed-point iteration did not settle and the characterization has no solution")
    return sol


def _same(a: Matrix, b: Matrix, mode: str) -> bool:
    return a == b if mode == EXACT else a.close(b, 1e-10)


def satisfies_characterization(Y: Matrix, N: Matrix, YM: Matrix, W: IncreasingFiltration) -> bool:
    """Deligne's characterization of Y(N, Y_M).

    Y grades W and commutes with Y_M; with N = sum_k N_{-k} (ad Y degrees),
    (N_0, Y_M - Y) is an sl2 pair and each N_{-k}, k >= 2, is killed by
    (ad N_0)^{k-1} (a highest weight vector of weight k-2); N_{-1} = 0.
    """
    if not grades(Y, W):
        return False
    if not bracket(Y, YM).is_zero():
        return False
    comps = ad_components(N, Y)
    if any(k > 0 for k, c in comps.items() if not c.is_zero()):
        return False
    n0 = comps.get(0, Matrix.zeros(N.nrows, N.ncols, N.mode))
    H = YM - Y
    if not (bracket(H, n0) + n0.scale(2)).is_zero():
        return False
    if not _is_sl2_lowering(n0, H):
        return False
    for k, c in comps.items():
        if k == 0 or c.is_zero():
            continue
        if k == -1:
            return False
        t = c
        for _ in range(-k - 1):
            t = bracket(n0, t)
        if not t.is_zero():
            return False
    return True


def _is_sl2_lowering(n0: Matrix, H: Matrix) -> bool:
    """(n0, H) generate a representation: H semisimple integral and n0^l : E_l(H) -> E_{-l}(H) iso."""
    from .errors import NotSemisimpleInteger
    from .linalg import Subspace

    try:
        proj = eigen_projectors(H)
    except NotSemisimpleInteger:
        return False
    n = H.nrows
    for ell, p in proj.items():
        if ell < 0:
            continue
        q = proj.get(-ell)
        if q is None:
            return False
        src = Subspace(n, p.columns(), H.mode)
        dst = Subspace(n, q.columns(), H.mode)
        if src.dim != dst.dim:
            return False
        img = src.apply(n0 ** ell)
        if img != dst:
            return False
    return True


def solve_by_characterization(N: Matrix, YM: Matrix, W: IncreasingFiltration) -> Matrix | None:
    """Fallback: parametrize gradings of W commuting with Y_M and solve the characterization.

    Gradings of W commuting with Y_M form the orbit of a base grading under
    exp(W_{-1} End(V) cut down to the centralizer of Y_M); the conditions of
    satisfies_characterization become polynomial equations in the
    coordinates, solved exactly with sympy. Intended for desk dimensions.
    """
    import sympy as sp

    from .filtrations import filtration_from_grading  # noqa: F401
    from .linalg import Subspace

    if N.mode != EXACT:
        return None
    n = N.nrows
    # base grading: Y_M's eigenspaces intersected with a W-adapted splitting
    base = _grading_commuting_with(YM, W)
    if base is None:
        return None
    # tangent directions: X in W_{-1}End(V) with [X, Y_M] = 0
    dirs = []
    for i in range(n):
        for j in range(n):
            E = Matrix.unit(n, i, j)
            dirs.append(E)
    # linear constraints: X lowers W (in base-grading degrees < 0) and commutes with YM
    comps_basis = []
    proj = eigen_projectors(base)
    for E in dirs:
        for k, c in ad_components(E, base, proj).items():
            if k < 0 and bracket(c, YM).is_zero():
                comps_basis.append(c)
    space = Subspace(n * n, [[c[i, j] for i in range(n) for j in range(n)] for c in comps_basis])
    basis = [Matrix([[v[i * n + j] for j in range(n)] for i in range(n)]) for v in space.basis]
    if not basis:
        return base if satisfies_characterization(base, N, YM, W) else None
    syms = sp.symbols(f"c0:{len(basis)}")

    def to_sp(m: Matrix):
        return sp.Matrix(n, n, lambda i, j: sp.Rational(int(m[i, j].re.numerator), int(m[i, j].re.denominator))
                         + sp.I * sp.Rational(int(m[i, j].im.numerator), int(m[i, j].im.denominator)))

    X = sp.zeros(n, n)
    for s, b in zip(syms, basis):
        X += s * to_sp(b)
    expX = sp.eye(n)
    term = sp.eye(n)
    for k in range(1, n):
        term = term * X / k
        expX += term
    expmX = sp.eye(n)
    term = sp.eye(n)
    for k in range(1, n):
        term = term * (-X) / k
        expmX += term
    Y = (expX * to_sp(base) * expmX).applyfunc(sp.expand)
    Ns = to_sp(N)
    YMs = to_sp(YM)
    # N = sum of ad-Y components; conditions: [Y, N_0] = 0 part via H = YM - Y and highest-weight relations
    # Encode through the spectral decomposition of ad Y, which is conjugate to that of base.
    P = {k: (expX * to_sp(p) * expmX).applyfunc(sp.expand) for k, p in proj.items()}
    comps = {}
    for a, pa in P.items():
        for b, pb in P.items():
            comps.setdefault(a - b, sp.zeros(n, n))
            comps[a - b] += pa * Ns * pb
    eqs = []
    for k, c in comps.items():
        c = c.applyfunc(sp.expand)
        if k > 0 or k == -1:
            eqs.extend(list(c))
    n0 = comps.get(0, sp.zeros(n, n))
    H = YMs - Y
    eqs.extend(list((H * n0 - n0 * H + 2 * n0).applyfunc(sp.expand)))
    for k, c in comps.items():
        if k <= -2:
            t = c
            for _ in range(-k - 1):
                t = n0 * t - t * n0
            eqs.extend(list(t.applyfunc(sp.expand)))
    eqs = [e for e in eqs if e != 0]
    sols = sp.solve(eqs, syms, dict=True) if eqs else [{}]
    for sol in sols:
        vals = [sol.get(s, 0) for s in syms]
        if any(v.free_symbols for v in map(sp.sympify, vals)):
            vals = [sp.sympify(v).subs({s: 0 for s in syms}) for v in vals]
        Xv = Matrix.zeros(n, n)
        for v, b in zip(vals, basis):
            v = sp.nsimplify(v)
            re, im = sp.re(v), sp.im(v)
            Xv = Xv + b.scale(GQ(_frac(re), _frac(im)))
        cand = nilpotent_exp(Xv) @ base @ nilpotent_exp(-Xv)
        if satisfies_characterization(cand, N, YM, W):
            return cand
    return None


def _frac(x):
    from fractions import Fraction

    x = __import__("sympy").Rational(x)
    return Fraction(int(x.p), int(x.q))


def _grading_commuting_with(YM: Matrix, W: IncreasingFiltration) -> Matrix | None:
    """Some grading of W commuting with Y_M (exists when Y_M preserves W)."""
    from .linalg import Subspace, eigenspaces

    n, mode = YM.nrows, YM.mode
    es = eigenspaces(YM)
    pieces = {}
    for k in W.weights():
        for lam, E in es.items():
            a = W[k] & E
            b = W[k - 1] & E
            # complement of b in a
            acc = b
            chosen = []
            for v in a.basis:
                nxt = acc + Subspace(n, [v], mode)
                if nxt.dim > acc.dim:
                    chosen.append(v)
                    acc = nxt
            if chosen:
                pieces.setdefault(k, []).extend(chosen)
    cols = []
    vals = []
    for k, vs in pieces.items():
        cols.extend(vs)
        vals.extend([k] * len(vs))
    if len(cols) != n:
        return None
    B = Matrix.from_columns(cols, n, mode)
    return B @ Matrix.diag(vals, mode) @ B.inverse()


# ---------------------------------------------------------------------------
# grading chains


@dataclass
class GradingChain:
    Yhats: list  # Y^r, ..., Y^0  (index 0 holds Y^r)
    Fhats: list  # F^_r, ..., F^_0
    Hhats: list  # H_1, ..., H_r
    Nhats: list  # N^_1, ..., N^_r
    Ws: list  # W^0, ..., W^r
    Ns: list
    xi: Matrix | None = None

    @property
    def r(self) -> int:
        return len(self.Ns)

    def Y(self, j: int) -> Matrix:
        """Y-hat^j for j = 0..r."""
        return self.Yhats[self.r - j]

    def F(self, j: int) -> DecreasingFiltration:
        return self.Fhats[self.r - j]

    def invariant_report(self) -> dict:
        r = self.r
        out = {}
        out["grades"] = all(grades(self.Y(j), self.Ws[j]) for j in range(r + 1))
        out["commute"] = all(bracket(self.Y(a), self.Y(b)).is_zero() for a in range(r + 1) for b in range(a + 1, r + 1))
        out["ds-comm-1"] = all(
            bracket(self.Ns[k - 1], self.Hhats[j - 1]).is_zero() for j in range(1, r + 1) for k in range(1, j)
        )
        out["commuting"] = all(
            bracket(self.Y(j), self.Nhats[k - 1]).is_zero() for k in range(1, r + 1) for j in range(0, k)
        )
        out["sl2"] = all(
            (bracket(self.Hhats[j], self.Nhats[j]) + self.Nhats[j].scale(2)).is_zero() for j in range(r)
        )
        out["pairs-commute"] = all(
            bracket(self.Hhats[a], self.Hhats[b]).is_zero()
            and bracket(self.Nhats[a], self.Nhats[b]).is_zero()
            and bracket(self.Hhats[a], self.Nhats[b]).is_zero()
            for a in range(r)
            for b in range(r)
            if a != b
        )
        return out


def grading_chain(Ns: Sequence[Matrix], F: DecreasingFiltration, W: IncreasingFiltration, xi=None) -> GradingChain:
    """Y-hat^r, ..., Y-hat^0 by descent F-hat_{j-1} = e^{i N-hat_j} F-hat_j."""
    Ns = list(Ns)
    r = len(Ns)
    mode = F.mode
    Ws = weight_chain(Ns, W)
    if any(w is None for w in Ws):
        j = next(i for i, w in enumerate(Ws) if w is None)
        raise NotAdmissible(f"relative weight filtration W^{j} does not exist")
    if not is_mhs(F, Ws[r]):
        raise NotAdmissible("(F, W^r) is not a mixed Hodge structure")
    split = sl2_split(MHS(F, Ws[r]), xi)
    Fh = split.split_F
    Yh = deligne_grading_of(Fh, Ws[r])
    Yhats = [Yh]
    Fhats = [Fh]
    Nhats: list = [None] * r
    iu = _i(mode)
    for j in range(r, 0, -1):
        y_prev = deligne_grading(Ns[j - 1], Fh, Ws[j - 1], Ws[j])
        nh = hat_component(Ns[j - 1], y_prev)
        Nhats[j - 1] = nh
        Fh = Fh.apply(nilpotent_exp(nh.scale(iu)))
        Yhats.append(y_prev)
        Fhats.append(Fh)
    chain = GradingChain(Yhats=Yhats, Fhats=Fhats, Hhats=[], Nhats=Nhats, Ws=Ws, Ns=Ns, xi=split.xi)
    chain.Hhats = [chain.Y(j) - chain.Y(j - 1) for j in range(1, r + 1)]
    return chain


def iterated_grading(Ns: Sequence[Matrix], F: DecreasingFiltration, W: IncreasingFiltration) -> Matrix:
    """Y(N_1, Y(N_2, ..., Y_{(F, W^r)})) for an orbit whose limit (F, W^r) is split over R."""
    chain = grading_chain(Ns, F, W)
    return chain.Y(0)


def conjugate_chain(Ns: Sequence[Matrix], F: DecreasingFiltration, W: IncreasingFiltration, xi: Matrix) -> Matrix:
    """Iterated grading of (e^{-xi}F, W^r), asserting it equals e^{-xi}.(iterated grading of F).

    The right-hand side is computed with the generic Deligne-system recursion
    Y^{j-1} = Y(N_j, Y^j) started from Y_{(F, W^r)} (no splitting needed),
    so the two sides are independent computations.
    """
    Ws = weight_chain(Ns, W)
    if any(w is None for w in Ws):
        raise NotAdmissible("weight chain does not exist")
    for w in Ws:
        if not w.preserved_by(xi):
            raise XiUnavailable("xi does not preserve every W^j")
    Fh = F.apply(nilpotent_exp(-xi))
    lhs = grading_chain(Ns, Fh, W).Y(0)
    rhs_core = deligne_system_grading(Ns, deligne_grading_of(F, Ws[-1]), Ws)
    rhs = nilpotent_exp(-xi) @ rhs_core @ nilpotent_exp(xi)
    if lhs != rhs:
        raise XiUnavailable("conjugated chain differs from the directly computed chain")
    return lhs


def deligne_system_grading(Ns: Sequence[Matrix], Yr: Matrix, Ws: Sequence[IncreasingFiltration]) -> Matrix:
    """Y^0 of a Deligne system by recursion Y^{j-1} = Y(N_j, Y^j), using the characterization solver."""
    y = Yr
    for j in range(len(Ns), 0, -1):
        nxt = solve_by_characterization(Ns[j - 1], y, Ws[j - 1])
        if nxt is None:
            raise FixedPointDivergence(f"no grading Y(N_{j}, Y^{j}) found")
        y = nxt
    return y


# ---------------------------------------------------------------------------
# t(y)


@dataclass
class TwistOperator:
    chain: GradingChain
    y: tuple
    value: Matrix
    t: tuple


def twist_ratios(y: Sequence[float]) -> tuple:
    r = len(y)
    ys = list(y) + [1.0]
    return tuple(ys[j + 1] / ys[j] for j in range(r))


def _joint_data(chain: GradingChain, which: Sequence[int]):
    ops = [chain.Y(j) for j in which]
    js = joint_eigenspaces(ops)
    cols = []
    keys = []
    for key, sp_ in js.items():
        for v in sp_.basis:
            cols.append(v)
            keys.append(key)
    n = ops[0].nrows
    B = Matrix.from_columns(cols, n, ops[0].mode)
    return B, keys


def twist(chain: GradingChain, y: Sequence[float], iota: int = 0) -> TwistOperator:
    """t(y) = prod_j t_j^{Y-hat^j / 2}, t_j = y_{j+1}/y_j (y_{r+1} = 1); product over j > iota."""
    if any(v <= 0 for v in y):
        raise NonPositiveY("t(y) needs strictly positive y")
    r = chain.r
    if len(y) != r:
        raise ValueError(f"expected {r} coordinates, got {len(y)}")
    t = twist_ratios([float(v) for v in y])
    which = list(range(iota + 1, r + 1))
    n = chain.Ns[0].nrows if chain.Ns else chain.Y(0).nrows
    if not which:
        return TwistOperator(chain, tuple(y), Matrix.identity(n, FLOAT), t)
    B, keys = _joint_data(chain, which)
    diag = [math.prod(t[j - 1] ** (0.5 * float(k)) for j, k in zip(which, key)) for key in keys]
    Bf = B.to_float()
    val = Bf @ Matrix.diag(diag, FLOAT) @ Bf.inverse()
    return TwistOperator(chain, tuple(y), Matrix(val.arr.real.astype(complex)), t)


def y_from_t(t: Sequence[float]) -> tuple:
    """Invert t_j = y_{j+1}/y_j with y_{r+1} = 1."""
    r = len(t)
    y = [0.0] * r
    nxt = 1.0
    for j in range(r - 1, -1, -1):
        y[j] = nxt / t[j]
        nxt = y[j]
    return tuple(y)


@dataclass
class TwistFitReport:
    ok: bool
    residual: float
    max_negative_coeff: float
    constant_error: float
    exponents: list
    constant_term: Matrix | None = None
    worst: tuple | None = None


def twist_polynomiality_check(
    chain: GradingChain,
    grid: Sequence[float] = (0.5, 0.25, 0.1),
    tol_residual: float = 1e-9,
    tol_constant: float = 1e-8,
) -> TwistFitReport:
    """Fit log(Ad(t^{-1}(y)) e^{sum i y_j N_j}) entrywise against monomials in t_j^{1/2}.

    The fit runs in a joint eigenbasis of the Y-hat^j, where each entry
    can only carry monomials prod_k t_k^{e_k/2} with exponents predicted
    from the eigenvalue differences (negative ones included).  The report
    gives the residual, the largest coefficient on a monomial with a
    negative exponent, and the distance of the constant term from
    i N_1 + i sum_{j>1} N-hat_j.
    """
    r = chain.r
    Ns = chain.Ns
    n = Ns[0].nrows
    B, keys = _joint_data(chain, range(1, r + 1))
    Bf = B.to_float().arr
    Binv = np.linalg.inv(Bf)
    pts = list(product(grid, repeat=r))
    # candidate exponent vectors (in units of 1/2) per entry (a, b)
    def cand(a, b):
        diff = [keys[b][k] - keys[a][k] for k in range(r)]  # t^{-1} conj: entry scales by t^{(key_a - key_b)/2}^{-1}
        out = set()
        for j in range(r):
            # y_j = prod_{k >= j} t_k^{-1}
            e = tuple(diff[k] - (2 if k >= j else 0) for k in range(r))
            out.add(e)
        out.add(tuple([0] * r))
        return sorted(out)

    samples = []
    for tp in pts:
        y = y_from_t(tp)
        tw = twist(chain, y).value.arr
        X = sum(1j * yj * N.to_float().arr for yj, N in zip(y, Ns))
        g = np.linalg.inv(tw) @ _expm_nil(X) @ tw
        P = _logm_unip(g)
        samples.append(Binv @ P @ Bf)
    coeff = np.zeros((n, n), dtype=object)
    resid = 0.0
    max_neg = 0.0
    worst = None
    const = np.zeros((n, n), dtype=complex)
    exps_seen = set()
    for a in range(n):
        for b in range(n):
            exps = cand(a, b)
            A = np.array([[math.prod(tp[k] ** (0.5 * e[k]) for k in range(r)) for e in exps] for tp in pts])
            rhs = np.array([s[a, b] for s in samples])
            scale = max(1.0, float(np.max(np.abs(rhs))))
            c, *_ = np.linalg.lstsq(A, rhs, rcond=None)
            res = float(np.max(np.abs(A @ c - rhs))) / scale
            if res > resid:
                resid = res
                worst = (a, b)
            for e, v in zip(exps, c):
                if abs(v) > 1e-12:
                    exps_seen.add(e)
                if any(x < 0 for x in e):
                    max_neg = max(max_neg, abs(v) / scale)
                if all(x == 0 for x in e):
                    const[a, b] = v
    target = 1j * Ns[0].to_float().arr
    for nh in chain.Nhats[1:]:
        target = target + 1j * nh.to_float().arr
    const_orig = Bf @ const @ Binv
    cerr = float(np.max(np.abs(const_orig - target)))
    ok = resid < tol_residual and max_neg < tol_residual and cerr < tol_constant
    return TwistFitReport(
        ok=ok,
        residual=resid,
        max_negative_coeff=max_neg,
        constant_error=cerr,
        exponents=sorted(exps_seen),
        constant_term=Matrix(const_orig),
        worst=worst,
    )


def _expm_nil(x: np.ndarray) -> np.ndarray:
    n = x.shape[0]
    out = np.eye(n, dtype=complex)
    term = np.eye(n, dtype=complex)
    for k in range(1, n + 1):
        term = term @ x / k
        out = out + term
    return out


def _logm_unip(g: np.ndarray) -> np.ndarray:
    n = g.shape[0]
    x = g - np.eye(n)
    out = np.zeros_like(x)
    term = np.eye(n, dtype=complex)
    for k in range(1, n + 1):
        term = term @ x
        out = out + ((-1) ** (k + 1)) * term / k
    return out
