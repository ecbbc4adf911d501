"""Orbit scenarios, admissibility probing, local normal form evaluation, sl2-sequences."""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from itertools import product
from typing import Callable, Sequence

import numpy as np

from .errors import (
    ExactnessViolation,
    GammaKernelViolation,
    NotMHS,
    NotQuasiUnipotentWithin,
    ScheduleNotInStrip,
)
from .filtrations import DecreasingFiltration, IncreasingFiltration
from .linalg import EXACT, FLOAT, Matrix, Subspace, bracket, nilpotent_exp, unipotent_log
from .mhs import MHS, bigrading, is_mhs
from .scalars import GQ
from .weights import default_cone_samples, monodromy_relative, monodromy_weight
from .deligne import weight_chain


@dataclass(frozen=True)
class GammaTerm:
    """One monomial coeff * s^exps of the holomorphic part Gamma(s)."""

    exps: tuple
    coeff: Matrix


@dataclass
class OrbitScenario:
    dim: int
    W: IncreasingFiltration
    Finf: DecreasingFiltration
    Ns: list
    gamma: list = field(default_factory=list)
    lattice: Matrix | None = None
    polarizations: dict | None = None
    K_bound: float = 1.0
    name: str = ""
    metadata: dict = field(default_factory=dict)
    _float_cache: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def float_filtrations(self) -> tuple:
        """(F_inf, W) converted to float mode once."""
        if "FW" not in self._float_cache:
            self._float_cache["FW"] = (self.Finf.to_float(), self.W.to_float())
        return self._float_cache["FW"]

    @property
    def r(self) -> int:
        return len(self.Ns)

    @property
    def gamma_is_zero(self) -> bool:
        return all(t.coeff.is_zero() for t in self.gamma)

    def lattice_basis(self) -> Matrix:
        return self.lattice if self.lattice is not None else Matrix.identity(self.dim)

    def N_of(self, v: Sequence, mode: str | None = None) -> Matrix:
        """N(v) = sum_j v_j N_j."""
        mode = mode or (FLOAT if any(isinstance(x, (float, complex)) for x in v) else EXACT)
        out = Matrix.zeros(self.dim, self.dim, mode)
        for c, N in zip(v, self.Ns):
            if c == 0:
                continue
            out = out + (N if mode == EXACT else N.to_float()).scale(c)
        return out

    def gamma_at(self, s: Sequence[complex], skip: int = 0) -> Matrix:
        """Gamma(s) in float mode; monomials involving s_1..s_skip are dropped."""
        out = np.zeros((self.dim, self.dim), dtype=complex)
        for t in self.gamma:
            if any(t.exps[k] for k in range(skip)):
                continue
            mono = 1.0 + 0j
            for sj, e in zip(s, t.exps):
                mono *= sj**e
            out = out + mono * t.coeff.to_float().arr
        return Matrix(out)

    def gamma_partials(self, s: Sequence[complex]) -> list:
        """d Gamma / d s_j as float matrices."""
        outs = []
        for j in range(self.r):
            acc = np.zeros((self.dim, self.dim), dtype=complex)
            for t in self.gamma:
                e = t.exps[j]
                if e == 0:
                    continue
                mono = complex(e)
                for k, (sk, ek) in enumerate(zip(s, t.exps)):
                    mono *= sk ** (ek - 1 if k == j else ek)
                acc = acc + mono * t.coeff.to_float().arr
            outs.append(Matrix(acc))
        return outs


# ---------------------------------------------------------------------------
# admissibility


@dataclass
class AdmissibilityReport:
    verdicts: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)
    probing_only: bool = True
    y0: float | None = None

    @property
    def ok(self) -> bool:
        return all(self.verdicts.values())


def _hermitian_positive_exact(h: list) -> bool:
    """Positive definiteness of a Hermitian Q(i) matrix by LDL^* without pivoting."""
    n = len(h)
    a = [list(r) for r in h]
    for k in range(n):
        piv = a[k][k]
        if piv.im or piv.re <= 0:
            return False
        for i in range(k + 1, n):
            f = a[i][k] / piv
            for j in range(k, n):
                a[i][j] = a[i][j] - f * a[k][j]
    return True


def _hermitian_positive_float(h: np.ndarray) -> bool:
    h = 0.5 * (h + h.conj().T)
    return bool(np.min(np.linalg.eigvalsh(h)) > 1e-12 * max(1.0, float(np.max(np.abs(h)))))


def _form(Q: Matrix, u, v):
    """Q(u, v) = u^T Q v (bilinear)."""
    Qv = Q.apply(v)
    acc = GQ(0) if Q.mode == EXACT else 0j
    for a, b in zip(u, Qv):
        acc = acc + a * b
    return acc


def _ipow(k: int, mode: str):
    k %= 4
    vals = [1, 1j, -1, -1j]
    if mode == EXACT:
        return [GQ(1), GQ(0, 1), GQ(-1), GQ(0, -1)][k]
    return vals[k]


def _conj_vec(v, mode):
    return [x.conj() for x in v] if mode == EXACT else [complex(x).conjugate() for x in v]


def _graded_pieces(F: DecreasingFiltration, W: IncreasingFiltration, k: int):
    """Lifts of the Hodge pieces H^{p,q} of Gr^W_k as (p, vectors) pairs."""
    Fbar = F.conj()
    out = []
    for p in range(F.lo - 1, F.hi + 2):
        q = k - p
        sp = (F[p] & W[k]) & ((Fbar[q] & W[k]) + W[k - 1])
        # drop the part inside W_{k-1}
        low = sp & W[k - 1]
        vecs = []
        acc = low
        for v in sp.basis:
            nxt = acc + Subspace(F.n, [v], F.mode)
            if nxt.dim > acc.dim:
                vecs.append(v)
                acc = nxt
        if vecs:
            out.append((p, vecs))
    return out


def polarized_at(F: DecreasingFiltration, W: IncreasingFiltration, Q: dict) -> tuple[bool, str]:
    """Hodge-Riemann positivity i^{p-q} Q_k(v, conj v) > 0 on each Gr^W_k.

    Q_k is a bilinear form on V read on lifts of Gr^W_k; orthogonality of
    distinct Hodge pieces is checked alongside positivity.
    """
    mode = F.mode
    for k in W.weights():
        if k not in Q:
            continue
        Qk = Q[k] if mode == EXACT else Q[k].to_float()
        pieces = _graded_pieces(F, W, k)
        for p, vecs in pieces:
            q = k - p
            c = _ipow(p - q, mode)
            h = [[c * _form(Qk, u, _conj_vec(v, mode)) for v in vecs] for u in vecs]
            ok = _hermitian_positive_exact(h) if mode == EXACT else _hermitian_positive_float(np.array(h, dtype=complex))
            if not ok:
                return False, f"Hodge-Riemann positivity fails on Gr_{k} piece ({p},{q})"
            for p2, vecs2 in pieces:
                if p2 == p:
                    continue
                # Q(H^{p,q}, conj H^{p2,q2}) = 0 unless p = p2
                for u in vecs:
                    for v in vecs2:
                        val = _form(Qk, u, _conj_vec(v, mode))
                        if (val != 0) if mode == EXACT else abs(val) > 1e-9:
                            return False, f"Hodge pieces ({p},{q}) and ({p2},{k - p2}) of Gr_{k} are not orthogonal"
    return True, ""


def primitive_positivity(F: DecreasingFiltration, N: Matrix, W: IncreasingFiltration, Q: dict) -> tuple[bool, str]:
    """i^{p-q} Q_k(v, N^l conj v) > 0 on the primitive classes of Gr^M_{k+l} Gr^W_k.

    M = M(N, W); primitive classes are read inside the Deligne pieces of
    the limit (F, M), so p + q = k + l and v lies in W_k, ker N^{l+1}.
    """
    res = monodromy_relative(N, W)
    if not res.exists:
        return False, "relative weight filtration does not exist"
    M = res.M
    if not is_mhs(F, M):
        return False, "(F, M) is not a mixed Hodge structure"
    bg = bigrading(MHS(F, M))
    mode = F.mode
    n = F.n
    for k in W.weights():
        if k not in Q:
            continue
        Qk = Q[k]
        for (p, q), piece in bg.pieces.items():
            ell = p + q - k
            if ell < 0:
                continue
            w = p + q
            Nl = N**ell
            cand = (piece & W[k]) & (W[k - 1] + M[w - 2 * ell - 3]).preimage(N ** (ell + 1))
            low = W[k - 1] + (M[w - 1] & W[k])
            vecs = []
            acc = low
            for v in cand.basis:
                nxt = acc + Subspace(n, [v], mode)
                if nxt.dim > acc.dim:
                    vecs.append(v)
                    acc = nxt
            if not vecs:
                continue
            c = _ipow(p - q, mode)
            h = [[c * _form(Qk, u, Nl.apply(_conj_vec(v, mode))) for v in vecs] for u in vecs]
            ok = _hermitian_positive_exact(h) if mode == EXACT else _hermitian_positive_float(np.array(h, dtype=complex))
            if not ok:
                return False, f"Q_{k}(., N^{ell} .) is not positive on primitive ({p},{q}) classes"
    return True, ""


def _in_q(a: Matrix, bg) -> bool:
    """a in q = sum of gl^{r,s} with r < 0."""
    return all(r < 0 for (r, s), c in bg.components(a).items() if not c.is_zero())


def default_probe(s: OrbitScenario) -> list:
    scale = max(1.0, float(s.K_bound))
    vals = [int(math.ceil(v * scale)) for v in (2, 5, 10, 50)]
    return vals


def check_admissible_orbit(s: OrbitScenario, probe: Sequence[int] | None = None) -> AdmissibilityReport:
    rep = AdmissibilityReport()
    Ns, W, F = s.Ns, s.W, s.Finf

    def verdict(key, ok, msg):
        rep.verdicts[key] = bool(ok)
        if not ok:
            rep.failures.append(msg)

    verdict("nilpotent", all(N.is_nilpotent() for N in Ns), "some N_j is not nilpotent")
    verdict("real", all(N.is_real() for N in Ns), "some N_j is not real")
    comm = all(bracket(a, b).is_zero() for i, a in enumerate(Ns) for b in Ns[i + 1 :])
    verdict("commuting", comm, "the N_j do not commute")
    verdict("preserve-W", all(W.preserved_by(N) for N in Ns), "some N_j does not preserve W")
    verdict(
        "horizontal",
        all(F.preserved_by(N, -1) for N in Ns),
        "horizontality N_j F^p in F^(p-1) fails",
    )
    chain = weight_chain(Ns, W) if rep.verdicts["preserve-W"] and rep.verdicts["nilpotent"] else [None]
    verdict("weight-chain", all(c is not None for c in chain), "the relative weight chain W^j does not exist")
    cone_ok = True
    if rep.verdicts["weight-chain"] and Ns:
        for v in default_cone_samples(len(Ns)):
            Nv = s.N_of(v, EXACT)
            if not monodromy_relative(Nv, W).exists:
                cone_ok = False
                rep.failures.append(f"M(N(v), W) does not exist for cone vector {v}")
                break
    rep.verdicts["cone"] = cone_ok
    # local normal form constraints on Gamma
    vanish = all(any(t.exps) or t.coeff.is_zero() for t in s.gamma)
    verdict("gamma-vanishes-at-origin", vanish, "Gamma(0) != 0: the local normal form requires Gamma to vanish at the origin")
    if s.gamma and rep.verdicts["weight-chain"]:
        Wr = chain[-1]
        lim_ok = is_mhs(F, Wr)
        verdict("limit-mhs", lim_ok, "(F_inf, W^r) is not a mixed Hodge structure")
        if lim_ok:
            bg = bigrading(MHS(F, Wr))
            verdict("gamma-in-q", all(_in_q(t.coeff, bg) for t in s.gamma), "a Gamma coefficient is not in q")
        verdict("gamma-preserves-W", all(W.preserved_by(t.coeff) for t in s.gamma), "a Gamma coefficient does not preserve W")
        try:
            for j in range(1, s.r + 1):
                partial_gamma(s, j)
            verdict("gamma-kernel", True, "")
        except GammaKernelViolation as e:
            verdict("gamma-kernel", False, str(e))
    # probing the nilpotent orbit
    probe = list(probe) if probe is not None else default_probe(s)
    passing = []
    if rep.verdicts["nilpotent"]:
        for scale in probe:
            pts = list(product([scale], repeat=s.r)) if s.r else [()]
            ok_scale = True
            for y in pts:
                g = nilpotent_exp(s.N_of([GQ(0, int(v)) for v in y], EXACT)) if s.r else Matrix.identity(s.dim)
                Fy = F.apply(g)
                if not is_mhs(Fy, W):
                    ok_scale = False
                    break
                if s.polarizations:
                    ok, msg = polarized_at(Fy, W, s.polarizations)
                    if not ok:
                        ok_scale = False
                        break
            passing.append(ok_scale)
        # admissible from the first scale after which every probe passes
        y0 = None
        for idx in range(len(probe)):
            if all(passing[idx:]):
                y0 = probe[idx]
                break
        rep.y0 = y0
        verdict("probe-mhs", bool(passing) and passing[-1], "e^{iN(y)}F_inf is not a (polarized) MHS at the largest probe")
    if s.polarizations and rep.verdicts.get("weight-chain") and Ns:
        ok, msg = primitive_positivity(F, s.N_of([1] * s.r, EXACT), W, s.polarizations)
        verdict("primitive-positivity", ok, msg)
    return rep


# ---------------------------------------------------------------------------
# period map


def period_operator(s: OrbitScenario, z: Sequence, mode: str = FLOAT, skip: int = 0) -> Matrix:
    """g(z) = e^{N(z)} e^{Gamma_skip(s)} with s_j = e^{2 pi i z_j}."""
    if mode == EXACT:
        if not s.gamma_is_zero:
            raise ExactnessViolation("exact evaluation needs Gamma = 0 (s = e^{2 pi i z} is transcendental)")
        zs = [GQ.coerce(v) for v in z]
        return nilpotent_exp(s.N_of(zs, EXACT))
    zc = [complex(v) for v in z]
    g = nilpotent_exp(s.N_of(zc, FLOAT))
    if s.gamma:
        sv = [cmath.exp(2j * math.pi * v) for v in zc]
        gam = s.gamma_at(sv, skip)
        if gam.max_abs() > 0:
            g = g @ nilpotent_exp(gam)
    return g


def eval_period_map(s: OrbitScenario, z: Sequence, mode: str = FLOAT) -> DecreasingFiltration:
    """F(z) = e^{N(z)} e^{Gamma(s)}.F_inf."""
    g = period_operator(s, z, mode)
    F = s.Finf if mode == EXACT else s.Finf.to_float()
    return F.apply(g)


def partial_gamma(s: OrbitScenario, j: int) -> list:
    """Gamma_j: monomials free of s_1..s_j, validated against ad N_1..ad N_j."""
    kept = [t for t in s.gamma if not any(t.exps[k] for k in range(j))]
    for t in kept:
        for k in range(j):
            if not bracket(s.Ns[k], t.coeff).is_zero():
                raise GammaKernelViolation(
                    f"Gamma_{j} term with exponents {t.exps} does not commute with N_{k + 1}"
                )
    return kept


@dataclass
class PartialData:
    j: int
    gamma: list
    F_j: Callable
    theta_weight: IncreasingFiltration | None
    theta: Callable


def partial_data(s: OrbitScenario, j: int) -> PartialData:
    if not 0 <= j <= s.r:
        raise ValueError(f"partial index {j} outside 0..{s.r}")
    kept = partial_gamma(s, j)
    sub = OrbitScenario(s.dim, s.W, s.Finf, s.Ns, kept, s.lattice, s.polarizations, s.K_bound, s.name)

    def F_j(z, mode=FLOAT):
        return eval_period_map(sub, z, mode)

    # theta_I for I = {1..j}: exp(sum_{k>j} z_k N_k).F_inf against M(C(I), W)
    M = None
    if j:
        res = monodromy_relative(s.N_of([1] * j + [0] * (s.r - j), EXACT), s.W)
        M = res.M if res.exists else None
    else:
        M = s.W

    def theta(z, mode=EXACT):
        v = [0] * j + list(z[j:])
        if mode == EXACT:
            g = nilpotent_exp(s.N_of([GQ.coerce(x) for x in v], EXACT))
            return s.Finf.apply(g)
        g = nilpotent_exp(s.N_of([complex(x) for x in v], FLOAT))
        return s.Finf.to_float().apply(g)

    return PartialData(j=j, gamma=kept, F_j=F_j, theta_weight=M, theta=theta)


# ---------------------------------------------------------------------------
# sl2-sequences


@dataclass(frozen=True)
class Schedule:
    """A scalar rule m -> value from a symbolic family.

    kind: "const" (a), "power" (a * m^b), "exp" (a * e^{b m}),
    "decay" (a + c * m^{-b}), "table" (explicit values, m = 1, 2, ...).
    """

    kind: str
    a: float = 1.0
    b: float = 0.0
    c: float = 0.0
    table: tuple = ()

    def __call__(self, m: int) -> float:
        if self.kind == "const":
            return float(self.a)
        if self.kind == "power":
            return float(self.a) * float(m) ** float(self.b)
        if self.kind == "exp":
            return float(self.a) * math.exp(float(self.b) * m)
        if self.kind == "decay":
            return float(self.a) + float(self.c) * float(m) ** (-float(self.b))
        if self.kind == "table":
            if not 1 <= m <= len(self.table):
                raise ScheduleNotInStrip(f"table schedule has no entry for m = {m}")
            return float(self.table[m - 1])
        raise ValueError(f"unknown schedule kind {self.kind!r}")

    def growth(self):
        """(class, rate): class 0 bounded, 1 power, 2 exponential."""
        if self.kind in ("const", "decay"):
            return (0, 0.0)
        if self.kind == "power":
            return (1, float(self.b)) if self.b > 0 else (0, 0.0)
        if self.kind == "exp":
            return (2, float(self.b)) if self.b > 0 else (0, 0.0)
        return None


@dataclass
class SL2SequenceSpec:
    T: Matrix  # r x d
    v: list  # d schedules
    b: list | None = None  # r schedules
    x: list | None = None  # r schedules

    @property
    def r(self) -> int:
        return self.T.nrows

    @property
    def d(self) -> int:
        return self.T.ncols

    @property
    def strict(self) -> bool:
        return (
            self.d == self.r
            and self.T == Matrix.identity(self.r)
            and all(sch.kind == "const" and sch.a == 0 for sch in (self.b or []))
        )

    def y(self, m: int) -> list:
        vs = [f(m) for f in self.v]
        T = self.T.to_float().arr.real
        ys = [float(v) for v in T @ np.array(vs, dtype=float)]
        if self.b:
            ys = [a + f(m) for a, f in zip(ys, self.b)]
        return ys

    def xs(self, m: int) -> list:
        return [f(m) for f in self.x] if self.x else [0.0] * self.r

    def thetas(self) -> list:
        return [self.T.column(i) for i in range(self.d)]

    def flag(self) -> list:
        out = []
        for j in range(1, self.d + 1):
            out.append(Subspace(self.r, self.thetas()[:j], EXACT))
        return out


@dataclass
class SequencePoint:
    m: int
    z: tuple
    x: tuple
    y: tuple
    t: tuple
    flag: list
    iota: int
    iota_confidence: str
    sigma: tuple


def _y_growth(spec: SL2SequenceSpec) -> list | None:
    """Leading growth class of each y_j from the symbolic schedules, or None."""
    gs = [f.growth() for f in spec.v]
    if any(g is None for g in gs):
        return None
    T = spec.T
    out = []
    for j in range(spec.r):
        best = (0, 0.0)
        for k in range(spec.d):
            if T[j, k] != 0:
                best = max(best, gs[k])
        out.append(best)
    return out


def non_polynomial_index(spec: SL2SequenceSpec, samples: Sequence[int] = ()) -> tuple[int, str]:
    """Smallest j at which y_{j+1}^d / y_j -> 0 for every d (y_{r+1} = 1); 0 for bounded y."""
    r = spec.r
    gs = _y_growth(spec)
    if gs is not None:
        gs = gs + [(0, 0.0)]
        if all(g[0] == 0 for g in gs[:r]):
            return 0, "exact"
        for j in range(r):
            cur, nxt = gs[j], gs[j + 1]
            if cur[0] == 0:
                continue
            if nxt[0] == 0 or (cur[0] == 2 and nxt[0] < 2):
                return j + 1, "exact"
        return r, "exact"
    # numeric schedules: compare log-growth on the supplied tail
    ms = list(samples) or list(range(10, 41))
    ys = np.array([spec.y(m) + [1.0] for m in ms])
    logs = np.log(np.maximum(ys, 1e-300))
    if np.all(np.ptp(logs[:, :r], axis=0) < 1e-9):
        return 0, "regression"
    for j in range(r):
        a, b = logs[:, j], logs[:, j + 1]
        if np.ptp(a) < 1e-9:
            continue
        # y_{j+1} = O(log y_j) behaviour: ratio of log-growths tends to zero
        ratio = (b[-1] - b[0] + 1e-300) / (a[-1] - a[0])
        if ratio < 0.05:
            return j + 1, "regression"
    return r, "regression"


def gen_sequence(spec: SL2SequenceSpec, m: int) -> SequencePoint:
    ys = spec.y(m)
    xs = spec.xs(m)
    if any(v < 1 for v in ys) or any(not 0 <= v <= 1 for v in xs):
        raise ScheduleNotInStrip(f"z({m}) lies outside the vertical strip: y={ys}, x={xs}")
    order = tuple(sorted(range(spec.r), key=lambda j: -ys[j]))
    ys_s = [ys[j] for j in order]
    xs_s = [xs[j] for j in order]
    ext = ys_s + [1.0]
    t = tuple(ext[j + 1] / ext[j] for j in range(spec.r))
    iota, conf = non_polynomial_index(spec)
    z = tuple(complex(a, b) for a, b in zip(xs_s, ys_s))
    return SequencePoint(
        m=m, z=z, x=tuple(xs_s), y=tuple(ys_s), t=t, flag=spec.flag(), iota=iota, iota_confidence=conf, sigma=order
    )


def burn_in(spec: SL2SequenceSpec, m_max: int) -> int:
    """Smallest m0 with z(m) in the strip for every m0 <= m <= m_max."""
    m0 = m_max + 1
    for m in range(m_max, 0, -1):
        try:
            gen_sequence(spec, m)
        except ScheduleNotInStrip:
            break
        m0 = m
    if m0 > m_max:
        raise ScheduleNotInStrip(f"no point of the sequence up to m = {m_max} lies in the strip")
    return m0


# ---------------------------------------------------------------------------
# quasi-unipotent monodromy


def unipotentize(Ts: Sequence[Matrix], d_max: int = 12) -> tuple[int, list]:
    """Smallest d <= d_max with every T_j^d unipotent, and N_j = log(T_j^d)."""
    if not Ts:
        return 1, []
    n = Ts[0].nrows
    ident = Matrix.identity(n, Ts[0].mode)
    for d in range(1, d_max + 1):
        powers = [T**d for T in Ts]
        if all((P - ident).is_nilpotent() for P in powers):
            return d, [unipotent_log(P) for P in powers]
    raise NotQuasiUnipotentWithin(d_max)
