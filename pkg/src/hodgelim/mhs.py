"""Mixed Hodge structures: validity, Deligne bigrading and grading, splittings.

All routines run in exact mode (Q(i)) or float mode; the mode is inherited
from the filtrations passed in.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Protocol

from .errors import DimensionMismatch, NotMHS, SolverFailure, XiUnavailable
from .filtrations import DecreasingFiltration, IncreasingFiltration
from .linalg import (
    EXACT,
    FLOAT,
    Matrix,
    Subspace,
    ad_components,
    direct_sum_basis,
    nilpotent_exp,
    unipotent_log,
)
from .scalars import GQ


@dataclass(frozen=True)
class MHS:
    F: DecreasingFiltration
    W: IncreasingFiltration
    lattice: Matrix | None = None

    def __post_init__(self):
        if self.F.n != self.W.n:
            raise DimensionMismatch(f"F lives in C^{self.F.n}, W in C^{self.W.n}")

    @property
    def n(self) -> int:
        return self.F.n

    @property
    def mode(self) -> str:
        return self.F.mode


@dataclass
class BiGrading:
    pieces: dict  # (p, q) -> Subspace, nonzero pieces only
    grading: Matrix
    _projectors: dict | None = field(default=None, repr=False)

    def piece(self, p: int, q: int) -> Subspace:
        n = self.grading.nrows
        return self.pieces.get((p, q), Subspace.zero(n, self.grading.mode))

    def basis(self) -> tuple[Matrix, list]:
        """Adapted basis (columns) and the (p, q) label of each column."""
        keys = sorted(self.pieces)
        b = direct_sum_basis([self.pieces[k] for k in keys])
        labels = [k for k in keys for _ in range(self.pieces[k].dim)]
        return b, labels

    def projectors(self) -> dict:
        if self._projectors is None:
            b, labels = self.basis()
            binv = b.inverse()
            mode = self.grading.mode
            out = {}
            for key in sorted(self.pieces):
                d = Matrix.diag([1 if lab == key else 0 for lab in labels], mode)
                out[key] = b @ d @ binv
            self._projectors = out
        return self._projectors

    def components(self, a: Matrix) -> dict:
        """Hodge components a^{r,s} of an endomorphism for the induced bigrading of gl(V)."""
        proj = self.projectors()
        out: dict = {}
        for (p, q), pin in proj.items():
            right = a @ pin
            if right.is_zero():
                continue
            for (p2, q2), pout in proj.items():
                term = pout @ right
                if term.is_zero():
                    continue
                key = (p2 - p, q2 - q)
                out[key] = out[key] + term if key in out else term
        return dict(sorted(out.items()))

    def component(self, a: Matrix, r: int, s: int) -> Matrix:
        return self.components(a).get((r, s), Matrix.zeros(a.nrows, a.ncols, a.mode))


@dataclass
class SplittingResult:
    delta: Matrix
    split_F: DecreasingFiltration
    xi: Matrix | None = None


# ---------------------------------------------------------------------------


def _check_dims(F: DecreasingFiltration, W: IncreasingFiltration):
    if F.n != W.n:
        raise DimensionMismatch(f"F lives in C^{F.n}, W in C^{W.n}")
    if F.mode != W.mode:
        raise DimensionMismatch("F and W have different scalar modes")


def is_mhs(F: DecreasingFiltration, W: IncreasingFiltration) -> bool:
    """Each Gr^W_k carries a pure Hodge structure of weight k induced by F."""
    _check_dims(F, W)
    Fbar = F.conj()
    for k in W.weights():
        wk, wk1 = W[k], W[k - 1]
        for p in range(F.lo, F.hi + 2):
            a = (F[p] & wk) + wk1
            b = (Fbar[k - p + 1] & wk) + wk1
            if (a & b) != wk1 or (a + b) != wk:
                return False
    return True


def bigrading(m: MHS) -> BiGrading:
    """Deligne's I^{p,q} via the explicit intersection formula, plus Y_{(F,W)}."""
    F, W = m.F, m.W
    if not is_mhs(F, W):
        raise NotMHS("(F, W) is not a mixed Hodge structure")
    n, mode = F.n, F.mode
    Fbar = F.conj()
    weights = W.weights()
    plo, phi = F.lo, F.hi
    cache_f: dict = {}
    cache_fb: dict = {}

    def f_w(p, k):
        key = (p, k)
        if key not in cache_f:
            cache_f[key] = F[p] & W[k]
        return cache_f[key]

    def fb_w(q, k):
        key = (q, k)
        if key not in cache_fb:
            cache_fb[key] = Fbar[q] & W[k]
        return cache_fb[key]

    pieces = {}
    total = 0
    for k in weights:
        for p in range(plo, phi + 1):
            q = k - p
            left = f_w(p, k)
            if not left.dim:
                continue
            right = fb_w(q, k)
            j = 1
            while k - j - 1 >= W.lo - 1 and q - j >= plo - 1:
                right = right + fb_w(q - j, k - j - 1)
                j += 1
            piece = left & right
            if piece.dim:
                pieces[(p, q)] = piece
                total += piece.dim
    if total != n:
        raise NotMHS(f"bigrading pieces have total dimension {total}, expected {n}")
    y = _grading(pieces, n, mode)
    return BiGrading(pieces=pieces, grading=y)


def _grading(pieces: dict, n: int, mode: str) -> Matrix:
    keys = sorted(pieces)
    b = direct_sum_basis([pieces[k] for k in keys])
    vals = [k[0] + k[1] for k in keys for _ in range(pieces[k].dim)]
    return b @ Matrix.diag(vals, mode) @ b.inverse()


def deligne_grading_of(F: DecreasingFiltration, W: IncreasingFiltration) -> Matrix:
    """Y_{(F,W)}."""
    return bigrading(MHS(F, W)).grading


def check_bigrading_axioms(m: MHS, bg: BiGrading) -> dict[str, bool]:
    """Verify axioms (a) Hodge filtration, (b) weight filtration, (c) conjugation rule."""
    F, W = m.F, m.W
    n, mode = m.n, m.mode

    def ssum(keys):
        acc = Subspace.zero(n, mode)
        for key in keys:
            acc = acc + bg.pieces[key]
        return acc

    keys = list(bg.pieces)
    dims_ok = sum(s.dim for s in bg.pieces.values()) == n and ssum(keys).dim == n
    a_ok = all(ssum([k for k in keys if k[0] >= p]) == F[p] for p in range(F.lo - 1, F.hi + 2))
    b_ok = all(ssum([k for k in keys if k[0] + k[1] <= w]) == W[w] for w in range(W.lo - 1, W.hi + 2))
    c_ok = True
    for (p, q), s in bg.pieces.items():
        lower = ssum([k for k in keys if k[0] < q and k[1] < p])
        lhs = s.conj() + lower
        rhs = bg.piece(q, p) + lower
        if lhs != rhs:
            c_ok = False
    y_ok = all(
        (bg.grading @ s.basis_matrix() - s.basis_matrix().scale(p + q)).is_zero() for (p, q), s in bg.pieces.items()
    )
    return {"direct_sum": dims_ok, "a": a_ok, "b": b_ok, "c": c_ok, "grading": y_ok}


def flatten(a: Matrix) -> list:
    return [a[i, j] for i in range(a.nrows) for j in range(a.ncols)]


def unflatten(v, n: int, mode: str = EXACT) -> Matrix:
    if mode == FLOAT:
        import numpy as np

        return Matrix(np.asarray(v, dtype=complex).reshape(n, n))
    return Matrix([[v[i * n + j] for j in range(n)] for i in range(n)])


def lambda_basis(m: MHS, bg: BiGrading | None = None) -> list[Matrix]:
    """Basis of Lambda^{-1,-1}: elementary maps I^{p,q} -> I^{p',q'} with p'<p, q'<q."""
    bg = bigrading(m) if bg is None else bg
    b, labels = bg.basis()
    binv = b.inverse()
    n, mode = m.n, m.mode
    out = []
    for i, (p2, q2) in enumerate(labels):
        for j, (p, q) in enumerate(labels):
            if p2 < p and q2 < q:
                out.append(b @ Matrix.unit(n, i, j, mode) @ binv)
    return out


def lambda_minus(m: MHS, bg: BiGrading | None = None) -> Subspace:
    """Lambda^{-1,-1}_{(F,W)} as a subspace of End(V) = C^{n*n} (row-major)."""
    basis = lambda_basis(m, bg)
    return Subspace(m.n * m.n, [flatten(x) for x in basis], m.mode)


def in_lambda_minus(a: Matrix, bg: BiGrading) -> bool:
    return all(r < 0 and s < 0 for (r, s), c in bg.components(a).items() if not c.is_zero())


def is_split_real(m: MHS, bg: BiGrading | None = None) -> bool:
    bg = bigrading(m) if bg is None else bg
    for (p, q), s in bg.pieces.items():
        if s.conj() != bg.piece(q, p):
            return False
    return True


def _weight_span(W: IncreasingFiltration) -> int:
    ws = W.weights()
    return (max(ws) - min(ws)) if ws else 0


def delta_split(m: MHS) -> SplittingResult:
    """Deligne's delta: the unique real delta in Lambda^{-1,-1} with (e^{-i delta}F, W) split.

    Solves conj(Y) = e^{-2i delta}.Y one ad-Y degree at a time, starting
    from the top degree; each degree is a linear equation because ad(Y)
    acts by a nonzero scalar there.
    """
    bg = bigrading(m)
    y = bg.grading
    n, mode = m.n, m.mode
    ybar = y.conj()
    zero = Matrix.zeros(n, n, mode)
    if ((ybar - y).is_zero()):
        delta = zero
    else:
        from .linalg import eigen_projectors

        proj = eigen_projectors(y)
        x = zero
        degrees = sorted({a - b for a in proj for b in proj if a - b < 0}, reverse=True)
        for k in degrees:
            cur = nilpotent_exp(x) @ y @ nilpotent_exp(-x)
            resid = ad_components(cur - ybar, y, proj).get(k)
            if resid is None or resid.is_zero():
                continue
            # [x_k, y] = -k x_k, so adding x_k shifts degree k by -k x_k
            x = x + resid.scale(GQ(1, 0) / k if mode == EXACT else 1.0 / k)
        final = nilpotent_exp(x) @ y @ nilpotent_exp(-x)
        if not (final - ybar).is_zero(None if mode == EXACT else 1e-7):
            raise SolverFailure("level-wise delta solve did not reproduce conj(Y)")
        delta = x.scale(GQ(0, 1) / 2 if mode == EXACT else 0.5j)
    if mode == EXACT and not delta.is_real():
        raise SolverFailure("computed delta is not real")
    if mode == FLOAT:
        delta = Matrix(delta.arr.real.astype(complex))
    split_F = m.F.apply(nilpotent_exp(delta.scale(GQ(0, -1) if mode == EXACT else -1j)))
    return SplittingResult(delta=delta, split_F=split_F)


# ---------------------------------------------------------------------------
# sl2-splitting providers


class XiProvider(Protocol):
    name: str

    def xi(self, m: MHS, delta_result: SplittingResult) -> Matrix: ...


class ZeroWhenDeltaZero:
    """xi = 0 whenever delta = 0 (then the MHS is already split); otherwise unavailable."""

    name = "zero-when-delta-zero"

    def xi(self, m: MHS, delta_result: SplittingResult) -> Matrix:
        n = m.n
        if m.mode == EXACT:
            if delta_result.delta.is_zero():
                return Matrix.zeros(n, n)
        elif delta_result.delta.max_abs() <= 1e-8:
            return Matrix.zeros(n, n, FLOAT)
        raise XiUnavailable("delta is nonzero; the zero provider only handles split inputs")


class CKSRecursion:
    """Low-order universal Lie polynomials: e^{-xi} = e^{zeta} e^{-i delta}.

    zeta^{-1,-1} = 0, zeta^{-1,-2} = -(i/2) delta^{-1,-2}, zeta^{-2,-1} = (i/2) delta^{-2,-1}.
    Hodge components of delta of total degree below -3 are outside the
    implemented range and raise XiUnavailable.
    """

    name = "cks-recursion"

    def xi(self, m: MHS, delta_result: SplittingResult) -> Matrix:
        n, mode = m.n, m.mode
        delta = delta_result.delta
        if delta.is_zero(None if mode == EXACT else 1e-8):
            return Matrix.zeros(n, n, mode)
        bg = bigrading(MHS(delta_result.split_F, m.W))
        comps = bg.components(delta)
        zeta = Matrix.zeros(n, n, mode)
        for (a, b), c in comps.items():
            if c.is_zero(None if mode == EXACT else 1e-10):
                continue
            if a + b < -3:
                raise XiUnavailable(f"delta has a Hodge component of type ({a},{b}); beyond implemented order")
            if (a, b) == (-1, -2):
                zeta = zeta + c.scale(GQ(0, -1) / 2 if mode == EXACT else -0.5j)
            elif (a, b) == (-2, -1):
                zeta = zeta + c.scale(GQ(0, 1) / 2 if mode == EXACT else 0.5j)
        i_neg = GQ(0, -1) if mode == EXACT else -1j
        g = nilpotent_exp(zeta) @ nilpotent_exp(delta.scale(i_neg))
        return -unipotent_log(g)


def sl2_split(m: MHS, provider=None, morphisms=()) -> SplittingResult:
    """xi with (e^{-xi}F, W) split over R; Y-hat = Y_{(e^{-xi}F, W)}."""
    provider = ZeroWhenDeltaZero() if provider is None else provider
    if not is_mhs(m.F, m.W):
        raise NotMHS("(F, W) is not a mixed Hodge structure")
    n, mode = m.n, m.mode
    if _weight_span(m.W) < 2:
        # Lambda^{-1,-1} needs two weights at distance >= 2; delta = 0 is forced
        dr = SplittingResult(delta=Matrix.zeros(n, n, mode), split_F=m.F)
    else:
        dr = delta_split(m)
    xi = provider.xi(m, dr)
    if xi.is_zero():
        split_F = m.F
    else:
        split_F = m.F.apply(nilpotent_exp(-xi))
    res = SplittingResult(delta=dr.delta, split_F=split_F, xi=xi)
    if mode == EXACT and not is_split_real(MHS(split_F, m.W)):
        raise XiUnavailable(f"provider {provider.name} produced a non-split filtration")
    for a in morphisms:
        if not (xi @ a - a @ xi).is_zero():
            raise XiUnavailable(f"provider {provider.name} output does not commute with a supplied morphism")
    return res


def hat_grading(F: DecreasingFiltration, W: IncreasingFiltration, provider=None) -> Matrix:
    """Y-hat_{(F,W)}: Deligne grading of the sl2-splitting."""
    res = sl2_split(MHS(F, W), provider)
    return deligne_grading_of(res.split_F, W)
