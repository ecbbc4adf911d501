"""Monodromy and relative monodromy weight filtrations, plus Kashiwara's cone properties."""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Sequence

from .errors import DoesNotPreserveW, NotNilpotent, RelativeWeightMissing
from .filtrations import IncreasingFiltration
from .linalg import EXACT, Matrix, Subspace


@dataclass
class RelativeWeightResult:
    exists: bool
    M: IncreasingFiltration | None = None
    reason: str = ""


def _sum(spaces, n, mode):
    acc = Subspace.zero(n, mode)
    for s in spaces:
        acc = acc + s
    return acc


def monodromy_weight(N: Matrix, center: int = 0) -> IncreasingFiltration:
    """W(N) centered at `center`: M_k = sum_{j >= max(0, c-k)} N^j ker N^{k-c+2j+1}."""
    if not N.is_nilpotent():
        raise NotNilpotent("monodromy weight filtration needs a nilpotent operator")
    n, mode = N.nrows, N.mode
    powers = [Matrix.identity(n, mode)]
    while not powers[-1].is_zero():
        powers.append(powers[-1] @ N)
    nil = len(powers) - 1  # N^nil = 0, N^{nil-1} != 0
    kers = {}

    def ker(m):
        if m <= 0:
            return Subspace.zero(n, mode)
        if m >= nil:
            return Subspace.full(n, mode)
        if m not in kers:
            kers[m] = Subspace(n, powers[m].nullspace(), mode)
        return kers[m]

    steps = {}
    top = max(nil - 1, 0)
    for k in range(-top - 1, top + 1):
        parts = []
        for j in range(max(0, -k), nil):
            kk = ker(k + 2 * j + 1)
            if kk.dim:
                parts.append(kk.apply(powers[j]))
        steps[k + center] = _sum(parts, n, mode)
    return IncreasingFiltration(n, steps, mode)


def _restrict(N: Matrix, sub: Subspace):
    """Matrix of N on an N-stable subspace, in the subspace's basis (columns)."""
    b = sub.basis_matrix()
    img = N @ b
    return b.solve(img)


def _complement(sub: Subspace, big: Subspace) -> Subspace:
    """A complement of sub inside big, spanned by vectors of big's echelon basis."""
    n, mode = big.n, big.mode
    acc = sub
    chosen = []
    for v in big.basis:
        nxt = acc + Subspace(n, [v], mode)
        if nxt.dim > acc.dim:
            chosen.append(v)
            acc = nxt
    return Subspace(n, chosen, mode)


def _primitive_lifts(N: Matrix, W: IncreasingFiltration, k: int):
    """Lefschetz data of N on Gr^W_k: list of (vector v in W_k, ell) with v primitive of weight k+ell."""
    n, mode = N.nrows, N.mode
    low, top = W[k - 1], W[k]
    comp = _complement(low, top)
    d = comp.dim
    if not d:
        return []
    # matrix of N-bar on Gr_k in the basis of comp: project N c onto comp along W_{k-1}
    cb = comp.basis_matrix()
    full = Matrix.from_columns(list(comp.basis) + list(low.basis), n, mode)
    coords = full.solve(N @ cb)
    nbar = Matrix([list(coords.rows[i]) for i in range(d)]) if mode == EXACT else Matrix(coords.arr[:d])
    L = monodromy_weight(nbar, 0)
    out = []
    top_w = L.hi
    powers = [Matrix.identity(d, mode)]
    for _ in range(top_w + 2):
        powers.append(powers[-1] @ nbar)
    for ell in range(top_w, -1, -1):
        ker = Subspace(d, powers[ell + 1].nullspace(), mode) if ell + 1 < len(powers) else Subspace.full(d, mode)
        cand = ker & L[ell]
        lower = L[ell - 1]
        acc = lower
        for v in cand.basis:
            nxt = acc + Subspace(d, [v], mode)
            if nxt.dim > acc.dim:
                acc = nxt
                out.append((cb.apply(v), ell))
    return out


def _axioms_report(N: Matrix, W: IncreasingFiltration, M: IncreasingFiltration) -> str:
    """Empty string when M satisfies the relative weight axioms for (N, W); else a reason."""
    n, mode = N.nrows, N.mode
    lo = min(M.lo, W.lo) - 2
    hi = max(M.hi, W.hi) + 2
    for i in range(lo, hi + 1):
        if not M[i].apply(N) <= M[i - 2]:
            return f"N does not map M_{i} into M_{i - 2}"
    powers = [Matrix.identity(n, mode)]
    for _ in range(hi - lo + 2):
        powers.append(powers[-1] @ N)
    for k in W.weights():
        wk, wk1 = W[k], W[k - 1]

        def gr(i):
            a = M[i] & wk
            a_low = (M[i - 1] & wk) + (M[i] & wk1)
            return a, a_low

        for ell in range(0, hi - lo + 1):
            a, a_low = gr(k + ell)
            b, b_low = gr(k - ell)
            da = a.dim - a_low.dim
            db = b.dim - b_low.dim
            if da != db:
                return f"Gr^M_{k + ell} and Gr^M_{k - ell} of Gr^W_{k} have different dimensions"
            if not da:
                continue
            P = powers[ell]
            if not a.apply(P) <= b or not a_low.apply(P) <= b_low:
                return f"N^{ell} does not respect the graded pieces of Gr^W_{k}"
            if (b_low.preimage(P) & a) != a_low:
                return f"N^{ell} is not injective on Gr^M_{k + ell}Gr^W_{k}"
    return ""


def relative_axioms_hold(N: Matrix, W: IncreasingFiltration, M: IncreasingFiltration) -> bool:
    return _axioms_report(N, W, M) == ""


def monodromy_relative(N: Matrix, W: IncreasingFiltration) -> RelativeWeightResult:
    """Relative weight filtration M(N, W), built weight by weight from the bottom of W.

    At each new weight k of W, every Lefschetz-primitive class of N on
    Gr^W_k must admit a lift v with N^{ell+1} v in the already built
    M_{k-ell-2}; this is a linear system, and inconsistency means M(N, W)
    does not exist.
    """
    if not N.is_nilpotent():
        raise NotNilpotent("relative weight filtration needs a nilpotent operator")
    if not W.preserved_by(N):
        raise DoesNotPreserveW("N does not preserve W")
    n, mode = N.nrows, N.mode
    weights = W.weights()
    if not weights:
        return RelativeWeightResult(True, W)
    # M restricted to the current W_k, stored as explicit steps
    steps: dict[int, Subspace] = {}

    def M_at(i):
        if not steps:
            return Subspace.zero(n, mode)
        ks = sorted(steps)
        if i < ks[0]:
            return Subspace.zero(n, mode)
        if i > ks[-1]:
            return steps[ks[-1]]
        return steps[i]

    for k in weights:
        lifts = _primitive_lifts(N, W, k)
        low = W[k - 1]
        new_vectors = []  # (vector, weight)
        for v0, ell in lifts:
            P = N ** (ell + 1)
            target = P.apply(v0)
            # need u in W_{k-1} with P u + target in M_{k-ell-2}
            m_low = M_at(k - ell - 2)
            cols = [P.apply(w) for w in low.basis] + list(m_low.basis)
            if cols:
                A = Matrix.from_columns(cols, n, mode)
                rhs = Matrix.from_columns([[-x for x in target]] if mode == EXACT else [-target], n, mode)
                sol = A.solve(rhs)
                if mode != EXACT and sol is not None:
                    if not (A @ sol - rhs).is_zero(1e-8):
                        sol = None
            else:
                sol = None if any(x for x in target) else Matrix.zeros(0, 1, mode)
            if sol is None:
                return RelativeWeightResult(
                    False, None, f"primitive class of weight {k + ell} on Gr^W_{k} has no admissible lift"
                )
            vec = v0
            if low.dim:
                u = Matrix.from_columns(list(low.basis), n, mode).apply([sol[idx, 0] for idx in range(low.dim)])
                vec = tuple(a + b for a, b in zip(v0, u)) if mode == EXACT else v0 + u
            for j in range(ell + 1):
                new_vectors.append((vec, k + ell - 2 * j))
                vec = N.apply(vec)
        all_w = sorted(set(list(steps) + [w for _, w in new_vectors]))
        lo_w = min(all_w) if all_w else k
        hi_w = max(all_w) if all_w else k
        new_steps = {}
        for i in range(lo_w, hi_w + 1):
            extra = [vec for vec, w in new_vectors if w <= i]
            base = M_at(i)
            new_steps[i] = base + Subspace(n, extra, mode) if extra else base
        steps = new_steps
    top = max(steps)
    steps[top + 1] = Subspace.full(n, mode)
    M = IncreasingFiltration(n, steps, mode)
    reason = _axioms_report(N, W, M)
    if reason:
        return RelativeWeightResult(False, None, "constructed filtration fails: " + reason)
    return RelativeWeightResult(True, M)


# ---------------------------------------------------------------------------
# Kashiwara cone checks


def cone_element(Ns: Sequence[Matrix], v: Sequence) -> Matrix:
    n, mode = Ns[0].nrows, Ns[0].mode
    acc = Matrix.zeros(n, n, mode)
    for c, N in zip(v, Ns):
        if c:
            acc = acc + N.scale(c)
    return acc


def default_cone_samples(r: int, n_random: int = 8, seed: int = 0) -> list[tuple]:
    """Coordinate vectors, pairwise sums and seeded random positive rational combinations."""
    rng = random.Random(seed)
    out = []
    for i in range(r):
        out.append(tuple(Fraction(int(i == j)) for j in range(r)))
    for i, j in combinations(range(r), 2):
        out.append(tuple(Fraction(int(k in (i, j))) for k in range(r)))
    for _ in range(n_random):
        out.append(tuple(Fraction(rng.randint(1, 9), rng.randint(1, 5)) for _ in range(r)))
    return out


@dataclass
class KashiwaraReport:
    ok: bool
    cone_constancy: dict = field(default_factory=dict)  # support -> bool
    composition: dict = field(default_factory=dict)  # (I, J) -> bool
    failures: list = field(default_factory=list)


def _subset_sum(Ns, I):
    n, mode = Ns[0].nrows, Ns[0].mode
    return cone_element(Ns, [1 if i in I else 0 for i in range(len(Ns))]) if I else Matrix.zeros(n, n, mode)


def relative_or_raise(N: Matrix, W: IncreasingFiltration, vector=None) -> IncreasingFiltration:
    res = monodromy_relative(N, W)
    if not res.exists:
        raise RelativeWeightMissing(f"relative weight filtration missing: {res.reason}", vector)
    return res.M


def kashiwara_checks(
    Ns: Sequence[Matrix],
    W: IncreasingFiltration,
    samples: Sequence[Sequence] | None = None,
    subsets: Sequence[tuple] | None = None,
) -> KashiwaraReport:
    """Cone constancy of M(N(v), W) on each open face, and M(C(I), M(C(J), W)) = M(C(I u J), W)."""
    r = len(Ns)
    samples = default_cone_samples(r) if samples is None else [tuple(Fraction(x) for x in s) for s in samples]
    rep = KashiwaraReport(ok=True)
    by_support: dict = {}
    for v in samples:
        if any(c < 0 for c in v):
            raise ValueError("cone samples must be non-negative")
        support = tuple(i for i, c in enumerate(v) if c)
        if not support:
            continue
        M = relative_or_raise(cone_element(Ns, v), W, v)
        by_support.setdefault(support, []).append((v, M))
    for support, items in sorted(by_support.items()):
        ref = relative_or_raise(_subset_sum(Ns, set(support)), W, support)
        same = all(M == ref for _, M in items)
        rep.cone_constancy[support] = same
        if not same:
            rep.ok = False
            rep.failures.append(f"M(N(v), W) varies on the open face with support {support}")
    if subsets is None:
        idx = list(range(r))
        all_subsets = [tuple(c) for k in range(r + 1) for c in combinations(idx, k)]
        subsets = [(I, J) for I in all_subsets for J in all_subsets]
    for I, J in subsets:
        inner = relative_or_raise(_subset_sum(Ns, set(J)), W, J) if J else W
        lhs = relative_or_raise(_subset_sum(Ns, set(I)), inner, I) if I else inner
        U = set(I) | set(J)
        rhs = relative_or_raise(_subset_sum(Ns, U), W, tuple(sorted(U))) if U else W
        same = lhs == rhs
        rep.composition[(tuple(I), tuple(J))] = same
        if not same:
            rep.ok = False
            rep.failures.append(f"composition identity fails for I={I}, J={J}")
    return rep
