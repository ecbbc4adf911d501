"""Matrices, subspaces and operator calculus over Q(i) (exact) or complex doubles (float).

Both modes share one API so that the Hodge-theoretic code (bigradings,
gradings, filtrations) can run unchanged on exact data and on sampled
period-map values. Mixing the two modes raises ModeMismatch; conversion
goes through Matrix.to_float / Matrix.rationalize.
"""
from __future__ import annotations

import contextvars
import logging
import math
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionMismatch, ModeMismatch, NotNilpotent, NotSemisimpleInteger
from .scalars import GQ, ONE, ZERO

log = logging.getLogger(__name__)

EXACT = "exact"
FLOAT = "float"

DEFAULT_SVD_TOL = 1e-9
_svd_tol = contextvars.ContextVar("svd_tol", default=DEFAULT_SVD_TOL)


def svd_tol() -> float:
    return _svd_tol.get()


def set_svd_tol(tol: float):
    """Set the float-mode rank threshold for the current context; returns a reset token."""
    return _svd_tol.set(float(tol))


# ---------------------------------------------------------------------------
# exact row reduction on lists of GQ


def _rref_rows(rows: list[list[GQ]], ncols: int):
    rows = [list(r) for r in rows]
    piv_row = 0
    pivots = []
    nr = len(rows)
    for c in range(ncols):
        pr = None
        for r in range(piv_row, nr):
            if rows[r][c]:
                pr = r
                break
        if pr is None:
            continue
        rows[piv_row], rows[pr] = rows[pr], rows[piv_row]
        prow = rows[piv_row]
        a = prow[c]
        if not (a.re == 1 and not a.im):
            inv = a.inverse()
            ia, ib = inv.re, inv.im
            prow = [GQ(x.re * ia - x.im * ib, x.re * ib + x.im * ia) for x in prow]
            rows[piv_row] = prow
        for r in range(nr):
            if r == piv_row:
                continue
            f = rows[r][c]
            if not f:
                continue
            fa, fb = f.re, f.im
            row = rows[r]
            rows[r] = [
                x if not (u.re or u.im) else GQ(x.re - (fa * u.re - fb * u.im), x.im - (fa * u.im + fb * u.re))
                for x, u in zip(row, prow)
            ]
        pivots.append(c)
        piv_row += 1
        if piv_row == nr:
            break
    return rows[:piv_row], pivots


def _exact_nullspace(rows: list[list[GQ]], ncols: int) -> list[tuple]:
    """Basis of {x : rows . x = 0} (bilinear, no conjugation)."""
    red, pivots = _rref_rows(rows, ncols)
    free = [c for c in range(ncols) if c not in set(pivots)]
    basis = []
    for f in free:
        v = [ZERO] * ncols
        v[f] = ONE
        for i, p in enumerate(pivots):
            v[p] = -red[i][f]
        basis.append(tuple(v))
    return basis


# ---------------------------------------------------------------------------
# float helpers


# matches the conditioning guard on period operators
ROW_DROP = 1e-13


def _unit_rows(a: np.ndarray) -> np.ndarray:
    """Rows scaled to unit length so rank decisions ignore row scale.

    Rows below ROW_DROP times the largest row norm (or below ROW_DROP in
    absolute terms) are rounding noise and dropped.
    """
    norms = np.linalg.norm(a, axis=1)
    top = float(np.max(norms, initial=0.0))
    keep = norms > ROW_DROP * max(1.0, top)
    return a[keep] / norms[keep, None]


def _float_rank_basis(a: np.ndarray, tol: float | None = None):
    """Orthonormal basis (rows) of the row space of a, with rank by SVD threshold."""
    tol = svd_tol() if tol is None else tol
    if a.size == 0:
        return np.zeros((0, a.shape[1] if a.ndim == 2 else 0), dtype=complex)
    a = _unit_rows(a)
    if a.shape[0] == 0:
        return np.zeros((0, a.shape[1]), dtype=complex)
    u, s, vh = np.linalg.svd(a, full_matrices=False)
    scale = max(1.0, float(s[0])) if len(s) else 1.0
    rank = int(np.sum(s > tol * scale))
    if len(s) and rank < len(s) and s[rank] > tol * scale * 1e-3:
        log.debug("float rank decision near threshold: sv=%g tol=%g", s[rank], tol * scale)
    return vh[:rank].copy()


def _float_nullspace(a: np.ndarray, ncols: int, tol: float | None = None) -> np.ndarray:
    tol = svd_tol() if tol is None else tol
    if a.shape[0]:
        a = _unit_rows(a)
    if a.shape[0] == 0:
        return np.eye(ncols, dtype=complex)
    u, s, vh = np.linalg.svd(a, full_matrices=True)
    scale = max(1.0, float(s[0])) if len(s) else 1.0
    rank = int(np.sum(s > tol * scale))
    # rows of vh beyond rank span the kernel of a (as x with a @ x = 0 use conj)
    return vh[rank:].conj().copy()


# ---------------------------------------------------------------------------


def _as_gq(x) -> GQ:
    return x if isinstance(x, GQ) else GQ.coerce(x)


class Matrix:
    """Immutable matrix, exact (entries GQ) or float (complex128 array)."""

    __slots__ = ("_rows", "_arr", "nrows", "ncols", "mode", "__weakref__")

    def __init__(self, data, mode: str | None = None):
        if isinstance(data, Matrix):
            data = data._arr if data.mode == FLOAT else data._rows
        if isinstance(data, np.ndarray) and mode != EXACT:
            arr = np.array(data, dtype=complex)
            if arr.ndim != 2:
                raise DimensionMismatch("matrix data must be 2-dimensional")
            self._arr = arr
            self._arr.setflags(write=False)
            self._rows = None
            self.nrows, self.ncols = arr.shape
            self.mode = FLOAT
            return
        rows = [list(r) for r in data]
        if mode == FLOAT:
            arr = np.array([[complex(x) for x in r] for r in rows], dtype=complex)
            if arr.ndim != 2:
                arr = arr.reshape(len(rows), 0)
            self.__init__(arr)
            return
        self._rows = tuple(tuple(_as_gq(x) for x in r) for r in rows)
        self._arr = None
        self.nrows = len(self._rows)
        self.ncols = len(self._rows[0]) if self._rows else 0
        if any(len(r) != self.ncols for r in self._rows):
            raise DimensionMismatch("ragged matrix rows")
        self.mode = EXACT

    # -- constructors
    @classmethod
    def identity(cls, n: int, mode: str = EXACT) -> "Matrix":
        if mode == FLOAT:
            return cls(np.eye(n, dtype=complex))
        return cls([[ONE if i == j else ZERO for j in range(n)] for i in range(n)])

    @classmethod
    def zeros(cls, r: int, c: int | None = None, mode: str = EXACT) -> "Matrix":
        c = r if c is None else c
        if mode == FLOAT:
            return cls(np.zeros((r, c), dtype=complex))
        return cls([[ZERO] * c for _ in range(r)])

    @classmethod
    def diag(cls, values: Sequence, mode: str = EXACT) -> "Matrix":
        n = len(values)
        if mode == FLOAT:
            return cls(np.diag(np.array(values, dtype=complex)))
        return cls([[_as_gq(values[i]) if i == j else ZERO for j in range(n)] for i in range(n)])

    @classmethod
    def from_columns(cls, cols: Sequence, n: int, mode: str = EXACT) -> "Matrix":
        if mode == FLOAT:
            if len(cols) == 0:
                return cls(np.zeros((n, 0), dtype=complex))
            return cls(np.array(cols, dtype=complex).reshape(len(cols), n).T)
        if not cols:
            return cls([[] for _ in range(n)]) if n else cls([])
        return cls([[cols[j][i] for j in range(len(cols))] for i in range(n)])

    @classmethod
    def unit(cls, n: int, i: int, j: int, mode: str = EXACT) -> "Matrix":
        """E_ij: sends e_j to e_i (0-based)."""
        if mode == FLOAT:
            a = np.zeros((n, n), dtype=complex)
            a[i, j] = 1
            return cls(a)
        return cls([[ONE if (r, c) == (i, j) else ZERO for c in range(n)] for r in range(n)])

    # -- access
    @property
    def rows(self):
        if self.mode == FLOAT:
            raise ModeMismatch("float matrix has no exact rows")
        return self._rows

    @property
    def arr(self) -> np.ndarray:
        if self.mode == EXACT:
            raise ModeMismatch("exact matrix has no float array; call to_float()")
        return self._arr

    def __getitem__(self, ij):
        i, j = ij
        return self._arr[i, j] if self.mode == FLOAT else self._rows[i][j]

    @property
    def shape(self):
        return (self.nrows, self.ncols)

    def column(self, j: int):
        if self.mode == FLOAT:
            return self._arr[:, j].copy()
        return tuple(r[j] for r in self._rows)

    def columns(self) -> list:
        return [self.column(j) for j in range(self.ncols)]

    # -- mode handling
    def _check(self, other: "Matrix"):
        if not isinstance(other, Matrix):
            raise TypeError(f"expected Matrix, got {type(other).__name__}")
        if other.mode != self.mode:
            raise ModeMismatch("cannot combine exact and float matrices implicitly")

    def to_float(self) -> "Matrix":
        if self.mode == FLOAT:
            return self
        return Matrix(np.array([[complex(x) for x in r] for r in self._rows], dtype=complex).reshape(self.nrows, self.ncols))

    def rationalize(self, max_den: int = 10**6) -> "Matrix":
        """Lossy float -> exact conversion via best rational approximations."""
        if self.mode == EXACT:
            return self

        def rat(x: float):
            return Fraction(x).limit_denominator(max_den)

        return Matrix([[GQ(rat(z.real), rat(z.imag)) for z in r] for r in self._arr])

    # -- arithmetic
    def __add__(self, o: "Matrix") -> "Matrix":
        self._check(o)
        if self.shape != o.shape:
            raise DimensionMismatch(f"{self.shape} + {o.shape}")
        if self.mode == FLOAT:
            return Matrix(self._arr + o._arr)
        return Matrix([[a + b for a, b in zip(r, s)] for r, s in zip(self._rows, o._rows)])

    def __sub__(self, o: "Matrix") -> "Matrix":
        self._check(o)
        if self.shape != o.shape:
            raise DimensionMismatch(f"{self.shape} - {o.shape}")
        if self.mode == FLOAT:
            return Matrix(self._arr - o._arr)
        return Matrix([[a - b for a, b in zip(r, s)] for r, s in zip(self._rows, o._rows)])

    def __neg__(self) -> "Matrix":
        if self.mode == FLOAT:
            return Matrix(-self._arr)
        return Matrix([[-a for a in r] for r in self._rows])

    def scale(self, c) -> "Matrix":
        if self.mode == FLOAT:
            return Matrix(self._arr * complex(c))
        c = _as_gq(c)
        return Matrix([[c * a for a in r] for r in self._rows])

    def __mul__(self, c) -> "Matrix":
        if isinstance(c, Matrix):
            raise TypeError("use @ for matrix products")
        return self.scale(c)

    __rmul__ = __mul__

    def __matmul__(self, o: "Matrix") -> "Matrix":
        self._check(o)
        if self.ncols != o.nrows:
            raise DimensionMismatch(f"{self.shape} @ {o.shape}")
        if self.mode == FLOAT:
            return Matrix(self._arr @ o._arr)
        cols = list(zip(*o._rows)) if o._rows else []
        out = []
        for r in self._rows:
            nz = [(k, x) for k, x in enumerate(r) if x]
            row = []
            for c in cols:
                re = 0
                im = 0
                for k, x in nz:
                    y = c[k]
                    if y:
                        re += x.re * y.re - x.im * y.im
                        im += x.re * y.im + x.im * y.re
                row.append(GQ(re, im))
            out.append(row)
        if not out:
            return Matrix.zeros(0, o.ncols)
        return Matrix(out)

    def apply(self, v):
        """Matrix times a column vector given as a sequence."""
        if self.mode == FLOAT:
            return self._arr @ np.asarray(v, dtype=complex)
        out = []
        for r in self._rows:
            s = ZERO
            for x, y in zip(r, v):
                if x and y:
                    s = s + x * y
            out.append(s)
        return tuple(out)

    def __pow__(self, k: int) -> "Matrix":
        result = Matrix.identity(self.nrows, self.mode)
        base = self
        while k:
            if k & 1:
                result = result @ base
            base = base @ base
            k >>= 1
        return result

    def conj(self) -> "Matrix":
        if self.mode == FLOAT:
            return Matrix(self._arr.conj())
        return Matrix([[a.conj() for a in r] for r in self._rows])

    @property
    def T(self) -> "Matrix":
        if self.mode == FLOAT:
            return Matrix(self._arr.T)
        if not self._rows:
            return Matrix.zeros(self.ncols, 0)
        return Matrix([list(c) for c in zip(*self._rows)])

    def trace(self):
        if self.mode == FLOAT:
            return complex(np.trace(self._arr))
        s = ZERO
        for i in range(min(self.nrows, self.ncols)):
            s = s + self._rows[i][i]
        return s

    # -- predicates
    def __eq__(self, o):
        if not isinstance(o, Matrix):
            return NotImplemented
        if o.mode != self.mode or o.shape != self.shape:
            return False
        if self.mode == FLOAT:
            return bool(np.array_equal(self._arr, o._arr))
        return self._rows == o._rows

    def __hash__(self):
        if self.mode == FLOAT:
            return hash(self._arr.tobytes())
        return hash(self._rows)

    def is_zero(self, tol: float | None = None) -> bool:
        if self.mode == FLOAT:
            tol = svd_tol() if tol is None else tol
            return bool(np.max(np.abs(self._arr), initial=0.0) <= tol)
        return not any(x for r in self._rows for x in r)

    def close(self, o: "Matrix", tol: float = 1e-9) -> bool:
        a = self.to_float()._arr
        b = o.to_float()._arr
        return a.shape == b.shape and bool(np.max(np.abs(a - b), initial=0.0) <= tol)

    def is_real(self) -> bool:
        if self.mode == FLOAT:
            return bool(np.max(np.abs(self._arr.imag), initial=0.0) <= svd_tol())
        return all(not x.im for r in self._rows for x in r)

    def is_integral(self) -> bool:
        """Real with integer entries (exact mode only)."""
        if self.mode == FLOAT:
            raise ModeMismatch("integrality is decided in exact mode")
        return all(not x.im and x.re.denominator == 1 for r in self._rows for x in r)

    def is_nilpotent(self) -> bool:
        if self.nrows != self.ncols:
            raise DimensionMismatch("nilpotency needs a square matrix")
        if self.mode == FLOAT:
            p = np.linalg.matrix_power(self._arr, self.nrows)
            scale = max(1.0, float(np.max(np.abs(self._arr), initial=0.0))) ** self.nrows
            return bool(np.max(np.abs(p), initial=0.0) <= svd_tol() * scale)
        return (self ** self.nrows).is_zero()

    def max_abs(self) -> float:
        a = self.to_float()._arr
        return float(np.max(np.abs(a), initial=0.0))

    # -- linear algebra
    def rank(self) -> int:
        if self.mode == FLOAT:
            return _float_rank_basis(self._arr).shape[0]
        return len(_rref_rows([list(r) for r in self._rows], self.ncols)[0])

    def nullspace(self) -> list:
        """Basis of {x : self @ x = 0}."""
        if self.mode == FLOAT:
            return list(_float_nullspace(self._arr, self.ncols))
        return _exact_nullspace([list(r) for r in self._rows], self.ncols)

    def inverse(self) -> "Matrix":
        n = self.nrows
        if n != self.ncols:
            raise DimensionMismatch("inverse of non-square matrix")
        if self.mode == FLOAT:
            return Matrix(np.linalg.inv(self._arr))
        aug = [list(r) + [ONE if i == j else ZERO for j in range(n)] for i, r in enumerate(self._rows)]
        red, piv = _rref_rows(aug, 2 * n)
        if piv[:n] != list(range(n)) or len(piv) < n or piv[n - 1] != n - 1:
            raise ZeroDivisionError("singular matrix")
        return Matrix([r[n:] for r in red])

    def solve(self, b: "Matrix") -> "Matrix | None":
        """One solution X of self @ X = b, or None when inconsistent (exact mode)."""
        self._check(b)
        if self.mode == FLOAT:
            x, *_ = np.linalg.lstsq(self._arr, b._arr, rcond=None)
            return Matrix(x)
        n = self.ncols
        k = b.ncols
        aug = [list(r) + list(s) for r, s in zip(self._rows, b._rows)]
        red, piv = _rref_rows(aug, n + k)
        if any(p >= n for p in piv):
            return None
        x = [[ZERO] * k for _ in range(n)]
        for i, p in enumerate(piv):
            for j in range(k):
                x[p][j] = red[i][n + j]
        return Matrix(x)

    def __repr__(self):
        if self.mode == FLOAT:
            return f"Matrix(float, {self._arr!r})"
        body = "; ".join(" ".join(str(x) for x in r) for r in self._rows)
        return f"Matrix([{body}])"

    def to_strings(self) -> list[list[str]]:
        return [[str(x) for x in r] for r in self.rows]


def bracket(a: Matrix, b: Matrix) -> Matrix:
    return a @ b - b @ a


def vector_is_zero(v, mode: str) -> bool:
    if mode == FLOAT:
        return float(np.max(np.abs(np.asarray(v)), initial=0.0)) <= svd_tol()
    return not any(v)


# ---------------------------------------------------------------------------


class Subspace:
    """Subspace of C^n; exact bases are kept in reduced echelon form (canonical)."""

    __slots__ = ("n", "mode", "_basis")

    def __init__(self, n: int, vectors: Iterable = (), mode: str = EXACT, _canonical=False):
        self.n = n
        self.mode = mode
        vectors = list(vectors)
        if mode == FLOAT:
            if _canonical:
                self._basis = vectors if isinstance(vectors, np.ndarray) else np.array(vectors, dtype=complex).reshape(-1, n)
            elif len(vectors) == 0:
                self._basis = np.zeros((0, n), dtype=complex)
            else:
                a = np.array([np.asarray(v, dtype=complex) for v in vectors]).reshape(len(vectors), n)
                self._basis = _float_rank_basis(a)
            return
        if _canonical:
            self._basis = tuple(vectors)
            return
        rows = [[_as_gq(x) for x in v] for v in vectors]
        for r in rows:
            if len(r) != n:
                raise DimensionMismatch(f"vector of length {len(r)} in C^{n}")
        red, _ = _rref_rows(rows, n) if rows else ([], [])
        self._basis = tuple(tuple(r) for r in red)

    @classmethod
    def zero(cls, n: int, mode: str = EXACT) -> "Subspace":
        return cls(n, [], mode)

    @classmethod
    def full(cls, n: int, mode: str = EXACT) -> "Subspace":
        if mode == FLOAT:
            return cls(n, np.eye(n, dtype=complex), FLOAT, _canonical=True)
        return cls(n, [tuple(ONE if i == j else ZERO for j in range(n)) for i in range(n)], EXACT, _canonical=True)

    @classmethod
    def coordinate(cls, n: int, idx: Iterable[int], mode: str = EXACT) -> "Subspace":
        vecs = []
        for i in idx:
            v = [0] * n
            v[i] = 1
            vecs.append(v)
        return cls(n, vecs, mode)

    @property
    def dim(self) -> int:
        return len(self._basis)

    @property
    def basis(self) -> list:
        return list(self._basis)

    def basis_matrix(self) -> Matrix:
        """n x dim matrix whose columns are the basis vectors."""
        return Matrix.from_columns(list(self._basis), self.n, self.mode)

    def _check(self, o: "Subspace"):
        if o.mode != self.mode:
            raise ModeMismatch("cannot combine exact and float subspaces implicitly")
        if o.n != self.n:
            raise DimensionMismatch(f"subspaces of C^{self.n} and C^{o.n}")

    def __add__(self, o: "Subspace") -> "Subspace":
        self._check(o)
        if not o.dim:
            return self
        if not self.dim:
            return o
        return Subspace(self.n, list(self._basis) + list(o._basis), self.mode)

    def annihilator(self) -> list:
        """Linear functionals (as coefficient vectors) vanishing on the subspace."""
        if self.mode == FLOAT:
            if not self.dim:
                return list(np.eye(self.n, dtype=complex))
            return list(_float_nullspace(np.array(self._basis), self.n))
        if not self.dim:
            return [tuple(ONE if i == j else ZERO for j in range(self.n)) for i in range(self.n)]
        return _exact_nullspace([list(r) for r in self._basis], self.n)

    def __and__(self, o: "Subspace") -> "Subspace":
        return self.intersect(o)

    def intersect(self, o: "Subspace") -> "Subspace":
        self._check(o)
        if not self.dim or not o.dim:
            return Subspace.zero(self.n, self.mode)
        if self.dim == self.n:
            return o
        if o.dim == self.n:
            return self
        eqs = self.annihilator() + o.annihilator()
        if self.mode == FLOAT:
            ns = _float_nullspace(np.array(eqs), self.n)
            return Subspace(self.n, ns, FLOAT) if len(ns) else Subspace.zero(self.n, FLOAT)
        return Subspace(self.n, _exact_nullspace([list(e) for e in eqs], self.n), EXACT)

    def conj(self) -> "Subspace":
        if self.mode == FLOAT:
            return Subspace(self.n, self._basis.conj(), FLOAT, _canonical=True)
        return Subspace(self.n, [[x.conj() for x in v] for v in self._basis], EXACT)

    def apply(self, a: Matrix) -> "Subspace":
        if a.mode != self.mode:
            raise ModeMismatch("operator and subspace modes differ")
        if not self.dim:
            return Subspace.zero(a.nrows, self.mode)
        return Subspace(a.nrows, [a.apply(v) for v in self._basis], self.mode)

    def preimage(self, a: Matrix) -> "Subspace":
        """{v : a v in self}."""
        ann = self.annihilator()
        if not ann:
            return Subspace.full(a.ncols, self.mode)
        if self.mode == FLOAT:
            rows = np.array(ann) @ a.arr
            ns = _float_nullspace(rows, a.ncols)
            return Subspace(a.ncols, ns, FLOAT) if len(ns) else Subspace.zero(a.ncols, FLOAT)
        phi = Matrix(ann)
        rows = (phi @ a).rows
        return Subspace(a.ncols, _exact_nullspace([list(r) for r in rows], a.ncols), EXACT)

    def contains_vector(self, v) -> bool:
        if self.mode == FLOAT:
            v = np.asarray(v, dtype=complex)
            if not self.dim:
                return float(np.linalg.norm(v)) <= svd_tol()
            proj = self._basis.T @ (self._basis.conj() @ v)
            return float(np.linalg.norm(v - proj)) <= svd_tol() * max(1.0, float(np.linalg.norm(v)))
        return all(not _as_gq(f_dot(phi, v)) for phi in self.annihilator())

    def __le__(self, o: "Subspace") -> bool:
        self._check(o)
        if self.dim > o.dim:
            return False
        return all(o.contains_vector(v) for v in self._basis)

    def __eq__(self, o) -> bool:
        if not isinstance(o, Subspace):
            return NotImplemented
        if o.n != self.n or o.mode != self.mode or o.dim != self.dim:
            return False
        if self.mode == FLOAT:
            return self <= o
        return self._basis == o._basis

    def __hash__(self):
        if self.mode == FLOAT:
            return hash((self.n, self.dim))
        return hash((self.n, self._basis))

    def is_real(self) -> bool:
        return self.conj() == self

    def to_float(self) -> "Subspace":
        if self.mode == FLOAT:
            return self
        return Subspace(self.n, [[complex(x) for x in v] for v in self._basis], FLOAT)

    def projector_onto(self, complement: "Subspace") -> Matrix:
        """Projection onto self along complement (must be complementary)."""
        self._check(complement)
        if self.dim + complement.dim != self.n:
            raise DimensionMismatch("subspaces are not complementary")
        b = Matrix.from_columns(list(self._basis) + list(complement._basis), self.n, self.mode)
        d = Matrix.diag([1] * self.dim + [0] * complement.dim, self.mode)
        return b @ d @ b.inverse()

    def __repr__(self):
        if self.mode == FLOAT:
            return f"Subspace(float, dim={self.dim} in C^{self.n})"
        vecs = ", ".join("(" + ", ".join(str(x) for x in v) + ")" for v in self._basis)
        return f"Subspace(<{vecs}> in C^{self.n})"


def f_dot(phi, v):
    s = ZERO
    for a, b in zip(phi, v):
        if a and b:
            s = s + a * b
    return s


def direct_sum_basis(spaces: Sequence[Subspace]) -> Matrix:
    """Columns = concatenated bases; raises if the sum is not direct and exhaustive."""
    if not spaces:
        raise DimensionMismatch("no subspaces")
    n = spaces[0].n
    cols = [v for s in spaces for v in s.basis]
    if len(cols) != n:
        raise DimensionMismatch(f"pieces have total dimension {len(cols)} in C^{n}")
    b = Matrix.from_columns(cols, n, spaces[0].mode)
    if b.rank() != n:
        raise DimensionMismatch("pieces are not in direct sum")
    return b


def grading_from_pieces(pieces: dict, n: int, mode: str = EXACT) -> Matrix:
    """Semisimple operator acting by the key value on each piece (keys: numbers)."""
    spaces = [s for s in pieces.values() if s.dim]
    b = direct_sum_basis(spaces)
    vals = [k for k, s in pieces.items() for _ in range(s.dim)]
    return b @ Matrix.diag(vals, mode) @ b.inverse()


# ---------------------------------------------------------------------------
# operator calculus


def nilpotent_exp(a: Matrix) -> Matrix:
    """exp of a nilpotent operator as the finite series sum_{k<n} a^k / k!."""
    n = a.nrows
    if not a.is_nilpotent():
        raise NotNilpotent("operator is not nilpotent")
    result = Matrix.identity(n, a.mode)
    term = Matrix.identity(n, a.mode)
    for k in range(1, n):
        term = (term @ a).scale(GQ(1, 0) / k if a.mode == EXACT else 1.0 / k)
        if term.is_zero() if a.mode == EXACT else not term.arr.any():
            break
        result = result + term
    return result


def unipotent_log(u: Matrix) -> Matrix:
    """log of a unipotent operator: sum_{k>=1} (-1)^{k+1} (u-1)^k / k."""
    n = u.nrows
    x = u - Matrix.identity(n, u.mode)
    if not x.is_nilpotent():
        raise NotNilpotent("operator is not unipotent")
    result = Matrix.zeros(n, n, u.mode)
    term = Matrix.identity(n, u.mode)
    for k in range(1, n):
        term = term @ x
        if term.is_zero() if u.mode == EXACT else not term.arr.any():
            break
        c = (GQ(1) if k % 2 else GQ(-1)) / k if u.mode == EXACT else ((1.0 if k % 2 else -1.0) / k)
        result = result + term.scale(c)
    return result


def conjugate_by(g: Matrix, a: Matrix, g_inv: Matrix | None = None) -> Matrix:
    """Ad(g) a = g a g^{-1}."""
    g_inv = g.inverse() if g_inv is None else g_inv
    return g @ a @ g_inv


def exp_ad(x: Matrix, a: Matrix) -> Matrix:
    """e^{x}.a = e^x a e^{-x} for nilpotent x."""
    return nilpotent_exp(x) @ a @ nilpotent_exp(-x)


def _spectral_bound(y: Matrix) -> int:
    if y.mode == FLOAT:
        return int(math.ceil(float(np.max(np.sum(np.abs(y.arr), axis=1), initial=0.0)))) + 1
    b = 0
    for r in y.rows:
        s = sum(abs(x.re) + abs(x.im) for x in r)
        b = max(b, s)
    return int(math.ceil(b))


def eigenspaces(y: Matrix) -> dict[int, Subspace]:
    """Eigenspaces of a semisimple operator with integer spectrum."""
    n = y.nrows
    if n != y.ncols:
        raise DimensionMismatch("eigenspaces of non-square matrix")
    if y.mode == FLOAT:
        vals = np.linalg.eigvals(y.arr)
        cand = sorted({int(round(v.real)) for v in vals})
        for v in vals:
            if abs(v - round(v.real)) > 1e-6:
                raise NotSemisimpleInteger(f"eigenvalue {v} is not an integer")
    else:
        bound = _spectral_bound(y)
        cand = range(-bound, bound + 1)
    out = {}
    total = 0
    ident = Matrix.identity(n, y.mode)
    for k in cand:
        ker = (y - ident.scale(k)).nullspace()
        if len(ker):
            out[k] = Subspace(n, ker, y.mode)
            total += out[k].dim
    if total != n:
        raise NotSemisimpleInteger("operator is not semisimple with integer spectrum")
    return dict(sorted(out.items()))


def eigen_projectors(y: Matrix) -> dict[int, Matrix]:
    spaces = eigenspaces(y)
    b = direct_sum_basis(list(spaces.values()))
    binv = b.inverse()
    out = {}
    pos = 0
    n = y.nrows
    for k, s in spaces.items():
        d = Matrix.diag([1 if pos <= i < pos + s.dim else 0 for i in range(n)], y.mode)
        out[k] = b @ d @ binv
        pos += s.dim
    return out


def ad_components(a: Matrix, y: Matrix, projectors: dict[int, Matrix] | None = None) -> dict[int, Matrix]:
    """All ad-Y eigencomponents of a: {k: A_k} with [Y, A_k] = k A_k."""
    projectors = eigen_projectors(y) if projectors is None else projectors
    out: dict[int, Matrix] = {}
    pa = {k: p @ a for k, p in projectors.items()}
    for ka, left in pa.items():
        for kb, pb in projectors.items():
            term = left @ pb
            if term.is_zero():
                continue
            k = ka - kb
            out[k] = out[k] + term if k in out else term
    return dict(sorted(out.items()))


def component_of(a: Matrix, y: Matrix, k: int, projectors: dict[int, Matrix] | None = None) -> Matrix:
    """The ad-Y eigencomponent of a with eigenvalue k."""
    comps = ad_components(a, y, projectors)
    return comps.get(k, Matrix.zeros(a.nrows, a.ncols, a.mode))


def joint_eigenspaces(ops: Sequence[Matrix]) -> dict[tuple, Subspace]:
    """Joint eigenspaces of commuting integer-semisimple operators."""
    n = ops[0].nrows
    mode = ops[0].mode
    current: dict[tuple, Subspace] = {(): Subspace.full(n, mode)}
    for y in ops:
        es = eigenspaces(y)
        nxt = {}
        for key, sp in current.items():
            for k, e in es.items():
                inter = sp & e
                if inter.dim:
                    nxt[key + (k,)] = inter
        current = nxt
    total = sum(s.dim for s in current.values())
    if total != n:
        raise NotSemisimpleInteger("operators do not admit a joint eigenspace decomposition")
    return current
