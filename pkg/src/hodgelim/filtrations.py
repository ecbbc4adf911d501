"""Increasing (weight-type) and decreasing (Hodge-type) filtrations of C^n."""
from __future__ import annotations

from typing import Iterable, Mapping

from .errors import DimensionMismatch
from .linalg import EXACT, FLOAT, Matrix, Subspace


def _coerce_space(n: int, value, mode: str) -> Subspace:
    if isinstance(value, Subspace):
        if value.n != n:
            raise DimensionMismatch(f"step lives in C^{value.n}, expected C^{n}")
        return value if value.mode == mode else (value.to_float() if mode == FLOAT else value)
    return Subspace(n, value, mode)


class _Filtration:
    """Shared storage: canonical steps on a finite index window [lo, hi]."""

    __slots__ = ("n", "mode", "_steps", "lo", "hi")
    decreasing = False

    def __init__(self, n: int, steps: Mapping[int, object], mode: str | None = None):
        self.n = n
        if mode is None:
            modes = {s.mode for s in steps.values() if isinstance(s, Subspace)}
            mode = FLOAT if FLOAT in modes else EXACT
        self.mode = mode
        given = {int(k): _coerce_space(n, v, mode) for k, v in steps.items()}
        self._canonicalize(given)

    def _canonicalize(self, given: dict[int, Subspace]):
        n, mode = self.n, self.mode
        if not given:
            self._steps = {0: Subspace.full(n, mode)} if not self.decreasing else {0: Subspace.full(n, mode)}
            self.lo = self.hi = 0
            self._finish()
            return
        keys = sorted(given)
        lo, hi = keys[0] - 1, keys[-1] + 1
        full = {}
        for k in range(lo, hi + 1):
            full[k] = self._lookup_given(given, keys, k)
        self._steps = full
        self.lo, self.hi = lo, hi
        self._validate_nested()
        self._finish()

    def _lookup_given(self, given, keys, k):
        raise NotImplementedError

    def _finish(self):
        # trim redundant boundary entries so equal filtrations compare equal
        ks = sorted(self._steps)
        zero_like = self._is_bottom
        full_like = self._is_top
        lo_keys = [k for k in ks]
        if self.decreasing:
            while len(lo_keys) > 1 and full_like(self._steps[lo_keys[1]]):
                del self._steps[lo_keys[0]]
                lo_keys.pop(0)
            while len(lo_keys) > 1 and zero_like(self._steps[lo_keys[-2]]):
                del self._steps[lo_keys[-1]]
                lo_keys.pop()
        else:
            while len(lo_keys) > 1 and zero_like(self._steps[lo_keys[1]]):
                del self._steps[lo_keys[0]]
                lo_keys.pop(0)
            while len(lo_keys) > 1 and full_like(self._steps[lo_keys[-2]]):
                del self._steps[lo_keys[-1]]
                lo_keys.pop()
        self.lo, self.hi = lo_keys[0], lo_keys[-1]

    def _is_bottom(self, s: Subspace) -> bool:
        return s.dim == 0

    def _is_top(self, s: Subspace) -> bool:
        return s.dim == self.n

    def _validate_nested(self):
        ks = sorted(self._steps)
        for a, b in zip(ks, ks[1:]):
            small, big = (self._steps[b], self._steps[a]) if self.decreasing else (self._steps[a], self._steps[b])
            if not small <= big:
                raise DimensionMismatch(f"filtration steps are not nested at index {a}/{b}")

    def __getitem__(self, k: int) -> Subspace:
        raise NotImplementedError

    def steps(self) -> dict[int, Subspace]:
        return dict(self._steps)

    def indices(self) -> range:
        return range(self.lo, self.hi + 1)

    def __eq__(self, o) -> bool:
        if type(o) is not type(self):
            return NotImplemented
        if o.n != self.n or o.mode != self.mode:
            return False
        ks = range(min(self.lo, o.lo), max(self.hi, o.hi) + 1)
        return all(self[k] == o[k] for k in ks)

    def __hash__(self):
        return hash((type(self).__name__, self.n, self.lo, self.hi))

    def _rebuild(self, fn) -> "_Filtration":
        return type(self)(self.n, {k: fn(s) for k, s in self._steps.items()}, self.mode)

    def apply(self, g: Matrix):
        """g.F: image of every step under the invertible operator g."""
        return self._rebuild(lambda s: s.apply(g))

    def conj(self):
        return self._rebuild(lambda s: s.conj())

    def to_float(self):
        if self.mode == FLOAT:
            return self
        return type(self)(self.n, {k: s.to_float() for k, s in self._steps.items()}, FLOAT)

    def is_real(self) -> bool:
        return all(s.is_real() for s in self._steps.values())

    def preserved_by(self, a: Matrix, shift: int = 0) -> bool:
        """a maps each step into the step shifted by `shift` (index units)."""
        for k in range(self.lo - abs(shift) - 1, self.hi + abs(shift) + 2):
            if not self[k].apply(a) <= self[k + shift]:
                return False
        return True


class DecreasingFiltration(_Filtration):
    """F^p, with F^{p+1} contained in F^p; F^p = V below and 0 above the window."""

    decreasing = True

    def _lookup_given(self, given, keys, k):
        if k < keys[0]:
            return Subspace.full(self.n, self.mode)
        if k > keys[-1]:
            return Subspace.zero(self.n, self.mode)
        for q in keys:
            if q >= k:
                return given[q]
        raise AssertionError

    def __getitem__(self, p: int) -> Subspace:
        if p < self.lo:
            return Subspace.full(self.n, self.mode)
        if p > self.hi:
            return Subspace.zero(self.n, self.mode)
        return self._steps[p]

    def jumps(self) -> list[int]:
        return [p for p in range(self.lo, self.hi + 1) if self[p].dim > self[p + 1].dim]

    def __repr__(self):
        body = ", ".join(f"F^{p}: dim {self[p].dim}" for p in self.indices())
        return f"DecreasingFiltration({body})"


class IncreasingFiltration(_Filtration):
    """W_k, with W_{k-1} contained in W_k; W_k = 0 below and V above the window."""

    decreasing = False

    def _lookup_given(self, given, keys, k):
        if k < keys[0]:
            return Subspace.zero(self.n, self.mode)
        if k > keys[-1]:
            return Subspace.full(self.n, self.mode)
        best = None
        for q in keys:
            if q <= k:
                best = given[q]
        return best

    def __getitem__(self, k: int) -> Subspace:
        if k < self.lo:
            return Subspace.zero(self.n, self.mode)
        if k > self.hi:
            return Subspace.full(self.n, self.mode)
        return self._steps[k]

    def weights(self) -> list[int]:
        """Indices k with Gr_k nonzero."""
        return [k for k in range(self.lo, self.hi + 1) if self[k].dim > self[k - 1].dim]

    def gr_dim(self, k: int) -> int:
        return self[k].dim - self[k - 1].dim

    def defined_over_reals(self) -> bool:
        return self.is_real()

    def shift(self, s: int) -> "IncreasingFiltration":
        """W[s]_k = W_{k+s}."""
        return IncreasingFiltration(self.n, {k - s: v for k, v in self._steps.items()}, self.mode)

    def __repr__(self):
        body = ", ".join(f"W_{k}: dim {self[k].dim}" for k in self.indices())
        return f"IncreasingFiltration({body})"


def filtration_from_grading(y: Matrix, decreasing: bool = False):
    """Filtration by eigenvalues of an integer-semisimple y."""
    from .linalg import eigenspaces

    es = eigenspaces(y)
    steps = {}
    for k in es:
        parts = [s for j, s in es.items() if (j >= k if decreasing else j <= k)]
        acc = parts[0]
        for s in parts[1:]:
            acc = acc + s
        steps[k] = acc
    cls = DecreasingFiltration if decreasing else IncreasingFiltration
    return cls(y.nrows, steps, y.mode)


def grades(y: Matrix, w: IncreasingFiltration) -> bool:
    """y is a grading of w: W_k = W_{k-1} + E_k(y) (direct) for all k."""
    from .linalg import eigenspaces
    from .errors import NotSemisimpleInteger

    try:
        es = eigenspaces(y)
    except NotSemisimpleInteger:
        return False
    lo = min([w.lo] + list(es))
    hi = max([w.hi] + list(es))
    for k in range(lo - 1, hi + 2):
        e = es.get(k, Subspace.zero(w.n, w.mode))
        if (w[k - 1] & e).dim:
            return False
        if w[k - 1] + e != w[k]:
            return False
    return True


def spaces_sum(spaces: Iterable[Subspace], n: int, mode: str) -> Subspace:
    acc = Subspace.zero(n, mode)
    for s in spaces:
        acc = acc + s
    return acc
