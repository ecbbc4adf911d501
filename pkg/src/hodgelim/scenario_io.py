"""Scenario files: JSON with exact scalar strings, canonical output, located errors."""
from __future__ import annotations

import json
import re
from json.decoder import JSONArray, JSONObject, scanstring
from json.scanner import py_make_scanner
from pathlib import Path

from .errors import ScalarParseError, ScenarioFormatError
from .filtrations import DecreasingFiltration, IncreasingFiltration
from .linalg import EXACT, Matrix, Subspace
from .orbits import GammaTerm, OrbitScenario, Schedule, SL2SequenceSpec
from .scalars import GQ, format_scalar, parse_scalar

SCHEMA_VERSION = 1


class _Located(str):
    """A decoded JSON string remembering the offset of its opening quote."""

    pos: int


class _Located_list(list):
    pos: int


class _Decoder(json.JSONDecoder):
    def __init__(self):
        super().__init__()

        def parse_string(s, end, strict=True):
            val, new_end = scanstring(s, end, strict)
            out = _Located(val)
            out.pos = end - 1
            return out, new_end

        def parse_array(s_and_end, scan_once):
            s, end = s_and_end
            val, new_end = JSONArray(s_and_end, scan_once)
            out = _Located_list(val)
            out.pos = end - 1
            return out, new_end

        self.parse_string = parse_string
        self.parse_array = parse_array
        self.parse_object = JSONObject
        self.memo = {}
        self.scan_once = py_make_scanner(self)


def _line_col(doc: str, pos: int) -> tuple[int, int]:
    line = doc.count("\n", 0, pos) + 1
    col = pos - (doc.rfind("\n", 0, pos) + 1) + 1
    return line, col


class _Reader:
    def __init__(self, doc: str):
        self.doc = doc

    def fail(self, msg: str, node=None):
        pos = getattr(node, "pos", None)
        if pos is None:
            raise ScenarioFormatError(msg)
        raise ScenarioFormatError(msg, *_line_col(self.doc, pos))

    def scalar(self, node) -> GQ:
        if isinstance(node, bool):
            self.fail("boolean where a scalar was expected")
        if isinstance(node, int):
            return GQ(node)
        if not isinstance(node, str):
            self.fail(f"scalars must be strings or integers, got {type(node).__name__}", node)
        try:
            return parse_scalar(node)
        except ScalarParseError as e:
            self.fail(str(e), node)

    def vector(self, node, n: int) -> list:
        if not isinstance(node, list) or len(node) != n:
            self.fail(f"expected a vector of length {n}", node)
        return [self.scalar(x) for x in node]

    def matrix(self, node, n: int, m: int | None = None) -> Matrix:
        m = n if m is None else m
        if not isinstance(node, list) or len(node) != n:
            self.fail(f"expected {n} matrix rows", node)
        return Matrix([self.vector(row, m) for row in node])

    def steps(self, node, n: int, what: str) -> dict:
        if not isinstance(node, list) or not node:
            self.fail(f"{what} must be a nonempty list of [index, generators]", node)
        out = {}
        for item in node:
            if not isinstance(item, list) or len(item) != 2 or not isinstance(item[0], int) or not isinstance(item[1], list):
                self.fail(f"{what} entries are [index, [generator vectors]]", item)
            out[item[0]] = Subspace(n, [self.vector(v, n) for v in item[1]], EXACT)
        return out


def loads(text: str) -> OrbitScenario:
    try:
        data = _Decoder().decode(text)
    except json.JSONDecodeError as e:
        raise ScenarioFormatError(e.msg, e.lineno, e.colno) from None
    rd = _Reader(text)
    if not isinstance(data, dict):
        rd.fail("top level must be an object")
    ver = data.get("schema_version")
    if ver != SCHEMA_VERSION:
        rd.fail(f"unsupported schema_version {ver!r} (expected {SCHEMA_VERSION})")
    n = data.get("dim")
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        rd.fail("dim must be a positive integer")
    for key in ("W", "F", "N"):
        if key not in data:
            rd.fail(f"missing required key {key!r}")
    try:
        W = IncreasingFiltration(n, rd.steps(data["W"], n, "W"), EXACT)
        F = DecreasingFiltration(n, rd.steps(data["F"], n, "F"), EXACT)
    except ScenarioFormatError:
        raise
    except Exception as e:  # nesting violations and similar
        rd.fail(f"invalid filtration: {e}")
    if not isinstance(data["N"], list):
        rd.fail("N must be a list of matrices", data["N"])
    Ns = [rd.matrix(x, n) for x in data["N"]]
    r = len(Ns)
    gamma = []
    for g in data.get("gamma", []):
        if not isinstance(g, dict) or set(g) != {"exps", "matrix"}:
            rd.fail("gamma entries are objects with keys exps and matrix", g)
        ex = g["exps"]
        if not isinstance(ex, list) or len(ex) != r or not all(isinstance(e, int) and e >= 0 for e in ex):
            rd.fail(f"exps must be {r} nonnegative integers", ex)
        gamma.append(GammaTerm(tuple(ex), rd.matrix(g["matrix"], n)))
    lattice = rd.matrix(data["lattice"], n) if data.get("lattice") is not None else None
    pol = None
    if data.get("polarizations") is not None:
        pol = {}
        for item in data["polarizations"]:
            if not isinstance(item, list) or len(item) != 2 or not isinstance(item[0], int):
                rd.fail("polarizations entries are [weight, matrix]", item)
            pol[item[0]] = rd.matrix(item[1], n)
    K = data.get("K_bound", "1")
    meta = data.get("metadata", {})
    if not isinstance(meta, dict):
        rd.fail("metadata must be an object")
    return OrbitScenario(
        dim=n,
        W=W,
        Finf=F,
        Ns=Ns,
        gamma=gamma,
        lattice=lattice,
        polarizations=pol,
        K_bound=float(complex(rd.scalar(K)).real),
        name=str(data.get("name", "")),
        metadata=_plain(meta),
    )


def _plain(x):
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, list):
        return [_plain(v) for v in x]
    if isinstance(x, str):
        return str(x)
    return x


def load(path) -> OrbitScenario:
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise ScenarioFormatError(f"cannot read {path}: {e.strerror}") from None
    return loads(text)


def _mat(a: Matrix) -> list:
    return [[format_scalar(x) for x in row] for row in a.rows]


def _vec(v) -> list:
    return [format_scalar(GQ.coerce(x)) for x in v]


def _filtration_steps(f) -> list:
    return [[k, [_vec(v) for v in sp.basis]] for k, sp in sorted(f.steps().items())]


def to_data(s: OrbitScenario) -> dict:
    out: dict = {"schema_version": SCHEMA_VERSION, "name": s.name, "dim": s.dim}
    out["W"] = _filtration_steps(s.W)
    out["F"] = _filtration_steps(s.Finf)
    out["N"] = [_mat(N) for N in s.Ns]
    out["gamma"] = [{"exps": list(t.exps), "matrix": _mat(t.coeff)} for t in s.gamma]
    if s.lattice is not None:
        out["lattice"] = _mat(s.lattice)
    if s.polarizations:
        out["polarizations"] = [[k, _mat(q)] for k, q in sorted(s.polarizations.items())]
    out["K_bound"] = format_scalar(GQ.coerce(_fraction(s.K_bound)))
    out["metadata"] = s.metadata
    return out


def _fraction(x: float):
    from fractions import Fraction

    return Fraction(x).limit_denominator(10**9)


_FLAT_LIST = re.compile(r"\[\s*((?:\"[^\"\n]*\"|-?\d+)(?:,\s*(?:\"[^\"\n]*\"|-?\d+))*)\s*\]")


def dumps(s: OrbitScenario) -> str:
    """Canonical text: two-space indentation, flat scalar lists on one line."""
    text = json.dumps(to_data(s), indent=2, sort_keys=False, ensure_ascii=False)
    text = _FLAT_LIST.sub(lambda m: "[" + ", ".join(p.strip() for p in m.group(1).split(",")) + "]", text)
    return text + "\n"


def save(s: OrbitScenario, path) -> None:
    Path(path).write_text(dumps(s))


# ---------------------------------------------------------------------------
# sequence specifications and grids


def _schedule(node, rd: _Reader) -> Schedule:
    if not isinstance(node, dict) or "kind" not in node:
        rd.fail("schedules are objects with a kind", node)
    kind = node["kind"]
    if kind not in ("const", "power", "exp", "decay", "table"):
        rd.fail(f"unknown schedule kind {kind!r}", kind)

    def num(key, default):
        v = node.get(key, default)
        if isinstance(v, str):
            return float(complex(rd.scalar(v)).real)
        if not isinstance(v, (int, float)) or isinstance(v, bool):
            rd.fail(f"schedule field {key} must be a number", v)
        return float(v)

    table = tuple(num_i for num_i in (float(x) for x in node.get("table", [])))
    return Schedule(kind, num("a", 1.0), num("b", 0.0), num("c", 0.0), table)


def sequence_loads(text: str, r: int) -> SL2SequenceSpec:
    """{"T": matrix (default identity), "v": [schedule], "b": [...], "x": [...]}."""
    try:
        data = _Decoder().decode(text)
    except json.JSONDecodeError as e:
        raise ScenarioFormatError(e.msg, e.lineno, e.colno) from None
    rd = _Reader(text)
    if not isinstance(data, dict) or "v" not in data:
        rd.fail("sequence spec must be an object with key v")
    v = [_schedule(x, rd) for x in data["v"]]
    d = len(v)
    T = rd.matrix(data["T"], r, d) if "T" in data else Matrix.identity(r)
    if T.ncols != d:
        rd.fail(f"T has {T.ncols} columns but v has {d} schedules")
    b = [_schedule(x, rd) for x in data["b"]] if "b" in data else None
    x = [_schedule(y, rd) for y in data["x"]] if "x" in data else None
    for name, lst in (("b", b), ("x", x)):
        if lst is not None and len(lst) != r:
            rd.fail(f"{name} needs {r} schedules")
    return SL2SequenceSpec(T=T, v=v, b=b, x=x)


def sequence_load(path, r: int) -> SL2SequenceSpec:
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise ScenarioFormatError(f"cannot read {path}: {e.strerror}") from None
    return sequence_loads(text, r)


def parse_grid(text: str, r: int):
    """"lo:hi:n" for every axis, or one such triple per axis separated by commas."""
    from .normal_functions import SGrid
    import numpy as np

    parts = [p for p in text.split(",") if p.strip()]
    if len(parts) == 1:
        parts = parts * r
    if len(parts) != r:
        raise ScenarioFormatError(f"grid needs 1 or {r} axis specs, got {len(parts)}")
    axes = []
    for p in parts:
        try:
            lo, hi, n = p.split(":")
            lo_f, hi_f, n_i = float(lo), float(hi), int(n)
        except ValueError:
            raise ScenarioFormatError(f"malformed grid axis {p!r}; expected lo:hi:n") from None
        if n_i < 1 or lo_f <= 0 or hi_f >= 1 or lo_f > hi_f:
            raise ScenarioFormatError(f"grid axis {p!r} must satisfy 0 < lo <= hi < 1 and n >= 1")
        axes.append([float(v) for v in np.linspace(lo_f, hi_f, n_i)])
    return SGrid(axes=axes)
