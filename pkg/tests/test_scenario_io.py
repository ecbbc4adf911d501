from pathlib import Path

import pytest

from conftest import fixture_path, shipped_scenarios
from hodgelim.errors import ScenarioFormatError
from hodgelim.linalg import Matrix
from hodgelim.scalars import GQ
from hodgelim.scenario_io import dumps, load, loads, parse_grid, save, sequence_loads


@pytest.mark.parametrize("name", shipped_scenarios())
def test_round_trip_is_byte_identical(name):
    path = fixture_path(name + ".json")
    text = Path(path).read_text()
    s = load(path)
    assert dumps(s) == text
    assert dumps(loads(dumps(s))) == text


def test_save_and_reload(tmp_path):
    s = load(fixture_path("nf_two_variable.json"))
    out = tmp_path / "copy.json"
    save(s, out)
    t = load(out)
    assert t.Ns == s.Ns and t.W == s.W and t.Finf == s.Finf
    assert [(g.exps, g.coeff) for g in t.gamma] == [(g.exps, g.coeff) for g in s.gamma]


def _text(name):
    return Path(fixture_path(name)).read_text()


def test_malformed_scalar_is_located():
    text = _text("sl2_pure.json")
    lines = text.splitlines(keepends=True)
    k = next(i for i, ln in enumerate(lines) if '"1"' in ln and i > 3)
    col = lines[k].index('"1"') + 1
    lines[k] = lines[k].replace('"1"', '"1+*i"', 1)
    with pytest.raises(ScenarioFormatError) as exc:
        loads("".join(lines))
    assert (exc.value.line, exc.value.col) == (k + 1, col)
    assert f"line {k + 1}, column {col}" in str(exc.value)


def test_json_syntax_error_is_located():
    with pytest.raises(ScenarioFormatError) as exc:
        loads('{\n  "dim": 2,\n  oops\n}')
    assert exc.value.line == 3


def test_schema_version_checked():
    text = _text("sl2_pure.json").replace('"schema_version": 1', '"schema_version": 2')
    with pytest.raises(ScenarioFormatError, match="schema_version"):
        loads(text)


def test_wrong_vector_length():
    text = _text("sl2_pure.json").replace('"dim": 2', '"dim": 3')
    with pytest.raises(ScenarioFormatError):
        loads(text)


def test_missing_file():
    with pytest.raises(ScenarioFormatError, match="cannot read"):
        load("/nonexistent/scenario.json")


def test_sequence_spec():
    spec = sequence_loads('{"v": [{"kind": "power", "a": 1, "b": 2}, {"kind": "power", "a": "1/2", "b": 1}]}', 2)
    assert spec.T == Matrix.identity(2)
    assert list(spec.y(4)) == [16.0, 2.0]
    with pytest.raises(ScenarioFormatError, match="unknown schedule kind"):
        sequence_loads('{"v": [{"kind": "cubic"}]}', 1)
    with pytest.raises(ScenarioFormatError, match="vector of length 1"):
        sequence_loads('{"T": [["1", "0"]], "v": [{"kind": "const", "a": 2}]}', 1)
    with pytest.raises(ScenarioFormatError, match="b needs 2"):
        sequence_loads('{"v": [{"kind": "const"}, {"kind": "const"}], "b": []}', 2)


def test_parse_grid():
    g = parse_grid("0.1:0.5:5", 2)
    assert len(g.axes) == 2 and g.axes[0] == pytest.approx([0.1, 0.2, 0.3, 0.4, 0.5])
    g = parse_grid("0.1:0.2:2,0.3:0.3:1", 2)
    assert g.axes[1] == [0.3]
    for bad in ("0.1:0.5", "0:0.5:3", "0.1:1:3", "0.5:0.1:3", "a:b:c"):
        with pytest.raises(ScenarioFormatError):
            parse_grid(bad, 1)
    with pytest.raises(ScenarioFormatError):
        parse_grid("0.1:0.2:2,0.1:0.2:2", 3)


def test_scalars_load_exact():
    s = loads(_text("sl2_pure.json"))
    assert all(isinstance(x, GQ) for row in s.Ns[0].rows for x in row)
