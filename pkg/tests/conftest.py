import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from hodgelim.scenario_io import load  # noqa: E402

FIXTURES = Path(__file__).resolve().parent.parent / "src" / "hodgelim" / "fixtures"

ACCEPTANCE: dict = {}


def record(criterion: int, ok: bool, detail: str) -> None:
    ACCEPTANCE[criterion] = (ok, detail)


def fixture_path(name: str) -> Path:
    return FIXTURES / name


def scenario(name: str):
    return load(FIXTURES / f"{name}.json")


def shipped_scenarios() -> list:
    return sorted(p.stem for p in FIXTURES.glob("*.json") if not p.stem.endswith(("_sequence", "_candidate")))


@pytest.fixture
def fx():
    return scenario


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
