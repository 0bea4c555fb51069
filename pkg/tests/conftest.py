from __future__ import annotations

from pathlib import Path

import pytest

from lexforge.pipeline import Pipeline
from lexforge.validator import ValidationResources, read_wordlist
from lexforge.workspace import Workspace

HERE = Path(__file__).parent
GOLDEN = HERE / "golden"
FIXTURES = HERE / "fixtures"

# criterion name -> "PASS" | "FAIL", filled by tests/test_acceptance.py
ACCEPTANCE: dict[str, str] = {}


@pytest.fixture(scope="session")
def base_ws() -> Workspace:
    return Workspace.load()


@pytest.fixture
def ws() -> Workspace:
    """A fresh workspace; tests may mutate its lexicon and banks."""
    return Workspace.load()


@pytest.fixture
def comprar_ws(ws) -> Workspace:
    return ws.subset(["comprar"])


@pytest.fixture(scope="session")
def fig5_words() -> list[str]:
    return read_wordlist(FIXTURES / "figure5_dictionary.txt")


@pytest.fixture
def fig5_res(fig5_words) -> ValidationResources:
    return ValidationResources({"figure5": fig5_words})


@pytest.fixture
def comprar_app(comprar_ws, fig5_res) -> Pipeline:
    return Pipeline(comprar_ws, fig5_res)


def read_rows(path: Path) -> list[tuple[str, str, tuple[str, ...]]]:
    rows = []
    for line in path.read_text(encoding="utf-8").splitlines():
        form, pos, labels = line.split("\t")
        rows.append((form, pos, tuple(labels.split())))
    return rows


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, verdict in ACCEPTANCE.items():
        terminalreporter.write_line(f"{verdict}  {name}")
