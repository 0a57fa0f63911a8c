from pathlib import Path

import pytest

from semweave.labeling import load_predictions
from semweave.model import load_model
from semweave.ontology import load_ontology

FIXTURES = Path(__file__).parent / "fixtures"
MUSEUM = FIXTURES / "museum"


@pytest.fixture(scope="session")
def museum_ontology():
    return load_ontology([MUSEUM / "ontology" / "museum.json"])


@pytest.fixture(scope="session")
def known_models():
    return [load_model(MUSEUM / "models" / "dma.json"), load_model(MUSEUM / "models" / "npg.json")]


@pytest.fixture(scope="session")
def dia_gold():
    return load_model(MUSEUM / "models" / "dia.json")


@pytest.fixture(scope="session")
def dia_types():
    return load_predictions(MUSEUM / "dia-types.json")


@pytest.fixture
def known_dir(tmp_path):
    d = tmp_path / "known"
    d.mkdir()
    for name in ("dma", "npg"):
        (d / f"{name}.json").write_text((MUSEUM / "models" / f"{name}.json").read_text())
    return d


# one line per acceptance criterion, filled in by test_acceptance
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
