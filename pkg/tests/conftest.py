from __future__ import annotations

from pathlib import Path

import pytest

from analogue.php_parser import parse_source

FIXTURES = Path(__file__).parent / "fixtures"


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    import genutil
    if genutil.ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in genutil.ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


def load_fixture(name: str):
    text = (FIXTURES / name).read_text(encoding="utf-8")
    return parse_source(text, path=name), text


@pytest.fixture(scope="session")
def tutorial_books():
    return load_fixture("tutorial_books.php")


@pytest.fixture(scope="session")
def tutorial_search():
    return load_fixture("tutorial_search.php")


@pytest.fixture(scope="session")
def clone_units():
    return {name: load_fixture("clone_%s.php" % name)
            for name in ("users", "products", "flights")}
