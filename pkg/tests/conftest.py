from pathlib import Path

import pytest

from waysim.config import load_config

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"


@pytest.fixture
def two_user_config():
    return load_config(CONFIG_DIR / "two_users_150.json")


@pytest.fixture
def three_user_config():
    return load_config(CONFIG_DIR / "three_users_100.json")


@pytest.fixture
def three_type_config():
    return load_config(CONFIG_DIR / "three_types_150.json")


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
