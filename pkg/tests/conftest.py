import numpy as np
import pytest

from weibayes.cli import _load_table1


@pytest.fixture(scope="session")
def table1():
    """Bundled strength data: twenty subgroups of five."""
    return _load_table1()


@pytest.fixture(scope="session")
def train(table1):
    return table1[:10]


@pytest.fixture(scope="session")
def test_rows(table1):
    return table1[10:]
