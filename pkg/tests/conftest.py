from __future__ import annotations

import pytest

from opprog import default_constants, default_lexicon, default_registry


@pytest.fixture(scope="session")
def registry():
    return default_registry()


@pytest.fixture(scope="session")
def consts():
    return default_constants()


@pytest.fixture(scope="session")
def lexicon():
    return default_lexicon()


ARITH_OPS = ("add", "subtract", "multiply", "divide")
