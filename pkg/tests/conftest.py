import sys
from pathlib import Path

import pytest

from pipesynth.grammar import load_grammar

FIXTURES = Path(__file__).parent / "fixtures"
GRAMMARS = Path(__file__).parent.parent / "src" / "pipesynth" / "grammars"

LOOPBACK = [sys.executable, str(FIXTURES / "loopback_executor.py")]


@pytest.fixture(scope="session")
def toy_grammar():
    return load_grammar(FIXTURES / "toy.grammar")


@pytest.fixture(scope="session")
def benchmark_grammar():
    return load_grammar(GRAMMARS / "benchmark.grammar")


@pytest.fixture(scope="session")
def unary_grammar():
    return load_grammar(FIXTURES / "unary.grammar")
