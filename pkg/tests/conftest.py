import json
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

from anf.model import Commodity, Edge, Instance
from anf.oracle import regression_suite

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

ROOT = Path(__file__).resolve().parent.parent
DATA = ROOT / "data"

# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def expected():
    return json.loads((Path(__file__).parent / "expected.json").read_text())


@pytest.fixture(scope="session")
def suite():
    return regression_suite()


def line_instance(cap=5.0, demand=3.0, weight=1.0):
    return Instance(("s", "t"), (Edge("s", "t", cap),), (Commodity("s", "t", demand, weight),), "line")


def shared_edge(weights=(1.0, 1.0), cap=4.0, demand=4.0):
    comms = tuple(Commodity("s", "t", demand, w) for w in weights)
    return Instance(("s", "t"), (Edge("s", "t", cap),), comms, "shared")


def ring(n=10, cap=10.0, commodities=()):
    """Bidirected ring on n nodes: m = 2n edges."""
    nodes = tuple(f"r{j}" for j in range(n))
    edges = []
    for j in range(n):
        a, b = nodes[j], nodes[(j + 1) % n]
        edges += [Edge(a, b, cap), Edge(b, a, cap)]
    return Instance(nodes, tuple(edges), tuple(commodities), "ring")


def _tiny(seed):
    import numpy as np

    from anf.oracle import random_tiny_instance

    return random_tiny_instance(np.random.default_rng(seed), name=f"h{seed}")


def tiny_instances():
    """Hypothesis strategy over the same generator as the regression suite."""
    from hypothesis import strategies as st

    return st.integers(0, 2**32 - 1).map(_tiny)
