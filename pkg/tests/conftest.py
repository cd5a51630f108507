import sys

import numpy as np
import pytest

from bnsens.generate import random_network
from bnsens.model import BayesianNetwork


def make_chain() -> BayesianNetwork:
    """A -> B with P(A=1)=0.6, P(B=1|A=1)=0.9, P(B=1|A=0)=0.2."""
    return BayesianNetwork(
        names=("A", "B"),
        states=(("0", "1"), ("0", "1")),
        parents=((), (0,)),
        cpts=([0.4, 0.6], [[0.8, 0.2], [0.1, 0.9]]),
        name="chain",
    )


CHAIN_BIF = """\
network chain {
}
variable A {
  type discrete [ 2 ] { 0, 1 };
}
variable B {
  type discrete [ 2 ] { 0, 1 };
}
probability ( A ) {
  table 0.4, 0.6;
}
probability ( B | A ) {
  (0) 0.8, 0.2;
  (1) 0.1, 0.9;
}
"""


@pytest.fixture
def chain() -> BayesianNetwork:
    return make_chain()


@pytest.fixture
def chain_bif(tmp_path):
    path = tmp_path / "chain.bif"
    path.write_text(CHAIN_BIF)
    return path


def small_networks(count: int, seed: int = 0, **kw):
    """Random networks with 4-10 nodes and 2-3 states."""
    rng = np.random.default_rng(seed)
    for _ in range(count):
        yield random_network(int(rng.integers(4, 11)), rng, **kw)


def random_query_for(bn, rng, evidence=True):
    from bnsens.oneway import Query

    vs = rng.choice(bn.n_variables, size=2, replace=False)
    t = int(vs[0])
    ev = {}
    if evidence:
        e = int(vs[1])
        ev[e] = int(rng.integers(bn.cardinality(e)))
    return Query((t, int(rng.integers(bn.cardinality(t)))), ev)


def pytest_terminal_summary(terminalreporter):
    acceptance = sys.modules.get("test_acceptance")
    results = getattr(acceptance, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for number in sorted(results):
            terminalreporter.write_line(results[number])
