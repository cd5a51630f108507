"""Random Bayesian networks for tests and benchmarks."""

from __future__ import annotations

import numpy as np

from .model import BayesianNetwork


def random_network(
    n_nodes: int,
    rng: np.random.Generator | int | None = None,
    *,
    states: tuple[int, int] = (2, 3),
    max_parents: int = 3,
    window: int | None = None,
    edge_prob: float = 0.5,
    alpha: float = 1.0,
    name: str = "random",
) -> BayesianNetwork:
    """DAG over ``n_nodes`` variables with Dirichlet(``alpha``) CPT rows.

    Node ``v`` draws up to ``max_parents`` parents among nodes ``v-window .. v-1``
    (all earlier nodes when ``window`` is None); a small window keeps the
    treewidth low for large networks.
    """
    rng = np.random.default_rng(rng)
    cards = [int(rng.integers(states[0], states[1] + 1)) for _ in range(n_nodes)]
    parents = []
    for v in range(n_nodes):
        lo = 0 if window is None else max(0, v - window)
        pool = np.arange(lo, v)
        chosen = [int(u) for u in pool if rng.random() < edge_prob]
        if len(chosen) > max_parents:
            chosen = sorted(int(u) for u in rng.choice(chosen, size=max_parents, replace=False))
        parents.append(tuple(chosen))
    cpts = []
    for v in range(n_nodes):
        shape = tuple(cards[p] for p in parents[v])
        rows = rng.dirichlet([alpha] * cards[v], size=int(np.prod(shape, dtype=int)))
        cpts.append(rows.reshape(shape + (cards[v],)))
    return BayesianNetwork(
        names=tuple(f"X{v}" for v in range(n_nodes)),
        states=tuple(tuple(f"s{k}" for k in range(c)) for c in cards),
        parents=tuple(parents),
        cpts=tuple(cpts),
        name=name,
    )


def network_with_parameters(
    min_parameters: int,
    rng: np.random.Generator | int | None = None,
    *,
    states: tuple[int, int] = (2, 4),
    max_parents: int = 2,
    window: int = 4,
) -> BayesianNetwork:
    """Grow a windowed random network until it has at least ``min_parameters`` entries."""
    rng = np.random.default_rng(rng)
    seed = int(rng.integers(2**31))
    n = 4
    while True:
        bn = random_network(n, seed, states=states, max_parents=max_parents, window=window,
                            name=f"random{n}")
        if bn.n_parameters >= min_parameters:
            return bn
        n += max(1, n // 8)
