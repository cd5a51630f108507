"""Timing helpers and the finite-difference baseline used by ``bnsens bench``."""

from __future__ import annotations

import statistics
import time
from dataclasses import asdict, dataclass
from typing import Iterable, Sequence

import numpy as np

from . import engine
from .model import BayesianNetwork, ParameterId, covaried_row, impose_evidence, moralize
from .multiway import top_k_pairs
from .oneway import Query, run_analysis


def random_query(bn: BayesianNetwork, rng: np.random.Generator | int | None = None) -> Query:
    """``P(A = a | B = b)`` with two distinct random variables and random states."""
    rng = np.random.default_rng(rng)
    a, b = (int(x) for x in rng.choice(bn.n_variables, size=2, replace=False))
    return Query((a, int(rng.integers(bn.cardinality(a)))), {b: int(rng.integers(bn.cardinality(b)))})


def _query_value(bn: BayesianNetwork, q: Query, order) -> float:
    mrf = moralize(bn)
    num, _ = engine.marginalize(impose_evidence(mrf, {**q.evidence, q.target[0]: q.target[1]}), order)
    if not q.evidence:
        return num
    den, _ = engine.marginalize(impose_evidence(mrf, q.evidence), order)
    return num / den


def finite_difference_sensitivities(
    bn: BayesianNetwork, q: Query, h: float = 1e-6,
    params: Iterable[ParameterId] | None = None,
) -> dict[ParameterId, float]:
    """Signed central differences of the query per parameter, re-running inference each time."""
    order = engine.elimination_order(moralize(bn))
    out = {}
    for p in bn.parameters() if params is None else params:
        theta0 = bn.value(p)
        if theta0 >= 1.0:
            continue
        vals = []
        for t in (min(theta0 + h, 1.0), max(theta0 - h, 0.0)):
            table = np.array(bn.cpts[p.variable])
            table[p.parent_config] = covaried_row(table[p.parent_config], p.child_state, t)
            vals.append((t, _query_value(bn.with_cpt(p.variable, table), q, order)))
        (t_hi, f_hi), (t_lo, f_lo) = vals
        out[p] = (f_hi - f_lo) / (t_hi - t_lo)
    return out


def _best_time(fn, repeats: int) -> float:
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


@dataclass
class BenchRow:
    network: str
    nodes: int
    arcs: int
    parameters: int
    induced_width: int
    forward_s: float
    forward_backward_s: float
    fb_ratio: float
    analyze_s: float
    analyze_forward: int
    analyze_backward: int
    pairs_s: float
    fd_estimate_s: float
    speedup: float

    def as_dict(self) -> dict:
        return asdict(self)


def bench_network(bn: BayesianNetwork, q: Query, *, repeats: int = 5, top: int = 20,
                  fd_sample: int = 20, seed: int = 0) -> BenchRow:
    mrf = moralize(bn)
    order = engine.elimination_order(mrf)
    masked = impose_evidence(mrf, {**q.evidence, q.target[0]: q.target[1]})

    # warm-up so allocation effects do not land in the first measurement
    engine.backward(engine.marginalize(masked, order)[1])
    fwd = _best_time(lambda: engine.marginalize(masked, order), repeats)
    fb = _best_time(lambda: engine.backward(engine.marginalize(masked, order)[1]), repeats)

    engine.reset_pass_counts()
    t0 = time.perf_counter()
    result = run_analysis(bn, q)
    analyze_s = time.perf_counter() - t0
    passes = dict(engine.PASS_COUNTS)

    t0 = time.perf_counter()
    top_k_pairs(result.coefficients, top, result.evidence_probability)
    pairs_s = time.perf_counter() - t0

    # baseline cost extrapolated from a sample, as one FD estimate per parameter
    rng = np.random.default_rng(seed)
    all_params = [p for p in bn.parameters() if bn.value(p) < 1.0]
    sample = [all_params[i] for i in
              rng.choice(len(all_params), size=min(fd_sample, len(all_params)), replace=False)]
    t0 = time.perf_counter()
    finite_difference_sensitivities(bn, q, params=sample)
    fd_estimate = (time.perf_counter() - t0) / max(len(sample), 1) * len(all_params)

    return BenchRow(
        network=bn.name,
        nodes=bn.n_variables,
        arcs=len(bn.edges),
        parameters=bn.n_parameters,
        induced_width=engine.induced_width(mrf, order),
        forward_s=fwd,
        forward_backward_s=fb,
        fb_ratio=fb / fwd,
        analyze_s=analyze_s,
        analyze_forward=passes.get("forward", 0),
        analyze_backward=passes.get("backward", 0),
        pairs_s=pairs_s,
        fd_estimate_s=fd_estimate,
        speedup=fd_estimate / analyze_s,
    )


def median_ratio(bn: BayesianNetwork, q: Query, repeats: int = 7) -> float:
    """Median (forward+backward)/forward over interleaved runs."""
    mrf = moralize(bn)
    order = engine.elimination_order(mrf)
    masked = impose_evidence(mrf, {**q.evidence, q.target[0]: q.target[1]})
    ratios = []
    for _ in range(repeats):
        f = _best_time(lambda: engine.marginalize(masked, order), 3)
        fb = _best_time(lambda: engine.backward(engine.marginalize(masked, order)[1]), 3)
        ratios.append(fb / f)
    return statistics.median(ratios)


def parse_sizes(text: str) -> Sequence[int]:
    return [int(s) for s in text.split(",") if s.strip()]
