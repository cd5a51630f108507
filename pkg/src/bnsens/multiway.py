"""Maximum n-way sensitivity values, top-K pair search and 2-way function fitting."""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Mapping, NamedTuple, Sequence

import numpy as np

from . import engine
from .errors import DegenerateCovariation, InsufficientParameters, SameCpt, ZeroEvidenceProbability
from .model import BayesianNetwork, ParameterId, covaried_row, impose_evidence, moralize
from .oneway import Query, SensitivityFunction


class PairScore(NamedTuple):
    i: ParameterId
    j: ParameterId
    sv_max: float


def contribution(sf: SensitivityFunction) -> float:
    return sf.delta ** 2


def sv_max(params: Sequence[ParameterId], coeffs: Mapping[ParameterId, SensitivityFunction],
           evidence_prob: float) -> float:
    """Largest directional derivative of the n-way sensitivity function at the original values."""
    if evidence_prob <= 0.0:
        raise ZeroEvidenceProbability("evidence probability must be positive")
    seen: dict = {}
    for p in params:
        if p.pmf in seen:
            raise SameCpt(f"{seen[p.pmf]} and {p} share a conditional pmf")
        seen[p.pmf] = p
    total = math.fsum(contribution(coeffs[p]) for p in params)
    return math.sqrt(total) / evidence_prob ** 2


def top_k_pairs(coeffs: Mapping[ParameterId, SensitivityFunction | None], k: int,
                evidence_prob: float) -> list[PairScore]:
    """The ``k`` cross-CPT parameter pairs with the largest maximum 2-way sensitivity value.

    Parameters are ranked by contribution (ties: ParameterId order).  Each of
    the first ``k`` ranks seeds a lazily advanced chain of partners of lower
    rank; a heap yields pairs in (value desc, rank_i, rank_j) order.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    if evidence_prob <= 0.0:
        raise ZeroEvidenceProbability("evidence probability must be positive")
    eligible = [(contribution(sf), p) for p, sf in coeffs.items() if sf is not None]
    if len(eligible) < 2:
        raise InsufficientParameters("need at least two eligible parameters")
    eligible.sort(key=lambda t: (-t[0], t[1]))
    v = [c for c, _ in eligible]
    params = [p for _, p in eligible]
    pmf = [p.pmf for p in params]
    n = len(params)
    norm = evidence_prob ** 2

    def next_partner(i: int, j: int) -> int:
        while j < n and pmf[j] == pmf[i]:
            j += 1
        return j

    heap = []
    for i in range(min(k, n - 1)):
        j = next_partner(i, i + 1)
        if j < n:
            heap.append((-math.sqrt(v[i] + v[j]) / norm, i, j))
    heapq.heapify(heap)

    out = []
    while heap and len(out) < k:
        neg, i, j = heapq.heappop(heap)
        out.append(PairScore(params[i], params[j], -neg))
        j = next_partner(i, j + 1)
        if j < n:
            heapq.heappush(heap, (-math.sqrt(v[i] + v[j]) / norm, i, j))
    if not out:
        raise InsufficientParameters("all eligible parameters share one conditional pmf")
    return out


# ---------------------------------------------------------------------------
# evaluation-based 2-way fit

GRID = (0.25, 0.75)


@dataclass(frozen=True)
class TwoWayFunction:
    """Ratio of two bilinear forms in ``(theta1, theta2)``."""

    c00: float
    c10: float
    c01: float
    c11: float
    d00: float
    d10: float
    d01: float
    d11: float
    theta0: tuple[float, float]

    def numerator(self, t1, t2):
        return self.c00 + self.c10 * t1 + self.c01 * t2 + self.c11 * t1 * t2

    def denominator(self, t1, t2):
        return self.d00 + self.d10 * t1 + self.d01 * t2 + self.d11 * t1 * t2

    def __call__(self, t1, t2):
        return self.numerator(t1, t2) / self.denominator(t1, t2)

    def gradient(self, t1=None, t2=None) -> tuple[float, float]:
        t1 = self.theta0[0] if t1 is None else t1
        t2 = self.theta0[1] if t2 is None else t2
        N, D = self.numerator(t1, t2), self.denominator(t1, t2)
        dn1, dn2 = self.c10 + self.c11 * t2, self.c01 + self.c11 * t1
        dd1, dd2 = self.d10 + self.d11 * t2, self.d01 + self.d11 * t1
        return ((dn1 * D - N * dd1) / D ** 2, (dn2 * D - N * dd2) / D ** 2)

    def gradient_norm(self) -> float:
        return math.hypot(*self.gradient())


def _bilinear_solve(values: np.ndarray) -> np.ndarray:
    """Coefficients ``C`` with ``values[a, b] = [1, g_a] @ C @ [1, g_b]``."""
    m = np.array([[1.0, GRID[0]], [1.0, GRID[1]]])
    minv = np.linalg.inv(m)
    return minv @ values @ minv.T


def fit_two_way(bn: BayesianNetwork, q: Query, p1: ParameterId, p2: ParameterId) -> TwoWayFunction:
    """Fit the 2-way sensitivity function from eight exact evaluations on a 2x2 grid."""
    q.check(bn)
    if p1.pmf == p2.pmf:
        raise SameCpt(f"{p1} and {p2} share a conditional pmf")
    theta0 = (bn.value(p1), bn.value(p2))
    if max(theta0) >= 1.0:
        raise DegenerateCovariation("both parameters need an original value below 1")

    mrf0 = moralize(bn)
    order = engine.elimination_order(mrf0)
    joint_ev = {**q.evidence, q.target[0]: q.target[1]}
    num = np.empty((2, 2))
    den = np.empty((2, 2))
    for a, t1 in enumerate(GRID):
        for b, t2 in enumerate(GRID):
            net = bn
            for p, t in ((p1, t1), (p2, t2)):
                table = np.array(net.cpts[p.variable])
                table[p.parent_config] = covaried_row(
                    np.asarray(bn.cpts[p.variable][p.parent_config]), p.child_state, t)
                net = net.with_cpt(p.variable, table)
            mrf = moralize(net)
            num[a, b], _ = engine.marginalize(impose_evidence(mrf, joint_ev), order)
            if q.evidence:
                den[a, b], _ = engine.marginalize(impose_evidence(mrf, q.evidence), order)
                if den[a, b] <= 0.0:
                    raise ZeroEvidenceProbability("evidence impossible at a grid point")
            else:
                den[a, b] = 1.0
    c = _bilinear_solve(num)
    d = _bilinear_solve(den)
    return TwoWayFunction(c[0, 0], c[1, 0], c[0, 1], c[1, 1],
                          d[0, 0], d[1, 0], d[0, 1], d[1, 1], theta0)
