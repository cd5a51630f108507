"""One-way sensitivity analysis from a single forward/backward sweep.

For a masked marginal ``g = P(Y_K = y_K)`` the sensitivity function of any
parameter under proportional covariation is linear, ``a0 + a1 * theta``.  Its
slope follows from the gradient of ``g`` w.r.t. the parameter and its row
siblings (the chain rule through the covariation map).  A conditional query
is the ratio of two such linear functions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import engine
from .errors import (
    NonBinaryTarget,
    NotMostLikely,
    QueryError,
    UnknownState,
    UnknownVariable,
    ZeroEvidenceProbability,
)
from .model import (
    BayesianNetwork,
    Evidence,
    ParameterId,
    check_evidence,
    impose_evidence,
    moralize,
    parse_assignment,
)

LINEAR_TOL = 1e-12
SENSITIVITY_SET_TOL = 1e-12
ZERO_SENSITIVITY_TOL = 1e-12
SIGN_RTOL = 1e-12


@dataclass(frozen=True)
class Query:
    """``P(target | evidence)`` with target ``(variable, state)``."""

    target: tuple[int, int]
    evidence: Mapping[int, int] = field(default_factory=dict)

    @classmethod
    def parse(cls, bn: BayesianNetwork, target: str, evidence: Iterable[str] = ()) -> "Query":
        ev: dict[int, int] = {}
        for item in evidence:
            v, s = parse_assignment(bn, item)
            if v in ev and ev[v] != s:
                raise QueryError(f"conflicting evidence for {bn.names[v]!r}")
            ev[v] = s
        q = cls(parse_assignment(bn, target), ev)
        q.check(bn)
        return q

    def check(self, bn: BayesianNetwork) -> None:
        v, s = self.target
        if not 0 <= v < bn.n_variables:
            raise UnknownVariable(f"no variable with index {v}")
        if not 0 <= s < bn.cardinality(v):
            raise UnknownState(f"state {s} out of range for {bn.names[v]!r}")
        check_evidence(bn, self.evidence)
        if v in self.evidence:
            raise QueryError(f"target variable {bn.names[v]!r} also appears in the evidence")

    def describe(self, bn: BayesianNetwork) -> str:
        v, s = self.target
        head = f"P({bn.names[v]}={bn.states[v][s]}"
        if self.evidence:
            head += " | " + ", ".join(f"{bn.names[u]}={bn.states[u][t]}"
                                      for u, t in sorted(self.evidence.items()))
        return head + ")"


@dataclass(frozen=True)
class HyperbolaParams:
    r: float
    s: float
    t: float
    linear: bool


@dataclass(frozen=True)
class SensitivityFunction:
    """``f(theta) = (c0 + ci*theta) / (d0 + di*theta)`` around ``theta0``."""

    c0: float
    ci: float
    d0: float
    di: float
    theta0: float

    def __call__(self, theta):
        return (self.c0 + self.ci * theta) / (self.d0 + self.di * theta)

    @property
    def delta(self) -> float:
        """``ci*d0 - c0*di``, the numerator of f'."""
        return self.ci * self.d0 - self.c0 * self.di

    def derivative(self, theta):
        return self.delta / (self.di * theta + self.d0) ** 2

    @property
    def is_linear(self) -> bool:
        return abs(self.di) <= LINEAR_TOL * (abs(self.d0) + 1.0)

    def complement(self) -> "SensitivityFunction":
        """Sensitivity function of the other state of a binary target."""
        return SensitivityFunction(self.d0 - self.c0, self.di - self.ci, self.d0, self.di,
                                   self.theta0)

    def hyperbola(self) -> HyperbolaParams:
        if self.is_linear:
            return HyperbolaParams(math.nan, math.nan, math.nan, True)
        s = -self.d0 / self.di
        t = self.ci / self.di
        return HyperbolaParams(self.c0 / self.di + s * t, s, t, False)


@dataclass(frozen=True)
class Metrics:
    sensitivity_value: float
    vertex: float | None
    vertex_proximity: float | None
    second_derivative: float
    max_first_derivative: float
    monotone_sign: int


@dataclass
class SensitivityReport:
    """One row of the per-parameter table.  ``None`` marks not-applicable fields."""

    parameter: ParameterId
    value: float
    function: SensitivityFunction | None = None
    sensitivity_value: float | None = None
    vertex_proximity: float | None = None
    second_derivative: float | None = None
    max_first_derivative: float | None = None
    monotone_sign: int | None = None
    admissible_region: tuple[float, float] | None = None
    in_sensitivity_set: bool | None = None

    @property
    def applicable(self) -> bool:
        return self.function is not None


# ---------------------------------------------------------------------------
# coefficient recovery

class CoefficientMap(dict):
    """``ParameterId -> (a0, a1)``, or ``None`` for parameters with original value 1.

    ``probability`` holds the masked marginal ``P(Y_K = y_K)``.
    """

    probability: float = math.nan


def _linear_arrays(bn: BayesianNetwork, grads: engine.GradientMap, g: float):
    """Per-variable arrays ``(a0, a1)``; NaN where the original value is 1."""
    out = {}
    for v, theta in enumerate(bn.cpts):
        G = grads.arrays[v]
        gt = G * theta
        siblings = gt.sum(axis=-1, keepdims=True) - gt
        with np.errstate(divide="ignore", invalid="ignore"):
            a1 = G - siblings / (1.0 - theta)
        a1 = np.where(theta >= 1.0, np.nan, a1)
        a0 = g - a1 * theta
        out[v] = (a0, a1)
    return out


def _masked_pass(bn: BayesianNetwork, evidence: Evidence, mrf=None, order=None):
    mrf = moralize(bn) if mrf is None else mrf
    value, tape = engine.marginalize(impose_evidence(mrf, evidence), order)
    return value, engine.backward(tape)


def numerator_coefficients(bn: BayesianNetwork, evidence: Evidence, *, mrf=None,
                           order=None) -> CoefficientMap:
    """Linear coefficients of ``P(Y_K = y_K)`` in every parameter (one forward, one backward)."""
    evidence = check_evidence(bn, evidence)
    g, grads = _masked_pass(bn, evidence, mrf, order)
    arrays = _linear_arrays(bn, grads, g)
    out = CoefficientMap()
    out.probability = g
    for p in bn.parameters():
        a0, a1 = arrays[p.variable]
        idx = p.parent_config + (p.child_state,)
        out[p] = None if math.isnan(a1[idx]) else (float(a0[idx]), float(a1[idx]))
    return out


class SensitivityCoefficients(dict):
    """``ParameterId -> SensitivityFunction`` (``None`` when not applicable)."""

    joint_probability: float = math.nan
    evidence_probability: float = 1.0

    @property
    def probability(self) -> float:
        return self.joint_probability / self.evidence_probability


def sensitivity_coefficients(bn: BayesianNetwork, q: Query, *,
                             heuristic: str = "min_fill") -> SensitivityCoefficients:
    """``(c0, ci, d0, di)`` for every parameter using at most two forward/backward sweeps."""
    q.check(bn)
    mrf = moralize(bn)
    order = engine.elimination_order(mrf, heuristic)
    if q.evidence:
        pe, dgrads = _masked_pass(bn, q.evidence, mrf, order)
        if pe <= 0.0:
            raise ZeroEvidenceProbability("the evidence has probability zero")
        den = _linear_arrays(bn, dgrads, pe)
    else:
        pe, den = 1.0, None
    joint_ev = {**q.evidence, q.target[0]: q.target[1]}
    pj, ngrads = _masked_pass(bn, joint_ev, mrf, order)
    num = _linear_arrays(bn, ngrads, pj)

    out = SensitivityCoefficients()
    out.joint_probability = pj
    out.evidence_probability = pe
    for v, theta in enumerate(bn.cpts):
        c0, ci = num[v]
        if den is None:
            d0 = np.ones_like(c0)
            di = np.zeros_like(c0)
        else:
            d0, di = den[v]
        for idx in np.ndindex(theta.shape):
            p = ParameterId(v, idx[:-1], idx[-1])
            if math.isnan(ci[idx]):
                out[p] = None
            else:
                out[p] = SensitivityFunction(float(c0[idx]), float(ci[idx]), float(d0[idx]),
                                             float(di[idx]), float(theta[idx]))
    return out


# ---------------------------------------------------------------------------
# metrics

def _sign(sf: SensitivityFunction) -> int:
    d = sf.delta
    scale = abs(sf.ci * sf.d0) + abs(sf.c0 * sf.di)
    if abs(d) <= SIGN_RTOL * scale or d == 0.0:
        return 0
    return 1 if d > 0 else -1


def vertex(sf: SensitivityFunction) -> float | None:
    """Point where |f'| = 1, or None for linear/constant functions."""
    hyp = sf.hyperbola()
    if hyp.linear or _sign(sf) == 0 or hyp.s == 0.0:
        return None
    root = math.sqrt(abs(hyp.r))
    return hyp.s + root if hyp.s < 0 else hyp.s - root


def max_first_derivative(sf: SensitivityFunction) -> float:
    delta = abs(sf.delta)
    if sf.di != 0.0:
        pole = -sf.d0 / sf.di
        if -LINEAR_TOL <= pole <= 1.0 + LINEAR_TOL:
            return math.inf
    elif sf.d0 == 0.0:
        return math.inf
    return max(delta / sf.d0 ** 2, delta / (sf.di + sf.d0) ** 2)


def metrics(sf: SensitivityFunction) -> Metrics:
    theta0 = sf.theta0
    den = sf.di * theta0 + sf.d0
    delta = abs(sf.delta)
    vx = vertex(sf)
    return Metrics(
        sensitivity_value=delta / den ** 2,
        vertex=vx,
        vertex_proximity=None if vx is None else abs(theta0 - vx),
        second_derivative=abs(2.0 * sf.di * delta / den ** 3),
        max_first_derivative=max_first_derivative(sf),
        monotone_sign=_sign(sf),
    )


def admissible_region(sf: SensitivityFunction, theta0: float | None = None, *,
                      target_states: int = 2) -> tuple[float, float]:
    """Interval of parameter values keeping a binary target's current state the most likely."""
    if target_states != 2:
        raise NonBinaryTarget(f"admissible regions need a binary target, got {target_states} states")
    theta0 = sf.theta0 if theta0 is None else theta0
    num = sf.c0 + sf.ci * theta0
    den = sf.d0 + sf.di * theta0
    if not num > 0.5 * den:
        raise NotMostLikely("the target state is not currently the most likely one")
    slope = 2.0 * sf.ci - sf.di
    if slope == 0.0:
        return (0.0, 1.0)
    tau = (sf.d0 - 2.0 * sf.c0) / slope
    if theta0 <= tau:
        return (0.0, min(tau, 1.0))
    return (max(0.0, tau), 1.0)


# ---------------------------------------------------------------------------
# full analysis

@dataclass
class Analysis:
    query: Query
    reports: list[SensitivityReport]
    coefficients: SensitivityCoefficients

    @property
    def probability(self) -> float:
        return self.coefficients.probability

    @property
    def evidence_probability(self) -> float:
        return self.coefficients.evidence_probability

    @property
    def zero_sensitivity_count(self) -> int:
        return sum(1 for r in self.reports
                   if r.sensitivity_value is not None and r.sensitivity_value <= ZERO_SENSITIVITY_TOL)


def run_analysis(bn: BayesianNetwork, q: Query, *, heuristic: str = "min_fill") -> Analysis:
    coeffs = sensitivity_coefficients(bn, q, heuristic=heuristic)
    binary = bn.cardinality(q.target[0]) == 2
    most_likely = coeffs.probability > 0.5
    reports = []
    for p, sf in coeffs.items():
        theta0 = float(bn.cpts[p.variable][p.parent_config + (p.child_state,)])
        if sf is None:
            reports.append(SensitivityReport(p, theta0))
            continue
        m = metrics(sf)
        region = None
        if binary and most_likely:
            try:
                region = admissible_region(sf)
            except NotMostLikely:  # f(theta0) within rounding of 1/2
                region = None
        reports.append(SensitivityReport(
            parameter=p,
            value=theta0,
            function=sf,
            sensitivity_value=m.sensitivity_value,
            vertex_proximity=m.vertex_proximity,
            second_derivative=m.second_derivative,
            max_first_derivative=m.max_first_derivative,
            monotone_sign=m.monotone_sign,
            admissible_region=region,
            in_sensitivity_set=abs(sf.ci) > SENSITIVITY_SET_TOL or abs(sf.di) > SENSITIVITY_SET_TOL,
        ))
    return Analysis(q, sort_reports(reports), coeffs)


def analyze(bn: BayesianNetwork, q: Query, *, heuristic: str = "min_fill") -> list[SensitivityReport]:
    """One report per parameter, sorted by sensitivity value (largest first)."""
    return run_analysis(bn, q, heuristic=heuristic).reports


# metric -> largest-first?
SORT_KEYS = {
    "sensitivity_value": True,
    "second_derivative": True,
    "max_first_derivative": True,
    "vertex_proximity": False,
    "value": True,
    "parameter": False,
    "region_width": False,
}


def region_width(r: SensitivityReport) -> float | None:
    if r.admissible_region is None:
        return None
    return r.admissible_region[1] - r.admissible_region[0]


def sort_reports(reports: Sequence[SensitivityReport], by: str = "sensitivity_value",
                 descending: bool | None = None) -> list[SensitivityReport]:
    """Sort on one metric; not-applicable rows go last, ties by parameter order."""
    if by not in SORT_KEYS:
        raise QueryError(f"unknown sort key {by!r}; choose from {sorted(SORT_KEYS)}")
    if descending is None:
        descending = SORT_KEYS[by]
    if by == "parameter":
        return sorted(reports, key=lambda r: r.parameter, reverse=descending)

    def key(r: SensitivityReport):
        x = region_width(r) if by == "region_width" else getattr(r, by)
        if x is None:
            return (1, 0.0, r.parameter)
        return (0, -x if descending else x, r.parameter)

    return sorted(reports, key=key)
