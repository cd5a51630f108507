"""Brute-force reference implementations for cross-checking the fast paths.

Nothing here touches :mod:`bnsens.engine`, :mod:`bnsens.oneway` or
:mod:`bnsens.multiway`; these routines are deliberately slow and simple.
"""

from __future__ import annotations

import itertools
import math
from typing import Mapping

import numpy as np

from .errors import InsufficientParameters, TooLarge, ZeroEvidenceProbability
from .model import BayesianNetwork, ParameterId, apply_covariation

MAX_JOINT_SIZE = 2 ** 24


def joint_enumeration(bn: BayesianNetwork, *, dtype=np.float64, cpts=None) -> np.ndarray:
    """Full joint table, axis ``i`` indexing the states of variable ``i``.

    ``cpts`` optionally replaces the network's tables (same shapes), which lets
    callers evaluate unnormalized perturbations in a wider ``dtype``.
    """
    shape = bn.cardinalities
    if math.prod(shape) > MAX_JOINT_SIZE:
        raise TooLarge(f"joint table of {math.prod(shape)} entries exceeds 2**24")
    cpts = bn.cpts if cpts is None else cpts
    n = bn.n_variables
    joint = np.ones(shape, dtype=dtype)
    for v in range(n):
        # broadcast the CPT (axes: parents..., child) onto the full joint
        axes = list(bn.parents[v]) + [v]
        cpt = np.asarray(cpts[v], dtype=dtype)
        order = np.argsort(axes)
        aligned = np.transpose(cpt, order)
        full_shape = [1] * n
        for ax in axes:
            full_shape[ax] = shape[ax]
        joint = joint * aligned.reshape(full_shape)
    return joint


def _select(table: np.ndarray, assignment: Mapping[int, int]) -> float:
    idx = tuple(assignment.get(ax, slice(None)) for ax in range(table.ndim))
    return float(np.sum(table[idx]))


def fd_entry_gradient(bn: BayesianNetwork, assignment: Mapping[int, int], p: ParameterId,
                      h: float = 1e-6) -> float:
    """Central difference of ``P(assignment)`` in one raw CPT entry, rows left unnormalized.

    Evaluated in extended precision: the function is multilinear in each
    entry, so the only error left is rounding, which the wider type shrinks.
    """
    wide = np.longdouble
    idx = p.parent_config + (p.child_state,)
    vals = []
    for step in (h, -h):
        cpts = [np.asarray(t, dtype=wide) for t in bn.cpts]
        cpts[p.variable] = cpts[p.variable].copy()
        cpts[p.variable][idx] += wide(step)
        table = joint_enumeration(bn, dtype=wide, cpts=cpts)
        sel = tuple(assignment.get(ax, slice(None)) for ax in range(table.ndim))
        vals.append(np.sum(table[sel]))
    return float((vals[0] - vals[1]) / (2 * wide(h)))


def query_probability(table: np.ndarray, target: tuple[int, int],
                      evidence: Mapping[int, int] | None = None) -> float:
    evidence = dict(evidence or {})
    den = _select(table, evidence)
    if den <= 0.0:
        raise ZeroEvidenceProbability("evidence has probability zero")
    num = _select(table, {**evidence, target[0]: target[1]})
    return num / den


def evidence_probability(bn: BayesianNetwork, assignment: Mapping[int, int]) -> float:
    return _select(joint_enumeration(bn), dict(assignment))


def reinfer(bn: BayesianNetwork, target, evidence, p: ParameterId, theta: float) -> float:
    """P(target | evidence) after moving ``p`` to ``theta`` under proportional covariation."""
    return query_probability(joint_enumeration(apply_covariation(bn, p, theta)), target, evidence)


def fd_sensitivity(bn: BayesianNetwork, target, evidence, p: ParameterId,
                   h: float = 1e-6) -> float:
    """Central finite-difference derivative of the sensitivity function at the original value."""
    theta0 = bn.value(p)
    hi = reinfer(bn, target, evidence, p, theta0 + h)
    lo = reinfer(bn, target, evidence, p, theta0 - h)
    return (hi - lo) / (2.0 * h)


def bisect_crossing(fn, lo: float, hi: float, tol: float = 1e-13) -> float:
    """Root of a continuous ``fn`` with a sign change on ``[lo, hi]``."""
    flo = fn(lo)
    if flo == 0.0:
        return lo
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        fmid = fn(mid)
        if fmid == 0.0:
            return mid
        if (fmid > 0) == (flo > 0):
            lo, flo = mid, fmid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def brute_force_pairs(coeffs: Mapping[ParameterId, object], k: int,
                      evidence_prob: float) -> list[tuple[ParameterId, ParameterId, float]]:
    """All cross-CPT pairs scored with the maximum 2-way sensitivity value, best ``k`` first.

    ``coeffs`` maps parameters to objects with ``c0, ci, d0, di``; ties are
    broken by the rank of each parameter in the (contribution desc,
    ParameterId asc) order, then by the partner's rank.
    """
    contrib = {p: (sf.ci * sf.d0 - sf.c0 * sf.di) ** 2 for p, sf in coeffs.items()}
    ranked = sorted(contrib, key=lambda p: (-contrib[p], p))
    rank = {p: r for r, p in enumerate(ranked)}
    scored = []
    for a, b in itertools.combinations(ranked, 2):
        if a.pmf == b.pmf:
            continue
        value = math.sqrt(contrib[a] + contrib[b]) / evidence_prob ** 2
        scored.append((value, a, b))
    if len(ranked) < 2 or not scored:
        raise InsufficientParameters("need two parameters from different CPT rows")
    scored.sort(key=lambda t: (-t[0], rank[t[1]], rank[t[2]]))
    return [(a, b, v) for v, a, b in scored[:k]]
