"""In-memory Bayesian networks, parameter addressing, covariation and moralization.

CPT layout: ``cpts[v]`` has shape ``(*parent_cardinalities, cardinality(v))`` so
that a C-order walk over parent configurations iterates the *last* parent
fastest, with the child state as the innermost axis.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace
from typing import Iterator, Mapping, NamedTuple, Sequence

import numpy as np

from .errors import (
    CycleDetected,
    DegenerateCovariation,
    OutOfRangeProbability,
    QueryError,
    RowSumViolation,
    UnknownParameter,
    UnknownState,
    UnknownVariable,
)

ROW_SUM_TOL = 1e-9


class ParameterId(NamedTuple):
    """Address of one CPT entry.  Tuple ordering is the canonical parameter order."""

    variable: int
    parent_config: tuple[int, ...]
    child_state: int

    @property
    def pmf(self) -> tuple[int, tuple[int, ...]]:
        """Key of the conditional pmf (CPT row) this parameter belongs to."""
        return self.variable, self.parent_config


Evidence = Mapping[int, int]


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=np.float64)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class BayesianNetwork:
    names: tuple[str, ...]
    states: tuple[tuple[str, ...], ...]
    parents: tuple[tuple[int, ...], ...]
    cpts: tuple[np.ndarray, ...]
    name: str = "network"
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "names", tuple(self.names))
        object.__setattr__(self, "states", tuple(tuple(s) for s in self.states))
        object.__setattr__(self, "parents", tuple(tuple(int(p) for p in ps) for ps in self.parents))
        cpts = tuple(c if isinstance(c, np.ndarray) and not c.flags.writeable else _frozen(c)
                     for c in self.cpts)
        object.__setattr__(self, "cpts", cpts)
        n = len(self.names)
        if not (len(self.states) == len(self.parents) == len(self.cpts) == n):
            raise ValueError("names, states, parents and cpts must have equal length")
        if len(set(self.names)) != n:
            raise ValueError("variable names must be unique")
        for v in range(n):
            for p in self.parents[v]:
                if not 0 <= p < n:
                    raise UnknownVariable(f"parent index {p} of {self.names[v]!r}")
            shape = tuple(len(self.states[p]) for p in self.parents[v]) + (len(self.states[v]),)
            if self.cpts[v].shape != shape:
                raise ValueError(
                    f"CPT of {self.names[v]!r} has shape {self.cpts[v].shape}, expected {shape}"
                )
        object.__setattr__(self, "_index", {nm: i for i, nm in enumerate(self.names)})

    # -- lookups -----------------------------------------------------------
    @property
    def n_variables(self) -> int:
        return len(self.names)

    def cardinality(self, v: int) -> int:
        return len(self.states[v])

    @property
    def cardinalities(self) -> tuple[int, ...]:
        return tuple(len(s) for s in self.states)

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise UnknownVariable(f"unknown variable {name!r}") from None

    def state_index(self, v: int, state: str) -> int:
        try:
            return self.states[v].index(state)
        except ValueError:
            raise UnknownState(f"{state!r} is not a state of {self.names[v]!r}") from None

    @property
    def n_parameters(self) -> int:
        return sum(c.size for c in self.cpts)

    @property
    def edges(self) -> list[tuple[int, int]]:
        return [(p, v) for v in range(self.n_variables) for p in self.parents[v]]

    def parameters(self) -> Iterator[ParameterId]:
        """All parameters in canonical order."""
        for v, cpt in enumerate(self.cpts):
            for idx in itertools.product(*(range(k) for k in cpt.shape)):
                yield ParameterId(v, idx[:-1], idx[-1])

    def value(self, p: ParameterId) -> float:
        self._check(p)
        return float(self.cpts[p.variable][p.parent_config + (p.child_state,)])

    def _check(self, p: ParameterId) -> None:
        if not 0 <= p.variable < self.n_variables:
            raise UnknownParameter(f"no variable with index {p.variable}")
        shape = self.cpts[p.variable].shape
        idx = tuple(p.parent_config) + (p.child_state,)
        if len(idx) != len(shape) or any(not 0 <= i < k for i, k in zip(idx, shape)):
            raise UnknownParameter(f"{p} does not address a CPT entry")

    def describe(self, p: ParameterId) -> str:
        """Human-readable label ``VAR=state | P1=s1, P2=s2``."""
        head = f"{self.names[p.variable]}={self.states[p.variable][p.child_state]}"
        if not p.parent_config:
            return head
        conds = ", ".join(
            f"{self.names[q]}={self.states[q][s]}"
            for q, s in zip(self.parents[p.variable], p.parent_config)
        )
        return f"{head} | {conds}"

    def topological_order(self) -> list[int]:
        """Kahn's algorithm, smallest index first; raises CycleDetected."""
        n = self.n_variables
        indeg = [len(ps) for ps in self.parents]
        children: list[list[int]] = [[] for _ in range(n)]
        for v, ps in enumerate(self.parents):
            for p in ps:
                children[p].append(v)
        ready = [v for v in range(n) if indeg[v] == 0]
        order = []
        while ready:
            ready.sort()
            v = ready.pop(0)
            order.append(v)
            for c in children[v]:
                indeg[c] -= 1
                if indeg[c] == 0:
                    ready.append(c)
        if len(order) < n:
            raise CycleDetected([self.names[v] for v in _find_cycle(self.parents, set(order))])
        return order

    def with_cpt(self, v: int, table) -> "BayesianNetwork":
        cpts = list(self.cpts)
        cpts[v] = _frozen(table)
        return replace(self, cpts=tuple(cpts))


def _find_cycle(parents: Sequence[Sequence[int]], done: set[int]) -> list[int]:
    # every remaining node has a remaining parent, so walking parents must revisit a node
    v = next(i for i in range(len(parents)) if i not in done)
    seen: dict[int, int] = {}
    path = []
    while v not in seen:
        seen[v] = len(path)
        path.append(v)
        v = next(p for p in parents[v] if p not in done)
    cycle = path[seen[v]:][::-1]
    return cycle + [cycle[0]]


def validate(bn: BayesianNetwork) -> None:
    """Raise if the network is not a valid BN; return None otherwise."""
    bn.topological_order()
    for v, cpt in enumerate(bn.cpts):
        if not np.all(np.isfinite(cpt)) or cpt.min(initial=0.0) < 0.0 or cpt.max(initial=0.0) > 1.0:
            raise OutOfRangeProbability(f"CPT of {bn.names[v]!r} has entries outside [0, 1]")
        sums = cpt.sum(axis=-1)
        bad = np.abs(sums - 1.0) > ROW_SUM_TOL
        if np.any(bad):
            where = tuple(int(i) for i in np.argwhere(bad)[0])
            raise RowSumViolation(
                f"CPT row {where} of {bn.names[v]!r} sums to {float(sums[where])!r}"
            )


def parse_assignment(bn: BayesianNetwork, text: str) -> tuple[int, int]:
    """``"VAR=state"`` -> ``(variable index, state index)``."""
    name, sep, state = text.partition("=")
    if not sep or not name.strip() or not state.strip():
        raise QueryError(f"expected VAR=state, got {text!r}")
    v = bn.index(name.strip())
    return v, bn.state_index(v, state.strip())


def check_evidence(bn: BayesianNetwork, evidence: Evidence) -> dict[int, int]:
    out = {}
    for v, s in evidence.items():
        if not 0 <= v < bn.n_variables:
            raise UnknownVariable(f"no variable with index {v}")
        if not 0 <= s < bn.cardinality(v):
            raise UnknownState(f"state {s} out of range for {bn.names[v]!r}")
        out[int(v)] = int(s)
    return out


# ---------------------------------------------------------------------------
# proportional covariation

def covariation_siblings(bn: BayesianNetwork, p: ParameterId) -> list[ParameterId]:
    bn._check(p)
    return [
        ParameterId(p.variable, tuple(p.parent_config), j)
        for j in range(bn.cardinality(p.variable))
        if j != p.child_state
    ]


def covaried_row(row: np.ndarray, i: int, new_value: float) -> np.ndarray:
    """Row with entry ``i`` set to ``new_value`` and the rest scaled proportionally."""
    old = float(row[i])
    if old >= 1.0:
        raise DegenerateCovariation("cannot covary a parameter whose original value is 1")
    out = np.asarray(row, dtype=np.float64) * ((1.0 - new_value) / (1.0 - old))
    out[i] = new_value
    return out


def apply_covariation(bn: BayesianNetwork, p: ParameterId, new_value: float) -> BayesianNetwork:
    """Copy of ``bn`` with ``p`` moved to ``new_value`` under proportional covariation."""
    bn._check(p)
    if not 0.0 <= new_value <= 1.0 or math.isnan(new_value):
        raise ValueError(f"new value {new_value!r} outside [0, 1]")
    table = np.array(bn.cpts[p.variable])
    cfg = tuple(p.parent_config)
    table[cfg] = covaried_row(table[cfg], p.child_state, new_value)
    return bn.with_cpt(p.variable, table)


# ---------------------------------------------------------------------------
# moralization and evidence

@dataclass(frozen=True, eq=False)
class Potential:
    """Non-negative factor.  ``origin`` is the network variable whose CPT it copies.

    For potentials built by :func:`moralize` the scope is ``(child, *parents)``,
    so entry ``(s, *cfg)`` holds parameter ``ParameterId(origin, cfg, s)``.
    ``mask`` is the 0/1 evidence mask already multiplied into ``values``.
    """

    scope: tuple[int, ...]
    values: np.ndarray
    origin: int | None = None
    mask: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "scope", tuple(self.scope))
        if not isinstance(self.values, np.ndarray) or self.values.flags.writeable:
            object.__setattr__(self, "values", _frozen(self.values))
        if self.values.ndim != len(self.scope):
            raise ValueError("potential rank does not match its scope")

    def parameter_at(self, index: Sequence[int]) -> ParameterId:
        if self.origin is None:
            raise UnknownParameter("potential has no origin")
        index = tuple(int(i) for i in index)
        return ParameterId(self.origin, index[1:], index[0])


@dataclass(frozen=True, eq=False)
class Mrf:
    potentials: tuple[Potential, ...]
    cardinalities: tuple[int, ...]
    names: tuple[str, ...] = ()

    @property
    def n_variables(self) -> int:
        return len(self.cardinalities)

    def adjacency(self) -> list[set[int]]:
        adj: list[set[int]] = [set() for _ in range(self.n_variables)]
        for pot in self.potentials:
            for a in pot.scope:
                adj[a].update(b for b in pot.scope if b != a)
        return adj


def moralize(bn: BayesianNetwork) -> Mrf:
    pots = tuple(
        Potential((v, *bn.parents[v]), np.moveaxis(bn.cpts[v], -1, 0), origin=v)
        for v in range(bn.n_variables)
    )
    return Mrf(pots, bn.cardinalities, bn.names)


def impose_evidence(mrf: Mrf, evidence: Evidence) -> Mrf:
    """Zero every potential entry that contradicts ``evidence`` (masking, shapes kept)."""
    for v, s in evidence.items():
        if not 0 <= v < mrf.n_variables:
            raise UnknownVariable(f"no variable with index {v}")
        if not 0 <= s < mrf.cardinalities[v]:
            raise UnknownState(f"state {s} out of range for variable {v}")
    if not evidence:
        return mrf
    pots = []
    for pot in mrf.potentials:
        hit = [(ax, evidence[v]) for ax, v in enumerate(pot.scope) if v in evidence]
        if not hit:
            pots.append(pot)
            continue
        mask = np.ones(pot.values.shape) if pot.mask is None else np.array(pot.mask)
        for ax, s in hit:
            sel = np.zeros(pot.values.shape[ax])
            sel[s] = 1.0
            shape = [1] * pot.values.ndim
            shape[ax] = -1
            mask = mask * sel.reshape(shape)
        mask.flags.writeable = False
        pots.append(Potential(pot.scope, pot.values * mask, pot.origin, mask))
    return Mrf(tuple(pots), mrf.cardinalities, mrf.names)
