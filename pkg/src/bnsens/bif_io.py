"""Reading and writing discrete Bayesian networks in BIF text format.

Supported grammar subset::

    network NAME { property ...; }
    variable NAME {
        type discrete [ N ] { s1, s2, ..., sN };
        property ...;
    }
    probability ( CHILD | P1, P2 ) {
        ( p1, p2 ) v1, v2, ..., vN;
        ...
    }
    probability ( ROOT ) { table v1, ..., vN; }

``//`` and ``/* */`` comments are skipped; ``property`` lines are kept as
opaque strings.  Rows are renormalized to sum to one after parsing.
"""

from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass, field
from os import PathLike
from typing import Iterator

import numpy as np

from .errors import (
    ArityMismatch,
    BifSyntaxError,
    DuplicateDeclaration,
    MissingRow,
    OutOfRangeProbability,
    RowSumViolation,
    UnknownState,
    UnknownVariable,
    UnsupportedNodeType,
)
from .model import BayesianNetwork, validate

ROW_SUM_TOL = 1e-6
# rows closer to 1 than this are kept verbatim so that parsing is idempotent
RENORMALIZE_TOL = 1e-12


@dataclass(frozen=True)
class BifVariable:
    name: str
    states: tuple[str, ...]
    properties: tuple[str, ...] = ()


@dataclass(frozen=True)
class BifProbability:
    child: str
    parents: tuple[str, ...]
    rows: dict[tuple[str, ...], tuple[float, ...]]


@dataclass
class BifDocument:
    network_name: str
    variables: list[BifVariable] = field(default_factory=list)
    probabilities: list[BifProbability] = field(default_factory=list)
    network_properties: tuple[str, ...] = ()

    def variable(self, name: str) -> BifVariable:
        for var in self.variables:
            if var.name == name:
                return var
        raise UnknownVariable(name)


# ---------------------------------------------------------------------------
# lexer

_PUNCT = set("{}()[];,|")
_WORD = re.compile(r"[^\s{}()\[\];,|/]+(?:/(?![/*])[^\s{}()\[\];,|/]*)*")


@dataclass(frozen=True)
class _Token:
    text: str
    line: int
    column: int
    pos: int


class _Lexer:
    def __init__(self, source: str):
        self.src = source
        self.pos = 0
        self._peeked: _Token | None = None

    def _location(self, pos: int) -> tuple[int, int]:
        line = self.src.count("\n", 0, pos) + 1
        column = pos - (self.src.rfind("\n", 0, pos) + 1) + 1
        return line, column

    def error(self, message: str, tok: _Token | None = None) -> BifSyntaxError:
        if tok is None:
            line, column = self._location(self.pos)
        else:
            line, column = tok.line, tok.column
        return BifSyntaxError(message, line, column)

    def _skip(self) -> None:
        src, n = self.src, len(self.src)
        while self.pos < n:
            ch = src[self.pos]
            if ch.isspace():
                self.pos += 1
            elif src.startswith("//", self.pos):
                end = src.find("\n", self.pos)
                self.pos = n if end < 0 else end + 1
            elif src.startswith("/*", self.pos):
                end = src.find("*/", self.pos + 2)
                if end < 0:
                    raise self.error("unterminated block comment")
                self.pos = end + 2
            else:
                return

    def _scan(self) -> _Token | None:
        self._skip()
        if self.pos >= len(self.src):
            return None
        start = self.pos
        line, column = self._location(start)
        ch = self.src[start]
        if ch in _PUNCT:
            self.pos += 1
            return _Token(ch, line, column, start)
        m = _WORD.match(self.src, start)
        if not m or m.end() == start:
            raise BifSyntaxError(f"unexpected character {ch!r}", line, column)
        self.pos = m.end()
        return _Token(m.group(), line, column, start)

    def peek(self) -> _Token | None:
        if self._peeked is None:
            self._peeked = self._scan()
        return self._peeked

    def next(self) -> _Token:
        tok = self.peek()
        if tok is None:
            raise self.error("unexpected end of input")
        self._peeked = None
        return tok

    def expect(self, text: str) -> _Token:
        tok = self.next()
        if tok.text != text:
            raise self.error(f"expected {text!r}, found {tok.text!r}", tok)
        return tok

    def word(self, what: str) -> _Token:
        tok = self.next()
        if tok.text in _PUNCT:
            raise self.error(f"expected {what}, found {tok.text!r}", tok)
        return tok

    def raw_until_semicolon(self) -> str:
        """Consume raw text up to the next ';' (used for property lines)."""
        assert self._peeked is None
        end = self.src.find(";", self.pos)
        if end < 0:
            raise self.error("unterminated property")
        text = self.src[self.pos:end].strip()
        self.pos = end + 1
        return text


# ---------------------------------------------------------------------------
# parser

def _number(lex: _Lexer, tok: _Token) -> float:
    try:
        value = float(tok.text)
    except ValueError:
        raise lex.error(f"expected a probability, found {tok.text!r}", tok) from None
    if not math.isfinite(value) or value < 0.0 or value > 1.0:
        raise OutOfRangeProbability(
            f"probability {tok.text} outside [0, 1] (line {tok.line}, column {tok.column})"
        )
    return value


def _numbers(lex: _Lexer) -> list[float]:
    values = [_number(lex, lex.word("probability"))]
    while True:
        tok = lex.next()
        if tok.text == ";":
            return values
        if tok.text == ",":
            tok = lex.word("probability")
        elif tok.text in _PUNCT:
            raise lex.error(f"unexpected {tok.text!r} in probability list", tok)
        values.append(_number(lex, tok))


def _name_list(lex: _Lexer, close: str) -> list[_Token]:
    names = [lex.word("identifier")]
    while True:
        tok = lex.next()
        if tok.text == close:
            return names
        if tok.text != ",":
            raise lex.error(f"expected ',' or {close!r}, found {tok.text!r}", tok)
        names.append(lex.word("identifier"))


def _parse_network(lex: _Lexer) -> tuple[str, list[str]]:
    lex.expect("network")
    name = lex.word("network name").text
    lex.expect("{")
    props = []
    while True:
        tok = lex.next()
        if tok.text == "}":
            return name, props
        if tok.text != "property":
            raise lex.error(f"unexpected {tok.text!r} in network block", tok)
        props.append(lex.raw_until_semicolon())


def _parse_variable(lex: _Lexer) -> tuple[_Token, BifVariable]:
    name_tok = lex.word("variable name")
    lex.expect("{")
    states = None
    props = []
    while True:
        tok = lex.next()
        if tok.text == "}":
            break
        if tok.text == "property":
            props.append(lex.raw_until_semicolon())
        elif tok.text == "type":
            if states is not None:
                raise DuplicateDeclaration(f"variable {name_tok.text!r} declares its type twice")
            kind = lex.word("variable type")
            if kind.text != "discrete":
                raise UnsupportedNodeType(
                    f"variable {name_tok.text!r} has unsupported type {kind.text!r}"
                )
            lex.expect("[")
            n_tok = lex.word("state count")
            try:
                n_states = int(n_tok.text)
            except ValueError:
                raise lex.error(f"expected an integer, found {n_tok.text!r}", n_tok) from None
            lex.expect("]")
            lex.expect("{")
            state_toks = _name_list(lex, "}")
            lex.expect(";")
            states = tuple(t.text for t in state_toks)
            if len(states) != n_states:
                raise ArityMismatch(
                    f"variable {name_tok.text!r} declares {n_states} states but lists {len(states)}"
                )
            if len(set(states)) != len(states):
                raise DuplicateDeclaration(f"variable {name_tok.text!r} repeats a state name")
        else:
            raise lex.error(f"unexpected {tok.text!r} in variable block", tok)
    if states is None:
        raise lex.error(f"variable {name_tok.text!r} has no type declaration", name_tok)
    return name_tok, BifVariable(name_tok.text, states, tuple(props))


def _parse_probability(lex: _Lexer):
    lex.expect("(")
    child = lex.word("variable name")
    parents: list[_Token] = []
    tok = lex.next()
    if tok.text == "|":
        parents = _name_list(lex, ")")
    elif tok.text != ")":
        raise lex.error(f"expected '|' or ')', found {tok.text!r}", tok)
    lex.expect("{")
    entries = []  # (key tokens or None for table, values, token)
    while True:
        tok = lex.next()
        if tok.text == "}":
            break
        if tok.text == "property":
            lex.raw_until_semicolon()
        elif tok.text == "table":
            entries.append((None, _numbers(lex), tok))
        elif tok.text == "(":
            key = _name_list(lex, ")")
            entries.append((key, _numbers(lex), tok))
        else:
            raise lex.error(f"unexpected {tok.text!r} in probability block", tok)
    return child, parents, entries


def _normalized(row: list[float], where: str) -> tuple[float, ...]:
    total = math.fsum(row)
    if abs(total - 1.0) > ROW_SUM_TOL:
        raise RowSumViolation(f"{where}: row sums to {total!r}")
    if abs(total - 1.0) > RENORMALIZE_TOL:
        row = [v / total for v in row]
    return tuple(row)


def parse_bif(source: str) -> BifDocument:
    """Parse BIF text into a validated :class:`BifDocument`."""
    lex = _Lexer(source)
    tok = lex.peek()
    if tok is None:
        raise lex.error("empty input")
    name, net_props = _parse_network(lex)

    variables: dict[str, BifVariable] = {}
    raw_blocks = []
    while (tok := lex.peek()) is not None:
        lex.next()
        if tok.text == "variable":
            name_tok, var = _parse_variable(lex)
            if var.name in variables:
                raise DuplicateDeclaration(
                    f"variable {var.name!r} declared twice (line {name_tok.line})"
                )
            variables[var.name] = var
        elif tok.text == "probability":
            raw_blocks.append(_parse_probability(lex))
        elif tok.text == "network":
            raise DuplicateDeclaration(f"second network block at line {tok.line}")
        else:
            raise lex.error(f"unexpected {tok.text!r} at top level", tok)

    probabilities: dict[str, BifProbability] = {}
    for child_tok, parent_toks, entries in raw_blocks:
        for t in [child_tok, *parent_toks]:
            if t.text not in variables:
                raise UnknownVariable(
                    f"undeclared variable {t.text!r} (line {t.line}, column {t.column})"
                )
        child = variables[child_tok.text]
        parents = tuple(t.text for t in parent_toks)
        if child.name in probabilities:
            raise DuplicateDeclaration(f"second probability block for {child.name!r}")
        if len(set(parents)) != len(parents) or child.name in parents:
            raise DuplicateDeclaration(f"repeated variable in probability block of {child.name!r}")
        parent_states = [variables[p].states for p in parents]
        rows: dict[tuple[str, ...], tuple[float, ...]] = {}
        for key_toks, values, etok in entries:
            where = f"{child.name} (line {etok.line})"
            if key_toks is None:
                if parents:
                    raise lex.error(
                        f"'table' entry for {child.name!r} is only supported without parents", etok
                    )
                key: tuple[str, ...] = ()
            else:
                key = tuple(t.text for t in key_toks)
                if len(key) != len(parents):
                    raise ArityMismatch(
                        f"{where}: {len(key)} parent states given for {len(parents)} parents"
                    )
                for t, states, pname in zip(key_toks, parent_states, parents):
                    if t.text not in states:
                        raise UnknownState(
                            f"{where}: {t.text!r} is not a state of {pname!r}"
                        )
            if len(values) != len(child.states):
                raise ArityMismatch(
                    f"{where}: row has {len(values)} entries, {child.name!r} has {len(child.states)} states"
                )
            if key in rows:
                raise DuplicateDeclaration(f"{where}: duplicate row for {key!r}")
            rows[key] = _normalized(values, where)
        for combo in itertools.product(*parent_states):
            if combo not in rows:
                raise MissingRow(f"{child.name}: no row for parent configuration {combo!r}")
        probabilities[child.name] = BifProbability(child.name, parents, rows)

    for var_name in variables:
        if var_name not in probabilities:
            raise MissingRow(f"no probability block for variable {var_name!r}")

    return BifDocument(
        network_name=name,
        variables=list(variables.values()),
        probabilities=[probabilities[v] for v in variables],
        network_properties=tuple(net_props),
    )


def serialize_bif(doc: BifDocument) -> str:
    """Render a document as BIF text; floats are written with ``repr`` (round-trip exact)."""
    out = [f"network {doc.network_name} {{\n"]
    out += [f"  property {p} ;\n" for p in doc.network_properties]
    out.append("}\n")
    for var in doc.variables:
        out.append(f"variable {var.name} {{\n")
        out.append(f"  type discrete [ {len(var.states)} ] {{ {', '.join(var.states)} }};\n")
        out += [f"  property {p} ;\n" for p in var.properties]
        out.append("}\n")
    for prob in doc.probabilities:
        head = prob.child if not prob.parents else f"{prob.child} | {', '.join(prob.parents)}"
        out.append(f"probability ( {head} ) {{\n")
        for key, row in prob.rows.items():
            values = ", ".join(repr(float(v)) for v in row)
            if prob.parents:
                out.append(f"  ({', '.join(key)}) {values};\n")
            else:
                out.append(f"  table {values};\n")
        out.append("}\n")
    return "".join(out)


# ---------------------------------------------------------------------------
# conversion to and from the in-memory model

def to_network(doc: BifDocument) -> BayesianNetwork:
    """Build and validate a :class:`BayesianNetwork` from a parsed document."""
    index = {v.name: i for i, v in enumerate(doc.variables)}
    by_child = {p.child: p for p in doc.probabilities}
    parents, cpts = [], []
    for var in doc.variables:
        prob = by_child.get(var.name)
        if prob is None:
            raise MissingRow(f"no probability block for variable {var.name!r}")
        pidx = tuple(index[p] for p in prob.parents)
        pstates = [doc.variables[i].states for i in pidx]
        table = np.empty([len(s) for s in pstates] + [len(var.states)])
        for combo in itertools.product(*(range(len(s)) for s in pstates)):
            key = tuple(s[c] for s, c in zip(pstates, combo))
            table[combo] = prob.rows[key]
        parents.append(pidx)
        cpts.append(table)
    bn = BayesianNetwork(
        names=tuple(v.name for v in doc.variables),
        states=tuple(v.states for v in doc.variables),
        parents=tuple(parents),
        cpts=tuple(cpts),
        name=doc.network_name,
    )
    validate(bn)
    return bn


def from_network(bn: BayesianNetwork) -> BifDocument:
    variables = [BifVariable(n, tuple(s)) for n, s in zip(bn.names, bn.states)]
    probabilities = []
    for v in range(bn.n_variables):
        pstates = [bn.states[p] for p in bn.parents[v]]
        rows = {}
        for combo in _configs(bn, v):
            key = tuple(s[c] for s, c in zip(pstates, combo))
            rows[key] = tuple(float(x) for x in bn.cpts[v][combo])
        probabilities.append(
            BifProbability(bn.names[v], tuple(bn.names[p] for p in bn.parents[v]), rows)
        )
    return BifDocument(bn.name, variables, probabilities)


def _configs(bn: BayesianNetwork, v: int) -> Iterator[tuple[int, ...]]:
    return itertools.product(*(range(bn.cardinality(p)) for p in bn.parents[v]))


def read_bif(path: str | PathLike) -> BayesianNetwork:
    with open(path, encoding="utf-8") as fh:
        return to_network(parse_bif(fh.read()))


def write_bif(bn: BayesianNetwork, path: str | PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize_bif(from_network(bn)))
