import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bnsens import errors
from bnsens.model import BayesianNetwork, ParameterId
from bnsens.multiway import PairScore, fit_two_way, sv_max, top_k_pairs
from bnsens.oneway import Query, SensitivityFunction, sensitivity_coefficients
from bnsens.oracle import brute_force_pairs

from conftest import random_query_for, small_networks


def with_delta(delta, theta0=0.5):
    """A linear function (d0=1, di=0) whose ci*d0 - c0*di equals ``delta``."""
    return SensitivityFunction(0.0, delta, 1.0, 0.0, theta0)


P = [ParameterId(v, (), 0) for v in range(4)]


def test_single_parameter_equals_one_way_value():
    sf = SensitivityFunction(0.1, 0.5, 0.4, 0.2, 0.3)
    d0di = sf.d0 + sf.di * sf.theta0
    one_way = abs(sf.delta) / d0di ** 2
    assert sv_max([P[0]], {P[0]: sf}, 1.0) == pytest.approx(abs(sf.delta))
    # the evidence probability is the denominator's value at theta0
    assert sv_max([P[0]], {P[0]: sf}, d0di) == pytest.approx(one_way, rel=1e-15)


def test_two_parameter_example():
    coeffs = {P[0]: with_delta(0.3), P[1]: with_delta(0.2)}
    assert sv_max(P[:2], coeffs, 0.5) == pytest.approx(math.sqrt(0.13) / 0.25, abs=1e-12)
    assert sv_max(P[:2], coeffs, 0.5) == pytest.approx(1.4422205101855957, abs=1e-12)


def test_zero_term_leaves_value_unchanged():
    coeffs = {P[0]: with_delta(0.3), P[1]: with_delta(0.2), P[2]: with_delta(0.0)}
    assert sv_max(P[:3], coeffs, 0.5) == sv_max(P[:2], coeffs, 0.5)


def test_same_cpt_rejected():
    a, b = ParameterId(0, (1,), 0), ParameterId(0, (1,), 1)
    coeffs = {a: with_delta(0.1), b: with_delta(0.2)}
    with pytest.raises(errors.SameCpt):
        sv_max([a, b], coeffs, 1.0)
    with pytest.raises(errors.ZeroEvidenceProbability):
        sv_max([a], coeffs, 0.0)
    # rows of the same CPT under different parent configurations are fine
    c = ParameterId(0, (0,), 1)
    sv_max([a, c], {a: with_delta(0.1), c: with_delta(0.2)}, 1.0)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-2, 2), min_size=2, max_size=8), st.floats(0.05, 1.0))
def test_superset_is_not_smaller(deltas, pe):
    params = [ParameterId(v, (), 0) for v in range(len(deltas))]
    coeffs = {p: with_delta(d) for p, d in zip(params, deltas)}
    for m in range(1, len(params)):
        assert sv_max(params[: m + 1], coeffs, pe) >= sv_max(params[:m], coeffs, pe)


def test_top_k_example():
    coeffs = {P[0]: with_delta(3.0), P[1]: with_delta(2.0), P[2]: with_delta(1.0)}
    pairs = top_k_pairs(coeffs, 2, 1.0)
    assert [(p.i, p.j) for p in pairs] == [(P[0], P[1]), (P[0], P[2])]
    assert pairs[0].sv_max == pytest.approx(3.605551275463989, abs=1e-12)
    assert pairs[1].sv_max == pytest.approx(3.1622776601683795, abs=1e-12)
    everything = top_k_pairs(coeffs, 10, 1.0)
    assert [p.sv_max for p in everything] == pytest.approx([math.sqrt(13), math.sqrt(10), math.sqrt(5)])


def test_top_one_is_two_largest():
    coeffs = {P[0]: with_delta(1.0), P[1]: with_delta(5.0), P[2]: with_delta(4.0)}
    assert top_k_pairs(coeffs, 1, 1.0) == [PairScore(P[1], P[2], math.sqrt(41))]


def test_top_one_skips_same_pmf():
    a, b, c = ParameterId(0, (), 0), ParameterId(0, (), 1), ParameterId(1, (), 0)
    coeffs = {a: with_delta(5.0), b: with_delta(4.0), c: with_delta(1.0)}
    assert top_k_pairs(coeffs, 5, 1.0) == [PairScore(a, c, math.sqrt(26)),
                                           PairScore(b, c, math.sqrt(17))]


def test_insufficient_parameters():
    a, b = ParameterId(0, (), 0), ParameterId(0, (), 1)
    with pytest.raises(errors.InsufficientParameters):
        top_k_pairs({a: with_delta(1.0)}, 1, 1.0)
    with pytest.raises(errors.InsufficientParameters):
        top_k_pairs({a: with_delta(1.0), b: with_delta(1.0)}, 1, 1.0)
    with pytest.raises(errors.InsufficientParameters):
        top_k_pairs({a: with_delta(1.0), ParameterId(1, (), 0): None}, 1, 1.0)


def random_coefficients(rng, n):
    """Synthetic coefficient maps with shared pmfs and many exact ties."""
    coeffs = {}
    while len(coeffs) < n:
        v = int(rng.integers(0, max(2, n // 3)))
        p = ParameterId(v, (int(rng.integers(2)),), int(rng.integers(3)))
        delta = float(rng.integers(0, 6)) if rng.random() < 0.5 else float(rng.normal())
        coeffs[p] = with_delta(delta)
    return coeffs


def test_matches_brute_force():
    rng = np.random.default_rng(6)
    checked = 0
    for _ in range(100):
        n = int(rng.integers(2, 201))
        k = int(rng.integers(1, 21))
        pe = float(rng.uniform(0.05, 1.0))
        coeffs = random_coefficients(rng, n)
        try:
            expected = brute_force_pairs(coeffs, k, pe)
        except errors.InsufficientParameters:
            with pytest.raises(errors.InsufficientParameters):
                top_k_pairs(coeffs, k, pe)
            continue
        got = top_k_pairs(coeffs, k, pe)
        assert [(g.i, g.j) for g in got] == [(a, b) for a, b, _ in expected]
        assert max(abs(g.sv_max - v) for g, (_, _, v) in zip(got, expected)) <= 1e-12
        checked += 1
    assert checked >= 90


# -- two-way fitting --------------------------------------------------------

def independent_roots():
    return BayesianNetwork(
        ("A", "B", "C"), (("0", "1"),) * 3, ((), (), (0, 1)),
        ([0.3, 0.7], [0.6, 0.4],
         [[[0.9, 0.1], [0.5, 0.5]], [[0.4, 0.6], [0.2, 0.8]]]))


def test_independent_roots_marginal_query():
    bn = independent_roots()
    fit = fit_two_way(bn, Query((2, 1)), ParameterId(0, (), 1), ParameterId(1, (), 1))
    assert fit.d11 == pytest.approx(0.0, abs=1e-12)
    assert (fit.d00, fit.d10, fit.d01) == pytest.approx((1.0, 0.0, 0.0), abs=1e-12)


def test_restriction_matches_one_way_fit():
    rng = np.random.default_rng(2)
    for bn in small_networks(4, seed=2):
        q = random_query_for(bn, rng)
        coeffs = sensitivity_coefficients(bn, q)
        eligible = [p for p, sf in coeffs.items() if sf is not None]
        p1 = eligible[int(rng.integers(len(eligible)))]
        p2 = next(p for p in eligible if p.pmf != p1.pmf)
        fit = fit_two_way(bn, q, p1, p2)
        t2 = bn.value(p2)
        for t in np.linspace(0.01, 0.99, 11):
            assert fit(t, t2) == pytest.approx(coeffs[p1](t), abs=1e-9)


def test_gradient_norm_equals_sv_max():
    rng = np.random.default_rng(4)
    for bn in small_networks(5, seed=4):
        q = random_query_for(bn, rng)
        coeffs = sensitivity_coefficients(bn, q)
        # at least one member must move the query, otherwise both sides are rounding noise
        eligible = [p for p, sf in coeffs.items() if sf is not None]
        sensitive = [p for p in eligible if coeffs[p].delta ** 2 > 1e-20]
        p1 = sensitive[int(rng.integers(len(sensitive)))]
        p2 = eligible[int(rng.integers(len(eligible)))]
        while p2.pmf == p1.pmf:
            p2 = eligible[int(rng.integers(len(eligible)))]
        fit = fit_two_way(bn, q, p1, p2)
        expected = sv_max([p1, p2], coeffs, coeffs.evidence_probability)
        assert abs(fit.gradient_norm() - expected) / max(expected, 1e-30) <= 1e-6


def test_fit_rejects_same_pmf(chain):
    with pytest.raises(errors.SameCpt):
        fit_two_way(chain, Query((1, 1)), ParameterId(0, (), 0), ParameterId(0, (), 1))
