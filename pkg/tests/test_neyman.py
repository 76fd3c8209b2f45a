import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from countstat.neyman import (
    Interval,
    OrderingRule,
    accepted_set,
    belt_with_step,
    central_interval_exact,
    construct_belt,
    coverage,
    coverage_scan,
    default_d_max,
    interval_for_observation,
    interval_table,
    root_n_interval,
)

CL = 0.6827
TEST_S = [0.1, 0.5, 1, 2, 3.8, 5, 10, 15, 20]


def pois(d, s):
    return math.exp(-s) * s**d / math.factorial(d) if s > 0 else float(d == 0)


def brute_force_set(s, cl, key, d_top=30):
    # explicit enumeration: rank every D, then take counts until the sum reaches cl
    ranked = sorted(range(d_top + 1), key=lambda d: (-key(d, s), d))
    chosen, total = [], 0.0
    for d in ranked:
        chosen.append(d)
        total += pois(d, s)
        if total >= cl:
            break
    return sorted(chosen)


def mode_key(d, s):
    return pois(d, s)


def fc_key(d, s):
    return pois(d, s) / pois(d, d)


@pytest.fixture(scope="module")
def belts():
    # wide grid so every D <= 50 is accepted somewhere
    return {r: belt_with_step(r, CL, 80.0, 0.02) for r in ("central", "fc", "mode")}


def test_rule_parsing():
    assert OrderingRule.parse("fc") is OrderingRule.FELDMAN_COUSINS
    assert OrderingRule.parse("Mode_Centered") is OrderingRule.MODE_CENTERED
    assert OrderingRule.parse("rootn") is OrderingRule.ROOT_N
    assert not OrderingRule.ROOT_N.uses_belt
    with pytest.raises(ValueError):
        OrderingRule.parse("bayesian")


@pytest.mark.parametrize("rule", ["central", "fc", "mode"])
def test_zero_signal_accepts_only_zero(rule):
    assert list(accepted_set(0.0, rule, 0.68)) == [0]


def test_s3_sets_frozen():
    assert list(accepted_set(3.0, "mode", 0.68)) == [1, 2, 3, 4]
    assert list(accepted_set(3.0, "fc", 0.68)) == [2, 3, 4, 5]


@pytest.mark.parametrize("s", [0.3, 1.0, 2.5, 3.0, 4.2, 7.7, 12.0])
@pytest.mark.parametrize("cl", [0.5, 0.68, 0.9])
def test_ranked_sets_match_enumeration(s, cl):
    assert list(accepted_set(s, "mode", cl)) == brute_force_set(s, cl, mode_key)
    assert list(accepted_set(s, "fc", cl)) == brute_force_set(s, cl, fc_key)


@settings(max_examples=60, deadline=None)
@given(st.floats(0.01, 30.0), st.sampled_from(["mode", "fc"]), st.floats(0.3, 0.95))
def test_ranked_sets_are_minimal(s, rule, cl):
    d = accepted_set(s, rule, cl)
    probs = {k: pois(int(k), s) for k in d}
    assert math.fsum(probs.values()) >= cl - 1e-12
    key = mode_key if rule == "mode" else fc_key
    # the last-added count is the lowest ranked one in the set
    last = min(d, key=lambda k: (key(int(k), s), -k))
    assert math.fsum(probs.values()) - probs[last] < cl


@settings(max_examples=60, deadline=None)
@given(st.floats(0.0, 30.0), st.floats(0.3, 0.95))
def test_central_sets_contiguous_with_enough_mass(s, cl):
    d = accepted_set(s, "central", cl)
    assert np.all(np.diff(d) == 1)
    assert math.fsum(pois(int(k), s) for k in d) >= cl - 1e-12


def test_accepted_set_errors():
    with pytest.raises(ValueError):
        accepted_set(20.0, "central", CL, d_max=25)
    with pytest.raises(ValueError):
        accepted_set(1.0, "root-n", CL)
    with pytest.raises(ValueError):
        accepted_set(1.0, "fc", 1.0)
    with pytest.raises(ValueError):
        accepted_set(-1.0, "fc", CL)


def test_default_d_max_leaves_tiny_tail():
    d = default_d_max(30.0)
    tail = 1.0 - math.fsum(pois(k, 30.0) for k in range(d + 1))
    assert tail < 1e-12


def test_trivial_belt():
    belt = construct_belt(0.0, 0.01, 2, "central", CL)
    assert belt.accepts(0, 0)
    assert not belt.accepts(0, 1)
    with pytest.raises(ValueError):
        construct_belt(1.0, 1.0, 5, "fc")
    with pytest.raises(ValueError):
        construct_belt(0.0, 1.0, 1, "fc")


def test_central_belt_matches_exact_interval():
    belt = construct_belt(0.0, 25.0, 2501, "central", CL)
    exact = central_interval_exact(17, CL)
    got = interval_for_observation(belt, 17)
    assert abs(got.lower - exact.lower) <= belt.step + 1e-12
    assert abs(got.upper - exact.upper) <= belt.step + 1e-12
    assert interval_for_observation(belt, 0).lower == 0.0


def test_never_accepted_count_raises():
    belt = construct_belt(0.0, 5.0, 101, "fc", CL)
    with pytest.raises(ValueError):
        interval_for_observation(belt, 30)


def test_central_exact_tail_equations():
    from countstat.special import reg_gamma_lower, reg_gamma_upper

    alpha = (1 - CL) / 2
    iv = central_interval_exact(17, CL)
    # direct tail sums at the returned endpoints
    below_u = math.fsum(pois(d, iv.upper) for d in range(18))
    above_l = 1.0 - math.fsum(pois(d, iv.lower) for d in range(17))
    assert below_u == pytest.approx(alpha, abs=1e-9)
    assert above_l == pytest.approx(alpha, abs=1e-9)
    assert reg_gamma_upper(18, iv.upper) == pytest.approx(alpha, abs=1e-12)
    assert reg_gamma_lower(17, iv.lower) == pytest.approx(alpha, abs=1e-12)
    assert iv.lower == pytest.approx(12.9177, abs=1e-3)
    assert iv.upper == pytest.approx(22.2038, abs=1e-3)
    zero = central_interval_exact(0, CL)
    assert zero.lower == 0.0
    assert zero.upper == pytest.approx(-math.log(alpha), rel=1e-9)


def test_root_n_interval():
    iv = root_n_interval(17)
    assert iv.lower == pytest.approx(12.88, abs=0.005)
    assert iv.upper == pytest.approx(21.12, abs=0.005)
    assert iv.width == pytest.approx(2 * math.sqrt(17))
    assert 15.0 in iv and 25.0 not in iv


def test_interval_rejects_reversed_bounds():
    with pytest.raises(ValueError):
        Interval(2.0, 1.0)


@pytest.mark.parametrize("rule", ["central", "mode", "fc"])
def test_interval_curves_monotone(belts, rule):
    lower, upper = belts[rule].intervals(np.arange(51))
    assert not np.isnan(lower).any()
    assert np.all(np.diff(lower) >= 0)
    assert np.all(np.diff(upper) >= 0)


def test_central_intervals_are_widest(belts):
    counts = np.arange(51)
    lo_c, hi_c = interval_table("central", counts, CL)
    for rule in ("fc", "mode"):
        lo, hi = belts[rule].intervals(counts)
        assert np.all(hi_c - lo_c >= hi - lo - belts[rule].step)


def test_belt_edges_are_set_min_and_max():
    belt = construct_belt(0.0, 10.0, 201, "fc", 0.9)
    for i, s in enumerate(belt.s_grid):
        d = accepted_set(s, "fc", 0.9, belt.d_max)
        assert (belt.d_lo[i], belt.d_hi[i]) == (d[0], d[-1])


def test_coverage_examples():
    assert coverage("central", CL, 0.0) == pytest.approx(1.0)
    assert coverage("root-n", CL, 1.0) < CL
    for rule in ("central", "fc", "mode"):
        assert coverage(rule, CL, 5.0) >= CL


def test_coverage_on_test_grid():
    for rule in ("central", "fc", "mode"):
        scan = coverage_scan(rule, CL, s_values=TEST_S)
        assert np.all(scan.coverage >= CL - 1e-3), rule
    root = coverage_scan("root-n", CL, s_values=TEST_S)
    assert np.any((root.coverage < CL - 0.05) & (root.s < 2))


def test_coverage_frozen_values():
    scan = coverage_scan("central", CL, s_values=[0.1, 3.8, 20])
    np.testing.assert_allclose(scan.coverage, [0.9048, 0.8017, 0.6867], atol=1e-4)
    assert scan.grid_step is None
    fc = coverage_scan("fc", CL, s_values=[3.8])
    assert fc.grid_step == pytest.approx(0.005, abs=1e-12)
    assert fc.coverage[0] == pytest.approx(0.7082, abs=1e-4)


def test_coverage_rejects_negative_signal():
    with pytest.raises(ValueError):
        coverage("central", CL, -0.5)
