import math
from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from postdiff import (
    ContractError,
    Environment,
    aggregate_metrics,
    normal_cdf,
    normal_quantile,
    required_sample_size,
    wald_test,
)
from postdiff.analysis import superior_share


def fake(pulls, successes):
    return SimpleNamespace(pulls=pulls, successes=successes)


def test_wald_examples():
    res = wald_test(100, 60, 100, 40)
    assert res.z == pytest.approx(0.2 / math.sqrt(0.0048), abs=1e-12)
    assert res.z == pytest.approx(2.8868, abs=1e-4)
    assert res.reject and res.estimated_superior_arm == 1 and not res.degenerate

    res = wald_test(100, 50, 100, 50)
    assert res.z == 0 and not res.reject and res.estimated_superior_arm is None

    res = wald_test(50, 50, 50, 50)
    assert res.z == 0 and not res.reject and res.degenerate


def test_wald_degenerate_rules():
    res = wald_test(10, 10, 12, 0)
    assert math.isinf(res.z) and res.z > 0 and res.reject and res.degenerate
    assert res.estimated_superior_arm == 1
    res = wald_test(0, 0, 20, 9)
    assert math.isnan(res.z) and not res.reject and res.degenerate
    with pytest.raises(ContractError):
        wald_test(5, 6, 5, 1)


def test_wald_matches_scipy_statistic():
    n1, s1, n2, s2 = 300, 170, 250, 120
    p1, p2 = s1 / n1, s2 / n2
    z = (p1 - p2) / math.sqrt(p1 * (1 - p1) / n1 + p2 * (1 - p2) / n2)
    assert wald_test(n1, s1, n2, s2).z == pytest.approx(z)
    p_two_sided = 2 * stats.norm.sf(abs(z))
    assert wald_test(n1, s1, n2, s2, 0.05).reject == (p_two_sided < 0.05)


@settings(max_examples=300, deadline=None)
@given(st.integers(0, 500), st.integers(0, 500), st.data())
def test_wald_antisymmetric(n1, n2, data):
    s1 = data.draw(st.integers(0, n1))
    s2 = data.draw(st.integers(0, n2))
    a = wald_test(n1, s1, n2, s2)
    b = wald_test(n2, s2, n1, s1)
    assert a.reject == b.reject
    if math.isnan(a.z):
        assert math.isnan(b.z)
    else:
        assert a.z == -b.z
    if a.estimated_superior_arm is None:
        assert b.estimated_superior_arm is None
    else:
        assert a.estimated_superior_arm == 3 - b.estimated_superior_arm


def test_normal_cdf_examples():
    assert normal_cdf(0.0) == 0.5
    assert normal_cdf(1.959964) == pytest.approx(0.975, abs=1e-6)
    assert normal_quantile(0.8) == pytest.approx(0.841621, abs=1e-5)


def test_normal_functions_against_scipy():
    xs = np.linspace(-8, 8, 2001)
    assert max(abs(normal_cdf(x) - stats.norm.cdf(x)) for x in xs) <= 1e-7
    ps = np.concatenate([np.linspace(1e-6, 1 - 1e-6, 1001), [1e-12, 0.025, 0.975]])
    assert max(abs(normal_quantile(p) - stats.norm.ppf(p)) for p in ps) <= 1e-7


def test_quantile_inverts_cdf():
    for x in np.linspace(-6, 6, 1201):
        assert normal_quantile(normal_cdf(x)) == pytest.approx(x, abs=1e-6)


@pytest.mark.parametrize("p", [0.0, 1.0, -0.5, 1.5])
def test_quantile_domain(p):
    with pytest.raises(ContractError):
        normal_quantile(p)


def test_required_sample_size_examples():
    assert required_sample_size(0.1) == 785
    assert required_sample_size(0.2) == 197
    assert required_sample_size(1.0) == 8


def test_required_sample_size_oracle():
    z = stats.norm.ppf(0.975) + stats.norm.ppf(0.8)
    for w in (0.05, 0.1, 0.15, 0.2, 0.3, 0.5):
        assert required_sample_size(w) == math.ceil(z * z / (w * w))


@pytest.mark.parametrize("w", [0.0, -0.1, 1.5])
def test_required_sample_size_domain(w):
    with pytest.raises(ContractError):
        required_sample_size(w)


@settings(max_examples=200, deadline=None)
@given(st.floats(0.01, 0.99), st.floats(0.01, 0.99), st.floats(0.01, 0.2), st.floats(0.01, 0.2))
def test_required_sample_size_monotone(w1, w2, a1, a2):
    lo, hi = sorted((w1, w2))
    assert required_sample_size(hi) <= required_sample_size(lo)
    lo, hi = sorted((a1, a2))
    assert required_sample_size(0.2, hi) <= required_sample_size(0.2, lo)


def test_aggregate_fpr_example():
    env = Environment.from_effect_size(0.0)
    rejecting = fake((10, 10), (10, 0))
    quiet = fake((10, 10), (5, 5))
    summary = aggregate_metrics([rejecting, quiet, rejecting, quiet], env)
    assert summary.fpr == 0.5 and summary.fpr_se == 0.25
    assert summary.power is None and summary.prop_opt is None
    assert summary.type_s == 0.0


def test_aggregate_all_on_arm_one():
    env = Environment.from_effect_size(0.1)
    summary = aggregate_metrics([fake((20, 0), (11, 0))], env)
    assert summary.prop_opt == 1.0
    assert summary.prop_sup == 1.0
    assert summary.reward == pytest.approx(11 / 20)


def test_aggregate_type_s_and_reward_se():
    env = Environment.from_effect_size(0.2)
    wrong = fake((50, 50), (10, 40))  # rejects, picks arm 2
    right = fake((50, 50), (40, 10))
    none = fake((50, 50), (25, 25))
    summary = aggregate_metrics([wrong, right, none, none], env)
    assert summary.power == 0.5
    assert summary.type_s == 0.25
    assert summary.type_s_se == pytest.approx(math.sqrt(0.25 * 0.75 / 4))
    rewards = np.array([0.5, 0.5, 0.5, 0.5])
    assert summary.reward == pytest.approx(rewards.mean())
    assert summary.reward_se == pytest.approx(rewards.std(ddof=1) / 2)
    assert summary.prop_opt == pytest.approx(0.5)


def test_aggregate_errors():
    env = Environment.from_effect_size(0.1)
    with pytest.raises(ContractError):
        aggregate_metrics([], env)
    with pytest.raises(ContractError):
        aggregate_metrics([fake((5, 5), (1, 1)), fake((6, 5), (1, 1))], env)


def test_superior_share_rules():
    assert superior_share((30, 70), (20, 20)) == 0.3
    assert superior_share((30, 70), (15, 35)) == 0.5
    assert superior_share((0, 10), (0, 3)) == 1.0


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.integers(1, 40), st.integers(1, 40), st.floats(0, 1), st.floats(0, 1)), min_size=1, max_size=30),
       st.floats(0.0, 1.0))
def test_aggregate_invariants(rows, w):
    results = []
    for n1, n2, f1, f2 in rows:
        scale = 80 - n1
        results.append(fake((n1, scale), (int(f1 * n1), int(f2 * scale))))
    summary = aggregate_metrics(results, Environment.from_effect_size(w))
    assert summary.type_s <= summary.reject_rate
    for value in (summary.reject_rate, summary.type_s, summary.reward, summary.prop_sup):
        assert 0.0 <= value <= 1.0
    if summary.prop_opt is not None:
        assert 0.0 <= summary.prop_opt <= 1.0
