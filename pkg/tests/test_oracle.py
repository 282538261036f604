import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from taim import oracle
from taim.diffusion import Status
from taim.graph import generate_line_graph
from taim.oracle import (
    CLOSED_FORM_LIMIT,
    LIMIT_RATIO,
    CapacityError,
    OracleLimits,
    exact_beta,
    exact_g,
    exact_optimal_adaptive,
    exact_optimal_nonadaptive,
    future_distribution,
    gap_closed_forms,
    gap_series,
    line_influence,
    line_influence_series,
    simulate_lemma2_adaptive_policy,
)
from taim.process import ProcessConfig, run_trials
from taim.verify import random_instance

from conftest import make_graph, star


def test_exact_g_examples(det_star):
    g = make_graph(2, [(0, 1, 0.5)])
    assert exact_g(g, Status.empty(g), [0], 1) == 1.5
    assert exact_g(det_star, Status.empty(det_star), [0], 3) == 10.0
    assert exact_g(g, Status.empty(g), [], 4) == 0.0


def test_exact_g_hand_enumeration():
    # 0 -> 1 (0.5), 1 -> 2 (0.4), 0 -> 2 (0.3); t = 2
    g = make_graph(3, [(0, 1, 0.5), (1, 2, 0.4), (0, 2, 0.3)])
    p_reach_2 = 1 - (1 - 0.3) * (1 - 0.5 * 0.4)
    assert exact_g(g, Status.empty(g), [0], 2) == pytest.approx(1 + 0.5 + p_reach_2, abs=1e-12)
    assert exact_g(g, Status.empty(g), [0], 1) == pytest.approx(1 + 0.5 + 0.3, abs=1e-12)


def test_exact_g_respects_observed_edges():
    g = make_graph(3, [(0, 1, 0.5), (0, 2, 0.5)])
    st_ = Status.from_sets(g, active=[0], dead=[(0, 1)])
    assert exact_g(g, st_, [], 1) == pytest.approx(1.5)


def test_exact_g_capacity():
    g = make_graph(25, [(i, i + 1, 0.5) for i in range(24)])
    with pytest.raises(CapacityError):
        exact_g(g, Status.empty(g), [0], 24)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_exact_g_monotone_submodular(seed):
    rng = np.random.default_rng(seed)
    g, st_ = random_instance(rng, n_max=5, m_max=7)
    t = int(rng.integers(1, 3))
    nodes = range(g.n)
    f = {S: exact_g(g, st_, S, t) for r in range(3) for S in itertools.combinations(nodes, r)}
    for S, val in f.items():
        for x in nodes:
            if x in S or len(S) >= 2:
                continue
            Sx = tuple(sorted(S + (x,)))
            assert f[Sx] >= val - 1e-12
    for x, y in itertools.permutations(nodes, 2):
        gain_alone = f[(x,)] - f[()]
        gain_after = f[tuple(sorted((x, y)))] - f[(y,)]
        assert gain_after <= gain_alone + 1e-12


def test_future_distribution_sums_to_one():
    g, st_ = random_instance(np.random.default_rng(2))
    dist = future_distribution(g, st_, 2, [int(np.flatnonzero(~st_.active)[0])])
    assert math.fsum(w for w, _ in dist) == pytest.approx(1.0, abs=1e-12)


def test_exact_beta_examples():
    g = make_graph(1, [])
    st_ = Status.empty(g)
    assert exact_beta(g, st_, 1, 2, 0) == exact_beta(g, st_, 1, 2, 1) == 1.0
    g, st_ = random_instance(np.random.default_rng(5), n_max=6, m_max=8)
    first = oracle.exact_greedy(g, st_, 3, 2)
    assert exact_beta(g, st_, 2, 3, 2) == pytest.approx(exact_g(g, st_, first, 3), abs=1e-12)


def test_exact_beta_deterministic_argmax(two_stars):
    st_ = Status.empty(two_stars)
    betas = [exact_beta(two_stars, st_, 2, 3, i) for i in range(3)]
    assert max(range(3), key=lambda i: (betas[i], i)) == 2


def test_of_decide_t1():
    g = make_graph(4, [(0, 1, 0.5), (2, 3, 0.5)])
    seeds, _ = oracle.of_decide(g, Status.empty(g), 1, 2)
    assert seeds == [0, 2]


def test_adaptive_deterministic_equals_nonadaptive(two_stars):
    for T, K in [(1, 1), (2, 2), (3, 1)]:
        ad = exact_optimal_adaptive(two_stars, T, K, OracleLimits(max_nodes=10, max_unobserved=12))
        assert ad == pytest.approx(exact_optimal_nonadaptive(two_stars, T, K)[1], abs=1e-12)


def test_adaptive_line_n2_dominates_wait_reseed_policy():
    g = generate_line_graph(2)
    assert exact_optimal_adaptive(g, 4, 2) >= gap_closed_forms(2).delta_ad - 1e-12


def test_adaptive_zero_budget():
    g = make_graph(3, [(0, 1, 0.5)])
    assert exact_optimal_adaptive(g, 2, 0) == 0.0


def test_adaptive_capacity():
    g = generate_line_graph(5)
    with pytest.raises(CapacityError):
        exact_optimal_adaptive(g, 4, 2)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 10_000))
def test_adaptive_at_least_nonadaptive(seed):
    rng = np.random.default_rng(seed)
    g, _ = random_instance(rng, n_max=5, m_max=6, rounds=0)
    T, K = int(rng.integers(1, 4)), int(rng.integers(1, 3))
    assert exact_optimal_adaptive(g, T, K) >= exact_optimal_nonadaptive(g, T, K)[1] - 1e-12


def test_nonadaptive_examples(det_star):
    seeds, val = exact_optimal_nonadaptive(generate_line_graph(2), 4, 2)
    assert val == pytest.approx(3.25, abs=1e-12)
    # v_1 together with v_3 (= v_{N+1}); the {v_1, v_2} reading is suboptimal
    assert seeds == (0, 2)
    assert exact_g(generate_line_graph(2), Status.empty(generate_line_graph(2)), [0, 1], 4) < 3.25
    g = make_graph(3, [(0, 1, 0.5), (1, 2, 0.5)])
    assert exact_optimal_nonadaptive(g, 2, 3)[1] == 3.0
    assert exact_optimal_nonadaptive(det_star, 1, 1) == ((0,), 10.0)


def test_gap_closed_forms_n2():
    inst = gap_closed_forms(2)
    assert inst.p == 0.5
    assert inst.delta_ad == pytest.approx(3.5625, rel=1e-12)
    assert inst.delta_nonad == pytest.approx(3.25, rel=1e-12)
    assert inst.ratio == pytest.approx(3.5625 / 3.25, rel=1e-12)
    assert inst.S(1) == pytest.approx(1.5)


@pytest.mark.parametrize("N", [2, 3, 5, 10, 50])
def test_closed_forms_match_sums(N):
    inst = gap_closed_forms(N)
    ad, nonad = gap_series(N)
    assert inst.delta_ad == pytest.approx(ad, rel=1e-9)
    assert inst.delta_nonad == pytest.approx(nonad, rel=1e-9)


@pytest.mark.parametrize("p,t", [(0.5, 1), (0.9, 7), (0.3, 12), (1.0, 4)])
def test_line_influence_forms(p, t):
    assert line_influence(p, t) == pytest.approx(line_influence_series(p, t), rel=1e-12)


def test_gap_limits():
    assert LIMIT_RATIO == pytest.approx(3.13630512, abs=1e-8)
    assert CLOSED_FORM_LIMIT == pytest.approx((1 - 2 * math.exp(-2)) / (1 - math.exp(-1)), rel=1e-12)
    assert abs(gap_closed_forms(100_000).ratio - CLOSED_FORM_LIMIT) < 1e-4


def test_gap_rejects_small_N():
    with pytest.raises(ValueError):
        gap_closed_forms(1)


@pytest.mark.parametrize("N,trials", [(2, 200_000), (10, 100_000)])
def test_gap_simulation(N, trials):
    x = oracle.gap_policy_samples(N, trials, np.random.default_rng(N))
    assert abs(x.mean() - gap_closed_forms(N).delta_ad) <= 3 * x.std(ddof=1) / math.sqrt(trials)


def test_gap_deterministic_line():
    assert simulate_lemma2_adaptive_policy(4, 100, 0, p=1.0) == 9.0


def test_gap_kernel_matches_generic_runner():
    """The compiled simulation and the generic process runner agree in law."""
    N, trials = 3, 3000
    g = generate_line_graph(N)
    summary = run_trials(g, oracle.WaitThenReseedPolicy(), ProcessConfig(2 * N, 2, trials, master_seed=4))
    x = oracle.gap_policy_samples(N, 100_000, np.random.default_rng(1))
    se = math.sqrt(summary.stddev**2 / trials + x.var(ddof=1) / x.size)
    assert abs(summary.mean - x.mean()) <= 3 * se
    assert abs(summary.mean - gap_closed_forms(N).delta_ad) <= 3 * summary.stddev / math.sqrt(trials)


def test_exact_h_and_metrics_ranges():
    rng = np.random.default_rng(9)
    for _ in range(5):
        g, st_ = random_instance(rng, n_max=5, m_max=6)
        inactive = np.flatnonzero(~st_.active)
        if inactive.size < 2:
            continue
        v, s = inactive[:2].tolist()
        for t in (1, 2):
            assert 0.0 <= oracle.exact_ma(g, st_, [s], v, t) <= 1.0
            assert 0.0 <= oracle.exact_mt(g, st_, [s], v, t) <= 1.0
            assert oracle.exact_h(g, st_, [s], v, t, 0) >= 0.0


def test_exact_mt_t1_is_one():
    g = make_graph(3, [(0, 1, 0.5), (1, 2, 0.5)])
    assert oracle.exact_mt(g, Status.empty(g), [], 0, 1) == 1.0


def test_exact_ma_disjoint_components(two_stars):
    st_ = Status.empty(two_stars)
    assert oracle.exact_ma(two_stars, st_, [0], 5, 2) == 1.0
