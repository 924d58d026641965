"""Desk-scale runs of the headline results. All marked slow (minutes in total)."""

import numpy as np
import pytest

from dual import agreement_probability, project, simulate_dual_native
from dynamics import Configuration, initial_configuration
from engine import simulate
from exact import b_of, u1_bar
from graph import checkerboard, find_bipartition, make_complete, make_cycle
from hitting import (HittingTimeEstimator, exit_time_lower_bound, expected_exit_time,
                     time_to_exit)
from sampling import RandomStream
from schemas import Budget, InitialLaw, Params

pytestmark = pytest.mark.slow

HALF = InitialLaw(kind="bernoulli", p=0.5)


@pytest.mark.parametrize("eps", [0.02, 0.1, 0.3, 0.7])
def test_complete_graph_matches_fixed_point(eps):
    graph = make_complete(1000)
    params = Params(c1=1, c2=2, epsilon=eps)
    values = [simulate(graph, params, HALF, Budget(updates=10 ** 6), seed=1, keys=(0, r)).phi
              for r in range(3)]
    assert np.mean(values) == pytest.approx(u1_bar(b_of(eps, 1000), 1, 2), abs=0.01)


def test_complete_graph_full_defection_endpoint():
    summary = simulate(make_complete(1000), Params(c1=1, c2=2, epsilon=1.0), HALF,
                       Budget(updates=10 ** 6), seed=2)
    assert summary.phi == pytest.approx(2 / 3, abs=0.01)


def test_cycle_stays_near_half_with_rare_defection():
    graph = make_cycle(100)
    params = Params(c1=1, c2=2, epsilon=1e-3)
    for seed in range(3):
        summary = simulate(graph, params, HALF, Budget(updates=2 * 10 ** 5), seed=seed)
        assert 0.45 <= summary.phi <= 0.55


def test_cycle_resides_in_the_checkerboards():
    """Exit rate eps (N1 c1 + N2 c2) small against the return time of a birth pair."""
    graph = make_cycle(100)
    params = Params(c1=1, c2=2, epsilon=1e-6)
    for seed in range(3):
        summary = simulate(graph, params, HALF, Budget(time=10 ** 5), seed=seed)
        assert summary.residence["xi_plus"] + summary.residence["xi_minus"] >= 0.9
        assert 0.45 <= summary.phi <= 0.55


def test_cycle_absorbs_without_defection():
    graph = make_cycle(100)
    params = Params(c1=1, c2=2, epsilon=0.0)
    xi_plus, xi_minus = checkerboard(find_bipartition(graph))
    for seed in range(3):
        short = simulate(graph, params, HALF, Budget(time=5 * 10 ** 4), seed=seed)
        long = simulate(graph, params, HALF, Budget(time=10 ** 5), seed=seed)
        assert short.absorbed and short.absorbed_at == long.absorbed_at
        assert short.final_config in (xi_plus.tolist(), xi_minus.tolist())
        # after absorption X_t = N / 2
        extra = long.phi * 10 ** 5 - short.phi * 5 * 10 ** 4
        assert extra == pytest.approx(0.5 * 5 * 10 ** 4, rel=1e-9)


def test_exit_time_from_the_checkerboard():
    graph = make_cycle(50)
    bipartition = find_bipartition(graph)
    xi_plus, _ = checkerboard(bipartition)
    params = Params(c1=1, c2=2, epsilon=0.01)
    estimator = HittingTimeEstimator("T_out")
    for r in range(1000):
        estimator.record(time_to_exit(graph, params, Configuration(xi_plus),
                                      RandomStream(5, 1, r)))
    expected = expected_exit_time(bipartition, params, "plus")
    assert expected == pytest.approx(1 / (0.01 * (25 + 50)))
    assert abs(estimator.mean - expected) <= 3 * estimator.standard_error
    assert estimator.mean >= exit_time_lower_bound(50, params)


def test_annihilating_walks_go_extinct():
    graph = make_cycle(100)
    params = Params(c1=1, c2=2, epsilon=0.0)
    for r in range(100):
        config = initial_configuration(graph, HALF, RandomStream(3, 1, r))
        trajectory = simulate_dual_native(100, params, project(graph, config), horizon=0.0,
                                          seed=3, until_extinct=True, record_events=False,
                                          replicate=r)
        counts = trajectory.counts
        assert all(b <= a for a, b in zip(counts, counts[1:]))
        assert counts[-1] == 0
        assert trajectory.extinction_time is not None


@pytest.mark.parametrize("eps", [1e-3, 1e-5])
def test_large_ring_with_rare_defection(eps):
    """Neighbours rarely agree and phi stays at 1/2."""
    params = Params(c1=1, c2=2, epsilon=eps)
    report = agreement_probability(1000, params, 0.5, horizon=400.0, replicates=3, seed=1)
    assert 0.475 <= report.phi <= 0.525
    assert report.agreement <= 0.05
