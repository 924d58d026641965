"""Tests for entry and exit times of the checkerboard pair."""

import math

import pytest

from dynamics import Configuration, parse_init
from errors import GraphError, ParameterError, SimulationError
from graph import checkerboard, find_bipartition, make_complete, make_complete_bipartite, make_cycle
from hitting import (HittingTimeEstimator, estimate_hitting_times, expected_exit_time,
                     exit_time_lower_bound, time_to_enter, time_to_exit)
from sampling import RandomStream
from schemas import InitialLaw, Params


def test_expected_exit_time():
    bipartition = find_bipartition(make_complete_bipartite(2, 3))
    params = Params(c1=1, c2=3, epsilon=0.2)
    assert expected_exit_time(bipartition, params, "plus") == pytest.approx(1 / (0.2 * 11))
    assert expected_exit_time(bipartition, params, "minus") == pytest.approx(1 / (0.2 * 9))
    assert exit_time_lower_bound(5, params) == pytest.approx(1 / 3)
    with pytest.raises(ParameterError):
        expected_exit_time(bipartition, params, "both")
    idle = Params(c1=1, c2=3, epsilon=0)
    assert expected_exit_time(bipartition, idle) == math.inf
    assert exit_time_lower_bound(5, idle) == math.inf


def test_estimator():
    estimator = HittingTimeEstimator("T")
    assert estimator.mean is None
    estimator.record(1.0)
    assert estimator.standard_error is None
    estimator.record(3.0)
    assert estimator.count == 2
    assert estimator.mean == 2.0
    assert estimator.standard_error == pytest.approx(1.0)
    with pytest.raises(SimulationError):
        estimator.record(-0.5)


def test_exit_times_match_the_exponential_mean():
    params = Params(c1=1, c2=2, epsilon=0.1)
    report = estimate_hitting_times(make_cycle(6), params, InitialLaw(kind="bernoulli", p=0.5),
                                    replicates=400, seed=3)
    assert report.n1 == report.n2 == 3
    assert report.expected_t_out_plus == pytest.approx(1 / (0.1 * 9))
    assert abs(report.mean_t_out_plus - report.expected_t_out_plus) <= 4 * report.se_t_out_plus
    assert abs(report.mean_t_out_minus - report.expected_t_out_minus) <= 4 * report.se_t_out_minus
    assert report.mean_t_out >= report.t_out_lower_bound - 3 * report.se_t_out
    assert 0 < report.mean_t_in < math.inf


def test_exit_times_on_unbalanced_costs():
    params = Params(c1=1, c2=3, epsilon=0.2)
    report = estimate_hitting_times(make_complete_bipartite(2, 3), params,
                                    InitialLaw(kind="all1"), replicates=400, seed=8,
                                    engine="graphical")
    assert abs(report.mean_t_out_plus - 1 / 2.2) <= 4 * report.se_t_out_plus
    assert abs(report.mean_t_out_minus - 1 / 1.8) <= 4 * report.se_t_out_minus


def test_without_defection_only_entry_is_measured():
    params = Params(c1=1, c2=2, epsilon=0.0)
    report = estimate_hitting_times(make_cycle(6), params, InitialLaw(kind="bernoulli", p=0.5),
                                    replicates=20, seed=1)
    assert report.mean_t_in is not None
    assert report.mean_t_out is None
    assert report.expected_t_out_plus is None
    assert report.t_out_lower_bound is None


def test_same_seed_same_report():
    params = Params(c1=1, c2=2, epsilon=0.3)
    args = (make_cycle(8), params, InitialLaw(kind="bernoulli", p=0.5))
    assert estimate_hitting_times(*args, replicates=5, seed=2) == \
        estimate_hitting_times(*args, replicates=5, seed=2)


def test_time_to_enter_from_the_pair_is_zero():
    graph = make_cycle(6)
    xi_plus, xi_minus = checkerboard(find_bipartition(graph))
    params = Params(c1=1, c2=2, epsilon=0.1)
    assert time_to_enter(graph, params, Configuration(xi_minus), xi_plus, RandomStream(0)) == 0.0


def test_time_to_exit_needs_defection():
    graph = make_cycle(6)
    xi_plus, _ = checkerboard(find_bipartition(graph))
    with pytest.raises(ParameterError):
        time_to_exit(graph, Params(c1=1, c2=2, epsilon=0), Configuration(xi_plus),
                     RandomStream(0))


@pytest.mark.parametrize("graph", [make_complete(3), make_cycle(5)])
def test_rejects_non_bipartite_graphs(graph):
    with pytest.raises(GraphError):
        estimate_hitting_times(graph, Params(c1=1, c2=2, epsilon=0.1), InitialLaw(kind="all1"),
                               replicates=2)


def test_rejects_initial_law_inside_the_pair():
    with pytest.raises(ParameterError):
        estimate_hitting_times(make_cycle(6), Params(c1=1, c2=2, epsilon=0.1),
                               parse_init("explicit:1,2,1,2,1,2"), replicates=2)
    with pytest.raises(ParameterError):
        estimate_hitting_times(make_cycle(6), Params(c1=1, c2=2, epsilon=0.1),
                               InitialLaw(kind="all1"), replicates=0)
