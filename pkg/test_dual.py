"""Tests for the edge dual of the ring process."""

import math

import numpy as np
import pytest

from dual import (ANNIHILATION, BIRTH, JUMP_LEFT, JUMP_RIGHT, DualState, EdgeConfiguration,
                  agreement_probability, couple_and_verify, project, reconstruct,
                  simulate_dual_native)
from dynamics import Configuration, initial_configuration
from errors import GraphError, ParameterError
from graph import make_cycle, make_path
from sampling import RandomStream
from schemas import InitialLaw, Params


def test_project_examples():
    assert project(make_cycle(6), Configuration.of([1, 2] * 3)).to_list() == [0] * 6
    assert project(make_cycle(6), Configuration.of([1] * 6)).to_list() == [1] * 6
    assert project(make_cycle(4), Configuration.of([1, 1, 2, 2])).to_list() == [1, 0, 2, 0]


def test_project_requires_ring():
    with pytest.raises(GraphError):
        project(make_path(4), Configuration.of([1, 1, 2, 2]))
    with pytest.raises(ParameterError):
        project(make_cycle(6), Configuration.of([1, 1, 2, 2]))


def test_reconstruct_inverts_projection():
    tasks = [2, 2, 1, 2, 1, 1, 1, 2]
    edges = project(make_cycle(8), Configuration.of(tasks))
    assert reconstruct(edges, 2).tolist() == tasks
    assert reconstruct(edges, 1).tolist() == [3 - t for t in tasks]


def test_flip_kinds():
    dual = DualState.from_configuration(Configuration.of([1, 1, 2, 2]))
    assert dual.edges.to_list() == [1, 0, 2, 0]

    # the type-1 particle on edge 0 moves to edge 1 and becomes type 2
    assert dual.flip_vertex(1) == JUMP_RIGHT
    assert dual.edges.to_list() == [0, 2, 2, 0]
    assert dual.tasks().tolist() == [1, 2, 2, 2]

    assert dual.flip_vertex(2) == ANNIHILATION
    assert dual.edges.to_list() == [0, 0, 0, 0]
    assert dual.particles == 0

    assert dual.flip_vertex(0) == BIRTH
    assert dual.edges.to_list() == [2, 0, 0, 2]
    assert dual.reference == 2
    assert dual.tasks().tolist() == [2, 2, 1, 2]


def test_jump_left():
    dual = DualState.from_configuration(Configuration.of([1, 1, 2, 2]))
    assert dual.flip_vertex(0) == JUMP_LEFT
    assert dual.edges.to_list() == [0, 0, 2, 2]
    assert dual.tasks().tolist() == [2, 1, 2, 2]


def test_random_flips_stay_consistent():
    rng = np.random.default_rng(5)
    tasks = rng.integers(1, 3, size=10)
    dual = DualState.from_configuration(Configuration(tasks.copy()))
    for x in rng.integers(0, 10, size=300):
        tasks[x] = 3 - tasks[x]
        dual.flip_vertex(int(x))
        assert dual.tasks().tolist() == tasks.tolist()
        assert [dual.task_at(y) for y in range(10)] == tasks.tolist()
        assert dual.edges == project(make_cycle(10), Configuration(tasks.copy()))
        assert dual.particles % 2 == 0


@pytest.mark.parametrize("states,reference", [
    ([1, 0, 0, 0], 1),      # odd particle count
    ([1, 2, 0, 0], 1),      # not a projection
    ([1, 1, 1, 1, 1], 1),   # odd ring
    ([0, 0], 1),            # too small
    ([1, 1, 1, 1], 3),
])
def test_dual_state_rejects(states, reference):
    with pytest.raises(ParameterError):
        DualState(EdgeConfiguration.of(states), reference)


def test_edge_configuration_rejects_bad_states():
    with pytest.raises(ParameterError):
        EdgeConfiguration.of([0, 3])


def test_edge_between():
    dual = DualState.from_configuration(Configuration.of([1] * 6))
    assert dual.edge_between(2, 3) == 2
    assert dual.edge_between(0, 5) == 5
    with pytest.raises(ParameterError):
        dual.edge_between(0, 2)


def test_coupling_holds():
    params = Params(c1=1, c2=2, epsilon=0.05)
    report = couple_and_verify(50, params, InitialLaw(kind="bernoulli", p=0.5), 100.0, seed=3)
    assert report.ok, report.first_mismatch
    assert report.events > 1000
    assert report.flips == report.jumps + report.births + report.annihilations
    assert report.flips <= report.events


def test_coupling_without_defection_has_no_births():
    params = Params(c1=1, c2=2, epsilon=0.0)
    report = couple_and_verify(20, params, InitialLaw(kind="bernoulli", p=0.5), 50.0, seed=1)
    assert report.ok
    assert report.births == 0


def test_coupling_rejects_odd_ring():
    with pytest.raises(ParameterError):
        couple_and_verify(7, Params(c1=1, c2=2, epsilon=0.1), InitialLaw(kind="all1"), 1.0)


@pytest.mark.slow
def test_coupling_holds_across_seeds():
    params = Params(c1=1, c2=2, epsilon=0.05)
    events = 0
    for seed in range(10):
        report = couple_and_verify(50, params, InitialLaw(kind="bernoulli", p=0.5), 200.0,
                                   seed=seed)
        assert report.ok, report.first_mismatch
        events += report.events
    assert events >= 10 ** 5


def _bernoulli_edges(n, seed):
    g = make_cycle(n)
    config = initial_configuration(g, InitialLaw(kind="bernoulli", p=0.5), RandomStream(seed, 9, 0))
    return project(g, config)


def test_native_annihilating_walks_die_out():
    params = Params(c1=1, c2=2, epsilon=0.0)
    for seed in range(5):
        trajectory = simulate_dual_native(20, params, _bernoulli_edges(20, seed), horizon=0.0,
                                          seed=seed, until_extinct=True)
        counts = trajectory.counts
        assert all(b <= a for a, b in zip(counts, counts[1:]))
        assert counts[-1] == 0
        assert trajectory.births == 0
        assert trajectory.extinction_time == trajectory.final_time
        assert len(counts) == len(trajectory.events) + 1
        assert all(c % 2 == 0 for c in counts)


def test_native_starts_extinct():
    trajectory = simulate_dual_native(6, Params(c1=1, c2=2, epsilon=0.0),
                                      EdgeConfiguration.of([0] * 6), horizon=10.0)
    assert trajectory.extinction_time == 0.0
    assert trajectory.events == []
    assert trajectory.final_time == 10.0


def test_native_jumps_are_symmetric():
    params = Params(c1=1, c2=2, epsilon=0.2)
    left = right = 0
    for seed in range(10):
        trajectory = simulate_dual_native(40, params, _bernoulli_edges(40, seed), horizon=50.0,
                                          seed=seed, record_events=False)
        left += trajectory.jumps_left
        right += trajectory.jumps_right
        assert trajectory.births > 0
        assert trajectory.final_edges.particle_count == trajectory.counts[-1]
    assert abs(left - right) <= 4 * math.sqrt(left + right)


def test_native_jumps_are_symmetric_without_defection():
    params = Params(c1=1, c2=2, epsilon=0.0)
    left = right = 0
    for seed in range(8):
        trajectory = simulate_dual_native(1000, params, _bernoulli_edges(1000, seed),
                                          horizon=30.0, seed=seed, record_events=False)
        assert trajectory.births == 0
        left += trajectory.jumps_left
        right += trajectory.jumps_right
    total = left + right
    assert total >= 10 ** 4
    assert abs(left - total / 2) <= 3 * math.sqrt(total / 4)


def test_native_rejects_wrong_length():
    with pytest.raises(ParameterError):
        simulate_dual_native(8, Params(c1=1, c2=2, epsilon=0.1), EdgeConfiguration.of([0] * 6),
                             horizon=1.0)


def test_agreement_of_independent_flips_is_half():
    """eps = 1 and equal costs: vertices flip independently and stay Bernoulli(1/2)."""
    params = Params(c1=1, c2=1, epsilon=1.0)
    report = agreement_probability(200, params, 0.5, horizon=6.0, replicates=4, seed=2)
    assert report.agreement == pytest.approx(0.5, abs=0.04)
    assert report.phi == pytest.approx(0.5, abs=0.04)
    assert report.burnin == 3.0
    assert report.window_half_width == 50


def test_agreement_without_burnin():
    params = Params(c1=1, c2=2, epsilon=0.5)
    report = agreement_probability(20, params, 0.5, horizon=2.0, replicates=2, burnin=0.0,
                                   window=3)
    assert 0.0 <= report.agreement <= 1.0
    assert report.window_half_width == 3
    with pytest.raises(ParameterError):
        agreement_probability(20, params, 0.5, horizon=2.0, replicates=2, burnin=2.0)
    with pytest.raises(ParameterError):
        agreement_probability(20, params, 0.5, horizon=2.0, replicates=0)


@pytest.mark.slow
def test_agreement_decreases_with_defection():
    values = []
    for eps in (0.01, 0.1, 0.5):
        report = agreement_probability(200, Params(c1=1, c2=2, epsilon=eps), 0.5,
                                       horizon=100.0, replicates=3, seed=1)
        values.append(report.agreement)
    assert values[0] < values[1] < values[2]
