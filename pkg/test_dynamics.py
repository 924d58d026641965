"""Tests for configurations, flip rates and initial laws."""

import numpy as np
import pytest
from pydantic import ValidationError

from dynamics import (Configuration, flip_rate, flip_rates, initial_configuration, hamming,
                      neighbor_fraction, parse_init, task_one_count, total_rate)
from errors import ParameterError
from graph import make_complete, make_cycle, make_edgeless, make_path
from sampling import RandomStream
from schemas import InitialLaw, Params


def test_params_validation():
    Params(c1=1, c2=1, epsilon=0)
    with pytest.raises(ValidationError):
        Params(c1=2, c2=1, epsilon=0.1)
    with pytest.raises(ValidationError):
        Params(c1=1, c2=2, epsilon=1.5)
    with pytest.raises(ValidationError):
        Params(c1=0, c2=2, epsilon=0.5)


def test_configuration_validation():
    with pytest.raises(ParameterError):
        Configuration.of([1, 3])
    c = Configuration.of([1, 2, 1])
    assert len(c) == 3
    assert task_one_count(c) == 2
    assert c == c.copy()


def test_neighbor_fraction():
    g = make_path(3)
    c = Configuration.of([1, 2, 1])
    assert neighbor_fraction(g, c, 1, 1) == 1.0
    assert neighbor_fraction(g, c, 0, 2) == 1.0
    assert neighbor_fraction(make_edgeless(2), Configuration.of([1, 2]), 0, 1) == 0.0
    with pytest.raises(ParameterError):
        neighbor_fraction(g, c, 3, 1)
    with pytest.raises(ParameterError):
        neighbor_fraction(g, c, 0, 3)


def test_flip_rate_formula():
    """Task-1 vertices leave at c1(eps + (1-eps)(1-f2)), task-2 at c2(eps + (1-eps)(1-f1))."""
    params = Params(c1=1, c2=2, epsilon=0.25)
    g = make_complete(4)
    c = Configuration.of([1, 1, 2, 2])
    # vertex 0: f2 = 2/3
    assert flip_rate(g, c, params, 0) == pytest.approx(1 * (0.25 + 0.75 * (1 / 3)))
    # vertex 2: f1 = 2/3
    assert flip_rate(g, c, params, 2) == pytest.approx(2 * (0.25 + 0.75 * (1 / 3)))


def test_k2_total_rate():
    """K2 with eps=0.3 in (1, 2): each vertex flips only by defection."""
    params = Params(c1=1, c2=2, epsilon=0.3)
    g = make_complete(2)
    assert total_rate(g, Configuration.of([1, 2]), params) == pytest.approx(0.3 * 1 + 0.3 * 2)
    assert total_rate(make_complete(2), Configuration.of([1, 2]),
                      Params(c1=1, c2=2, epsilon=0)) == 0.0


def test_isolated_vertices_flip_at_cost():
    params = Params(c1=1, c2=3, epsilon=0.0)
    rates = flip_rates(make_edgeless(2), Configuration.of([1, 2]), params)
    assert rates.tolist() == [1.0, 3.0]


def test_vectorised_rates_match_scalar():
    params = Params(c1=0.5, c2=1.5, epsilon=0.1)
    g = make_cycle(9)
    rng = np.random.default_rng(3)
    c = Configuration(rng.integers(1, 3, size=9))
    rates = flip_rates(g, c, params)
    for x in range(9):
        assert rates[x] == pytest.approx(flip_rate(g, c, params, x), rel=1e-14)


def test_initial_laws():
    g = make_cycle(200)
    rng = RandomStream(1, 0, 0)
    assert initial_configuration(g, InitialLaw(kind="all1"), rng).tasks.tolist() == [1] * 200
    assert task_one_count(initial_configuration(g, InitialLaw(kind="all2"), rng)) == 0
    bern = initial_configuration(g, InitialLaw(kind="bernoulli", p=0.5), rng)
    assert 60 < task_one_count(bern) < 140
    explicit = initial_configuration(make_path(3), parse_init("explicit:1,2,2"), rng)
    assert explicit.to_list() == [1, 2, 2]
    with pytest.raises(ParameterError):
        initial_configuration(make_path(4), parse_init("explicit:1,2,2"), rng)


def test_parse_init():
    assert parse_init("all1").kind == "all1"
    assert parse_init("bernoulli:0.25").p == 0.25
    assert parse_init("bernoulli:0.25").label() == "bernoulli:0.25"
    for bad in ("bogus", "bernoulli", "bernoulli:x", "bernoulli:2", "explicit:1,3"):
        with pytest.raises(ParameterError):
            parse_init(bad)


def test_hamming():
    assert hamming(np.array([1, 2, 1]), np.array([2, 2, 2])) == 2
