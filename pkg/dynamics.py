"""Configurations and the transition rates of the task dynamics.

A vertex x at task 1 switches to task 2 at rate
    c1 * (eps + (1 - eps) * (1 - f2(x)))
and a vertex at task 2 switches to task 1 at rate
    c2 * (eps + (1 - eps) * (1 - f1(x)))
where fi(x) is the fraction of neighbours of x at task i, taken to be zero
for isolated vertices (which therefore switch at rate c_i).
"""

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from errors import ParameterError
from graph import Graph
from sampling import RandomStream
from schemas import InitialLaw, Params


@dataclass
class Configuration:
    """Task assignment: ``tasks[x]`` is 1 or 2."""

    tasks: np.ndarray

    def __post_init__(self):
        self.tasks = np.asarray(self.tasks, dtype=np.int8)
        if self.tasks.ndim != 1:
            raise ParameterError("configuration must be one-dimensional")
        if not np.all((self.tasks == 1) | (self.tasks == 2)):
            raise ParameterError("every task must be 1 or 2")

    def __len__(self) -> int:
        return len(self.tasks)

    def __eq__(self, other) -> bool:
        return isinstance(other, Configuration) and np.array_equal(self.tasks, other.tasks)

    def copy(self) -> "Configuration":
        return Configuration(self.tasks.copy())

    def to_list(self):
        return self.tasks.tolist()

    @classmethod
    def of(cls, tasks: Sequence[int]) -> "Configuration":
        return cls(np.asarray(tasks, dtype=np.int8))


def _check_vertex(graph: Graph, config: Configuration, x: int):
    if len(config) != graph.vertex_count:
        raise ParameterError(
            f"configuration has {len(config)} entries, graph has {graph.vertex_count} vertices"
        )
    if not 0 <= x < graph.vertex_count:
        raise ParameterError(f"vertex {x} out of range 0..{graph.vertex_count - 1}")


def neighbor_fraction(graph: Graph, config: Configuration, x: int, i: int) -> float:
    """Fraction of neighbours of x performing task i (zero for isolated x)."""
    _check_vertex(graph, config, x)
    if i not in (1, 2):
        raise ParameterError(f"task must be 1 or 2, got {i}")
    nbrs = graph.neighbor_array(x)
    if nbrs.size == 0:
        return 0.0
    return int(np.count_nonzero(config.tasks[nbrs] == i)) / int(nbrs.size)


def flip_rate(graph: Graph, config: Configuration, params: Params, x: int) -> float:
    """Rate at which vertex x switches task in configuration ``config``."""
    _check_vertex(graph, config, x)
    if config.tasks[x] == 1:
        return params.c1 * (params.epsilon + (1 - params.epsilon)
                            * (1 - neighbor_fraction(graph, config, x, 2)))
    return params.c2 * (params.epsilon + (1 - params.epsilon)
                        * (1 - neighbor_fraction(graph, config, x, 1)))


def rates_from_counts(tasks: np.ndarray, task_one_neighbors: np.ndarray, degrees: np.ndarray,
                      params: Params) -> np.ndarray:
    """Vectorised flip rates from integer neighbour counts.

    Args:
        tasks: tasks of the vertices concerned
        task_one_neighbors: number of neighbours at task 1, per vertex
        degrees: degree per vertex

    Returns:
        Array of flip rates, same length as ``tasks``
    """
    deg = degrees.astype(np.float64)
    n1 = task_one_neighbors.astype(np.float64)
    has_nbrs = degrees > 0
    f1 = np.divide(n1, deg, out=np.zeros_like(deg), where=has_nbrs)
    f2 = np.divide(deg - n1, deg, out=np.zeros_like(deg), where=has_nbrs)
    eps = params.epsilon
    return np.where(
        tasks == 1,
        params.c1 * (eps + (1 - eps) * (1 - f2)),
        params.c2 * (eps + (1 - eps) * (1 - f1)),
    )


def task_one_neighbor_counts(graph: Graph, tasks: np.ndarray) -> np.ndarray:
    """Number of task-1 neighbours of every vertex."""
    is_one = (tasks[graph.indices] == 1).astype(np.int64)
    counts = np.zeros(graph.vertex_count, dtype=np.int64)
    np.add.at(counts, np.repeat(np.arange(graph.vertex_count), graph.degrees), is_one)
    return counts


def flip_rates(graph: Graph, config: Configuration, params: Params) -> np.ndarray:
    """Flip rate of every vertex, computed from scratch."""
    if len(config) != graph.vertex_count:
        raise ParameterError("configuration size does not match the graph")
    counts = task_one_neighbor_counts(graph, config.tasks)
    return rates_from_counts(config.tasks, counts, graph.degrees, params)


def total_rate(graph: Graph, config: Configuration, params: Params) -> float:
    """Sum of the flip rates over all vertices."""
    return float(flip_rates(graph, config, params).sum())


def task_one_count(config: Configuration) -> int:
    """X: number of vertices at task 1."""
    return int(np.count_nonzero(config.tasks == 1))


def hamming(a: np.ndarray, b: np.ndarray) -> int:
    return int(np.count_nonzero(np.asarray(a) != np.asarray(b)))


def initial_configuration(graph: Graph, law: InitialLaw, rng: RandomStream) -> Configuration:
    """Draw a starting configuration from ``law``."""
    n = graph.vertex_count
    if law.kind == "all1":
        return Configuration(np.ones(n, dtype=np.int8))
    if law.kind == "all2":
        return Configuration(np.full(n, 2, dtype=np.int8))
    if law.kind == "bernoulli":
        ones = rng.generator.random(n) < law.p
        return Configuration(np.where(ones, 1, 2).astype(np.int8))
    if len(law.tasks) != n:
        raise ParameterError(f"explicit configuration has {len(law.tasks)} entries, graph has {n}")
    return Configuration.of(law.tasks)


def parse_init(text: str) -> InitialLaw:
    """Parse ``all1``, ``all2``, ``bernoulli:p`` or ``explicit:1,2,1,...``."""
    kind, _, arg = text.strip().partition(":")
    try:
        if kind in ("all1", "all2") and not arg:
            return InitialLaw(kind=kind)
        if kind == "bernoulli" and arg:
            return InitialLaw(kind="bernoulli", p=float(arg))
        if kind == "explicit" and arg:
            return InitialLaw(kind="explicit", tasks=[int(t) for t in arg.split(",")])
    except ValueError as e:
        raise ParameterError(f"malformed initial law {text!r}: {e}") from e
    raise ParameterError(f"unknown initial law {text!r}")
