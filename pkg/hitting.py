"""Entry and exit times for the checkerboard pair {xi_minus, xi_plus}.

On a connected bipartite graph the two checkerboard configurations are the
only absorbing states at eps = 0. For eps > 0 the process leaves them at rate
eps (N1 c1 + N2 c2) from xi_plus and eps (N1 c2 + N2 c1) from xi_minus, since
every vertex there can only switch by defecting.
"""

import math
from typing import List, Optional

import numpy as np

from config import settings
from dynamics import Configuration, initial_configuration
from engine import GillespieEngine, make_engine
from errors import GraphError, ParameterError, SimulationError
from graph import Bipartition, Graph, checkerboard, require_bipartite_connected
from logger_config import setup_logger
from sampling import RandomStream
from schemas import HittingTimeReport, InitialLaw, Params

logger = setup_logger(__name__, 'hitting.log')

# attempts at drawing an initial configuration outside {xi_minus, xi_plus}
MAX_RESAMPLES = 1000


class HittingTimeEstimator:
    """Collects per-replicate hitting times for one target event."""

    def __init__(self, label: str):
        self.label = label
        self.times: List[float] = []

    def record(self, value: float):
        if value < 0:
            raise SimulationError(f"{self.label}: negative hitting time {value}")
        self.times.append(float(value))

    @property
    def count(self) -> int:
        return len(self.times)

    @property
    def mean(self) -> Optional[float]:
        return float(np.mean(self.times)) if self.times else None

    @property
    def standard_error(self) -> Optional[float]:
        if len(self.times) < 2:
            return None
        return float(np.std(self.times, ddof=1) / math.sqrt(len(self.times)))


def expected_exit_time(bipartition: Bipartition, params: Params, which: str = "plus") -> float:
    """Mean exit time from xi_plus (or xi_minus): an exponential clock."""
    if params.epsilon <= 0:
        return math.inf
    n1, n2 = bipartition.n1, bipartition.n2
    if which == "plus":
        return 1.0 / (params.epsilon * (n1 * params.c1 + n2 * params.c2))
    if which == "minus":
        return 1.0 / (params.epsilon * (n1 * params.c2 + n2 * params.c1))
    raise ParameterError(f"which must be 'plus' or 'minus', got {which!r}")


def exit_time_lower_bound(vertex_count: int, params: Params) -> float:
    """(eps N c2)^-1, a lower bound for the mean exit time from either checkerboard."""
    if params.epsilon <= 0:
        return math.inf
    return 1.0 / (params.epsilon * vertex_count * params.c2)


def _distance_to_plus(tasks: np.ndarray, xi_plus: np.ndarray) -> int:
    return int(np.count_nonzero(tasks != xi_plus))


def time_to_enter(graph: Graph, params: Params, config: Configuration, xi_plus: np.ndarray,
                  rng: RandomStream, engine: str = GillespieEngine.name,
                  max_events: int = None) -> float:
    """Time until the trajectory started from ``config`` first sits in xi_plus or xi_minus."""
    max_events = max_events or settings.HITTING_MAX_EVENTS
    sim = make_engine(engine, graph, params, config, rng)
    n = graph.vertex_count
    # xi_minus is the complement of xi_plus, so its distance is n - d
    d = _distance_to_plus(sim.tasks, xi_plus)
    start = sim.time
    events = 0
    while 0 < d < n:
        if events >= max_events:
            raise SimulationError(f"no entry into the checkerboard pair after {events} events")
        event = sim.step()
        events += 1
        if event.changed:
            d += -1 if xi_plus[event.vertex] == event.new else 1
    return sim.time - start


def time_to_exit(graph: Graph, params: Params, config: Configuration, rng: RandomStream,
                 engine: str = GillespieEngine.name, max_events: int = None) -> float:
    """Time of the first event that changes ``config``."""
    if params.epsilon <= 0:
        raise ParameterError("exit times need eps > 0 (the checkerboards absorb at eps = 0)")
    max_events = max_events or settings.HITTING_MAX_EVENTS
    sim = make_engine(engine, graph, params, config, rng)
    start = sim.time
    for _ in range(max_events):
        if sim.step().changed:
            return sim.time - start
    raise SimulationError(f"configuration unchanged after {max_events} events")


def _draw_outside(graph: Graph, init: InitialLaw, rng: RandomStream,
                  xi_plus: np.ndarray) -> Configuration:
    n = graph.vertex_count
    for attempt in range(MAX_RESAMPLES):
        config = initial_configuration(graph, init, rng)
        if 0 < _distance_to_plus(config.tasks, xi_plus) < n:
            if attempt:
                logger.warning(f"initial law {init.label()} redrawn {attempt} times to start in C0")
            return config
        if init.kind != "bernoulli":
            break
    raise ParameterError(f"initial law {init.label()} does not produce a configuration outside "
                         f"the checkerboard pair")


def estimate_hitting_times(graph: Graph, params: Params, init: InitialLaw, replicates: int,
                           seed: int = 0, engine: str = GillespieEngine.name) -> HittingTimeReport:
    """Monte Carlo means of T_in (from a C0 start) and T_out (from xi_plus and xi_minus).

    Args:
        graph: connected bipartite graph with at least one edge
        params: costs and eps; T_out is only measured when eps > 0
        init: law of the starting configuration for T_in; draws that land in
            {xi_minus, xi_plus} are redrawn
        replicates: independent replicates per estimate
        seed: base seed; stream keys are (0, r) for T_in, (1, r) and (2, r) for T_out

    Returns:
        HittingTimeReport with means, standard errors and the analytic exit means
    """
    if replicates < 1:
        raise ParameterError(f"replicates must be >= 1, got {replicates}")
    bipartition = require_bipartite_connected(graph)
    if graph.edge_count == 0:
        raise GraphError("hitting times need a graph with at least one edge")
    xi_plus, xi_minus = checkerboard(bipartition)

    t_in = HittingTimeEstimator("T_in")
    for r in range(replicates):
        rng = RandomStream(seed, 0, r)
        start = _draw_outside(graph, init, rng, xi_plus)
        t_in.record(time_to_enter(graph, params, start, xi_plus, rng, engine))

    t_out_plus = HittingTimeEstimator("T_out from xi_plus")
    t_out_minus = HittingTimeEstimator("T_out from xi_minus")
    if params.epsilon > 0:
        for r in range(replicates):
            t_out_plus.record(time_to_exit(graph, params, Configuration(xi_plus),
                                           RandomStream(seed, 1, r), engine))
            t_out_minus.record(time_to_exit(graph, params, Configuration(xi_minus),
                                            RandomStream(seed, 2, r), engine))
    pooled = HittingTimeEstimator("T_out")
    pooled.times = t_out_plus.times + t_out_minus.times

    report = HittingTimeReport(
        vertex_count=graph.vertex_count,
        n1=bipartition.n1,
        n2=bipartition.n2,
        replicates=replicates,
        mean_t_in=t_in.mean,
        se_t_in=t_in.standard_error,
        mean_t_out_plus=t_out_plus.mean,
        se_t_out_plus=t_out_plus.standard_error,
        mean_t_out_minus=t_out_minus.mean,
        se_t_out_minus=t_out_minus.standard_error,
        mean_t_out=pooled.mean,
        se_t_out=pooled.standard_error,
        expected_t_out_plus=expected_exit_time(bipartition, params, "plus") if params.epsilon > 0 else None,
        expected_t_out_minus=expected_exit_time(bipartition, params, "minus") if params.epsilon > 0 else None,
        t_out_lower_bound=exit_time_lower_bound(graph.vertex_count, params) if params.epsilon > 0 else None,
    )
    logger.info(
        f"hitting times on {graph.spec or graph.vertex_count} (eps={params.epsilon}): "
        f"T_in={report.mean_t_in}, T_out+={report.mean_t_out_plus}, T_out-={report.mean_t_out_minus}"
    )
    return report
