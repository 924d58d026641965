"""Continuous-time simulation engines for the task dynamics.

Two interchangeable engines produce the same process in law:

- ``GillespieEngine`` samples the next flip directly from the vertex rates,
  kept in a partial-sum tree so each event costs O(deg + log N).
- ``GraphicalEngine`` realises the graphical representation: independent
  Poisson streams of solid arrows, dashed arrows, dots and crosses, merged
  through a priority queue. Every mark is an event, including those that
  leave the configuration unchanged.

Both expose ``next_event_time()`` (``math.inf`` once absorbed) and ``step()``,
which is all ``run`` needs.
"""

import heapq
import math
import time as wallclock
from collections import deque
from typing import Callable, Dict, List, NamedTuple, Optional, Tuple

import numpy as np

from config import settings
from dynamics import (Configuration, initial_configuration, rates_from_counts,
                      task_one_neighbor_counts)
from errors import AbsorbedError, ParameterError, SimulationError
from graph import Graph, checkerboard, find_bipartition
from logger_config import setup_logger
from observables import ObservableAccumulator
from sampling import RandomStream, SumTree
from schemas import Budget, InitialLaw, Params, RunSummary

logger = setup_logger(__name__, 'engine.log')

FLIP = "flip"
SOLID = "solid"
DASHED = "dashed"
DOT = "dot"
CROSS = "cross"
ARROWS = (SOLID, DASHED)


class EventRecord(NamedTuple):
    """One applied event. ``source`` is the arrow tail (-1 for vertex marks)."""

    time: float
    vertex: int
    old: int
    new: int
    kind: str = FLIP
    source: int = -1

    @property
    def changed(self) -> bool:
        return self.old != self.new


class EventLog:
    """Ring buffer of event records.

    ``covered_from`` is the earliest time from which the log is complete: the
    start time until the buffer wraps, then the time of the last evicted event.
    ``covered_to`` is the latest time up to which it is complete: the last
    event, or the horizon the run was advanced to.
    """

    def __init__(self, vertex_count: int, capacity: int = None, start_time: float = 0.0,
                 ring: bool = False):
        self.vertex_count = vertex_count
        self.capacity = capacity or settings.EVENT_LOG_CAPACITY
        self.ring = ring
        self.covered_from = start_time
        self.covered_to = start_time
        self._events = deque()

    def append(self, event: EventRecord):
        if len(self._events) == self.capacity:
            self.covered_from = self._events.popleft().time
        self._events.append(event)
        self.covered_to = max(self.covered_to, event.time)

    def extend_to(self, time: float):
        """Record that no event happened between the last one and ``time``."""
        self.covered_to = max(self.covered_to, time)

    def __len__(self) -> int:
        return len(self._events)

    def __iter__(self):
        return iter(self._events)

    def events(self) -> List[EventRecord]:
        return list(self._events)

    @property
    def last_time(self) -> float:
        return self._events[-1].time if self._events else self.covered_from


class GillespieEngine:
    """Direct simulation from the vertex flip rates.

    Args:
        graph: communication network
        params: costs and defection probability
        config: starting configuration (copied)
        rng: random stream owned by this engine
        log_events: keep an event log (ring buffer)
    """

    name = "gillespie"

    def __init__(self, graph: Graph, params: Params, config: Configuration, rng: RandomStream,
                 log_events: bool = False, log_capacity: int = None,
                 refresh_interval: int = None):
        if len(config) != graph.vertex_count:
            raise ParameterError("configuration size does not match the graph")
        self.graph = graph
        self.params = params
        self.rng = rng
        self.tasks = config.tasks.copy()
        self.time = 0.0
        self.event_count = 0
        self.refresh_interval = refresh_interval or settings.RATE_REFRESH_INTERVAL
        self.log = EventLog(graph.vertex_count, log_capacity, ring=graph.is_ring()) if log_events else None

        self._n1 = task_one_neighbor_counts(graph, self.tasks)
        self._tree = SumTree(graph.vertex_count)
        self._tree.rebuild(rates_from_counts(self.tasks, self._n1, graph.degrees, params))
        self._pending: Optional[float] = None
        self._since_refresh = 0

    @property
    def configuration(self) -> Configuration:
        return Configuration(self.tasks.copy())

    @property
    def total_rate(self) -> float:
        return self._tree.total

    def rate_table(self) -> np.ndarray:
        return self._tree.leaves().copy()

    def refresh(self):
        """Recompute every rate from scratch and rebuild the partial sums."""
        self._n1 = task_one_neighbor_counts(self.graph, self.tasks)
        self._tree.rebuild(rates_from_counts(self.tasks, self._n1, self.graph.degrees, self.params))
        self._since_refresh = 0
        logger.debug(f"rate table refreshed at t={self.time:.6g}, total={self._tree.total:.6g}")

    def next_event_time(self) -> float:
        """Time of the next flip (drawn once, then cached until it is applied)."""
        if self._pending is None:
            total = self._tree.total
            if total <= 0.0:
                return math.inf
            self._pending = self.time + self.rng.exponential() / total
        return self._pending

    def step(self) -> EventRecord:
        """Apply the next flip: pick a vertex proportionally to its rate and toggle it."""
        when = self.next_event_time()
        if when == math.inf:
            raise AbsorbedError(self.time)
        total = self._tree.total
        x = self._tree.find(self.rng.uniform() * total)
        old = int(self.tasks[x])
        new = 3 - old
        self.tasks[x] = new

        nbrs = self.graph.neighbor_array(x)
        if nbrs.size:
            self._n1[nbrs] += 1 if new == 1 else -1
            touched = np.append(nbrs, x)
        else:
            touched = np.array([x], dtype=np.int64)
        self._tree.update(
            touched,
            rates_from_counts(self.tasks[touched], self._n1[touched],
                              self.graph.degrees[touched], self.params),
        )

        self.time = when
        self._pending = None
        self.event_count += 1
        self._since_refresh += 1
        if self._since_refresh >= self.refresh_interval:
            self.refresh()

        event = EventRecord(when, x, old, new)
        if self.log is not None:
            self.log.append(event)
        return event


class GraphicalEngine:
    """Harris-style construction from independent Poisson mark streams.

    For each oriented edge y -> x there is a solid-arrow stream of rate
    (1-eps) c1 / deg(x) and a dashed-arrow stream of rate (1-eps)(c2-c1) / deg(x);
    each vertex has a dot stream of rate eps c1 and a cross stream of rate
    eps (c2-c1). Isolated vertices have no arrows, so their dots fire at c1 and
    crosses at c2 - c1. Streams of rate zero are never scheduled.

    Mark semantics:
      solid y -> x   xi(x) := opposite of xi(y)
      dashed y -> x  the same, only when xi(x) = 2
      dot at x       toggle xi(x)
      cross at x     toggle xi(x) only when xi(x) = 2
    """

    name = "graphical"

    def __init__(self, graph: Graph, params: Params, config: Configuration, rng: RandomStream,
                 log_events: bool = False, log_capacity: int = None):
        if len(config) != graph.vertex_count:
            raise ParameterError("configuration size does not match the graph")
        self.graph = graph
        self.params = params
        self.rng = rng
        self.tasks = config.tasks.copy()
        self.time = 0.0
        self.event_count = 0
        self.log = EventLog(graph.vertex_count, log_capacity, ring=graph.is_ring()) if log_events else None

        n = graph.vertex_count
        arcs = int(graph.indptr[-1])
        self._arcs = arcs
        # arc a runs from indices[a] into the row vertex of a
        self._arc_target = np.repeat(np.arange(n, dtype=np.int64), graph.degrees).tolist()
        self._arc_source = graph.indices.tolist()

        eps, c1, c2 = params.epsilon, params.c1, params.c2
        deg = graph.degrees.astype(np.float64)
        target_deg = np.repeat(deg, graph.degrees)
        solid = (1 - eps) * c1 / target_deg if arcs else np.zeros(0)
        dashed = (1 - eps) * (c2 - c1) / target_deg if arcs else np.zeros(0)
        isolated = deg == 0
        dots = np.where(isolated, c1, eps * c1)
        crosses = np.where(isolated, c2 - c1, eps * (c2 - c1))
        # stream ids: [0, A) solid, [A, 2A) dashed, [2A, 2A+N) dots, [2A+N, 2A+2N) crosses
        self._rates = np.concatenate([solid, dashed, dots, crosses]).tolist()

        queue: List[Tuple[float, int]] = []
        for stream, rate in enumerate(self._rates):
            if rate > 0.0:
                queue.append((self.rng.exponential() / rate, stream))
        heapq.heapify(queue)
        self._queue = queue

    @property
    def configuration(self) -> Configuration:
        return Configuration(self.tasks.copy())

    def next_event_time(self) -> float:
        return self._queue[0][0] if self._queue else math.inf

    def _decode(self, stream: int) -> Tuple[str, int, int]:
        arcs, n = self._arcs, self.graph.vertex_count
        if stream < arcs:
            return SOLID, self._arc_target[stream], self._arc_source[stream]
        if stream < 2 * arcs:
            a = stream - arcs
            return DASHED, self._arc_target[a], self._arc_source[a]
        if stream < 2 * arcs + n:
            return DOT, stream - 2 * arcs, -1
        return CROSS, stream - 2 * arcs - n, -1

    def step(self) -> EventRecord:
        """Pop the earliest mark, apply it and schedule the next mark of its stream."""
        if not self._queue:
            raise AbsorbedError(self.time)
        when, stream = heapq.heappop(self._queue)
        heapq.heappush(self._queue, (when + self.rng.exponential() / self._rates[stream], stream))

        kind, x, y = self._decode(stream)
        old = int(self.tasks[x])
        if kind == SOLID:
            new = 3 - int(self.tasks[y])
        elif kind == DASHED:
            new = 3 - int(self.tasks[y]) if old == 2 else old
        elif kind == DOT:
            new = 3 - old
        else:
            new = 1 if old == 2 else old
        self.tasks[x] = new

        self.time = when
        self.event_count += 1
        event = EventRecord(when, x, old, new, kind, y)
        if self.log is not None:
            self.log.append(event)
        return event


ENGINES = {
    GillespieEngine.name: GillespieEngine,
    GraphicalEngine.name: GraphicalEngine,
}


def make_engine(name: str, graph: Graph, params: Params, config: Configuration,
                rng: RandomStream, log_events: bool = False):
    try:
        cls = ENGINES[name]
    except KeyError:
        raise ParameterError(f"unknown engine {name!r}; choose from {sorted(ENGINES)}") from None
    return cls(graph, params, config, rng, log_events=log_events)


def default_accumulator(graph: Graph, burnin: float = 0.0) -> ObservableAccumulator:
    """Accumulator tracking phi and, on bipartite graphs, residence in xi_plus / xi_minus."""
    bipartition = find_bipartition(graph)
    targets = {}
    if bipartition is not None and graph.edge_count > 0:
        xi_plus, xi_minus = checkerboard(bipartition)
        targets = {"xi_plus": xi_plus, "xi_minus": xi_minus}
    return ObservableAccumulator(graph, targets=targets, burnin=burnin)


def run(engine, budget: Budget, accumulator: Optional[ObservableAccumulator] = None,
        on_event: Optional[Callable[[EventRecord], None]] = None) -> RunSummary:
    """Run ``engine`` until the budget is spent and integrate the observables.

    The accumulator is advanced over each waiting time before the event is
    applied. If the engine absorbs (total rate zero) under a time budget, the
    frozen configuration is integrated up to the horizon; under an event
    budget the run stops at the absorption time.

    Args:
        engine: a GillespieEngine or GraphicalEngine
        budget: event count or time horizon, counted from the engine's current time
        accumulator: observables to integrate (``default_accumulator`` if omitted)
        on_event: callback invoked with every applied event

    Returns:
        RunSummary for the integrated interval
    """
    acc = accumulator if accumulator is not None else default_accumulator(engine.graph)
    acc.start(engine.tasks, engine.time)
    horizon = engine.time + budget.time if budget.time is not None else None
    max_events = budget.updates
    applied = 0
    absorbed = False
    last = engine.time
    started = wallclock.monotonic()

    while max_events is None or applied < max_events:
        when = engine.next_event_time()
        if when == math.inf:
            absorbed = True
            acc.mark_absorbed()
            if horizon is not None:
                acc.advance(horizon - acc.time)
            break
        if horizon is not None and when > horizon:
            acc.advance(horizon - acc.time)
            break
        if applied and when <= last:
            raise SimulationError(f"event times must increase strictly: {when!r} after {last!r}")
        acc.advance(when - acc.time)
        event = engine.step()
        last = when
        applied += 1
        if event.changed:
            acc.record_flip(event.vertex, event.old, event.new)
        else:
            acc.record_noop()
        if on_event is not None:
            on_event(event)

    if engine.log is not None:
        engine.log.extend_to(horizon if horizon is not None else acc.time)

    if absorbed:
        logger.warning(
            f"{engine.name}: absorbed at t={acc.absorbed_at:.6g} after {applied} events"
        )
    logger.info(
        f"{engine.name} run on {engine.graph.spec or engine.graph.vertex_count}: "
        f"{applied} events, s={acc.elapsed:.6g}, phi={acc.phi():.6f}, "
        f"wall={wallclock.monotonic() - started:.2f}s"
    )
    return RunSummary(
        engine=engine.name,
        vertex_count=engine.graph.vertex_count,
        phi=acc.phi(),
        phi_post_burnin=acc.phi_post_burnin() if acc.burnin > 0 else None,
        residence=acc.residence_fractions(),
        agreement_density=acc.agreement_density(),
        agreement_post_burnin=acc.agreement_post_burnin() if acc.burnin > 0 else None,
        window_phi=acc.window_phi(),
        window_phi_post_burnin=acc.window_phi_post_burnin() if acc.burnin > 0 else {},
        event_count=applied,
        sim_time=acc.elapsed,
        absorbed=absorbed,
        absorbed_at=acc.absorbed_at,
        final_config=engine.tasks.tolist(),
    )


def simulate(graph: Graph, params: Params, init: InitialLaw, budget: Budget,
             engine: str = GillespieEngine.name, seed: int = 0, keys: Tuple[int, ...] = (0, 0),
             burnin: float = 0.0) -> RunSummary:
    """Build an engine from a seeded stream and run it once."""
    rng = RandomStream(seed, *keys)
    config = initial_configuration(graph, init, rng)
    sim = make_engine(engine, graph, params, config, rng)
    return run(sim, budget, default_accumulator(graph, burnin))


def replicate_phi(graph: Graph, params: Params, init: InitialLaw, budget: Budget,
                  engine: str = GillespieEngine.name, replicates: int = 10,
                  seed: int = 0) -> Dict[str, float]:
    """Mean and standard error of phi over independent replicates."""
    values = np.array([
        simulate(graph, params, init, budget, engine, seed, (0, r)).phi
        for r in range(replicates)
    ])
    se = float(values.std(ddof=1) / math.sqrt(replicates)) if replicates > 1 else 0.0
    return {"mean": float(values.mean()), "se": se, "replicates": replicates,
            "values": values.tolist()}
