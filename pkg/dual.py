"""Edge dual of the ring process.

Edge x joins vertices x and x+1 (mod N). It carries a particle of type i when
both endpoints perform task i and is empty when they disagree. A vertex flip
toggles both of its edges: a particle disappears, an empty edge receives a
particle of the vertex's new task. According to how many of the two edges
were occupied before, a flip is a jump (one), a pair birth (none) or an
annihilation (two); a jumping particle changes type.

The edge states alone determine the tasks up to a global swap, so the dual
state carries the task of vertex 0 as a reference.
"""

import math
from dataclasses import dataclass, field
from typing import List, NamedTuple, Optional

import numpy as np

from config import settings
from dynamics import Configuration, initial_configuration
from engine import CROSS, DASHED, DOT, SOLID, EventRecord, GillespieEngine, GraphicalEngine, run
from errors import ParameterError, SimulationError
from graph import Graph, make_cycle, require_ring, ring_edges
from logger_config import setup_logger
from observables import ObservableAccumulator, centered_window
from sampling import FenwickTree, RandomStream, SumTree
from schemas import AgreementReport, Budget, CouplingReport, InitialLaw, Params

logger = setup_logger(__name__, 'dual.log')

EMPTY = 0

JUMP_LEFT = "jump-left"
JUMP_RIGHT = "jump-right"
BIRTH = "birth-pair"
ANNIHILATION = "annihilation"


@dataclass
class EdgeConfiguration:
    """``states[x]`` is 0 (empty), 1 or 2 for the ring edge (x, x+1)."""

    states: np.ndarray

    def __post_init__(self):
        self.states = np.asarray(self.states, dtype=np.int8)
        if not np.all((self.states >= 0) & (self.states <= 2)):
            raise ParameterError("edge states must be 0, 1 or 2")

    def __len__(self) -> int:
        return len(self.states)

    def __eq__(self, other) -> bool:
        return isinstance(other, EdgeConfiguration) and np.array_equal(self.states, other.states)

    @property
    def particle_count(self) -> int:
        return int(np.count_nonzero(self.states))

    def to_list(self) -> List[int]:
        return self.states.tolist()

    @classmethod
    def of(cls, states) -> "EdgeConfiguration":
        return cls(np.asarray(states, dtype=np.int8))


def project(graph: Graph, config: Configuration) -> EdgeConfiguration:
    """Edge states of a ring configuration."""
    require_ring(graph)
    if len(config) != graph.vertex_count:
        raise ParameterError("configuration size does not match the graph")
    return _project_tasks(config.tasks)


def _project_tasks(tasks: np.ndarray) -> EdgeConfiguration:
    right = np.roll(tasks, -1)
    return EdgeConfiguration(np.where(tasks == right, tasks, EMPTY).astype(np.int8))


def reconstruct(edges: EdgeConfiguration, reference: int) -> np.ndarray:
    """Tasks of every vertex from the edge states and the task of vertex 0."""
    empty = (edges.states[:-1] == EMPTY).astype(np.int64)
    toggles = np.concatenate([[0], np.cumsum(empty)]) % 2
    return np.where(toggles == 0, reference, 3 - reference).astype(np.int8)


class DualState:
    """Edge states plus the task of vertex 0.

    Tasks are recovered on demand: vertex x has the task of vertex 0, toggled
    once per empty edge among 0..x-1, counted with a Fenwick tree.
    """

    def __init__(self, edges: EdgeConfiguration, reference: int):
        n = len(edges)
        if n < 4 or n % 2:
            raise ParameterError(f"the edge dual needs an even ring with N >= 4, got {n}")
        if reference not in (1, 2):
            raise ParameterError(f"reference task must be 1 or 2, got {reference}")
        if edges.particle_count % 2:
            raise ParameterError(f"particle count must be even, got {edges.particle_count}")
        if _project_tasks(reconstruct(edges, reference)) != edges:
            raise ParameterError("edge states are not the projection of any configuration")
        self.n = n
        self.states = edges.states.copy()
        self.reference = reference
        self.particles = edges.particle_count
        self._empty = FenwickTree((self.states == EMPTY).astype(np.int64).tolist())

    @classmethod
    def from_configuration(cls, config: Configuration) -> "DualState":
        return cls(_project_tasks(config.tasks), int(config.tasks[0]))

    @property
    def edges(self) -> EdgeConfiguration:
        return EdgeConfiguration(self.states.copy())

    def task_at(self, x: int) -> int:
        left, right = self.states[(x - 1) % self.n], self.states[x]
        if right != EMPTY:
            return int(right)
        if left != EMPTY:
            return int(left)
        if self._empty.prefix(x) % 2:
            return 3 - self.reference
        return self.reference

    def occupied_around(self, x: int) -> int:
        return int(self.states[(x - 1) % self.n] != EMPTY) + int(self.states[x] != EMPTY)

    def edge_between(self, x: int, y: int) -> int:
        if y == (x + 1) % self.n:
            return x
        if x == (y + 1) % self.n:
            return y
        raise ParameterError(f"{x} and {y} are not ring neighbours")

    def flip_vertex(self, x: int) -> str:
        """Switch the task of x and return the kind of transition it caused."""
        new = 3 - self.task_at(x)
        left, right = (x - 1) % self.n, x
        before_left, before_right = self.states[left], self.states[right]
        occupied = int(before_left != EMPTY) + int(before_right != EMPTY)
        for e, before in ((left, before_left), (right, before_right)):
            if before == EMPTY:
                self.states[e] = new
                self._empty.add(e, -1)
            else:
                self.states[e] = EMPTY
                self._empty.add(e, 1)
        if x == 0:
            self.reference = new
        self.particles += 2 - 2 * occupied
        if self.particles % 2:
            raise SimulationError(f"particle parity broken after flipping {x}")
        if occupied == 1:
            return JUMP_RIGHT if before_left != EMPTY else JUMP_LEFT
        return BIRTH if occupied == 0 else ANNIHILATION

    def tasks(self) -> np.ndarray:
        return reconstruct(EdgeConfiguration(self.states), self.reference)


class DualEvent(NamedTuple):
    """``edge`` is where the particle lands (jump) or the left edge of the pair."""

    time: float
    vertex: int
    kind: str
    edge: int
    particles: int


@dataclass
class DualTrajectory:
    events: List[DualEvent] = field(default_factory=list)
    counts: List[int] = field(default_factory=list)
    jumps_left: int = 0
    jumps_right: int = 0
    births: int = 0
    annihilations: int = 0
    extinction_time: Optional[float] = None
    final_time: float = 0.0
    final_edges: Optional[EdgeConfiguration] = None

    @property
    def jumps(self) -> int:
        return self.jumps_left + self.jumps_right

    def record(self, event: DualEvent):
        if event.kind == JUMP_LEFT:
            self.jumps_left += 1
        elif event.kind == JUMP_RIGHT:
            self.jumps_right += 1
        elif event.kind == BIRTH:
            self.births += 1
        else:
            self.annihilations += 1


def _landing_edge(x: int, n: int, kind: str) -> int:
    if kind == JUMP_LEFT:
        return (x - 1) % n
    if kind == JUMP_RIGHT:
        return x
    return (x - 1) % n


def _fires(dual: DualState, event: EventRecord) -> bool:
    """Whether a graphical mark changes the configuration, decided from the dual state."""
    if event.kind == DOT:
        return True
    if event.kind == CROSS:
        return dual.task_at(event.vertex) == 2
    edge = dual.states[dual.edge_between(event.vertex, event.source)]
    if event.kind == SOLID:
        return edge != EMPTY
    if event.kind == DASHED:
        return edge == 2
    raise ParameterError(f"unexpected event kind {event.kind!r}")


def couple_and_verify(n: int, params: Params, init: InitialLaw, horizon: float,
                      seed: int = 0, replicate: int = 0) -> CouplingReport:
    """Run the graphical engine on a ring and evolve the edge dual from the same marks.

    After every mark the projection of the vertex configuration must equal the
    dual's edge states and the reference must equal the task of vertex 0. The
    dual decides from its own state whether a mark fires.
    """
    if n % 2:
        raise ParameterError(f"coupling needs an even ring, got N={n}")
    graph = make_cycle(n)
    rng = RandomStream(seed, 0, replicate)
    config = initial_configuration(graph, init, rng)
    engine = GraphicalEngine(graph, params, config, rng, log_events=True)
    dual = DualState.from_configuration(config)

    events = flips = jumps = births = annihilations = 0
    mismatch = None
    while engine.next_event_time() <= horizon:
        before = dual.edges
        event = engine.step()
        events += 1
        fires = _fires(dual, event)
        kind = dual.flip_vertex(event.vertex) if fires else None
        if kind is not None:
            flips += 1
            if kind in (JUMP_LEFT, JUMP_RIGHT):
                jumps += 1
            elif kind == BIRTH:
                births += 1
            else:
                annihilations += 1
        projected = _project_tasks(engine.tasks)
        if fires != event.changed or projected != dual.edges or dual.reference != engine.tasks[0]:
            mismatch = {
                "event": events,
                "time": event.time,
                "kind": event.kind,
                "vertex": event.vertex,
                "source": event.source,
                "vertex_changed": event.changed,
                "dual_fired": fires,
                "before": before.to_list(),
                "projected": projected.to_list(),
                "dual": dual.edges.to_list(),
            }
            logger.error(f"coupling mismatch on ring N={n}, seed={seed}: {mismatch}")
            break

    report = CouplingReport(vertex_count=n, events=events, flips=flips, jumps=jumps,
                            births=births, annihilations=annihilations,
                            ok=mismatch is None, first_mismatch=mismatch)
    logger.info(f"coupling on ring N={n} (eps={params.epsilon}, seed={seed}): "
                f"{events} events, {flips} flips, ok={report.ok}")
    return report


def _dual_rate(dual: DualState, params: Params, x: int) -> float:
    cost = params.c1 if dual.task_at(x) == 1 else params.c2
    return cost * (params.epsilon + (1 - params.epsilon) * dual.occupied_around(x) / 2)


def simulate_dual_native(n: int, params: Params, edges: EdgeConfiguration, horizon: float,
                         seed: int = 0, reference: int = 1, until_extinct: bool = False,
                         record_events: bool = True, max_events: int = None,
                         replicate: int = 0) -> DualTrajectory:
    """Simulate the particle system directly.

    Vertex x flips at rate c_{task(x)} (eps + (1 - eps) k_x / 2), where k_x is
    the number of occupied edges at x; tasks come from the dual state.

    Args:
        n: ring size (even)
        edges: initial edge states with an even number of particles
        horizon: stop at this time (ignored when ``until_extinct``)
        reference: task of vertex 0 when both of its edges are empty
        until_extinct: run until the particle count first reaches 0
        max_events: guard for ``until_extinct`` runs
    """
    if len(edges) != n:
        raise ParameterError(f"edge configuration has {len(edges)} entries, ring has {n}")
    if edges.states[-1] != EMPTY:
        reference = int(edges.states[-1])
    elif edges.states[0] != EMPTY:
        reference = int(edges.states[0])
    dual = DualState(edges, reference)
    max_events = max_events or settings.HITTING_MAX_EVENTS
    rng = RandomStream(seed, 0, replicate)

    tree = SumTree(n)
    tree.rebuild([_dual_rate(dual, params, x) for x in range(n)])
    trajectory = DualTrajectory(counts=[dual.particles])
    if dual.particles == 0:
        trajectory.extinction_time = 0.0

    time = 0.0
    steps = 0
    while True:
        if until_extinct and dual.particles == 0:
            break
        total = tree.total
        if total <= 0.0:
            break
        when = time + rng.exponential() / total
        if not until_extinct and when > horizon:
            break
        if steps >= max_events:
            raise SimulationError(f"particle system still alive after {steps} events")
        x = tree.find(rng.uniform() * total)
        time = when
        kind = dual.flip_vertex(x)
        steps += 1
        for y in ((x - 1) % n, x, (x + 1) % n):
            tree.update(np.array([y]), np.array([_dual_rate(dual, params, y)]))

        event = DualEvent(time, x, kind, _landing_edge(x, n, kind), dual.particles)
        trajectory.record(event)
        trajectory.counts.append(dual.particles)
        if record_events:
            trajectory.events.append(event)
        if dual.particles == 0 and trajectory.extinction_time is None:
            trajectory.extinction_time = time

    trajectory.final_time = time if until_extinct else max(time, horizon)
    trajectory.final_edges = dual.edges
    logger.info(f"native dual on ring N={n} (eps={params.epsilon}): {steps} events, "
                f"{trajectory.jumps} jumps, {trajectory.births} births, "
                f"{trajectory.annihilations} annihilations, extinct at {trajectory.extinction_time}")
    return trajectory


def _mean_se(values: List[float]):
    values = np.asarray(values, dtype=np.float64)
    se = float(values.std(ddof=1) / math.sqrt(len(values))) if len(values) > 1 else 0.0
    return float(values.mean()), se


def agreement_probability(n: int, params: Params, p: float, horizon: float, replicates: int,
                          seed: int = 0, burnin: float = None,
                          window: int = None) -> AgreementReport:
    """Time- and space-averaged P(xi(x) = xi(x+1)) on a ring from a Bernoulli(p) start.

    Also reports the post-burn-in phi over the whole ring and over the window
    {-M, ..., M} around vertex 0.

    Args:
        burnin: defaults to ``DUAL_BURNIN_FRACTION`` of the horizon
        window: half-width M of the window; defaults to N // 4
    """
    if replicates < 1:
        raise ParameterError(f"replicates must be >= 1, got {replicates}")
    if horizon <= 0:
        raise ParameterError(f"horizon must be positive, got {horizon}")
    graph = make_cycle(n)
    burnin = settings.DUAL_BURNIN_FRACTION * horizon if burnin is None else burnin
    if not 0 <= burnin < horizon:
        raise ParameterError(f"burn-in must lie in [0, horizon), got {burnin}")
    half_width = n // 4 if window is None else window
    members = centered_window(n, half_width)
    init = InitialLaw(kind="bernoulli", p=p)

    agreement, phi, window_phi = [], [], []
    for r in range(replicates):
        rng = RandomStream(seed, 0, r)
        config = initial_configuration(graph, init, rng)
        engine = GillespieEngine(graph, params, config, rng)
        acc = ObservableAccumulator(graph, agreement_edges=ring_edges(n),
                                    windows={"window": members}, burnin=burnin)
        summary = run(engine, Budget(time=horizon), acc)
        if burnin > 0:
            agreement.append(summary.agreement_post_burnin)
            phi.append(summary.phi_post_burnin)
            window_phi.append(summary.window_phi_post_burnin["window"])
        else:
            agreement.append(summary.agreement_density)
            phi.append(summary.phi)
            window_phi.append(summary.window_phi["window"])

    a_mean, a_se = _mean_se(agreement)
    p_mean, p_se = _mean_se(phi)
    w_mean, w_se = _mean_se(window_phi)
    report = AgreementReport(
        vertex_count=n, replicates=replicates, horizon=horizon, burnin=burnin,
        agreement=a_mean, agreement_se=a_se, phi=p_mean, phi_se=p_se,
        window_phi=w_mean, window_phi_se=w_se, window_half_width=len(members) // 2,
    )
    logger.info(f"agreement on ring N={n} (eps={params.epsilon}): {a_mean:.5f} +- {a_se:.5f}")
    return report
