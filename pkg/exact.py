"""Exact analysis: the complete-graph birth-death chain, the mean-field fixed
point and the absorbing structure at eps = 0.

On K_N the number X of individuals at task 1 is itself a Markov chain on
{0..N} with birth rates

    beta_j  = c2 (N - j) (eps + (1 - eps) (N - j - 1) / (N - 1))
    delta_j = c1 j       (eps + (1 - eps) (j - 1)     / (N - 1))

The mean-field drift of u1 = X/N is Q(u1, 1 - u1) with
B = (1 - eps) / (1 - 1/N), whose root in (0, 1) is u1_bar(B).
"""

import itertools
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg, sparse
from scipy.integrate import solve_ivp
from scipy.sparse import csgraph
from scipy.sparse.linalg import spsolve
from scipy.special import logsumexp

from config import settings
from dynamics import Configuration, rates_from_counts
from errors import ParameterError, ReducibleChainError
from graph import Bipartition, Graph, checkerboard, find_bipartition
from logger_config import setup_logger
from schemas import ExactReportRow, FixedPointReport, MonotonicityReport, Params

logger = setup_logger(__name__, 'exact.log')

# default grid resolution for verify_monotone
MONOTONE_GRID_POINTS = 1000
# stand-in for the B -> 0+ limit
LIMIT_B = 1e-6


@dataclass
class BirthDeathChain:
    """Occupancy chain of task 1 on the complete graph."""

    n: int
    params: Params
    birth: np.ndarray
    death: np.ndarray

    @property
    def states(self) -> int:
        return self.n + 1

    def is_irreducible(self) -> bool:
        return bool(np.all(self.birth[:-1] > 0) and np.all(self.death[1:] > 0))


@dataclass
class StationaryDistribution:
    probabilities: np.ndarray
    log_probabilities: np.ndarray
    mean: float

    def __len__(self) -> int:
        return len(self.probabilities)


def build_birth_death(n: int, params: Params) -> BirthDeathChain:
    """Birth and death rates of X on K_N for j = 0..N."""
    if n < 2:
        raise ParameterError(f"the occupancy chain needs N >= 2, got {n}")
    eps, c1, c2 = params.epsilon, params.c1, params.c2
    j = np.arange(n + 1, dtype=np.float64)
    birth = c2 * (n - j) * (eps + (1 - eps) * (n - j - 1) / (n - 1))
    death = c1 * j * (eps + (1 - eps) * (j - 1) / (n - 1))
    # the (N-j-1) and (j-1) factors are negative only where the prefactor is 0
    birth = np.where(j < n, birth, 0.0)
    death = np.where(j > 0, death, 0.0)
    return BirthDeathChain(n, params, birth, death)


def closed_classes(chain: BirthDeathChain) -> List[List[int]]:
    """Closed communication classes: strongly connected components with no exit."""
    up = np.flatnonzero(chain.birth[:-1] > 0)
    down = np.flatnonzero(chain.death[1:] > 0) + 1
    rows = np.concatenate([up, down])
    cols = np.concatenate([up + 1, down - 1])
    return _closed_components(chain.states, rows, cols)


def _closed_components(size: int, rows: np.ndarray, cols: np.ndarray) -> List[List[int]]:
    adjacency = sparse.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(size, size))
    count, labels = csgraph.connected_components(adjacency, directed=True, connection="strong")
    leaves = np.zeros(count, dtype=bool)
    leaves[labels[rows][labels[rows] != labels[cols]]] = True
    return [np.flatnonzero(labels == k).tolist() for k in range(count) if not leaves[k]]


def stationary(chain: BirthDeathChain) -> StationaryDistribution:
    """Stationary law of an irreducible occupancy chain.

    pi_j is proportional to prod_{k<=j} beta_{k-1} / delta_k. The products are
    accumulated in log space outwards from the mode, so each log pi_j stays
    small where pi_j matters and overflow never occurs.

    Raises:
        ReducibleChainError: if eps = 0 (the chain has absorbing classes)
    """
    if not chain.is_irreducible():
        raise ReducibleChainError(
            f"occupancy chain on K_{chain.n} with eps={chain.params.epsilon} is reducible",
            closed_classes(chain),
        )
    steps = np.log(chain.birth[:-1]) - np.log(chain.death[1:])
    rough = np.concatenate([[0.0], np.cumsum(steps)])
    mode = int(np.argmax(rough))
    log_pi = np.empty(chain.states)
    log_pi[mode] = 0.0
    log_pi[mode + 1:] = np.cumsum(steps[mode:])
    log_pi[:mode] = -np.cumsum(steps[:mode][::-1])[::-1]
    log_pi -= logsumexp(log_pi)
    pi = np.exp(log_pi)
    mean = float(np.dot(np.arange(chain.states), pi) / chain.n)
    return StationaryDistribution(pi, log_pi, mean)


def generator_matrix(chain: BirthDeathChain) -> np.ndarray:
    """Dense (N+1) x (N+1) generator of the occupancy chain."""
    size = chain.states
    q = np.zeros((size, size))
    idx = np.arange(size - 1)
    q[idx, idx + 1] = chain.birth[:-1]
    q[idx + 1, idx] = chain.death[1:]
    q[np.arange(size), np.arange(size)] = -q.sum(axis=1)
    return q


def stationary_by_solve(chain: BirthDeathChain) -> np.ndarray:
    """Stationary vector from the linear system pi Q = 0, sum(pi) = 1."""
    if not chain.is_irreducible():
        raise ReducibleChainError("linear solve needs an irreducible chain", closed_classes(chain))
    a = generator_matrix(chain).T.copy()
    a[-1, :] = 1.0
    b = np.zeros(chain.states)
    b[-1] = 1.0
    return linalg.solve(a, b)


def b_of(epsilon: float, n: int) -> float:
    """B = (1 - eps) / (1 - 1/N)."""
    if n < 2:
        raise ParameterError(f"B needs N >= 2, got {n}")
    if not 0.0 <= epsilon <= 1.0:
        raise ParameterError(f"eps must lie in [0, 1], got {epsilon}")
    return (1.0 - epsilon) / (1.0 - 1.0 / n)


def v1_bar(c1: float, c2: float) -> float:
    """Fraction of time at task 1 without communication."""
    return c2 / (c1 + c2)


def _check_costs(c1: float, c2: float):
    if c1 <= 0 or c2 <= 0:
        raise ParameterError(f"costs must be positive, got c1={c1}, c2={c2}")
    if c1 > c2:
        raise ParameterError(f"costs must satisfy c1 <= c2, got c1={c1}, c2={c2}")


def quadratic(B: float, c1: float, c2: float) -> Tuple[float, float, float]:
    """Coefficients (a, b, c) of Q(u, 1 - u) = a u^2 + b u + c."""
    return B * (c2 - c1), B * (c1 - c2) - (c1 + c2), c2


def discriminant(B: float, c1: float, c2: float) -> float:
    """(B - 1)^2 (c1 - c2)^2 + 4 c1 c2, always positive."""
    return (B - 1.0) ** 2 * (c1 - c2) ** 2 + 4.0 * c1 * c2


def q_value(u: float, B: float, c1: float, c2: float) -> float:
    """Mean-field drift of u1 evaluated at (u, 1 - u)."""
    return c2 - (c1 + c2) * u + B * (c1 - c2) * u * (1.0 - u)


def u1_bar(B: float, c1: float, c2: float) -> float:
    """Root in (0, 1) of Q(u, 1 - u).

    Evaluated as 2 c2 / ((c1 + c2) + B (c2 - c1) + sqrt(Delta)), which is the
    same root without cancellation; c1 = c2 gives 1/2.
    """
    if B <= 0:
        raise ParameterError(f"u1_bar needs B > 0 (use v1_bar for the B -> 0 limit), got {B}")
    if B > 2:
        raise ParameterError(f"B cannot exceed 2, got {B}")
    _check_costs(c1, c2)
    if c1 == c2:
        return 0.5
    return 2.0 * c2 / ((c1 + c2) + B * (c2 - c1) + math.sqrt(discriminant(B, c1, c2)))


def u1_or_limit(B: float, c1: float, c2: float) -> float:
    """u1_bar(B), extended by its limit v1_bar at B = 0."""
    return v1_bar(c1, c2) if B == 0 else u1_bar(B, c1, c2)


def fixed_point_report(B: float, c1: float, c2: float) -> FixedPointReport:
    u = u1_bar(B, c1, c2)
    return FixedPointReport(
        B=B,
        u1_bar=u,
        v1_bar=v1_bar(c1, c2),
        quadratic=list(quadratic(B, c1, c2)),
        discriminant=discriminant(B, c1, c2),
        residual=q_value(u, B, c1, c2),
    )


def verify_monotone(c1: float, c2: float, grid=None) -> MonotonicityReport:
    """Check that B -> u1_bar(B) decreases on a grid in (0, 2) and that
    v1_bar > u1_bar(1) > u1_bar(2) = 1/2.

    Args:
        grid: B values (sorted increasing) or a number of points; default 1000
            evenly spaced interior points
    """
    _check_costs(c1, c2)
    if grid is None or isinstance(grid, int):
        points = grid or MONOTONE_GRID_POINTS
        grid = np.linspace(0.0, 2.0, points + 2)[1:-1]
    grid = np.asarray(grid, dtype=np.float64)
    values = np.array([u1_bar(b, c1, c2) for b in grid])
    steps = np.diff(values)
    degenerate = bool(c1 == c2)
    baseline = v1_bar(c1, c2)
    at_1, at_2 = u1_bar(1.0, c1, c2), u1_bar(2.0, c1, c2)
    ordering = bool(baseline > at_1 > at_2 and abs(at_2 - 0.5) <= 1e-12)
    report = MonotonicityReport(
        c1=c1,
        c2=c2,
        points=len(grid),
        strictly_decreasing=bool(np.all(steps < 0)) if len(steps) else True,
        degenerate=degenerate,
        max_increment=float(steps.max()) if len(steps) else 0.0,
        v1_bar=baseline,
        u1_at_1=at_1,
        u1_at_2=at_2,
        limit_at_zero=u1_bar(LIMIT_B, c1, c2),
        ordering_holds=ordering,
    )
    if not degenerate and not (report.strictly_decreasing and ordering):
        logger.warning(f"monotonicity check failed for c1={c1}, c2={c2}: {report}")
    return report


def mean_field_trajectory(B: float, c1: float, c2: float, u0: float, t_end: float,
                          points: int = 200) -> Tuple[np.ndarray, np.ndarray]:
    """Solve u' = Q(u, 1 - u) from u0 over [0, t_end]; u(t) tends to u1_bar(B)."""
    _check_costs(c1, c2)
    if not 0.0 <= u0 <= 1.0:
        raise ParameterError(f"u0 must lie in [0, 1], got {u0}")
    times = np.linspace(0.0, t_end, points)
    solution = solve_ivp(lambda t, u: [q_value(u[0], B, c1, c2)], (0.0, t_end), [u0],
                         t_eval=times, rtol=1e-10, atol=1e-12)
    return solution.t, solution.y[0]


def _proper_colorings(graph: Graph) -> List[Configuration]:
    bipartition = find_bipartition(graph)
    if bipartition is None:
        return []
    sides = graph.components()
    base = np.asarray(bipartition.side, dtype=np.int8)
    result = []
    for flips in itertools.product((False, True), repeat=len(sides)):
        tasks = base.copy()
        for component, flip in zip(sides, flips):
            if flip:
                tasks[component] = 3 - tasks[component]
        result.append(Configuration(tasks))
    return result


def absorbing_states(graph: Graph, params: Params) -> List[Configuration]:
    """Configurations with total flip rate zero at eps = 0.

    Such a configuration has no isolated vertex and no two neighbours at the
    same task, i.e. it is a proper two-colouring.
    """
    if params.epsilon > 0:
        raise ParameterError("no absorbing states when eps > 0: every vertex can defect")
    n = graph.vertex_count
    if np.any(graph.degrees == 0):
        return []
    if graph.is_connected():
        bipartition = find_bipartition(graph)
        if bipartition is None:
            return []
        xi_plus, xi_minus = checkerboard(bipartition)
        return [Configuration(xi_plus), Configuration(xi_minus)]
    if n > settings.EXHAUSTIVE_ABSORBING_LIMIT:
        return _proper_colorings(graph)

    codes = np.arange(1 << n, dtype=np.int64)
    proper = np.ones(len(codes), dtype=bool)
    for x, y in graph.edges():
        proper &= ((codes >> x) ^ (codes >> y)) & 1 == 1
    found = codes[proper]
    bits = (found[:, None] >> np.arange(n)) & 1
    # bit set means task 1
    return [Configuration((2 - row).astype(np.int8)) for row in bits]


def configuration_chain_stationary(graph: Graph, params: Params) -> Dict[str, Optional[float]]:
    """Stationary law of the full process on {1, 2}^N by a sparse linear solve.

    Returns:
        dict with ``phi`` (= E_pi[X/N], the almost-sure limit of phi(s)) and,
        for connected bipartite graphs, ``checkerboard_mass`` = pi(xi_plus) + pi(xi_minus)
    """
    n = graph.vertex_count
    if n > settings.CONFIGURATION_CHAIN_LIMIT:
        raise ParameterError(
            f"configuration chain limited to N <= {settings.CONFIGURATION_CHAIN_LIMIT}, got {n}"
        )
    size = 1 << n
    codes = np.arange(size, dtype=np.int64)
    bits = ((codes[:, None] >> np.arange(n)) & 1).astype(np.int64)
    tasks = (2 - bits).astype(np.int8)
    ones = bits @ _adjacency_matrix(graph)

    rows, cols, rates = [], [], []
    for x in range(n):
        rate = rates_from_counts(tasks[:, x], ones[:, x], np.full(size, graph.degrees[x]), params)
        live = rate > 0
        rows.append(codes[live])
        cols.append(codes[live] ^ (1 << x))
        rates.append(rate[live])
    rows, cols, rates = np.concatenate(rows), np.concatenate(cols), np.concatenate(rates)

    if params.epsilon == 0:
        classes = _closed_components(size, rows, cols)
        if len(classes) > 1:
            raise ReducibleChainError(
                f"configuration chain on {graph.spec or n} is reducible at eps=0", classes
            )

    q = sparse.csr_matrix((rates, (rows, cols)), shape=(size, size))
    q = q - sparse.diags(np.asarray(q.sum(axis=1)).ravel())
    a = sparse.vstack([q.T.tocsr()[:-1, :], sparse.csr_matrix(np.ones((1, size)))]).tocsc()
    b = np.zeros(size)
    b[-1] = 1.0
    pi = spsolve(a, b)

    result = {"phi": float(pi @ bits.sum(axis=1) / n), "checkerboard_mass": None}
    bipartition = find_bipartition(graph)
    if bipartition is not None and graph.is_connected() and graph.edge_count:
        xi_plus, _ = checkerboard(bipartition)
        plus = int(np.sum((xi_plus == 1).astype(np.int64) << np.arange(n)))
        result["checkerboard_mass"] = float(pi[plus] + pi[(size - 1) ^ plus])
    logger.info(f"configuration chain on {graph.spec or n} (eps={params.epsilon}): {result}")
    return result


def _adjacency_matrix(graph: Graph) -> np.ndarray:
    n = graph.vertex_count
    matrix = np.zeros((n, n), dtype=np.int64)
    rows = np.repeat(np.arange(n), graph.degrees)
    matrix[rows, graph.indices] = 1
    return matrix


def bipartite_bounds(bipartition: Bipartition, rho: float) -> Dict[str, object]:
    """Interval [(1-rho) min(N1,N2)/N, (1+rho) max(N1,N2)/N] holding lim phi for small eps,
    and the eps = 0 limits N1/N, N2/N."""
    if rho <= 0:
        raise ParameterError(f"rho must be positive, got {rho}")
    n1, n2 = bipartition.n1, bipartition.n2
    n = n1 + n2
    return {
        "lower": (1 - rho) * min(n1, n2) / n,
        "upper": (1 + rho) * max(n1, n2) / n,
        "limits": sorted({n1 / n, n2 / n}),
    }


def birth_free_probability(depth: float, epsilon: float, c2: float) -> Dict[str, float]:
    """Probability that a (2 ceil(c2 T) + 1) x T space-time box holds no dot and no cross.

    Dots and crosses together fall at rate eps c2 per vertex. The complement is
    bounded by (2 c2 T + 3) T eps c2.
    """
    if depth < 0 or not 0 <= epsilon <= 1 or c2 <= 0:
        raise ParameterError("need T >= 0, eps in [0, 1] and c2 > 0")
    width = 2 * math.ceil(c2 * depth) + 1
    probability = math.exp(-width * depth * epsilon * c2)
    return {
        "probability": probability,
        "complement": 1.0 - probability,
        "complement_bound": (2 * c2 * depth + 3) * depth * epsilon * c2,
    }


def exact_report_rows(ns: Sequence[int], c1: float, c2: float,
                      epsilons: Sequence[float]) -> List[ExactReportRow]:
    """One row per (N, eps): B, u1_bar(B), v1_bar, the exact stationary mean and the gap."""
    _check_costs(c1, c2)
    params_base = dict(c1=c1, c2=c2)
    rows = []
    for n in ns:
        for eps in epsilons:
            B = b_of(eps, n)
            u = u1_or_limit(B, c1, c2)
            mean = gap = None
            if eps > 0:
                mean = stationary(build_birth_death(n, Params(epsilon=eps, **params_base))).mean
                gap = mean - u
            rows.append(ExactReportRow(N=n, c1=c1, c2=c2, epsilon=eps, B=B, u1_bar=u,
                                       v1_bar=v1_bar(c1, c2), stationary_mean=mean, gap=gap))
    logger.info(f"exact report: {len(rows)} rows for N in {list(ns)}")
    return rows
