"""Influence sets on the ring, read backwards from a graphical event log.

Walking back in time from (x, t), the set of sites that can reach x or x+1 by
an oriented path of solid and dashed arrows is an interval [l, r] that grows by
one whenever an arrow enters it from outside at one of its ends. Coordinates
are kept unwrapped (l may go negative, r may exceed N-1); a vertex y is in the
interval iff y = k mod N for some k in [l, r].
"""

import math
from typing import Dict, List, NamedTuple, Optional

import numpy as np

from engine import ARROWS, FLIP, EventLog, GraphicalEngine, run
from dynamics import initial_configuration
from errors import GraphError, LogWindowError, ParameterError
from graph import make_cycle
from logger_config import setup_logger
from observables import ObservableAccumulator
from sampling import RandomStream
from schemas import Budget, InitialLaw, Params

logger = setup_logger(__name__, 'influence.log')


class InfluenceSlab(NamedTuple):
    """Between ``start`` and ``end`` the influencing vertices are [left, right] (mod N)."""

    start: float
    end: float
    left: int
    right: int

    @property
    def width(self) -> int:
        return self.right - self.left + 1


def _sweep(times: np.ndarray, sources: np.ndarray, targets: np.ndarray, n: int, x: int,
           t: float, depth: float, stop_width: Optional[int] = None) -> List[InfluenceSlab]:
    """Backward sweep over arrows sorted by time; only arrows in [t - depth, t] are used."""
    lo = int(np.searchsorted(times, t - depth, side="left"))
    hi = int(np.searchsorted(times, t, side="right"))
    left, right = x, x + 1
    slabs = []
    upper = t
    for k in range(hi - 1, lo - 1, -1):
        if right - left + 1 >= n:
            break
        src, dst = int(sources[k]), int(targets[k])
        if dst == left % n and src == (left - 1) % n:
            slabs.append(InfluenceSlab(float(times[k]), upper, left, right))
            upper = float(times[k])
            left -= 1
        elif dst == right % n and src == (right + 1) % n:
            slabs.append(InfluenceSlab(float(times[k]), upper, left, right))
            upper = float(times[k])
            right += 1
        else:
            continue
        if stop_width is not None and right - left + 1 > stop_width:
            break
    if right - left + 1 > n:
        right = left + n - 1
    slabs.append(InfluenceSlab(t - depth, upper, left, right))
    return slabs


def _arrow_arrays(log: EventLog):
    times, sources, targets = [], [], []
    for event in log:
        if event.kind == FLIP:
            raise ParameterError("influence sets need the arrows of a graphical event log")
        if event.kind in ARROWS:
            times.append(event.time)
            sources.append(event.source)
            targets.append(event.vertex)
    return (np.asarray(times, dtype=np.float64), np.asarray(sources, dtype=np.int64),
            np.asarray(targets, dtype=np.int64))


def influence_set(log: EventLog, x: int, t: float, depth: float) -> List[InfluenceSlab]:
    """Space-time points that reach edge (x, x+1) at time t, back to time t - depth.

    Args:
        log: event log of a GraphicalEngine run on a ring
        x: left end of the observed edge
        t: observation time
        depth: how far back to look (T)

    Returns:
        Slabs ordered from time t backwards; consecutive slabs share an end point
        and the last one ends at t - depth.
    """
    if not log.ring:
        raise GraphError("influence sets are defined on the ring only")
    n = log.vertex_count
    if not 0 <= x < n:
        raise ParameterError(f"vertex {x} out of range 0..{n - 1}")
    if depth < 0:
        raise ParameterError(f"depth must be non-negative, got {depth}")
    if log.covered_from > t - depth:
        raise LogWindowError(
            f"log covers times from {log.covered_from:.6g}; window starts at {t - depth:.6g}"
        )
    if log.covered_to < t:
        raise LogWindowError(f"log covers times up to {log.covered_to:.6g}, before t={t:.6g}")
    times, sources, targets = _arrow_arrays(log)
    return _sweep(times, sources, targets, n, x, t, depth)


def influence_width(slabs: List[InfluenceSlab]) -> int:
    """Width of the influence interval at the bottom of the window."""
    return slabs[-1].width


def width_threshold(c2: float, depth: float) -> int:
    """2 ceil(c2 T) + 2: the width exceeded only with probability at most exp(-c2 T / 8)."""
    return 2 * math.ceil(c2 * depth) + 2


def width_tail_frequency(n: int, params: Params, depth: float, windows: int,
                         seed: int = 0, spacing: int = None) -> Dict[str, float]:
    """Empirical frequency with which the influence width at depth T exceeds 2 ceil(c2 T) + 2.

    One graphical run on a ring of size ``n`` is advanced in blocks of length
    ``depth``; after each block the influence interval of every ``spacing``-th
    edge is read back over the block just simulated.

    Returns:
        dict with ``frequency``, ``threshold``, ``bound`` (= exp(-c2 T / 8)),
        ``windows`` and ``exceed``
    """
    threshold = width_threshold(params.c2, depth)
    spacing = spacing or max(1, threshold // 2)
    if n <= 2 * threshold + 2:
        raise ParameterError(f"ring of size {n} is too small for windows of width {threshold}")
    graph = make_cycle(n)
    rng = RandomStream(seed, 0, 0)
    config = initial_configuration(graph, InitialLaw(kind="bernoulli", p=0.5), rng)
    engine = GraphicalEngine(graph, params, config, rng, log_events=True)
    reach = threshold + 2
    positions = list(range(0, n, spacing))

    done = exceed = 0
    while done < windows:
        start = engine.time
        engine.log = EventLog(n, ring=True, start_time=start)
        run(engine, Budget(time=depth), ObservableAccumulator(graph))
        t = start + depth
        times, sources, targets = _arrow_arrays(engine.log)
        for x in positions:
            if done >= windows:
                break
            offset = (targets - x) % n
            near = (offset <= reach) | (offset >= n - reach)
            slabs = _sweep(times[near], sources[near], targets[near], n, x, t, depth,
                           stop_width=threshold)
            if influence_width(slabs) > threshold:
                exceed += 1
            done += 1
    frequency = exceed / done
    bound = math.exp(-params.c2 * depth / 8)
    logger.info(f"influence width tail: c2T={params.c2 * depth:g}, {exceed}/{done} windows "
                f"wider than {threshold}, bound {bound:.4g}")
    return {"frequency": frequency, "threshold": threshold, "bound": bound,
            "windows": done, "exceed": exceed}
