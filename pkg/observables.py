"""Exact time integrals of the observables of a trajectory.

Between events the configuration is constant, so every observable is a
step function and its integral is accumulated exactly as value * dt.
"""

from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from graph import Graph


class ObservableAccumulator:
    """Running integrals of X_t, residence in target configurations,
    agreement along designated edges and task-1 counts in spatial windows.

    Every integral is also kept restricted to [burnin, s] so post-burn-in
    averages can be reported next to the from-zero ones.

    Args:
        graph: the graph the trajectory lives on
        targets: named configurations whose residence time is tracked
        agreement_edges: edges (x, y) whose agreement 1{xi(x) = xi(y)} is integrated
        windows: named vertex subsets whose task-1 fraction is integrated
        burnin: start of the post-burn-in integrals
    """

    def __init__(self, graph: Graph, targets: Optional[Dict[str, np.ndarray]] = None,
                 agreement_edges: Optional[Sequence[Tuple[int, int]]] = None,
                 windows: Optional[Dict[str, Sequence[int]]] = None,
                 burnin: float = 0.0):
        self.graph = graph
        self.n = graph.vertex_count
        self.burnin = float(burnin)

        self._target_names = list((targets or {}).keys())
        self._targets = [np.asarray(t, dtype=np.int8) for t in (targets or {}).values()]

        self._edges = [tuple(e) for e in (agreement_edges or [])]
        self._incident: List[List[int]] = [[] for _ in range(self.n)]
        for k, (x, y) in enumerate(self._edges):
            self._incident[x].append(k)
            self._incident[y].append(k)

        self._window_names = list((windows or {}).keys())
        self._window_sizes = [len(w) for w in (windows or {}).values()]
        self._window_of: List[List[int]] = [[] for _ in range(self.n)]
        for k, members in enumerate((windows or {}).values()):
            for x in members:
                self._window_of[x].append(k)

        self._tasks = None
        self.time = 0.0
        self.start_time = 0.0

    # ------------------------------------------------------------------ state

    def start(self, tasks: np.ndarray, time: float = 0.0):
        """Reset every integral and take the current state from ``tasks``."""
        self._tasks = np.array(tasks, dtype=np.int8)
        self.time = float(time)
        self.start_time = float(time)
        self.events = 0
        self.absorbed_at: Optional[float] = None

        self.x = int(np.count_nonzero(self._tasks == 1))
        self.distances = [int(np.count_nonzero(self._tasks != t)) for t in self._targets]
        tasks = self._tasks.tolist()
        self.agree = sum(1 for x, y in self._edges if tasks[x] == tasks[y])
        self.window_counts = [0] * len(self._window_names)
        for x in range(self.n):
            if tasks[x] == 1:
                for k in self._window_of[x]:
                    self.window_counts[k] += 1

        self.x_integral = 0.0
        self.x_integral_post = 0.0
        self.residence = [0.0] * len(self._targets)
        self.residence_post = [0.0] * len(self._targets)
        self.agree_integral = 0.0
        self.agree_integral_post = 0.0
        self.window_integrals = [0.0] * len(self._window_names)
        self.window_integrals_post = [0.0] * len(self._window_names)

    def advance(self, dt: float):
        """Integrate the current (constant) state over the next ``dt`` time units."""
        if dt <= 0.0:
            return
        begin = self.time
        end = begin + dt
        if begin >= self.burnin:
            post = dt
        elif end > self.burnin:
            post = end - self.burnin
        else:
            post = 0.0

        self.x_integral += self.x * dt
        for k, d in enumerate(self.distances):
            if d == 0:
                self.residence[k] += dt
                self.residence_post[k] += post
        if self._edges:
            self.agree_integral += self.agree * dt
        for k, count in enumerate(self.window_counts):
            self.window_integrals[k] += count * dt
        if post:
            self.x_integral_post += self.x * post
            if self._edges:
                self.agree_integral_post += self.agree * post
            for k, count in enumerate(self.window_counts):
                self.window_integrals_post[k] += count * post
        self.time = end

    def record_flip(self, x: int, old: int, new: int):
        """Apply the task change of vertex x to every tracked counter."""
        self.events += 1
        if old == new:
            return
        tasks = self._tasks
        self.x += 1 if new == 1 else -1
        for k, target in enumerate(self._targets):
            self.distances[k] += -1 if target[x] == new else 1
        for k in self._incident[x]:
            a, b = self._edges[k]
            other = tasks[b] if a == x else tasks[a]
            self.agree += (1 if other == new else 0) - (1 if other == old else 0)
        for k in self._window_of[x]:
            self.window_counts[k] += 1 if new == 1 else -1
        tasks[x] = new

    def record_noop(self):
        self.events += 1

    def mark_absorbed(self):
        if self.absorbed_at is None:
            self.absorbed_at = self.time

    # ------------------------------------------------------------- read-outs

    @property
    def elapsed(self) -> float:
        return self.time - self.start_time

    @property
    def post_elapsed(self) -> float:
        return max(0.0, self.time - max(self.burnin, self.start_time))

    def phi(self) -> float:
        """Fraction of time and population at task 1 since the start.

        With zero elapsed time this is the current fraction X/N.
        """
        if self.elapsed <= 0.0:
            return self.x / self.n
        return self.x_integral / (self.elapsed * self.n)

    def phi_post_burnin(self) -> Optional[float]:
        if self.post_elapsed <= 0.0:
            return None
        return self.x_integral_post / (self.post_elapsed * self.n)

    def residence_fractions(self) -> Dict[str, float]:
        if self.elapsed <= 0.0:
            return {name: float(d == 0) for name, d in zip(self._target_names, self.distances)}
        return {name: r / self.elapsed for name, r in zip(self._target_names, self.residence)}

    def agreement_density(self) -> Optional[float]:
        if not self._edges:
            return None
        if self.elapsed <= 0.0:
            return self.agree / len(self._edges)
        return self.agree_integral / (self.elapsed * len(self._edges))

    def agreement_post_burnin(self) -> Optional[float]:
        if not self._edges or self.post_elapsed <= 0.0:
            return None
        return self.agree_integral_post / (self.post_elapsed * len(self._edges))

    def window_phi(self) -> Dict[str, float]:
        result = {}
        for name, size, count, integral in zip(self._window_names, self._window_sizes,
                                               self.window_counts, self.window_integrals):
            if self.elapsed <= 0.0:
                result[name] = count / size
            else:
                result[name] = integral / (self.elapsed * size)
        return result

    def window_phi_post_burnin(self) -> Dict[str, float]:
        if self.post_elapsed <= 0.0:
            return {}
        return {
            name: integral / (self.post_elapsed * size)
            for name, size, integral in zip(self._window_names, self._window_sizes,
                                            self.window_integrals_post)
        }

    def tasks(self) -> np.ndarray:
        return self._tasks.copy()


def centered_window(n: int, half_width: int, center: int = 0) -> List[int]:
    """Vertices {center - M, ..., center + M} on a ring of size N."""
    half_width = min(half_width, (n - 1) // 2)
    return [(center + k) % n for k in range(-half_width, half_width + 1)]
