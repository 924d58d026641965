"""Random streams and weighted-sampling structures used by the engines."""

from typing import Sequence

import numpy as np

from config import settings


class RandomStream:
    """Buffered counter-based random stream.

    Each stream is a Philox generator keyed by ``(seed, *keys)`` through a
    SeedSequence, so replicate r of sweep point k draws from an independent
    stream that does not depend on how replicates are scheduled. Variates are
    drawn in blocks to keep per-event overhead low.
    """

    def __init__(self, seed: int, *keys: int, block: int = None):
        self.seed = seed
        self.keys = tuple(keys)
        self._block = block or settings.RNG_BLOCK_SIZE
        entropy = [int(seed)] + [int(k) for k in keys]
        self.generator = np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))
        self._exp = self.generator.standard_exponential(self._block).tolist()
        self._exp_pos = 0
        self._uni = self.generator.random(self._block).tolist()
        self._uni_pos = 0

    def exponential(self) -> float:
        """A standard exponential variate (mean 1)."""
        if self._exp_pos == self._block:
            self._exp = self.generator.standard_exponential(self._block).tolist()
            self._exp_pos = 0
        value = self._exp[self._exp_pos]
        self._exp_pos += 1
        return value

    def uniform(self) -> float:
        """A uniform variate on [0, 1)."""
        if self._uni_pos == self._block:
            self._uni = self.generator.random(self._block).tolist()
            self._uni_pos = 0
        value = self._uni[self._uni_pos]
        self._uni_pos += 1
        return value

    def integer(self, n: int) -> int:
        """Uniform integer in 0..n-1."""
        return min(int(self.uniform() * n), n - 1)


class SumTree:
    """Binary partial-sum tree over non-negative leaf weights.

    tree[1] holds the total; node i has children 2i and 2i+1; leaves start at
    ``capacity`` (the next power of two >= size). Updates recompute parents
    from their children, so there is no subtraction drift; ``rebuild`` redoes
    every level from the leaves.
    """

    # above this many changed leaves a full level-by-level rebuild is cheaper
    _BULK_FRACTION = 8

    def __init__(self, size: int):
        assert size >= 1
        capacity = 1
        while capacity < size:
            capacity *= 2
        self.size = size
        self._capacity = capacity
        self._tree = np.zeros(2 * capacity, dtype=np.float64)

    @property
    def total(self) -> float:
        return float(self._tree[1])

    def __getitem__(self, index: int) -> float:
        return float(self._tree[self._capacity + index])

    def leaves(self) -> np.ndarray:
        return self._tree[self._capacity:self._capacity + self.size]

    def rebuild(self, weights: Sequence[float] = None):
        """Set all leaves (optionally) and recompute every internal node."""
        cap = self._capacity
        if weights is not None:
            self._tree[cap:cap + self.size] = weights
        width = cap
        while width > 1:
            level = self._tree[width:2 * width]
            self._tree[width // 2:width] = level[0::2] + level[1::2]
            width //= 2

    def update(self, indices: np.ndarray, weights: np.ndarray):
        """Set the given leaves and refresh their ancestors."""
        cap = self._capacity
        tree = self._tree
        if len(indices) * self._BULK_FRACTION >= cap:
            tree[cap + indices] = weights
            self.rebuild()
            return
        if len(indices) <= 4:
            for i, w in zip(indices.tolist(), weights.tolist()):
                node = cap + i
                tree[node] = w
                node //= 2
                while node:
                    tree[node] = tree[2 * node] + tree[2 * node + 1]
                    node //= 2
            return
        nodes = cap + indices
        tree[nodes] = weights
        # all leaves sit on the same level, so each pass handles one level
        while cap > 1:
            nodes = np.unique(nodes // 2)
            tree[nodes] = tree[2 * nodes] + tree[2 * nodes + 1]
            cap //= 2

    def find(self, value: float) -> int:
        """Leaf index whose cumulative weight interval contains ``value``.

        ``value`` must lie in [0, total). Zero-weight leaves are never returned.
        """
        tree = self._tree
        node = 1
        cap = self._capacity
        while node < cap:
            left = 2 * node
            left_value = tree[left]
            if value < left_value or tree[left + 1] <= 0.0:
                node = left
            else:
                value -= left_value
                node = left + 1
        return node - cap


class FenwickTree:
    """Binary indexed tree of integer counts with prefix sums in O(log n)."""

    def __init__(self, values: Sequence[int]):
        self.size = len(values)
        self._tree = [0] * (self.size + 1)
        for i, v in enumerate(values):
            if v:
                self.add(i, v)

    def add(self, index: int, delta: int):
        i = index + 1
        while i <= self.size:
            self._tree[i] += delta
            i += i & -i

    def prefix(self, count: int) -> int:
        """Sum of the first ``count`` entries."""
        total = 0
        i = count
        while i > 0:
            total += self._tree[i]
            i -= i & -i
        return total
