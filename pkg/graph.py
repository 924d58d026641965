"""Communication networks for the division-of-labor process.

Graphs are static, undirected and simple, with dense integer vertex ids
0..N-1 and sorted adjacency lists. Generators and component/colouring
queries go through networkx; each graph also carries CSR arrays
(``indptr``/``indices``) so the engines can update neighbours with numpy
fancy indexing.
"""

from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, Hashable, Iterator, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np

from errors import GraphError
@dataclass(frozen=True)
class Graph:
    """Undirected simple graph on vertices 0..N-1.

    Attributes:
        vertex_count: number of vertices N
        adjacency: for each vertex, the sorted tuple of its neighbours
        spec: the graph spec string this graph was built from (e.g. ``cycle:100``)
    """

    vertex_count: int
    adjacency: Tuple[Tuple[int, ...], ...]
    spec: str = ""
    indptr: np.ndarray = field(init=False, repr=False, compare=False)
    indices: np.ndarray = field(init=False, repr=False, compare=False)
    degrees: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.vertex_count < 1:
            raise GraphError(f"a graph needs at least one vertex, got N={self.vertex_count}")
        if len(self.adjacency) != self.vertex_count:
            raise GraphError("adjacency must have one entry per vertex")

        n = self.vertex_count
        degrees = np.fromiter((len(nbrs) for nbrs in self.adjacency), dtype=np.int64, count=n)
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(degrees, out=indptr[1:])
        indices = np.fromiter((y for nbrs in self.adjacency for y in nbrs), dtype=np.int64,
                              count=int(indptr[-1]))
        sources = np.repeat(np.arange(n, dtype=np.int64), degrees)

        if indices.size:
            if indices.min() < 0 or indices.max() >= n:
                raise GraphError("neighbour id out of range")
            loops = np.flatnonzero(sources == indices)
            if loops.size:
                raise GraphError(f"self-loop at {int(sources[loops[0]])}")
            # strictly increasing inside each row
            steps = np.diff(indices)
            same_row = sources[1:] == sources[:-1]
            bad = np.flatnonzero(same_row & (steps <= 0))
            if bad.size:
                x = int(sources[bad[0]])
                raise GraphError(f"adjacency of {x} must be sorted without duplicates")
            forward = np.sort(sources * n + indices)
            backward = np.sort(indices * n + sources)
            if not np.array_equal(forward, backward):
                raise GraphError("adjacency is not symmetric")

        object.__setattr__(self, "degrees", degrees)
        object.__setattr__(self, "indptr", indptr)
        object.__setattr__(self, "indices", indices)

    @property
    def edge_count(self) -> int:
        return int(self.indptr[-1]) // 2

    def neighbors(self, x: int) -> Tuple[int, ...]:
        return self.adjacency[x]

    def neighbor_array(self, x: int) -> np.ndarray:
        """Neighbours of x as a read-only view into the CSR index array."""
        return self.indices[self.indptr[x]:self.indptr[x + 1]]

    def degree(self, x: int) -> int:
        return len(self.adjacency[x])

    def edges(self) -> Iterator[Tuple[int, int]]:
        """Yield every undirected edge once as (x, y) with x < y."""
        for x, nbrs in enumerate(self.adjacency):
            for y in nbrs:
                if x < y:
                    yield x, y

    @cached_property
    def nx_graph(self) -> nx.Graph:
        """The same graph as a networkx ``Graph`` on nodes 0..N-1."""
        g = nx.empty_graph(self.vertex_count)
        g.add_edges_from(self.edges())
        return g

    def components(self) -> List[List[int]]:
        """Connected components, each sorted, ordered by lowest vertex id."""
        return sorted((sorted(c) for c in nx.connected_components(self.nx_graph)),
                      key=lambda members: members[0])

    def is_connected(self) -> bool:
        return nx.is_connected(self.nx_graph)

    def is_ring(self) -> bool:
        """True when vertex x is adjacent exactly to x-1 and x+1 (mod N)."""
        n = self.vertex_count
        if n < 3:
            return False
        return all(
            nbrs == tuple(sorted({(x - 1) % n, (x + 1) % n}))
            for x, nbrs in enumerate(self.adjacency)
        )


@dataclass(frozen=True)
class Bipartition:
    """Two-colouring of a bipartite graph.

    Attributes:
        side: for each vertex, 1 or 2
    """

    side: Tuple[int, ...]

    @property
    def n1(self) -> int:
        return sum(1 for s in self.side if s == 1)

    @property
    def n2(self) -> int:
        return len(self.side) - self.n1

    def vertices(self, which: int) -> List[int]:
        return [x for x, s in enumerate(self.side) if s == which]


def from_networkx(g: nx.Graph, spec: str = "",
                  labels: Optional[Dict[Hashable, int]] = None) -> Graph:
    """Convert a simple networkx graph into a ``Graph``.

    ``labels`` maps nodes to ids 0..N-1; without it the nodes must already be
    those integers.
    """
    if labels is not None:
        g = nx.relabel_nodes(g, labels)
    n = g.number_of_nodes()
    if n < 1:
        raise GraphError("a graph needs at least one vertex, got N=0")
    if set(g.nodes) != set(range(n)):
        raise GraphError("vertex ids must be 0..N-1")
    if nx.number_of_selfloops(g):
        raise GraphError("self-loops are not allowed")
    adjacency = tuple(tuple(sorted(g.adj[x])) for x in range(n))
    graph = Graph(n, adjacency, spec=spec)
    object.__setattr__(graph, "nx_graph", g)
    return graph


def make_complete(n: int) -> Graph:
    """Complete graph K_N."""
    if n < 1:
        raise GraphError(f"complete graph needs N >= 1, got {n}")
    return from_networkx(nx.complete_graph(n), spec=f"complete:{n}")


def make_cycle(n: int) -> Graph:
    """Ring (one-dimensional torus) with N vertices."""
    if n < 3:
        raise GraphError(f"cycle needs N >= 3, got {n}")
    return from_networkx(nx.cycle_graph(n), spec=f"cycle:{n}")


def make_path(n: int) -> Graph:
    """Path 0-1-...-(N-1)."""
    if n < 1:
        raise GraphError(f"path needs N >= 1, got {n}")
    return from_networkx(nx.path_graph(n), spec=f"path:{n}")


def make_grid(length: int, height: int) -> Graph:
    """Lattice box Z^2 ∩ [0,L]x[0,H] with nearest-neighbour edges.

    Vertex (x1, x2) has id x2 * (L + 1) + x1, so there are (L+1)(H+1) vertices.
    """
    if length < 1 or height < 1:
        raise GraphError(f"grid needs L, H >= 1, got {length}x{height}")
    width = length + 1
    g = nx.grid_2d_graph(width, height + 1)
    return from_networkx(g, spec=f"grid:{length}x{height}",
                         labels={(x1, x2): x2 * width + x1 for x1, x2 in g.nodes})


def make_torus2d(length: int, height: int) -> Graph:
    """Two-dimensional periodic torus with L*H vertices and degree 4."""
    if length < 3 or height < 3:
        raise GraphError(f"torus needs L, H >= 3, got {length}x{height}")
    g = nx.grid_2d_graph(length, height, periodic=True)
    return from_networkx(g, spec=f"torus2d:{length}x{height}",
                         labels={(x1, x2): x2 * length + x1 for x1, x2 in g.nodes})


def make_edgeless(n: int) -> Graph:
    """N isolated vertices."""
    if n < 1:
        raise GraphError(f"edgeless graph needs N >= 1, got {n}")
    return from_networkx(nx.empty_graph(n), spec=f"edgeless:{n}")


def make_complete_bipartite(n1: int, n2: int) -> Graph:
    """K_{N1,N2}: vertices 0..N1-1 on one side, N1..N1+N2-1 on the other."""
    if n1 < 1 or n2 < 1:
        raise GraphError(f"complete bipartite graph needs N1, N2 >= 1, got {n1},{n2}")
    return from_networkx(nx.complete_bipartite_graph(n1, n2),
                         spec=f"complete-bipartite:{n1},{n2}")


def find_bipartition(graph: Graph) -> Optional[Bipartition]:
    """Two-colour the graph, or return None if it has an odd cycle.

    The lowest-id vertex of each component is put on side 1.
    """
    g = graph.nx_graph
    if not nx.is_bipartite(g):
        return None
    colour = nx.bipartite.color(g)
    side = [0] * graph.vertex_count
    for members in graph.components():
        flip = colour[members[0]]
        for x in members:
            side[x] = 1 + (colour[x] ^ flip)
    return Bipartition(tuple(side))


def checkerboard(bipartition: Bipartition) -> Tuple[np.ndarray, np.ndarray]:
    """The two configurations (xi_plus, xi_minus).

    xi_plus puts task 1 on side 1 and task 2 on side 2; xi_minus is its mirror.
    """
    side = np.asarray(bipartition.side, dtype=np.int8)
    return side.copy(), (3 - side).astype(np.int8)


def _dims(token: str, spec: str) -> Tuple[int, int]:
    parts = token.lower().split("x")
    if len(parts) != 2:
        raise GraphError(f"expected LxH in graph spec {spec!r}")
    return int(parts[0]), int(parts[1])


def parse_graph_spec(spec: str) -> Graph:
    """Build a graph from ``complete:N``, ``cycle:N``, ``torus2d:LxH``, ``grid:LxH``,
    ``edgeless:N``, ``path:N`` or ``complete-bipartite:N1,N2``."""
    kind, sep, arg = spec.strip().partition(":")
    if not sep or not arg:
        raise GraphError(f"malformed graph spec {spec!r}")
    try:
        if kind == "complete":
            return make_complete(int(arg))
        if kind == "cycle":
            return make_cycle(int(arg))
        if kind == "path":
            return make_path(int(arg))
        if kind == "edgeless":
            return make_edgeless(int(arg))
        if kind == "grid":
            return make_grid(*_dims(arg, spec))
        if kind == "torus2d":
            return make_torus2d(*_dims(arg, spec))
        if kind == "complete-bipartite":
            n1, _, n2 = arg.partition(",")
            return make_complete_bipartite(int(n1), int(n2))
    except ValueError as e:
        if isinstance(e, GraphError):
            raise
        raise GraphError(f"malformed graph spec {spec!r}: {e}") from e
    raise GraphError(f"unknown graph kind {kind!r} in {spec!r}")


def require_bipartite_connected(graph: Graph) -> Bipartition:
    """Return the bipartition of a connected bipartite graph or raise GraphError."""
    bipartition = find_bipartition(graph)
    if bipartition is None:
        raise GraphError(f"graph {graph.spec or graph.vertex_count} is not bipartite")
    if not graph.is_connected():
        raise GraphError(f"graph {graph.spec or graph.vertex_count} is not connected")
    return bipartition


def require_ring(graph: Graph) -> None:
    if not graph.is_ring():
        raise GraphError(f"graph {graph.spec or graph.vertex_count} is not a ring")


def ring_edges(n: int) -> Sequence[Tuple[int, int]]:
    """Edges (x, x+1 mod N) of a ring, edge index x."""
    return [(x, (x + 1) % n) for x in range(n)]
