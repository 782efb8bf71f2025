"""
Undirected simple graphs on dense node ids 0..n-1 and the elementary
structural queries shared by the generators, connectivity checks and experiments.
"""
from collections import Counter
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components as _csgraph_components


def _normalize_pair(i, j, node_count):
    i, j = int(i), int(j)
    if i == j:
        raise ValueError(f'self-loop at node {i}')
    if not (0 <= i < node_count and 0 <= j < node_count):
        raise ValueError(f'edge ({i}, {j}) outside node range 0..{node_count - 1}')
    return (i, j) if i < j else (j, i)


class GraphTopology:
    """
    Immutable undirected simple graph.

    Adjacency is kept twice: a global frozenset of (i, j) pairs with i < j for
    O(1) membership, and per-node neighbor frozensets for O(deg) iteration.
    Every operation that "fails" nodes or links builds a new graph.
    """

    def __init__(self, node_count, edges=()):
        if node_count < 0:
            raise ValueError(f'node count must be non-negative, got {node_count}')
        self._node_count = int(node_count)
        self._edges = frozenset(_normalize_pair(i, j, self._node_count) for i, j in edges)
        self._neighbors = self._build_neighbors()

    @classmethod
    def from_arrays(cls, node_count, rows, cols):
        """
        Build from two parallel integer arrays of endpoints (as produced by numpy samplers).
        """
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        return cls(node_count, zip(rows.tolist(), cols.tolist()))

    @classmethod
    def complete(cls, node_count):
        return cls(node_count, ((i, j) for i in range(node_count) for j in range(i + 1, node_count)))

    def _build_neighbors(self):
        adjacency = [set() for _ in range(self._node_count)]
        for i, j in self._edges:
            adjacency[i].add(j)
            adjacency[j].add(i)
        return tuple(frozenset(a) for a in adjacency)

    @property
    def node_count(self):
        return self._node_count

    @property
    def edges(self):
        return self._edges

    @property
    def edge_count(self):
        return len(self._edges)

    def neighbors(self, node):
        return self._neighbors[node]

    def degree(self, node):
        return len(self._neighbors[node])

    def degrees(self):
        return np.fromiter((len(a) for a in self._neighbors), dtype=np.int64, count=self._node_count)

    def has_edge(self, i, j):
        return (i, j) in self._edges if i < j else (j, i) in self._edges

    def is_complete(self):
        return self.edge_count == self._node_count * (self._node_count - 1) // 2

    def edge_array(self):
        """
        Edges as a sorted (m, 2) integer array, rows (i, j) with i < j.
        """
        if not self._edges:
            return np.empty((0, 2), dtype=np.int64)
        return np.array(sorted(self._edges), dtype=np.int64)

    @cached_property
    def csr(self):
        """
        Symmetric scipy CSR adjacency matrix (int8 ones).
        """
        pairs = self.edge_array()
        rows = np.concatenate((pairs[:, 0], pairs[:, 1]))
        cols = np.concatenate((pairs[:, 1], pairs[:, 0]))
        data = np.ones(len(rows), dtype=np.int8)
        return coo_matrix((data, (rows, cols)), shape=(self._node_count, self._node_count)).tocsr()

    def dump_edge_list(self, stream):
        """
        Write the "n=<count>" header followed by one "i j" line per edge, i < j, sorted.
        """
        stream.write(f'n={self._node_count}\n')
        for i, j in sorted(self._edges):
            stream.write(f'{i} {j}\n')

    @classmethod
    def load_edge_list(cls, stream):
        header = stream.readline().strip()
        if not header.startswith('n='):
            raise ValueError(f'edge list must start with "n=<count>", got {header!r}')
        node_count = int(header[2:])
        edges = []
        for line_no, line in enumerate(stream, start=2):
            line = line.strip()
            if not line:
                continue
            try:
                i, j = (int(token) for token in line.split())
            except ValueError as err:
                raise ValueError(f'line {line_no}: expected "i j", got {line!r}') from err
            edges.append((i, j))
        return cls(node_count, edges)

    def __eq__(self, other):
        if not isinstance(other, GraphTopology):
            return NotImplemented
        return self._node_count == other._node_count and self._edges == other._edges

    def __hash__(self):
        return hash((self._node_count, self._edges))

    def __repr__(self):
        return f'GraphTopology(node_count={self._node_count}, edge_count={self.edge_count})'


@dataclass(frozen=True)
class DegreeHistogram:
    """Number of nodes having each degree value h."""
    counts: dict = field(default_factory=dict)

    @property
    def node_total(self):
        return sum(self.counts.values())

    @property
    def edge_total(self):
        return sum(h * c for h, c in self.counts.items()) // 2

    def count(self, h):
        return self.counts.get(h, 0)


def intersect_graphs(g1, g2):
    """
    Edge-set intersection of two graphs on the same node set.
    """
    if g1.node_count != g2.node_count:
        raise ValueError(f'node counts differ: {g1.node_count} != {g2.node_count}')
    small, large = (g1, g2) if g1.edge_count <= g2.edge_count else (g2, g1)
    return GraphTopology(g1.node_count, (e for e in small.edges if e in large.edges))


def min_degree(g):
    if g.node_count < 1:
        raise ValueError('minimum degree of a graph with no nodes is undefined')
    return min(len(g.neighbors(v)) for v in range(g.node_count))


def degree_histogram(g):
    return DegreeHistogram(dict(Counter(len(g.neighbors(v)) for v in range(g.node_count))))


def connected_components(g):
    """
    Partition of the node ids into maximal connected blocks, ordered by smallest member.
    """
    if g.node_count == 0:
        return []
    _, labels = _csgraph_components(g.csr, directed=False)
    blocks = {}
    for node, label in enumerate(labels.tolist()):
        blocks.setdefault(label, set()).add(node)
    return sorted((frozenset(b) for b in blocks.values()), key=min)
