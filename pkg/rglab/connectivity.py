"""
Exact k-connectivity and node-failure resilience decisions.

k = 1 is decided by a component count, k = 2 by an articulation-point search,
and larger k by unit-capacity max-flows on the node-split network
(Menger: k-connected iff every non-adjacent pair has k internally disjoint paths).
"""
from dataclasses import dataclass
from itertools import combinations

import networkx as nx
import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components as _csgraph_components
from scipy.sparse.csgraph import maximum_flow

from .graph import GraphTopology, min_degree

# exhaustive removal enumerates C(n, k-1) subsets
ORACLE_MAX_NODES = 16


class OracleSizeError(ValueError):
    """The exhaustive removal oracle refuses graphs above ORACLE_MAX_NODES nodes."""


@dataclass(frozen=True)
class ResilienceVerdict:
    connected: bool
    min_degree: int
    k_connected_up_to: int
    query_k: int
    satisfied: bool


def is_connected(g):
    if g.node_count == 0:
        return False
    count, _ = _csgraph_components(g.csr, directed=False)
    return count == 1


def to_networkx(g):
    """The same topology as a networkx Graph, isolated nodes included."""
    graph = nx.Graph()
    graph.add_nodes_from(range(g.node_count))
    graph.add_edges_from(g.edges)
    return graph


def articulation_points(g):
    """
    Cut vertices of g.
    """
    return frozenset(nx.articulation_points(to_networkx(g)))


class _SplitNetwork:
    """
    Node v becomes v_in = 2v -> v_out = 2v+1 with capacity 1; every edge {u, v}
    becomes u_out -> v_in and v_out -> u_in with capacity n.
    """

    def __init__(self, g):
        n = g.node_count
        pairs = g.edge_array()
        u, v = pairs[:, 0], pairs[:, 1]
        nodes = np.arange(n, dtype=np.int64)
        tails = np.concatenate((2 * nodes, 2 * u + 1, 2 * v + 1))
        heads = np.concatenate((2 * nodes + 1, 2 * v, 2 * u))
        capacity = np.concatenate((np.ones(n), np.full(2 * len(pairs), n))).astype(np.int32)
        self.matrix = csr_matrix((capacity, (tails, heads)), shape=(2 * n, 2 * n))

    def local_connectivity(self, s, t):
        """Number of internally node-disjoint s-t paths, for non-adjacent s != t."""
        return int(maximum_flow(self.matrix, 2 * s + 1, 2 * t, method='dinic').flow_value)


def _separating_pairs(g):
    # a minimum separator either misses the min-degree node (then it splits it from a
    # non-neighbor) or contains it (then it splits two non-adjacent neighbors of it)
    degrees = g.degrees()
    source = int(np.argmin(degrees))
    for w in range(g.node_count):
        if w != source and not g.has_edge(source, w):
            yield source, w
    neighbors = sorted(g.neighbors(source))
    for x, y in combinations(neighbors, 2):
        if not g.has_edge(x, y):
            yield x, y


def vertex_connectivity(g):
    """
    kappa(g): the largest k for which g is k-connected (n - 1 for complete graphs).
    """
    n = g.node_count
    if n <= 1 or not is_connected(g):
        return 0
    if g.is_complete():
        return n - 1
    kappa = min_degree(g)
    network = _SplitNetwork(g)
    for s, t in _separating_pairs(g):
        kappa = min(kappa, network.local_connectivity(s, t))
        if kappa == 1:
            break
    return kappa


def _connectivity_at_least(g, k):
    network = _SplitNetwork(g)
    return all(network.local_connectivity(s, t) >= k for s, t in _separating_pairs(g))


def is_k_connected(g, k):
    """
    True iff g has at least k+1 nodes and stays connected after removing any k-1 nodes.

    The single-node graph is connected but not 1-connected.
    """
    if k < 1:
        raise ValueError(f'k must be at least 1, got {k}')
    if g.node_count < k + 1:
        return False
    if k == 1:
        return is_connected(g)
    if min_degree(g) < k or not is_connected(g):
        return False
    if g.is_complete():
        return True
    if k == 2:
        return not articulation_points(g)
    return _connectivity_at_least(g, k)


def _residual_connected(g, removed):
    survivors = [v for v in range(g.node_count) if v not in removed]
    if not survivors:
        return False
    seen = {survivors[0]}
    frontier = [survivors[0]]
    while frontier:
        node = frontier.pop()
        for nxt in g.neighbors(node):
            if nxt not in removed and nxt not in seen:
                seen.add(nxt)
                frontier.append(nxt)
    return len(seen) == len(survivors)


def brute_force_k_connected(g, k):
    """
    Definitional check: remove every (k-1)-subset of nodes and test what is left.
    """
    if g.node_count > ORACLE_MAX_NODES:
        raise OracleSizeError(f'refusing exhaustive removal on {g.node_count} > {ORACLE_MAX_NODES} nodes')
    if k < 1:
        raise ValueError(f'k must be at least 1, got {k}')
    if g.node_count < k + 1:
        return False
    return all(_residual_connected(g, frozenset(removed)) for removed in combinations(range(g.node_count), k - 1))


def survives_node_failures(g, m):
    """
    Connected after any m nodes fail, i.e. (m+1)-connected.
    """
    if m < 0:
        raise ValueError(f'failure budget m must be non-negative, got {m}')
    return is_k_connected(g, m + 1)


def survives_sampled_failures(g, m, samples, rng):
    """
    Necessary check only: remove `samples` random m-subsets and test each residual graph.
    """
    if m < 0:
        raise ValueError(f'failure budget m must be non-negative, got {m}')
    if g.node_count - m < 1:
        return False
    for _ in range(samples):
        victims = rng.choice(g.node_count, size=m, replace=False)
        if not is_connected(remove_nodes(g, victims.tolist())):
            return False
    return True


def remove_nodes(g, victims):
    """
    Graph on the surviving nodes, relabeled 0.. in their original order.
    """
    victims = frozenset(int(v) for v in victims)
    if any(not 0 <= v < g.node_count for v in victims):
        raise ValueError(f'victims must be node ids in 0..{g.node_count - 1}')
    relabel = {}
    for v in range(g.node_count):
        if v not in victims:
            relabel[v] = len(relabel)
    return GraphTopology(len(relabel), ((relabel[i], relabel[j]) for i, j in g.edges
                                        if i in relabel and j in relabel))


def min_degree_at_least(g, k):
    if k < 0:
        raise ValueError(f'k must be non-negative, got {k}')
    if k == 0 or g.node_count == 0:
        return True
    return min_degree(g) >= k


def resilience_verdict(g, k):
    return ResilienceVerdict(
        connected=is_connected(g),
        min_degree=min_degree(g) if g.node_count else 0,
        k_connected_up_to=vertex_connectivity(g),
        query_k=k,
        satisfied=is_k_connected(g, k))
