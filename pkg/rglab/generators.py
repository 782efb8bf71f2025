"""
Samplers for the random graphs of the interest-based social network model and
for the constructions used to couple it with simpler graphs: uniform and
binomial object rings, d-intersection graphs, Erdos-Renyi graphs, multiset
edge graphs, the binomial/uniform coupling and the Poissonized edge probability.

Every sampler takes an explicit numpy Generator; trial_stream() derives one per
(base_seed, trial_index, lane) so a trial is reproducible on its own.
"""
import math
from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.stats import poisson

from .graph import GraphTopology, intersect_graphs

# ring width / pool size below which rings are drawn by skipping repeats instead of a keyed shuffle
RING_REJECTION_CUTOFF = 0.1


class InfeasibleCouplingError(ValueError):
    """The binomial/uniform coupling needs K > 3 ln n."""


class DegenerateRegimeError(ValueError):
    """Parameters for which the Poissonized edge count has no positive mean."""


def trial_stream(base_seed, trial_index, lane=0):
    """
    Counter-based (Philox) generator keyed by (base_seed, trial_index, lane).
    """
    seed = np.random.SeedSequence(base_seed, spawn_key=(trial_index, lane))
    return np.random.Generator(np.random.Philox(seed))


@dataclass(frozen=True, eq=False)
class ObjectAssignment:
    """
    Object rings of all nodes as an n x P sparse incidence matrix.

    ring_size is K for the uniform variant and None for the binomial one.
    """
    incidence: csr_matrix
    pool_size: int
    ring_size: object = None

    @classmethod
    def from_rings(cls, rings, pool_size, ring_size=None):
        rings = [sorted(set(int(o) for o in ring)) for ring in rings]
        for ring in rings:
            if ring and not (0 <= ring[0] and ring[-1] < pool_size):
                raise ValueError(f'object ids must lie in 0..{pool_size - 1}')
        indptr = np.concatenate(([0], np.cumsum([len(r) for r in rings]))).astype(np.int64)
        indices = np.array([o for r in rings for o in r], dtype=np.int64)
        return cls(_incidence(indices, indptr, len(rings), pool_size), pool_size, ring_size)

    @property
    def node_count(self):
        return self.incidence.shape[0]

    def ring(self, node):
        start, end = self.incidence.indptr[node], self.incidence.indptr[node + 1]
        return frozenset(self.incidence.indices[start:end].tolist())

    @property
    def rings(self):
        return tuple(self.ring(i) for i in range(self.node_count))

    def ring_sizes(self):
        return np.diff(self.incidence.indptr)

    def object_counts(self):
        """U_i: number of nodes holding object i."""
        return np.bincount(self.incidence.indices, minlength=self.pool_size)

    def object_members(self, obj):
        """Nodes holding the given object."""
        return frozenset(self.incidence.getcol(obj).nonzero()[0].tolist())


@dataclass(frozen=True, eq=False)
class HalfCountSummary:
    object_counts: np.ndarray
    half_counts: np.ndarray
    total: int


@dataclass(frozen=True)
class CouplingThreshold:
    x: float
    admissible: bool
    bound: float


@dataclass(frozen=True)
class CoupledPair:
    h: GraphTopology
    g: GraphTopology
    coupling_valid: bool
    x: float


@dataclass(frozen=True)
class PoissonizationTerms:
    expected_half_count: float
    expected_total: float
    lam: float
    mu: float
    rho: float


def _incidence(indices, indptr, node_count, pool_size):
    data = np.ones(len(indices), dtype=np.int32)
    matrix = csr_matrix((data, indices, indptr), shape=(node_count, pool_size))
    matrix.sort_indices()
    return matrix


def _first_occurrences(block):
    """Mask of entries that are non-negative and not repeated earlier in their row."""
    order = np.argsort(block, axis=1, kind='stable')
    ordered = np.take_along_axis(block, order, axis=1)
    fresh = np.ones(block.shape, dtype=bool)
    fresh[:, 1:] = ordered[:, 1:] != ordered[:, :-1]
    first = np.empty(block.shape, dtype=bool)
    np.put_along_axis(first, order, fresh, axis=1)
    return first & (block >= 0)


def _distinct_rows(rng, node_count, width, pool_size):
    """
    node_count rows, each a uniformly random ordered sequence of width distinct objects.

    Any prefix of a row is therefore a uniform subset of that size.
    """
    if width == 0:
        return np.empty((node_count, 0), dtype=np.int64)
    if width / pool_size >= RING_REJECTION_CUTOFF:
        keys = rng.random((node_count, pool_size))
        return np.argsort(keys, axis=1)[:, :width].astype(np.int64)
    # i.i.d. draws with repeats skipped; every round keeps the rows' accepted prefix
    rows = np.full((node_count, width), -1, dtype=np.int64)
    filled = np.zeros(node_count, dtype=np.int64)
    pending = np.arange(node_count)
    while len(pending):
        draws = rng.integers(0, pool_size, size=(len(pending), width))
        block = np.concatenate((rows[pending], draws), axis=1)
        accepted = _first_occurrences(block)
        rank = np.cumsum(accepted, axis=1) - 1
        keep = accepted & (rank < width)
        refill = np.full((len(pending), width), -1, dtype=np.int64)
        which = np.nonzero(keep)
        refill[which[0], rank[keep]] = block[keep]
        rows[pending] = refill
        filled[pending] = keep.sum(axis=1)
        pending = pending[filled[pending] < width]
    return rows


def _prefix_assignment(rows, sizes, pool_size, ring_size=None):
    node_count, width = rows.shape
    sizes = np.asarray(sizes, dtype=np.int64)
    mask = np.arange(width)[None, :] < sizes[:, None]
    indptr = np.concatenate(([0], np.cumsum(sizes))).astype(np.int64)
    return ObjectAssignment(_incidence(rows[mask], indptr, node_count, pool_size), pool_size, ring_size)


def gen_object_rings_uniform(n, K, P, rng):
    """
    Each of n nodes independently draws a uniform K-subset of objects 0..P-1.
    """
    if not 1 <= K <= P:
        raise ValueError(f'object rings need 1 <= K <= P, got K={K}, P={P}')
    rows = _distinct_rows(rng, n, K, P)
    return _prefix_assignment(rows, np.full(n, K), P, ring_size=K)


def gen_object_rings_binomial(n, x, P, rng):
    """
    Every (node, object) membership is an independent Bernoulli(x) draw.

    Sampled as a Binomial(P, x) ring size followed by a uniform subset of that size.
    """
    if not 0.0 <= x <= 1.0:
        raise ValueError(f'membership probability must lie in [0, 1], got {x}')
    sizes = rng.binomial(P, x, size=n)
    width = int(sizes.max()) if n else 0
    return _prefix_assignment(_distinct_rows(rng, n, width, P), sizes, P)


def half_count_summary(assignment):
    counts = assignment.object_counts()
    halves = counts // 2
    return HalfCountSummary(object_counts=counts, half_counts=halves, total=int(halves.sum()))


def _shared_object_pairs(assignment, d):
    # co-occurrence counts of every pair through the object -> nodes index
    overlap = (assignment.incidence @ assignment.incidence.T).tocoo()
    keep = (overlap.row < overlap.col) & (overlap.data >= d)
    rows, cols = overlap.row[keep].astype(np.int64), overlap.col[keep].astype(np.int64)
    order = np.lexsort((cols, rows))
    return rows[order], cols[order]


def graph_from_rings(assignment, d):
    """
    Edge (i, j) iff rings i and j share at least d objects.
    """
    if d < 1:
        raise ValueError(f'overlap threshold d must be at least 1, got {d}')
    rows, cols = _shared_object_pairs(assignment, d)
    return GraphTopology.from_arrays(assignment.node_count, rows, cols)


def _pairs_from_index(index, n):
    """
    Map linear indices 0..C(n,2)-1 (row-major over i < j) to node pairs.
    """
    index = np.asarray(index, dtype=np.int64)
    i = n - 2 - np.floor(np.sqrt(-8.0 * index + 4.0 * n * (n - 1) - 7.0) / 2.0 - 0.5).astype(np.int64)
    i = np.where(index < i * (2 * n - i - 1) // 2, i - 1, i)
    i = np.where(index >= (i + 1) * (2 * n - i - 2) // 2, i + 1, i)
    j = index - i * (2 * n - i - 1) // 2 + i + 1
    return i, j


def gen_er(n, p, rng):
    """
    Erdos-Renyi G(n, p).
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError(f'edge probability must lie in [0, 1], got {p}')
    total = n * (n - 1) // 2
    count = int(rng.binomial(total, p)) if total else 0
    picks = np.sort(rng.choice(total, size=count, replace=False)) if count else np.empty(0, dtype=np.int64)
    rows, cols = _pairs_from_index(picks, n)
    return GraphTopology.from_arrays(n, rows, cols)


def gen_model_graph(params, rng, two_layer=False):
    """
    Sample G_d(n, K, P) intersected with G(n, f) and G(n, g).

    The default draws one Bernoulli(f g) coin per ring-graph edge; coins of the
    G(n, f g) layer on pairs outside the ring graph never matter. two_layer=True
    intersects with separately sampled G(n, f) and G(n, g) graphs instead.
    """
    rings = gen_object_rings_uniform(params.n, params.K, params.P, rng)
    if two_layer:
        graph = graph_from_rings(rings, params.d)
        graph = intersect_graphs(graph, gen_er(params.n, params.f, rng))
        return intersect_graphs(graph, gen_er(params.n, params.g, rng))
    rows, cols = _shared_object_pairs(rings, params.d)
    keep = rng.random(len(rows)) < params.p
    return GraphTopology.from_arrays(params.n, rows[keep], cols[keep])


def gen_multiset_graph(n, b, d, rng):
    """
    Draw b edges uniformly with repetition from all node pairs; keep pairs drawn at least d times.
    """
    if b < 0:
        raise ValueError(f'number of draws must be non-negative, got {b}')
    if d < 1:
        raise ValueError(f'multiplicity threshold d must be at least 1, got {d}')
    total = n * (n - 1) // 2
    if b == 0 or total == 0:
        return GraphTopology(n)
    picks, multiplicity = np.unique(rng.integers(0, total, size=b), return_counts=True)
    rows, cols = _pairs_from_index(picks[multiplicity >= d], n)
    return GraphTopology.from_arrays(n, rows, cols)


def rybarczyk_admissible(K, P, x, n):
    """
    K >= x P + sqrt(3 (x P + ln n) ln n), returned with its right-hand side.
    """
    log_n = math.log(n)
    bound = x * P + math.sqrt(3.0 * (x * P + log_n) * log_n)
    return K >= bound, bound


def coupling_threshold_x(K, P, n):
    """
    Membership probability x = (K/P)(1 - sqrt(3 ln n / K)) of the binomial graph coupled below G_d.
    """
    if n < 2:
        raise ValueError(f'n must be at least 2, got {n}')
    if not 1 <= K <= P:
        raise ValueError(f'coupling needs 1 <= K <= P, got K={K}, P={P}')
    log_n = math.log(n)
    if K <= 3.0 * log_n:
        raise InfeasibleCouplingError(f'coupling infeasible: K={K} <= 3 ln n = {3.0 * log_n:.6g}')
    x = (K / P) * (1.0 - math.sqrt(3.0 * log_n / K))
    admissible, bound = rybarczyk_admissible(K, P, x, n)
    return CouplingThreshold(x=x, admissible=admissible, bound=bound)


def gen_coupled_pair(n, K, P, d, rng):
    """
    Binomial graph H_d(n, x, P) and uniform graph G_d(n, K, P) on one probability space.

    Both ring families are prefixes of the same random object orderings, so a
    uniform ring tops up its binomial ring with uniformly chosen missing objects
    whenever the binomial ring has at most K objects. When that holds for every
    node, H's edges are a subset of G's.
    """
    x = coupling_threshold_x(K, P, n).x
    sizes = rng.binomial(P, x, size=n)
    rows = _distinct_rows(rng, n, max(K, int(sizes.max())), P)
    binomial = _prefix_assignment(rows, sizes, P)
    uniform = _prefix_assignment(rows, np.full(n, K), P, ring_size=K)
    return CoupledPair(
        h=graph_from_rings(binomial, d), g=graph_from_rings(uniform, d),
        coupling_valid=bool((sizes <= K).all()), x=x)


def poissonization_terms(n, P, x, d):
    if not 0.0 < x < 1.0:
        raise ValueError(f'membership probability must lie in (0, 1), got {x}')
    if n < 3:
        raise ValueError(f'n must be at least 3, got {n}')
    if 2.0 * x < 1.0:
        power = math.exp(n * math.log1p(-2.0 * x))
    else:
        power = (1.0 - 2.0 * x) ** n
    expected_half = 0.5 * n * x - 0.25 + 0.25 * power
    expected_total = P * expected_half
    if expected_total <= 1.0:
        raise DegenerateRegimeError(f'expected half-count total {expected_total:.6g} <= 1; Poissonized mean undefined')
    lam = expected_total - expected_total ** (5.0 / 6.0)
    mu = lam / math.comb(n, 2)
    return PoissonizationTerms(
        expected_half_count=expected_half, expected_total=expected_total,
        lam=lam, mu=mu, rho=float(poisson.sf(d - 1, mu)))


def poissonization_edge_prob(n, P, x, d):
    """
    P[Poisson(mu) >= d] for the Poissonized multiset graph coupled with H_d(n, x, P).
    """
    return poissonization_terms(n, P, x, d).rho
