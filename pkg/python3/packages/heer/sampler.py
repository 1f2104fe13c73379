"""
sampler.py

Weighted edge sampling with Vose alias tables and type-consistent negative
node sampling.

Random streams are numpy Generators over the Philox counter-based bit
generator seeded with a 64-bit integer. Worker streams are spawned from
a SeedSequence of the same seed, so every stream is a pure function of
(seed, worker id).
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from .errors import SamplingError

LOGGER = logging.getLogger("heer.sampler")


def make_rng(seed):
    # type: (int) -> np.random.Generator
    """The deterministic-mode stream for [seed]"""
    return np.random.Generator(np.random.Philox(seed))


def worker_rngs(seed, workers):
    # type: (int, int) -> List[np.random.Generator]
    """One private stream per worker, derived from (seed, worker id)"""
    children = np.random.SeedSequence(seed).spawn(workers)
    return [np.random.Generator(np.random.Philox(child)) for child in children]


@dataclass(frozen=True)
class AliasTable:
    """
    Vose alias table: draw a column i uniformly, keep it with probability
    prob[i], otherwise take alias[i].
    """

    prob: np.ndarray
    alias: np.ndarray
    total_weight: float

    def __len__(self):
        return len(self.prob)

    def sample(self, rng, size=None):
        """One index (size=None) or an array of [size] indices"""
        column = rng.integers(len(self.prob), size=size)
        coin = rng.random(size=size)
        return np.where(coin < self.prob[column], column, self.alias[column])

    def realized_probabilities(self):
        """Exact probability of every index under this table"""
        n = len(self.prob)
        mass = self.prob + np.bincount(self.alias, weights=1.0 - self.prob, minlength=n)
        return mass / n


def build_alias(weights):
    # type: (np.ndarray) -> AliasTable
    """Vose's construction; O(n) time for n non-negative weights"""
    weights = np.asarray(weights, dtype=np.float64)
    n = len(weights)
    if n == 0:
        raise SamplingError("cannot build an alias table over no items")
    if not np.all(np.isfinite(weights)) or np.any(weights < 0):
        raise SamplingError("alias weights must be finite and non-negative")
    total = float(weights.sum())
    if not total > 0:
        raise SamplingError("alias weights sum to zero")

    scaled = weights * (n / total)
    prob = np.ones(n, dtype=np.float64)
    alias = np.arange(n, dtype=np.int64)
    small = [i for i in range(n) if scaled[i] < 1.0]
    large = [i for i in range(n) if scaled[i] >= 1.0]
    while small and large:
        s = small.pop()
        g = large.pop()
        prob[s] = scaled[s]
        alias[s] = g
        scaled[g] = (scaled[g] + scaled[s]) - 1.0
        if scaled[g] < 1.0:
            small.append(g)
        else:
            large.append(g)
    # leftovers are 1 up to rounding
    for i in small + large:
        prob[i] = 1.0
    return AliasTable(prob, alias, total)


class EdgeSampler:
    """
    Draws (u, v, edge_type) with probability proportional to edge weight,
    over all edge types at once. Undirected edges are presented in either
    orientation with probability 1/2 each.
    """

    def __init__(self, graph):
        src, dst, types, weight = graph.all_edges()
        if len(src) == 0:
            raise SamplingError("empty edge set")
        self.src = src
        self.dst = dst
        self.types = types
        self.undirected = ~graph.schema.directed[types]
        self.table = build_alias(weight)
        LOGGER.debug(
            "edge sampler over %d edges, total weight %s",
            len(src),
            self.table.total_weight,
        )

    def __len__(self):
        return len(self.src)

    def sample(self, rng, size):
        # type: (np.random.Generator, int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]
        """[size] edges as (u, v, edge_type) arrays"""
        picked = self.table.sample(rng, size)
        flip = (rng.random(size) < 0.5) & self.undirected[picked]
        src, dst = self.src[picked], self.dst[picked]
        return np.where(flip, dst, src), np.where(flip, src, dst), self.types[picked]


def build_edge_sampler(graph):
    # type: (...) -> EdgeSampler
    return EdgeSampler(graph)


def sample_edge(sampler, rng):
    # type: (EdgeSampler, np.random.Generator) -> Tuple[int, int, int]
    u, v, r = sampler.sample(rng, 1)
    return int(u[0]), int(v[0]), int(r[0])


class NegativeSampler:
    """
    Per-group noise distributions over nodes. A group is a node type, or
    the whole node set for type-erased sampling. Node weights are
    (total incident weight) ** alpha. Groups with fewer than two
    positive-weight nodes fall back to uniform over the group.
    """

    def __init__(self, groups, weights, alpha):
        # type: (np.ndarray, np.ndarray, float) -> None
        if alpha < 0:
            raise SamplingError("noise exponent must be >= 0, got {}".format(alpha))
        self.alpha = alpha
        self.members = {}  # type: Dict[int, np.ndarray]
        self.tables = {}  # type: Dict[int, Optional[AliasTable]]
        noise = np.power(np.asarray(weights, dtype=np.float64), alpha)
        for group in np.unique(groups):
            members = np.flatnonzero(groups == group)
            group_noise = noise[members]
            self.members[int(group)] = members
            if np.count_nonzero(group_noise > 0) >= 2:
                self.tables[int(group)] = build_alias(group_noise)
            else:
                self.tables[int(group)] = None

    @classmethod
    def from_graph(cls, graph, alpha):
        """Negatives share the node type of the endpoint they replace"""
        return cls(graph.node_types, graph.total_degree(), alpha)

    @classmethod
    def type_erased(cls, graph, alpha):
        groups = np.zeros(graph.num_nodes, dtype=np.int64)
        return cls(groups, graph.total_degree(), alpha)

    def _draw(self, group, rng, size):
        members = self.members[group]
        table = self.tables[group]
        if table is None:
            return members[rng.integers(len(members), size=size)]
        return members[table.sample(rng, size)]

    def probabilities(self, group):
        """(members, probability of each member) for [group]"""
        members = self.members[group]
        table = self.tables[group]
        if table is None:
            return members, np.full(len(members), 1.0 / len(members))
        return members, table.realized_probabilities()

    def _check(self, group):
        if len(self.members.get(group, ())) < 2:
            raise SamplingError(
                "cannot sample negative: fewer than 2 nodes in group {}".format(group)
            )

    def sample(self, group, exclude, rng):
        # type: (int, int, np.random.Generator) -> int
        self._check(group)
        while True:
            node = int(self._draw(group, rng, None))
            if node != exclude:
                return node

    def sample_many(self, groups, exclude, k, rng):
        # type: (np.ndarray, np.ndarray, int, np.random.Generator) -> np.ndarray
        """
        A (len(exclude), k) array where row i holds k draws from
        groups[i], none equal to exclude[i].
        """
        groups = np.asarray(groups)
        exclude = np.asarray(exclude)
        out = np.empty((len(exclude), k), dtype=np.int64)
        if k == 0:
            return out
        for group in np.unique(groups):
            group = int(group)
            self._check(group)
            rows = np.flatnonzero(groups == group)
            draws = self._draw(group, rng, (len(rows), k))
            bad = draws == exclude[rows, None]
            while bad.any():
                draws[bad] = self._draw(group, rng, int(bad.sum()))
                bad = draws == exclude[rows, None]
            out[rows] = draws
        return out


def sample_negative(ns, node_type, exclude, rng):
    # type: (NegativeSampler, int, int, np.random.Generator) -> int
    return ns.sample(node_type, exclude, rng)
