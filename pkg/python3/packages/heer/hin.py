"""
hin.py

Typed graph data model for heterogeneous information networks: the schema
(node types and edge types), the graph itself with per-edge-type weighted
edges and degrees, file ingestion and serialization, and knock-out
splitting for the edge reconstruction benchmark.

File formats (UTF-8, LF line endings, tab separated):

    schema:  "@nodes" then one node type per line,
             "@edges" then "name<TAB>src_type<TAB>dst_type<TAB>d|u"
    nodes:   "node_id<TAB>node_type"
    edges:   "src_id<TAB>dst_id<TAB>edge_type<TAB>weight"

Node ids are arbitrary strings, remapped to dense 0-based indices in file
order. The graph is immutable after construction.
"""

import json
import logging
import math
import os
from collections import namedtuple
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse

from .errors import GraphFormatError, SchemaError, ValidationError

LOGGER = logging.getLogger("heer.hin")

NODES_SECTION = "@nodes"
EDGES_SECTION = "@edges"
DIRECTED = "d"
UNDIRECTED = "u"

# One removed (knocked-out) edge; edge_type is the edge type index
RemovedEdge = namedtuple("RemovedEdge", ["u", "v", "edge_type", "weight"])


class EdgeType(namedtuple("EdgeType", ["name", "src_type", "dst_type", "directed"])):
    """An edge type and the node types fixed at its two ends"""

    __slots__ = ()

    def flag(self):
        return DIRECTED if self.directed else UNDIRECTED


class Schema:
    """
    Network schema: the node types T and edge types R of an HIN.

    Every edge type determines the node types at its two ends.
    """

    def __init__(self, node_types, edge_types):
        # type: (Sequence[str], Sequence[EdgeType]) -> None
        self.node_types = tuple(node_types)
        self.edge_types = tuple(EdgeType(*e) for e in edge_types)
        self._node_type_index = {}  # type: Dict[str, int]
        self._edge_type_index = {}  # type: Dict[str, int]
        for i, name in enumerate(self.node_types):
            if not name:
                raise SchemaError("empty node type name")
            if name in self._node_type_index:
                raise SchemaError("duplicate node type '{}'".format(name))
            self._node_type_index[name] = i
        for i, edge_type in enumerate(self.edge_types):
            if edge_type.name in self._edge_type_index:
                raise SchemaError("duplicate edge type '{}'".format(edge_type.name))
            for end in (edge_type.src_type, edge_type.dst_type):
                if end not in self._node_type_index:
                    raise SchemaError(
                        "undeclared node type '{}' in edge type '{}'".format(
                            end, edge_type.name
                        )
                    )
            self._edge_type_index[edge_type.name] = i
        # (src, dst) node type ids per edge type
        self.src_type_ids = np.array(
            [self._node_type_index[e.src_type] for e in self.edge_types], dtype=np.int64
        )
        self.dst_type_ids = np.array(
            [self._node_type_index[e.dst_type] for e in self.edge_types], dtype=np.int64
        )
        self.directed = np.array([e.directed for e in self.edge_types], dtype=bool)

    def __eq__(self, other):
        return (
            isinstance(other, Schema)
            and self.node_types == other.node_types
            and self.edge_types == other.edge_types
        )

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self):
        return "Schema(|T|={}, |R|={})".format(
            len(self.node_types), len(self.edge_types)
        )

    def node_type_id(self, name):
        try:
            return self._node_type_index[name]
        except KeyError:
            raise ValidationError(
                "unknown node type '{}'".format(name), module="hin-graph"
            ) from None

    def edge_type_id(self, name):
        try:
            return self._edge_type_index[name]
        except KeyError:
            raise ValidationError(
                "unknown edge type '{}'".format(name), module="hin-graph"
            ) from None

    def edge_type(self, r):
        # type: (int) -> EdgeType
        return self.edge_types[r]

    def endpoint_types(self, r):
        """(src node type id, dst node type id) of edge type [r]"""
        return int(self.src_type_ids[r]), int(self.dst_type_ids[r])

    def type_consistent(self, t_u, t_v, r):
        """True iff node types (t_u, t_v) are consistent with edge type r"""
        src, dst = self.endpoint_types(r)
        if t_u == src and t_v == dst:
            return True
        return not self.directed[r] and t_u == dst and t_v == src


def load_schema(path):
    # type: (str) -> Schema
    """Parse and validate a schema file"""
    node_types = []  # type: List[str]
    edge_types = []  # type: List[EdgeType]
    seen_nodes = set()
    seen_edges = set()
    section = None
    with open(path, encoding="utf-8") as schema_file:
        for lineno, raw in enumerate(schema_file, start=1):
            line = raw.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            if line in (NODES_SECTION, EDGES_SECTION):
                section = line
                continue
            if section == NODES_SECTION:
                name = line.strip()
                if "\t" in name:
                    raise SchemaError(
                        "node type names cannot contain tabs", path, lineno
                    )
                if name in seen_nodes:
                    raise SchemaError(
                        "duplicate node type '{}'".format(name), path, lineno
                    )
                seen_nodes.add(name)
                node_types.append(name)
            elif section == EDGES_SECTION:
                fields = line.split("\t")
                if len(fields) != 4:
                    raise SchemaError(
                        "expected 4 tab-separated fields, got {}".format(len(fields)),
                        path,
                        lineno,
                    )
                name, src, dst, flag = fields
                if flag not in (DIRECTED, UNDIRECTED):
                    raise SchemaError(
                        "directedness must be 'd' or 'u', got '{}'".format(flag),
                        path,
                        lineno,
                    )
                if name in seen_edges:
                    raise SchemaError(
                        "duplicate edge type '{}'".format(name), path, lineno
                    )
                for end in (src, dst):
                    if end not in seen_nodes:
                        raise SchemaError(
                            "undeclared node type '{}'".format(end), path, lineno
                        )
                seen_edges.add(name)
                edge_types.append(EdgeType(name, src, dst, flag == DIRECTED))
            else:
                raise SchemaError(
                    "line outside of an @nodes or @edges section", path, lineno
                )
    schema = Schema(node_types, edge_types)
    LOGGER.debug("loaded %r from %s", schema, path)
    return schema


def save_schema(schema, path):
    # type: (Schema, str) -> None
    with open(path, "w", encoding="utf-8", newline="\n") as schema_file:
        schema_file.write(NODES_SECTION + "\n")
        for name in schema.node_types:
            schema_file.write(name + "\n")
        schema_file.write(EDGES_SECTION + "\n")
        for e in schema.edge_types:
            fields = (e.name, e.src_type, e.dst_type, e.flag())
            schema_file.write("\t".join(fields) + "\n")


class HinGraph:
    """
    A heterogeneous information network.

    Nodes are dense indices 0..|V|-1 with a node type id each. Edges are
    kept per edge type as parallel (src, dst, weight) arrays. Undirected
    edges are stored once with the smaller node index first. Duplicate
    (u, v, r) edges are merged by summing their weights.
    """

    def __init__(self, schema, node_ids, node_types, edges):
        # type: (Schema, Sequence[str], Sequence[int], Sequence[Tuple[np.ndarray, np.ndarray, np.ndarray]]) -> None
        self.schema = schema
        self.node_ids = tuple(node_ids)
        self.node_types = np.asarray(node_types, dtype=np.int64)
        if len(self.node_ids) != len(self.node_types):
            raise GraphFormatError("node id and node type lists differ in length")
        self._index = {}  # type: Dict[str, int]
        for i, node_id in enumerate(self.node_ids):
            if node_id in self._index:
                raise GraphFormatError("duplicate node id '{}'".format(node_id))
            self._index[node_id] = i
        if len(edges) != len(schema.edge_types):
            raise GraphFormatError("expected one edge array triple per edge type")
        n_types = len(schema.node_types)
        if len(self.node_types) and (
            self.node_types.min() < 0 or self.node_types.max() >= n_types
        ):
            raise GraphFormatError("node type id out of range")

        self._src = []  # type: List[np.ndarray]
        self._dst = []  # type: List[np.ndarray]
        self._weight = []  # type: List[np.ndarray]
        for r, (src, dst, weight) in enumerate(edges):
            src, dst, weight = self._canonical(r, src, dst, weight)
            self._src.append(src)
            self._dst.append(dst)
            self._weight.append(weight)
        for array in self._src + self._dst + self._weight:
            array.setflags(write=False)
        self.out_degree, self.in_degree = self._degrees()
        self.out_degree.setflags(write=False)
        self.in_degree.setflags(write=False)
        self._adjacency = {}  # type: Dict[Tuple[int, bool], scipy.sparse.csr_matrix]

    def _canonical(self, r, src, dst, weight):
        src = np.asarray(src, dtype=np.int64).ravel()
        dst = np.asarray(dst, dtype=np.int64).ravel()
        weight = np.asarray(weight, dtype=np.float64).ravel()
        name = self.schema.edge_types[r].name
        if not len(src) == len(dst) == len(weight):
            raise GraphFormatError("edge arrays of '{}' differ in length".format(name))
        n = self.num_nodes
        if len(src) and (
            min(src.min(), dst.min()) < 0 or max(src.max(), dst.max()) >= n
        ):
            raise GraphFormatError("node index out of range in '{}'".format(name))
        if not np.all(np.isfinite(weight)) or np.any(weight <= 0):
            raise GraphFormatError(
                "non-positive or non-finite weight in '{}'".format(name)
            )
        if np.any(src == dst):
            raise GraphFormatError("self-loop in '{}'".format(name))
        t_src, t_dst = self.schema.endpoint_types(r)
        if self.schema.directed[r]:
            ok = (self.node_types[src] == t_src) & (self.node_types[dst] == t_dst)
        else:
            ok = (
                (self.node_types[src] == t_src) & (self.node_types[dst] == t_dst)
            ) | ((self.node_types[src] == t_dst) & (self.node_types[dst] == t_src))
            src, dst = np.minimum(src, dst), np.maximum(src, dst)
        if not np.all(ok):
            bad = int(np.flatnonzero(~ok)[0])
            raise GraphFormatError(
                "endpoint type mismatch: edge ({}, {}) under '{}'".format(
                    self.node_ids[src[bad]], self.node_ids[dst[bad]], name
                )
            )
        # merge duplicates by summing weights; keys come back sorted
        keys, inverse = np.unique(src * n + dst, return_inverse=True)
        merged = np.bincount(inverse.ravel(), weights=weight, minlength=len(keys))
        return keys // n, keys % n, merged

    def _degrees(self):
        n_r, n = len(self.schema.edge_types), self.num_nodes
        out_degree = np.zeros((n_r, n), dtype=np.float64)
        in_degree = np.zeros((n_r, n), dtype=np.float64)
        for r in range(n_r):
            src, dst, weight = self._src[r], self._dst[r], self._weight[r]
            np.add.at(out_degree[r], src, weight)
            np.add.at(in_degree[r], dst, weight)
            if not self.schema.directed[r]:
                np.add.at(out_degree[r], dst, weight)
                np.add.at(in_degree[r], src, weight)
        return out_degree, in_degree

    def rebuild_degrees(self):
        """Recompute the degree tables edge by edge, independently of _degrees()"""
        n_r, n = len(self.schema.edge_types), self.num_nodes
        out_degree = np.zeros((n_r, n), dtype=np.float64)
        in_degree = np.zeros((n_r, n), dtype=np.float64)
        for u, v, r, w in self.edge_records():
            out_degree[r, u] += w
            in_degree[r, v] += w
            if not self.schema.directed[r]:
                out_degree[r, v] += w
                in_degree[r, u] += w
        return out_degree, in_degree

    def check_degrees(self, rtol=1e-12):
        """True iff the stored degrees match a rebuild within [rtol]"""
        out_degree, in_degree = self.rebuild_degrees()
        return bool(
            np.allclose(self.out_degree, out_degree, rtol=rtol, atol=0.0)
            and np.allclose(self.in_degree, in_degree, rtol=rtol, atol=0.0)
        )

    @classmethod
    def from_records(cls, schema, node_ids, node_types, records):
        # type: (Schema, Sequence[str], Sequence[int], Iterable[Tuple[int, int, int, float]]) -> HinGraph
        """Build a graph from (u, v, edge_type, weight) records"""
        per_type = [([], [], []) for _ in schema.edge_types]  # type: List[Tuple[list, list, list]]
        for u, v, r, w in records:
            src, dst, weight = per_type[r]
            src.append(u)
            dst.append(v)
            weight.append(w)
        return cls(schema, node_ids, node_types, per_type)

    def __eq__(self, other):
        if not isinstance(other, HinGraph):
            return NotImplemented
        return (
            self.schema == other.schema
            and self.node_ids == other.node_ids
            and np.array_equal(self.node_types, other.node_types)
            and all(
                np.array_equal(a, b)
                for a, b in zip(
                    self._src + self._dst + self._weight,
                    other._src + other._dst + other._weight,
                )
            )
        )

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self):
        return "HinGraph(|V|={}, |E|={}, |R|={})".format(
            self.num_nodes, self.num_edges, len(self.schema.edge_types)
        )

    @property
    def num_nodes(self):
        return len(self.node_ids)

    @property
    def num_edge_types(self):
        return len(self.schema.edge_types)

    @property
    def num_edges(self):
        return sum(len(s) for s in self._src)

    def edge_counts(self):
        """Number of stored edges per edge type name"""
        return {e.name: len(s) for e, s in zip(self.schema.edge_types, self._src)}

    def node_index(self, node_id):
        try:
            return self._index[node_id]
        except KeyError:
            raise ValidationError(
                "unknown node id '{}'".format(node_id), module="hin-graph"
            ) from None

    def edges(self, r):
        """(src, dst, weight) arrays of edge type [r]"""
        return self._src[r], self._dst[r], self._weight[r]

    def all_edges(self):
        """Concatenated (src, dst, edge_type, weight) arrays over all types"""
        types = [np.full(len(s), r, dtype=np.int64) for r, s in enumerate(self._src)]
        if not types:
            empty = np.zeros(0, dtype=np.int64)
            return empty, empty, empty, np.zeros(0)
        return (
            np.concatenate(self._src),
            np.concatenate(self._dst),
            np.concatenate(types),
            np.concatenate(self._weight),
        )

    def edge_records(self):
        """Yield (u, v, edge_type, weight) for every stored edge"""
        for r in range(self.num_edge_types):
            for u, v, w in zip(self._src[r], self._dst[r], self._weight[r]):
                yield int(u), int(v), r, float(w)

    def total_weight(self):
        return float(sum(w.sum() for w in self._weight))

    def total_degree(self):
        """Sum of incident edge weights per node, over all edge types"""
        degree = np.zeros(self.num_nodes, dtype=np.float64)
        for r in range(self.num_edge_types):
            np.add.at(degree, self._src[r], self._weight[r])
            np.add.at(degree, self._dst[r], self._weight[r])
        return degree

    def nodes_of_type(self, t):
        # type: (int) -> np.ndarray
        return np.flatnonzero(self.node_types == t)

    def is_consistent(self, u, v, r):
        """True iff (phi(u), phi(v)) is consistent with edge type r"""
        return self.schema.type_consistent(
            int(self.node_types[u]), int(self.node_types[v]), r
        )

    def candidates(self, u, r, side):
        """
        Nodes completing a type-consistent pair with [u] under [r]:
        side "v" gives the destinations of r from u (u fixed as source), side "u" gives
        the sources of r into u (u fixed as destination).
        """
        t_u = int(self.node_types[u])
        src, dst = self.schema.endpoint_types(r)
        wanted = set()
        if side == "v":
            if t_u == src:
                wanted.add(dst)
            if not self.schema.directed[r] and t_u == dst:
                wanted.add(src)
        elif side == "u":
            if t_u == dst:
                wanted.add(src)
            if not self.schema.directed[r] and t_u == src:
                wanted.add(dst)
        else:
            raise ValueError("side must be 'u' or 'v'")
        return np.flatnonzero(np.isin(self.node_types, sorted(wanted)))

    def adjacency(self, r, reverse=False):
        """
        Weighted CSR adjacency of edge type [r]. Undirected types are
        symmetric; [reverse] transposes a directed type.
        """
        key = (r, bool(reverse and self.schema.directed[r]))
        if key not in self._adjacency:
            n = self.num_nodes
            src, dst, weight = self.edges(r)
            matrix = scipy.sparse.csr_matrix((weight, (src, dst)), shape=(n, n))
            if not self.schema.directed[r]:
                matrix = (matrix + matrix.T).tocsr()
            elif key[1]:
                matrix = matrix.T.tocsr()
            matrix.sort_indices()
            self._adjacency[key] = matrix
        return self._adjacency[key]

    def neighbors(self, u, r, reverse=False):
        """Sorted node indices linked to [u] by a type-r edge"""
        matrix = self.adjacency(r, reverse)
        return matrix.indices[matrix.indptr[u] : matrix.indptr[u + 1]]

    def has_edge(self, u, v, r):
        """True iff a type-r edge goes from u to v (either way if undirected)"""
        row = self.neighbors(u, r)
        i = np.searchsorted(row, v)
        return bool(i < len(row) and row[i] == v)

    def subgraph(self, keep):
        # type: (Sequence[np.ndarray]) -> HinGraph
        """Same nodes, only the edges selected by the per-type boolean masks"""
        edges = [
            (self._src[r][m], self._dst[r][m], self._weight[r][m])
            for r, m in enumerate(keep)
        ]
        return HinGraph(self.schema, self.node_ids, self.node_types, edges)


def consistent_pairs_membership(graph, u, v, r):
    # type: (HinGraph, int, int, int) -> bool
    """Membership test for the consistent pairs of edge type r"""
    return graph.is_consistent(u, v, r)


def neighbors(graph, u, r, direction="out"):
    # type: (HinGraph, int, int, str) -> np.ndarray
    """
    Type-r neighbours of [u]: "out" follows edges u -> v, "in" follows
    v -> u. Both are the same set for undirected types.
    """
    if direction not in ("out", "in"):
        raise ValueError("direction must be 'out' or 'in'")
    return graph.neighbors(u, r, reverse=direction == "in")


def _read_nodes(schema, node_path):
    node_ids = []  # type: List[str]
    node_types = []  # type: List[int]
    seen = set()
    with open(node_path, encoding="utf-8") as node_file:
        for lineno, raw in enumerate(node_file, start=1):
            line = raw.rstrip("\n")
            if not line.strip():
                continue
            fields = line.split("\t")
            if len(fields) != 2:
                raise GraphFormatError(
                    "expected 'node_id<TAB>node_type'", node_path, lineno
                )
            node_id, type_name = fields
            if node_id in seen:
                raise GraphFormatError(
                    "duplicate node id '{}'".format(node_id), node_path, lineno
                )
            try:
                t = schema.node_type_id(type_name)
            except ValidationError:
                raise GraphFormatError(
                    "unknown node type '{}'".format(type_name), node_path, lineno
                ) from None
            seen.add(node_id)
            node_ids.append(node_id)
            node_types.append(t)
    return node_ids, node_types


def read_edges(schema, index, node_types, edge_path):
    # type: (Schema, Dict[str, int], Sequence[int], str) -> List[Tuple[int, int, int, float]]
    """Parse an edge file into validated (u, v, edge_type, weight) records"""
    records = []
    with open(edge_path, encoding="utf-8") as edge_file:
        for lineno, raw in enumerate(edge_file, start=1):
            line = raw.rstrip("\n")
            if not line.strip():
                continue
            fields = line.split("\t")
            if len(fields) != 4:
                raise GraphFormatError(
                    "expected 'src<TAB>dst<TAB>edge_type<TAB>weight'", edge_path, lineno
                )
            src_id, dst_id, type_name, weight_text = fields
            for node_id in (src_id, dst_id):
                if node_id not in index:
                    raise GraphFormatError(
                        "unknown node id '{}'".format(node_id), edge_path, lineno
                    )
            try:
                r = schema.edge_type_id(type_name)
            except ValidationError:
                raise GraphFormatError(
                    "unknown edge type '{}'".format(type_name), edge_path, lineno
                ) from None
            try:
                weight = float(weight_text)
            except ValueError:
                raise GraphFormatError(
                    "invalid weight '{}'".format(weight_text), edge_path, lineno
                ) from None
            if not math.isfinite(weight) or weight <= 0:
                raise GraphFormatError(
                    "non-positive weight {}".format(weight_text), edge_path, lineno
                )
            u, v = index[src_id], index[dst_id]
            if u == v:
                raise GraphFormatError(
                    "self-loop on '{}'".format(src_id), edge_path, lineno
                )
            if not schema.type_consistent(node_types[u], node_types[v], r):
                raise GraphFormatError(
                    "endpoint type mismatch: ({}, {}) is ({}, {}) but '{}' joins "
                    "({}, {})".format(
                        src_id,
                        dst_id,
                        schema.node_types[node_types[u]],
                        schema.node_types[node_types[v]],
                        type_name,
                        schema.edge_types[r].src_type,
                        schema.edge_types[r].dst_type,
                    ),
                    edge_path,
                    lineno,
                )
            records.append((u, v, r, weight))
    return records


def load_graph(schema, node_path, edge_path):
    # type: (Schema, str, str) -> HinGraph
    """Load a graph; duplicate (u, v, r) lines are merged by summing weights"""
    node_ids, node_types = _read_nodes(schema, node_path)
    index = {node_id: i for i, node_id in enumerate(node_ids)}
    records = read_edges(schema, index, node_types, edge_path)
    graph = HinGraph.from_records(schema, node_ids, node_types, records)
    LOGGER.info(
        "loaded %r from %s (%d edge lines, %d merged)",
        graph,
        edge_path,
        len(records),
        len(records) - graph.num_edges,
    )
    return graph


def load_edge_list(graph, edge_path):
    # type: (HinGraph, str) -> List[RemovedEdge]
    """Read an edge file against an existing graph's node index (no merging)"""
    records = read_edges(
        graph.schema, graph._index, graph.node_types.tolist(), edge_path
    )
    return [RemovedEdge(u, v, r, w) for u, v, r, w in records]


def save_nodes(graph, node_path):
    with open(node_path, "w", encoding="utf-8", newline="\n") as node_file:
        for node_id, t in zip(graph.node_ids, graph.node_types):
            node_file.write("{}\t{}\n".format(node_id, graph.schema.node_types[t]))


def save_edge_list(graph, records, edge_path):
    # type: (HinGraph, Iterable[Tuple[int, int, int, float]], str) -> None
    with open(edge_path, "w", encoding="utf-8", newline="\n") as edge_file:
        for u, v, r, w in records:
            edge_file.write(
                "{}\t{}\t{}\t{!r}\n".format(
                    graph.node_ids[u],
                    graph.node_ids[v],
                    graph.schema.edge_types[r].name,
                    float(w),
                )
            )


def save_graph(graph, node_path, edge_path):
    # type: (HinGraph, str, str) -> None
    save_nodes(graph, node_path)
    save_edge_list(graph, graph.edge_records(), edge_path)


_KnockoutFields = namedtuple("KnockoutSplit", ["retained", "removed", "kappa", "seed"])


class KnockoutSplit(_KnockoutFields):
    """
    A graph split for edge reconstruction: [retained] is the graph with the
    [removed] edges knocked out.
    """

    __slots__ = ()

    def counts(self):
        return {
            "total": self.retained.num_edges + len(self.removed),
            "retained": self.retained.num_edges,
            "removed": len(self.removed),
        }


def knockout(graph, kappa, seed):
    # type: (HinGraph, float, int) -> KnockoutSplit
    """
    Remove round(kappa * |E|) edges drawn uniformly without replacement,
    regardless of their type. Deterministic for a fixed seed.
    """
    if not 0 < kappa < 1:
        raise ValidationError("kappa must be in (0,1)", module="hin-graph")
    src, dst, types, weight = graph.all_edges()
    total = len(src)
    n_removed = int(math.floor(kappa * total + 0.5))
    rng = np.random.Generator(np.random.Philox(seed))
    picked = np.sort(rng.choice(total, size=n_removed, replace=False))
    removed_mask = np.zeros(total, dtype=bool)
    removed_mask[picked] = True
    keep = []
    offset = 0
    for r in range(graph.num_edge_types):
        count = len(graph.edges(r)[0])
        keep.append(~removed_mask[offset : offset + count])
        offset += count
    retained = graph.subgraph(keep)
    removed = [
        RemovedEdge(int(src[i]), int(dst[i]), int(types[i]), float(weight[i]))
        for i in picked
    ]
    LOGGER.info(
        "knock-out kappa=%s seed=%s: removed %d of %d edges",
        kappa,
        seed,
        n_removed,
        total,
    )
    return KnockoutSplit(retained, removed, kappa, seed)


def save_knockout(
    split, out_dir, retained_name="retained.edges", removed_name="removed.edges"
):
    # type: (KnockoutSplit, str, str, str) -> Dict[str, str]
    """Write the retained and removed edge files plus a JSON sidecar"""
    os.makedirs(out_dir, exist_ok=True)
    paths = {
        "retained": os.path.join(out_dir, retained_name),
        "removed": os.path.join(out_dir, removed_name),
        "sidecar": os.path.join(out_dir, "knockout.json"),
    }
    save_edge_list(split.retained, split.retained.edge_records(), paths["retained"])
    save_edge_list(split.retained, split.removed, paths["removed"])
    with open(paths["sidecar"], "w", encoding="utf-8") as sidecar:
        json.dump(
            {"kappa": split.kappa, "seed": split.seed, "counts": split.counts()},
            sidecar,
            indent=2,
            sort_keys=True,
        )
        sidecar.write("\n")
    return paths


def with_edges(graph, records):
    # type: (HinGraph, Iterable[Tuple[int, int, int, float]]) -> HinGraph
    """A graph over the same nodes holding exactly [records]"""
    return HinGraph.from_records(
        graph.schema, graph.node_ids, graph.node_types, records
    )
