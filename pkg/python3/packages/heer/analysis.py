"""
analysis.py

Post-hoc analyses of a graph and of trained metrics:

  - generalized Jaccard coefficients between the node groups reachable
    from a hub node through two edge types, and their CDF
  - standardized metrics, their cosine similarity and a heat-map export
  - meta-path neighbourhoods of an anchor node exported with embeddings
  - per edge type probabilities of given node pairs
"""

import csv
import logging
from collections import namedtuple
from typing import List, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse
from scipy.special import expit

from .errors import AnalysisError
from .model import pair_scores
from .sampler import make_rng

LOGGER = logging.getLogger("heer.analysis")

DEFAULT_GRID = tuple([0.0] + list(np.logspace(-6, 0, 25)))

JaccardProfile = namedtuple(
    "JaccardProfile", ["r1", "r2", "hub_type", "nodes", "coefficients"]
)

MetapathGroup = namedtuple("MetapathGroup", ["label", "nodes"])


def transition_matrix(graph, r, reverse=False):
    # type: (...) -> scipy.sparse.csr_matrix
    """Row-normalized adjacency of r; rows without edges stay zero"""
    adjacency = graph.adjacency(r, reverse)
    row_sums = np.asarray(adjacency.sum(axis=1)).ravel()
    inverse = np.divide(1.0, row_sums, out=np.zeros_like(row_sums), where=row_sums > 0)
    return (scipy.sparse.diags(inverse) @ adjacency).tocsr()


def _hub_side(graph, r, reverse):
    """Node type whose transition rows lead away from the hub"""
    src, dst = graph.schema.endpoint_types(r)
    if graph.schema.directed[r]:
        return (dst,) if reverse else (src,)
    return (src, dst)


def _check_hub(graph, t, r1, r2, reverse):
    for r in (r1, r2):
        if t not in _hub_side(graph, r, reverse):
            raise AnalysisError(
                "node type '{}' is not an endpoint of edge type '{}'".format(
                    graph.schema.node_types[t], graph.schema.edge_types[r].name
                )
            )


def common_hub_type(graph, r1, r2, reverse=False):
    # type: (...) -> int
    """The first node type joining both edge types"""
    second = _hub_side(graph, r2, reverse)
    shared = [t for t in _hub_side(graph, r1, reverse) if t in second]
    if not shared:
        raise AnalysisError(
            "edge types '{}' and '{}' share no endpoint type".format(
                graph.schema.edge_types[r1].name, graph.schema.edge_types[r2].name
            )
        )
    return shared[0]


def reachability(graph, r, hub_type, reverse=False):
    # type: (...) -> scipy.sparse.csr_matrix
    """Dot products of transition rows for every pair of hub-type nodes"""
    hub = graph.nodes_of_type(hub_type)
    rows = transition_matrix(graph, r, reverse)[hub]
    return (rows @ rows.T).tocsr()


def _generalized_jaccard(l1, l2):
    """Row-wise sum(min) / sum(max); 0 where both rows are zero"""
    numerator = np.asarray(l1.minimum(l2).sum(axis=1)).ravel()
    denominator = np.asarray(l1.maximum(l2).sum(axis=1)).ravel()
    return np.divide(
        numerator, denominator, out=np.zeros_like(denominator), where=denominator > 0
    )


def jaccard_coefficient(graph, u, r1, r2, reverse=False):
    # type: (..., int, int, int, bool) -> float
    """
    Generalized Jaccard coefficient of the reachability of u under r1 and
    under r2: the sum of elementwise minima over the sum of maxima, taken
    over the nodes v that share the type of u.
    """
    t = int(graph.node_types[u])
    _check_hub(graph, t, r1, r2, reverse)
    hub = graph.nodes_of_type(t)
    p1 = transition_matrix(graph, r1, reverse)
    p2 = transition_matrix(graph, r2, reverse)
    l1 = p1[[u]] @ p1[hub].T
    l2 = p2[[u]] @ p2[hub].T
    return float(_generalized_jaccard(l1, l2)[0])


def jaccard_profile(graph, r1, r2, hub_type=None, reverse=False):
    # type: (..., int, int, Optional[int], bool) -> JaccardProfile
    """J for every node of the hub type"""
    if hub_type is None:
        hub_type = common_hub_type(graph, r1, r2, reverse)
    _check_hub(graph, hub_type, r1, r2, reverse)
    coefficients = _generalized_jaccard(
        reachability(graph, r1, hub_type, reverse),
        reachability(graph, r2, hub_type, reverse),
    )
    return JaccardProfile(r1, r2, hub_type, graph.nodes_of_type(hub_type), coefficients)


def jaccard_cdf(graph, r1, r2, grid=DEFAULT_GRID, hub_type=None, reverse=False):
    # type: (..., int, int, Sequence[float], Optional[int], bool) -> List[Tuple[float, float]]
    """(threshold, fraction of hub nodes with J <= threshold) per grid point"""
    profile = jaccard_profile(graph, r1, r2, hub_type, reverse)
    coefficients = np.sort(profile.coefficients)
    n = len(coefficients)
    table = []
    for threshold in sorted(grid):
        count = np.searchsorted(coefficients, threshold, side="right")
        table.append((float(threshold), int(count) / n if n else 1.0))
    LOGGER.info(
        "jaccard %s/%s over %d nodes: mean %.3g",
        graph.schema.edge_types[r1].name,
        graph.schema.edge_types[r2].name,
        n,
        coefficients.mean() if n else 0.0,
    )
    return table


def save_cdf(table, path):
    with open(path, "w", encoding="utf-8", newline="") as out:
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["threshold", "fraction"])
        for threshold, fraction in table:
            writer.writerow([repr(threshold), repr(fraction)])


def standardize_metrics(metrics, edge_type_names=None):
    # type: (...) -> np.ndarray
    """
    Every metric_r shifted and scaled to mean 0 and population standard
    deviation 1. Row r of the result is the standardized metric_r.
    """
    vectors = np.asarray(metrics.vectors, dtype=np.float64)
    if vectors.shape[1] < 2:
        raise AnalysisError("metrics need at least 2 dimensions to standardize")
    mean = vectors.mean(axis=1, keepdims=True)
    std = vectors.std(axis=1, keepdims=True)
    flat = np.flatnonzero(std.ravel() == 0)
    if len(flat):
        name = edge_type_names[flat[0]] if edge_type_names else str(flat[0])
        raise AnalysisError(
            "zero variance in the metric of '{}' (untrained metrics cannot be "
            "standardized)".format(name)
        )
    return (vectors - mean) / std


def metric_similarity(metrics, r1, r2):
    # type: (..., int, int) -> float
    """Cosine similarity of the standardized metrics of r1 and r2"""
    standardized = standardize_metrics(metrics)
    a, b = standardized[r1], standardized[r2]
    norm = np.linalg.norm(a) * np.linalg.norm(b)
    if norm == 0:
        raise AnalysisError("zero metric vector")
    return float(np.clip(a @ b / norm, -1.0, 1.0))


def order_dimensions(standardized):
    # type: (np.ndarray) -> List[int]
    """
    Greedy nearest-neighbour chain over the metric dimensions (columns),
    from dimension 0, ties broken by the lowest index.
    """
    columns = np.asarray(standardized, dtype=np.float64).T
    order = [0]
    remaining = list(range(1, len(columns)))
    while remaining:
        last = columns[order[-1]]
        distances = [np.linalg.norm(columns[j] - last) for j in remaining]
        order.append(remaining.pop(int(np.argmin(distances))))
    return order


def export_heatmap(metrics, edge_type_names, path):
    # type: (..., Sequence[str], str) -> List[int]
    """Standardized metrics as CSV, columns in order_dimensions() order"""
    standardized = standardize_metrics(metrics, edge_type_names)
    order = order_dimensions(standardized)
    with open(path, "w", encoding="utf-8", newline="") as out:
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["edge_type"] + ["d{}".format(j) for j in order])
        for name, row in zip(edge_type_names, standardized):
            writer.writerow([name] + [repr(float(row[j])) for j in order])
    return order


def metapath_types(graph, start_type, metapath):
    # type: (..., int, Sequence[int]) -> List[int]
    """
    Node types visited along [metapath] from [start_type]. Directed steps
    go from source to destination only.
    """
    types = [start_type]
    for r in metapath:
        src, dst = graph.schema.endpoint_types(r)
        current = types[-1]
        if current == src:
            types.append(dst)
        elif current == dst and not graph.schema.directed[r]:
            types.append(src)
        else:
            raise AnalysisError(
                "inconsistent meta-path: step '{}' cannot leave node type '{}'".format(
                    graph.schema.edge_types[r].name, graph.schema.node_types[current]
                )
            )
    return types


def metapath_neighbors(graph, anchor, metapath, max_nodes=None, seed=0, label=None):
    # type: (..., int, Sequence[int], Optional[int], int, Optional[str]) -> MetapathGroup
    """
    Nodes reached from [anchor] by following the typed steps of
    [metapath], anchor excluded, uniformly downsampled to [max_nodes].
    """
    if not metapath:
        raise AnalysisError("empty meta-path")
    if max_nodes is not None and max_nodes < 0:
        raise AnalysisError("max_nodes must be >= 0, got {}".format(max_nodes))
    metapath_types(graph, int(graph.node_types[anchor]), metapath)
    frontier = np.zeros(graph.num_nodes, dtype=np.float64)
    frontier[anchor] = 1.0
    for r in metapath:
        reached = graph.adjacency(r).T @ frontier
        frontier = (reached > 0).astype(np.float64)
    nodes = np.flatnonzero(frontier)
    nodes = nodes[nodes != anchor]
    if max_nodes is not None and len(nodes) > max_nodes:
        nodes = np.sort(make_rng(seed).choice(nodes, size=max_nodes, replace=False))
    if label is None:
        label = "-".join(graph.schema.edge_types[r].name for r in metapath)
    return MetapathGroup(label, nodes)


def export_metapath_csv(path, groups, store, graph):
    # type: (str, Sequence[MetapathGroup], ..., ...) -> None
    """node_id,metapath_label,v_1..v_dV rows for external projection tools"""
    with open(path, "w", encoding="utf-8", newline="") as out:
        writer = csv.writer(out, lineterminator="\n")
        header = ["v_{}".format(i + 1) for i in range(store.d_v)]
        writer.writerow(["node_id", "metapath_label"] + header)
        for group in groups:
            for u in group.nodes:
                writer.writerow(
                    [graph.node_ids[u], group.label]
                    + [repr(float(x)) for x in store.vectors[u]]
                )


def edge_probabilities(graph, store, metrics, pairs):
    # type: (..., ..., ..., Sequence[Tuple[int, int]]) -> List[Tuple[int, int, str, float]]
    """
    expit(metric_r . edge_uv) of every pair under every edge type it is consistent
    with. One pair can be likely under one metric and unlikely under another.
    """
    rows = []
    for u, v in pairs:
        for r, edge_type in enumerate(graph.schema.edge_types):
            if not graph.is_consistent(u, v, r):
                continue
            directed = bool(graph.schema.directed[r])
            score = pair_scores(
                store, metrics, np.array([u]), np.array([v]), r, directed
            )
            rows.append((u, v, edge_type.name, float(expit(score[0]))))
    return rows


def save_edge_probabilities(rows, graph, path):
    with open(path, "w", encoding="utf-8", newline="") as out:
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["u", "v", "edge_type", "probability"])
        for u, v, name, probability in rows:
            writer.writerow(
                [graph.node_ids[u], graph.node_ids[v], name, repr(probability)]
            )
