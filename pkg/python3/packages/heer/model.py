"""
model.py

Node embeddings, per-edge-type metrics, the edge representation, typed
closeness, the KL objective and the negative-sampling loss with its
analytic gradients.

Each node u has an embedding of dimension d_v = 2 * d_h. The first half,
out_u, faces outgoing edges and the second half, in_u, faces incoming
edges. An edge (u, v) is represented by

    directed:    edge_uv = 2 * (out_u * in_v)
    undirected:  edge_uv = out_u * out_v + in_u * in_v

and scored under edge type r as metric_r . edge_uv. Training minimizes the
negated log-likelihood of the negative-sampling objective.
"""

import logging
from collections import namedtuple
from typing import Optional, Sequence

import numpy as np
from scipy.special import expit, log_expit, logsumexp

from .errors import GraphFormatError, InconsistentPairError, NumericalError

LOGGER = logging.getLogger("heer.model")

FLOAT_FORMATS = {np.dtype(np.float64): "%.17g", np.dtype(np.float32): "%.9g"}

# negatives_v replace v (same type as v), negatives_u replace u
Sample = namedtuple("Sample", ["u", "v", "edge_type", "negatives_v", "negatives_u"])

SampleLossGrad = namedtuple(
    "SampleLossGrad", ["loss", "nodes", "grad_rows", "edge_type", "grad_metric"]
)
SampleLossGrad.__doc__ = """
Loss of one sample and its gradients. grad_rows[i] is the gradient of the
full embedding row of nodes[i]; nodes are unique and sorted. grad_metric is
the gradient of the metric of [edge_type].
"""


class EmbeddingStore:
    """
    Node embeddings, one row per node: vectors[u] is the embedding of u.
    The transposed, column-per-node view is [matrix].
    """

    def __init__(self, vectors):
        vectors = np.ascontiguousarray(vectors)
        if vectors.ndim != 2:
            raise ValueError("embeddings must be a 2-d array")
        if vectors.shape[1] % 2 or vectors.shape[1] == 0:
            raise ValueError(
                "embedding dimension must be even, got {}".format(vectors.shape[1])
            )
        self.vectors = vectors

    @classmethod
    def zeros(cls, num_nodes, d_v, dtype="float64"):
        return cls(np.zeros((num_nodes, d_v), dtype=dtype))

    @classmethod
    def uniform(cls, num_nodes, d_v, rng, dtype="float64"):
        """Every coordinate uniform in [-0.5/d_h, 0.5/d_h]"""
        bound = 0.5 / (d_v // 2)
        return cls(rng.uniform(-bound, bound, size=(num_nodes, d_v)).astype(dtype))

    @property
    def num_nodes(self):
        return self.vectors.shape[0]

    @property
    def d_v(self):
        return self.vectors.shape[1]

    @property
    def d_h(self):
        return self.vectors.shape[1] // 2

    @property
    def matrix(self):
        return self.vectors.T

    @property
    def out_part(self):
        """Out-facing halves of all nodes, a view"""
        return self.vectors[:, : self.d_h]

    @property
    def in_part(self):
        """In-facing halves, a view"""
        return self.vectors[:, self.d_h :]

    def f(self, u):
        return self.vectors[u]

    def f_out(self, u):
        return self.vectors[u, : self.d_h]

    def f_in(self, u):
        return self.vectors[u, self.d_h :]

    def copy(self):
        return EmbeddingStore(self.vectors.copy())

    def is_finite(self):
        return bool(np.all(np.isfinite(self.vectors)))


class MetricStore:
    """Edge type metrics, one row per edge type: vectors[r] is the metric of r"""

    def __init__(self, vectors):
        vectors = np.ascontiguousarray(vectors)
        if vectors.ndim != 2:
            raise ValueError("metrics must be a 2-d array")
        self.vectors = vectors

    @classmethod
    def ones(cls, num_edge_types, d_e, dtype="float64"):
        return cls(np.ones((num_edge_types, d_e), dtype=dtype))

    @property
    def d_e(self):
        return self.vectors.shape[1]

    @property
    def matrix(self):
        return self.vectors.T

    def metric(self, r):
        return self.vectors[r]

    def copy(self):
        return MetricStore(self.vectors.copy())

    def is_finite(self):
        return bool(np.all(np.isfinite(self.vectors)))


def edge_embedding(store, u, v, directed):
    # type: (EmbeddingStore, int, int, bool) -> np.ndarray
    if directed:
        return 2 * (store.f_out(u) * store.f_in(v))
    return store.f_out(u) * store.f_out(v) + store.f_in(u) * store.f_in(v)


def edge_embeddings(store, u, v, directed):
    # type: (EmbeddingStore, np.ndarray, np.ndarray, bool) -> np.ndarray
    """Row i is g of the pair (u[i], v[i])"""
    out, inn = store.out_part, store.in_part
    if directed:
        return 2 * (out[u] * inn[v])
    return out[u] * out[v] + inn[u] * inn[v]


def pair_scores(store, metrics, u, v, r, directed):
    """metric_r . edge for arrays of pairs, no consistency checks"""
    return edge_embeddings(store, u, v, directed) @ metrics.metric(r)


def edge_score(graph, store, metrics, u, v, r):
    """metric_r . edge_uv; InconsistentPairError if (u, v) does not fit r"""
    if not graph.is_consistent(u, v, r):
        raise InconsistentPairError(
            graph.node_ids[u], graph.node_ids[v], graph.schema.edge_types[r].name
        )
    directed = bool(graph.schema.directed[r])
    return float(edge_embedding(store, u, v, directed) @ metrics.metric(r))


def log_typed_closeness(graph, store, metrics, u, v, r):
    """Log typed closeness of (u, v) under r, -inf outside its consistent pairs"""
    if not graph.is_consistent(u, v, r):
        return -np.inf
    directed = bool(graph.schema.directed[r])
    cand_v = graph.candidates(u, r, "v")
    cand_u = graph.candidates(v, r, "u")
    scores = np.concatenate(
        (
            pair_scores(store, metrics, np.full(len(cand_v), u), cand_v, r, directed),
            pair_scores(store, metrics, cand_u, np.full(len(cand_u), v), r, directed),
        )
    ).astype(np.float64)
    score = float(edge_embedding(store, u, v, directed) @ metrics.metric(r))
    return score - float(logsumexp(scores))


def typed_closeness_exact(graph, store, metrics, u, v, r):
    """
    Typed closeness: exp(score) over the summed exp-scores of all
    consistent (u, v~) and (u~, v) pairs. At most 1/2, and 0 for pairs
    that are not consistent with r.
    """
    return float(np.exp(log_typed_closeness(graph, store, metrics, u, v, r)))


def kl_objective_exact(graph, store, metrics, r):
    """
    Weighted negative log typed closeness summed over the type-r edges.
    Enumerates every consistent pair, so only for small graphs.
    """
    total = 0.0
    src, dst, weight = graph.edges(r)
    for u, v, w in zip(src, dst, weight):
        closeness = log_typed_closeness(graph, store, metrics, int(u), int(v), r)
        total -= float(w) * closeness
    return total


def full_objective_exact(graph, store, metrics):
    return sum(
        kl_objective_exact(graph, store, metrics, r)
        for r in range(graph.num_edge_types)
    )


def ns_loss_and_grads(store, metrics, sample, directed):
    # type: (EmbeddingStore, MetricStore, Sample, bool) -> SampleLossGrad
    """
    Negated negative-sampling log-likelihood of [sample]:

        -log sig(s(u, v)) - sum_i log sig(-s(u, v~_i)) - sum_i log sig(-s(u~_i, v))

    with the gradients of every touched embedding row and of metric_r.
    """
    neg_v = np.asarray(sample.negatives_v, dtype=np.int64)
    neg_u = np.asarray(sample.negatives_u, dtype=np.int64)
    left = np.concatenate(([sample.u], np.full(len(neg_v), sample.u), neg_u))
    right = np.concatenate(([sample.v], neg_v, np.full(len(neg_u), sample.v)))
    r = sample.edge_type
    metric = metrics.metric(r)
    d_h = store.d_h

    out, inn = store.out_part, store.in_part
    if directed:
        g = 2 * (out[left] * inn[right])
    else:
        g = out[left] * out[right] + inn[left] * inn[right]
    scores = g @ metric

    loss = -float(log_expit(scores[0])) - float(np.sum(log_expit(-scores[1:])))
    # dL/ds: sig(s) - 1 for the positive pair, sig(s) for negatives
    coef = expit(scores)
    coef[0] = -expit(-scores[0])
    weighted_metric = coef[:, None] * metric[None, :]

    nodes, inverse = np.unique(np.concatenate((left, right)), return_inverse=True)
    inverse = inverse.ravel()
    idx_left, idx_right = inverse[: len(left)], inverse[len(left) :]
    grad_rows = np.zeros((len(nodes), store.d_v), dtype=np.float64)
    grad_out, grad_in = grad_rows[:, :d_h], grad_rows[:, d_h:]
    if directed:
        np.add.at(grad_out, idx_left, 2 * weighted_metric * inn[right])
        np.add.at(grad_in, idx_right, 2 * weighted_metric * out[left])
    else:
        np.add.at(grad_out, idx_left, weighted_metric * out[right])
        np.add.at(grad_out, idx_right, weighted_metric * out[left])
        np.add.at(grad_in, idx_left, weighted_metric * inn[right])
        np.add.at(grad_in, idx_right, weighted_metric * inn[left])
    grad_metric = coef @ g

    finite = np.all(np.isfinite(grad_rows)) and np.all(np.isfinite(grad_metric))
    if not (np.isfinite(loss) and finite):
        raise NumericalError(
            "non-finite loss or gradient (loss={})".format(loss),
            sample=(sample.u, sample.v, r, tuple(neg_v), tuple(neg_u)),
        )
    return SampleLossGrad(loss, nodes, grad_rows, r, grad_metric)


def sample_loss(store, metrics, sample, directed):
    """Loss only, recomputed from scratch"""
    return ns_loss_and_grads(store, metrics, sample, directed).loss


def clip_rows(grad, max_norm):
    # type: (np.ndarray, float) -> np.ndarray
    """Scale each row of [grad] down to an L2 norm of at most [max_norm]"""
    norms = np.linalg.norm(grad, axis=-1, keepdims=True)
    scale = np.minimum(1.0, max_norm / np.maximum(norms, np.finfo(np.float64).tiny))
    return grad * scale


def sgd_apply(store, metrics, grads, lr, freeze_metrics, grad_clip=None):
    # type: (EmbeddingStore, MetricStore, SampleLossGrad, float, bool, Optional[float]) -> None
    """
    param -= lr * grad on the touched rows; metric_r untouched when frozen.

    [lr] is the per-sample step. The trainer passes config.lr / batch_size,
    the share of one sample in a mini-batch whose mean loss is stepped at
    config.lr. With [grad_clip] every embedding row gradient and the metric
    gradient is first clipped to that L2 norm.
    """
    grad_rows, grad_metric = grads.grad_rows, grads.grad_metric
    if grad_clip is not None:
        grad_rows = clip_rows(grad_rows, grad_clip)
        grad_metric = clip_rows(grad_metric, grad_clip)
    store.vectors[grads.nodes] -= lr * grad_rows
    if not freeze_metrics:
        metrics.vectors[grads.edge_type] -= lr * grad_metric


def rescale_embeddings(store, factor):
    # type: (EmbeddingStore, float) -> EmbeddingStore
    if not factor > 0:
        raise ValueError("rescale factor must be > 0, got {}".format(factor))
    return EmbeddingStore(store.vectors * store.vectors.dtype.type(factor))


def _format_row(label, row, fmt):
    return label + " " + " ".join(fmt % x for x in row) + "\n"


def _write_matrix(path, labels, vectors):
    fmt = FLOAT_FORMATS.get(vectors.dtype, "%.17g")
    with open(path, "w", encoding="utf-8", newline="\n") as out:
        out.write("{} {}\n".format(vectors.shape[0], vectors.shape[1]))
        for label, row in zip(labels, vectors):
            out.write(_format_row(label, row, fmt))


def _read_matrix(path, dtype):
    with open(path, encoding="utf-8") as matrix_file:
        header = matrix_file.readline().split()
        if len(header) != 2:
            raise GraphFormatError("expected a 'rows dim' header", path, 1)
        try:
            rows, dim = int(header[0]), int(header[1])
        except ValueError:
            raise GraphFormatError("expected a 'rows dim' header", path, 1) from None
        labels = []
        vectors = np.empty((rows, dim), dtype=dtype)
        for lineno, line in enumerate(matrix_file, start=2):
            if not line.strip():
                continue
            fields = line.rstrip("\n").split(" ")
            if len(fields) != dim + 1:
                raise GraphFormatError(
                    "expected a label and {} values, got {} fields".format(
                        dim, len(fields)
                    ),
                    path,
                    lineno,
                )
            if len(labels) >= rows:
                raise GraphFormatError(
                    "more rows than the header declares", path, lineno
                )
            try:
                vectors[len(labels)] = [float(x) for x in fields[1:]]
            except ValueError:
                raise GraphFormatError("invalid number", path, lineno) from None
            labels.append(fields[0])
    if len(labels) != rows:
        raise GraphFormatError(
            "header declares {} rows, found {}".format(rows, len(labels)), path
        )
    return labels, vectors


def save_embeddings(store, node_ids, path):
    # type: (EmbeddingStore, Sequence[str], str) -> None
    _write_matrix(path, node_ids, store.vectors)


def load_embeddings(path, node_ids=None, dtype="float64"):
    # type: (str, Optional[Sequence[str]], str) -> EmbeddingStore
    """Read an embedding file; rows are reordered to [node_ids] when given"""
    labels, vectors = _read_matrix(path, dtype)
    if vectors.shape[1] % 2:
        raise GraphFormatError("embedding dimension must be even", path)
    if node_ids is not None:
        position = {label: i for i, label in enumerate(labels)}
        missing = [n for n in node_ids if n not in position]
        if missing:
            raise GraphFormatError(
                "{} nodes have no embedding, e.g. '{}'".format(
                    len(missing), missing[0]
                ),
                path,
            )
        vectors = vectors[[position[n] for n in node_ids]]
    LOGGER.debug(
        "loaded %d x %d embeddings from %s", vectors.shape[0], vectors.shape[1], path
    )
    return EmbeddingStore(vectors)


def save_metrics(metrics, edge_type_names, path):
    # type: (MetricStore, Sequence[str], str) -> None
    _write_matrix(path, edge_type_names, metrics.vectors)


def load_metrics(path, edge_type_names=None, dtype="float64"):
    # type: (str, Optional[Sequence[str]], str) -> MetricStore
    labels, vectors = _read_matrix(path, dtype)
    if edge_type_names is not None:
        position = {label: i for i, label in enumerate(labels)}
        missing = [n for n in edge_type_names if n not in position]
        if missing:
            raise GraphFormatError(
                "no metric for edge type '{}'".format(missing[0]), path
            )
        vectors = vectors[[position[n] for n in edge_type_names]]
    return MetricStore(vectors)
