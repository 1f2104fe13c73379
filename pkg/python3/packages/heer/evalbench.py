"""
evalbench.py

Edge reconstruction benchmark. Knocked-out edges become ranking
instances: the true pair against 10 type-consistent pairs that have no
edge of the same type in the full graph, on each side. Scorers are
compared by mean reciprocal rank (MRR), pooled over all ranks (micro)
and averaged over per-edge-type means (macro).

Also holds the synthetic HIN generator used to build graphs whose edge
types are compatible or incompatible by construction.
"""

import csv
import hashlib
import json
import logging
import warnings
from collections import OrderedDict, defaultdict
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from sklearn.exceptions import ConvergenceWarning
from sklearn.linear_model import LogisticRegression
from sklearn.pipeline import Pipeline, make_pipeline
from sklearn.preprocessing import StandardScaler

from .config import TrainConfig
from .errors import ScorerError, ValidationError
from .hin import EdgeType, HinGraph, Schema, knockout
from .model import EmbeddingStore, MetricStore, edge_embeddings, pair_scores
from .sampler import make_rng
from .trainer import pretrain_line, rescale_embeddings, train_heer

LOGGER = logging.getLogger("heer.evalbench")

N_NEGATIVES = 10
SCORER_NAMES = ("heer", "pretrained", "unimetrics", "logit", "random")
LOGIT_MAX_ITER = 1000


@dataclass(frozen=True)
class EvalInstance:
    u: int
    v: int
    edge_type: int
    negatives_v: Tuple[int, ...]
    negatives_u: Tuple[int, ...]


class InstanceList(list):
    """Evaluation instances plus the number of removed edges skipped"""

    def __init__(self, instances=(), n_skipped=0):
        super().__init__(instances)
        self.n_skipped = n_skipped


# --------------------------------------------------------------------------
# Scorers
# --------------------------------------------------------------------------


class Scorer:
    """A pure function (u, v, r) -> score; higher means more likely"""

    name = "scorer"

    def scores(self, u, v, r):
        # type: (np.ndarray, np.ndarray, int) -> np.ndarray
        raise NotImplementedError

    def __call__(self, u, v, r):
        return float(self.scores(np.array([u]), np.array([v]), r)[0])


class HeerScorer(Scorer):
    """metric_r . edge_uv from trained embeddings and metrics"""

    def __init__(self, store, metrics, schema, name="heer"):
        self.store = store
        self.metrics = metrics
        self.directed = schema.directed
        self.name = name

    def scores(self, u, v, r):
        return pair_scores(self.store, self.metrics, u, v, r, bool(self.directed[r]))


def unimetrics_scorer(store, schema):
    # type: (EmbeddingStore, Schema) -> HeerScorer
    """HEER scoring with every metric fixed at all ones"""
    metrics = MetricStore.ones(len(schema.edge_types), store.d_h, store.vectors.dtype)
    return HeerScorer(store, metrics, schema, name="unimetrics")


class PretrainedScorer(Scorer):
    """Inner product of the full embeddings of u and v"""

    name = "pretrained"

    def __init__(self, store):
        self.store = store

    def scores(self, u, v, r):
        return np.einsum("ij,ij->i", self.store.vectors[u], self.store.vectors[v])


class LogitScorer(Scorer):
    """Per edge type logistic regression over edge_uv of frozen embeddings"""

    name = "logit"

    def __init__(self, store, schema, models):
        self.store = store
        self.directed = schema.directed
        # models[r] is None for edge types without training pairs
        self.models = models  # type: List[Optional[Pipeline]]

    def scores(self, u, v, r):
        if self.models[r] is None:
            return np.zeros(len(u))
        features = edge_embeddings(self.store, u, v, bool(self.directed[r]))
        return self.models[r].decision_function(features)


class RandomScorer(Scorer):
    """Uniform scores in [0, 1) from a keyed hash of (seed, u, v, r)"""

    name = "random"

    def __init__(self, seed):
        self.key = int(seed).to_bytes(8, "little")

    def _one(self, u, v, r):
        digest = hashlib.blake2b(
            "{}:{}:{}".format(u, v, r).encode("ascii"), digest_size=8, key=self.key
        ).digest()
        return int.from_bytes(digest, "little") / 2.0**64

    def scores(self, u, v, r):
        return np.array([self._one(int(a), int(b), r) for a, b in zip(u, v)])


def fit_logistic(features, labels, l2):
    # type: (np.ndarray, np.ndarray, float) -> Tuple[Pipeline, bool]
    """
    Standardize the features and fit an L2-regularized logistic regression
    minimizing mean logistic loss + l2/2 * |w|^2. Returns (model, converged).
    """
    features = np.asarray(features, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.float64)
    model = make_pipeline(
        StandardScaler(),
        LogisticRegression(C=1.0 / (l2 * len(labels)), max_iter=LOGIT_MAX_ITER),
    )
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConvergenceWarning)
        model.fit(features, labels)
    converged = int(model[-1].n_iter_.max()) < LOGIT_MAX_ITER
    return model, converged


def _sample_non_edges(graph, r, count, rng):
    """[count] type-consistent pairs with no type-r edge, sampled uniformly"""
    src_type, dst_type = graph.schema.endpoint_types(r)
    sources = graph.nodes_of_type(src_type)
    targets = graph.nodes_of_type(dst_type)
    pairs = []  # type: List[Tuple[int, int]]
    attempts = 0
    while len(pairs) < count and attempts < 20 * count + 100:
        attempts += 1
        u = int(sources[rng.integers(len(sources))])
        v = int(targets[rng.integers(len(targets))])
        if u != v and not graph.has_edge(u, v, r):
            pairs.append((u, v))
    if len(pairs) < count:
        LOGGER.warning(
            "only %d of %d non-edges found for '%s'",
            len(pairs),
            count,
            graph.schema.edge_types[r].name,
        )
    return pairs


def train_logit_baseline(pretrained, graph, config):
    # type: (EmbeddingStore, HinGraph, TrainConfig) -> LogitScorer
    """
    One logistic regression per edge type: observed edges against an equal
    number of uniform non-edges, features edge_uv of the frozen embeddings.
    """
    config.validate()
    if pretrained.num_nodes != graph.num_nodes:
        raise ValidationError("embeddings do not match the graph", module="evalbench")
    rng = make_rng(config.seed)
    models = []  # type: List[Optional[Pipeline]]
    for r, edge_type in enumerate(graph.schema.edge_types):
        src, dst, _ = graph.edges(r)
        negatives = _sample_non_edges(graph, r, len(src), rng) if len(src) else []
        if not negatives:
            LOGGER.warning("logit '%s': no training pairs, scores 0", edge_type.name)
            models.append(None)
            continue
        neg_u = np.array([p[0] for p in negatives], dtype=np.int64)
        neg_v = np.array([p[1] for p in negatives], dtype=np.int64)
        directed = bool(graph.schema.directed[r])
        features = np.vstack(
            (
                edge_embeddings(pretrained, src, dst, directed),
                edge_embeddings(pretrained, neg_u, neg_v, directed),
            )
        )
        labels = np.concatenate((np.ones(len(src)), np.zeros(len(negatives))))
        model, converged = fit_logistic(features, labels, config.logit_l2)
        LOGGER.info(
            "logit '%s': %d positives, %d negatives, converged=%s",
            edge_type.name,
            len(src),
            len(negatives),
            converged,
        )
        models.append(model)
    return LogitScorer(pretrained, graph.schema, models)


# --------------------------------------------------------------------------
# Instances and ranking
# --------------------------------------------------------------------------


def _eligible(graph, anchor, r, side, exclude):
    candidates = graph.candidates(anchor, r, side)
    linked = graph.neighbors(anchor, r, reverse=side == "u")
    mask = ~np.isin(candidates, linked) & ~np.isin(candidates, exclude)
    return candidates[mask]


def generate_instances(full, removed, seed, n_negatives=N_NEGATIVES):
    # type: (HinGraph, Sequence[Tuple[int, int, int, float]], int, int) -> InstanceList
    """
    One instance per removed edge. Negatives are drawn without replacement
    from type-consistent nodes with no type-r edge to the kept endpoint in
    [full]. Edges lacking [n_negatives] eligible nodes on a side are skipped.
    """
    rng = make_rng(seed)
    instances = InstanceList()
    for u, v, r, _ in removed:
        eligible_v = _eligible(full, u, r, "v", (u, v))
        eligible_u = _eligible(full, v, r, "u", (u, v))
        if len(eligible_v) < n_negatives or len(eligible_u) < n_negatives:
            instances.n_skipped += 1
            continue
        negatives_v = rng.choice(eligible_v, size=n_negatives, replace=False)
        negatives_u = rng.choice(eligible_u, size=n_negatives, replace=False)
        instances.append(
            EvalInstance(
                int(u),
                int(v),
                int(r),
                tuple(int(x) for x in negatives_v),
                tuple(int(x) for x in negatives_u),
            )
        )
    if instances.n_skipped:
        LOGGER.warning(
            "skipped %d of %d removed edges with fewer than %d eligible negatives",
            instances.n_skipped,
            len(removed),
            n_negatives,
        )
    return instances


def reciprocal_rank(scorer, positive, negatives):
    # type: (Scorer, Tuple[int, int, int], Sequence[Tuple[int, int]]) -> float
    """1 / rank of the positive pair; ties rank the positive lower"""
    u, v, r = positive
    left = np.array([u] + [p[0] for p in negatives], dtype=np.int64)
    right = np.array([v] + [p[1] for p in negatives], dtype=np.int64)
    scores = np.asarray(scorer.scores(left, right, r), dtype=np.float64)
    if not np.all(np.isfinite(scores)):
        raise ScorerError(
            scorer.name, "non-finite score for edge ({}, {}, {})".format(u, v, r)
        )
    rank = 1 + int(np.count_nonzero(scores[1:] >= scores[0]))
    return 1.0 / rank


@dataclass
class EvalReport:
    per_type: Dict[str, float]
    micro: float
    macro: float
    n_instances: int
    n_skipped: int = 0
    config_hash: Optional[str] = None
    # (edge type name, side, u, v, reciprocal rank)
    ranks: List[Tuple[str, str, int, int, float]] = field(
        default_factory=list, repr=False
    )

    def to_dict(self):
        return OrderedDict(
            [
                ("per_type", dict(sorted(self.per_type.items()))),
                ("micro", self.micro),
                ("macro", self.macro),
                ("n_instances", self.n_instances),
                ("n_skipped", self.n_skipped),
                ("config_hash", self.config_hash),
            ]
        )


def summarize_ranks(ranks):
    # type: (Sequence[Tuple[str, str, int, int, float]]) -> Tuple[Dict[str, float], float, float]
    """(per type MRR, micro MRR, macro MRR) of (edge type, side, u, v, rr) rows"""
    by_type = defaultdict(list)  # type: Dict[str, List[float]]
    for rank in ranks:
        by_type[rank[0]].append(rank[-1])
    per_type = {name: float(np.mean(values)) for name, values in by_type.items()}
    micro = float(np.mean([rank[-1] for rank in ranks]))
    macro = float(np.mean(list(per_type.values())))
    return per_type, micro, macro


def evaluate(scorer, instances, edge_type_names=None, digest=None):
    # type: (Scorer, Sequence[EvalInstance], Optional[Sequence[str]], Optional[str]) -> EvalReport
    """Two reciprocal ranks per instance, micro- and macro-averaged"""
    if not instances:
        raise ValidationError("no evaluation instances", module="evalbench")
    ranks = []
    for inst in instances:
        if edge_type_names:
            name = edge_type_names[inst.edge_type]
        else:
            name = str(inst.edge_type)
        positive = (inst.u, inst.v, inst.edge_type)
        rr_v = reciprocal_rank(
            scorer, positive, [(inst.u, n) for n in inst.negatives_v]
        )
        rr_u = reciprocal_rank(
            scorer, positive, [(n, inst.v) for n in inst.negatives_u]
        )
        ranks.append((name, "v", inst.u, inst.v, rr_v))
        ranks.append((name, "u", inst.u, inst.v, rr_u))
    per_type, micro, macro = summarize_ranks(ranks)
    report = EvalReport(
        per_type=per_type,
        micro=micro,
        macro=macro,
        n_instances=len(instances),
        n_skipped=getattr(instances, "n_skipped", 0),
        config_hash=digest,
        ranks=ranks,
    )
    LOGGER.info(
        "%s: micro MRR %.4f, macro MRR %.4f over %d instances",
        scorer.name,
        report.micro,
        report.macro,
        report.n_instances,
    )
    return report


def save_report(report, path, ranks_path=None):
    # type: (EvalReport, str, Optional[str]) -> None
    with open(path, "w", encoding="utf-8") as out:
        json.dump(report.to_dict(), out, indent=2)
        out.write("\n")
    if ranks_path:
        with open(ranks_path, "w", encoding="utf-8", newline="") as out:
            writer = csv.writer(out, lineterminator="\n")
            writer.writerow(["edge_type", "side", "u", "v", "reciprocal_rank"])
            writer.writerows(report.ranks)


def build_scorers(names, graph, config, pretrained=None):
    # type: (Sequence[str], HinGraph, TrainConfig, Optional[EmbeddingStore]) -> Dict[str, Scorer]
    """Train whatever each named scorer needs on [graph]"""
    unknown = [n for n in names if n not in SCORER_NAMES]
    if unknown:
        raise ValidationError(
            "unknown scorer '{}'".format(unknown[0]), module="evalbench"
        )
    if pretrained is None and any(n != "random" for n in names):
        pretrained = pretrain_line(graph, config)
    scorers = OrderedDict()  # type: Dict[str, Scorer]
    for name in names:
        if name == "heer":
            init = rescale_embeddings(pretrained, config.rescale)
            result = train_heer(graph, init, config.updated(freeze_metrics=False))
            scorers[name] = HeerScorer(result.embeddings, result.metrics, graph.schema)
        elif name == "unimetrics":
            init = rescale_embeddings(pretrained, config.rescale)
            result = train_heer(graph, init, config.updated(freeze_metrics=True))
            scorers[name] = unimetrics_scorer(result.embeddings, graph.schema)
        elif name == "pretrained":
            scorers[name] = PretrainedScorer(pretrained)
        elif name == "logit":
            scorers[name] = train_logit_baseline(pretrained, graph, config)
        else:
            scorers[name] = RandomScorer(config.seed)
    return scorers


def kappa_sweep(graph, kappas, config, scorers=("heer", "pretrained"), seed=None):
    # type: (HinGraph, Sequence[float], TrainConfig, Sequence[str], Optional[int]) -> Dict[float, Dict[str, float]]
    """Micro MRR of every scorer at every knock-out rate"""
    seed = config.seed if seed is None else seed
    results = OrderedDict()  # type: Dict[float, Dict[str, float]]
    names = [e.name for e in graph.schema.edge_types]
    for kappa in kappas:
        split = knockout(graph, kappa, seed)
        instances = generate_instances(graph, split.removed, seed)
        trained = build_scorers(scorers, split.retained, config)
        results[kappa] = OrderedDict(
            (name, evaluate(scorer, instances, names).micro)
            for name, scorer in trained.items()
        )
        LOGGER.info("kappa=%s: %s", kappa, dict(results[kappa]))
    return results


def save_sweep(results, path):
    # type: (Dict[float, Dict[str, float]], str) -> None
    with open(path, "w", encoding="utf-8", newline="") as out:
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["kappa", "scorer", "micro_mrr"])
        for kappa, row in results.items():
            for name, micro in row.items():
                writer.writerow([kappa, name, repr(micro)])


# --------------------------------------------------------------------------
# Synthetic HINs
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class SyntheticEdgeType:
    """
    An edge type to generate. Edge types with the same [partition] label
    are drawn from the same latent clustering; None means a private one.
    """

    name: str
    src_type: str
    dst_type: str
    directed: bool = False
    partition: Optional[str] = None
    degree: int = 5


@dataclass(frozen=True)
class SyntheticSpec:
    """
    node_counts maps node type -> count (insertion order is node order).
    With incompatibility=False every edge type shares one clustering.
    """

    node_counts: Dict[str, int]
    edge_types: Tuple[SyntheticEdgeType, ...]
    incompatibility: bool = True
    clusters: int = 20
    noise: float = 0.05

    @classmethod
    def two_semantic(cls, incompatibility=True, users=900, items=100):
        """Two user-item edge types; independent clusterings when incompatible"""
        return cls(
            OrderedDict([("user", users), ("item", items)]),
            (
                SyntheticEdgeType("r1", "user", "item"),
                SyntheticEdgeType("r2", "user", "item"),
            ),
            incompatibility,
        )

    @classmethod
    def duplicated_pair(cls, users=900, items=100):
        """r1 and r2 share a clustering, r3 has its own"""
        return cls(
            OrderedDict([("user", users), ("item", items)]),
            (
                SyntheticEdgeType("r1", "user", "item", partition="shared"),
                SyntheticEdgeType("r2", "user", "item", partition="shared"),
                SyntheticEdgeType("r3", "user", "item"),
            ),
            True,
        )

    def validate(self):
        if self.clusters < 1:
            raise ValidationError("clusters must be >= 1", module="evalbench")
        if not 0 <= self.noise <= 1:
            raise ValidationError("noise must be in [0,1]", module="evalbench")
        for t, count in self.node_counts.items():
            if count < 1:
                raise ValidationError(
                    "node type '{}' needs at least one node".format(t),
                    module="evalbench",
                )
        for e in self.edge_types:
            for end in (e.src_type, e.dst_type):
                if end not in self.node_counts:
                    raise ValidationError(
                        "edge type '{}' uses unknown node type '{}'".format(
                            e.name, end
                        ),
                        module="evalbench",
                    )
        return self

    def schema(self):
        return Schema(
            list(self.node_counts),
            [
                EdgeType(e.name, e.src_type, e.dst_type, e.directed)
                for e in self.edge_types
            ],
        )


def _partition_label(spec, edge_type):
    if not spec.incompatibility:
        return "shared"
    return edge_type.partition or "@" + edge_type.name


def generate_synthetic_hin(spec, seed):
    # type: (SyntheticSpec, int) -> HinGraph
    """
    Every node gets a latent cluster per partition. Each source node draws
    [degree] distinct targets, from its own cluster with probability
    1 - noise and uniformly otherwise.
    """
    spec.validate()
    schema = spec.schema()
    rng = make_rng(seed)
    node_ids = []  # type: List[str]
    node_types = []  # type: List[int]
    members = {}  # type: Dict[str, np.ndarray]
    for t, (name, count) in enumerate(spec.node_counts.items()):
        members[name] = np.arange(len(node_ids), len(node_ids) + count)
        node_ids.extend("{}{}".format(name, i) for i in range(count))
        node_types.extend([t] * count)

    labels = sorted({_partition_label(spec, e) for e in spec.edge_types})
    clusters = {
        label: rng.integers(spec.clusters, size=len(node_ids)) for label in labels
    }

    records = []
    for r, e in enumerate(spec.edge_types):
        assignment = clusters[_partition_label(spec, e)]
        targets = members[e.dst_type]
        by_cluster = {
            c: targets[assignment[targets] == c] for c in range(spec.clusters)
        }
        for s in members[e.src_type]:
            own = by_cluster[int(assignment[s])]
            if len(own) == 0:
                own = targets
            chosen = set()
            for _ in range(4 * e.degree):
                if len(chosen) >= e.degree:
                    break
                pool = targets if rng.random() < spec.noise else own
                t = int(pool[rng.integers(len(pool))])
                if t != s:
                    chosen.add(t)
            records.extend((int(s), t, r, 1.0) for t in sorted(chosen))
    graph = HinGraph.from_records(schema, node_ids, node_types, records)
    LOGGER.info("generated synthetic %r (seed %s)", graph, seed)
    return graph

