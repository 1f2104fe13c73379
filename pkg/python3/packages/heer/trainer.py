"""
trainer.py

LINE-style pretraining, rescaling and HEER training epochs, plus the
checkpoint directory format:

    embeddings.txt   node embeddings (see model.save_embeddings)
    metrics.txt      edge type metrics
    state.json       {"epoch", "seed", "config_hash", "loss_trace"}
"""

import json
import logging
import math
import os
import time
from collections import namedtuple
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Optional

import numpy as np
from scipy.special import expit

from .config import TrainConfig, config_hash
from .errors import ConfigError, NumericalError, TrainingDiverged
from .model import (
    EmbeddingStore,
    MetricStore,
    Sample,
    load_embeddings,
    load_metrics,
    ns_loss_and_grads,
    rescale_embeddings,
    save_embeddings,
    save_metrics,
    sgd_apply,
)
from .sampler import EdgeSampler, NegativeSampler, make_rng, worker_rngs

LOGGER = logging.getLogger("heer.trainer")

EMBEDDINGS_FILE = "embeddings.txt"
METRICS_FILE = "metrics.txt"
STATE_FILE = "state.json"

Checkpoint = namedtuple(
    "Checkpoint",
    ["embeddings", "metrics", "epoch", "loss_trace", "config_hash", "seed"],
)

TrainResult = namedtuple("TrainResult", ["embeddings", "metrics", "loss_trace"])

__all__ = [
    "Checkpoint",
    "TrainResult",
    "fit",
    "load_checkpoint",
    "pretrain_line",
    "rescale_embeddings",
    "save_checkpoint",
    "train_heer",
]


def save_checkpoint(checkpoint, directory, graph):
    # type: (Checkpoint, str, ...) -> str
    os.makedirs(directory, exist_ok=True)
    save_embeddings(
        checkpoint.embeddings,
        graph.node_ids,
        os.path.join(directory, EMBEDDINGS_FILE),
    )
    save_metrics(
        checkpoint.metrics,
        [e.name for e in graph.schema.edge_types],
        os.path.join(directory, METRICS_FILE),
    )
    state = {
        "epoch": checkpoint.epoch,
        "seed": checkpoint.seed,
        "config_hash": checkpoint.config_hash,
        "loss_trace": list(checkpoint.loss_trace),
    }
    with open(os.path.join(directory, STATE_FILE), "w", encoding="utf-8") as state_file:
        json.dump(state, state_file, indent=2)
        state_file.write("\n")
    LOGGER.info("checkpoint of epoch %d written to %s", checkpoint.epoch, directory)
    return directory


def load_checkpoint(directory, graph, dtype="float64"):
    # type: (str, ..., str) -> Checkpoint
    embeddings = load_embeddings(
        os.path.join(directory, EMBEDDINGS_FILE), graph.node_ids, dtype
    )
    metrics = load_metrics(
        os.path.join(directory, METRICS_FILE),
        [e.name for e in graph.schema.edge_types],
        dtype,
    )
    with open(os.path.join(directory, STATE_FILE), encoding="utf-8") as state_file:
        state = json.load(state_file)
    return Checkpoint(
        embeddings,
        metrics,
        state["epoch"],
        state["loss_trace"],
        state["config_hash"],
        state["seed"],
    )


def _line_steps(store, edge_sampler, negative, config, rng):
    """Second-order LINE over the type-erased graph, decaying lr linearly"""
    n_samples = (config.samples_per_epoch or len(edge_sampler)) * config.pretrain_epochs
    out, inn = store.out_part, store.in_part
    done = 0
    while done < n_samples:
        size = min(config.batch_size, n_samples - done)
        u, v, _ = edge_sampler.sample(rng, size)
        groups = np.zeros(size, dtype=np.int64)
        negatives = negative.sample_many(groups, v, config.k, rng)
        for i in range(size):
            decayed = config.pretrain_lr * (1.0 - (done + i) / n_samples)
            lr = max(decayed, config.pretrain_min_lr)
            context = np.concatenate(([v[i]], negatives[i]))
            labels = np.zeros(len(context))
            labels[0] = 1.0
            vertex = out[u[i]].copy()
            g = (labels - expit(inn[context] @ vertex)) * lr
            out[u[i]] += g @ inn[context]
            np.add.at(inn, context, g[:, None] * vertex[None, :])
        done += size


def pretrain_line(graph, config):
    # type: (..., TrainConfig) -> EmbeddingStore
    """
    Homogeneous pretraining: vertex vectors land in the out part and
    context vectors in the in part. The store starts uniform in [-0.5/d_h, 0.5/d_h].
    """
    config.validate()
    rng = make_rng(config.seed)
    store = EmbeddingStore.uniform(graph.num_nodes, config.d_v, rng, config.dtype)
    if config.pretrain_epochs == 0 or graph.num_edges == 0:
        return store
    edge_sampler = EdgeSampler(graph)
    negative = NegativeSampler.type_erased(graph, config.noise_alpha)
    start = time.monotonic()
    _line_steps(store, edge_sampler, negative, config, rng)
    LOGGER.info(
        "pretrained %d x %d embeddings in %.1fs",
        store.num_nodes,
        store.d_v,
        time.monotonic() - start,
    )
    return store


def _run_samples(graph, store, metrics, edge_sampler, negative, config, rng, count):
    """[count] per-sample updates; returns the summed loss"""
    directed = graph.schema.directed
    node_types = graph.node_types
    step = config.lr / config.batch_size
    total = 0.0
    done = 0
    while done < count:
        size = min(config.batch_size, count - done)
        u, v, r = edge_sampler.sample(rng, size)
        negatives_v = negative.sample_many(node_types[v], v, config.k, rng)
        negatives_u = negative.sample_many(node_types[u], u, config.k, rng)
        for i in range(size):
            sample = Sample(
                int(u[i]), int(v[i]), int(r[i]), negatives_v[i], negatives_u[i]
            )
            grads = ns_loss_and_grads(store, metrics, sample, bool(directed[r[i]]))
            sgd_apply(
                store, metrics, grads, step, config.freeze_metrics, config.grad_clip
            )
            total += grads.loss
        done += size
    return total


def _diverged(message, checkpoint, config, graph, cause=None):
    if config.checkpoint_dir:
        save_checkpoint(checkpoint, config.checkpoint_dir, graph)
    raise TrainingDiverged(message, checkpoint=checkpoint) from cause


def train_heer(graph, init, config, on_epoch_end=None):
    # type: (..., EmbeddingStore, TrainConfig, Optional[Callable]) -> TrainResult
    """
    Train embeddings and metrics from [init]. Metrics start at all ones.
    on_epoch_end(epoch, store, metrics, mean_loss) runs after every epoch.
    """
    config.validate()
    if init.d_v != config.d_v or init.num_nodes != graph.num_nodes:
        raise ConfigError(
            "initial embeddings are {} x {}, expected {} x {}".format(
                init.num_nodes, init.d_v, graph.num_nodes, config.d_v
            )
        )
    store = EmbeddingStore(init.vectors.astype(config.dtype, copy=True))
    metrics = MetricStore.ones(graph.num_edge_types, config.d_h, config.dtype)
    loss_trace = []  # type: List[float]
    if config.epochs == 0:
        return TrainResult(store, metrics, loss_trace)

    digest = config_hash(config)
    edge_sampler = EdgeSampler(graph)
    negative = NegativeSampler.from_graph(graph, config.noise_alpha)
    n_samples = config.samples_per_epoch or graph.num_edges
    if config.workers == 1:
        rngs = [make_rng(config.seed)]
    else:
        rngs = worker_rngs(config.seed, config.workers)
    quotient, remainder = divmod(n_samples, len(rngs))
    shares = [quotient + (i < remainder) for i in range(len(rngs))]
    last_good = Checkpoint(store.copy(), metrics.copy(), 0, [], digest, config.seed)

    for epoch in range(1, config.epochs + 1):
        start = time.monotonic()
        try:
            if len(rngs) == 1:
                total = _run_samples(
                    graph,
                    store,
                    metrics,
                    edge_sampler,
                    negative,
                    config,
                    rngs[0],
                    n_samples,
                )
            else:
                # workers update the shared arrays without locks; the pool
                # join is the epoch barrier
                with ThreadPoolExecutor(max_workers=len(rngs)) as pool:
                    futures = [
                        pool.submit(
                            _run_samples,
                            graph,
                            store,
                            metrics,
                            edge_sampler,
                            negative,
                            config,
                            rng,
                            share,
                        )
                        for rng, share in zip(rngs, shares)
                    ]
                    total = sum(f.result() for f in futures)
        except NumericalError as e:
            LOGGER.error("epoch %d diverged on sample %s: %s", epoch, e.sample, e)
            _diverged(
                "training diverged in epoch {}: {}".format(epoch, e),
                last_good,
                config,
                graph,
                e,
            )
        mean_loss = total / n_samples
        if not math.isfinite(mean_loss):
            LOGGER.error("epoch %d mean loss is %s", epoch, mean_loss)
            _diverged(
                "non-finite mean loss in epoch {}".format(epoch),
                last_good,
                config,
                graph,
            )
        loss_trace.append(mean_loss)
        LOGGER.info(
            "epoch %d/%d mean loss %.6f (%.1fs)",
            epoch,
            config.epochs,
            mean_loss,
            time.monotonic() - start,
        )
        last_good = Checkpoint(
            store.copy(), metrics.copy(), epoch, list(loss_trace), digest, config.seed
        )
        if on_epoch_end is not None:
            on_epoch_end(epoch, store, metrics, mean_loss)
    return TrainResult(store, metrics, loss_trace)


def fit(graph, config, on_epoch_end=None):
    # type: (..., TrainConfig, Optional[Callable]) -> TrainResult
    """Pretrain, rescale by config.rescale, then train"""
    pretrained = pretrain_line(graph, config)
    init = rescale_embeddings(pretrained, config.rescale)
    return train_heer(graph, init, config, on_epoch_end)
