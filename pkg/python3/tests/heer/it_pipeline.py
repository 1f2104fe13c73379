"""
End to end checks of the heer pipeline on synthetic HINs

1.  `it_ranks_heer_above_the_baselines`:

    On the incompatible two-semantic HIN with 40% of the edges knocked
    out, HEER beats Pretrained+Logit, which is at least as good as the
    raw pretrained embeddings, and HEER beats UniMetrics by 0.03 micro MRR.

2.  `it_tells_duplicated_edge_types_apart`:

    The standardized metrics of two edge types generated from the same
    clustering are more similar than those of two unrelated edge types.

3.  `it_reduces_the_loss_every_epoch`:

    The mean epoch loss goes down over the first five epochs.

4.  `it_is_byte_identical_per_seed`:

    synth, knockout, train and eval run twice through the command line
    produce identical artifacts.

5.  `it_sweeps_the_knockout_rate`:

    kappa_sweep reports one micro MRR per scorer and rate.

These tests train real models and take minutes, not seconds.
"""

import filecmp
import os

import pytest

from python3.packages.heer.analysis import metric_similarity
from python3.packages.heer.evalbench import (
    SyntheticSpec,
    build_scorers,
    evaluate,
    generate_instances,
    generate_synthetic_hin,
    kappa_sweep,
)
from python3.packages.heer.hin import knockout
from python3.packages.heer.trainer import fit

from . import KAPPA, SEEDS, TABLE_CONFIG, call_heer

SCORERS = ("heer", "unimetrics", "pretrained", "logit")


@pytest.mark.parametrize("seed", SEEDS)
def it_ranks_heer_above_the_baselines(seed):
    """micro MRR ordering on the incompatible two-semantic HIN"""
    graph = generate_synthetic_hin(SyntheticSpec.two_semantic(), seed)
    split = knockout(graph, KAPPA, seed)
    instances = generate_instances(graph, split.removed, seed)
    config = TABLE_CONFIG.updated(seed=seed)
    names = [e.name for e in graph.schema.edge_types]
    mrr = {
        name: evaluate(scorer, instances, names).micro
        for name, scorer in build_scorers(SCORERS, split.retained, config).items()
    }
    assert mrr["heer"] > mrr["logit"] >= mrr["pretrained"], mrr
    assert mrr["heer"] >= mrr["unimetrics"] + 0.03, mrr


@pytest.mark.parametrize("seed", SEEDS)
def it_tells_duplicated_edge_types_apart(seed):
    """metric similarity of a compatible pair against an incompatible one"""
    graph = generate_synthetic_hin(SyntheticSpec.duplicated_pair(), seed)
    result = fit(graph, TABLE_CONFIG.updated(seed=seed))
    r1, r2, r3 = (graph.schema.edge_type_id(name) for name in ("r1", "r2", "r3"))
    compatible = metric_similarity(result.metrics, r1, r2)
    incompatible = metric_similarity(result.metrics, r1, r3)
    assert compatible > incompatible, (compatible, incompatible)


@pytest.mark.parametrize("seed", SEEDS)
def it_reduces_the_loss_every_epoch(seed):
    """strictly decreasing mean loss over five epochs"""
    graph = generate_synthetic_hin(SyntheticSpec.two_semantic(), seed)
    trace = fit(graph, TABLE_CONFIG.updated(seed=seed)).loss_trace
    assert len(trace) == 5
    assert all(later < earlier for earlier, later in zip(trace, trace[1:])), trace


def _pipeline(out):
    graph_dir = os.path.join(out, "synth")
    split_dir = os.path.join(out, "split")
    graph_args = [
        "--schema", os.path.join(graph_dir, "schema.txt"),
        "--nodes", os.path.join(graph_dir, "nodes.txt"),
    ]  # fmt: skip
    full_edges = ["--edges", os.path.join(graph_dir, "edges.txt")]
    call_heer(
        "synth", "--users", "120", "--items", "30", "--clusters", "5",
        "--seed", "7", "--out", graph_dir,
    )  # fmt: skip
    call_heer(
        "knockout", *graph_args, *full_edges,
        "--kappa", "0.4", "--seed", "7", "--out", split_dir,
    )  # fmt: skip
    call_heer(
        "train", *graph_args, "--edges", os.path.join(split_dir, "retained.edges"),
        "--dim", "16", "--epochs", "2", "--pretrain-epochs", "2", "--seed", "7",
        "--out", os.path.join(out, "ckpt"),
    )  # fmt: skip
    call_heer(
        "eval", *graph_args, *full_edges,
        "--removed", os.path.join(split_dir, "removed.edges"), "--seed", "7",
        "--checkpoint", os.path.join(out, "ckpt"),
        "--ranks", os.path.join(out, "ranks.csv"),
        "--out", os.path.join(out, "report.json"),
    )  # fmt: skip


ARTIFACTS = (
    "synth/nodes.txt",
    "synth/edges.txt",
    "split/retained.edges",
    "split/removed.edges",
    "split/knockout.json",
    "ckpt/embeddings.txt",
    "ckpt/metrics.txt",
    "ckpt/state.json",
    "report.json",
    "ranks.csv",
)


def it_is_byte_identical_per_seed(tmp_path):
    """two single-threaded runs of the whole pipeline"""
    first, second = tmp_path / "first", tmp_path / "second"
    _pipeline(str(first))
    _pipeline(str(second))
    for name in ARTIFACTS:
        assert filecmp.cmp(first / name, second / name, shallow=False), name


def it_sweeps_the_knockout_rate():
    """one micro MRR per (kappa, scorer)"""
    spec = SyntheticSpec.two_semantic(users=120, items=30)
    graph = generate_synthetic_hin(spec, 3)
    config = TABLE_CONFIG.updated(d_v=16, epochs=1, pretrain_epochs=1, seed=3)
    results = kappa_sweep(graph, [0.2, 0.4], config, ["pretrained", "random"])
    assert list(results) == [0.2, 0.4]
    for row in results.values():
        assert list(row) == ["pretrained", "random"]
        assert all(0 < mrr <= 1 for mrr in row.values())
