"""
cli.py

The heer command: one subcommand per pipeline stage.

    heer synth            generate a synthetic HIN
    heer knockout         split edges into retained and removed sets
    heer pretrain         LINE-style pretraining
    heer train            HEER training, writes a checkpoint directory
    heer eval             edge reconstruction MRR of one scorer
    heer sweep            MRR against the knock-out rate
    heer analyze-jaccard  CDF of generalized Jaccard coefficients
    heer analyze-metrics  standardized metric heat map and similarities
    heer analyze-pairs    per edge type probabilities of node pairs
    heer export-metapath  meta-path neighbourhoods with embeddings

Exit status is 0 on success, 2 on invalid input and 1 on any other
failure, which is reported as one line "heer: <module>: <message>".
Every successful run writes a run.json provenance record next to its
outputs.
"""

import argparse
import json
import logging
import logging.handlers
import os
import platform
import sys
from dataclasses import replace
from datetime import datetime, timezone

import numpy as np
import scipy
import sklearn

from . import __version__
from .analysis import (
    edge_probabilities,
    export_heatmap,
    export_metapath_csv,
    jaccard_cdf,
    metapath_neighbors,
    metric_similarity,
    save_cdf,
    save_edge_probabilities,
)
from .config import config_hash, load_config
from .errors import GraphFormatError, HeerError, ValidationError
from .evalbench import (
    SCORER_NAMES,
    HeerScorer,
    PretrainedScorer,
    RandomScorer,
    SyntheticSpec,
    evaluate,
    generate_instances,
    generate_synthetic_hin,
    kappa_sweep,
    save_report,
    save_sweep,
    train_logit_baseline,
    unimetrics_scorer,
)
from .hin import (
    load_edge_list,
    load_graph,
    load_schema,
    knockout,
    save_graph,
    save_knockout,
    save_schema,
    with_edges,
)
from .model import (
    MetricStore,
    load_embeddings,
    load_metrics,
    rescale_embeddings,
    save_embeddings,
)
from .trainer import (
    Checkpoint,
    fit,
    load_checkpoint,
    pretrain_line,
    save_checkpoint,
    train_heer,
)

LOGGER = logging.getLogger("heer.cli")

DEBUG_ENV = "HEER_DEBUG"
LOG_FORMAT = "%(name)s: [%(levelname)s] %(message)s"
RUN_FILE = "run.json"

# subcommands whose --out is a file rather than a directory
FILE_OUTPUTS = (
    "pretrain",
    "eval",
    "sweep",
    "analyze-jaccard",
    "analyze-pairs",
    "export-metapath",
)

# command line dest -> TrainConfig field
CONFIG_FLAGS = {
    "dim": "d_v",
    "neg": "k",
    "lr": "lr",
    "rescale": "rescale",
    "batch": "batch_size",
    "epochs": "epochs",
    "samples_per_epoch": "samples_per_epoch",
    "seed": "seed",
    "workers": "workers",
    "freeze_metrics": "freeze_metrics",
    "alpha": "noise_alpha",
    "pretrain_epochs": "pretrain_epochs",
    "pretrain_lr": "pretrain_lr",
    "pretrain_min_lr": "pretrain_min_lr",
    "dtype": "dtype",
    "checkpoint_dir": "checkpoint_dir",
    "logit_l2": "logit_l2",
    "grad_clip": "grad_clip",
}


def setup_logging(verbose=False):
    """stderr always, syslog when /dev/log exists; DEBUG via HEER_DEBUG"""
    logger = logging.getLogger("heer")
    for handler in [h for h in logger.handlers if getattr(h, "_heer_cli", False)]:
        logger.removeHandler(handler)
        handler.close()
    formatter = logging.Formatter(LOG_FORMAT)
    handlers = [logging.StreamHandler(sys.stderr)]  # type: list
    if os.path.exists("/dev/log"):
        handlers.append(
            logging.handlers.SysLogHandler(
                address="/dev/log", facility=logging.handlers.SysLogHandler.LOG_USER
            )
        )
    for handler in handlers:
        handler.setFormatter(formatter)
        handler._heer_cli = True  # pylint: disable=protected-access
        logger.addHandler(handler)
    debug = verbose or bool(os.getenv(DEBUG_ENV))
    logger.setLevel(logging.DEBUG if debug else logging.INFO)


def _config(args):
    """defaults <- --config FILE <- explicit flags"""
    overrides = {
        field: getattr(args, dest)
        for dest, field in CONFIG_FLAGS.items()
        if getattr(args, dest, None) is not None
    }
    return load_config(args.config, overrides)


def _graph(args, edges=None):
    schema = load_schema(args.schema)
    return load_graph(schema, args.nodes, edges or args.edges)


def _output_dir(path):
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    return directory


def write_run_record(directory, args, config=None, digest=None, seed=None):
    """
    run.json: command, flags, seed, config hash, versions, timestamp.
    [seed] is the effective seed of commands that take no training config.
    """
    if seed is None and config is not None:
        seed = config.seed
    flags = {
        k: v for k, v in sorted(vars(args).items()) if k != "func" and not callable(v)
    }
    record = {
        "command": args.command,
        "flags": flags,
        "seed": seed,
        "config_hash": digest or (config_hash(config) if config is not None else None),
        "versions": {
            "heer": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "scikit-learn": sklearn.__version__,
        },
        "timestamp": datetime.now(timezone.utc).isoformat(),
    }
    os.makedirs(directory, exist_ok=True)
    with open(os.path.join(directory, RUN_FILE), "w", encoding="utf-8") as out:
        json.dump(record, out, indent=2, default=str)
        out.write("\n")


# --------------------------------------------------------------------------
# Subcommands
# --------------------------------------------------------------------------


def _synth_cli(args):
    if args.preset == "duplicated-pair":
        spec = SyntheticSpec.duplicated_pair(users=args.users, items=args.items)
    else:
        spec = SyntheticSpec.two_semantic(
            incompatibility=not args.compatible, users=args.users, items=args.items
        )
    spec = replace(spec, clusters=args.clusters, noise=args.noise)
    seed = args.seed if args.seed is not None else 0
    graph = generate_synthetic_hin(spec, seed)
    os.makedirs(args.out, exist_ok=True)
    save_schema(graph.schema, os.path.join(args.out, "schema.txt"))
    save_graph(
        graph, os.path.join(args.out, "nodes.txt"), os.path.join(args.out, "edges.txt")
    )
    write_run_record(args.out, args, seed=seed)
    print(graph)


def _knockout_cli(args):
    if not 0 < args.kappa < 1:
        raise ValidationError("kappa must be in (0,1)", module="hin-graph")
    seed = args.seed if args.seed is not None else 0
    graph = _graph(args)
    split = knockout(graph, args.kappa, seed)
    paths = save_knockout(split, args.out)
    write_run_record(args.out, args, seed=seed)
    for name in ("retained", "removed"):
        print(paths[name])


def _pretrain_cli(args):
    config = _config(args)
    graph = _graph(args)
    store = pretrain_line(graph, config)
    save_embeddings(store, graph.node_ids, args.out)
    write_run_record(_output_dir(args.out), args, config)
    print(args.out)


def _train_cli(args):
    config = _config(args)
    graph = _graph(args)
    if args.init:
        pretrained = load_embeddings(args.init, graph.node_ids, config.dtype)
        init = rescale_embeddings(pretrained, config.rescale)
        result = train_heer(graph, init, config)
    else:
        result = fit(graph, config)
    checkpoint = Checkpoint(
        result.embeddings,
        result.metrics,
        len(result.loss_trace),
        result.loss_trace,
        config_hash(config),
        config.seed,
    )
    save_checkpoint(checkpoint, args.out, graph)
    write_run_record(args.out, args, config)
    print(args.out)


def _retained(full, removed):
    """[full] minus the [removed] edges"""
    def canonical(u, v, r):
        if full.schema.directed[r]:
            return (u, v, r)
        return (min(u, v), max(u, v), r)

    gone = {canonical(e.u, e.v, e.edge_type) for e in removed}
    return with_edges(
        full, [rec for rec in full.edge_records() if canonical(*rec[:3]) not in gone]
    )


def _eval_cli(args):
    config = _config(args)
    graph = _graph(args)
    removed = load_edge_list(graph, args.removed)
    digest = config_hash(config)
    if args.scorer in ("heer", "unimetrics"):
        if not args.checkpoint:
            raise ValidationError(
                "--checkpoint is required for scorer '{}'".format(args.scorer),
                module="cli",
            )
        checkpoint = load_checkpoint(args.checkpoint, graph, config.dtype)
        digest = checkpoint.config_hash
        if args.scorer == "unimetrics":
            scorer = unimetrics_scorer(checkpoint.embeddings, graph.schema)
        elif config.freeze_metrics:
            store = checkpoint.embeddings
            ones = MetricStore.ones(
                graph.num_edge_types, store.d_h, store.vectors.dtype
            )
            scorer = HeerScorer(checkpoint.embeddings, ones, graph.schema)
        else:
            scorer = HeerScorer(checkpoint.embeddings, checkpoint.metrics, graph.schema)
    elif args.scorer in ("pretrained", "logit"):
        if not args.embeddings:
            raise ValidationError(
                "--embeddings is required for scorer '{}'".format(args.scorer),
                module="cli",
            )
        pretrained = load_embeddings(args.embeddings, graph.node_ids, config.dtype)
        if args.scorer == "pretrained":
            scorer = PretrainedScorer(pretrained)
        else:
            scorer = train_logit_baseline(pretrained, _retained(graph, removed), config)
    else:
        scorer = RandomScorer(config.seed)
    instances = generate_instances(graph, removed, config.seed)
    names = [e.name for e in graph.schema.edge_types]
    report = evaluate(scorer, instances, names, digest)
    save_report(report, args.out, args.ranks)
    write_run_record(_output_dir(args.out), args, config, digest)
    print(json.dumps(report.to_dict()))


def _sweep_cli(args):
    config = _config(args)
    kappas = _floats(args.kappas)
    for kappa in kappas:
        if not 0 < kappa < 1:
            raise ValidationError("kappa must be in (0,1)", module="hin-graph")
    scorers = [s for s in args.scorers.split(",") if s]
    graph = _graph(args)
    results = kappa_sweep(graph, kappas, config, scorers)
    save_sweep(results, args.out)
    write_run_record(_output_dir(args.out), args, config)
    print(args.out)


def _floats(text):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ValidationError(
            "expected comma separated numbers, got '{}'".format(text), module="cli"
        ) from None


def _jaccard_cli(args):
    graph = _graph(args)
    schema = graph.schema
    r1, r2 = schema.edge_type_id(args.r1), schema.edge_type_id(args.r2)
    hub = schema.node_type_id(args.hub) if args.hub else None
    grid = _floats(args.grid) if args.grid else None
    if grid is None:
        table = jaccard_cdf(graph, r1, r2, hub_type=hub, reverse=args.reverse)
    else:
        table = jaccard_cdf(graph, r1, r2, grid, hub, args.reverse)
    save_cdf(table, args.out)
    write_run_record(_output_dir(args.out), args)
    print(args.out)


def _metrics_cli(args):
    schema = load_schema(args.schema)
    names = [e.name for e in schema.edge_types]
    metrics = load_metrics(os.path.join(args.checkpoint, "metrics.txt"), names)
    os.makedirs(args.out, exist_ok=True)
    export_heatmap(metrics, names, os.path.join(args.out, "heatmap.csv"))
    with open(os.path.join(args.out, "similarity.csv"), "w", encoding="utf-8") as out:
        out.write("edge_type," + ",".join(names) + "\n")
        for r1, name in enumerate(names):
            row = [repr(metric_similarity(metrics, r1, r2)) for r2 in range(len(names))]
            out.write(name + "," + ",".join(row) + "\n")
    write_run_record(args.out, args)
    print(args.out)


def _read_pairs(path, graph):
    """'u<TAB>v' lines of node ids; blank lines are skipped"""
    pairs = []
    with open(path, encoding="utf-8") as pairs_file:
        for lineno, line in enumerate(pairs_file, 1):
            if not line.strip():
                continue
            fields = line.rstrip("\n").split("\t")
            if len(fields) != 2:
                raise GraphFormatError(
                    "expected 'u<TAB>v', got {} field(s)".format(len(fields)),
                    path,
                    lineno,
                )
            pairs.append((graph.node_index(fields[0]), graph.node_index(fields[1])))
    return pairs


def _pairs_cli(args):
    config = _config(args)
    graph = _graph(args)
    checkpoint = load_checkpoint(args.checkpoint, graph, config.dtype)
    pairs = _read_pairs(args.pairs, graph)
    rows = edge_probabilities(graph, checkpoint.embeddings, checkpoint.metrics, pairs)
    save_edge_probabilities(rows, graph, args.out)
    write_run_record(_output_dir(args.out), args, config, checkpoint.config_hash)
    print(args.out)


def _metapath_cli(args):
    config = _config(args)
    graph = _graph(args)
    if args.checkpoint:
        store = load_checkpoint(args.checkpoint, graph, config.dtype).embeddings
    elif args.embeddings:
        store = load_embeddings(args.embeddings, graph.node_ids, config.dtype)
    else:
        raise ValidationError("--checkpoint or --embeddings is required", module="cli")
    anchor = graph.node_index(args.anchor)
    groups = []
    for path in args.metapath:
        steps = [graph.schema.edge_type_id(name) for name in path.split(",") if name]
        groups.append(
            metapath_neighbors(graph, anchor, steps, args.max_nodes, config.seed)
        )
    export_metapath_csv(args.out, groups, store, graph)
    write_run_record(_output_dir(args.out), args, config)
    print(args.out)


# --------------------------------------------------------------------------
# Parser
# --------------------------------------------------------------------------


def _add_graph_args(parser):
    parser.add_argument("--schema", required=True, help="schema file")
    parser.add_argument("--nodes", required=True, help="node file")
    parser.add_argument("--edges", required=True, help="edge file")


def _add_config_args(parser):
    group = parser.add_argument_group("training configuration")
    group.add_argument("--config", help="key=value config file")
    group.add_argument("--seed", type=int, help="random seed (default 0)")
    group.add_argument("--dim", type=int, help="even embedding dimension (default 256)")
    group.add_argument("--neg", type=int, help="negatives per side K (default 5)")
    group.add_argument("--lr", type=float, help="HEER learning rate (default 10)")
    group.add_argument(
        "--rescale", type=float, help="pretrain rescale factor (default 0.1)"
    )
    group.add_argument("--batch", type=int, help="mini-batch size B (default 50)")
    group.add_argument("--epochs", type=int, help="HEER epochs (default 10)")
    group.add_argument("--samples-per-epoch", type=int, help="default: number of edges")
    group.add_argument("--workers", type=int, help="asynchronous training threads")
    group.add_argument(
        "--freeze-metrics",
        action="store_const",
        const=True,
        default=None,
        help="keep every metric at all ones (UniMetrics)",
    )
    group.add_argument(
        "--alpha", type=float, help="negative noise exponent (default 0.75)"
    )
    group.add_argument("--pretrain-epochs", type=int)
    group.add_argument("--pretrain-lr", type=float)
    group.add_argument("--pretrain-min-lr", type=float)
    group.add_argument("--dtype", choices=("float64", "float32"))
    group.add_argument(
        "--checkpoint-dir", help="where to save the last good epoch on divergence"
    )
    group.add_argument("--logit-l2", type=float)
    group.add_argument(
        "--grad-clip", type=float, help="per-row gradient norm bound (default 1)"
    )


def build_parser():
    parser = argparse.ArgumentParser(
        prog="heer",
        description="Heterogeneous network embedding via edge representations",
    )
    parser.add_argument(
        "--version", action="version", version="%(prog)s " + __version__
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    subparsers = parser.add_subparsers(dest="command", required=True)

    synth = subparsers.add_parser("synth", help="generate a synthetic HIN")
    synth.add_argument(
        "--preset", choices=("two-semantic", "duplicated-pair"), default="two-semantic"
    )
    synth.add_argument(
        "--compatible",
        action="store_true",
        help="draw every edge type from one clustering",
    )
    synth.add_argument("--users", type=int, default=900)
    synth.add_argument("--items", type=int, default=100)
    synth.add_argument("--clusters", type=int, default=20)
    synth.add_argument("--noise", type=float, default=0.05)
    synth.add_argument("--seed", type=int, help="random seed (default 0)")
    synth.add_argument("--out", required=True, help="output directory")
    synth.set_defaults(func=_synth_cli)

    knock = subparsers.add_parser("knockout", help="knock out a fraction of the edges")
    _add_graph_args(knock)
    knock.add_argument("--kappa", type=float, required=True, help="fraction in (0,1)")
    knock.add_argument("--seed", type=int, help="random seed (default 0)")
    knock.add_argument("--out", required=True, help="output directory")
    knock.set_defaults(func=_knockout_cli)

    pretrain = subparsers.add_parser("pretrain", help="LINE-style pretraining")
    _add_graph_args(pretrain)
    _add_config_args(pretrain)
    pretrain.add_argument("--out", required=True, help="embedding file")
    pretrain.set_defaults(func=_pretrain_cli)

    train = subparsers.add_parser("train", help="train embeddings and metrics")
    _add_graph_args(train)
    _add_config_args(train)
    train.add_argument("--init", help="pretrained embedding file (pretrains if absent)")
    train.add_argument("--out", required=True, help="checkpoint directory")
    train.set_defaults(func=_train_cli)

    evaluate_ = subparsers.add_parser("eval", help="edge reconstruction MRR")
    _add_graph_args(evaluate_)
    _add_config_args(evaluate_)
    evaluate_.add_argument("--removed", required=True, help="removed edge file")
    evaluate_.add_argument("--scorer", choices=SCORER_NAMES, default="heer")
    evaluate_.add_argument(
        "--checkpoint", help="checkpoint directory (heer, unimetrics)"
    )
    evaluate_.add_argument(
        "--embeddings", help="pretrained embeddings (pretrained, logit)"
    )
    evaluate_.add_argument("--ranks", help="optional CSV of raw reciprocal ranks")
    evaluate_.add_argument("--out", required=True, help="report JSON file")
    evaluate_.set_defaults(func=_eval_cli)

    sweep = subparsers.add_parser("sweep", help="MRR for several knock-out rates")
    _add_graph_args(sweep)
    _add_config_args(sweep)
    sweep.add_argument("--kappas", default="0.1,0.2,0.3,0.4,0.5")
    sweep.add_argument("--scorers", default="heer,pretrained")
    sweep.add_argument("--out", required=True, help="CSV file")
    sweep.set_defaults(func=_sweep_cli)

    jaccard = subparsers.add_parser("analyze-jaccard", help="Jaccard coefficient CDF")
    _add_graph_args(jaccard)
    jaccard.add_argument("--r1", required=True)
    jaccard.add_argument("--r2", required=True)
    jaccard.add_argument("--hub", help="hub node type (default: shared endpoint type)")
    jaccard.add_argument(
        "--reverse", action="store_true", help="hub on the target side"
    )
    jaccard.add_argument("--grid", help="comma separated thresholds")
    jaccard.add_argument("--out", required=True, help="CSV file")
    jaccard.set_defaults(func=_jaccard_cli)

    metrics = subparsers.add_parser("analyze-metrics", help="metric heat map")
    metrics.add_argument("--schema", required=True)
    metrics.add_argument("--checkpoint", required=True)
    metrics.add_argument("--out", required=True, help="output directory")
    metrics.set_defaults(func=_metrics_cli)

    pairs = subparsers.add_parser(
        "analyze-pairs", help="edge probabilities of node pairs"
    )
    _add_graph_args(pairs)
    _add_config_args(pairs)
    pairs.add_argument("--checkpoint", required=True)
    pairs.add_argument("--pairs", required=True, help="file of 'u<TAB>v' lines")
    pairs.add_argument("--out", required=True, help="CSV file")
    pairs.set_defaults(func=_pairs_cli)

    metapath = subparsers.add_parser("export-metapath", help="meta-path neighbours")
    _add_graph_args(metapath)
    _add_config_args(metapath)
    metapath.add_argument("--checkpoint")
    metapath.add_argument("--embeddings")
    metapath.add_argument("--anchor", required=True, help="anchor node id")
    metapath.add_argument(
        "--metapath",
        action="append",
        required=True,
        help="comma separated edge types; repeat for several groups",
    )
    metapath.add_argument("--max-nodes", type=int, default=None)
    metapath.add_argument("--out", required=True, help="CSV file")
    metapath.set_defaults(func=_metapath_cli)
    return parser


def main(argv=None):
    """Run one subcommand; returns the exit status"""
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(args.verbose)
    try:
        if args.command in FILE_OUTPUTS:
            _output_dir(args.out)
        args.func(args)
    except HeerError as exn:
        LOGGER.debug("%s failed", args.command, exc_info=True)
        print("heer: {}: {}".format(exn.module, exn), file=sys.stderr)
        return 2 if isinstance(exn, ValidationError) else 1
    except OSError as exn:
        LOGGER.debug("%s failed", args.command, exc_info=True)
        print("heer: io: {}".format(exn), file=sys.stderr)
        return 1
    return 0


def _main():  # pragma: no cover
    exit_code = main()
    logging.shutdown()
    if exit_code:
        sys.exit(exit_code)


if __name__ == "__main__":
    _main()
