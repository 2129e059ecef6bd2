"""Command-line entry points: train, predict, eval, gensynth."""

from __future__ import annotations

import argparse
import os
import sys

import torch

from . import checkpoint as ckpt
from .config import ConfigError, MissingKeyError, parse_kv_file, train_config_from_mapping
from .graph_store import IdMap, InputError, OrderingError, load_edge_file, write_edge_file
from .inference import (auc, load_query_file, predict_span, read_predictions,
                        write_predictions, write_query_file)
from .synthetic import generate, synth_spec_from_mapping
from .trainer import fit


def _apply_thread_cap():
    cap = os.environ.get("HTGN_THREADS")
    if cap:
        torch.set_num_threads(max(1, int(cap)))


def cmd_train(args) -> int:
    mapping = parse_kv_file(args.config)
    cfg = train_config_from_mapping(
        mapping, overrides={"seed": args.seed, "epochs": args.epochs})
    print(f"config: {cfg}")
    store, node_map, rel_map = load_edge_file(args.edges)
    print(f"loaded {len(store)} links, {store.node_count} nodes, "
          f"{store.relation_count} relations")

    def log(entry):
        line = (f"epoch {entry['epoch']}: mean_loss={entry['mean_loss']:.6f} "
                f"steps={entry['steps']}")
        if "val_auc" in entry:
            line += f" val_auc={entry['val_auc']:.6f}"
        print(line)

    model, state, _history = fit(store, cfg, log=log)
    ckpt.save_checkpoint(args.out, model, state, cfg, store, node_map, rel_map)
    print(f"checkpoint written to {args.out}")
    return 0


def cmd_predict(args) -> int:
    model, state, cfg, store, node_map, rel_map = ckpt.load_checkpoint(args.checkpoint)
    queries = load_query_file(args.queries, node_map, rel_map)
    scores = [predict_span(model, store, state, q,
                           aggregation=cfg.span_aggregation) for q in queries]
    write_predictions(args.out, scores)
    return 0


def cmd_eval(args) -> int:
    scores = read_predictions(args.predictions)
    queries = load_query_file(args.queries)
    if len(scores) != len(queries):
        print(f"error: {len(scores)} predictions but {len(queries)} queries",
              file=sys.stderr)
        return 1
    labels = [q.label for q in queries]
    if any(l is None for l in labels):
        print("error: query file has unlabeled lines", file=sys.stderr)
        return 1
    print(f"{auc(scores, labels):.6f}")
    return 0


def cmd_gensynth(args) -> int:
    mapping = parse_kv_file(args.config)
    spec = synth_spec_from_mapping(mapping)
    if args.seed is not None:
        spec.seed = args.seed
    links, queries = generate(spec)
    os.makedirs(args.out, exist_ok=True)
    edges_path = os.path.join(args.out, "edges.csv")
    queries_path = os.path.join(args.out, "queries.csv")
    write_edge_file(edges_path, links)
    write_query_file(queries_path, queries)
    print(f"wrote {len(links)} links to {edges_path} and "
          f"{len(queries)} queries to {queries_path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="htgn",
        description="Temporal heterogeneous link prediction: train, predict "
                    "over time spans, evaluate AUC, generate synthetic data.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a model and keep the best epoch")
    p.add_argument("--config", required=True, help="key = value config file")
    p.add_argument("--edges", required=True, help="edge CSV file")
    p.add_argument("--out", required=True, help="output checkpoint path")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--epochs", type=int, default=None)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="score span queries with a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--queries", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("eval", help="AUC of a prediction file against labels")
    p.add_argument("--predictions", required=True)
    p.add_argument("--queries", required=True, help="labeled query file")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("gensynth", help="generate a synthetic dataset")
    p.add_argument("--config", required=True, help="synthetic spec config file")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_gensynth)
    return parser


def main(argv=None) -> int:
    _apply_thread_cap()
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except MissingKeyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ConfigError, InputError, OrderingError,
            ckpt.CheckpointError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
