"""Staged command-line driver: gad partition | augment | train | report.

Each stage reads the previous stage's JSON artifact and writes its own, so
stages can be rerun and inspected independently.  All randomness flows from
--seed through fixed per-stage stream derivation; rerunning a stage with
identical inputs writes byte-identical files.  Exit codes: 0 ok, 1 user
error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import rngs
from .augment import AugmentedSubgraph, augment_partitions
from .config import Config
from .errors import GadError, NumericalError
from .graph import Graph, induce_subgraph, load_dataset
from .partition import (
    Partitioning,
    balance_cap,
    load_partitioning,
    partition_graph,
    save_partitioning,
)
from .training import train


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.exit(1, f"{self.prog}: error: {message}\n")


def _write_json(path, payload: dict) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")


def _find_dataset(cfg: Config) -> tuple[str, str]:
    """Resolve (edge_path, feature_path) from explicit paths or a directory."""
    if cfg.edges and cfg.features:
        return cfg.edges, cfg.features
    if not cfg.data_dir:
        raise GadError("provide a data directory or --edges/--features paths")
    d = Path(cfg.data_dir)
    contents = sorted(d.glob("*.content"))
    cites = sorted(d.glob("*.cites"))
    if contents and cites:
        return str(cites[0]), str(contents[0])
    edges = d / "edges.txt"
    feats = d / "features.txt"
    if edges.exists() and feats.exists():
        return str(edges), str(feats)
    raise GadError(f"no dataset found in {d} (need *.content/*.cites or edges.txt/features.txt)")


def _load_graph(cfg: Config) -> Graph:
    edge_path, feature_path = _find_dataset(cfg)
    split_seed = int(rngs.stream(cfg.seed, rngs.SPLIT).integers(2**31))
    return load_dataset(edge_path, feature_path, cfg.split, split_seed)


def _config_from_args(args) -> Config:
    overrides = {
        k: v for k, v in vars(args).items()
        if k in Config.__dataclass_fields__ and v is not None
    }
    if getattr(args, "data", None):
        overrides["data_dir"] = args.data
    file_dict = None
    if getattr(args, "config", None):
        with open(args.config, "r", encoding="utf-8") as fh:
            file_dict = json.load(fh)
    return Config.from_sources(file_dict, overrides)


def _add_common(p: argparse.ArgumentParser, with_data: bool = True):
    if with_data:
        p.add_argument("data", nargs="?", help="dataset directory")
    p.add_argument("--config", help="JSON config file (flags override it)")
    p.add_argument("--edges", help="edge-list file")
    p.add_argument("--features", help="feature file")
    p.add_argument("--seed", type=int)
    p.add_argument("--split", nargs=3, type=float, metavar=("TRAIN", "VAL", "TEST"))


def cmd_partition(args) -> int:
    cfg = _config_from_args(args)
    g = _load_graph(cfg)
    k = cfg.effective_k(g.num_nodes)
    part = partition_graph(
        g, k, epsilon=cfg.epsilon, restarts=cfg.restarts,
        seed=cfg.seed, target_fraction=cfg.target_fraction,
    )
    out = Path(args.out)
    save_partitioning(part, out)
    if g.node_names is not None:
        _write_json(out.with_suffix(".node_ids.json"), {"node_ids": list(g.node_names)})
    sizes = part.part_sizes()
    cap = balance_cap(g.num_nodes, k, cfg.epsilon)
    summary = {
        "k": k,
        "edge_cut": part.edge_cut,
        "restarts_used": part.restarts_used,
        "max_part_size": int(sizes.max()),
        "balance_cap": cap,
        "part_sizes": sizes.tolist(),
    }
    print(json.dumps(summary, sort_keys=True))
    return 0


def cmd_augment(args) -> int:
    cfg = _config_from_args(args)
    g = _load_graph(cfg)
    part = load_partitioning(args.partition)
    if len(part.assignment) != g.num_nodes:
        raise GadError("partition file does not match the dataset")
    records = augment_partitions(
        g, part, layers=cfg.layers, alpha=cfg.alpha, seed=cfg.seed,
        z_c=cfg.z_c, err_target=cfg.err_target, mode=cfg.importance_mode,
        enabled=cfg.augment,
    )
    payload = {
        "k": part.k,
        "epsilon": part.epsilon,
        "assignment": part.assignment.tolist(),
        "layers": cfg.layers,
        "alpha": cfg.alpha,
        "seed": cfg.seed,
        "importance_mode": cfg.importance_mode,
        "augment_enabled": cfg.augment,
        "partitions": [
            {
                "part": rec.part,
                "nodes": rec.subgraph.view.local_ids.tolist(),
                "owned": rec.subgraph.view.owned.astype(int).tolist(),
                "edges": rec.subgraph.view.edge_list_global().tolist(),
                "replicas": sorted(rec.subgraph.replica_sources),
                "replica_sources": {
                    str(k_): v for k_, v in sorted(rec.subgraph.replica_sources.items())
                },
                "budget": rec.subgraph.budget,
                "shortfall": rec.subgraph.shortfall,
                "walks": rec.walks_total,
                "importance": {
                    str(c): float(v)
                    for c, v in zip(rec.table.candidates, rec.table.importance)
                },
            }
            for rec in records
        ],
    }
    _write_json(args.out, payload)
    total = sum(len(e["replicas"]) for e in payload["partitions"])
    print(json.dumps({"k": part.k, "total_replicas": total, "alpha": cfg.alpha}, sort_keys=True))
    return 0


def _rebuild_augmented(g: Graph, payload: dict) -> tuple[Partitioning, list[AugmentedSubgraph]]:
    assignment = np.asarray(payload["assignment"], dtype=np.int64)
    part = Partitioning(
        assignment=assignment,
        k=int(payload["k"]),
        epsilon=float(payload["epsilon"]),
        edge_cut=0,
        restarts_used=0,
    )
    augmented = []
    for entry in payload["partitions"]:
        nodes = np.asarray(entry["nodes"], dtype=np.int64)
        owned_flags = np.asarray(entry["owned"], dtype=bool)
        view = induce_subgraph(g, nodes, nodes[owned_flags])
        if view.num_edges != len(entry["edges"]):
            raise GadError(
                f"augmented file does not match dataset (part {entry['part']} edges)"
            )
        augmented.append(
            AugmentedSubgraph(
                part=int(entry["part"]),
                view=view,
                replica_sources={int(k_): int(v) for k_, v in entry["replica_sources"].items()},
                budget=int(entry["budget"]),
                shortfall=int(entry.get("shortfall", 0)),
            )
        )
    return part, augmented


def cmd_train(args) -> int:
    cfg = _config_from_args(args)
    g = _load_graph(cfg)
    with open(args.augmented, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    part, augmented = _rebuild_augmented(g, payload)
    try:
        report = train(g, part, augmented, cfg.workers, cfg)
    except NumericalError as exc:
        partial = getattr(exc, "partial_report", None)
        if partial is not None:
            partial.notes.append(f"aborted: {exc}")
            _write_json(args.out, partial.to_json_dict())
        print(f"gad train: numerical failure: {exc}", file=sys.stderr)
        return 2
    _write_json(args.out, report.to_json_dict())
    if args.timing_out:
        _write_json(args.timing_out, {"epoch_seconds": report.epoch_seconds})
    if args.curves:
        with open(args.curves, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["epoch", "train_loss", "val_acc", "test_acc"])
            for e in range(report.epochs_run):
                w.writerow([e, report.train_loss[e], report.val_acc[e], report.test_acc[e]])
    print(
        json.dumps(
            {
                "final_test_acc": report.final_test_acc,
                "final_val_acc": report.final_val_acc,
                "comm_bytes_with": report.comm.bytes_with,
                "comm_bytes_without": report.comm.bytes_without,
            },
            sort_keys=True,
        )
    )
    return 0


def cmd_report(args) -> int:
    rows = []
    for path in args.reports:
        with open(path, "r", encoding="utf-8") as fh:
            rep = json.load(fh)
        comm = rep.get("comm") or {}
        without = comm.get("bytes_without", 0)
        with_ = comm.get("bytes_with", 0)
        rows.append(
            {
                "report": Path(path).stem,
                "weighted": rep["config"].get("weighted"),
                "augment": rep["config"].get("augment"),
                "epochs": rep.get("epochs_run"),
                "final_test_acc": rep.get("final_test_acc"),
                "final_val_acc": rep.get("final_val_acc"),
                "best_val_epoch": rep.get("best_val_epoch"),
                "comm_bytes_with": with_,
                "comm_bytes_without": without,
                "comm_reduction": (1.0 - with_ / without) if without else 0.0,
            }
        )
    cols = list(rows[0].keys())
    widths = {
        c: max(len(c), *(len(_fmt(r[c])) for r in rows)) for c in cols
    }
    print("  ".join(c.ljust(widths[c]) for c in cols))
    for r in rows:
        print("  ".join(_fmt(r[c]).ljust(widths[c]) for c in cols))
    if len(rows) == 2:
        a, b = rows
        diff_keys = {
            k for k in ("weighted", "augment") if a[k] != b[k]
        }
        if diff_keys:
            delta = (b["final_test_acc"] or 0.0) - (a["final_test_acc"] or 0.0)
            print(f"delta(final_test_acc) [{'/'.join(sorted(diff_keys))}]: {delta:+.4f}")
    if args.csv:
        with open(args.csv, "w", encoding="utf-8", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=cols)
            w.writeheader()
            w.writerows(rows)
    return 0


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.4f}"
    return str(v)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="gad", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    pp = sub.add_parser("partition", help="balanced multilevel partitioning")
    _add_common(pp)
    pp.add_argument("--k", type=int)
    pp.add_argument("--epsilon", type=float)
    pp.add_argument("--restarts", type=int)
    pp.add_argument("--target-fraction", dest="target_fraction", type=float)
    pp.add_argument("--target-subgraph-nodes", dest="target_subgraph_nodes", type=int)
    pp.add_argument("--out", default="partition.json")
    pp.set_defaults(func=cmd_partition)

    pa = sub.add_parser("augment", help="replicate important halo nodes")
    _add_common(pa)
    pa.add_argument("--partition", required=True)
    pa.add_argument("--layers", type=int)
    pa.add_argument("--alpha", type=float)
    pa.add_argument("--z-c", dest="z_c", type=float)
    pa.add_argument("--err-target", dest="err_target", type=float)
    pa.add_argument("--importance-mode", dest="importance_mode")
    pa.add_argument("--no-augment", dest="augment", action="store_false", default=None)
    pa.add_argument("--out", default="augmented.json")
    pa.set_defaults(func=cmd_augment)

    pt = sub.add_parser("train", help="simulated multi-worker training")
    _add_common(pt)
    pt.add_argument("--augmented", required=True)
    pt.add_argument("--layers", type=int)
    pt.add_argument("--hidden", type=int)
    pt.add_argument("--eta", type=float)
    pt.add_argument("--epochs", type=int)
    pt.add_argument("--eval-every", dest="eval_every", type=int)
    pt.add_argument("--workers", type=int)
    pt.add_argument("--beta", type=float)
    pt.add_argument("--pair-cap", dest="pair_cap", type=int)
    pt.add_argument("--feature-norm", dest="feature_norm")
    pt.add_argument("--loss-reduction", dest="loss_reduction")
    pt.add_argument("--zeta-distance", dest="zeta_distance")
    pt.add_argument("--consensus")
    wt = pt.add_mutually_exclusive_group()
    wt.add_argument("--weighted", dest="weighted", action="store_true", default=None)
    wt.add_argument("--no-weighted", dest="weighted", action="store_false", default=None)
    pt.add_argument("--out", default="report.json")
    pt.add_argument("--timing-out", dest="timing_out")
    pt.add_argument("--curves", help="per-epoch CSV")
    pt.set_defaults(func=cmd_train)

    pr = sub.add_parser("report", help="tabulate one or more training reports")
    pr.add_argument("reports", nargs="+")
    pr.add_argument("--csv")
    pr.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except GadError as exc:
        print(f"gad: error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"gad: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
