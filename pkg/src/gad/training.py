"""Simulated synchronous multi-worker training with gradient consensus.

Workers run as deterministic in-process tasks.  Each round every worker
trains on its next assigned subgraph (forward, masked loss over its owned
training nodes, backward); the coordinator folds the gradients into one
update with either zeta weighting or the plain mean, and all workers apply
the same step, so parameter replicas stay bit-identical between barriers.
Communication is accounted analytically: a worker must fetch the features
of every distinct remote node within ``layers`` hops of its boundary once
per epoch, except those it holds as replicas; one feature costs 4 bytes per
dimension.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .augment import AugmentedSubgraph, assign_to_workers, candidate_replication_nodes
from .consensus import plain_consensus, weighted_consensus, zeta
from .errors import GadError, NumericalError
from .gcn import (
    GcnParams,
    Gradients,
    forward,
    init_params,
    loss_and_backward,
    sgd_update,
)
from .graph import (
    Graph,
    NormalizedAdjacency,
    full_view,
    normalized_adjacency,
    row_normalize,
)
from .partition import Partitioning
from . import rngs


@dataclass(frozen=True, eq=False)
class CommMetrics:
    """Per-epoch feature-fetch accounting, with and without replication."""

    feature_dim: int
    per_part_remote: list[int]          # halo size per partition
    per_part_remote_after: list[int]    # halo minus locally replicated nodes
    per_worker_remote: dict[int, int]
    per_worker_remote_after: dict[int, int]

    @property
    def remote_without(self) -> int:
        return int(sum(self.per_part_remote))

    @property
    def remote_with(self) -> int:
        return int(sum(self.per_part_remote_after))

    @property
    def bytes_without(self) -> int:
        return self.remote_without * self.feature_dim * 4

    @property
    def bytes_with(self) -> int:
        return self.remote_with * self.feature_dim * 4

    def to_json_dict(self) -> dict:
        return {
            "feature_dim": self.feature_dim,
            "per_part_remote": list(map(int, self.per_part_remote)),
            "per_part_remote_after": list(map(int, self.per_part_remote_after)),
            "per_worker_remote": {str(k): int(v) for k, v in self.per_worker_remote.items()},
            "per_worker_remote_after": {
                str(k): int(v) for k, v in self.per_worker_remote_after.items()
            },
            "remote_without": self.remote_without,
            "remote_with": self.remote_with,
            "bytes_without": self.bytes_without,
            "bytes_with": self.bytes_with,
        }


@dataclass(eq=False)
class TrainReport:
    """Everything one training run produced, JSON-serializable.

    Wall-clock timings are kept separate from the deterministic payload so
    that identical (seed, config) runs write byte-identical artifacts.
    """

    config: dict
    seed: int
    worker_of: list[int]
    zetas: list[float]
    comm: CommMetrics | None
    train_loss: list[float] = field(default_factory=list)
    val_acc: list[float | None] = field(default_factory=list)
    test_acc: list[float | None] = field(default_factory=list)
    initial_val_acc: float | None = None
    initial_test_acc: float | None = None
    final_val_acc: float | None = None
    final_test_acc: float | None = None
    best_val_epoch: int | None = None
    epochs_run: int = 0
    epoch_seconds: list[float] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    def to_json_dict(self, include_timing: bool = False) -> dict:
        out = {
            "config": self.config,
            "evaluation": "centralized_full_graph",
            "seed": self.seed,
            "worker_of": list(map(int, self.worker_of)),
            "zetas": [float(z) for z in self.zetas],
            "comm": self.comm.to_json_dict() if self.comm else None,
            "train_loss": [float(x) for x in self.train_loss],
            "val_acc": self.val_acc,
            "test_acc": self.test_acc,
            "initial_val_acc": self.initial_val_acc,
            "initial_test_acc": self.initial_test_acc,
            "final_val_acc": self.final_val_acc,
            "final_test_acc": self.final_test_acc,
            "best_val_epoch": self.best_val_epoch,
            "epochs_run": self.epochs_run,
            "notes": self.notes,
        }
        if include_timing:
            out["epoch_seconds"] = self.epoch_seconds
        return out


def evaluate(
    params: GcnParams, g: Graph, mask: np.ndarray, features: np.ndarray | None = None
) -> float:
    """Centralized accuracy: one forward over the whole graph, argmax vs labels.

    ``features`` overrides ``g.features`` so callers can apply the same
    normalization used in training.  Argmax ties resolve to the lowest
    class id.
    """
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        raise GadError("evaluation mask selects no nodes")
    x = g.features if features is None else features
    cache = forward(params, normalized_adjacency(full_view(g)), x)
    pred = cache.probs.argmax(axis=1)
    return float((pred[mask] == g.labels[mask]).mean())


def communication_size(
    g: Graph,
    p: Partitioning,
    augmented: list[AugmentedSubgraph],
    layers: int,
    feature_dim: int | None = None,
    worker_of=None,
) -> CommMetrics:
    """Remote-feature fetch counts per partition, before and after replication."""
    if feature_dim is None:
        feature_dim = g.feature_dim
    per_part, per_part_after = [], []
    for aug in augmented:
        halo = candidate_replication_nodes(g, p, aug.part, layers)
        replicas = aug.view.replica_ids
        per_part.append(len(halo))
        per_part_after.append(len(np.setdiff1d(halo, replicas)))
    if worker_of is None:
        worker_of = list(range(len(augmented)))
    per_worker: dict[int, int] = {}
    per_worker_after: dict[int, int] = {}
    for w, a, b in zip(worker_of, per_part, per_part_after):
        per_worker[int(w)] = per_worker.get(int(w), 0) + a
        per_worker_after[int(w)] = per_worker_after.get(int(w), 0) + b
    return CommMetrics(
        feature_dim=int(feature_dim),
        per_part_remote=per_part,
        per_part_remote_after=per_part_after,
        per_worker_remote=per_worker,
        per_worker_remote_after=per_worker_after,
    )


@dataclass(eq=False)
class _WorkerTask:
    """One subgraph prepared for repeated training steps."""

    part: int
    adj: NormalizedAdjacency
    features: np.ndarray
    labels: np.ndarray
    loss_mask: np.ndarray
    zeta: float
    trainable: bool
    grad_scale: float = 1.0


def _prepare_tasks(g, augmented, features_full, config):
    total_train = int(g.train_mask.sum())
    tasks = []
    for aug in augmented:
        view = aug.view
        x = features_full[view.local_ids]
        mask = view.local_train_mask()
        zw = zeta(
            aug, x, beta=config.beta, pair_cap=config.pair_cap,
            seed=int(rngs.stream(config.seed, rngs.ZETA, aug.part).integers(2**31)),
            distance=config.zeta_distance,
        )
        n_train = int(mask.sum())
        # With "population" scaling each subgraph's summed loss is rescaled to
        # the full training population, so every worker's gradient estimates
        # the same global objective regardless of how many train nodes its
        # subgraph holds (exactly 1.0 for a single whole-graph partition).
        scale = 1.0
        if config.loss_scale == "population" and n_train > 0:
            scale = total_train / n_train
        tasks.append(
            _WorkerTask(
                part=aug.part,
                adj=normalized_adjacency(view),
                features=x,
                labels=view.local_labels(),
                loss_mask=mask,
                zeta=zw.zeta,
                trainable=n_train > 0,
                grad_scale=scale,
            )
        )
    return tasks


def train(
    g: Graph,
    p: Partitioning,
    augmented: list[AugmentedSubgraph],
    workers: int,
    config,
    on_barrier=None,
) -> TrainReport:
    """Run the synchronous training loop and return the report.

    ``config`` is a :class:`gad.config.Config` (or anything with the same
    attributes).  ``on_barrier(epoch, round, params_list)`` is called after
    every consensus update, mainly so tests can check replica consistency.
    """
    if not augmented:
        raise GadError("need at least one augmented subgraph")
    features_full = row_normalize(g.features, config.feature_norm)
    worker_of = assign_to_workers(augmented, workers)
    tasks = _prepare_tasks(g, augmented, features_full, config)
    queues: list[list[int]] = [[] for _ in range(workers)]
    for idx, w in enumerate(worker_of):
        queues[int(w)].append(idx)
    rounds = max((len(q) for q in queues), default=0)

    dims = (g.feature_dim,) + (config.hidden,) * (config.layers - 1) + (g.num_classes,)
    params0 = init_params(dims, seed=config.seed)
    replicas = [params0 for _ in range(workers)]

    comm = communication_size(
        g, p, augmented, config.layers, g.feature_dim, worker_of=worker_of
    )
    report = TrainReport(
        config=dict(config.to_json_dict()) if hasattr(config, "to_json_dict") else dict(vars(config)),
        seed=config.seed,
        worker_of=[int(w) for w in worker_of],
        zetas=[t.zeta for t in tasks],
        comm=comm,
    )
    skipped = sorted(t.part for t in tasks if not t.trainable)
    if skipped:
        report.notes.append(f"subgraphs without owned training nodes: {skipped}")

    report.initial_val_acc = evaluate(replicas[0], g, g.val_mask, features_full)
    report.initial_test_acc = evaluate(replicas[0], g, g.test_mask, features_full)

    def _step(worker: int, task: _WorkerTask) -> Gradients:
        cache = forward(replicas[worker], task.adj, task.features)
        try:
            grad = loss_and_backward(
                cache, replicas[worker], task.adj, task.features,
                task.labels, task.loss_mask, reduction=config.loss_reduction,
            )
        except NumericalError as exc:
            exc.partial_report = report   # flushed by the CLI on exit code 2
            raise
        if task.grad_scale != 1.0:
            grad = grad.scaled(task.grad_scale)
        return grad

    eval_every = max(1, int(getattr(config, "eval_every", 1)))
    for epoch in range(config.epochs):
        t0 = time.perf_counter()
        epoch_losses: list[float] = []
        epoch_grads: list[Gradients] = []
        epoch_zetas: list[float] = []
        for rnd in range(rounds):
            contributions: list[tuple[Gradients, float]] = []
            for w in range(workers):
                if rnd >= len(queues[w]):
                    continue
                task = tasks[queues[w][rnd]]
                if not task.trainable:
                    continue
                grad = _step(w, task)
                contributions.append((grad, task.zeta))
                epoch_losses.append(grad.loss)
            if not contributions:
                continue
            if config.consensus == "per_round":
                combined = _combine(contributions, config.weighted)
                replicas = [sgd_update(r, combined, config.eta) for r in replicas]
                if on_barrier is not None:
                    on_barrier(epoch, rnd, replicas)
            else:
                epoch_grads.extend(gr for gr, _ in contributions)
                epoch_zetas.extend(z for _, z in contributions)
        if config.consensus == "per_epoch" and epoch_grads:
            combined = _combine(list(zip(epoch_grads, epoch_zetas)), config.weighted)
            replicas = [sgd_update(r, combined, config.eta) for r in replicas]
            if on_barrier is not None:
                on_barrier(epoch, rounds - 1, replicas)

        report.train_loss.append(float(np.mean(epoch_losses)) if epoch_losses else float("nan"))
        is_eval = (epoch % eval_every == 0) or (epoch == config.epochs - 1)
        report.val_acc.append(
            evaluate(replicas[0], g, g.val_mask, features_full) if is_eval else None
        )
        report.test_acc.append(
            evaluate(replicas[0], g, g.test_mask, features_full) if is_eval else None
        )
        report.epoch_seconds.append(time.perf_counter() - t0)
        report.epochs_run = epoch + 1

    report.final_val_acc = evaluate(replicas[0], g, g.val_mask, features_full)
    report.final_test_acc = evaluate(replicas[0], g, g.test_mask, features_full)
    evaluated = [(i, v) for i, v in enumerate(report.val_acc) if v is not None]
    if evaluated:
        report.best_val_epoch = int(max(evaluated, key=lambda t: (t[1], -t[0]))[0])
    report._final_params = replicas[0]   # handy for callers; not serialized
    return report


def _combine(contributions: list[tuple[Gradients, float]], weighted: bool) -> Gradients:
    grads = [g for g, _ in contributions]
    if weighted:
        return weighted_consensus(grads, [z for _, z in contributions])
    return plain_consensus(grads)
