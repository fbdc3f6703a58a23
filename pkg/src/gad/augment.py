"""Subgraph augmentation: replicate important remote nodes into each partition.

For every partition the steps are: find boundary nodes, collect candidate
replication nodes (external nodes within ``layers`` hops of the boundary),
score candidates by the fraction of boundary-rooted random walks that visit
them (two-phase Monte-Carlo with a walk count chosen from the error formula
E = z_c * sigma / (mean * sqrt(n))), then copy the best walk prefixes into
the partition up to a density-scaled budget.  Selected replicas always lie
on a walk rooted inside the partition, so none of them dangle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import rngs
from .errors import GadError
from .graph import Graph, SubgraphView, density, induce_subgraph
from .partition import Partitioning

Z_95 = 1.96
DEFAULT_ERR_TARGET = 0.05
DEFAULT_ALPHA = 0.01


@dataclass(frozen=True, eq=False)
class WalkSet:
    """Random walks rooted at boundary nodes.

    ``walks`` holds one row per walk (start node then each step); rows are
    padded with -1 past ``lengths`` when a walk stopped early at a node with
    no neighbors.
    """

    walks: np.ndarray            # (n, steps + 1) int64
    lengths: np.ndarray          # steps taken per walk
    seed: int
    candidates: np.ndarray       # candidate node ids the counts refer to
    visit_counts: np.ndarray     # walks visiting each candidate at least once
    short_walks: int = 0

    @property
    def num_walks(self) -> int:
        return self.walks.shape[0]


@dataclass(frozen=True, eq=False)
class ImportanceTable:
    """Visit importance per candidate plus the Monte-Carlo bookkeeping."""

    candidates: np.ndarray       # sorted global node ids
    importance: np.ndarray       # I(v) aligned with candidates, in [0, 1]
    total_walks: int
    z_c: float
    err_target: float
    sigma_x: float
    x_bar: float
    mode: str = "indicator"

    def as_dict(self) -> dict[int, float]:
        return {int(c): float(v) for c, v in zip(self.candidates, self.importance)}

    def lookup(self) -> dict[int, float]:
        return self.as_dict()


@dataclass(frozen=True, eq=False)
class AugmentedSubgraph:
    """A partition plus its replicated halo nodes."""

    part: int
    view: SubgraphView
    replica_sources: dict[int, int]   # replica global id -> source part
    budget: int
    shortfall: int = 0

    @property
    def num_replicas(self) -> int:
        return int((~self.view.owned).sum())


@dataclass(frozen=True, eq=False)
class AugmentationRecord:
    """Everything the augment stage produced for one partition."""

    part: int
    subgraph: AugmentedSubgraph
    table: ImportanceTable
    walks_total: int


def boundary_nodes(g: Graph, p: Partitioning, i: int) -> np.ndarray:
    """Owned nodes of part ``i`` with at least one neighbor in another part."""
    if not 0 <= i < p.k:
        raise GadError(f"part id {i} out of range")
    assign = p.assignment
    rows = np.repeat(np.arange(g.num_nodes, dtype=np.int64), g.degrees)
    mask = (assign[rows] == i) & (assign[g.targets] != i)
    return np.unique(rows[mask])


def candidate_replication_nodes(
    g: Graph, p: Partitioning, i: int, layers: int
) -> np.ndarray:
    """External nodes within ``layers`` hops of part ``i``'s boundary (BFS)."""
    if layers < 1:
        raise GadError("layers must be >= 1")
    boundary = boundary_nodes(g, p, i)
    if boundary.size == 0:
        return np.zeros(0, dtype=np.int64)
    adj = g.sparse_adjacency
    visited = np.zeros(g.num_nodes, dtype=bool)
    visited[boundary] = True
    frontier = visited.copy()
    for _ in range(layers):
        reached = adj @ frontier
        frontier = reached & ~visited
        if not frontier.any():
            break
        visited |= frontier
    return np.flatnonzero(visited & (p.assignment != i)).astype(np.int64)


def estimate_walk_count(
    importance_sample, z_c: float, err_target: float, provisional_count: int | None = None
) -> int:
    """Walk count n = ceil((z_c * sigma / (mean * err)) ** 2) from a provisional sample.

    ``sigma`` is the sample standard deviation (ddof=1) of the provisional
    importance values.  Zero spread means the sampled support is already
    exact, so the provisional count is kept; a zero mean means no candidate
    was ever visited and 0 is returned so the caller can skip augmentation.
    """
    sample = np.asarray(importance_sample, dtype=np.float64)
    x_bar = float(sample.mean()) if sample.size else 0.0
    if x_bar == 0.0:
        return 0
    sigma = float(sample.std(ddof=1)) if sample.size > 1 else 0.0
    if sigma == 0.0:
        return int(provisional_count) if provisional_count is not None else int(sample.size)
    return int(math.ceil((z_c * sigma / (x_bar * err_target)) ** 2))


def _random_walks(
    g: Graph, starts: np.ndarray, steps: int, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Uniform random walks over ``g``; returns (walks, lengths)."""
    n = len(starts)
    walks = np.full((n, steps + 1), -1, dtype=np.int64)
    walks[:, 0] = starts
    cur = starts.copy()
    lengths = np.zeros(n, dtype=np.int64)
    alive = np.ones(n, dtype=bool)
    for s in range(1, steps + 1):
        deg = g.degrees[cur]
        alive = alive & (deg > 0)
        if not alive.any():
            break
        idx = np.flatnonzero(alive)
        r = rng.integers(0, deg[idx])
        nxt = g.targets[g.offsets[cur[idx]] + r]
        walks[idx, s] = nxt
        cur[idx] = nxt
        lengths[idx] += 1
    return walks, lengths


def _candidate_visits(
    walks: np.ndarray, cand_index: np.ndarray, num_candidates: int, indicator: bool
) -> np.ndarray:
    """Visit counts per candidate; with ``indicator`` each walk counts once."""
    n_walks = walks.shape[0]
    flat = walks.reshape(-1)
    walk_of = np.repeat(np.arange(n_walks, dtype=np.int64), walks.shape[1])
    valid = flat >= 0
    cidx = np.full(flat.shape, -1, dtype=np.int64)
    cidx[valid] = cand_index[flat[valid]]
    hit = cidx >= 0
    if not hit.any():
        return np.zeros(num_candidates, dtype=np.int64)
    keys = walk_of[hit] * num_candidates + cidx[hit]
    if indicator:
        keys = np.unique(keys)
    return np.bincount(keys % num_candidates, minlength=num_candidates)


def node_importance(
    g: Graph,
    sub_i: SubgraphView,
    candidates: np.ndarray,
    layers: int,
    seed: int,
    z_c: float = Z_95,
    err_target: float = DEFAULT_ERR_TARGET,
    mode: str = "indicator",
) -> tuple[ImportanceTable, WalkSet]:
    """Monte-Carlo visit importance for each candidate replication node.

    Phase one runs ``floor(avg boundary degree) * |B|`` walks of ``layers``
    uniform steps from random boundary nodes; the provisional importance
    values fix the total walk count through :func:`estimate_walk_count`, and
    the remaining walks are then drawn from the same stream.  In the default
    indicator mode I(v) is the fraction of walks visiting v at least once.
    """
    if mode not in ("indicator", "multiplicity"):
        raise GadError(f"unknown importance mode {mode!r}")
    candidates = np.unique(np.asarray(candidates, dtype=np.int64))
    owned = sub_i.local_ids[sub_i.owned]
    member = np.zeros(g.num_nodes, dtype=bool)
    member[owned] = True
    rows = np.repeat(np.arange(g.num_nodes, dtype=np.int64), g.degrees)
    cross = member[rows] & ~member[g.targets]
    boundary = np.unique(rows[cross])

    def _empty(n_walks=0):
        table = ImportanceTable(
            candidates=candidates,
            importance=np.zeros(len(candidates)),
            total_walks=n_walks,
            z_c=z_c,
            err_target=err_target,
            sigma_x=0.0,
            x_bar=0.0,
            mode=mode,
        )
        walkset = WalkSet(
            walks=np.zeros((0, layers + 1), dtype=np.int64),
            lengths=np.zeros(0, dtype=np.int64),
            seed=seed,
            candidates=candidates,
            visit_counts=np.zeros(len(candidates), dtype=np.int64),
        )
        return table, walkset

    if boundary.size == 0 or candidates.size == 0:
        return _empty()

    cand_index = np.full(g.num_nodes, -1, dtype=np.int64)
    cand_index[candidates] = np.arange(len(candidates))

    rng = rngs.stream(seed, rngs.AUGMENT)
    d_bar = max(1, int(np.floor(g.degrees[boundary].mean())))
    n_phase1 = d_bar * len(boundary)

    starts = boundary[rng.integers(0, len(boundary), size=n_phase1)]
    walks, lengths = _random_walks(g, starts, layers, rng)
    counts = _candidate_visits(walks, cand_index, len(candidates), indicator=True)

    prov = counts[counts > 0] / n_phase1
    x_bar = float(prov.mean()) if prov.size else 0.0
    sigma_x = float(prov.std(ddof=1)) if prov.size > 1 else 0.0
    n_total = estimate_walk_count(prov, z_c, err_target, provisional_count=n_phase1)
    if n_total == 0:
        table, walkset = _empty(n_phase1)
        walkset = WalkSet(
            walks=walks,
            lengths=lengths,
            seed=seed,
            candidates=candidates,
            visit_counts=np.zeros(len(candidates), dtype=np.int64),
            short_walks=int((lengths < layers).sum()),
        )
        return table, walkset
    if n_total > n_phase1:
        starts2 = boundary[rng.integers(0, len(boundary), size=n_total - n_phase1)]
        walks2, lengths2 = _random_walks(g, starts2, layers, rng)
        walks = np.concatenate([walks, walks2], axis=0)
        lengths = np.concatenate([lengths, lengths2])
    else:
        n_total = n_phase1

    indicator_counts = _candidate_visits(walks, cand_index, len(candidates), indicator=True)
    if mode == "indicator":
        importance = indicator_counts / n_total
    else:
        multiplicity = _candidate_visits(walks, cand_index, len(candidates), indicator=False)
        total = multiplicity.sum()
        importance = multiplicity / total if total > 0 else multiplicity.astype(np.float64)
    importance = np.clip(importance, 0.0, 1.0)

    table = ImportanceTable(
        candidates=candidates,
        importance=importance,
        total_walks=int(n_total),
        z_c=z_c,
        err_target=err_target,
        sigma_x=sigma_x,
        x_bar=x_bar,
        mode=mode,
    )
    walkset = WalkSet(
        walks=walks,
        lengths=lengths,
        seed=seed,
        candidates=candidates,
        visit_counts=indicator_counts,
        short_walks=int((lengths < layers).sum()),
    )
    return table, walkset


def replication_budget(sub_i: SubgraphView, alpha: float = DEFAULT_ALPHA) -> int:
    """ceil(alpha * (1 + density) * |v|); callers cap it at the candidate count."""
    if alpha <= 0:
        raise GadError("alpha must be positive")
    return int(math.ceil(alpha * (1.0 + density(sub_i)) * sub_i.num_nodes))


def depth_first_select(
    table: ImportanceTable, walks: WalkSet, budget: int
) -> np.ndarray:
    """Pick replicas by draining the highest-scoring walks in walk order.

    A walk's score is the sum of I(v) over the distinct candidates it visits;
    ties go to the earlier walk.  Selected nodes are therefore always
    path-connected to the partition through their walk.
    """
    if budget < 0:
        raise GadError("budget must be >= 0")
    if budget == 0 or walks.num_walks == 0:
        return np.zeros(0, dtype=np.int64)
    imp = np.zeros(walks.walks.max() + 2, dtype=np.float64)
    imp_index = np.full(walks.walks.max() + 2, -1, dtype=np.int64)
    for j, c in enumerate(table.candidates):
        if c <= walks.walks.max():
            imp[c] = table.importance[j]
            imp_index[c] = j
    is_cand = imp_index >= 0

    scores = np.zeros(walks.num_walks)
    for w in range(walks.num_walks):
        nodes = walks.walks[w]
        nodes = np.unique(nodes[nodes >= 0])
        scores[w] = imp[nodes[is_cand[nodes]]].sum()

    order = np.lexsort((np.arange(walks.num_walks), -scores))
    selected: list[int] = []
    chosen = set()
    for w in order:
        if len(selected) >= budget:
            break
        for node in walks.walks[w]:
            if node < 0:
                continue
            node = int(node)
            if is_cand[node] and node not in chosen:
                chosen.add(node)
                selected.append(node)
                if len(selected) >= budget:
                    break
    return np.array(selected, dtype=np.int64)


def augment_subgraph(
    g: Graph,
    sub_i: SubgraphView,
    replicas,
    part: int = 0,
    assignment: np.ndarray | None = None,
    budget: int | None = None,
    shortfall: int = 0,
) -> AugmentedSubgraph:
    """Induce the subgraph over owned nodes plus replicas (maximal edges kept)."""
    owned = sub_i.local_ids[sub_i.owned]
    replicas = np.unique(np.asarray(replicas, dtype=np.int64)).astype(np.int64)
    if np.isin(replicas, owned).any():
        raise GadError("replicas must be disjoint from the owned node set")
    node_ids = np.union1d(owned, replicas)
    view = induce_subgraph(g, node_ids, owned)
    if assignment is not None:
        sources = {int(r): int(assignment[r]) for r in replicas}
    else:
        sources = {int(r): -1 for r in replicas}
    return AugmentedSubgraph(
        part=part,
        view=view,
        replica_sources=sources,
        budget=len(replicas) if budget is None else int(budget),
        shortfall=shortfall,
    )


def assign_to_workers(subgraphs: list[AugmentedSubgraph], num_workers: int) -> np.ndarray:
    """Greedy balanced placement: biggest subgraph first, least-loaded worker."""
    if num_workers < 1:
        raise GadError("num_workers must be >= 1")
    sizes = np.array([s.view.num_nodes for s in subgraphs], dtype=np.int64)
    order = np.lexsort((np.arange(len(sizes)), -sizes))
    loads = np.zeros(num_workers, dtype=np.int64)
    out = np.zeros(len(sizes), dtype=np.int64)
    for idx in order:
        w = int(np.argmin(loads))
        out[idx] = w
        loads[w] += sizes[idx]
    return out


def augment_partitions(
    g: Graph,
    p: Partitioning,
    layers: int,
    alpha: float = DEFAULT_ALPHA,
    seed: int = 0,
    z_c: float = Z_95,
    err_target: float = DEFAULT_ERR_TARGET,
    mode: str = "indicator",
    enabled: bool = True,
) -> list[AugmentationRecord]:
    """Run the full augmentation pass for every partition.

    With ``enabled=False`` the records carry the bare partition subgraphs
    (the no-augmentation baseline used for comparisons).
    """
    records = []
    for i in range(p.k):
        owned = p.part_nodes(i)
        sub_i = induce_subgraph(g, owned, owned)
        candidates = (
            candidate_replication_nodes(g, p, i, layers) if enabled else np.zeros(0, np.int64)
        )
        part_seed = rngs.stream(seed, rngs.AUGMENT, i).integers(0, 2**31 - 1)
        if candidates.size == 0:
            table, walkset = node_importance(g, sub_i, candidates, layers, int(part_seed))
            replicas = np.zeros(0, dtype=np.int64)
            budget = 0
        else:
            table, walkset = node_importance(
                g, sub_i, candidates, layers, int(part_seed),
                z_c=z_c, err_target=err_target, mode=mode,
            )
            budget = min(replication_budget(sub_i, alpha), len(candidates))
            replicas = depth_first_select(table, walkset, budget)
        aug = augment_subgraph(
            g, sub_i, replicas,
            part=i,
            assignment=p.assignment,
            budget=budget,
            shortfall=budget - len(replicas),
        )
        records.append(
            AugmentationRecord(
                part=i, subgraph=aug, table=table, walks_total=table.total_walks
            )
        )
    return records
