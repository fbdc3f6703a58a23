"""Multilevel k-way partitioning: coarsen, grow seeded parts, project back.

The pipeline is heavy-edge-matching coarsening down to a target size, greedy
region growing with restarts on the coarsest level (keeping the assignment
with the smallest weighted cut), and projection of that assignment back to
the original nodes.  Balance follows the cap (1 + eps) * ceil(|V| / k), first
on node weight during growth and finally on node count after projection.
"""

from __future__ import annotations

import heapq
import json
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import rngs
from .errors import BalanceError, GadError
from .graph import Graph

SHRINK_STALL = 0.95   # stop coarsening when a level keeps > 95% of its nodes


@dataclass(frozen=True, eq=False)
class CoarseGraph:
    """One level of the coarsening hierarchy.

    ``fine_to_coarse`` maps the previous level's node ids to this level's
    (None at level 0).  Node weights always sum to the original |V|; an edge
    weight counts the original edges crossing between the two merged sets.
    """

    num_nodes: int
    offsets: np.ndarray
    targets: np.ndarray
    edge_weights: np.ndarray   # aligned with targets
    node_weight: np.ndarray
    fine_to_coarse: np.ndarray | None

    @property
    def degrees(self) -> np.ndarray:
        return np.diff(self.offsets)

    def neighbors(self, u: int) -> np.ndarray:
        return self.targets[self.offsets[u]:self.offsets[u + 1]]

    def edge_weights_of(self, u: int) -> np.ndarray:
        return self.edge_weights[self.offsets[u]:self.offsets[u + 1]]


@dataclass(frozen=True, eq=False)
class Partitioning:
    """Node-to-part assignment with its quality numbers."""

    assignment: np.ndarray   # int64 part id per original node
    k: int
    epsilon: float
    edge_cut: int
    restarts_used: int

    def part_sizes(self) -> np.ndarray:
        return np.bincount(self.assignment, minlength=self.k)

    def part_nodes(self, i: int) -> np.ndarray:
        return np.flatnonzero(self.assignment == i).astype(np.int64)

    def to_json_dict(self) -> dict:
        return {
            "k": self.k,
            "epsilon": self.epsilon,
            "edge_cut": self.edge_cut,
            "restarts_used": self.restarts_used,
            "assignment": self.assignment.tolist(),
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "Partitioning":
        return cls(
            assignment=np.asarray(d["assignment"], dtype=np.int64),
            k=int(d["k"]),
            epsilon=float(d["epsilon"]),
            edge_cut=int(d["edge_cut"]),
            restarts_used=int(d["restarts_used"]),
        )


def balance_cap(num_nodes: int, k: int, epsilon: float) -> int:
    """Per-part cap floor((1 + eps) * ceil(|V| / k))."""
    return int(np.floor((1.0 + epsilon) * np.ceil(num_nodes / k)))


def level_zero(g: Graph) -> CoarseGraph:
    """Wrap a Graph as the finest level with unit node and edge weights."""
    return CoarseGraph(
        num_nodes=g.num_nodes,
        offsets=g.offsets.copy(),
        targets=g.targets.copy(),
        edge_weights=np.ones(len(g.targets), dtype=np.int64),
        node_weight=np.ones(g.num_nodes, dtype=np.int64),
        fine_to_coarse=None,
    )


def _match_heavy_edges(cg: CoarseGraph, rng: np.random.Generator) -> np.ndarray:
    """Heavy-edge matching: partner id per node (own id when unmatched).

    Nodes are visited in random order; an unmatched node pairs with its
    unmatched neighbor along the maximum-weight edge, ties to lowest id.
    """
    n = cg.num_nodes
    partner = np.full(n, -1, dtype=np.int64)
    for u in rng.permutation(n):
        if partner[u] != -1:
            continue
        nbrs = cg.neighbors(u)
        wts = cg.edge_weights_of(u)
        best_v, best_w = -1, 0
        for v, w in zip(nbrs, wts):
            if partner[v] != -1 or v == u:
                continue
            if w > best_w or (w == best_w and (best_v == -1 or v < best_v)):
                best_v, best_w = int(v), int(w)
        if best_v == -1:
            partner[u] = u
        else:
            partner[u] = best_v
            partner[best_v] = u
    return partner


def _contract(cg: CoarseGraph, partner: np.ndarray) -> CoarseGraph:
    n = cg.num_nodes
    coarse_id = np.full(n, -1, dtype=np.int64)
    next_id = 0
    for u in range(n):
        if coarse_id[u] != -1:
            continue
        coarse_id[u] = next_id
        p = partner[u]
        if p != u:
            coarse_id[p] = next_id
        next_id += 1

    node_weight = np.bincount(coarse_id, weights=cg.node_weight, minlength=next_id)
    rows = np.repeat(np.arange(n, dtype=np.int64), cg.degrees)
    cu = coarse_id[rows]
    cv = coarse_id[cg.targets]
    keep = cu != cv
    mat = sp.coo_matrix(
        (cg.edge_weights[keep].astype(np.int64), (cu[keep], cv[keep])),
        shape=(next_id, next_id),
    ).tocsr()
    mat.sum_duplicates()
    mat.sort_indices()
    return CoarseGraph(
        num_nodes=next_id,
        offsets=mat.indptr.astype(np.int64),
        targets=mat.indices.astype(np.int64),
        edge_weights=mat.data.astype(np.int64),
        node_weight=node_weight.astype(np.int64),
        fine_to_coarse=coarse_id,
    )


def coarsen(g: Graph | CoarseGraph, target_fraction: float = 0.2, seed: int = 0) -> list[CoarseGraph]:
    """Coarsening hierarchy, finest (the input) first, coarsest last.

    Stops once a level has <= target_fraction * |V| nodes, or when matching
    stalls (a level shrinking by less than 5% is discarded).
    """
    if not 0.0 < target_fraction < 1.0:
        raise GadError("target_fraction must be in (0, 1)")
    level = g if isinstance(g, CoarseGraph) else level_zero(g)
    levels = [level]
    target = target_fraction * level.num_nodes
    step = 0
    while levels[-1].num_nodes > target:
        cur = levels[-1]
        rng = rngs.stream(seed, rngs.COARSEN, step)
        nxt = _contract(cur, _match_heavy_edges(cur, rng))
        if nxt.num_nodes > SHRINK_STALL * cur.num_nodes:
            break
        levels.append(nxt)
        step += 1
    return levels


def _weighted_cut(cg: CoarseGraph, assign: np.ndarray) -> int:
    rows = np.repeat(np.arange(cg.num_nodes, dtype=np.int64), cg.degrees)
    cross = assign[rows] != assign[cg.targets]
    return int(cg.edge_weights[cross].sum()) // 2


def _grow_parts(cg: CoarseGraph, k: int, cap: int, rng: np.random.Generator) -> np.ndarray:
    """One seeded region-growing pass; returns a full assignment."""
    n = cg.num_nodes
    assign = np.full(n, -1, dtype=np.int64)
    seeds = rng.choice(n, size=k, replace=False)
    part_weight = np.zeros(k, dtype=np.int64)
    frontiers: list[list] = [[] for _ in range(k)]
    for i, s in enumerate(seeds):
        assign[s] = i
        part_weight[i] = cg.node_weight[s]
        for v, w in zip(cg.neighbors(s), cg.edge_weights_of(s)):
            heapq.heappush(frontiers[i], (-int(w), int(v)))

    open_parts = [True] * k
    while any(open_parts):
        for i in range(k):
            if not open_parts[i]:
                continue
            heap = frontiers[i]
            v = -1
            while heap:
                _, cand = heapq.heappop(heap)
                if assign[cand] == -1:
                    v = cand
                    break
            if v == -1:
                open_parts[i] = False
                continue
            if part_weight[i] + cg.node_weight[v] > cap:
                open_parts[i] = False
                continue
            assign[v] = i
            part_weight[i] += cg.node_weight[v]
            for t, w in zip(cg.neighbors(v), cg.edge_weights_of(v)):
                if assign[t] == -1:
                    heapq.heappush(heap, (-int(w), int(t)))

    # Attach orphans to the adjacent part with the smallest weight; repeat
    # passes so chains of orphans resolve, then fall back to the globally
    # lightest part for nodes with no assigned neighbor at all.
    orphans = [int(u) for u in np.flatnonzero(assign == -1)]
    while orphans:
        rest = []
        progress = False
        for u in orphans:
            parts = {int(assign[v]) for v in cg.neighbors(u) if assign[v] != -1}
            if parts:
                tgt = min(parts, key=lambda p: (part_weight[p], p))
                assign[u] = tgt
                part_weight[tgt] += cg.node_weight[u]
                progress = True
            else:
                rest.append(u)
        if not progress:
            warnings.warn(
                f"{len(rest)} node(s) with no adjacent part assigned to the "
                "lightest part",
                stacklevel=2,
            )
            for u in rest:
                tgt = int(np.argmin(part_weight))   # lightest part, lowest id on ties
                assign[u] = tgt
                part_weight[tgt] += cg.node_weight[u]
            rest = []
        orphans = rest
    return assign


def partition_coarse(
    cg: CoarseGraph, k: int, epsilon: float, restarts: int, seed: int
) -> np.ndarray:
    """Best-of-``restarts`` greedy growth on one level; minimum weighted cut wins.

    Restart r uses an independent stream derived from (seed, r), so sharing
    a seed across different restart counts shares the restart prefix.
    """
    if k > cg.num_nodes:
        raise GadError(f"k={k} exceeds node count {cg.num_nodes}")
    if restarts < 1:
        raise GadError("restarts must be >= 1")
    total = int(cg.node_weight.sum())
    cap = balance_cap(total, k, epsilon)
    if k * cap < total:
        raise BalanceError(
            f"infeasible balance: k={k}, cap={cap} cannot hold {total} nodes"
        )
    best_assign, best_cut = None, None
    for r in range(restarts):
        rng = rngs.stream(seed, rngs.RESTART, r)
        assign = _grow_parts(cg, k, cap, rng)
        cut = _weighted_cut(cg, assign)
        if best_cut is None or cut < best_cut:
            best_assign, best_cut = assign, cut
    return best_assign


def _rebalance_counts(level0: CoarseGraph, assign: np.ndarray, k: int, cap: int) -> np.ndarray:
    """Move boundary nodes from over-full to under-full parts (one pass)."""
    assign = assign.copy()
    sizes = np.bincount(assign, minlength=k)
    for part in range(k):
        while sizes[part] > cap:
            moved = False
            for u in np.flatnonzero(assign == part):
                nbr_parts = {
                    int(assign[v]) for v in level0.neighbors(u) if assign[v] != part
                }
                under = [p for p in nbr_parts if sizes[p] < cap]
                if under:
                    tgt = min(under, key=lambda p: (sizes[p], p))
                    assign[u] = tgt
                    sizes[part] -= 1
                    sizes[tgt] += 1
                    moved = True
                    break
            if not moved:
                under = [p for p in range(k) if sizes[p] < cap and p != part]
                if not under:
                    raise BalanceError("rebalance failed: no under-full part available")
                u = int(np.flatnonzero(assign == part)[0])
                tgt = min(under, key=lambda p: (sizes[p], p))
                assign[u] = tgt
                sizes[part] -= 1
                sizes[tgt] += 1
    return assign


def uncoarsen(
    levels: list[CoarseGraph], coarse_assignment: np.ndarray, k: int, epsilon: float
) -> Partitioning:
    """Project a coarsest-level assignment back to the original nodes.

    Recomputes the edge cut on the finest level and enforces the node-count
    balance cap, fixing small violations with a single rebalance pass.
    """
    assign = np.asarray(coarse_assignment, dtype=np.int64)
    if len(assign) != levels[-1].num_nodes:
        raise GadError("assignment length does not match coarsest level")
    for level in reversed(levels[1:]):
        f2c = level.fine_to_coarse
        if f2c is None or np.any(f2c < 0):
            raise GadError("projection gap: fine node with no coarse image")
        assign = assign[f2c]

    level0 = levels[0]
    n = level0.num_nodes
    cap = balance_cap(n, k, epsilon)
    sizes = np.bincount(assign, minlength=k)
    if (sizes == 0).any():
        raise BalanceError("empty part after projection")
    if (sizes > cap).any():
        assign = _rebalance_counts(level0, assign, k, cap)
        sizes = np.bincount(assign, minlength=k)
        if (sizes > cap).any() or (sizes == 0).any():
            raise BalanceError("balance constraint violated after rebalance")
    return Partitioning(
        assignment=assign,
        k=k,
        epsilon=epsilon,
        edge_cut=_weighted_cut(level0, assign),
        restarts_used=0,
    )


def edge_cut(g: Graph, p: Partitioning) -> int:
    """Number of undirected edges with endpoints in different parts."""
    assign = p.assignment
    if len(assign) != g.num_nodes:
        raise GadError("assignment does not cover all nodes")
    rows = np.repeat(np.arange(g.num_nodes, dtype=np.int64), g.degrees)
    return int((assign[rows] != assign[g.targets]).sum()) // 2


def partition_graph(
    g: Graph,
    k: int,
    epsilon: float = 0.1,
    restarts: int = 8,
    seed: int = 0,
    target_fraction: float = 0.2,
) -> Partitioning:
    """Full multilevel pipeline on a Graph."""
    if not 1 <= k <= g.num_nodes:
        raise GadError(f"k must be in 1..{g.num_nodes}")
    cap = balance_cap(g.num_nodes, k, epsilon)
    if k * cap < g.num_nodes:
        raise BalanceError(f"infeasible balance: k={k}, epsilon={epsilon}")
    if k == 1:
        return Partitioning(
            assignment=np.zeros(g.num_nodes, dtype=np.int64),
            k=1,
            epsilon=epsilon,
            edge_cut=0,
            restarts_used=0,
        )
    levels = coarsen(g, target_fraction=target_fraction, seed=seed)
    # never partition a level that has fewer nodes than parts
    depth = max(i for i, lv in enumerate(levels) if lv.num_nodes >= k)
    levels = levels[: depth + 1]
    coarse_assign = partition_coarse(levels[-1], k, epsilon, restarts, seed)
    part = uncoarsen(levels, coarse_assign, k, epsilon)
    return Partitioning(
        assignment=part.assignment,
        k=k,
        epsilon=epsilon,
        edge_cut=part.edge_cut,
        restarts_used=restarts,
    )


def random_balanced_partition(num_nodes: int, k: int, seed: int) -> np.ndarray:
    """Uniformly random assignment with near-equal part sizes (baseline)."""
    rng = rngs.stream(seed, rngs.RESTART, 10**6)
    assign = np.arange(num_nodes, dtype=np.int64) % k
    rng.shuffle(assign)
    return assign


def save_partitioning(p: Partitioning, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(p.to_json_dict(), fh, sort_keys=True, indent=2)
        fh.write("\n")


def load_partitioning(path) -> Partitioning:
    with open(path, "r", encoding="utf-8") as fh:
        return Partitioning.from_json_dict(json.load(fh))
