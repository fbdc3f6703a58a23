"""Graph representation, dataset ingestion, and subgraph machinery.

Graphs are undirected, stored in CSR form with every edge present in both
directions and no self-loops.  Node features, integer class labels and the
train/val/test masks live alongside the structure so that a single object
can be handed to the partitioning, augmentation and training stages.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from functools import cached_property
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .errors import GadError

UNLABELED = -1


def _csr_from_pairs(num_nodes: int, pairs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Build symmetric CSR (offsets, targets) from an array of (u, v) pairs.

    Self-loops are dropped, duplicates removed, and both directions stored.
    """
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    if pairs.size:
        if pairs.min() < 0 or pairs.max() >= num_nodes:
            raise GadError("edge endpoint out of range")
        pairs = pairs[pairs[:, 0] != pairs[:, 1]]
    if pairs.size:
        both = np.concatenate([pairs, pairs[:, ::-1]], axis=0)
        both = np.unique(both, axis=0)
        u, v = both[:, 0], both[:, 1]
    else:
        u = v = np.zeros(0, dtype=np.int64)
    counts = np.bincount(u, minlength=num_nodes)
    offsets = np.zeros(num_nodes + 1, dtype=np.int64)
    np.cumsum(counts, out=offsets[1:])
    return offsets, v.astype(np.int64, copy=False)


@dataclass(frozen=True, eq=False)
class Graph:
    """Immutable undirected graph with features, labels and split masks."""

    num_nodes: int
    offsets: np.ndarray        # int64, len num_nodes + 1
    targets: np.ndarray        # int64, len 2 * num_edges
    features: np.ndarray       # float64, (num_nodes, feature_dim)
    labels: np.ndarray         # int64, UNLABELED where unknown
    train_mask: np.ndarray
    val_mask: np.ndarray
    test_mask: np.ndarray
    node_names: tuple[str, ...] | None = None
    class_names: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.offsets.shape != (self.num_nodes + 1,):
            raise GadError("offsets length must be num_nodes + 1")
        if self.offsets[-1] != len(self.targets):
            raise GadError("offsets[-1] must equal len(targets)")
        if np.any(np.diff(self.offsets) < 0):
            raise GadError("offsets must be nondecreasing")
        overlap = (
            (self.train_mask & self.val_mask)
            | (self.train_mask & self.test_mask)
            | (self.val_mask & self.test_mask)
        )
        if overlap.any():
            raise GadError("train/val/test masks must be pairwise disjoint")

    @property
    def num_edges(self) -> int:
        """Number of undirected edges."""
        return len(self.targets) // 2

    @property
    def feature_dim(self) -> int:
        return self.features.shape[1]

    @property
    def num_classes(self) -> int:
        labeled = self.labels[self.labels != UNLABELED]
        return int(labeled.max()) + 1 if labeled.size else 0

    @property
    def degrees(self) -> np.ndarray:
        return np.diff(self.offsets)

    def neighbors(self, u: int) -> np.ndarray:
        return self.targets[self.offsets[u]:self.offsets[u + 1]]

    @cached_property
    def sparse_adjacency(self) -> sp.csr_matrix:
        """Boolean adjacency as scipy CSR (cached; used for BFS fan-outs)."""
        n = self.num_nodes
        rows = np.repeat(np.arange(n, dtype=np.int64), self.degrees)
        data = np.ones(len(self.targets), dtype=bool)
        return sp.csr_matrix((data, (rows, self.targets)), shape=(n, n))

    def edge_list(self) -> np.ndarray:
        """Unique undirected edges as an (m, 2) array with u < v, sorted."""
        rows = np.repeat(np.arange(self.num_nodes, dtype=np.int64), self.degrees)
        keep = rows < self.targets
        return np.stack([rows[keep], self.targets[keep]], axis=1)

    def with_features(self, features: np.ndarray) -> "Graph":
        """Copy of the graph with a replaced feature matrix."""
        if features.shape[0] != self.num_nodes:
            raise GadError("feature row count must match num_nodes")
        return replace(self, features=np.asarray(features, dtype=np.float64))

    @classmethod
    def from_edges(
        cls,
        num_nodes: int,
        pairs: np.ndarray,
        features: np.ndarray | None = None,
        labels: np.ndarray | None = None,
        train_mask: np.ndarray | None = None,
        val_mask: np.ndarray | None = None,
        test_mask: np.ndarray | None = None,
        node_names: tuple[str, ...] | None = None,
        class_names: tuple[str, ...] | None = None,
    ) -> "Graph":
        offsets, targets = _csr_from_pairs(num_nodes, np.asarray(pairs))
        if features is None:
            features = np.zeros((num_nodes, 1))
        features = np.asarray(features, dtype=np.float64)
        if features.shape[0] != num_nodes:
            raise GadError("feature row count must match num_nodes")
        if labels is None:
            labels = np.full(num_nodes, UNLABELED, dtype=np.int64)
        labels = np.asarray(labels, dtype=np.int64)

        def _mask(m):
            return np.zeros(num_nodes, dtype=bool) if m is None else np.asarray(m, dtype=bool)

        return cls(
            num_nodes=num_nodes,
            offsets=offsets,
            targets=targets,
            features=features,
            labels=labels,
            train_mask=_mask(train_mask),
            val_mask=_mask(val_mask),
            test_mask=_mask(test_mask),
            node_names=node_names,
            class_names=class_names,
        )


@dataclass(frozen=True, eq=False)
class SubgraphView:
    """Induced subgraph over a subset of a parent graph's nodes.

    ``local_ids`` maps local index -> global node id (sorted ascending);
    ``owned`` marks nodes that belong to this partition, as opposed to
    replicas copied in from elsewhere.
    """

    graph: Graph
    local_ids: np.ndarray      # int64 global ids, ascending
    owned: np.ndarray          # bool per local node
    offsets: np.ndarray        # local CSR
    targets: np.ndarray

    @property
    def num_nodes(self) -> int:
        return len(self.local_ids)

    @property
    def num_edges(self) -> int:
        return len(self.targets) // 2

    @property
    def degrees(self) -> np.ndarray:
        return np.diff(self.offsets)

    @cached_property
    def global_to_local(self) -> dict[int, int]:
        return {int(g): i for i, g in enumerate(self.local_ids)}

    @property
    def owned_ids(self) -> np.ndarray:
        return self.local_ids[self.owned]

    @property
    def replica_ids(self) -> np.ndarray:
        return self.local_ids[~self.owned]

    def local_features(self) -> np.ndarray:
        return self.graph.features[self.local_ids]

    def local_labels(self) -> np.ndarray:
        return self.graph.labels[self.local_ids]

    def local_train_mask(self) -> np.ndarray:
        """Training mask restricted to owned nodes (replicas never enter the loss)."""
        return self.graph.train_mask[self.local_ids] & self.owned

    def edge_list_global(self) -> np.ndarray:
        """Local edges as global-id pairs with u < v, sorted."""
        rows = np.repeat(np.arange(self.num_nodes, dtype=np.int64), self.degrees)
        gu = self.local_ids[rows]
        gv = self.local_ids[self.targets]
        keep = gu < gv
        out = np.stack([gu[keep], gv[keep]], axis=1)
        order = np.lexsort((out[:, 1], out[:, 0]))
        return out[order]


@dataclass(frozen=True, eq=False)
class NormalizedAdjacency:
    """Symmetric-normalized adjacency with self-loops over a SubgraphView.

    Entry (i, j) is 1/sqrt((d_i + 1)(d_j + 1)) with d the local degree;
    diagonal entries are 1/(d_i + 1).
    """

    matrix: sp.csr_matrix

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape


def induce_subgraph(g: Graph, node_ids, owned_ids) -> SubgraphView:
    """Subgraph of ``g`` induced by ``node_ids``; ``owned_ids`` flags ownership.

    Requires owned_ids to be a subset of node_ids; all edges of ``g`` with
    both endpoints inside ``node_ids`` are kept.
    """
    node_ids = np.unique(np.asarray(node_ids, dtype=np.int64))
    owned_ids = np.unique(np.asarray(owned_ids, dtype=np.int64))
    if node_ids.size and (node_ids[0] < 0 or node_ids[-1] >= g.num_nodes):
        raise GadError("node id out of range")
    if not np.isin(owned_ids, node_ids).all():
        raise GadError("owned_ids must be a subset of node_ids")

    member = np.zeros(g.num_nodes, dtype=bool)
    member[node_ids] = True
    local_of = np.full(g.num_nodes, -1, dtype=np.int64)
    local_of[node_ids] = np.arange(len(node_ids))

    deg = g.degrees[node_ids]
    rows_g = np.repeat(node_ids, deg)
    cols_g = np.concatenate(
        [g.neighbors(u) for u in node_ids]
    ) if len(node_ids) else np.zeros(0, dtype=np.int64)
    keep = member[cols_g] if cols_g.size else np.zeros(0, dtype=bool)
    rows_l = local_of[rows_g[keep]]
    cols_l = local_of[cols_g[keep]]

    counts = np.bincount(rows_l, minlength=len(node_ids))
    offsets = np.zeros(len(node_ids) + 1, dtype=np.int64)
    np.cumsum(counts, out=offsets[1:])
    order = np.lexsort((cols_l, rows_l))

    owned = np.zeros(len(node_ids), dtype=bool)
    owned[local_of[owned_ids]] = True
    return SubgraphView(
        graph=g,
        local_ids=node_ids,
        owned=owned,
        offsets=offsets,
        targets=cols_l[order],
    )


def density(sub: SubgraphView) -> float:
    """Undirected edge density 2|e| / (|v| (|v|-1)); 0 for fewer than 2 nodes."""
    n = sub.num_nodes
    if n < 2:
        return 0.0
    return 2.0 * sub.num_edges / (n * (n - 1))


def normalized_adjacency(sub: SubgraphView) -> NormalizedAdjacency:
    n = sub.num_nodes
    dinv = 1.0 / np.sqrt(sub.degrees + 1.0)
    rows = np.repeat(np.arange(n, dtype=np.int64), sub.degrees)
    cols = sub.targets
    data = dinv[rows] * dinv[cols]
    diag = np.arange(n, dtype=np.int64)
    rows = np.concatenate([rows, diag])
    cols = np.concatenate([cols, diag])
    data = np.concatenate([data, dinv * dinv])
    mat = sp.csr_matrix((data, (rows, cols)), shape=(n, n))
    return NormalizedAdjacency(matrix=mat)


def full_view(g: Graph) -> SubgraphView:
    """The whole graph as a SubgraphView with every node owned."""
    ids = np.arange(g.num_nodes, dtype=np.int64)
    return SubgraphView(
        graph=g,
        local_ids=ids,
        owned=np.ones(g.num_nodes, dtype=bool),
        offsets=g.offsets.copy(),
        targets=g.targets.copy(),
    )


def row_normalize(features: np.ndarray, mode: str = "l1") -> np.ndarray:
    """Row-normalize a feature matrix; rows with zero norm are left as-is."""
    x = np.asarray(features, dtype=np.float64)
    if mode == "none":
        return x.copy()
    if mode == "l1":
        norms = np.abs(x).sum(axis=1)
    elif mode == "l2":
        norms = np.sqrt((x * x).sum(axis=1))
    else:
        raise GadError(f"unknown feature normalization mode: {mode!r}")
    scale = np.where(norms > 0, norms, 1.0)
    return x / scale[:, None]


def make_split_masks(
    num_nodes: int, fractions: tuple[float, float, float], seed: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Disjoint train/val/test masks from fractions via a seeded shuffle.

    Sizes are floor(fraction * num_nodes); leftover nodes stay unassigned.
    """
    f = tuple(float(x) for x in fractions)
    if any(x < 0 for x in f) or sum(f) > 1.0 + 1e-9:
        raise GadError("split fractions must be nonnegative and sum to <= 1")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(num_nodes)
    sizes = [int(np.floor(x * num_nodes)) for x in f]
    masks = []
    start = 0
    for s in sizes:
        m = np.zeros(num_nodes, dtype=bool)
        m[perm[start:start + s]] = True
        masks.append(m)
        start += s
    return masks[0], masks[1], masks[2]


def _apply_split(num_nodes, split_spec, seed):
    if (
        isinstance(split_spec, (tuple, list))
        and len(split_spec) == 3
        and all(np.isscalar(x) for x in split_spec)
    ):
        return make_split_masks(num_nodes, tuple(split_spec), seed)
    train, val, test = (np.asarray(m, dtype=bool) for m in split_spec)
    return train, val, test


def _read_edge_pairs(path, name_to_idx) -> np.ndarray:
    pairs = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise GadError(f"{path}:{lineno}: expected 'u v', got {line!r}")
            try:
                pairs.append((name_to_idx[parts[0]], name_to_idx[parts[1]]))
            except KeyError as exc:
                raise GadError(f"{path}:{lineno}: unknown node id {exc.args[0]!r}") from None
    return np.array(pairs, dtype=np.int64).reshape(-1, 2)


def _parse_feature_rows(lines, path, dim=None):
    """Parse 'id v1 ... vD label' rows; returns (names, features, raw_labels)."""
    names, feats, raw_labels = [], [], []
    for lineno, line in lines:
        parts = line.split()
        if len(parts) < 3:
            raise GadError(f"{path}:{lineno}: malformed feature row")
        if dim is None:
            dim = len(parts) - 2
        if len(parts) != dim + 2:
            raise GadError(
                f"{path}:{lineno}: inconsistent feature dimension "
                f"(expected {dim}, got {len(parts) - 2})"
            )
        names.append(parts[0])
        feats.append([float(x) for x in parts[1:-1]])
        raw_labels.append(parts[-1])
    return names, np.array(feats, dtype=np.float64), raw_labels


def load_dataset(edge_path, feature_path, split_spec, seed: int) -> Graph:
    """Load a graph from an edge-list file plus a feature file.

    The feature file is either the native format (a JSON header line
    ``{"num_nodes": N, "dim": D, "classes": C}`` followed by N rows of
    ``id v1 ... vD label`` with integer labels) or the Cora ``.content``
    layout (same rows, string labels, no header).  Node ids are arbitrary
    strings interned in file order.
    """
    feature_path = Path(feature_path)
    with open(feature_path, "r", encoding="utf-8") as fh:
        lines = [(i, ln.strip()) for i, ln in enumerate(fh, 1) if ln.strip()]
    if not lines:
        raise GadError(f"{feature_path}: empty feature file")

    class_names: tuple[str, ...] | None = None
    if lines[0][1].startswith("{"):
        header = json.loads(lines[0][1])
        names, feats, raw_labels = _parse_feature_rows(
            lines[1:], feature_path, dim=int(header["dim"])
        )
        if len(names) != int(header["num_nodes"]):
            raise GadError(f"{feature_path}: row count does not match header")
        labels = np.array([int(x) for x in raw_labels], dtype=np.int64)
        n_classes = int(header["classes"])
        if labels.size and (labels.min() < UNLABELED or labels.max() >= n_classes):
            raise GadError(f"{feature_path}: label outside 0..classes-1")
    else:
        names, feats, raw_labels = _parse_feature_rows(lines, feature_path)
        class_names = tuple(sorted(set(raw_labels)))
        lut = {c: i for i, c in enumerate(class_names)}
        labels = np.array([lut[x] for x in raw_labels], dtype=np.int64)

    if len(set(names)) != len(names):
        raise GadError(f"{feature_path}: duplicate node id")
    name_to_idx = {name: i for i, name in enumerate(names)}
    pairs = _read_edge_pairs(edge_path, name_to_idx)
    train, val, test = _apply_split(len(names), split_spec, seed)
    return Graph.from_edges(
        num_nodes=len(names),
        pairs=pairs,
        features=feats,
        labels=labels,
        train_mask=train,
        val_mask=val,
        test_mask=test,
        node_names=tuple(names),
        class_names=class_names,
    )


def load_cora(content_path, cites_path, split_spec, seed: int) -> Graph:
    """Compatibility loader for the classic ``.content`` / ``.cites`` pair."""
    return load_dataset(cites_path, content_path, split_spec, seed)


def write_edge_list(g: Graph, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for u, v in g.edge_list():
            fh.write(f"{u} {v}\n")
