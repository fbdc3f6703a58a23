"""Synthetic graph generators for benchmarks, demos and tests.

Two families: plain stochastic block models (planted communities, optional
Gaussian class features) and a citation-style benchmark that mimics the
shape of the classic Cora files (2708 nodes, 5429 undirected edges, 1433
binary word features, 7 classes) and is written in the same
``.content`` / ``.cites`` layout so it exercises the compatibility loader.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from . import rngs
from .errors import GadError
from .graph import Graph, make_split_masks

CITATION_CLASS_SIZES = (818, 426, 418, 351, 298, 217, 180)   # sums to 2708


def sbm_graph(
    block_sizes,
    p_in,
    p_out: float,
    seed: int = 0,
    feature_dim: int | None = None,
    feature_noise=1.0,
    label_noise=0.0,
    split=(0.45, 0.18, 0.37),
) -> Graph:
    """Stochastic block model with labels = block ids.

    ``p_in``, ``feature_noise`` and ``label_noise`` may be scalars or
    per-block sequences, which makes blocks heterogeneous in density,
    feature spread and label quality (``label_noise`` is the per-block
    share of nodes relabeled uniformly at random).  With ``feature_dim``
    set, features are Gaussian class centers plus per-block-noise * N(0, 1);
    otherwise a single zero column.
    """
    block_sizes = [int(b) for b in block_sizes]
    if any(b <= 0 for b in block_sizes):
        raise GadError("block sizes must be positive")
    n = sum(block_sizes)
    k = len(block_sizes)
    labels = np.repeat(np.arange(k, dtype=np.int64), block_sizes)
    starts = np.cumsum([0] + block_sizes)
    p_in = np.broadcast_to(np.asarray(p_in, dtype=np.float64), (k,))
    noise = np.broadcast_to(np.asarray(feature_noise, dtype=np.float64), (k,))
    lnoise = np.broadcast_to(np.asarray(label_noise, dtype=np.float64), (k,))

    rng = rngs.stream(seed, rngs.SYNTH, 0)
    pairs = []
    for a in range(k):
        ia = np.arange(starts[a], starts[a + 1])
        for b in range(a, k):
            ib = np.arange(starts[b], starts[b + 1])
            p = p_in[a] if a == b else p_out
            hit = rng.random((len(ia), len(ib))) < p
            if a == b:
                hit = np.triu(hit, k=1)
            uu, vv = np.nonzero(hit)
            if len(uu):
                pairs.append(np.stack([ia[uu], ib[vv]], axis=1))
    pairs = np.concatenate(pairs, axis=0) if pairs else np.zeros((0, 2), dtype=np.int64)

    if feature_dim:
        frng = rngs.stream(seed, rngs.SYNTH, 1)
        centers = frng.normal(0.0, 1.0, size=(k, feature_dim))
        feats = centers[labels] + noise[labels][:, None] * frng.normal(
            0.0, 1.0, size=(n, feature_dim)
        )
    else:
        feats = np.zeros((n, 1))

    if lnoise.any():
        lrng = rngs.stream(seed, rngs.SYNTH, 3)
        flip = lrng.random(n) < lnoise[labels]
        labels = labels.copy()
        labels[flip] = lrng.integers(0, k, int(flip.sum()))

    train, val, test = make_split_masks(n, split, int(rngs.stream(seed, rngs.SYNTH, 2).integers(2**31)))
    return Graph.from_edges(
        num_nodes=n,
        pairs=pairs,
        features=feats,
        labels=labels,
        train_mask=train,
        val_mask=val,
        test_mask=test,
    )


def citation_graph_arrays(
    seed: int = 0,
    class_sizes=CITATION_CLASS_SIZES,
    num_edges: int = 5429,
    feature_dim: int = 1433,
    words_per_class: int = 150,
    mean_words: float = 18.0,
    homophily: float = 0.82,
    topic_purity: float = 0.20,
):
    """Arrays for a homophilous citation-style benchmark.

    Returns (labels, pairs, features).  Endpoint propensities are heavy
    tailed, edges prefer same-class endpoints with probability
    ``homophily``, and each document draws ~Poisson(mean_words) distinct
    words, a ``topic_purity`` share of them from its class's word block.
    """
    class_sizes = [int(c) for c in class_sizes]
    n = sum(class_sizes)
    k = len(class_sizes)
    labels = np.repeat(np.arange(k, dtype=np.int64), class_sizes)
    rng = rngs.stream(seed, rngs.SYNTH, 10)

    weight = rng.pareto(2.5, size=n) + 1.0
    members = [np.flatnonzero(labels == c) for c in range(k)]
    cum_class = [np.cumsum(weight[m] / weight[m].sum()) for m in members]
    cum_global = np.cumsum(weight / weight.sum())

    edges: set[tuple[int, int]] = set()
    rounds = 0
    while len(edges) < num_edges:
        rounds += 1
        if rounds > 200:
            raise GadError("edge sampling failed to converge")
        m = (num_edges - len(edges)) + 256
        u = np.searchsorted(cum_global, rng.random(m), side="right")
        v = np.searchsorted(cum_global, rng.random(m), side="right")
        same = rng.random(m) < homophily
        for c in range(k):
            idx = np.flatnonzero(same & (labels[u] == c))
            if len(idx):
                pick = np.searchsorted(cum_class[c], rng.random(len(idx)), side="right")
                v[idx] = members[c][pick]
        for uu, vv in zip(u, v):
            if uu != vv:
                edges.add((min(int(uu), int(vv)), max(int(uu), int(vv))))
                if len(edges) == num_edges:
                    break
    pairs = np.array(sorted(edges), dtype=np.int64)

    feats = np.zeros((n, feature_dim), dtype=np.float64)
    n_words = np.maximum(1, rng.poisson(mean_words, size=n))
    for i in range(n):
        c = labels[i]
        own = np.arange(c * words_per_class, (c + 1) * words_per_class)
        m = int(n_words[i])
        from_own = rng.random(m) < topic_purity
        words = np.where(
            from_own,
            own[rng.integers(0, len(own), size=m)],
            rng.integers(0, feature_dim, size=m),
        )
        feats[i, words] = 1.0
    return labels, pairs, feats


def write_citation_benchmark(
    out_dir,
    seed: int = 0,
    name: str = "citeb",
    **kwargs,
) -> tuple[Path, Path]:
    """Write the citation benchmark as a ``.content`` / ``.cites`` file pair.

    Node ids are arbitrary-looking strings (as in the original layout) and
    labels are strings, so the files exercise the id-interning path.
    Returns (content_path, cites_path).
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    labels, pairs, feats = citation_graph_arrays(seed=seed, **kwargs)
    n = len(labels)
    ids = [str(100000 + 7 * i) for i in range(n)]
    label_names = [f"topic_{c}" for c in labels]

    content_path = out_dir / f"{name}.content"
    with open(content_path, "w", encoding="utf-8") as fh:
        for i in range(n):
            row = " ".join(str(int(x)) for x in feats[i])
            fh.write(f"{ids[i]} {row} {label_names[i]}\n")
    cites_path = out_dir / f"{name}.cites"
    with open(cites_path, "w", encoding="utf-8") as fh:
        for u, v in pairs:
            fh.write(f"{ids[u]} {ids[v]}\n")
    return content_path, cites_path
