"""Pipeline configuration: defaults, file/flag merging, validation."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields

from .errors import GadError

_ENUMS = {
    "importance_mode": ("indicator", "multiplicity"),
    "consensus": ("per_round", "per_epoch"),
    "feature_norm": ("l1", "l2", "none"),
    "zeta_distance": ("l2", "per_dim_mean"),
    "loss_reduction": ("sum", "mean"),
    "loss_scale": ("population", "none"),
}


@dataclass
class Config:
    """All knobs of the partition / augment / train pipeline."""

    edges: str | None = None
    features: str | None = None
    data_dir: str | None = None
    split: tuple[float, float, float] = (0.45, 0.18, 0.37)

    k: int = 4
    epsilon: float = 0.1
    restarts: int = 8
    target_fraction: float = 0.2
    target_subgraph_nodes: int | None = None

    layers: int = 3
    hidden: int = 128
    eta: float = 1e-4
    epochs: int = 400
    eval_every: int = 1

    alpha: float = 0.01
    beta: float = 1.0
    z_c: float = 1.96
    err_target: float = 0.05
    importance_mode: str = "indicator"
    augment: bool = True

    weighted: bool = True
    consensus: str = "per_round"
    workers: int = 4
    seed: int = 0
    feature_norm: str = "none"
    zeta_distance: str = "l2"
    loss_reduction: str = "sum"
    loss_scale: str = "population"
    pair_cap: int = 4096

    def validate(self) -> "Config":
        if self.k < 1:
            raise GadError("k must be >= 1")
        if self.epsilon < 0:
            raise GadError("epsilon must be >= 0")
        if self.restarts < 1:
            raise GadError("restarts must be >= 1")
        if not 0.0 < self.target_fraction < 1.0:
            raise GadError("target_fraction must be in (0, 1)")
        if self.layers < 1:
            raise GadError("layers must be >= 1")
        if self.hidden < 1:
            raise GadError("hidden must be >= 1")
        if self.eta <= 0:
            raise GadError("eta must be positive")
        if self.epochs < 0:
            raise GadError("epochs must be >= 0")
        if self.eval_every < 1:
            raise GadError("eval_every must be >= 1")
        if self.alpha <= 0:
            raise GadError("alpha must be positive")
        if self.beta <= 0:
            raise GadError("beta must be positive")
        if not 0.0 < self.err_target < 1.0:
            raise GadError("err_target must be in (0, 1)")
        if self.z_c <= 0:
            raise GadError("z_c must be positive")
        if self.workers < 1:
            raise GadError("workers must be >= 1")
        if self.seed < 0:
            raise GadError("seed must be >= 0")
        if self.pair_cap < 2:
            raise GadError("pair_cap must be >= 2")
        if len(self.split) != 3 or any(s < 0 for s in self.split) or sum(self.split) > 1 + 1e-9:
            raise GadError("split fractions must be nonnegative and sum to <= 1")
        if self.target_subgraph_nodes is not None and self.target_subgraph_nodes < 1:
            raise GadError("target_subgraph_nodes must be >= 1")
        for name, allowed in _ENUMS.items():
            if getattr(self, name) not in allowed:
                raise GadError(f"{name} must be one of {allowed}")
        return self

    def to_json_dict(self) -> dict:
        d = asdict(self)
        d["split"] = list(self.split)
        return d

    @classmethod
    def from_sources(cls, file_dict: dict | None = None, overrides: dict | None = None) -> "Config":
        """Merge defaults < config file < explicit overrides, then validate."""
        known = {f.name for f in fields(cls)}
        merged: dict = {}
        for src in (file_dict or {}), (overrides or {}):
            for key, val in src.items():
                if key not in known:
                    raise GadError(f"unknown config key {key!r}")
                if val is not None:
                    merged[key] = val
        if "split" in merged:
            merged["split"] = tuple(float(x) for x in merged["split"])
        cfg = cls(**merged)
        return cfg.validate()

    @classmethod
    def from_file(cls, path, overrides: dict | None = None) -> "Config":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_sources(json.load(fh), overrides)

    def effective_k(self, num_nodes: int) -> int:
        """k, optionally steered by a target subgraph size."""
        if self.target_subgraph_nodes:
            return max(1, round(num_nodes / self.target_subgraph_nodes))
        return self.k
