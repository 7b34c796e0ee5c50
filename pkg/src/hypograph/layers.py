"""Stacked feature layers: rank-1 batches, linear mixing, and pooling.

Forward inference only.  Each layer turns n x d node attributes into an
n x R feature matrix by projecting walk-history features onto R rank-1
functionals (all M degrees each) and mixing the R*M values back down to
R; stacked layers feed one layer's output to the next as attributes, so
the effective walk length grows additively.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .config import FeatureConfig
from .graphs import AttentionParams, LabelledGraph, attention_transition, transition_matrix
from .lowrank import RankOneFunctional, batch_features


@dataclass(frozen=True)
class LayerParams:
    """Parameters of one feature layer."""

    functionals: tuple[RankOneFunctional, ...]
    mixing: np.ndarray
    bias: np.ndarray
    config: FeatureConfig
    attention: AttentionParams | None = None

    def __post_init__(self):
        functionals = tuple(self.functionals)
        if not functionals:
            raise ValueError("need at least one functional")
        deg, dim = functionals[0].degree, functionals[0].dim
        for f in functionals:
            if f.degree != deg or f.dim != dim:
                raise ValueError("functionals must share degree and dimension")
        if deg != self.config.max_degree:
            raise ValueError(
                f"functional degree {deg} does not match config degree {self.config.max_degree}"
            )
        rank = len(functionals)
        mixing = np.ascontiguousarray(self.mixing, dtype=np.float64)
        bias = np.ascontiguousarray(self.bias, dtype=np.float64)
        if mixing.shape != (rank, rank * deg):
            raise ValueError(
                f"mixing must be ({rank}, {rank * deg}), got {mixing.shape}"
            )
        if bias.shape != (rank,):
            raise ValueError(f"bias must be ({rank},), got {bias.shape}")
        if self.attention is not None:
            if self.attention.dim != self.attr_dim_from(dim):
                raise ValueError("attention dimension does not match attributes")
        mixing.flags.writeable = False
        bias.flags.writeable = False
        object.__setattr__(self, "functionals", functionals)
        object.__setattr__(self, "mixing", mixing)
        object.__setattr__(self, "bias", bias)

    def attr_dim_from(self, lift_dim: int) -> int:
        return lift_dim - 1 if self.config.time_param else lift_dim

    @property
    def rank(self) -> int:
        return len(self.functionals)

    @property
    def attr_dim(self) -> int:
        """Attribute width this layer expects."""
        return self.attr_dim_from(self.functionals[0].dim)


@dataclass(frozen=True)
class ModelConfig:
    """An ordered stack of layers plus the final pooling mode."""

    layers: tuple[LayerParams, ...]
    pooling: str = "mean"
    seed: int | None = None

    def __post_init__(self):
        layers = tuple(self.layers)
        if not layers:
            raise ValueError("need at least one layer")
        if self.pooling not in ("mean", "sum"):
            raise ValueError(f"pooling must be 'mean' or 'sum', got {self.pooling!r}")
        for prev, nxt in zip(layers, layers[1:]):
            if prev.rank != nxt.attr_dim:
                raise ValueError(
                    f"dimension chain violation: layer output {prev.rank} feeds "
                    f"layer expecting {nxt.attr_dim}"
                )
        object.__setattr__(self, "layers", layers)


def init_params(
    d: int,
    cfg: FeatureConfig,
    seed,
    attention: bool = False,
    heads: int = 1,
) -> LayerParams:
    """Draw layer parameters for attribute width d, deterministic in seed.

    Component vectors are centered uniform with variance 1/fan-in per
    component (fan-in is the lift dimension for the u-vectors and R*M for
    the mixing matrix); the bias starts at zero.  ``seed`` may be an int
    or a numpy SeedSequence; each functional draws from its own spawned
    substream.
    """
    seq = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    rank, deg = cfg.rank, cfg.max_degree
    dim = cfg.lift_dim(d)
    children = seq.spawn(rank + 2)
    bound_u = math.sqrt(3.0 / dim)
    functionals = tuple(
        RankOneFunctional(
            np.random.default_rng(children[j]).uniform(-bound_u, bound_u, size=(deg, dim))
        )
        for j in range(rank)
    )
    bound_mix = math.sqrt(3.0 / (rank * deg))
    mixing = np.random.default_rng(children[rank]).uniform(
        -bound_mix, bound_mix, size=(rank, rank * deg)
    )
    attn = None
    if attention:
        rng = np.random.default_rng(children[rank + 1])
        bound_a = math.sqrt(3.0 / d)
        attn = AttentionParams(
            rng.uniform(-bound_a, bound_a, size=(heads, d)),
            rng.uniform(-bound_a, bound_a, size=(heads, d)),
        )
    return LayerParams(functionals, mixing, np.zeros(rank), cfg, attn)


def layer_forward(g: LabelledGraph, attributes, params: LayerParams) -> np.ndarray:
    """One layer: walk features on the given attributes, mixed down to (n, R)."""
    attributes = np.asarray(attributes, dtype=np.float64)
    if attributes.shape != (g.n, params.attr_dim):
        raise ValueError(
            f"expected attributes ({g.n}, {params.attr_dim}), got {attributes.shape}"
        )
    graph = g.with_attributes(attributes)
    if params.attention is not None:
        p = attention_transition(graph, params.attention)
    else:
        p = transition_matrix(graph)
    feats = batch_features(graph, p, params.functionals, params.config)
    return feats @ params.mixing.T + params.bias


def model_forward(g: LabelledGraph, model: ModelConfig) -> np.ndarray:
    """Fold the layer stack over the graph and pool node features."""
    x = g.attributes
    for layer in model.layers:
        x = layer_forward(g, x, layer)
    if model.pooling == "mean":
        return x.mean(axis=0)
    return x.sum(axis=0)


def l2_penalty(params: LayerParams, lam: float) -> float:
    """Tensor-norm penalty: lam * sum over functionals and degrees of the
    product of squared component-vector norms of each degree's suffix.

    Equals the squared entry norm of every materialized functional level,
    computed without building any tensors.
    """
    if lam < 0.0:
        raise ValueError("lambda must be non-negative")
    total = 0.0
    deg = params.config.max_degree
    for f in params.functionals:
        sq = np.sum(f.vectors**2, axis=1)  # ||u_s||^2 for s = 1..M
        prod = 1.0
        for m in range(1, deg + 1):
            prod *= sq[deg - m]  # extend the suffix by u_{M-m+1}
            total += prod
    return lam * total


MODEL_FORMAT = "hypograph-model"
MODEL_VERSION = 1


def _config_dict(cfg: FeatureConfig) -> dict:
    return {
        "walk_length": cfg.walk_length,
        "max_degree": cfg.max_degree,
        "rank": cfg.rank,
        "diff": cfg.diff,
        "zero_start": cfg.zero_start,
        "time_param": cfg.time_param,
        "lift_coeffs": list(cfg.lift_coeffs) if cfg.lift_coeffs is not None else None,
    }


def save_params(path: str, model: ModelConfig) -> None:
    """Serialize a model to versioned JSON.

    Field order is fixed: header, then per layer the feature config, the
    u-vectors grouped by functional then position, the mixing matrix in
    row-major order, the bias, and the optional attention weights.  Floats
    round-trip exactly.
    """
    doc = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "pooling": model.pooling,
        "seed": model.seed,
        "layers": [],
    }
    for layer in model.layers:
        entry = _config_dict(layer.config)
        entry["u_vectors"] = [f.vectors.tolist() for f in layer.functionals]
        entry["mixing"] = layer.mixing.tolist()
        entry["bias"] = layer.bias.tolist()
        entry["attention"] = (
            None
            if layer.attention is None
            else {
                "w_source": layer.attention.w_source.tolist(),
                "w_target": layer.attention.w_target.tolist(),
            }
        )
        doc["layers"].append(entry)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)
        fh.write("\n")


def load_params(path: str) -> ModelConfig:
    """Load a model saved by :func:`save_params`."""
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("format") != MODEL_FORMAT:
        raise ValueError(f"not a {MODEL_FORMAT} file: {path}")
    if doc.get("version") != MODEL_VERSION:
        raise ValueError(f"unsupported version {doc.get('version')}")
    layers = []
    for entry in doc["layers"]:
        cfg = FeatureConfig(
            walk_length=entry["walk_length"],
            max_degree=entry["max_degree"],
            rank=entry["rank"],
            diff=entry["diff"],
            zero_start=entry["zero_start"],
            time_param=entry["time_param"],
            lift_coeffs=tuple(entry["lift_coeffs"]) if entry["lift_coeffs"] else None,
        )
        functionals = tuple(
            RankOneFunctional(np.array(v, dtype=np.float64)) for v in entry["u_vectors"]
        )
        attn = None
        if entry.get("attention") is not None:
            attn = AttentionParams(
                np.array(entry["attention"]["w_source"], dtype=np.float64),
                np.array(entry["attention"]["w_target"], dtype=np.float64),
            )
        layers.append(
            LayerParams(
                functionals,
                np.array(entry["mixing"], dtype=np.float64),
                np.array(entry["bias"], dtype=np.float64),
                cfg,
                attn,
            )
        )
    return ModelConfig(tuple(layers), doc["pooling"], doc.get("seed"))
