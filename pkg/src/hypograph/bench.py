"""Timing harness for the low-rank recursion's edge-linear scaling claim."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .config import FeatureConfig
from .graphs import LabelledGraph, grid_graph, path_graph, transition_matrix
from .lowrank import RankOneFunctional, batch_features

LINEAR_RATIO_BOUND = 2.5


def time_batch(
    g: LabelledGraph, cfg: FeatureConfig, seed: int = 0, repeats: int = 5
) -> float:
    """Median wall-clock seconds of batch_features; one warm-up run discarded."""
    rng = np.random.default_rng(seed)
    dim = cfg.lift_dim(g.attr_dim)
    functionals = [
        RankOneFunctional(rng.standard_normal((cfg.max_degree, dim)))
        for _ in range(cfg.rank)
    ]
    p = transition_matrix(g)
    batch_features(g, p, functionals, cfg)  # warm-up
    samples = []
    for _ in range(repeats):
        start = time.perf_counter()
        batch_features(g, p, functionals, cfg)
        samples.append(time.perf_counter() - start)
    return float(np.median(samples))


@dataclass
class BenchRow:
    edges: int
    seconds: float
    ns_per_edge: float
    ratio: float | None  # vs. the previous (half-size) row
    linear: bool | None  # ratio within the edge-linear bound


def edge_scaling(
    min_exp: int = 12,
    max_exp: int = 18,
    walk_length: int = 5,
    max_degree: int = 2,
    rank: int = 8,
    repeats: int = 5,
    seed: int = 0,
    topology: str = "path",
) -> list[BenchRow]:
    """Time a geometric ladder of edge counts at fixed (k, M, R, d)."""
    if topology not in ("path", "grid"):
        raise ValueError(f"topology must be 'path' or 'grid', got {topology!r}")
    cfg = FeatureConfig(
        walk_length=walk_length, max_degree=max_degree, rank=rank, diff=True,
        zero_start=True,
    )
    rows: list[BenchRow] = []
    prev = None
    for exp in range(min_exp, max_exp + 1):
        edges = 2**exp
        if topology == "path":
            g = path_graph(edges, seed=seed)
        else:
            side = max(2, int(round((edges / 2) ** 0.5)))
            g = grid_graph(side, seed=seed)
        seconds = time_batch(g, cfg, seed=seed, repeats=repeats)
        ratio = None if prev is None else seconds / prev
        rows.append(
            BenchRow(
                edges=g.num_edges,
                seconds=seconds,
                ns_per_edge=seconds / g.num_edges * 1e9,
                ratio=ratio,
                linear=None if ratio is None else ratio <= LINEAR_RATIO_BOUND,
            )
        )
        prev = seconds
    return rows


def degree_scaling(
    edges_exp: int = 15,
    walk_length: int = 5,
    rank: int = 8,
    degrees: tuple[int, int] = (2, 4),
    repeats: int = 5,
    seed: int = 0,
) -> dict:
    """Time the recursion at two tensor degrees on one fixed path graph."""
    g = path_graph(2**edges_exp, seed=seed)
    times = {}
    for deg in degrees:
        cfg = FeatureConfig(
            walk_length=walk_length, max_degree=deg, rank=rank, diff=True,
            zero_start=True,
        )
        times[deg] = time_batch(g, cfg, seed=seed, repeats=repeats)
    lo, hi = degrees
    return {
        "edges": g.num_edges,
        "seconds": times,
        "ratio": times[hi] / times[lo],
    }
