"""Evaluation metrics: exact Wasserstein-1 between equal-size point sets,
repeated-sampling statistics, MST spread, coverage ratios, the
real/generated distance triple, and Pearson correlation.

wasserstein1 solves the underlying assignment problem exactly (no
entropic or sliced approximation); test-set sizes keep the cubic solver
cheap and let brute-force oracles check it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.spatial.distance import cdist

from .errors import ValidationError

# Large-scale x-vector reference values for report framing; the synthetic
# world cannot and does not try to reproduce them.
REFERENCE_D_RR = 3.492
REFERENCE_D_GG = 270.187
REFERENCE_D_RG = 268.382


def _as_points(a, name: str) -> np.ndarray:
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise ValidationError(f"{name} must be a point list, got shape {arr.shape}")
    return arr


def wasserstein1(a, b) -> float:
    """Exact W1 between equal-size empirical distributions.

    (1/n) times the minimum over perfect matchings of the summed Euclidean
    costs, via an exact minimum-cost assignment solve.
    """
    a = _as_points(a, "A")
    b = _as_points(b, "B")
    if a.shape[0] == 0:
        raise ValidationError("point sets must be non-empty")
    if a.shape[0] != b.shape[0]:
        raise ValidationError(f"sizes differ: {a.shape[0]} vs {b.shape[0]}")
    if a.shape[1] != b.shape[1]:
        raise ValidationError(f"dims differ: {a.shape[1]} vs {b.shape[1]}")
    cost = cdist(a, b)
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].sum() / a.shape[0])


@dataclass(frozen=True)
class RepeatedW1Stats:
    mean: float
    std: float
    runs: int


def repeated_w1(
    generator: Callable[[int, np.random.Generator], np.ndarray],
    reference,
    runs: int = 30,
    rng: np.random.Generator | None = None,
) -> RepeatedW1Stats:
    """Mean and population std of W1 over `runs` independent generated sets.

    `generator(n, rng)` must return n points; each run gets its own child
    generator so results are reproducible and order-independent.
    """
    if runs < 2:
        raise ValidationError("runs must be >= 2")
    reference = _as_points(reference, "reference")
    if rng is None:
        rng = np.random.default_rng(0)
    children = rng.spawn(runs)
    values = np.empty(runs, dtype=np.float64)
    for i in range(runs):
        generated = generator(reference.shape[0], children[i])
        values[i] = wasserstein1(generated, reference)
    return RepeatedW1Stats(
        mean=float(values.mean()), std=float(values.std()), runs=runs
    )


def mst_total_length(points) -> float:
    """Total edge length of a minimum spanning tree of the complete
    Euclidean graph (Prim), 0 for a single point."""
    pts = _as_points(points, "points")
    n = pts.shape[0]
    if n == 0:
        raise ValidationError("point set must be non-empty")
    if n == 1:
        return 0.0
    in_tree = np.zeros(n, dtype=bool)
    in_tree[0] = True
    best = np.linalg.norm(pts - pts[0], axis=1)
    best[0] = np.inf
    total = 0.0
    for _ in range(n - 1):
        nxt = int(np.argmin(np.where(in_tree, np.inf, best)))
        total += float(best[nxt])
        in_tree[nxt] = True
        dist = np.linalg.norm(pts - pts[nxt], axis=1)
        best = np.minimum(best, dist)
    return total


def hq_ratio(scores: Sequence[float], threshold: float) -> float:
    """Fraction of scores strictly above the threshold."""
    scores = np.asarray(scores, dtype=np.float64)
    if scores.size == 0:
        raise ValidationError("score list is empty")
    return float(np.mean(scores > threshold))


def cumulative_histogram(scores: Sequence[float], bin_edges: Sequence[float]) -> np.ndarray:
    """count_j = number of scores <= edge_j, for strictly increasing edges."""
    edges = np.asarray(bin_edges, dtype=np.float64)
    if edges.ndim != 1 or edges.size == 0:
        raise ValidationError("bin edges must be a non-empty vector")
    if np.any(np.diff(edges) <= 0):
        raise ValidationError("bin edges must be strictly increasing")
    scores = np.sort(np.asarray(scores, dtype=np.float64))
    return np.searchsorted(scores, edges, side="right").astype(np.int64)


@dataclass(frozen=True)
class DistanceTriple:
    d_rr: float
    d_gg: float
    d_rg: float


def split_half(points) -> tuple[np.ndarray, np.ndarray]:
    """Contiguous halves of an even-length point list, in storage order."""
    pts = _as_points(points, "points")
    if pts.shape[0] % 2 != 0:
        raise ValidationError(f"cannot halve {pts.shape[0]} points")
    half = pts.shape[0] // 2
    return pts[:half], pts[half:]


def distance_triple(real_a, real_b, gen_a, gen_b) -> DistanceTriple:
    """d_RR = W1(realA, realB); d_GG = W1(genA, genB); d_RG = W1(realA, genA)."""
    sets = [_as_points(s, n) for s, n in
            [(real_a, "real_a"), (real_b, "real_b"), (gen_a, "gen_a"), (gen_b, "gen_b")]]
    sizes = {s.shape[0] for s in sets}
    if len(sizes) != 1:
        raise ValidationError(f"all four sets must be the same size, got {sorted(sizes)}")
    return DistanceTriple(
        d_rr=wasserstein1(sets[0], sets[1]),
        d_gg=wasserstein1(sets[2], sets[3]),
        d_rg=wasserstein1(sets[0], sets[2]),
    )


def min_nn_distance(a, b=None) -> float:
    """Minimum pairwise distance, within `a` (distinct pairs) or across a/b.

    Alternative reading of the distance triple; not used by the main
    reports.
    """
    a = _as_points(a, "a")
    if b is None:
        if a.shape[0] < 2:
            raise ValidationError("need at least two points")
        d = cdist(a, a)
        np.fill_diagonal(d, np.inf)
        return float(d.min())
    b = _as_points(b, "b")
    if a.shape[0] == 0 or b.shape[0] == 0:
        raise ValidationError("point sets must be non-empty")
    return float(cdist(a, b).min())


def pearson(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Sample Pearson correlation coefficient."""
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if xs.ndim != 1 or xs.shape != ys.shape:
        raise ValidationError("xs and ys must be equal-length vectors")
    if xs.size < 2:
        raise ValidationError("need at least two points")
    xc = xs - xs.mean()
    yc = ys - ys.mean()
    vx = float(xc @ xc)
    vy = float(yc @ yc)
    if vx == 0.0 or vy == 0.0:
        raise ValidationError("correlation undefined: zero variance input")
    return float((xc @ yc) / np.sqrt(vx * vy))
