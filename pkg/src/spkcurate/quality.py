"""Quality models: the high-quality threshold, the k-NN data-quality
estimator, and the KDE coverage proxy standing in for zero-shot synthesis
quality of a model trained on the current corpus.

Scores live on the [1, 5] pseudo-MOS scale.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import ValidationError

MOS_MIN = 1.0
MOS_MAX = 5.0


def validate_score(value: float, what: str = "score") -> float:
    value = float(value)
    if not np.isfinite(value) or not MOS_MIN <= value <= MOS_MAX:
        raise ValidationError(f"{what} {value!r} outside [{MOS_MIN}, {MOS_MAX}]")
    return value


def clamp_score(value: float) -> float:
    return float(min(MOS_MAX, max(MOS_MIN, value)))


def derive_threshold(reference_scores: Sequence[float]) -> float:
    """theta_hq: the minimum quality score observed among reference speakers."""
    if len(reference_scores) == 0:
        raise ValidationError("reference score list is empty")
    scores = [validate_score(s, "reference score") for s in reference_scores]
    return min(scores)


@dataclass(frozen=True)
class KnnQualityEstimator:
    """k-nearest-neighbor regressor over (embedding, score) training points.

    Predictions are the mean score of the k nearest stored points under
    Euclidean distance, ties resolved by insertion order.
    """

    k: int
    points: np.ndarray
    scores: np.ndarray

    def __post_init__(self):
        points = np.asarray(self.points, dtype=np.float64)
        scores = np.asarray(self.scores, dtype=np.float64)
        if points.ndim != 2 or scores.ndim != 1 or points.shape[0] != scores.shape[0]:
            raise ValidationError("points must be (N, d) with one score per point")
        if self.k < 1:
            raise ValidationError("k must be >= 1")
        if points.shape[0] < self.k:
            raise ValidationError(
                f"need at least k={self.k} training points, got {points.shape[0]}"
            )
        for s in scores:
            validate_score(s)
        points.setflags(write=False)
        scores.setflags(write=False)
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "scores", scores)

    @property
    def dim(self) -> int:
        return int(self.points.shape[1])


def fit_estimator(
    labeled: Iterable[tuple[np.ndarray, float]], k: int = 5
) -> KnnQualityEstimator:
    labeled = list(labeled)
    if not labeled:
        raise ValidationError("no labeled points")
    points = np.asarray([np.asarray(v, dtype=np.float64) for v, _ in labeled])
    scores = np.asarray([float(s) for _, s in labeled])
    return KnnQualityEstimator(k=k, points=points, scores=scores)


def predict_quality(est: KnnQualityEstimator, x: np.ndarray) -> float:
    return float(predict_quality_batch(est, np.asarray(x, dtype=np.float64)[None, :])[0])


def predict_quality_batch(est: KnnQualityEstimator, queries: np.ndarray) -> np.ndarray:
    """Vectorized k-NN prediction for a (M, d) query matrix."""
    queries = np.asarray(queries, dtype=np.float64)
    if queries.ndim != 2 or queries.shape[1] != est.dim:
        raise ValidationError(
            f"queries must be (M, {est.dim}), got shape {queries.shape}"
        )
    out = np.empty(queries.shape[0], dtype=np.float64)
    chunk = max(1, int(2e7) // max(1, est.points.shape[0]))
    for start in range(0, queries.shape[0], chunk):
        q = queries[start:start + chunk]
        d2 = (
            np.sum(q * q, axis=1)[:, None]
            - 2.0 * q @ est.points.T
            + np.sum(est.points * est.points, axis=1)[None, :]
        )
        # stable sort keeps insertion order among exact distance ties
        nearest = np.argsort(d2, axis=1, kind="stable")[:, : est.k]
        out[start:start + chunk] = est.scores[nearest].mean(axis=1)
    return out


@dataclass(frozen=True)
class ProxyParams:
    """Coverage proxy shape: quality = clamp(base + gain * kernel_sum)."""

    bandwidth: float
    base_quality: float
    gain: float

    def __post_init__(self):
        if self.bandwidth <= 0:
            raise ValidationError("bandwidth must be > 0")


@dataclass(frozen=True)
class CoverageProxy:
    """Stand-in for a synthesis model trained on a corpus.

    Zero-shot quality for a speaker rises with the Gaussian-kernel mass of
    corpus embeddings around them; an empty corpus scores base_quality.
    """

    corpus_embeddings: np.ndarray
    bandwidth: float
    base_quality: float
    gain: float

    def __post_init__(self):
        emb = np.asarray(self.corpus_embeddings, dtype=np.float64)
        if emb.ndim != 2:
            raise ValidationError("corpus_embeddings must be a (m, d) matrix")
        if self.bandwidth <= 0:
            raise ValidationError("bandwidth must be > 0")
        emb.setflags(write=False)
        object.__setattr__(self, "corpus_embeddings", emb)


def build_proxy(corpus_embeddings: np.ndarray, params: ProxyParams) -> CoverageProxy:
    return CoverageProxy(
        corpus_embeddings=corpus_embeddings,
        bandwidth=params.bandwidth,
        base_quality=params.base_quality,
        gain=params.gain,
    )


def coverage_density(proxy: CoverageProxy, x: np.ndarray) -> float:
    return float(coverage_density_batch(proxy, np.asarray(x, dtype=np.float64)[None, :])[0])


def coverage_density_batch(proxy: CoverageProxy, queries: np.ndarray) -> np.ndarray:
    """Unnormalized kernel sum sum_i exp(-||x - c_i||^2 / (2 h^2)) per query row."""
    queries = np.asarray(queries, dtype=np.float64)
    if queries.ndim != 2:
        raise ValidationError("queries must be a (M, d) matrix")
    emb = proxy.corpus_embeddings
    if emb.shape[0] == 0:
        return np.zeros(queries.shape[0], dtype=np.float64)
    if queries.shape[1] != emb.shape[1]:
        raise ValidationError(
            f"query dim {queries.shape[1]} does not match corpus dim {emb.shape[1]}"
        )
    inv = 1.0 / (2.0 * proxy.bandwidth * proxy.bandwidth)
    out = np.empty(queries.shape[0], dtype=np.float64)
    chunk = max(1, int(2e7) // max(1, emb.shape[0]))
    for start in range(0, queries.shape[0], chunk):
        q = queries[start:start + chunk]
        d2 = (
            np.sum(q * q, axis=1)[:, None]
            - 2.0 * q @ emb.T
            + np.sum(emb * emb, axis=1)[None, :]
        )
        np.maximum(d2, 0.0, out=d2)
        out[start:start + chunk] = np.exp(-d2 * inv).sum(axis=1)
    return out


def zero_shot_quality(proxy: CoverageProxy, speaker: np.ndarray) -> float:
    return clamp_score(proxy.base_quality + proxy.gain * coverage_density(proxy, speaker))


def zero_shot_quality_batch(proxy: CoverageProxy, speakers: np.ndarray) -> np.ndarray:
    raw = proxy.base_quality + proxy.gain * coverage_density_batch(proxy, speakers)
    return np.clip(raw, MOS_MIN, MOS_MAX)


def save_estimator(est: KnnQualityEstimator, path) -> None:
    payload = {
        "k": est.k,
        "points": est.points.tolist(),
        "scores": est.scores.tolist(),
    }
    Path(path).write_text(json.dumps(payload) + "\n", encoding="utf-8")


def load_estimator(path) -> KnnQualityEstimator:
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    return KnnQualityEstimator(
        k=int(obj["k"]),
        points=np.asarray(obj["points"], dtype=np.float64),
        scores=np.asarray(obj["scores"], dtype=np.float64),
    )
