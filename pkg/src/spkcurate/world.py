"""Deterministic synthetic candidate pool with hidden ground truth.

The world draws unique speakers from a separated Gaussian mixture whose
clusters differ in data quality and in spatial width (lower-quality
clusters are broader). Within-cluster variation has a geometrically
decaying per-dimension spectrum, so a small principal subspace carries
most of the energy, as with real speaker embeddings. A configurable
fraction of speakers is re-emitted as a second "video" with small
spectrum-shaped jitter, appended as a trailing block that mirrors the
order of the originals. Each emitted sample carries screening attributes
plus a hidden ground-truth data-quality label.

Ground-truth synthesis quality for a speaker given a corpus uses the same
coverage-kernel family as the selector's proxy, with its own parameters
and a per-speaker difficulty penalty that grows as intrinsic data quality
drops. The selector must never touch it; only evaluation code may.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .core import (
    Corpus,
    DataSample,
    Embedding,
    EmbeddingSet,
    load_embeddings,
    save_embeddings,
)
from .errors import ValidationError
from .quality import MOS_MAX, MOS_MIN, ProxyParams
from .screening import ScreeningMetrics
from .seeds import rng_for


@dataclass(frozen=True)
class WorldConfig:
    n_speakers: int = 3000
    embed_dim: int = 32
    n_clusters: int = 8
    cluster_separation: float = 12.0
    cluster_std: float = 1.0
    cluster_width_lo: float = 1.0
    cluster_width_hi: float = 1.0
    within_spectrum_decay: float = 0.85
    # first weight below 1 makes an underrepresented cluster that stays
    # informative after the initial pass
    cluster_population_weights: tuple[float, ...] = (0.3, 1, 1, 1, 1, 1, 1, 1)
    quality_lo: float = 3.5
    quality_hi: float = 4.5
    quality_slope: float = 0.05
    speaker_quality_std: float = 0.12
    sample_quality_noise_std: float = 0.05
    duplicate_rate: float = 1.0
    duplicate_jitter: float = 0.05
    alignment_clean_mean: float = 0.9
    alignment_clean_std: float = 0.04
    alignment_bad_mean: float = 0.55
    alignment_bad_std: float = 0.08
    alignment_bad_rate: float = 0.05
    variance_clean_lo: float = 0.1
    variance_clean_hi: float = 0.6
    variance_bad_lo: float = 2.0
    variance_bad_hi: float = 4.0
    bad_video_rate: float = 0.05
    n_reference: int = 20
    reference_lo: float = 3.35
    reference_hi: float = 3.75
    proxy_bandwidth: float = 3.0
    proxy_base: float = 1.8
    proxy_gain: float = 0.063
    true_bandwidth: float = 3.0
    true_base: float = 2.2
    true_gain: float = 0.045
    difficulty_scale: float = 0.35
    difficulty_pivot: float = 4.6
    seed: int = 0

    def __post_init__(self):
        if min(self.n_speakers, self.embed_dim, self.n_clusters, self.n_reference) < 1:
            raise ValidationError("counts must be positive")
        for name in ("duplicate_rate", "alignment_bad_rate", "bad_video_rate"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValidationError(f"{name} must lie in [0, 1]")
        if not 0.0 < self.within_spectrum_decay <= 1.0:
            raise ValidationError("within_spectrum_decay must lie in (0, 1]")
        if self.cluster_std <= 0 or self.proxy_bandwidth <= 0 or self.true_bandwidth <= 0:
            raise ValidationError("scales must be positive")
        object.__setattr__(
            self,
            "cluster_population_weights",
            tuple(float(w) for w in self.cluster_population_weights),
        )
        if len(self.cluster_population_weights) != self.n_clusters:
            raise ValidationError(
                "cluster_population_weights must have one entry per cluster"
            )
        if any(w <= 0 for w in self.cluster_population_weights):
            raise ValidationError("cluster_population_weights must be positive")


@dataclass(frozen=True)
class World:
    config: WorldConfig
    samples: tuple[DataSample, ...]
    data_quality: np.ndarray
    difficulty: np.ndarray
    cluster: np.ndarray
    speaker_index: np.ndarray
    reference_scores: tuple[float, ...]

    def __post_init__(self):
        for name in ("data_quality", "difficulty"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        for name in ("cluster", "speaker_index"):
            arr = np.asarray(getattr(self, name), dtype=np.int64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        ids = [s.sample_id for s in self.samples]
        if len(set(ids)) != len(ids):
            raise ValidationError("world sample ids must be unique")
        object.__setattr__(self, "_index", {sid: i for i, sid in enumerate(ids)})

    def __len__(self) -> int:
        return len(self.samples)

    def index_of(self, sample_id: str) -> int:
        try:
            return self._index[sample_id]
        except KeyError:
            raise ValidationError(f"unknown speaker {sample_id!r}") from None

    def embeddings_matrix(self) -> np.ndarray:
        return np.stack([s.speaker_embedding.vector for s in self.samples])

    def embedding_set(self) -> EmbeddingSet:
        return EmbeddingSet(
            dim=self.config.embed_dim,
            items=tuple(s.speaker_embedding for s in self.samples),
        )

    def measure_data_quality(self, sample_ids: Sequence[str]) -> np.ndarray:
        """Labeling oracle: ground-truth data quality for the given samples.

        Stands in for the expensive measurement loop that labels candidate
        data; selection code may consume these labels only through a
        fitted estimator.
        """
        return np.array([self.data_quality[self.index_of(sid)] for sid in sample_ids])

    def proxy_params(self) -> ProxyParams:
        cfg = self.config
        return ProxyParams(
            bandwidth=cfg.proxy_bandwidth,
            base_quality=cfg.proxy_base,
            gain=cfg.proxy_gain,
        )

    def sample_query_points(self, n: int, seed: int = 0) -> np.ndarray:
        """Fresh draws from the speaker population (not candidates)."""
        cfg = self.config
        rng = rng_for(cfg.seed, "world-queries", seed)
        means, widths = _cluster_geometry(cfg)
        scales = _within_scales(cfg)
        ks = rng.integers(0, cfg.n_clusters, size=n)
        noise = rng.standard_normal((n, cfg.embed_dim))
        return means[ks] + noise * (widths[ks] * cfg.cluster_std)[:, None] * scales[None, :]


def _within_scales(cfg: WorldConfig) -> np.ndarray:
    """Per-dimension scale factors of the within-cluster spectrum."""
    return cfg.within_spectrum_decay ** np.arange(cfg.embed_dim)


def _cluster_geometry(cfg: WorldConfig) -> tuple[np.ndarray, np.ndarray]:
    """Cluster means (separated, axis-aligned plus seeded wobble) and widths."""
    rng = rng_for(cfg.seed, "world-geometry")
    d, k = cfg.embed_dim, cfg.n_clusters
    means = np.zeros((k, d))
    for j in range(k):
        means[j, j % d] += 1.0
    wobble = rng.standard_normal((k, d)) * (0.1 / np.sqrt(d))
    means = (means + wobble) * cfg.cluster_separation
    # lower-quality clusters (low index) are spatially broader
    widths = np.linspace(cfg.cluster_width_hi, cfg.cluster_width_lo, k)
    return means, widths


def _cluster_quality_bases(cfg: WorldConfig) -> np.ndarray:
    return np.linspace(cfg.quality_lo, cfg.quality_hi, cfg.n_clusters)


def generate_world(cfg: WorldConfig) -> World:
    """All candidate samples, labels, and reference scores for one seed."""
    rng = rng_for(cfg.seed, "world-body")
    d, k, n = cfg.embed_dim, cfg.n_clusters, cfg.n_speakers
    means, widths = _cluster_geometry(cfg)
    bases = _cluster_quality_bases(cfg)
    scales = _within_scales(cfg)

    # cluster sizes from the population weights (largest remainder), then shuffled
    weights = np.asarray(cfg.cluster_population_weights)
    exact = weights / weights.sum() * n
    counts = np.floor(exact).astype(int)
    order = np.argsort(-(exact - counts), kind="stable")
    for j in order[: n - counts.sum()]:
        counts[j] += 1
    assignment = np.repeat(np.arange(k), counts)
    assignment = assignment[rng.permutation(n)]

    sigmas = widths[assignment] * cfg.cluster_std
    unit_noise = rng.standard_normal((n, d))
    embeddings = means[assignment] + unit_noise * sigmas[:, None] * scales[None, :]

    # smooth within-cluster quality variation along a per-cluster direction
    directions = rng.standard_normal((k, d))
    directions /= np.linalg.norm(directions, axis=1)[:, None]
    along = np.einsum("ij,ij->i", unit_noise, directions[assignment])
    speaker_quality = (
        bases[assignment]
        + cfg.quality_slope * along
        + cfg.speaker_quality_std * rng.standard_normal(n)
    )
    speaker_quality = np.clip(speaker_quality, MOS_MIN, MOS_MAX)
    difficulty = cfg.difficulty_scale * np.maximum(
        0.0, cfg.difficulty_pivot - speaker_quality
    )

    n_dup = int(np.floor(cfg.duplicate_rate * n + 0.5))
    dup_of = np.arange(n_dup)  # trailing block mirrors the original order
    jitter = (
        rng.standard_normal((n_dup, d))
        * (cfg.duplicate_jitter * sigmas[dup_of])[:, None]
        * scales[None, :]
    )

    total = n + n_dup
    speaker_index = np.concatenate([np.arange(n), dup_of])
    all_embeddings = np.concatenate([embeddings, embeddings[dup_of] + jitter])
    all_cluster = assignment[speaker_index]

    labels = np.clip(
        speaker_quality[speaker_index]
        + cfg.sample_quality_noise_std * rng.standard_normal(total),
        MOS_MIN,
        MOS_MAX,
    )

    bad_align = rng.random(total) < cfg.alignment_bad_rate
    alignment = np.where(
        bad_align,
        cfg.alignment_bad_mean + cfg.alignment_bad_std * rng.standard_normal(total),
        cfg.alignment_clean_mean + cfg.alignment_clean_std * rng.standard_normal(total),
    )
    bad_video = rng.random(total) < cfg.bad_video_rate
    group_var = np.where(
        bad_video,
        rng.uniform(cfg.variance_bad_lo, cfg.variance_bad_hi, total),
        rng.uniform(cfg.variance_clean_lo, cfg.variance_clean_hi, total),
    )
    durations = rng.uniform(2.0, 10.0, total)

    width = len(str(total))
    samples = tuple(
        DataSample(
            sample_id=f"s{i:0{width}d}",
            source_id=f"v{i:0{width}d}",
            speaker_embedding=Embedding(f"s{i:0{width}d}", all_embeddings[i]),
            duration_sec=float(durations[i]),
            screening=ScreeningMetrics(
                alignment_score=float(alignment[i]),
                group_variance=float(abs(group_var[i])),
            ),
        )
        for i in range(total)
    )

    reference = rng.uniform(cfg.reference_lo, cfg.reference_hi, cfg.n_reference)

    return World(
        config=cfg,
        samples=samples,
        data_quality=labels,
        difficulty=difficulty[speaker_index],
        cluster=all_cluster,
        speaker_index=speaker_index,
        reference_scores=tuple(float(r) for r in reference),
    )


def _kernel_sum(targets: np.ndarray, points: np.ndarray, bandwidth: float) -> np.ndarray:
    if points.shape[0] == 0:
        return np.zeros(targets.shape[0])
    inv = 1.0 / (2.0 * bandwidth * bandwidth)
    out = np.empty(targets.shape[0])
    chunk = max(1, int(2e7) // max(1, points.shape[0]))
    for start in range(0, targets.shape[0], chunk):
        q = targets[start:start + chunk]
        d2 = (
            np.sum(q * q, axis=1)[:, None]
            - 2.0 * q @ points.T
            + np.sum(points * points, axis=1)[None, :]
        )
        np.maximum(d2, 0.0, out=d2)
        out[start:start + chunk] = np.exp(-d2 * inv).sum(axis=1)
    return out


def _corpus_points(world: World, corpus: Corpus) -> np.ndarray:
    if len(corpus) == 0:
        return np.empty((0, world.config.embed_dim))
    rows = [world.index_of(sid) for sid in corpus.sample_ids()]
    return world.embeddings_matrix()[rows]


def ground_truth_synthesis_quality(world: World, sample_id: str, corpus: Corpus) -> float:
    """Hidden oracle: synthesis quality for one speaker under a corpus.

    Evaluation-only; the selection path must never call this.
    """
    i = world.index_of(sample_id)
    target = world.samples[i].speaker_embedding.vector[None, :]
    kern = _kernel_sum(target, _corpus_points(world, corpus), world.config.true_bandwidth)[0]
    raw = world.config.true_base + world.config.true_gain * kern - world.difficulty[i]
    return float(np.clip(raw, MOS_MIN, MOS_MAX))


def ground_truth_scores(world: World, corpus: Corpus) -> np.ndarray:
    """Vectorized ground_truth_synthesis_quality over every world sample."""
    targets = world.embeddings_matrix()
    kern = _kernel_sum(targets, _corpus_points(world, corpus), world.config.true_bandwidth)
    raw = world.config.true_base + world.config.true_gain * kern - world.difficulty
    return np.clip(raw, MOS_MIN, MOS_MAX)


def save_world(world: World, directory) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    save_embeddings(world.embedding_set(), directory / "embeddings.csv")
    rows = []
    for i, s in enumerate(world.samples):
        rows.append(
            {
                "sample_id": s.sample_id,
                "source_id": s.source_id,
                "duration_sec": s.duration_sec,
                "alignment_score": s.screening.alignment_score,
                "group_variance": s.screening.group_variance,
                "data_quality": float(world.data_quality[i]),
                "difficulty": float(world.difficulty[i]),
                "cluster": int(world.cluster[i]),
                "speaker_index": int(world.speaker_index[i]),
            }
        )
    payload = {
        "config": asdict(world.config),
        "reference_scores": list(world.reference_scores),
        "samples": rows,
    }
    (directory / "world.json").write_text(
        json.dumps(payload, sort_keys=True) + "\n", encoding="utf-8"
    )


def load_world(directory) -> World:
    directory = Path(directory)
    world_file = directory / "world.json"
    if not world_file.exists():
        raise ValidationError(f"world file not found: {world_file}")
    payload = json.loads(world_file.read_text(encoding="utf-8"))
    cfg = WorldConfig(**payload["config"])
    embeddings = load_embeddings(directory / "embeddings.csv")
    items = {e.speaker_id: e for e in embeddings}
    samples = []
    for row in payload["samples"]:
        samples.append(
            DataSample(
                sample_id=row["sample_id"],
                source_id=row["source_id"],
                speaker_embedding=items[row["sample_id"]],
                duration_sec=float(row["duration_sec"]),
                screening=ScreeningMetrics(
                    alignment_score=float(row["alignment_score"]),
                    group_variance=float(row["group_variance"]),
                ),
            )
        )
    return World(
        config=cfg,
        samples=tuple(samples),
        data_quality=np.array([r["data_quality"] for r in payload["samples"]]),
        difficulty=np.array([r["difficulty"] for r in payload["samples"]]),
        cluster=np.array([r["cluster"] for r in payload["samples"]]),
        speaker_index=np.array([r["speaker_index"] for r in payload["samples"]]),
        reference_scores=tuple(payload["reference_scores"]),
    )
