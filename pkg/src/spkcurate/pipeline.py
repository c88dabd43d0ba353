"""End-to-end experiment orchestration over a synthetic world.

Pure in-memory building blocks used by both the CLI and the acceptance
suite: partitioning and screening the candidate pool, running the four
selection methods (unselected, initial corpus, baseline, ours),
ground-truth evaluation, the estimator-agreement check, and the latent
speaker-generation study (whitening + diffusion + GMM baselines).

Selection functions consume only the labeling oracle
(world.measure_data_quality) and the selector-visible proxy; the hidden
synthesis-quality oracle is touched exclusively by evaluate_corpus.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import Corpus, DataSample, corpus_merge
from .diffusion import (
    EpsilonNet,
    NoiseSchedule,
    TrainConfig,
    init_epsilon_net,
    make_schedule,
    sample,
    train,
)
from .errors import ValidationError
from .gmm import GmmModel, fit_em, gmm_sample
from .metrics import (
    DistanceTriple,
    RepeatedW1Stats,
    distance_triple,
    hq_ratio,
    mst_total_length,
    pearson,
    repeated_w1,
    split_half,
)
from .planner import PartitionPlan, shuffle_and_partition
from .quality import (
    KnnQualityEstimator,
    build_proxy,
    derive_threshold,
    fit_estimator,
    predict_quality_batch,
)
from .screening import RejectedSample, ScreeningThresholds, screen
from .seeds import rng_for
from .selection import (
    IterationReport,
    SelectionDecision,
    baseline_select,
    evaluate_candidates,
    run_loop,
)
from .whitening import WhiteningModel, choose_dprime, fit_whitening, transform
from .world import World, ground_truth_scores


@dataclass(frozen=True)
class SelectionSettings:
    ratios: tuple[float, ...] = (0.1, 0.9)
    plan_seed: int = 7
    estimator_k: int = 5
    min_alignment: float = 0.75
    max_group_variance: float = 1.2

    @property
    def thresholds(self) -> ScreeningThresholds:
        return ScreeningThresholds(self.min_alignment, self.max_group_variance)


@dataclass(frozen=True)
class GenerationSettings:
    energy: float = 0.99
    timesteps: int = 200
    beta_start: float = 1e-4
    beta_end: float = 0.05
    hidden: int = 56
    t_emb_dim: int = 16
    epochs: int = 400
    batch_size: int = 64
    learning_rate: float = 1e-3
    patience: int = 60
    gmm_components: tuple[int, ...] = (1, 2, 3, 4, 5, 6, 7, 8, 9, 10)
    w1_runs: int = 30
    seed: int = 11


def partition_pool(
    world: World, settings: SelectionSettings
) -> list[list[DataSample]]:
    """Shuffle source ids and split the sample pool into plan segments."""
    by_source: dict[str, list[DataSample]] = {}
    order: list[str] = []
    for s in world.samples:
        if s.source_id not in by_source:
            by_source[s.source_id] = []
            order.append(s.source_id)
        by_source[s.source_id].append(s)
    plan = PartitionPlan(ratios=settings.ratios, seed=settings.plan_seed)
    partition = shuffle_and_partition(order, plan)
    return [
        [s for src in segment for s in by_source[src]]
        for segment in partition.segments
    ]


def screen_segments(
    segments: list[list[DataSample]], settings: SelectionSettings
) -> tuple[list[list[DataSample]], list[RejectedSample]]:
    kept_segments: list[list[DataSample]] = []
    rejected: list[RejectedSample] = []
    for seg in segments:
        kept, rej = screen(seg, settings.thresholds)
        kept_segments.append(kept)
        rejected.extend(rej)
    return kept_segments, rejected


def fit_segment_estimator(
    world: World, samples: list[DataSample], k: int
) -> KnnQualityEstimator:
    """Label the given samples via the measurement oracle and fit the k-NN."""
    if not samples:
        raise ValidationError("cannot fit the estimator on an empty segment")
    labels = world.measure_data_quality([s.sample_id for s in samples])
    return fit_estimator(
        zip((s.speaker_embedding.vector for s in samples), labels), k=k
    )


@dataclass(frozen=True)
class SelectionOutcome:
    corpus: Corpus
    reports: tuple[IterationReport, ...]
    theta_hq: float
    estimator: KnnQualityEstimator
    screened_segments: tuple[tuple[DataSample, ...], ...]
    rejected: tuple[RejectedSample, ...]


def select_ours(world: World, settings: SelectionSettings) -> SelectionOutcome:
    """The full iterative loop: fit on segment 1, then dual-criteria steps."""
    segments = partition_pool(world, settings)
    screened, rejected = screen_segments(segments, settings)
    theta = derive_threshold(world.reference_scores)
    est = fit_segment_estimator(world, screened[0], settings.estimator_k)
    corpus, reports = run_loop(
        screened, est, theta, world.proxy_params(), name="ours"
    )
    return SelectionOutcome(
        corpus=corpus,
        reports=tuple(reports),
        theta_hq=theta,
        estimator=est,
        screened_segments=tuple(tuple(seg) for seg in screened),
        rejected=tuple(rejected),
    )


def select_initial(world: World, settings: SelectionSettings) -> SelectionOutcome:
    """Only the initial corpus (first segment, quality criterion alone)."""
    outcome = select_ours(world, settings)
    c1_ids = [
        e.sample_id for e in outcome.corpus.entries if e.iteration_added == 1
    ]
    corpus = corpus_merge(Corpus.empty("initial"), c1_ids, k=1)
    return SelectionOutcome(
        corpus=corpus,
        reports=outcome.reports[:1],
        theta_hq=outcome.theta_hq,
        estimator=outcome.estimator,
        screened_segments=outcome.screened_segments,
        rejected=outcome.rejected,
    )


def select_unselected(world: World, settings: SelectionSettings) -> Corpus:
    """Everything that survives screening, in pool order."""
    segments = partition_pool(world, settings)
    screened, _ = screen_segments(segments, settings)
    ids = [s.sample_id for seg in screened for s in seg]
    return corpus_merge(Corpus.empty("unselected"), ids, k=1)


def select_baseline(
    world: World, settings: SelectionSettings, n: int
) -> tuple[Corpus, KnnQualityEstimator]:
    """Size-n top-quality selection with the estimator fit on all candidates."""
    segments = partition_pool(world, settings)
    screened, _ = screen_segments(segments, settings)
    pool = [s for seg in screened for s in seg]
    est = fit_segment_estimator(world, pool, settings.estimator_k)
    return baseline_select(pool, est, n, name="baseline"), est


def decision_logs(
    world: World, outcome: SelectionOutcome
) -> list[list[SelectionDecision]]:
    """Re-derive per-iteration decisions (same pure evaluation the loop used)."""
    logs: list[list[SelectionDecision]] = []
    by_id = {s.sample_id: s for seg in outcome.screened_segments for s in seg}
    for k, segment in enumerate(outcome.screened_segments, start=1):
        if k == 1:
            logs.append(
                evaluate_candidates(segment, outcome.estimator, outcome.theta_hq)
            )
            continue
        prev_ids = [
            e.sample_id
            for e in outcome.corpus.entries
            if e.iteration_added < k
        ]
        prev_points = (
            np.stack([by_id[i].speaker_embedding.vector for i in prev_ids])
            if prev_ids
            else np.empty((0, world.config.embed_dim))
        )
        proxy = build_proxy(prev_points, world.proxy_params())
        logs.append(
            evaluate_candidates(
                segment, outcome.estimator, outcome.theta_hq, proxy=proxy
            )
        )
    return logs


@dataclass(frozen=True)
class CorpusEvaluation:
    scores: np.ndarray
    hq_ratio: float
    mst_spread: float

    def __post_init__(self):
        arr = np.asarray(self.scores, dtype=np.float64)
        arr.setflags(write=False)
        object.__setattr__(self, "scores", arr)


def evaluate_corpus(world: World, corpus: Corpus, theta_hq: float) -> CorpusEvaluation:
    """Ground-truth scores for every world speaker under `corpus`."""
    scores = ground_truth_scores(world, corpus)
    ratio = hq_ratio(scores, theta_hq)
    mask = scores > theta_hq
    spread = (
        mst_total_length(world.embeddings_matrix()[mask]) if mask.any() else 0.0
    )
    return CorpusEvaluation(scores=scores, hq_ratio=ratio, mst_spread=spread)


@dataclass(frozen=True)
class AgreementResult:
    r: float
    small_predictions: np.ndarray
    full_predictions: np.ndarray


def estimator_agreement(
    world: World,
    settings: SelectionSettings,
    n_queries: int = 400,
    query_seed: int = 1,
) -> AgreementResult:
    """Pearson r between the segment-1 estimator and the all-data estimator."""
    segments = partition_pool(world, settings)
    screened, _ = screen_segments(segments, settings)
    pool = [s for seg in screened for s in seg]
    est_small = fit_segment_estimator(world, screened[0], settings.estimator_k)
    est_full = fit_segment_estimator(world, pool, settings.estimator_k)
    queries = world.sample_query_points(n_queries, seed=query_seed)
    small = predict_quality_batch(est_small, queries)
    full = predict_quality_batch(est_full, queries)
    return AgreementResult(
        r=pearson(small, full), small_predictions=small, full_predictions=full
    )


@dataclass(frozen=True)
class LatentModels:
    whitening: WhiteningModel
    schedule: NoiseSchedule
    net: EpsilonNet
    history: tuple[tuple[int, float, float], ...]
    gmms: dict[int, GmmModel]
    y_train: np.ndarray
    y_val: np.ndarray
    y_test: np.ndarray
    y_all: np.ndarray


def build_latent_models(
    matrix: np.ndarray, gen: GenerationSettings, fit_gmms: bool = True
) -> LatentModels:
    """Whitening + principal split, diffusion training, and GMM baselines.

    The matrix is split 8:1:1 (train/val/test) after a seeded shuffle; all
    models are fit on the train split in the whitened principal space.
    """
    matrix = np.asarray(matrix, dtype=np.float64)
    wm = fit_whitening(matrix)
    d_prime = choose_dprime(wm.eigvals, gen.energy)
    wm = wm.with_d_prime(d_prime)
    y_all, _ = transform(wm, matrix)

    n = matrix.shape[0]
    rng = rng_for(gen.seed, "latent-split")
    order = rng.permutation(n)
    n_train = int(np.floor(0.8 * n + 0.5))
    n_val = int(np.floor(0.1 * n + 0.5))
    idx_train = order[:n_train]
    idx_val = order[n_train:n_train + n_val]
    idx_test = order[n_train + n_val:]

    y_train, y_val, y_test = y_all[idx_train], y_all[idx_val], y_all[idx_test]

    sched = make_schedule(gen.timesteps, gen.beta_start, gen.beta_end)
    net = init_epsilon_net(
        d_prime, hidden=gen.hidden, t_emb_dim=gen.t_emb_dim, seed=gen.seed
    )
    cfg = TrainConfig(
        epochs=gen.epochs,
        batch_size=gen.batch_size,
        learning_rate=gen.learning_rate,
        seed=gen.seed,
        patience=gen.patience,
    )
    net, history = train(net, sched, y_train, cfg, y_val=y_val)

    gmms: dict[int, GmmModel] = {}
    if fit_gmms:
        for m in gen.gmm_components:
            gmms[m] = fit_em(y_train, m, seed=gen.seed)

    return LatentModels(
        whitening=wm,
        schedule=sched,
        net=net,
        history=tuple(history),
        gmms=gmms,
        y_train=y_train,
        y_val=y_val,
        y_test=y_test,
        y_all=y_all,
    )


def w1_comparison(models: LatentModels, gen: GenerationSettings) -> list[tuple[str, RepeatedW1Stats]]:
    """Repeated-W1 of each generator against the held-out test latents."""
    rows: list[tuple[str, RepeatedW1Stats]] = []

    def diffusion_sampler(n: int, rng: np.random.Generator) -> np.ndarray:
        return sample(models.net, models.schedule, n, rng)

    rows.append(
        (
            "diffusion",
            repeated_w1(
                diffusion_sampler,
                models.y_test,
                runs=gen.w1_runs,
                rng=rng_for(gen.seed, "w1-diffusion"),
            ),
        )
    )
    for m, model in sorted(models.gmms.items()):
        def gmm_sampler(n: int, rng: np.random.Generator, _model=model) -> np.ndarray:
            return gmm_sample(_model, n, rng)

        rows.append(
            (
                f"gmm-{m}",
                repeated_w1(
                    gmm_sampler,
                    models.y_test,
                    runs=gen.w1_runs,
                    rng=rng_for(gen.seed, "w1-gmm", m),
                ),
            )
        )
    return rows


def mirrored_real_latents(world: World, y_all: np.ndarray, m: int) -> np.ndarray:
    """2m real latents: the first m originals then their m re-emissions.

    Contiguous halving of this block pairs each speaker with their second
    video when the world carries duplicates.
    """
    n_unique = world.config.n_speakers
    n_dup = len(world) - n_unique
    if n_dup >= m:
        idx = np.concatenate([np.arange(m), n_unique + np.arange(m)])
    else:
        if 2 * m > len(world):
            raise ValidationError(f"world too small for a {2 * m}-point triple")
        idx = np.arange(2 * m)
    return y_all[idx]


def latent_triple(
    world: World, models: LatentModels, m: int, seed: int = 23
) -> DistanceTriple:
    """Distance triple in the principal latent space, per the halving convention."""
    reals = mirrored_real_latents(world, models.y_all, m)
    real_a, real_b = split_half(reals)
    gen_a = sample(models.net, models.schedule, m, rng_for(seed, "triple-gen", 0))
    gen_b = sample(models.net, models.schedule, m, rng_for(seed, "triple-gen", 1))
    return distance_triple(real_a, real_b, gen_a, gen_b)
