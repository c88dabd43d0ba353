"""Corpus construction: initial selection and the iterative dual-criteria
acquisition loop.

A candidate is added at step k when (1) its predicted data quality exceeds
theta_hq and (2) the zero-shot synthesis quality under the proxy built
from the previous corpus falls below theta_hq. Both comparisons are
strict; equality fails both.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import Corpus, DataSample, corpus_merge
from .errors import ValidationError
from .quality import (
    CoverageProxy,
    KnnQualityEstimator,
    ProxyParams,
    build_proxy,
    predict_quality_batch,
    zero_shot_quality_batch,
)

ADDED = "ADDED"
LOW_QUALITY = "LOW_QUALITY"
REDUNDANT = "REDUNDANT"


@dataclass(frozen=True)
class IterationReport:
    k: int
    candidates: int
    passed_quality: int
    informative: int
    added: int
    corpus_size_after: int


@dataclass(frozen=True)
class SelectionDecision:
    sample_id: str
    predicted_quality: float
    zero_shot_quality: float | None
    decision: str


def evaluate_candidates(
    segment: Sequence[DataSample],
    est: KnnQualityEstimator,
    theta_hq: float,
    proxy: CoverageProxy | None = None,
) -> list[SelectionDecision]:
    """Score every candidate against both criteria; pure and order-preserving.

    With no proxy (initial construction) only the quality criterion applies.
    """
    if not segment:
        return []
    emb = np.stack([s.speaker_embedding.vector for s in segment])
    predicted = predict_quality_batch(est, emb)
    zero_shot = zero_shot_quality_batch(proxy, emb) if proxy is not None else None

    decisions: list[SelectionDecision] = []
    for i, s in enumerate(segment):
        pred = float(predicted[i])
        if pred <= theta_hq:
            verdict = LOW_QUALITY
        elif zero_shot is not None and float(zero_shot[i]) >= theta_hq:
            verdict = REDUNDANT
        else:
            verdict = ADDED
        decisions.append(
            SelectionDecision(
                sample_id=s.sample_id,
                predicted_quality=pred,
                zero_shot_quality=None if zero_shot is None else float(zero_shot[i]),
                decision=verdict,
            )
        )
    return decisions


def build_initial_corpus(
    screened: Sequence[DataSample],
    est: KnnQualityEstimator,
    theta_hq: float,
    name: str = "corpus",
) -> tuple[Corpus, IterationReport]:
    """Corpus of all screened samples whose predicted quality exceeds theta_hq."""
    decisions = evaluate_candidates(screened, est, theta_hq)
    added_ids = [d.sample_id for d in decisions if d.decision == ADDED]
    corpus = corpus_merge(Corpus.empty(name), added_ids, k=1)
    report = IterationReport(
        k=1,
        candidates=len(screened),
        passed_quality=len(added_ids),
        informative=len(added_ids),
        added=len(added_ids),
        corpus_size_after=len(corpus),
    )
    return corpus, report


def acquisition_step(
    prev: Corpus,
    segment: Sequence[DataSample],
    est: KnnQualityEstimator,
    proxy: CoverageProxy,
    theta_hq: float,
    k: int,
) -> tuple[Corpus, IterationReport]:
    """One additional-acquisition step against the proxy built from `prev`."""
    overlap = set(prev.sample_ids()) & {s.sample_id for s in segment}
    if overlap:
        raise ValidationError(
            f"segment overlaps the corpus: {sorted(overlap)[:5]}"
        )
    decisions = evaluate_candidates(segment, est, theta_hq, proxy=proxy)
    added_ids = [d.sample_id for d in decisions if d.decision == ADDED]
    corpus = corpus_merge(prev, added_ids, k=k)
    report = IterationReport(
        k=k,
        candidates=len(segment),
        passed_quality=sum(d.decision != LOW_QUALITY for d in decisions),
        informative=sum(
            d.zero_shot_quality is not None and d.zero_shot_quality < theta_hq
            for d in decisions
        ),
        added=len(added_ids),
        corpus_size_after=len(corpus),
    )
    return corpus, report


def run_loop(
    segments: Sequence[Sequence[DataSample]],
    est: KnnQualityEstimator,
    theta_hq: float,
    proxy_params: ProxyParams,
    name: str = "corpus",
) -> tuple[Corpus, list[IterationReport]]:
    """Initial construction on segment 1, then acquisition for k = 2..K.

    The proxy is rebuilt from C_{k-1} before each step. Each segment is
    visited exactly once; rejected samples are not reconsidered later.
    """
    if len(segments) < 1:
        raise ValidationError("need at least one segment")
    by_id = {s.sample_id: s for seg in segments for s in seg}

    corpus, report = build_initial_corpus(segments[0], est, theta_hq, name=name)
    reports = [report]
    for k, segment in enumerate(segments[1:], start=2):
        proxy = build_proxy(_corpus_matrix(corpus, by_id), proxy_params)
        corpus, report = acquisition_step(corpus, segment, est, proxy, theta_hq, k)
        reports.append(report)
    return corpus, reports


def baseline_select(
    pool: Sequence[DataSample],
    est: KnnQualityEstimator,
    n: int,
    name: str = "baseline",
) -> Corpus:
    """Top-n samples by predicted quality, ties broken by ascending sample_id."""
    if n < 0:
        raise ValidationError("n must be >= 0")
    if n > len(pool):
        raise ValidationError(f"n={n} exceeds pool size {len(pool)}")
    if n == 0:
        return Corpus.empty(name)
    emb = np.stack([s.speaker_embedding.vector for s in pool])
    predicted = predict_quality_batch(est, emb)
    ranked = sorted(
        zip(pool, predicted), key=lambda item: (-item[1], item[0].sample_id)
    )
    chosen = [s.sample_id for s, _ in ranked[:n]]
    return corpus_merge(Corpus.empty(name), chosen, k=1)


def write_decision_log(decisions: Sequence[SelectionDecision], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["sample_id", "predicted_quality", "zero_shot_quality", "decision"]
        )
        for d in decisions:
            zs = "" if d.zero_shot_quality is None else repr(d.zero_shot_quality)
            writer.writerow([d.sample_id, repr(d.predicted_quality), zs, d.decision])


def _corpus_matrix(corpus: Corpus, by_id: dict[str, DataSample]) -> np.ndarray:
    if not corpus.entries:
        dim = next(iter(by_id.values())).speaker_embedding.dim if by_id else 1
        return np.empty((0, dim), dtype=np.float64)
    return np.stack(
        [by_id[e.sample_id].speaker_embedding.vector for e in corpus.entries]
    )
