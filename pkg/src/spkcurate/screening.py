"""Candidate pre-screening: text-audio alignment and per-video speaker compactness.

A candidate survives screening when its alignment score clears the minimum
and its source group's embedding variance stays under the maximum. Groups
are screened atomically: every sample of a source shares the variance
verdict.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import TYPE_CHECKING, Sequence

import numpy as np

from .errors import ValidationError

if TYPE_CHECKING:
    from .core import DataSample

LOW_ALIGNMENT = "LOW_ALIGNMENT"
HIGH_GROUP_VARIANCE = "HIGH_GROUP_VARIANCE"


@dataclass(frozen=True)
class ScreeningMetrics:
    """Per-sample screening attributes supplied by the data source."""

    alignment_score: float
    group_variance: float

    def __post_init__(self):
        if not np.isfinite(self.alignment_score):
            raise ValidationError("alignment_score must be finite")
        if not np.isfinite(self.group_variance) or self.group_variance < 0:
            raise ValidationError("group_variance must be finite and >= 0")


@dataclass(frozen=True)
class ScreeningThresholds:
    min_alignment: float
    max_group_variance: float

    def __post_init__(self):
        if self.max_group_variance < 0:
            raise ValidationError("max_group_variance must be >= 0")


@dataclass(frozen=True)
class RejectedSample:
    sample: "DataSample"
    reason: str


def intra_group_variance(vectors: Sequence[np.ndarray]) -> float:
    """Mean squared Euclidean deviation from the centroid, (1/n) sum ||v_i - v_bar||^2."""
    if len(vectors) == 0:
        raise ValidationError("intra_group_variance requires a non-empty list")
    mat = np.asarray(vectors, dtype=np.float64)
    if mat.ndim != 2:
        raise ValidationError("vectors must share a common dimension")
    centered = mat - mat.mean(axis=0)
    return float(np.mean(np.sum(centered * centered, axis=1)))


def screen(
    pool: Sequence["DataSample"], thresholds: ScreeningThresholds
) -> tuple[list["DataSample"], list[RejectedSample]]:
    """Split `pool` into kept samples and rejections carrying a reason code.

    The alignment criterion is per sample; the variance criterion is per
    source_id group (all of a source's samples must carry the same
    group_variance value). A sample failing both is reported as
    LOW_ALIGNMENT. Output preserves input order.
    """
    group_variance: dict[str, float] = {}
    for s in pool:
        v = s.screening.group_variance
        prev = group_variance.get(s.source_id)
        if prev is None:
            group_variance[s.source_id] = v
        elif prev != v:
            raise ValidationError(
                f"source {s.source_id!r} carries inconsistent group_variance values "
                f"({prev!r} vs {v!r})"
            )

    kept: list[DataSample] = []
    rejected: list[RejectedSample] = []
    for s in pool:
        if s.screening.alignment_score < thresholds.min_alignment:
            rejected.append(RejectedSample(s, LOW_ALIGNMENT))
        elif group_variance[s.source_id] > thresholds.max_group_variance:
            rejected.append(RejectedSample(s, HIGH_GROUP_VARIANCE))
        else:
            kept.append(s)
    return kept, rejected


def write_rejection_log(rejected: Sequence[RejectedSample], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["sample_id", "reason"])
        for r in rejected:
            writer.writerow([r.sample.sample_id, r.reason])
