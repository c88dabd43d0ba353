"""Master source list handling: seeded shuffle and K-way ratio partition.

The shuffle is an unbiased Fisher-Yates permutation driven by numpy's
PCG64, so a (seed, id list) pair always yields the same partition. Segment
boundaries sit at cut_k = round(N * sum_{j<=k} r_j); the final segment
absorbs rounding residue, keeping the union exact.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ValidationError

RATIO_SUM_TOL = 1e-9


@dataclass(frozen=True)
class PartitionPlan:
    ratios: tuple[float, ...]
    seed: int

    def __post_init__(self):
        object.__setattr__(self, "ratios", tuple(float(r) for r in self.ratios))
        if len(self.ratios) < 1:
            raise ValidationError("plan needs at least one ratio")
        for r in self.ratios:
            if not 0.0 < r <= 1.0:
                raise ValidationError(f"ratio {r} outside (0, 1]")
        if abs(sum(self.ratios) - 1.0) > RATIO_SUM_TOL:
            raise ValidationError(f"ratios sum to {sum(self.ratios)!r}, expected 1")

    @property
    def k(self) -> int:
        return len(self.ratios)


@dataclass(frozen=True)
class SourcePartition:
    segments: tuple[tuple[str, ...], ...]
    seed: int

    def __len__(self) -> int:
        return len(self.segments)


def shuffle_and_partition(ids: Sequence[str], plan: PartitionPlan) -> SourcePartition:
    """Shuffle `ids` with the plan's seed and cut into len(ratios) disjoint segments."""
    ids = list(ids)
    if not ids:
        raise ValidationError("id list is empty")
    if len(set(ids)) != len(ids):
        raise ValidationError("id list contains duplicates")

    rng = np.random.default_rng(np.random.PCG64(plan.seed))
    order = rng.permutation(len(ids))
    shuffled = [ids[i] for i in order]

    n = len(ids)
    cuts = [0]
    prefix = 0.0
    for r in plan.ratios[:-1]:
        prefix += r
        cuts.append(min(n, math.floor(n * prefix + 0.5)))
    cuts.append(n)
    # cuts must be non-decreasing even under adversarial rounding
    for i in range(1, len(cuts)):
        cuts[i] = max(cuts[i], cuts[i - 1])

    segments = tuple(
        tuple(shuffled[cuts[i]:cuts[i + 1]]) for i in range(plan.k)
    )
    return SourcePartition(segments=segments, seed=plan.seed)


def load_source_list(path) -> list[str]:
    """One id per line, UTF-8; blank lines ignored."""
    text = Path(path).read_text(encoding="utf-8")
    return [line.strip() for line in text.splitlines() if line.strip()]


def save_partition(partition: SourcePartition, path) -> None:
    payload = {
        "segments": [list(seg) for seg in partition.segments],
        "seed": partition.seed,
    }
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def load_partition(path) -> SourcePartition:
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    return SourcePartition(
        segments=tuple(tuple(str(i) for i in seg) for seg in obj["segments"]),
        seed=int(obj["seed"]),
    )
