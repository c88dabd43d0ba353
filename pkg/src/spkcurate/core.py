"""Core data model: speaker embeddings, candidate samples, corpora, and their files.

All types are immutable after construction; operations return new values.

File formats
------------
Embedding CSV: first line ``# dim=<d>``, then one ``speaker_id,v1,...,vd``
row per speaker with decimal floats. ``save`` emits shortest round-trip
representations, so ``load(save(X)) == X`` exactly.

Corpus manifest: JSON lines, one ``{"sample_id": ..., "iteration": k}``
object per entry.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import ParseError, ValidationError
from .screening import ScreeningMetrics


@dataclass(frozen=True)
class Embedding:
    """One speaker's fixed-dimension embedding vector."""

    speaker_id: str
    vector: np.ndarray

    def __post_init__(self):
        vec = np.asarray(self.vector, dtype=np.float64)
        if vec.ndim != 1 or vec.size == 0:
            raise ValidationError(
                f"embedding {self.speaker_id!r}: vector must be 1-D and non-empty"
            )
        if not np.all(np.isfinite(vec)):
            raise ValidationError(f"embedding {self.speaker_id!r}: non-finite component")
        vec.setflags(write=False)
        object.__setattr__(self, "vector", vec)

    @property
    def dim(self) -> int:
        return int(self.vector.shape[0])

    def __eq__(self, other) -> bool:
        if not isinstance(other, Embedding):
            return NotImplemented
        return self.speaker_id == other.speaker_id and np.array_equal(
            self.vector, other.vector
        )

    def __hash__(self):
        return hash((self.speaker_id, self.vector.tobytes()))


@dataclass(frozen=True)
class EmbeddingSet:
    """An ordered collection of embeddings sharing one dimension, with unique ids."""

    dim: int
    items: tuple[Embedding, ...]

    def __post_init__(self):
        if self.dim < 1:
            raise ValidationError("dim must be a positive integer")
        object.__setattr__(self, "items", tuple(self.items))
        seen: set[str] = set()
        for e in self.items:
            if e.dim != self.dim:
                raise ValidationError(
                    f"embedding {e.speaker_id!r} has dim {e.dim}, expected {self.dim}"
                )
            if e.speaker_id in seen:
                raise ValidationError(f"duplicate speaker_id {e.speaker_id!r}")
            seen.add(e.speaker_id)

    def __len__(self) -> int:
        return len(self.items)

    def __iter__(self):
        return iter(self.items)

    def ids(self) -> list[str]:
        return [e.speaker_id for e in self.items]

    def matrix(self) -> np.ndarray:
        """(N, dim) float64 matrix in storage order."""
        if not self.items:
            return np.empty((0, self.dim), dtype=np.float64)
        return np.stack([e.vector for e in self.items])

    @classmethod
    def from_matrix(cls, ids: Sequence[str], matrix: np.ndarray) -> "EmbeddingSet":
        matrix = np.asarray(matrix, dtype=np.float64)
        if matrix.ndim != 2 or len(ids) != matrix.shape[0]:
            raise ValidationError("ids and matrix rows must correspond")
        items = tuple(Embedding(str(i), row) for i, row in zip(ids, matrix))
        return cls(dim=int(matrix.shape[1]), items=items)


def save_embeddings(embeddings: EmbeddingSet, path) -> None:
    lines = [f"# dim={embeddings.dim}\n"]
    for e in embeddings.items:
        coords = ",".join(repr(float(v)) for v in e.vector)
        lines.append(f"{e.speaker_id},{coords}\n")
    Path(path).write_text("".join(lines), encoding="utf-8")


def load_embeddings(path) -> EmbeddingSet:
    """Parse an embedding CSV; errors name the offending 1-based line."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise ValidationError(f"embedding file not found: {path}") from None
    lines = text.splitlines()
    if not lines or not lines[0].startswith("# dim="):
        raise ParseError("missing '# dim=<d>' header", path=str(path), line=1)
    try:
        dim = int(lines[0][len("# dim="):])
    except ValueError:
        raise ParseError("unparseable dimension in header", path=str(path), line=1) from None
    if dim < 1:
        raise ParseError("dimension must be positive", path=str(path), line=1)

    items: list[Embedding] = []
    seen: set[str] = set()
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        fields = line.split(",")
        if len(fields) != dim + 1:
            raise ParseError(
                f"expected {dim + 1} fields, found {len(fields)}",
                path=str(path),
                line=lineno,
            )
        speaker_id = fields[0]
        try:
            vector = np.array([float(f) for f in fields[1:]], dtype=np.float64)
        except ValueError:
            raise ParseError("non-numeric coordinate", path=str(path), line=lineno) from None
        if speaker_id in seen:
            raise ValidationError(f"{path}:{lineno}: duplicate id {speaker_id!r}")
        seen.add(speaker_id)
        try:
            items.append(Embedding(speaker_id, vector))
        except ValidationError as exc:
            raise ParseError(str(exc), path=str(path), line=lineno) from None
    return EmbeddingSet(dim=dim, items=tuple(items))


@dataclass(frozen=True)
class DataSample:
    """One candidate audio-text item: embedding plus screening attributes."""

    sample_id: str
    source_id: str
    speaker_embedding: Embedding
    duration_sec: float
    screening: ScreeningMetrics

    def __post_init__(self):
        if self.duration_sec < 0:
            raise ValidationError(
                f"sample {self.sample_id!r}: duration_sec must be >= 0"
            )


@dataclass(frozen=True)
class CorpusEntry:
    sample_id: str
    iteration_added: int


@dataclass(frozen=True)
class Corpus:
    """A selected training set with per-iteration provenance."""

    name: str
    entries: tuple[CorpusEntry, ...]

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))
        seen: set[str] = set()
        last_iter = 0
        for e in self.entries:
            if e.sample_id in seen:
                raise ValidationError(f"corpus {self.name!r}: duplicate {e.sample_id!r}")
            seen.add(e.sample_id)
            if e.iteration_added < 1:
                raise ValidationError(
                    f"corpus {self.name!r}: iteration_added must be >= 1"
                )
            if e.iteration_added < last_iter:
                raise ValidationError(
                    f"corpus {self.name!r}: iterations must be non-decreasing"
                )
            last_iter = e.iteration_added

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, sample_id: str) -> bool:
        return sample_id in self.sample_ids()

    def sample_ids(self) -> list[str]:
        return [e.sample_id for e in self.entries]

    @classmethod
    def empty(cls, name: str) -> "Corpus":
        return cls(name=name, entries=())


def corpus_merge(base: Corpus, additions: Iterable[str], k: int) -> Corpus:
    """Corpus with `additions` appended at iteration `k`; base entries unchanged."""
    additions = list(additions)
    existing = set(base.sample_ids())
    dupes = sorted(set(a for a in additions if a in existing))
    if len(set(additions)) != len(additions):
        counts: dict[str, int] = {}
        for a in additions:
            counts[a] = counts.get(a, 0) + 1
        dupes = sorted(set(dupes) | {a for a, c in counts.items() if c > 1})
    if dupes:
        raise ValidationError(f"duplicate sample_ids in merge: {dupes}")
    if base.entries and k < base.entries[-1].iteration_added:
        raise ValidationError(
            f"iteration {k} precedes the corpus tail "
            f"({base.entries[-1].iteration_added})"
        )
    new_entries = base.entries + tuple(CorpusEntry(a, k) for a in additions)
    return Corpus(name=base.name, entries=new_entries)


def save_corpus(corpus: Corpus, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for e in corpus.entries:
            fh.write(
                json.dumps({"sample_id": e.sample_id, "iteration": e.iteration_added})
                + "\n"
            )


def load_corpus(path, name: str | None = None) -> Corpus:
    path = Path(path)
    if name is None:
        name = path.stem
    entries: list[CorpusEntry] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                entries.append(CorpusEntry(str(obj["sample_id"]), int(obj["iteration"])))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError):
                raise ParseError("bad manifest line", path=str(path), line=lineno) from None
    return Corpus(name=name, entries=tuple(entries))
