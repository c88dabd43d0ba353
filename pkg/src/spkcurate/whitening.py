"""PCA whitening: mean/covariance estimation, eigendecomposition, and the
split of whitened coordinates into principal (y) and residual (z) parts.

The forward map is [y; z] = Lambda^(-1/2) E^T (x - mu) with eigenpairs of
the biased covariance R = (1/N) sum (x_i - mu)(x_i - mu)^T sorted in
descending order; the inverse is x = mu + E Lambda^(1/2) [y; z].

Eigenvalues below tol = 1e-12 * lambda_1 are treated as singular: their
coordinates are dropped from z rather than divided, so rank-deficient
data never produces infinities.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .core import EmbeddingSet
from .errors import SingularityError, ValidationError

RANK_TOL_FACTOR = 1e-12
FORMAT_VERSION = "whitening/1"


@dataclass(frozen=True)
class WhiteningModel:
    """Fitted mean, eigenbasis, eigenvalues (descending), and the y/z split."""

    mu: np.ndarray
    eigvecs: np.ndarray
    eigvals: np.ndarray
    d_prime: int | None = None

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=np.float64)
        vecs = np.asarray(self.eigvecs, dtype=np.float64)
        vals = np.asarray(self.eigvals, dtype=np.float64)
        d = mu.shape[0]
        if vecs.shape != (d, d) or vals.shape != (d,):
            raise ValidationError("inconsistent whitening model shapes")
        if np.any(np.diff(vals) > 0):
            raise ValidationError("eigenvalues must be sorted descending")
        if np.any(vals < 0):
            raise ValidationError("eigenvalues must be non-negative")
        if self.d_prime is not None and not 1 <= self.d_prime <= d:
            raise ValidationError(f"d_prime {self.d_prime} outside [1, {d}]")
        for arr in (mu, vecs, vals):
            arr.setflags(write=False)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "eigvecs", vecs)
        object.__setattr__(self, "eigvals", vals)

    @property
    def dim(self) -> int:
        return int(self.mu.shape[0])

    @property
    def rank(self) -> int:
        """Number of eigenvalues above the singularity tolerance."""
        tol = RANK_TOL_FACTOR * (self.eigvals[0] if self.eigvals.size else 0.0)
        return int(np.sum(self.eigvals > tol))

    def with_d_prime(self, d_prime: int) -> "WhiteningModel":
        return replace(self, d_prime=int(d_prime))


def fit_whitening(x) -> WhiteningModel:
    """Fit mean, biased covariance, and its symmetric eigendecomposition.

    Accepts an EmbeddingSet or an (N, d) array, N >= 2. The returned model
    has d_prime unset; pick it with choose_dprime.
    """
    if isinstance(x, EmbeddingSet):
        x = x.matrix()
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ValidationError("training data must be an (N, d) matrix")
    n, d = x.shape
    if n < 2:
        raise ValidationError(f"need at least 2 samples to fit, got {n}")

    mu = x.mean(axis=0)
    centered = x - mu
    cov = (centered.T @ centered) / n
    cov = 0.5 * (cov + cov.T)

    vals, vecs = np.linalg.eigh(cov)
    order = np.argsort(vals, kind="stable")[::-1]
    vals = vals[order]
    vecs = vecs[:, order]
    vals = np.maximum(vals, 0.0)

    # sign convention: largest-magnitude component of each eigenvector non-negative
    for j in range(d):
        lead = np.argmax(np.abs(vecs[:, j]))
        if vecs[lead, j] < 0:
            vecs[:, j] = -vecs[:, j]

    return WhiteningModel(mu=mu, eigvecs=vecs, eigvals=vals)


def choose_dprime(eigvals: np.ndarray, energy: float) -> int:
    """Smallest m whose cumulative eigenvalue share strictly exceeds `energy`.

    With energy = 1.0 no prefix can strictly exceed the total, so the full
    spectrum length is returned.
    """
    if not 0.0 < energy <= 1.0:
        raise ValidationError(f"energy {energy} outside (0, 1]")
    vals = np.asarray(eigvals, dtype=np.float64)
    if vals.ndim != 1 or vals.size == 0:
        raise ValidationError("eigenvalue spectrum must be a non-empty vector")
    if np.any(vals < 0) or np.any(np.diff(vals) > 0):
        raise ValidationError("eigenvalues must be non-negative and descending")
    total = float(vals.sum())
    if total <= 0.0:
        raise ValidationError("all-zero spectrum")
    share = np.cumsum(vals) / total
    above = np.nonzero(share > energy)[0]
    if above.size == 0:
        return int(vals.size)
    return int(above[0]) + 1


def _scaled_coords(model: WhiteningModel, x: np.ndarray) -> np.ndarray:
    """Whitened coordinates for the non-singular directions, (N, rank)."""
    rank = model.rank
    if model.d_prime is None:
        raise ValidationError("d_prime not set; call with_d_prime first")
    if model.d_prime > rank:
        raise SingularityError(rank, float(model.eigvals[rank]) if rank < model.dim else 0.0)
    proj = (x - model.mu) @ model.eigvecs[:, :rank]
    return proj / np.sqrt(model.eigvals[:rank])


def transform(model: WhiteningModel, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Map x to (y, z): the first d_prime whitened coordinates and the rest.

    Accepts a single (d,) vector or an (N, d) batch; singular directions
    (eigenvalues under tolerance) are dropped from z.
    """
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.shape[1] != model.dim:
        raise ValidationError(f"expected dim {model.dim}, got {x.shape[1]}")
    coords = _scaled_coords(model, x)
    y = coords[:, : model.d_prime]
    z = coords[:, model.d_prime:]
    if single:
        return y[0], z[0]
    return y, z


def inverse(model: WhiteningModel, y: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Map (y, z) back to the embedding space: x = mu + E Lambda^(1/2) [y; z]."""
    if model.d_prime is None:
        raise ValidationError("d_prime not set; call with_d_prime first")
    y = np.asarray(y, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    single = y.ndim == 1
    if single:
        y = y[None, :]
        z = z[None, :]
    rank = model.rank
    if y.shape[1] != model.d_prime or z.shape[1] != rank - model.d_prime:
        raise ValidationError(
            f"expected y dim {model.d_prime} and z dim {rank - model.d_prime}, "
            f"got {y.shape[1]} and {z.shape[1]}"
        )
    if y.shape[0] != z.shape[0]:
        raise ValidationError("y and z batch sizes differ")
    coords = np.concatenate([y, z], axis=1) * np.sqrt(model.eigvals[:rank])
    x = model.mu + coords @ model.eigvecs[:, :rank].T
    return x[0] if single else x


def save_whitening(model: WhiteningModel, path) -> None:
    payload = {
        "format": FORMAT_VERSION,
        "mu": model.mu.tolist(),
        "eigvals": model.eigvals.tolist(),
        "eigvecs": model.eigvecs.tolist(),
        "d_prime": model.d_prime,
    }
    Path(path).write_text(json.dumps(payload) + "\n", encoding="utf-8")


def load_whitening(path) -> WhiteningModel:
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    if obj.get("format") != FORMAT_VERSION:
        raise ValidationError(f"unsupported whitening format {obj.get('format')!r}")
    return WhiteningModel(
        mu=np.asarray(obj["mu"], dtype=np.float64),
        eigvecs=np.asarray(obj["eigvecs"], dtype=np.float64),
        eigvals=np.asarray(obj["eigvals"], dtype=np.float64),
        d_prime=obj["d_prime"],
    )
