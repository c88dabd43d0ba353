"""Full-covariance Gaussian mixture baseline fit by EM.

Initialization is k-means++ seeding for the means, the global covariance
for every component, and uniform weights; three seeded restarts keep the
best final log-likelihood. Covariances get reg = 1e-6 * trace(S) / p added
to the diagonal at every M-step, so small-N high-p fits stay positive
definite. With M = 1 the fit is the closed-form Gaussian MLE (plus reg)
regardless of seed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.linalg import solve_triangular

from .errors import NumericalError, ValidationError

COLLAPSE_WEIGHT = 1e-12
MONOTONE_SLACK = 1e-9
REG_FACTOR = 1e-6
RESTARTS = 3
COLLAPSE_RETRIES = 3
FORMAT_VERSION = "gmm/1"


@dataclass(frozen=True)
class GmmModel:
    weights: np.ndarray
    means: np.ndarray
    covariances: np.ndarray
    final_log_likelihood: float = float("nan")
    n_iter: int = 0

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        mu = np.asarray(self.means, dtype=np.float64)
        cov = np.asarray(self.covariances, dtype=np.float64)
        m = w.shape[0]
        if mu.ndim != 2 or mu.shape[0] != m:
            raise ValidationError("means must be (M, p)")
        p = mu.shape[1]
        if cov.shape != (m, p, p):
            raise ValidationError("covariances must be (M, p, p)")
        if abs(float(w.sum()) - 1.0) > 1e-9 or np.any(w < 0):
            raise ValidationError("weights must be a probability vector")
        for arr in (w, mu, cov):
            arr.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "means", mu)
        object.__setattr__(self, "covariances", cov)

    @property
    def m(self) -> int:
        return int(self.weights.shape[0])

    @property
    def p(self) -> int:
        return int(self.means.shape[1])


def _log_gaussians(x: np.ndarray, means: np.ndarray, covs: np.ndarray) -> np.ndarray:
    """(n, M) log densities via Cholesky factors."""
    n, p = x.shape
    m = means.shape[0]
    out = np.empty((n, m), dtype=np.float64)
    for j in range(m):
        try:
            chol = np.linalg.cholesky(covs[j])
        except np.linalg.LinAlgError:
            raise NumericalError(f"component {j} covariance not positive definite")
        diff = x - means[j]
        y = solve_triangular(chol, diff.T, lower=True)
        maha = np.sum(y * y, axis=0)
        logdet = 2.0 * np.sum(np.log(np.diag(chol)))
        out[:, j] = -0.5 * (p * np.log(2.0 * np.pi) + logdet + maha)
    return out


def _log_resp(model_w, means, covs, x):
    logp = _log_gaussians(x, means, covs) + np.log(model_w)[None, :]
    norm = _logsumexp_rows(logp)
    return logp - norm[:, None], float(norm.sum())


def _logsumexp_rows(a: np.ndarray) -> np.ndarray:
    mx = a.max(axis=1)
    return mx + np.log(np.exp(a - mx[:, None]).sum(axis=1))


def _kmeanspp_means(x: np.ndarray, m: int, rng: np.random.Generator) -> np.ndarray:
    n = x.shape[0]
    centers = [x[rng.integers(n)]]
    for _ in range(1, m):
        d2 = np.min(
            [np.sum((x - c) ** 2, axis=1) for c in centers], axis=0
        )
        total = d2.sum()
        if total <= 0:
            centers.append(x[rng.integers(n)])
            continue
        probs = d2 / total
        centers.append(x[rng.choice(n, p=probs)])
    return np.asarray(centers)


def _em_once(
    x: np.ndarray, m: int, rng: np.random.Generator, tol: float, max_iter: int, reg: float
) -> tuple[np.ndarray, np.ndarray, np.ndarray, float, int]:
    n, p = x.shape
    global_cov = np.cov(x.T, bias=True).reshape(p, p) + reg * np.eye(p)
    means = _kmeanspp_means(x, m, rng)
    covs = np.repeat(global_cov[None, :, :], m, axis=0)
    weights = np.full(m, 1.0 / m)

    prev_ll = -np.inf
    it = 0
    for it in range(1, max_iter + 1):
        log_resp, ll_sum = _log_resp(weights, means, covs, x)
        ll = ll_sum
        if ll < prev_ll - MONOTONE_SLACK * max(1.0, abs(prev_ll)):
            raise NumericalError(
                f"log-likelihood decreased at iteration {it} ({prev_ll} -> {ll})"
            )
        resp = np.exp(log_resp)
        nk = resp.sum(axis=0)
        if np.any(nk / n < COLLAPSE_WEIGHT):
            raise _Collapse()
        weights = nk / n
        means = (resp.T @ x) / nk[:, None]
        for j in range(m):
            diff = x - means[j]
            covs[j] = (resp[:, j][:, None] * diff).T @ diff / nk[j]
            covs[j] = 0.5 * (covs[j] + covs[j].T) + reg * np.eye(p)
        if abs(ll - prev_ll) < tol * max(1.0, abs(ll)):
            prev_ll = ll
            break
        prev_ll = ll
    return weights, means, covs, prev_ll, it


class _Collapse(Exception):
    pass


def fit_em(
    x: np.ndarray,
    m: int,
    seed: int = 0,
    tol: float = 1e-8,
    max_iter: int = 300,
) -> GmmModel:
    """Fit an M-component full-covariance mixture; deterministic per seed."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] == 0:
        raise ValidationError("data must be a non-empty (n, p) matrix")
    if m < 1:
        raise ValidationError("M must be >= 1")
    if x.shape[0] < m:
        raise ValidationError(f"need at least M={m} points, got {x.shape[0]}")

    p = x.shape[1]
    global_cov = np.cov(x.T, bias=True).reshape(p, p)
    reg = REG_FACTOR * float(np.trace(global_cov)) / p
    if reg <= 0.0:
        reg = REG_FACTOR

    ss = np.random.SeedSequence([seed, m])
    best: tuple | None = None
    for child in ss.spawn(RESTARTS):
        rng = np.random.default_rng(child)
        fitted = None
        for attempt in range(COLLAPSE_RETRIES + 1):
            try:
                fitted = _em_once(x, m, rng, tol, max_iter, reg)
                break
            except _Collapse:
                if attempt == COLLAPSE_RETRIES:
                    raise NumericalError(
                        f"component collapsed in all {COLLAPSE_RETRIES} retries"
                    ) from None
        weights, means, covs, ll, n_iter = fitted
        if best is None or ll > best[3]:
            best = (weights, means, covs, ll, n_iter)

    weights, means, covs, ll, n_iter = best
    return GmmModel(
        weights=weights,
        means=means,
        covariances=covs,
        final_log_likelihood=ll,
        n_iter=n_iter,
    )


def responsibilities(model: GmmModel, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    log_resp, _ = _log_resp(model.weights, model.means, model.covariances, x)
    return np.exp(log_resp)


def log_likelihood(model: GmmModel, x: np.ndarray) -> float:
    x = np.asarray(x, dtype=np.float64)
    _, ll = _log_resp(model.weights, model.means, model.covariances, x)
    return ll


def gmm_sample(model: GmmModel, n: int, rng: np.random.Generator) -> np.ndarray:
    """n draws: component per weights, then the component's Gaussian."""
    if n < 0:
        raise ValidationError("n must be >= 0")
    if n == 0:
        return np.empty((0, model.p), dtype=np.float64)
    comps = rng.choice(model.m, size=n, p=model.weights)
    out = np.empty((n, model.p), dtype=np.float64)
    chols = [np.linalg.cholesky(model.covariances[j]) for j in range(model.m)]
    normals = rng.standard_normal((n, model.p))
    for i in range(n):
        j = comps[i]
        out[i] = model.means[j] + chols[j] @ normals[i]
    return out


def save_gmm(model: GmmModel, path) -> None:
    payload = {
        "format": FORMAT_VERSION,
        "M": model.m,
        "weights": model.weights.tolist(),
        "means": model.means.tolist(),
        "covariances": model.covariances.tolist(),
        "final_log_likelihood": model.final_log_likelihood,
        "n_iter": model.n_iter,
    }
    Path(path).write_text(json.dumps(payload) + "\n", encoding="utf-8")


def load_gmm(path) -> GmmModel:
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    if obj.get("format") != FORMAT_VERSION:
        raise ValidationError(f"unsupported gmm format {obj.get('format')!r}")
    return GmmModel(
        weights=np.asarray(obj["weights"], dtype=np.float64),
        means=np.asarray(obj["means"], dtype=np.float64),
        covariances=np.asarray(obj["covariances"], dtype=np.float64),
        final_log_likelihood=float(obj["final_log_likelihood"]),
        n_iter=int(obj["n_iter"]),
    )
