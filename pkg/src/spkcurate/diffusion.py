"""Denoising diffusion model over the whitened principal coordinates.

A linear beta schedule drives the forward noising q(y_t | y_0) =
sqrt(abar_t) y_0 + sqrt(1 - abar_t) eps. A three-layer ReLU MLP predicts
eps from the noised vector concatenated with a sinusoidal embedding of t;
training minimizes the mean squared eps-prediction error with exact
backpropagation and Adam. Ancestral sampling uses posterior noise scale
sigma_t = sqrt(beta_t), with no noise at the final step.

End-to-end generation draws y from the sampler, z from a standard normal,
and maps back through the whitening inverse.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import EmbeddingSet
from .errors import SamplingError, TrainingError, ValidationError
from .whitening import WhiteningModel, inverse

FORMAT_VERSION = "diffusion/1"


@dataclass(frozen=True)
class NoiseSchedule:
    T: int
    beta: np.ndarray
    alpha: np.ndarray
    alpha_bar: np.ndarray

    def __post_init__(self):
        for name in ("beta", "alpha", "alpha_bar"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            if arr.shape != (self.T,):
                raise ValidationError(f"{name} must have shape ({self.T},)")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)


def make_schedule(T: int, beta_start: float, beta_end: float) -> NoiseSchedule:
    """Linear schedule beta_1 = beta_start .. beta_T = beta_end (T >= 1)."""
    if T < 1:
        raise ValidationError("T must be >= 1")
    if not 0.0 < beta_start <= beta_end < 1.0:
        raise ValidationError(
            f"need 0 < beta_start <= beta_end < 1, got {beta_start}, {beta_end}"
        )
    if T == 1:
        beta = np.array([beta_start], dtype=np.float64)
    else:
        beta = np.linspace(beta_start, beta_end, T, dtype=np.float64)
    alpha = 1.0 - beta
    alpha_bar = np.cumprod(alpha)
    return NoiseSchedule(T=T, beta=beta, alpha=alpha, alpha_bar=alpha_bar)


def time_embedding(t: int, dim: int = 16) -> np.ndarray:
    """Interleaved sin/cos of t over geometrically spaced frequencies (base 10000)."""
    if dim < 2 or dim % 2 != 0:
        raise ValidationError(f"embedding dim must be even and >= 2, got {dim}")
    if t < 1:
        raise ValidationError(f"t must be >= 1, got {t}")
    return time_embedding_batch(np.array([t]), dim)[0]


def time_embedding_batch(ts: np.ndarray, dim: int = 16) -> np.ndarray:
    if dim < 2 or dim % 2 != 0:
        raise ValidationError(f"embedding dim must be even and >= 2, got {dim}")
    ts = np.asarray(ts, dtype=np.float64)
    half = dim // 2
    freqs = 10000.0 ** (-2.0 * np.arange(half) / dim)
    angles = ts[:, None] * freqs[None, :]
    out = np.empty((ts.shape[0], dim), dtype=np.float64)
    out[:, 0::2] = np.sin(angles)
    out[:, 1::2] = np.cos(angles)
    return out


def forward_noise(
    sched: NoiseSchedule, y0: np.ndarray, t: int, eps: np.ndarray
) -> np.ndarray:
    """q(y_t | y_0) realization: sqrt(abar_t) y0 + sqrt(1 - abar_t) eps."""
    if not 1 <= t <= sched.T:
        raise ValidationError(f"t={t} outside [1, {sched.T}]")
    y0 = np.asarray(y0, dtype=np.float64)
    eps = np.asarray(eps, dtype=np.float64)
    if y0.shape != eps.shape:
        raise ValidationError(f"y0 shape {y0.shape} != eps shape {eps.shape}")
    abar = sched.alpha_bar[t - 1]
    return np.sqrt(abar) * y0 + np.sqrt(1.0 - abar) * eps


def _forward_noise_per_item(
    sched: NoiseSchedule, y0: np.ndarray, ts: np.ndarray, eps: np.ndarray
) -> np.ndarray:
    abar = sched.alpha_bar[ts - 1][:, None]
    return np.sqrt(abar) * y0 + np.sqrt(1.0 - abar) * eps


@dataclass(frozen=True)
class EpsilonNet:
    """Three-layer ReLU MLP: (d' + t_emb_dim) -> hidden -> hidden -> d'."""

    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray
    w3: np.ndarray
    b3: np.ndarray
    t_emb_dim: int = 16

    def __post_init__(self):
        arrays = {}
        for name in PARAM_NAMES:
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            if not np.all(np.isfinite(arr)):
                raise ValidationError(f"non-finite parameter in {name}")
            arrays[name] = arr
        if (
            arrays["w1"].shape[1] != arrays["w2"].shape[0]
            or arrays["w2"].shape[1] != arrays["w3"].shape[0]
            or arrays["b1"].shape != (arrays["w1"].shape[1],)
            or arrays["b2"].shape != (arrays["w2"].shape[1],)
            or arrays["b3"].shape != (arrays["w3"].shape[1],)
        ):
            raise ValidationError("layer shapes are inconsistent")
        if arrays["w1"].shape[0] - self.t_emb_dim != arrays["w3"].shape[1]:
            raise ValidationError(
                "input dim minus t_emb_dim must equal the output dim"
            )
        for name, arr in arrays.items():
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def out_dim(self) -> int:
        return int(self.w3.shape[1])

    def params(self) -> dict[str, np.ndarray]:
        return {name: getattr(self, name) for name in PARAM_NAMES}


PARAM_NAMES = ("w1", "b1", "w2", "b2", "w3", "b3")


def init_epsilon_net(
    d_prime: int, hidden: int = 56, t_emb_dim: int = 16, seed: int = 0
) -> EpsilonNet:
    """He-initialized weights, zero biases."""
    rng = np.random.default_rng(seed)
    in_dim = d_prime + t_emb_dim

    def he(n_in, n_out):
        return rng.standard_normal((n_in, n_out)) * np.sqrt(2.0 / n_in)

    return EpsilonNet(
        w1=he(in_dim, hidden),
        b1=np.zeros(hidden),
        w2=he(hidden, hidden),
        b2=np.zeros(hidden),
        w3=he(hidden, d_prime),
        b3=np.zeros(d_prime),
        t_emb_dim=t_emb_dim,
    )


def _as_params(net) -> dict[str, np.ndarray]:
    if isinstance(net, EpsilonNet):
        return net.params()
    return net


def _forward(params: dict[str, np.ndarray], x: np.ndarray) -> np.ndarray:
    z1 = x @ params["w1"] + params["b1"]
    h1 = np.maximum(z1, 0.0)
    z2 = h1 @ params["w2"] + params["b2"]
    h2 = np.maximum(z2, 0.0)
    return h2 @ params["w3"] + params["b3"]


def net_forward(net: EpsilonNet, y_t: np.ndarray, ts: np.ndarray) -> np.ndarray:
    """eps prediction for noised vectors y_t (n, d') at integer steps ts (n,)."""
    y_t = np.asarray(y_t, dtype=np.float64)
    if y_t.ndim != 2 or y_t.shape[1] != net.out_dim:
        raise ValidationError(f"y_t must be (n, {net.out_dim})")
    temb = time_embedding_batch(np.asarray(ts), net.t_emb_dim)
    return _forward(net.params(), np.concatenate([y_t, temb], axis=1))


def loss_and_gradient_at(
    net,
    sched: NoiseSchedule,
    batch_y0: np.ndarray,
    ts: np.ndarray,
    eps: np.ndarray,
) -> tuple[float, dict[str, np.ndarray]]:
    """Loss and exact parameter gradients for given (t, eps) draws.

    loss = mean_i || eps_i - net(y_t_i, t_i) ||^2 over the batch.
    """
    params = _as_params(net)
    batch_y0 = np.asarray(batch_y0, dtype=np.float64)
    ts = np.asarray(ts)
    eps = np.asarray(eps, dtype=np.float64)
    n = batch_y0.shape[0]
    if n == 0:
        raise ValidationError("batch is empty")
    if eps.shape != batch_y0.shape or ts.shape != (n,):
        raise ValidationError("batch, ts, and eps shapes are inconsistent")
    if np.any(ts < 1) or np.any(ts > sched.T):
        raise ValidationError("ts outside [1, T]")

    noised = _forward_noise_per_item(sched, batch_y0, ts, eps)
    t_emb_dim = params["w1"].shape[0] - batch_y0.shape[1]
    temb = time_embedding_batch(ts, t_emb_dim)
    x = np.concatenate([noised, temb], axis=1)

    z1 = x @ params["w1"] + params["b1"]
    h1 = np.maximum(z1, 0.0)
    z2 = h1 @ params["w2"] + params["b2"]
    h2 = np.maximum(z2, 0.0)
    out = h2 @ params["w3"] + params["b3"]

    resid = out - eps
    loss = float(np.mean(np.sum(resid * resid, axis=1)))

    g_out = 2.0 * resid / n
    grads = {
        "w3": h2.T @ g_out,
        "b3": g_out.sum(axis=0),
    }
    g_h2 = g_out @ params["w3"].T
    g_h2[z2 <= 0.0] = 0.0
    grads["w2"] = h1.T @ g_h2
    grads["b2"] = g_h2.sum(axis=0)
    g_h1 = g_h2 @ params["w2"].T
    g_h1[z1 <= 0.0] = 0.0
    grads["w1"] = x.T @ g_h1
    grads["b1"] = g_h1.sum(axis=0)
    return loss, grads


def loss_and_gradient(
    net, sched: NoiseSchedule, batch_y0: np.ndarray, rng: np.random.Generator
) -> tuple[float, dict[str, np.ndarray]]:
    """Draw t ~ U{1..T} and eps ~ N(0, I) per item (in that order), then
    delegate to loss_and_gradient_at."""
    batch_y0 = np.asarray(batch_y0, dtype=np.float64)
    if batch_y0.ndim != 2 or batch_y0.shape[0] == 0:
        raise ValidationError("batch must be a non-empty (n, d') matrix")
    ts = rng.integers(1, sched.T + 1, size=batch_y0.shape[0])
    eps = rng.standard_normal(batch_y0.shape)
    return loss_and_gradient_at(net, sched, batch_y0, ts, eps)


def _val_loss(params, sched, y, ts, eps) -> float:
    noised = _forward_noise_per_item(sched, y, ts, eps)
    t_emb_dim = params["w1"].shape[0] - y.shape[1]
    temb = time_embedding_batch(ts, t_emb_dim)
    out = _forward(params, np.concatenate([noised, temb], axis=1))
    resid = out - eps
    return float(np.mean(np.sum(resid * resid, axis=1)))


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 2000
    batch_size: int = 64
    learning_rate: float = 1e-3
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    patience: int = 100
    val_repeats: int = 8

    def __post_init__(self):
        # learning_rate 0 is tolerated (documented no-op) though useless
        if self.learning_rate < 0 or not np.isfinite(self.learning_rate):
            raise ValidationError("learning_rate must be >= 0 and finite")
        if self.epochs < 1 or self.batch_size < 1 or self.val_repeats < 1:
            raise ValidationError("epochs, batch_size, and val_repeats must be >= 1")


def train(
    net: EpsilonNet,
    sched: NoiseSchedule,
    y_train: np.ndarray,
    cfg: TrainConfig,
    y_val: np.ndarray | None = None,
) -> tuple[EpsilonNet, list[tuple[int, float, float]]]:
    """Adam training with early stopping on validation loss.

    Validation (t, eps) pairs are drawn once up front (val_repeats per
    point, to keep the Monte-Carlo noise of the stopping signal low), so
    the per-epoch validation loss is a fixed function of the parameters.
    Returns the best-val parameters and a (epoch, train_loss, val_loss)
    history. Deterministic for a given cfg.seed.
    """
    y_train = np.asarray(y_train, dtype=np.float64)
    if y_train.ndim != 2 or y_train.shape[0] == 0:
        raise ValidationError("training set must be a non-empty (n, d') matrix")
    if y_val is None:
        val = y_train
    else:
        val = np.asarray(y_val, dtype=np.float64)
        if val.ndim != 2 or val.shape[1] != y_train.shape[1]:
            raise ValidationError("validation set dimension mismatch")

    rng = np.random.default_rng(cfg.seed)
    val = np.tile(val, (cfg.val_repeats, 1))
    val_ts = rng.integers(1, sched.T + 1, size=val.shape[0])
    val_eps = rng.standard_normal(val.shape)

    params = {k: v.copy() for k, v in net.params().items()}
    m_state = {k: np.zeros_like(v) for k, v in params.items()}
    v_state = {k: np.zeros_like(v) for k, v in params.items()}
    step = 0

    best_val = np.inf
    best_params = {k: v.copy() for k, v in params.items()}
    since_best = 0
    history: list[tuple[int, float, float]] = []

    n = y_train.shape[0]
    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(n)
        epoch_loss = 0.0
        for start in range(0, n, cfg.batch_size):
            batch = y_train[order[start:start + cfg.batch_size]]
            loss, grads = loss_and_gradient(params, sched, batch, rng)
            if not np.isfinite(loss):
                raise TrainingError(epoch)
            epoch_loss += loss * batch.shape[0]
            step += 1
            bc1 = 1.0 - cfg.beta1 ** step
            bc2 = 1.0 - cfg.beta2 ** step
            for k in params:
                g = grads[k]
                m_state[k] = cfg.beta1 * m_state[k] + (1.0 - cfg.beta1) * g
                v_state[k] = cfg.beta2 * v_state[k] + (1.0 - cfg.beta2) * g * g
                params[k] -= (
                    cfg.learning_rate
                    * (m_state[k] / bc1)
                    / (np.sqrt(v_state[k] / bc2) + cfg.adam_eps)
                )
        train_loss = epoch_loss / n
        val_loss = _val_loss(params, sched, val, val_ts, val_eps)
        if not np.isfinite(val_loss):
            raise TrainingError(epoch)
        history.append((epoch, train_loss, val_loss))
        if val_loss < best_val:
            best_val = val_loss
            best_params = {k: v.copy() for k, v in params.items()}
            since_best = 0
        else:
            since_best += 1
            if cfg.patience > 0 and since_best >= cfg.patience:
                break

    trained = EpsilonNet(**best_params, t_emb_dim=net.t_emb_dim)
    return trained, history


def sample(
    net: EpsilonNet, sched: NoiseSchedule, n: int, rng: np.random.Generator
) -> np.ndarray:
    """Ancestral sampling: n draws from the learned y distribution.

    y_T ~ N(0, I); for t = T..1,
    y_{t-1} = (y_t - beta_t / sqrt(1 - abar_t) * eps_hat) / sqrt(alpha_t)
              + sqrt(beta_t) * xi,
    with xi = 0 at t = 1. Draw order: y_T first, then one xi per step.
    """
    if n < 0:
        raise ValidationError("n must be >= 0")
    d = net.out_dim
    if n == 0:
        return np.empty((0, d), dtype=np.float64)
    y = rng.standard_normal((n, d))
    for t in range(sched.T, 0, -1):
        beta = sched.beta[t - 1]
        alpha = sched.alpha[t - 1]
        abar = sched.alpha_bar[t - 1]
        eps_hat = net_forward(net, y, np.full(n, t))
        y = (y - beta / np.sqrt(1.0 - abar) * eps_hat) / np.sqrt(alpha)
        if t > 1:
            y = y + np.sqrt(beta) * rng.standard_normal((n, d))
        if not np.all(np.isfinite(y)):
            raise SamplingError(f"non-finite state at step t={t}")
    return y


def generate_speakers(
    wm: WhiteningModel,
    net: EpsilonNet,
    sched: NoiseSchedule,
    n: int,
    rng: np.random.Generator,
) -> EmbeddingSet:
    """Full generation: y from the sampler, z ~ N(0, I), x via the inverse map.

    Draw order: all y chains first, then the z block. Ids are gen-<index>.
    """
    if wm.d_prime is None or wm.d_prime != net.out_dim:
        raise ValidationError(
            f"whitening d_prime {wm.d_prime} does not match net output {net.out_dim}"
        )
    y = sample(net, sched, n, rng)
    z = rng.standard_normal((n, wm.rank - wm.d_prime))
    x = inverse(wm, y, z)
    ids = [f"gen-{i}" for i in range(n)]
    return EmbeddingSet.from_matrix(ids, x)


def save_diffusion(net: EpsilonNet, sched: NoiseSchedule, path) -> None:
    payload = {
        "format": FORMAT_VERSION,
        "T": sched.T,
        "beta": sched.beta.tolist(),
        "t_emb_dim": net.t_emb_dim,
        "params": {k: v.tolist() for k, v in net.params().items()},
    }
    Path(path).write_text(json.dumps(payload) + "\n", encoding="utf-8")


def load_diffusion(path) -> tuple[EpsilonNet, NoiseSchedule]:
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    if obj.get("format") != FORMAT_VERSION:
        raise ValidationError(f"unsupported diffusion format {obj.get('format')!r}")
    beta = np.asarray(obj["beta"], dtype=np.float64)
    alpha = 1.0 - beta
    sched = NoiseSchedule(
        T=int(obj["T"]), beta=beta, alpha=alpha, alpha_bar=np.cumprod(alpha)
    )
    params = {k: np.asarray(v, dtype=np.float64) for k, v in obj["params"].items()}
    net = EpsilonNet(**params, t_emb_dim=int(obj["t_emb_dim"]))
    return net, sched
