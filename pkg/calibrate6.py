# scratch: diagnose diffusion bias on the ring; sweep geometry
import time

import numpy as np

from spkcurate.diffusion import TrainConfig, init_epsilon_net, make_schedule, sample, train
from spkcurate.gmm import fit_em, gmm_sample
from spkcurate.metrics import repeated_w1, wasserstein1
from spkcurate.seeds import rng_for
from spkcurate.whitening import fit_whitening, transform


def ring_mixture(n, rng, modes=8, radius=3.0, angle_spread=0.55, radial_spread=0.06):
    ks = rng.integers(0, modes, size=n)
    theta = 2 * np.pi * ks / modes + angle_spread * rng.standard_normal(n)
    r = radius + radial_spread * rng.standard_normal(n)
    return np.stack([r * np.cos(theta), r * np.sin(theta)], axis=1)


def study(seed, angle_spread, radial_spread, epochs, patience, label):
    rng = rng_for(seed, "ring")
    kw = dict(angle_spread=angle_spread, radial_spread=radial_spread)
    data = ring_mixture(2175 + 272 + 272, rng, **kw)
    train_x, val_x, test_x = data[:2175], data[2175:2447], data[2447:]
    wm = fit_whitening(train_x).with_d_prime(2)
    y_train, _ = transform(wm, train_x)
    y_val, _ = transform(wm, val_x)
    y_test, _ = transform(wm, test_x)

    def true_sampler(n, r):
        y, _ = transform(wm, ring_mixture(n, r, **kw))
        return y

    floor = repeated_w1(true_sampler, y_test, runs=30, rng=rng_for(seed, "floor"))

    sched = make_schedule(200, 1e-4, 0.05)
    net = init_epsilon_net(2, hidden=56, t_emb_dim=16, seed=seed)
    t0 = time.time()
    net, hist = train(net, sched, y_train,
                      TrainConfig(epochs=epochs, batch_size=64, learning_rate=1e-3,
                                  seed=seed, patience=patience), y_val=y_val)
    tt = time.time() - t0
    d_stats = repeated_w1(lambda n, r: sample(net, sched, n, r), y_test,
                          runs=30, rng=rng_for(seed, "w1d"))

    # radial geometry of generated vs true (in original coordinates)
    from spkcurate.whitening import inverse
    gen_y = sample(net, sched, 4000, rng_for(seed, "diag"))
    gen_x = inverse(wm, gen_y, np.empty((4000, 0)))
    rad = np.hypot(gen_x[:, 0], gen_x[:, 1])
    true_x = ring_mixture(4000, rng_for(seed, "diag2"), **kw)
    rad_t = np.hypot(true_x[:, 0], true_x[:, 1])
    print(f"[{label}] ep={len(hist)} t={tt:.0f}s floor={floor.mean:.4f} "
          f"diff={d_stats.mean:.4f}+-{d_stats.std:.4f} "
          f"rad gen {rad.mean():.3f}+-{rad.std():.3f} true {rad_t.mean():.3f}+-{rad_t.std():.3f}")

    wins, needs = 0, []
    for m in range(1, 11):
        gm = fit_em(y_train, m, seed=seed)
        g = repeated_w1(lambda n, r, _g=gm: gmm_sample(_g, n, r), y_test,
                        runs=30, rng=rng_for(seed, "w1g", m))
        win = d_stats.mean < g.mean
        wins += win
        needs.append(f"M{m}={g.mean:.3f}{'W' if win else 'L'}")
    print(f"   wins {wins}/10:", " ".join(needs))
    return wins


study(7, 0.55, 0.06, 2000, 2000, "full-train thin")
study(7, 0.55, 0.12, 600, 100, "thick12")
study(7, 0.65, 0.15, 600, 100, "thick15-wide")
