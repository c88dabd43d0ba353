# scratch: ring-mixture study for the diffusion-vs-GMM comparison
import time

import numpy as np

from spkcurate.diffusion import TrainConfig, init_epsilon_net, make_schedule, sample, train
from spkcurate.gmm import fit_em, gmm_sample
from spkcurate.metrics import repeated_w1
from spkcurate.seeds import rng_for
from spkcurate.whitening import fit_whitening, transform


def ring_mixture(n, rng, modes=8, radius=3.0, angle_spread=0.55, radial_spread=0.06):
    ks = rng.integers(0, modes, size=n)
    theta = 2 * np.pi * ks / modes + angle_spread * rng.standard_normal(n)
    r = radius + radial_spread * rng.standard_normal(n)
    return np.stack([r * np.cos(theta), r * np.sin(theta)], axis=1)


def run(seed=7, angle_spread=0.55, radial_spread=0.06, epochs=2000, patience=100):
    rng = rng_for(seed, "ring")
    kw = dict(angle_spread=angle_spread, radial_spread=radial_spread)
    data = ring_mixture(2175 + 272 + 272, rng, **kw)
    train_x, val_x, test_x = data[:2175], data[2175:2447], data[2447:]

    wm = fit_whitening(train_x).with_d_prime(2)
    y_train, _ = transform(wm, train_x)
    y_val, _ = transform(wm, val_x)
    y_test, _ = transform(wm, test_x)

    # oracle floor: W1 of true-sampler draws against the test set
    def true_sampler(n, r):
        fresh = ring_mixture(n, r, **kw)
        y, _ = transform(wm, fresh)
        return y

    floor = repeated_w1(true_sampler, y_test, runs=30, rng=rng_for(seed, "floor"))
    print(f"oracle floor: {floor.mean:.4f} +- {floor.std:.4f}")

    sched = make_schedule(200, 1e-4, 0.05)
    net = init_epsilon_net(2, hidden=56, t_emb_dim=16, seed=seed)
    t0 = time.time()
    net, hist = train(
        net, sched, y_train,
        TrainConfig(epochs=epochs, batch_size=64, learning_rate=1e-3,
                    seed=seed, patience=patience),
        y_val=y_val,
    )
    print(f"trained {len(hist)} epochs in {time.time()-t0:.0f}s, "
          f"best val={min(h[2] for h in hist):.4f}")

    d_stats = repeated_w1(lambda n, r: sample(net, sched, n, r), y_test,
                          runs=30, rng=rng_for(seed, "w1d"))
    print(f"diffusion: {d_stats.mean:.4f} +- {d_stats.std:.4f}")

    wins = 0
    t0 = time.time()
    for m in range(1, 11):
        gm = fit_em(y_train, m, seed=seed)
        g_stats = repeated_w1(lambda n, r, _g=gm: gmm_sample(_g, n, r), y_test,
                              runs=30, rng=rng_for(seed, "w1g", m))
        sep = g_stats.mean - 2 * max(g_stats.std, d_stats.std)
        win = d_stats.mean < g_stats.mean
        wins += win
        flag = "WIN " if win else "LOSS"
        sep_ok = "sep2std" if d_stats.mean < sep else "       "
        print(f"  M={m:2d}: {g_stats.mean:.4f} +- {g_stats.std:.4f}  {flag} {sep_ok}")
    print(f"wins: {wins}/10  (gmm time {time.time()-t0:.0f}s)")


run()
