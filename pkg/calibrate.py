# scratch calibration probe (not part of the package)
import time

import numpy as np

from spkcurate.pipeline import (
    GenerationSettings,
    SelectionSettings,
    build_latent_models,
    estimator_agreement,
    evaluate_corpus,
    latent_triple,
    select_baseline,
    select_ours,
    w1_comparison,
)
from spkcurate.world import WorldConfig, generate_world

t0 = time.time()
cfg = WorldConfig(seed=101)
world = generate_world(cfg)
print(f"world: {len(world)} samples in {time.time()-t0:.1f}s")

settings = SelectionSettings()
t0 = time.time()
ours = select_ours(world, settings)
print(f"ours: |C|={len(ours.corpus)} theta={ours.theta_hq:.3f} in {time.time()-t0:.1f}s")
for r in ours.reports:
    print("   ", r)

t0 = time.time()
baseline, _ = select_baseline(world, settings, n=len(ours.corpus))
print(f"baseline: |C|={len(baseline)} in {time.time()-t0:.1f}s")

# per-cluster corpus composition
def comp(corpus):
    rows = [world.index_of(s) for s in corpus.sample_ids()]
    return np.bincount(world.cluster[rows], minlength=cfg.n_clusters)

print("ours per-cluster:    ", comp(ours.corpus))
print("baseline per-cluster:", comp(baseline))

t0 = time.time()
ev_ours = evaluate_corpus(world, ours.corpus, ours.theta_hq)
ev_base = evaluate_corpus(world, baseline, ours.theta_hq)
print(f"eval in {time.time()-t0:.1f}s")
print(f"hq ours={ev_ours.hq_ratio:.3f} base={ev_base.hq_ratio:.3f}")
print(f"w  ours={ev_ours.mst_spread:.1f} base={ev_base.mst_spread:.1f}")

# top-region tail comparison
for margin in (0.3, 0.5, 0.8, 1.2):
    edge = ours.theta_hq + margin
    print(
        f"tail>{edge:.2f}: ours={np.sum(ev_ours.scores > edge)} "
        f"base={np.sum(ev_base.scores > edge)}"
    )

# score distribution summaries per cluster for ours
for name, ev in [("ours", ev_ours), ("base", ev_base)]:
    means = [ev.scores[world.cluster == c].mean() for c in range(cfg.n_clusters)]
    print(name, "cluster score means:", np.round(means, 2))

t0 = time.time()
agr = estimator_agreement(world, settings)
print(f"estimator agreement r={agr.r:.4f} in {time.time()-t0:.1f}s")
