# scratch: latent study probe (whitening spectrum, diffusion training, triple)
import time

import numpy as np

from spkcurate.pipeline import (
    GenerationSettings,
    build_latent_models,
    latent_triple,
    w1_comparison,
)
from spkcurate.whitening import choose_dprime, fit_whitening
from spkcurate.world import WorldConfig, generate_world

world = generate_world(WorldConfig(seed=101))
matrix = world.embeddings_matrix()

wm = fit_whitening(matrix)
print("top eigvals:", np.round(wm.eigvals[:14], 2))
print("tail eigvals:", np.round(wm.eigvals[-6:], 5))
for e in (0.9, 0.99):
    print(f"d' at energy {e}: {choose_dprime(wm.eigvals, e)}")

gen = GenerationSettings(epochs=150, patience=40, gmm_components=(1, 4, 8))
t0 = time.time()
models = build_latent_models(matrix, gen)
print(f"latent models in {time.time()-t0:.1f}s; d'={models.whitening.d_prime}")
print(f"epochs run: {len(models.history)}, last: {models.history[-1]}")

t0 = time.time()
triple = latent_triple(world, models, m=1000)
print(f"triple in {time.time()-t0:.1f}s: d_RR={triple.d_rr:.3f} d_GG={triple.d_gg:.3f} d_RG={triple.d_rg:.3f}")
print("d_RR < min/10:", triple.d_rr < min(triple.d_gg, triple.d_rg) / 10)
print("rel gap:", abs(triple.d_rg - triple.d_gg) / triple.d_gg)

t0 = time.time()
rows = w1_comparison(models, gen)
print(f"w1 table in {time.time()-t0:.1f}s")
for name, stats in rows:
    print(f"  {name}: {stats.mean:.3f} +- {stats.std:.3f}")
