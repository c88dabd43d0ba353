# scratch: criteria 7/8/9 dry run across the five acceptance seeds
import numpy as np

from spkcurate.pipeline import (
    SelectionSettings,
    estimator_agreement,
    evaluate_corpus,
    select_baseline,
    select_ours,
)
from spkcurate.metrics import cumulative_histogram
from spkcurate.world import WorldConfig, generate_world

settings = SelectionSettings()
MARGIN = 1.2
SEEDS = (101, 102, 103, 104, 105)

for seed in SEEDS:
    world = generate_world(WorldConfig(seed=seed))
    ours = select_ours(world, settings)
    base, _ = select_baseline(world, settings, n=len(ours.corpus))
    ev_o = evaluate_corpus(world, ours.corpus, ours.theta_hq)
    ev_b = evaluate_corpus(world, base, ours.theta_hq)
    edges = np.round(np.arange(1.0, 5.001, 0.1), 10)
    top = edges[edges > ours.theta_hq + MARGIN]
    co = cumulative_histogram(ev_o.scores, top)
    cb = cumulative_histogram(ev_b.scores, top)
    n = len(world)
    tail_o = n - co
    tail_b = n - cb
    dom = bool(np.all(tail_b >= tail_o))
    agr = estimator_agreement(world, settings)
    added2 = ours.reports[1].added
    print(
        f"seed {seed}: |C|={len(ours.corpus)} added_k2={added2} "
        f"hq {ev_o.hq_ratio:.3f} vs {ev_b.hq_ratio:.3f} "
        f"w {ev_o.mst_spread:.0f} vs {ev_b.mst_spread:.0f} "
        f"tail_dom={dom} r={agr.r:.3f}"
    )
    if not dom:
        bad = [(float(e), int(to), int(tb)) for e, to, tb in zip(top, tail_o, tail_b) if to > tb]
        print("   violations:", bad[:6])
EOF