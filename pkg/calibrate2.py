# scratch: estimator-agreement diagnostics across world parameter variants
import numpy as np

from spkcurate.pipeline import SelectionSettings, estimator_agreement
from spkcurate.world import WorldConfig, generate_world

settings = SelectionSettings()

variants = {
    "current": {},
    "less_label_noise": {"speaker_quality_std": 0.12, "sample_quality_noise_std": 0.05},
    "no_slope": {"quality_slope": 0.0},
    "slope_only_less_noise": {
        "quality_slope": 0.5,
        "speaker_quality_std": 0.12,
        "sample_quality_noise_std": 0.05,
    },
    "wide_range_less_noise": {
        "quality_lo": 3.4,
        "quality_hi": 4.6,
        "speaker_quality_std": 0.12,
        "sample_quality_noise_std": 0.05,
    },
    "wide_range_slope_low_noise": {
        "quality_lo": 3.4,
        "quality_hi": 4.6,
        "quality_slope": 0.45,
        "speaker_quality_std": 0.1,
        "sample_quality_noise_std": 0.05,
    },
}

for name, overrides in variants.items():
    rs = []
    for seed in (101, 102, 103):
        cfg = WorldConfig(seed=seed, **overrides)
        world = generate_world(cfg)
        agr = estimator_agreement(world, settings)
        diff = agr.small_predictions - agr.full_predictions
        rs.append(
            (
                agr.r,
                float(np.std(agr.full_predictions)),
                float(np.std(diff)),
            )
        )
    print(
        f"{name:30s} "
        + "  ".join(f"r={r:.3f} sd_full={s:.2f} sd_diff={d:.2f}" for r, s, d in rs)
    )
