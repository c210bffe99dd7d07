"""
Inversion stability
===================

The stability of a noise ε is the cosine between ε and ε′ = invert(denoise(ε)).
Exact inversion sends every noise back to itself. Approximate inversion
does not, and how far it strays depends on the noise.
"""

from noiselab import sample_gaussian
from noiselab.harness.config import ExperimentConfig
from noiselab.stability import stability_record

cfg = ExperimentConfig({"T": 4})
c = cfg.suite()["skewed_trimodal_2d"]

for mode in ("approx", "exact"):
    pipe = cfg.with_overrides(inversion={"mode": mode}).build_pipeline(c)
    scores = [stability_record(s, sample_gaussian(s, c.dim), pipe).score for s in range(6)]
    print(mode, " ".join(f"{v:+.4f}" for v in scores))

# Each record also carries the quality of the generated sample.
pipe = cfg.build_pipeline(c)
rec = stability_record(0, sample_gaussian(0, c.dim), pipe)
print("seed 0:", f"score={rec.score:.4f}", rec.quality)
