"""
Noise selection
===============

Score K seeded noises and keep the most stable one. Ties within rounding
go to the lowest seed.
"""

from noiselab import select_noise
from noiselab.harness.config import ExperimentConfig

cfg = ExperimentConfig({"T": 4})
c = cfg.suite()["ring8_2d"]
pipe = cfg.build_pipeline(c)

stable, records = select_noise(pipe, K=32, objective="max")
unstable, _ = select_noise(pipe, K=32, objective="min")
print(f"stable   seed {stable.seed:>2}  score {stable.score:+.4f}  loglik {stable.quality.loglik:.3f}")
print(f"unstable seed {unstable.seed:>2}  score {unstable.score:+.4f}  loglik {unstable.quality.loglik:.3f}")

# A pool of worker processes returns the same records in the same order.
_, again = select_noise(pipe, K=32, jobs=2)
print("parallel matches serial:", [r.score for r in again] == [r.score for r in records])
