"""
Noise optimization
==================

Momentum gradient descent on J(ε) = 1 − cos(ε, ε′). ε′ is recomputed by a
round trip each iteration and held fixed inside the gradient.
"""

from noiselab import optimize_noise, sample_gaussian
from noiselab.harness.config import ExperimentConfig

cfg = ExperimentConfig({"T": 8})
c = cfg.suite()["blobs4_16d"]
pipe = cfg.build_pipeline(c)
s = cfg.optimizer()
print("settings", s)

eps0 = sample_gaussian(3, c.dim)
eps_star, trace = optimize_noise(eps0, pipe, s.n, s.lr, s.momentum, s.lr_schedule, return_policy="best")
for r in trace.iterates[:: max(1, s.n // 10)]:
    print(f"iter {r.index:>3}  loss {r.loss:.5f}  lr {r.lr:.4f}  step {r.step_norm:.2e}")
print(f"J(eps0) = {trace.initial_loss:.5f}   J(eps*) = {trace.best_loss:.5f} (iterate {trace.best_index})")
