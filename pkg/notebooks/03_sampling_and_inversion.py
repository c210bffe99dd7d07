"""
Denoising and inversion
=======================

A pipeline pairs a predictor with a schedule. ``denoise`` walks noise to a
sample, and ``invert`` walks a sample back to noise. Approximate inversion
reuses the prediction at the cleaner state. Exact inversion solves the
implicit step equation.
"""

import numpy as np

from noiselab import Pipeline, sample_gaussian
from noiselab.schedule import build_ddim_schedule, build_edm_schedule
from noiselab.testbed import NoisePredictor, load_conditions

c = load_conditions()["bimodal_2d"]
eps = sample_gaussian(0, c.dim)

sched = build_ddim_schedule(8)
pipe = Pipeline(NoisePredictor(c, sched), sched)
traj = pipe.denoise(eps)
print("denoise steps", traj.steps)
print("x0", traj.end)

for mode in ("approx", "exact"):
    back = pipe.invert(traj.end, mode=mode).end
    print(f"{mode:<6} eps' = {back}  |eps' - eps| = {np.linalg.norm(back - eps):.2e}")

# The EDM family scales the noise by sigma_max before walking down the levels.
edm = build_edm_schedule(8)
pipe_edm = Pipeline(NoisePredictor(c), edm, mode="exact")
x0 = pipe_edm.denoise(eps).end
print("EDM x0", x0, " recovered eps", pipe_edm.invert(x0).end / pipe_edm.noise_scale)
