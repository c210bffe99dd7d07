"""
The analytic testbed
====================

A Gaussian mixture stands in for a trained network. Diffusing it keeps it
a Gaussian mixture, so its score, and hence the ideal noise prediction,
is available in closed form.
"""

import math

import numpy as np

from noiselab.schedule import build_ddim_schedule
from noiselab.testbed import diffused_log_density, load_conditions, predict_noise

suite = load_conditions()
for name, c in suite.items():
    print(f"{name:<22} d={c.dim:<3} components={c.n_components}")

# Check the closed-form noise prediction against finite differences of the
# diffused log density at one probe.
c = suite["ring8_2d"]
sched = build_ddim_schedule(8)
t, x = 3, np.array([1.0, 2.0])
h = 1e-5
fd = np.array(
    [
        (diffused_log_density(x + h * e, t, c, sched) - diffused_log_density(x - h * e, t, c, sched)) / (2 * h)
        for e in np.eye(2)
    ]
)
print("analytic  ", predict_noise(x, t, c, sched))
print("finite dif", -math.sqrt(1 - sched.alpha_bar[t]) * fd)

# The density flattens toward N(0, I) as t grows.
for t in (0, 2, 4, 8):
    print(f"t={t}  log p_t(0) = {diffused_log_density(np.zeros(2), t, c, sched):.4f}")
