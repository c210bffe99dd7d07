"""
Noise schedules
===============

Two families of schedules drive every sampler in noiselab: a discrete
DDIM table of cumulative signal levels ᾱ_t, and a continuous EDM ladder
of noise levels σ_i.
"""

import numpy as np

from noiselab.schedule import build_ddim_schedule, build_ddpm_schedule, build_edm_schedule

# A short linear β schedule. ᾱ_0 = 1 by convention, and every further
# entry multiplies in one more α_t = 1 − β_t.
sched = build_ddpm_schedule(4, beta_start=0.1, beta_end=0.4)
print("beta      ", sched.beta)
print("alpha_bar ", sched.alpha_bar)

# The default sampling schedule keeps T of the 1000 training steps,
# evenly spaced, so a 4-step sampler still ends close to pure noise.
for T in (4, 16, 32):
    s = build_ddim_schedule(T)
    print(f"T={T:>2}  alpha_bar_T = {s.alpha_bar[-1]:.3e}  timesteps {s.timesteps[:4]}...")

# EDM levels follow a power-ρ rule between sigma_max and sigma_min and end
# at an extra level 0. The preconditioning coefficients come with them.
edm = build_edm_schedule(10)
np.set_printoptions(precision=4, suppress=True)
print("sigma  ", edm.sigma)
print("c_skip ", np.array([c.c_skip for c in edm.coeffs]))
print("c_out  ", np.array([c.c_out for c in edm.coeffs]))
