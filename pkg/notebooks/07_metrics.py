"""
Quality metrics and paired statistics
=====================================

The testbed provides ground-truth sample quality, namely the
log-likelihood under the data mixture and the distance to the nearest
mode. Comparisons between two arms use winning rates (ties count one half)
and Spearman's rank correlation.
"""

import numpy as np

from noiselab.metrics import rank_correlation, sample_quality, winning_rate
from noiselab.testbed import load_conditions

c = load_conditions()["anisotropic_pair_2d"]
for x in (c.means[0], c.means[0] + np.array([0.5, 0.0]), np.zeros(2)):
    print(x, sample_quality(x, c))

print("winning rate", winning_rate([(2, 1), (0, 3), (5, 5), (4, 1)]))
print("spearman    ", rank_correlation([1, 2, 3, 4, 5], [2, 1, 4, 3, 5]))
