"""Reference values computed independently of the package (mpmath, 20 digits).

E|B_1| = sqrt(2/pi) by quadrature of |x| against the normal density; the
absorption probability of a Brownian motion started at 1 by time 25 from the
reflection principle, 2 * Phi(-1/5).
"""

import math

E_ABS_B1 = 0.79788456080286535588
HALF_E_ABS_B1 = 0.39894228040143267794
P_ABSORBED_START1_T25 = 0.84148058112179395391


def arcsine_cdf(x):
    return 2.0 / math.pi * math.asin(math.sqrt(min(max(x, 0.0), 1.0)))


def gamblers_ruin_up(m, k):
    """P(reach k before 0 | start m) for a driftless diffusion."""
    return min(max(m / k, 0.0), 1.0)
