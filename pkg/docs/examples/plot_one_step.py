"""
=============================================
One-step R-estimation of a bivariate shape
=============================================
"""

import numpy

from rank2shape import OneStepConfig, StudentScore, VanDerWaerdenScore, r_estimate, sample, tyler_shape
from rank2shape.sampler import parse_family

####################################################################
# Draw a heavy tailed sample
# --------------------------
# A bivariate Student t3 law with a known shape matrix, centred at the origin

V = numpy.array([[1.0, 0.5], [0.5, 2.0]])
data = sample(parse_family("t:3", V=V), 250, seed=2024)

####################################################################
# Preliminary estimate
# --------------------
# Tyler's estimator is root-n consistent under every elliptical law

tyler = tyler_shape(data, numpy.zeros(2))
print("Tyler:\n", tyler.V, "\niterations:", tyler.iterations)

####################################################################
# One-step R-estimates
# --------------------
# The step length comes from the located crossing; alpha_star estimates the cross-information

for f1 in (VanDerWaerdenScore(), StudentScore(3)):
    result = r_estimate(data, OneStepConfig(f1=f1))
    print(f1.to_string(), "\n", result.V, "\nalpha*:", result.alpha_star)
