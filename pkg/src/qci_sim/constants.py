"""Pinned physical constants (SI, exact or CODATA 2018)."""

import math

H = 6.62607015e-34
HBAR = H / (2.0 * math.pi)
K_B = 1.380649e-23
M_NEUTRON = 1.67492749804e-27

# 2*sqrt(2 ln 2): FWHM of a Gaussian PDF in units of its standard deviation.
FWHM_PER_SIGMA = 2.0 * math.sqrt(2.0 * math.log(2.0))
# Coherence length in units of the position-PDF standard deviation.
LC_PER_SIGMA = 4.0 * math.pi
