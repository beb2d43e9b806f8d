"""Marginal visibility versus scatterer width for one and two movable scatterers.

Replacing the beamsplitter by a second identical scatterer doubles the
coherence penalty, so the lower trace is the upper one squeezed by 1/sqrt(2)
along the width axis.

Run: python3 demos/visibility_traces.py
"""

import numpy as np

from qci_sim import analysis as A

params = A.Fig3Params()  # m/M = 1/1200, x0 = 5 lambda, particle L_c = 30 x0
f = np.linspace(0.05, 2.5, 50)
upper = A.visibility_scan("one-scatterer", f, params)
lower = A.visibility_scan("two-scatterer", f, params)

print(" FWHM/lambda   one-scatterer   two-scatterer")
for x, u, l in list(zip(f, upper.visibility, lower.visibility))[:16:2]:
    print(f"   {x:6.3f}       {u:8.4f}        {l:8.4f}")
print(f"sqrt2 mapping max deviation: {A.sqrt2_mapping_check(upper, lower):.4f}")
print(f"threshold (visibility 0.05): L_c = {A.threshold_find(upper):.3f} lambda (one scatterer), "
      f"{A.threshold_find(lower):.3f} lambda (two)")
corr = A.correlated_visibility(0.3, params)
print(f"all-body correlated visibility at FWHM/lambda = 0.3: {corr['visibility']:.4f}")
