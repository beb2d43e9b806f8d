"""Three heavy scatterers: which marginal fringes survive when scatterers are traced out.

Run: python3 demos/four_body_trace.py
"""

import itertools

import numpy as np

from qci_sim.eigenstates import FourBodyPdf, trace_fourbody

pdf = FourBodyPdf(positions=(0.0, 2.3, 5.1), m=1.0, v=2 * np.pi)
d = np.linspace(-0.5, 0.5, 101)  # displacement of the kept scatterer
g = np.arange(64) * pdf.period / 64  # one period for each traced scatterer

for r in range(4):
    for open_set in itertools.combinations((2, 3, 4), r):
        reduced = trace_fourbody(pdf, open_set)
        kept = next((j for j in (2, 3, 4) if j not in open_set), None)
        if kept is None:
            vals = np.array([reduced()])
        else:
            vals = reduced(**{f"dx{kept}": d})
        numeric = pdf(*np.meshgrid(*[g if j in open_set else np.array([0.0]) for j in (2, 3, 4)],
                                   indexing="ij")).mean()
        print(f"traced {str(set(open_set) or '{}'):10s} pairs left {reduced.pairs!s:28s} "
              f"range {np.ptp(vals):6.3f}  check {abs(numeric - reduced()):.1e}")
