"""What happens when the surface and basin boundaries use a_s = a_f = 1
instead of coefficients that share one speed ratio.

The incompatible run is flagged when its basin energy grows past ten times
its value at the end of the forcing.  The outcome depends on the case and
resolution, so the script only reports it.
"""
import sys
from dataclasses import replace

import numpy as np

from cphabc.harness import case_catalog, incompatibility_experiment

cid = sys.argv[1] if len(sys.argv) > 1 else "211"
case = replace(case_catalog()[cid].desk(), order=64, keep_fraction=1.0)
good, bad, flagged = incompatibility_experiment(case)
for label, r in (("compatible", good), ("a_s = a_f = 1", bad)):
    if r.meta.get("diverged"):
        print(f"{label:>14}: diverged")
        continue
    k = int(np.searchsorted(r.times, case.T_excit - 1e-12))
    print(f"{label:>14}: E_basin at T_excit {r.E_basin[k]:.3e}, at T {r.E_basin[-1]:.3e}, max after {r.E_basin[k:].max():.3e}")
print("incompatible run flagged:", flagged)
