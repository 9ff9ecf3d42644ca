"""Dropping most auxiliary fields at c_f = 100.

Case 211 at desk resolution with order 1024: the reduced boundary keeps 6 %
of the terms, the full one keeps all of them.  Both are compared with a
reference that uses the full boundary on a wider domain.  About three
minutes, most of it in the reference.
"""
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from cphabc.harness import case_catalog, compute_errors, run_case, run_reference, write_energies_csv
from cphabc.plot import emit_line_plot

out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_out/reduction")
out.mkdir(parents=True, exist_ok=True)

case = case_catalog()["211"].desk()
ref = run_reference(case)
for keep in (0.01, 0.06, 1.0):
    run = run_case(replace(case, keep_fraction=keep))
    *_, E_eta, E_phi = compute_errors(run, ref)
    k = int(np.searchsorted(run.times, case.T_excit - 1e-12))
    total = run.E_surface + run.E_basin
    print(f"keep {keep:4.2f} ({run.meta['active_terms']:4d} terms, {run.meta['dofs']} dofs): "
          f"E_eta {E_eta:.3e}, E_phi {E_phi:.3e}, "
          f"largest post-excitation energy step {np.diff(total[k:]).max() / total.max():.1e}, "
          f"E_surface(T)/max {run.E_surface[-1] / run.E_surface.max():.1e}")
    write_energies_csv(out / f"energies_keep{keep}.csv", run)
print("wrote", emit_line_plot(out / "energies_keep0.06.csv", title="case 211, 6 % of the terms"))
