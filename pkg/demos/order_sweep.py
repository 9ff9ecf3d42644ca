"""Error against an enlarged reference domain as the Padé order doubles.

Usage: python demos/order_sweep.py [case] [outdir]; the case defaults to 11
(surface tension, c_f = 1).  Runs at desk resolution.
"""
import sys
from dataclasses import replace
from pathlib import Path

from cphabc.harness import case_catalog, compute_errors, run_case, run_reference, write_errors_csv, write_study_csv
from cphabc.plot import emit_line_plot

cid = sys.argv[1] if len(sys.argv) > 1 else "11"
out = Path(sys.argv[2] if len(sys.argv) > 2 else f"demo_out/sweep_{cid}")
out.mkdir(parents=True, exist_ok=True)

case = case_catalog()[cid].desk()
ref = run_reference(case)
rows = []
for N in (2, 4, 8, 16, 32):
    run = run_case(replace(case, order=N))
    e_eta, e_phi, E_eta, E_phi = compute_errors(run, ref)
    write_errors_csv(out / f"errors_N{N}.csv", run.times, e_eta, e_phi)
    rows.append((case.h, N, E_eta, E_phi))
    print(f"N={N:3d}  E_eta={E_eta:.4e}  E_phi={E_phi:.4e}")
write_study_csv(out / "study.csv", rows)
# errors start at exactly zero; plot from the second sample on
for N in (2, 32):
    lines = (out / f"errors_N{N}.csv").read_text().splitlines()
    (out / f"errors_N{N}_tail.csv").write_text("\n".join([lines[0], *lines[2:]]) + "\n")
    print("wrote", emit_line_plot(out / f"errors_N{N}_tail.csv", log_y=True, title=f"case {cid}, N = {N}"))
