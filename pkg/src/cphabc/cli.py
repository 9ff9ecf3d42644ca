"""Command-line front end: ``cphabc <command> [options]``."""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import asdict, replace
from pathlib import Path

import numpy as np
import scipy.io

from .config import CASE_KEYS, RUN_KEYS, ConfigError, parse_config, parse_inline
from .harness import (
    RunRecord,
    WaveBenchConfig,
    assemble_case,
    compute_errors,
    convergence_study,
    run_case,
    wave_benchmark,
    write_csv,
    write_energies_csv,
    write_errors_csv,
    write_study_csv,
)
from .pade import PadeSet, pade_error_table, threshold_counts
from .plot import emit_line_plot
from .sparse import SingularMatrixError

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3

# Orders tabulated by `pade-table` (powers of two from 4 to 1024).
TABLE_ORDERS = tuple(2**k for k in range(2, 11))


def _thread_cap() -> int | None:
    """``HABC_THREADS``: positive integer cap on assembly parallelism."""
    raw = os.environ.get("HABC_THREADS")
    if raw is None or raw == "":
        return None
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"HABC_THREADS: expected a positive integer, got {raw!r}") from None
    if n < 1:
        raise ConfigError(f"HABC_THREADS: expected a positive integer, got {raw!r}")
    return n


def _add_case_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="config file (key = value, optional [run]/[case] sections)")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="inline override")
    p.add_argument("--case")
    p.add_argument("--order", type=int)
    p.add_argument("--keep-fraction", type=float)
    p.add_argument("--h", type=float)
    p.add_argument("--dt", type=float)
    p.add_argument("--T", type=float)
    prof = p.add_mutually_exclusive_group()
    prof.add_argument("--desk", action="store_const", const="desk", dest="profile")
    prof.add_argument("--paper", action="store_const", const="paper", dest="profile")
    p.add_argument("--out")
    p.add_argument("--stride", type=int)
    p.add_argument("--dump-system", metavar="DIR")
    p.add_argument("--allow-incompatible", action="store_true", default=None)
    p.add_argument("--corner", choices=("ode", "neumann"))
    p.add_argument("--compat-mode", choices=("a", "b"))


_FLAG_KEYS = {
    "case": "case", "order": "order", "keep_fraction": "keep_fraction", "h": "h", "dt": "dt", "T": "T",
    "profile": "profile", "out": "out", "stride": "stride", "dump_system": "dump_system",
    "allow_incompatible": "allow_incompatible", "corner": "corner", "compat_mode": "compat_mode",
}


def _config_from_args(args):
    overrides = parse_inline(args.set)
    for attr, key in _FLAG_KEYS.items():
        v = getattr(args, attr, None)
        if v is not None:
            overrides[key] = v
    return parse_config(args.config, overrides)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cphabc", description="Coupled surface/basin wave solver with Padé HABCs")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, help_ in (("run", "truncated run (plus errors when the case has a reference)"),
                        ("reference", "run on the enlarged reference domain"),
                        ("study", "errors for several meshes and orders")):
        p = sub.add_parser(name, help=help_)
        _add_case_flags(p)
        if name == "run":
            p.add_argument("--no-reference", action="store_true", help="skip the reference and errors.csv")
        if name == "study":
            p.add_argument("--orders", default="2,4,8,16,32")
            p.add_argument("--meshes", help="comma-separated element sizes (default h, h/2, h/4)")
    p = sub.add_parser("compare", help="errors.csv from two saved field directories")
    p.add_argument("run_dir")
    p.add_argument("ref_dir")
    p.add_argument("--out", default=".")
    p = sub.add_parser("bench-wave", help="pure wave-equation HABC benchmark")
    p.add_argument("--orders", default="2,8,32")
    p.add_argument("--out", default=".")
    p = sub.add_parser("pade-table", help="coefficient counts above 1, 10 and 100")
    p.add_argument("--orders", help="comma-separated orders (default 4..1024 powers of two)")
    p.add_argument("--out", help="CSV path (default: stdout)")
    p = sub.add_parser("pade-error", help="f_N(X) - sqrt(1+X) on a grid of X")
    p.add_argument("--orders", default="2,8,32,128")
    p.add_argument("--x-max", type=float, default=100.0)
    p.add_argument("--points", type=int, default=101)
    p.add_argument("--out", help="CSV path (default: stdout)")
    p = sub.add_parser("plot", help="SVG line plot of CSV columns")
    p.add_argument("csv")
    p.add_argument("--columns", help="comma-separated y columns (default: all but x)")
    p.add_argument("--x")
    p.add_argument("--log", action="store_true", help="log10 y axis")
    p.add_argument("--out")
    p.add_argument("--title", default="")
    return ap


def _ints(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"orders: expected comma-separated integers, got {text!r}") from None


def _emit(text: str, path) -> None:
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def _csv_text(header, rows) -> str:
    from io import StringIO
    import csv
    buf = StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def save_fields(rec: RunRecord, out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    np.save(out / "times.npy", rec.times)
    np.save(out / "phi.npy", rec.phi)
    if rec.eta is not None:
        np.save(out / "eta.npy", rec.eta)


def load_fields(path: Path) -> RunRecord:
    path = Path(path)
    t = np.load(path / "times.npy")
    eta = np.load(path / "eta.npy") if (path / "eta.npy").exists() else None
    return RunRecord(path.name, t, np.zeros_like(t), np.zeros_like(t), eta=eta, phi=np.load(path / "phi.npy"))


def _write_meta(out: Path, cfg, case, rec: RunRecord) -> None:
    meta = {**rec.meta, "config_hash": case.config_hash(), "case": asdict(case)}
    meta["provenance"] = {k: cfg.source(k) for k in sorted({*RUN_KEYS, *CASE_KEYS})}
    (out / "meta.json").write_text(json.dumps(meta, sort_keys=True, indent=1, default=str) + "\n")
    (out / "config.toml").write_text(cfg.to_text())


def _dump_system(sys_, directory) -> None:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    for name in ("M", "C", "K"):
        scipy.io.mmwrite(str(d / f"{name}.mtx"), getattr(sys_, name), precision=17)


def cmd_run(args, reference: bool = False) -> int:
    cfg = _config_from_args(args)
    case = cfg.case_spec()
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    system = assemble_case(case, reference=reference)
    if cfg.dump_system:
        _dump_system(system, cfg.dump_system)
    rec = run_case(case, stride=cfg.stride, reference=reference, system=system)
    write_energies_csv(out / "energies.csv", rec)
    save_fields(rec, out / ("reference" if reference else "fields"))
    _write_meta(out, cfg, case, rec)
    if not reference and case.l_ref is not None and not args.no_reference:
        ref = run_case(case, stride=cfg.stride, reference=True)
        save_fields(ref, out / "reference")
        e_eta, e_phi, E_eta, E_phi = compute_errors(rec, ref)
        write_errors_csv(out / "errors.csv", rec.times, e_eta, e_phi)
        print(f"E_eta = {E_eta:.6e}  E_phi = {E_phi:.6e}")
    print(f"wrote {out}")
    return EXIT_OK


def cmd_compare(args) -> int:
    run_, ref = load_fields(Path(args.run_dir)), load_fields(Path(args.ref_dir))
    e_eta, e_phi, E_eta, E_phi = compute_errors(run_, ref)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if e_eta is None:
        e_eta = np.full_like(e_phi, np.nan)
    write_errors_csv(out / "errors.csv", run_.times, e_eta, e_phi)
    print(f"E_eta = {E_eta:.6e}  E_phi = {E_phi:.6e}")
    return EXIT_OK


def cmd_study(args) -> int:
    cfg = _config_from_args(args)
    case = cfg.case_spec()
    meshes = [float(v) for v in args.meshes.split(",")] if args.meshes else None
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = convergence_study(case, meshes, _ints(args.orders),
                             progress=lambda h, N, a, b: print(f"h={h:g} N={N} E_eta={a:.4e} E_phi={b:.4e}"))
    write_study_csv(out / "study.csv", rows)
    return EXIT_OK


def cmd_bench(args) -> int:
    res = wave_benchmark(WaveBenchConfig(), orders=_ints(args.orders))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(out / "wave_bench.csv", ["order", "E", "energy_ratio"],
              zip(res.orders, map(float, res.E), map(float, res.energy_ratio)))
    print(f"order-1 pinned vs first-order ABC: {res.order1_vs_classical:.3e}")
    return EXIT_OK


def cmd_pade_table(args) -> int:
    orders = _ints(args.orders) if args.orders else TABLE_ORDERS
    rows = [(N, *threshold_counts(N, (1, 10, 100))) for N in orders]
    _emit(_csv_text(["N", "count_gt_1", "count_gt_10", "count_gt_100"], rows), args.out)
    return EXIT_OK


def cmd_pade_error(args) -> int:
    if args.points < 2 or args.x_max <= 0:
        raise ConfigError("points: need at least 2 points on a positive X range")
    orders = _ints(args.orders)
    X = np.linspace(0.0, args.x_max, args.points)
    err = pade_error_table(orders, X)
    rows = [[f"{x:.17g}", *(f"{e:.17g}" for e in err[:, i])] for i, x in enumerate(X)]
    _emit(_csv_text(["X", *(f"N{N}" for N in orders)], rows), args.out)
    return EXIT_OK


def cmd_plot(args) -> int:
    cols = [c for c in args.columns.split(",") if c] if args.columns else None
    path = emit_line_plot(args.csv, cols, args.out, log_y=args.log, x_column=args.x, title=args.title)
    print(f"wrote {path}")
    return EXIT_OK


def dispatch(args) -> int:
    cmd = args.command
    if cmd == "run":
        return cmd_run(args)
    if cmd == "reference":
        args.no_reference = True
        return cmd_run(args, reference=True)
    handlers = {"compare": cmd_compare, "study": cmd_study, "bench-wave": cmd_bench,
                "pade-table": cmd_pade_table, "pade-error": cmd_pade_error, "plot": cmd_plot}
    if cmd not in handlers:
        raise ConfigError(f"unknown command {cmd!r}")
    return handlers[cmd](args)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    try:
        _thread_cap()
        return dispatch(args)
    except (ConfigError, KeyError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (FloatingPointError, SingularMatrixError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
