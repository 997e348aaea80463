"""Command line entry point: ``wkbborel {coeffs,fit,eigen,compare,plot}``.

Every subcommand prints a summary and exits with status 0 only when all of
its non-flagged invariant checks pass (status 1 otherwise, 2 on usage errors).
"""
from __future__ import annotations

import argparse
import logging
import sys
from fractions import Fraction
from pathlib import Path

import mpmath
from mpmath import mpf

from .experiment import (RunConfig, auto_digits, cache_coefficients, emit_csv, growth_constant,
                         invariant_checks, load_coefficients, read_csv, run_compare)
from .numerics import PrecisionContext, beta
from .plots import emit_plot
from .series import fit_growth
from .spectral import solve_eigenvalue, write_eigen_table

__all__ = ["main", "build_parser", "coefficient_checks"]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--digits", type=int, default=None,
                        help="eigenvalue digits (default: automatic per level)")
    common.add_argument("--series-digits", type=int, default=300,
                        help="working digits of the coefficient caches")
    common.add_argument("--max-order", type=int, default=200, help="highest t_m order")
    common.add_argument("--n-from", type=int, default=0)
    common.add_argument("--n-to", type=int, default=8)
    common.add_argument("--alpha-phase", type=str, default=None,
                        help="phase of alpha as a multiple of pi (default 1/8)")
    common.add_argument("--cache-dir", type=Path, default=None,
                        help="coefficient cache directory (env WKBBOREL_CACHE)")
    common.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="wkbborel", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("coeffs", parents=[common], help="generate or verify coefficient caches")
    sub.add_parser("fit", parents=[common], help="fit the factorial growth constant of t_m")
    sub.add_parser("eigen", parents=[common], help="solve exact eigenvalues")
    sub.add_parser("compare", parents=[common], help="WKB versus exact comparison table")
    plot = sub.add_parser("plot", parents=[common], help="write the SVG figures")
    plot.add_argument("--table", type=Path, default=None,
                      help="comparison CSV to plot (default: OUT/compare.csv, computed if missing)")
    return parser


def _config(args) -> RunConfig:
    phase = mpmath.pi / 8
    if args.alpha_phase is not None:
        frac = Fraction(args.alpha_phase)
        phase = mpmath.pi * frac.numerator / frac.denominator
    return RunConfig(n_from=args.n_from, n_to=args.n_to, digits=args.digits,
                     series_digits=args.series_digits, max_order=args.max_order,
                     alpha_phase=phase, cache_dir=args.cache_dir, out=args.out)


def _report(name: str, ok: bool, detail: str) -> bool:
    print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
    return ok


def coefficient_checks(coeffs: dict, digits: int = 100) -> list:
    """(name, passed, detail) for the closed-form low orders of r, s and t."""
    with mpmath.workdps(digits + 10):
        pi = mpmath.pi
        B4 = beta(Fraction(1, 4), Fraction(1, 2), PrecisionContext(digits + 10)) ** 4
        anchors = [
            ("r_0", coeffs["r"][0], mpf(-1)),
            ("r_1", coeffs["r"][1], 1 / (12 * pi)),
            ("s_2", coeffs["s"][2], -1 / (6 * pi)),
            ("s_3", coeffs["s"][3], 5 / (144 * pi ** 2) + 11 * B4 / (20736 * pi ** 4)),
            ("t_1", coeffs["t"][1], 1 / (9 * pi)),
            ("t_2", coeffs["t"][2], -5 / (648 * pi ** 2) - 11 * B4 / (31104 * pi ** 4)),
        ]
        tol = mpf(10) ** (-(digits - 10))
        out = []
        for name, got, want in anchors:
            err = abs(got - want)
            out.append((name, bool(err < tol), f"error {mpmath.nstr(err, 3)}"))
        t = coeffs["t"].coeffs
        bad = [m for m in range(2, len(t)) if mpmath.sign(t[m]) != (-1) ** (m // 2)]
        out.append(("t sign (-1)^l", not bad, f"violations at m = {bad[:5]}" if bad else f"m = 2..{len(t) - 1}"))
    return out


def _cmd_coeffs(cfg: RunConfig) -> int:
    paths = cache_coefficients(cfg)
    print(f"caches in {paths['t'].parent}")
    coeffs = load_coefficients(cfg)
    ok = True
    for name, passed, detail in coefficient_checks(coeffs, min(100, cfg.series_digits - 20)):
        ok &= _report(name, passed, detail)
    return 0 if ok else 1


def _cmd_fit(cfg: RunConfig) -> int:
    cache_coefficients(cfg)
    t = load_coefficients(cfg)["t"]
    hi = t.order
    model = fit_growth(t, window=(max(0, hi - 80), hi))
    with mpmath.workdps(30):
        ref = 2 / mpmath.pi ** 2
        print(f"a_t = {mpmath.nstr(model.a, 15)}  (2/pi^2 = {mpmath.nstr(ref, 15)})")
        print(f"nu = {model.nu}, window = {model.fit_window}, residual = {mpmath.nstr(model.residual, 4)}")
        ok = _report("a_t within 1e-4 of 0.2026414234", abs(model.a - mpf("0.2026414234")) < mpf("1e-4"),
                     mpmath.nstr(model.a - mpf("0.2026414234"), 4))
    return 0 if ok else 1


def _cmd_eigen(cfg: RunConfig) -> int:
    results = []
    for N in cfg.levels:
        digits = cfg.digits or auto_digits(N)
        res = solve_eigenvalue(N, PrecisionContext(digits))
        print(f"N = {N:3d}  E = {mpmath.nstr(res.E, 30)}  digits = {res.digits}")
        results.append(res)
    path = write_eigen_table(results, cfg.out / "eigen.txt")
    print(f"wrote {path}")
    ok = all(a.E < b.E for a, b in zip(results, results[1:]))
    ok = _report("E_N strictly increasing", ok, f"{len(results)} levels")
    return 0 if ok else 1


def _print_records(records) -> None:
    print(f"{'N':>3}  {'E_exact':>24}  {'Delta':>11}  {'Delta e^(pi N)':>14}  {'|oaa-borel|':>11}  flag")
    for r in records:
        with mpmath.workdps(30):
            print(f"{r.N:3d}  {mpmath.nstr(r.E_exact, 20):>24}  {mpmath.nstr(r.Delta, 4):>11}  "
                  f"{mpmath.nstr(r.Delta * mpmath.exp(mpmath.pi * r.N), 4):>14}  "
                  f"{mpmath.nstr(abs(r.E_oaa - r.E_borel), 3):>11}  {'*' if r.flagged else ''}")


def _cmd_compare(cfg: RunConfig) -> int:
    records = run_compare(cfg)
    _print_records(records)
    path = emit_csv(records, cfg.out / "compare.csv")
    print(f"wrote {path}")
    checks = invariant_checks(records)
    ok = True
    for c in checks:
        ok &= _report(f"{c.name} N={c.N}", c.passed, c.detail)
    flagged = [r.N for r in records if r.flagged]
    if flagged:
        print(f"flagged (below combined uncertainty, not checked): N = {flagged}")
    return 0 if ok else 1


def _cmd_plot(cfg: RunConfig, table: Path | None) -> int:
    cache_coefficients(cfg)
    t = load_coefficients(cfg)["t"]
    a_t = growth_constant(t)
    table = table or cfg.out / "compare.csv"
    if table.exists():
        records = read_csv(table)
    else:
        records = run_compare(cfg, t=t, a_t=a_t)
        emit_csv(records, table)
    written = [emit_plot(t, "fig1", cfg.out / "fig1.svg", a_t=a_t)]
    low = [r for r in records if r.N <= 3]
    if low:
        written.append(emit_plot((low, t), "fig2", cfg.out / "fig2.svg"))
    written.append(emit_plot(records, "fig3", cfg.out / "fig3.svg"))
    for p in written:
        print(f"wrote {p}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _config(args)
    except ValueError as exc:
        parser.error(str(exc))
    if args.command == "coeffs":
        return _cmd_coeffs(cfg)
    if args.command == "fit":
        return _cmd_fit(cfg)
    if args.command == "eigen":
        return _cmd_eigen(cfg)
    if args.command == "compare":
        return _cmd_compare(cfg)
    return _cmd_plot(cfg, args.table)


if __name__ == "__main__":
    sys.exit(main())
