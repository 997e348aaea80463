"""Large-N spot check: truncated WKB at N = 50 000 against the exact eigenvalue.

The WKB series truncated at WKB order 12 (t_m for m <= 6) is compared with the
shooting eigenvalue at 90 digits.  The first omitted term t_7 delta^7 sets the
expected relative deviation, about 5e-67.  Runtime is about ten minutes.

Usage: python3 scripts/large_n_check.py [--n 50000] [--digits 90] [--cache-dir DIR]
"""
from __future__ import annotations

import argparse
import time
from pathlib import Path

import mpmath
from mpmath import mpf

from wkbborel.experiment import RunConfig, cache_coefficients, energy_scale, load_coefficients
from wkbborel.numerics import PrecisionContext
from wkbborel.series import r_series, s_series, t_series
from wkbborel.spectral import solve_eigenvalue
from wkbborel.wkb import quantization_series


def truncated_wkb(N: int, t, ctx: PrecisionContext, last: int = 6):
    """E_N from sum_{m <= last} t_m delta^m and the first omitted term (relative)."""
    with ctx.workdps():
        delta = 1 / (mpf(N) + mpf(1) / 2) ** 2
        partial = mpmath.fsum(t[m] * delta ** m for m in range(last + 1))
        return energy_scale(delta, ctx) * partial, t[last + 1] * delta ** (last + 1) / partial


def spot_check(N: int = 50000, digits: int = 90, t=None) -> dict:
    ctx = PrecisionContext(digits)
    if t is None:
        t = t_series(s_series(r_series(quantization_series(20), ctx), ctx), ctx)
    E_wkb, next_term = truncated_wkb(N, t, ctx)
    start = time.perf_counter()
    exact = solve_eigenvalue(N, ctx)
    with ctx.workdps():
        rel = (exact.E - E_wkb) / exact.E
    return {"N": N, "E_exact": exact.E, "E_wkb": E_wkb, "relative": rel, "next_term": next_term,
            "digits": exact.digits, "seconds": time.perf_counter() - start}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n", type=int, default=50000)
    parser.add_argument("--digits", type=int, default=90)
    parser.add_argument("--cache-dir", type=Path, default=None,
                        help="reuse a coefficient cache instead of the small built-in series")
    args = parser.parse_args(argv)
    t = None
    if args.cache_dir is not None:
        cfg = RunConfig(cache_dir=args.cache_dir)
        cache_coefficients(cfg)
        t = load_coefficients(cfg)["t"]
    out = spot_check(args.n, args.digits, t)
    with mpmath.workdps(args.digits):
        print(f"N = {out['N']}")
        print(f"E_exact   = {mpmath.nstr(out['E_exact'], out['digits'])}")
        print(f"E_wkb(12) = {mpmath.nstr(out['E_wkb'], out['digits'])}")
        print(f"relative deviation = {mpmath.nstr(out['relative'], 6)}")
        print(f"first omitted term = {mpmath.nstr(out['next_term'], 6)}")
        print(f"solver time {out['seconds']:.0f} s, {out['digits']} digits")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
