"""Rescaled growth of the expansion coefficients t_m (written to OUT/fig1.svg).

Usage: python3 scripts/fig1_coefficients.py [--cache-dir DIR] [--out DIR]
"""
import argparse
from pathlib import Path

import mpmath

from wkbborel.experiment import RunConfig, cache_coefficients, load_coefficients
from wkbborel.plots import emit_plot
from wkbborel.series import fit_growth


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--cache-dir", type=Path, default=None)
    parser.add_argument("--out", type=Path, default=Path("out"))
    args = parser.parse_args(argv)
    cfg = RunConfig(cache_dir=args.cache_dir, out=args.out)
    cache_coefficients(cfg)
    t = load_coefficients(cfg)["t"]
    model = fit_growth(t, window=(t.order - 80, t.order))
    print(f"a_t = {mpmath.nstr(model.a, 15)}, residual {mpmath.nstr(model.residual, 3)}")
    print(f"wrote {emit_plot(t, 'fig1', args.out / 'fig1.svg', a_t=model.a)}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
