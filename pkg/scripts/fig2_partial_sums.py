"""Partial sums and Borel values for N = 0..3 against the exact levels (OUT/fig2.svg).

Usage: python3 scripts/fig2_partial_sums.py [--cache-dir DIR] [--out DIR]
"""
import argparse
from pathlib import Path

from wkbborel.experiment import RunConfig, load_coefficients, run_compare
from wkbborel.plots import emit_plot


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--cache-dir", type=Path, default=None)
    parser.add_argument("--out", type=Path, default=Path("out"))
    args = parser.parse_args(argv)
    cfg = RunConfig(n_from=0, n_to=3, cache_dir=args.cache_dir, out=args.out)
    records = run_compare(cfg)
    t = load_coefficients(cfg)["t"]
    print(f"wrote {emit_plot((records, t), 'fig2', args.out / 'fig2.svg')}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
