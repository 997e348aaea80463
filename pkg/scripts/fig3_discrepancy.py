"""log10 |E_exact - E_WKB| against N with the e^(-pi N) reference (OUT/fig3.svg, OUT/compare.csv).

Usage: python3 scripts/fig3_discrepancy.py [--n-to 23] [--cache-dir DIR] [--out DIR]
"""
import argparse
from pathlib import Path

from wkbborel.experiment import RunConfig, emit_csv, run_compare
from wkbborel.plots import emit_plot


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n-to", type=int, default=23)
    parser.add_argument("--cache-dir", type=Path, default=None)
    parser.add_argument("--out", type=Path, default=Path("out"))
    args = parser.parse_args(argv)
    cfg = RunConfig(n_from=0, n_to=args.n_to, cache_dir=args.cache_dir, out=args.out)
    records = run_compare(cfg)
    print(f"wrote {emit_csv(records, args.out / 'compare.csv')}")
    print(f"wrote {emit_plot(records, 'fig3', args.out / 'fig3.svg')}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
