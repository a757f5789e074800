"""Write the CSV/SVG data for every figure into one directory.

Figures 2-6, 8 and 9 use the first bundled system; figure 7 uses the mass chain.
Usage: python3 scripts/run_figures.py [outdir] [--simulate-dgp]
"""

import argparse
import time
from pathlib import Path

from mpc_spectra import figures
from mpc_spectra.fileio import load_problem


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("outdir", nargs="?", default="figures")
    ap.add_argument("--simulate-dgp", action="store_true", help="also run the DGP closed loop for figure 7")
    ap.add_argument("--no-svg", action="store_true")
    args = ap.parse_args()
    sys1, sys2 = load_problem("system1.json"), load_problem("system2.json")
    for k, fn in sorted(figures.FIGURES.items()):
        t0 = time.perf_counter()
        kw = {"simulate": args.simulate_dgp} if k == 7 else {}
        tables = fn(sys2 if k == 7 else sys1, **kw)
        written = figures.emit(tables, Path(args.outdir) / f"figure{k}", svg=not args.no_svg)
        print(f"figure {k}: {len(written)} files in {time.perf_counter() - t0:.1f}s")


if __name__ == "__main__":
    main()
