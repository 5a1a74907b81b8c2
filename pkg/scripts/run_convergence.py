"""Convergence tables for catalog functions.

Writes one CSV (rows per delta) and one JSON report per function and mode
into the output directory, then prints a summary line for each.
"""

import argparse
from pathlib import Path

from floatlab.convexfn import catalog
from floatlab.experiments import DeltaLadder, GridSpec, default_ladder, proposition_ratio, theorem_ratio


def main():
    cat = catalog()
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--functions", default="parabola,x^2,x^2/2+x^4/4,paraboloid",
                    help=f"comma-separated catalog keys from: {', '.join(sorted(cat))}")
    ap.add_argument("--mode", choices=("theorem", "proposition", "both"), default="both")
    ap.add_argument("--grid-1d", type=int, default=201)
    ap.add_argument("--grid-2d", type=int, default=41)
    ap.add_argument("--ladder", help="max:min:count (default depends on dimension)")
    ap.add_argument("--out", type=Path, default=Path("results"))
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    modes = ("theorem", "proposition") if args.mode == "both" else (args.mode,)
    for key in args.functions.split(","):
        psi = cat[key.strip()]
        if args.ladder:
            hi, lo, count = args.ladder.split(":")
            ladder = DeltaLadder(float(hi), float(lo), int(count))
        else:
            ladder = default_ladder(psi.dim)
        grid = GridSpec(args.grid_1d if psi.dim == 1 else args.grid_2d)
        for mode in modes:
            run = theorem_ratio if mode == "theorem" else proposition_ratio
            rep = run(psi, ladder, grid)
            stem = f"{mode}_{key.replace('/', '_').replace('^', '')}"
            (args.out / f"{stem}.csv").write_text(rep.to_csv())
            (args.out / f"{stem}.json").write_text(rep.to_json(indent=2) + "\n")
            print(f"{mode:11s} {key:22s} slope={rep.slope:.4f} limit={rep.limit:.6f} "
                  f"target={rep.target:.6f} rel_dev={rep.rel_deviation:.2e}")


if __name__ == "__main__":
    main()
