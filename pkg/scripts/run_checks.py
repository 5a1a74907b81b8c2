"""Run every identity and inequality check once and print a verdict line each.

Exits nonzero if any check fails.
"""

import argparse
import sys

import numpy as np

from floatlab.convexfn import Ellipse, catalog, lq_norm_square
from floatlab.experiments import cap_sandwich_check, finiteness_suite, uniform_bound_check
from floatlab.surface import check_affine_invariance, check_gauge_relation, check_isoperimetric, check_valuation


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--json", action="store_true", help="print full reports as JSON lines")
    args = ap.parse_args()
    cat = catalog()
    reports = [
        check_affine_invariance(cat["parabola"], [[2.0]]),
        check_affine_invariance(cat["aniso-quad"], [[1.5, 0.4], [0.2, 0.9]], [0.3, -0.1]),
        check_valuation(cat["max(x^2,-x)"], cat["max(x^2,x)"]),
        check_isoperimetric(cat["x^2"]),
        check_isoperimetric(cat["paraboloid"]),
        check_isoperimetric(lq_norm_square(4.0, 1.0)),
        check_gauge_relation(Ellipse(1.0, 1.0)),
        check_gauge_relation(Ellipse(2.0, 0.5)),
        cap_sandwich_check(200),
        uniform_bound_check(cat["parabola"], np.linspace(-2, 2, 81), 1e-4),
        finiteness_suite(cat["parabola"]),
        finiteness_suite(cat["huber"]),
    ]
    for rep in reports:
        print(rep.to_json() if args.json else rep.line())
        for note in rep.notes:
            if not args.json:
                print(f"    note: {note}")
    sys.exit(0 if all(r.passed for r in reports) else 1)


if __name__ == "__main__":
    main()
