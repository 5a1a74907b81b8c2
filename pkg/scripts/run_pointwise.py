"""Pointwise rate tables (psi_delta(x) - psi(x)) / delta^{2/(n+2)} at chosen points."""

import argparse
import json

from floatlab.convexfn import catalog
from floatlab.experiments import pointwise_rate


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--cases", default="x^2@0,parabola@1.3,huber@1.5,x^2/2+x^4/4@0.8",
                    help="comma-separated key@x pairs (1D catalog functions)")
    args = ap.parse_args()
    cat = catalog()
    for case in args.cases.split(","):
        key, _, x = case.partition("@")
        t = pointwise_rate(cat[key], float(x))
        print(json.dumps({"function": key, **t.to_dict()}))


if __name__ == "__main__":
    main()
