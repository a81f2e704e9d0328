"""Refinement study of shrinker and eigenfield residuals under the fd4 backend."""
import argparse

import numpy as np

from shrinker_lab import build_model, parse_model, shrinker_residual
from shrinker_lab.suites import eigenfield_residuals

LADDERS = {"circle": [16, 32, 64, 128], "clifford:n=2": [16, 32, 64],
           "al:p=2,q=3": [64, 128, 256, 512], "product(al:p=2,q=3;circle)": [(64, 16), (128, 32), (256, 64)]}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--model", default=None, help="single model spec (default: whole catalog)")
    ap.add_argument("--backend", default="fd4")
    args = ap.parse_args()
    specs = [args.model] if args.model else list(LADDERS)
    for spec in specs:
        print(f"== {spec} ({args.backend})")
        prev = None
        for res in LADDERS.get(spec, [32, 64, 128]):
            m = build_model(parse_model(spec), res, backend=args.backend)
            r = eigenfield_residuals(m)
            row = np.array([shrinker_residual(m), r["LH_minus_H"], r["Lw_minus_half_w"]])
            orders = "" if prev is None else "  orders " + " ".join(
                f"{o:5.2f}" for o in np.log2(prev / np.maximum(row, 1e-300)))
            print(f"  {'x'.join(map(str, np.atleast_1d(res))):>8}  shrinker {row[0]:.3e}  LH-H {row[1]:.3e}  "
                  f"Lw-w/2 {row[2]:.3e}{orders}")
            prev = row


if __name__ == "__main__":
    main()
