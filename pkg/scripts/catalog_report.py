"""Print F-functional, lowest spectrum and both stability verdicts for each catalog model."""
import argparse

import numpy as np

from shrinker_lab import build_model, parse_model
from shrinker_lab.spectral import assemble_weighted_problem, lowest_spectrum
from shrinker_lab.stability import analyze_spectrum, hamiltonian_verdict, lagrangian_verdict
from shrinker_lab.weighted import f_functional

CATALOG = ["circle", "clifford:n=2", "al:p=2,q=3", "product(al:p=2,q=3;circle)"]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--eigs", type=int, default=10)
    args = ap.parse_args()
    np.set_printoptions(precision=8, suppress=True)
    for spec in CATALOG:
        m = build_model(parse_model(spec))
        rep = lowest_spectrum(assemble_weighted_problem(m), args.eigs)
        print(f"== {spec}")
        print(f"  F = {f_functional(m):.12f}")
        print(f"  spectrum {rep.eigenvalues}")
        print(f"  Hamiltonian: {hamiltonian_verdict(m, analyze_spectrum(m)).tag}")
        print(f"  Lagrangian:  {lagrangian_verdict(m).tag}")


if __name__ == "__main__":
    main()
