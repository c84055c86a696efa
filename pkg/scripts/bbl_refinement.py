#!/usr/bin/env python3
"""Integral of the minimal h for one BBL density pair across grid resolutions.

    python3 scripts/bbl_refinement.py gauss-box 11 15 21
"""
import argparse
import time

from heisineq.ineqlab import GridFunction, bbl_scan
from heisineq.suite import BBL_COMBOS, density_pairs

if __name__ == "__main__":
    pairs = {name: (f, g) for name, f, g in density_pairs()}
    ap = argparse.ArgumentParser()
    ap.add_argument("pair", choices=sorted(pairs))
    ap.add_argument("res", type=int, nargs="+")
    ap.add_argument("--s", type=float, default=0.5)
    a = ap.parse_args()
    f, g = pairs[a.pair]
    for res in a.res:
        t0 = time.perf_counter()
        out = bbl_scan(GridFunction(f), GridFunction(g), a.s, BBL_COMBOS, res)
        cells = "  ".join(f"{m}:p={p:g} {v[0]:.4f}" for (p, m), v in out.items())
        print(f"res={res:3d} ({time.perf_counter() - t0:5.1f} s)  {cells}")
