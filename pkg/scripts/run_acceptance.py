#!/usr/bin/env python3
"""Run the acceptance suite (or a subset) and print one line per criterion.

    python3 scripts/run_acceptance.py --out runs/acc --only 1,2,3
"""
import argparse
import sys

from heisineq.cli import main

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="runs/acceptance")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--only")
    ap.add_argument("--threads", type=int)
    a = ap.parse_args()
    argv = ["reproduce-all", "--out", a.out, "--seed", str(a.seed)]
    if a.only:
        argv += ["--only", a.only]
    if a.threads:
        argv += ["--threads", str(a.threads)]
    sys.exit(main(argv))
