#!/usr/bin/env python3
"""
Script to write seeded synthetic data sets for the command line.

Kinds:
- opf:     correlated renewable deviations (per-unit), one column per renewable of a case
- corner:  row coefficients in a disc, optionally with leading integer tag columns
- t2:      one Student-t(2) column

Usage: python scripts/generate_synthetic_data.py opf --case case6 --size 1000 --seed 7 --out data/case6.csv
       python scripts/generate_synthetic_data.py corner --size 500 --r1 1 --seed 3 --out data/corner.json
"""
import argparse
import os
import sys

import numpy as np

sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from app.core.exceptions import handle_cli_exception
from app.core.logging import setup_logging
from app.services.analysis.instances import corner_cloud, heavy_tail_sampler
from app.services.dataset import save_dataset
from app.services.opf import load_case, synthetic_deviations


def generate(args):
    if args.kind == "opf":
        case = load_case(args.case)
        return synthetic_deviations(args.size, case.n_renewable, args.seed, scale=args.scale)
    if args.kind == "corner":
        return corner_cloud(args.size, seed=args.seed, r1=args.r1)
    return heavy_tail_sampler()(np.random.default_rng(args.seed), args.size)


def main():
    parser = argparse.ArgumentParser(description="Generate a seeded synthetic data set")
    parser.add_argument("kind", choices=["opf", "corner", "t2"])
    parser.add_argument("--size", type=int, default=1000)
    parser.add_argument("--seed", type=int, required=True)
    parser.add_argument("--out", required=True, help="output path (.csv or .json)")
    parser.add_argument("--case", default="case6", help="case whose renewables set the column count (opf)")
    parser.add_argument("--scale", type=float, default=0.16, help="deviation standard deviation in p.u. (opf)")
    parser.add_argument("--r1", type=int, default=0, help="integer tag columns (corner)")
    parser.add_argument("--header", action="store_true", help="write a CSV header line")
    args = parser.parse_args()

    setup_logging()
    try:
        ds = generate(args)
        save_dataset(ds, args.out, header=args.header)
    except Exception as e:
        return handle_cli_exception(e)
    print(f"✓ Wrote {ds.size} points ({ds.r1} integer + {ds.r2} real columns) to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
