"""Compare every selector on one sample drawn from a test design."""

import argparse

import numpy as np

from bwsel.selectors import parse_selector, select
from bwsel.simulation import design_sample, find_h_ise
from bwsel.kernels import epanechnikov

SELECTORS = ["cv", "icv2", "icv8", "icvG", "oscv_left", "do", "ido2", "ido8", "idoG", "pi", "median13"]


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--design", type=int, default=1)
    p.add_argument("-n", type=int, default=200)
    p.add_argument("--seed", type=int, default=1)
    args = p.parse_args(argv)
    s = design_sample(args.design, args.n, np.random.default_rng(args.seed))
    print(f"{'ISE':>10s} {find_h_ise(s, epanechnikov(), args.design).h:.5f}")
    for name in SELECTORS:
        print(f"{name:>10s} {select(s, parse_selector(name)).h:.5f}")


if __name__ == "__main__":
    main()
