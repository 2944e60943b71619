"""Covariance of the fluctuation field along a displacement sweep, by exact
mode sum and by Poisson summation.

    python scripts/correlation_sweep.py --q 16,64 > corr.csv
"""
import argparse
import csv
import math
import sys

import numpy as np

from phi3lab.fluctuation import build_kernel, correlation, covariance_exact, covariance_poisson


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--q", default="16,64")
    ap.add_argument("--sigma", type=float, default=1.0)
    ap.add_argument("--points", type=int, default=33)
    a = ap.parse_args()
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["q", "N", "d", "cov_exact", "cov_poisson", "corr"])
    for q in (float(x) for x in a.q.split(",")):
        k = build_kernel(q, 0.1, a.sigma)
        for d in np.linspace(0.0, math.pi, a.points):
            disp = (float(d), 0.0)
            w.writerow([q, k.cutoff_N, repr(float(d)), repr(covariance_exact(k, disp)),
                        repr(covariance_poisson(k, disp)), repr(correlation(k, disp))])


if __name__ == "__main__":
    main()
