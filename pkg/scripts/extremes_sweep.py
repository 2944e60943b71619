"""Expected grid maximum of the fluctuation field with its Sudakov and union
bounds and the continuity modulus at the grid scale.

    python scripts/extremes_sweep.py --q 16,32,64 --eps 0.05,0.1,0.2 > extremes.csv
"""
import argparse
import csv
import sys

from phi3lab.extremes import build_grid, continuity_modulus, mc_max, sudakov_lower, union_upper
from phi3lab.fluctuation import build_kernel


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--q", default="16,32,64")
    ap.add_argument("--eps", default="0.1")
    ap.add_argument("--samples", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=0)
    a = ap.parse_args()
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["q", "eps", "count", "mc_mean", "mc_stderr", "sudakov", "union", "modulus"])
    for q in (float(x) for x in a.q.split(",")):
        for eps in (float(x) for x in a.eps.split(",")):
            k, g = build_kernel(q, eps), build_grid(q, eps)
            est = mc_max(k, g, a.samples, a.seed)
            mod = continuity_modulus(k, g.delta, a.samples, a.seed)
            w.writerow([q, eps, g.count, repr(est.mean), repr(est.stderr), repr(sudakov_lower(k, g)),
                        repr(union_upper(k, g)), repr(mod.mean)])


if __name__ == "__main__":
    main()
