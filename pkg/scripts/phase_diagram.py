"""Phase-diagram sweep: one lower bound / certificate per (A/A0, q).

    python scripts/phase_diagram.py --out phases.csv
"""
import argparse
from dataclasses import dataclass

from phi3lab.partition import phase_sweep
from phi3lab.records import write


@dataclass
class Config:
    sigma: float = 1.0
    A_grid: tuple = (0.5, 0.9, 1.0, 1.1, 2.0)
    q_grid: tuple = (16.0, 32.0, 64.0)
    eps: float = 0.1
    n_samples: int = 2000
    seed: int = 0
    out: str = "-"


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sigma", type=float, default=Config.sigma)
    ap.add_argument("--samples", type=int, default=Config.n_samples)
    ap.add_argument("--seed", type=int, default=Config.seed)
    ap.add_argument("--out", default=Config.out)
    a = ap.parse_args()
    cfg = Config(sigma=a.sigma, n_samples=a.samples, seed=a.seed, out=a.out)
    rows = phase_sweep(cfg.sigma, cfg.A_grid, cfg.q_grid, cfg.eps, cfg.n_samples, cfg.seed)
    write(rows, cfg.out, "csv")


if __name__ == "__main__":
    main()
