"""Command-line experiments.

    phi3lab ground --sigma 1
    phi3lab phases --sigma 1 --A 0.9,1.0,1.1 --q 16,32,64 --out phases.csv

Settings come from an optional flat ``key=value`` file (``--config``),
overridden by flags. ``PHI3LAB_THREADS`` caps worker threads.
"""
from __future__ import annotations

import argparse
import math
import sys
import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import groundstate as gs
from .errors import ConfigInvalid, IoFailure, Phi3LabError
from .records import ExperimentRecord, write

COMMANDS = ("ground", "constants", "correlation", "maxgrowth", "modulus", "phases")
FORMATS = ("csv", "json")
CORRELATION_POINTS = 9
MC_COMMANDS = ("maxgrowth", "modulus", "phases")
MC_MIN_SAMPLES = 100


@dataclass(frozen=True)
class ExperimentConfig:
    command: str
    sigma: float = 1.0
    q_grid: tuple = (16.0, 32.0, 64.0)
    A_grid: tuple = (0.9, 1.0, 1.1)
    eps: float = 0.1
    n_samples: int = 2000
    seed: int = 0
    out_path: str = "-"
    format: str = "csv"
    extra: dict = field(default_factory=dict)


def validate(config: ExperimentConfig) -> list[str]:
    """Problems that would stop ``run``; empty when the config is usable."""
    out = []
    if config.command not in COMMANDS:
        out.append(f"command must be one of {', '.join(COMMANDS)}")
    if not math.isfinite(config.sigma):
        out.append("sigma must be finite")
    elif config.sigma == 0 and config.command != "ground":
        out.append("sigma must be nonzero")
    if not config.q_grid:
        out.append("q grid is empty")
    elif any(not math.isfinite(q) or q < math.e for q in config.q_grid):
        out.append("every q must be finite and at least e")
    if not config.A_grid:
        out.append("A grid is empty")
    elif any(not math.isfinite(a) or a < 0 for a in config.A_grid):
        out.append("A multiples must be finite and nonnegative")
    if not 0 < config.eps < 0.5:
        out.append("eps must lie in (0, 1/2)")
    need = MC_MIN_SAMPLES if config.command in MC_COMMANDS else 1
    if config.n_samples < need:
        out.append(f"samples must be at least {need} for {config.command}")
    if config.format not in FORMATS:
        out.append("format must be csv or json")
    return out


# ---------------------------------------------------------------- experiments

def _timed(fn):
    def wrapper(cfg):
        t0 = time.perf_counter()
        recs = fn(cfg)
        ms = int(1000 * (time.perf_counter() - t0) / max(len(recs), 1))
        for r in recs:
            r.wall_ms = r.wall_ms or ms
        return recs
    return wrapper


@_timed
def _ground(cfg):
    p = gs.ground_state()
    sigma = cfg.sigma if cfg.sigma != 0 else 1.0
    cc = gs.critical_constants(sigma, p)
    comps = {"q0": p.meta["q0"], "l2sq": cc.l2sq_Qstar, "gradsq": cc.gradsq_Qstar,
             "l3cubed": cc.l3cubed_Qstar, "c_gns": cc.c_gns, "a0": cc.a0,
             "residual": p.residual, "r_match": p.meta["r_match"], "r_max": p.r_max, "step": p.step}
    return [ExperimentRecord("ground", {"sigma": sigma}, cc.a0, None, cfg.seed, 0, comps)]


@_timed
def _constants(cfg):
    cc = gs.critical_constants(cfg.sigma)
    comps = {"c_gns": cc.c_gns, "l2sq": cc.l2sq_Qstar, "lambda_star": gs.lambda_star(cfg.sigma)}
    return [ExperimentRecord("constants", {"sigma": cfg.sigma}, cc.a0, None, cfg.seed, 0, comps)]


@_timed
def _correlation(cfg):
    from .fluctuation import build_kernel, correlation, covariance_exact, covariance_poisson
    recs = []
    for q in cfg.q_grid:
        k = build_kernel(q, cfg.eps, cfg.sigma)
        for d in np.linspace(0.0, math.pi, CORRELATION_POINTS):
            disp = (float(d), 0.0)
            params = {"sigma": cfg.sigma, "q": q, "N": k.cutoff_N, "d": float(d), "eps": cfg.eps}
            comps = {"cov_exact": covariance_exact(k, disp), "cov_poisson": covariance_poisson(k, disp)}
            recs.append(ExperimentRecord("correlation", params, correlation(k, disp), None, cfg.seed, 0, comps))
    return recs


@_timed
def _maxgrowth(cfg):
    from .extremes import build_grid, growth_fit, mc_max, sudakov_lower, union_upper
    from .fluctuation import build_kernel
    recs = []
    for q in cfg.q_grid:
        k = build_kernel(q, cfg.eps, cfg.sigma)
        g = build_grid(q, cfg.eps)
        est = mc_max(k, g, cfg.n_samples, cfg.seed)
        params = {"sigma": cfg.sigma, "q": q, "N": k.cutoff_N, "eps": cfg.eps}
        comps = {"count": g.count, "sudakov": sudakov_lower(k, g), "union": union_upper(k, g),
                 "delta": g.delta}
        recs.append(ExperimentRecord("maxgrowth", params, est.mean, est.stderr, cfg.seed, 0, comps))
    if len(cfg.q_grid) >= 3:
        fit = growth_fit(lambda q: build_kernel(q, cfg.eps, cfg.sigma), sorted(cfg.q_grid), cfg.eps,
                         cfg.n_samples, cfg.seed)
        recs.append(ExperimentRecord("maxgrowth_fit", {"sigma": cfg.sigma, "eps": cfg.eps,
                                                       "q_list": [float(q) for q in fit.q]},
                                     fit.c_hat, None, cfg.seed, 0,
                                     {"residuals": [float(r) for r in fit.residuals]}))
    return recs


@_timed
def _modulus(cfg):
    from .extremes import continuity_modulus, grid_spacing, modulus_resolution
    from .fluctuation import build_kernel
    recs = []
    for q in cfg.q_grid:
        k = build_kernel(q, cfg.eps, cfg.sigma)
        delta = grid_spacing(q, cfg.eps)
        est = continuity_modulus(k, delta, cfg.n_samples, cfg.seed)
        params = {"sigma": cfg.sigma, "q": q, "N": k.cutoff_N, "eps": cfg.eps}
        comps = {"delta": delta, "M": modulus_resolution(k, delta),
                 "over_q_sqrtlog": est.mean / (q * math.sqrt(math.log(q)))}
        recs.append(ExperimentRecord("modulus", params, est.mean, est.stderr, cfg.seed, 0, comps))
    return recs


def _phases(cfg):
    from .partition import phase_sweep
    return phase_sweep(cfg.sigma, cfg.A_grid, cfg.q_grid, cfg.eps, cfg.n_samples, cfg.seed)


RUNNERS = {"ground": _ground, "constants": _constants, "correlation": _correlation,
           "maxgrowth": _maxgrowth, "modulus": _modulus, "phases": _phases}


def run(config: ExperimentConfig) -> tuple[int, list[ExperimentRecord]]:
    """Run one experiment; exit status 0 only if every record succeeded."""
    problems = validate(config)
    if problems:
        raise ConfigInvalid("; ".join(problems))
    try:
        records = RUNNERS[config.command](config)
    except Phi3LabError as exc:
        records = [ExperimentRecord(config.command, {"sigma": config.sigma}, float("nan"), None,
                                    config.seed, 0, {}, f"{type(exc).__name__}: {exc}")]
    status = 0 if all(r.ok for r in records) else 1
    return status, records


# ---------------------------------------------------------------- parsing

def _floats(text: str) -> tuple:
    return tuple(float(x) for x in str(text).split(",") if x.strip())


_KEYS = {
    "sigma": ("sigma", float), "q": ("q_grid", _floats), "A": ("A_grid", _floats),
    "eps": ("eps", float), "samples": ("n_samples", int), "seed": ("seed", int),
    "out": ("out_path", str), "format": ("format", str), "command": ("command", str),
}


def read_config_file(path) -> dict:
    """Parse a flat ``key=value`` file; ``#`` starts a comment."""
    try:
        lines = open(path).read().splitlines()
    except OSError as exc:
        raise IoFailure(f"cannot read config {path}: {exc}") from exc
    out = {}
    for i, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigInvalid(f"{path}:{i}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _KEYS:
            raise ConfigInvalid(f"{path}:{i}: unknown key {key!r}")
        out[key] = value
    return out


def build_config(command: str, file_values: dict, flag_values: dict) -> ExperimentConfig:
    cfg = ExperimentConfig(command)
    for source in (file_values, flag_values):
        for key, raw in source.items():
            if raw is None:
                continue
            name, conv = _KEYS[key]
            try:
                cfg = replace(cfg, **{name: conv(raw)})
            except ValueError as exc:
                raise ConfigInvalid(f"bad value for {key}: {raw!r}") from exc
    return cfg


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="phi3lab", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", help="flat key=value settings file")
    ap.add_argument("--sigma")
    ap.add_argument("--q", help="comma-separated q values")
    ap.add_argument("--A", help="comma-separated multiples of A0")
    ap.add_argument("--eps")
    ap.add_argument("--samples")
    ap.add_argument("--seed")
    ap.add_argument("--out", help="output path ('-' for stdout)")
    ap.add_argument("--format", choices=FORMATS)
    return ap


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        file_values = read_config_file(args.config) if args.config else {}
        flags = {k: getattr(args, k) for k in ("sigma", "q", "A", "eps", "samples", "seed", "out", "format")}
        cfg = build_config(args.command, file_values, flags)
        problems = validate(cfg)
        if problems:
            for p in problems:
                print(f"phi3lab: {p}", file=sys.stderr)
            return 2
        status, records = run(cfg)
        write(records, cfg.out_path, cfg.format)
    except (ConfigInvalid, IoFailure) as exc:
        print(f"phi3lab: {exc}", file=sys.stderr)
        return 2
    for r in records:
        if r.error:
            print(f"phi3lab: {r.experiment} row failed: {r.error}", file=sys.stderr)
    return status


if __name__ == "__main__":
    sys.exit(main())
