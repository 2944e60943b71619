"""Partition-function probes across the three regimes of the chemical potential A.

* supercritical (A < A0): variational lower bound with the drift ``t Q_{q,0}``;
* critical (A = A0): ``E max Φ - q - e^{-cq}``;
* subcritical (A > A0): lower bound ``-27C⁴/(256α³)`` on the effective
  Hamiltonian from its quartic coercivity;
* plus a direct Monte Carlo of ``log Z`` at small cutoff.
"""
from __future__ import annotations

import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from . import groundstate as gs
from . import rng
from .errors import NotCoercive, Overflow, Phi3LabError
from .extremes import build_grid, mc_max
from .fluctuation import build_kernel
from .records import ExperimentRecord
from .soliton import SolitonSpec, cutoff_schedule, periodization_constant, soliton_coefficients, torus_integrals
from .spectral import bracket, sample_free_field, wick2_integral_variance, wick_integrals

REGIME_TOL = 1e-12


@dataclass(frozen=True)
class PhasePoint:
    sigma: float
    A: float
    q: float = 1.0
    N: int = 1

    def __post_init__(self):
        if self.A < 0:
            raise ValueError("A must be nonnegative")

    @property
    def a0(self) -> float:
        if self.sigma == 0:
            return 0.0
        return gs.critical_constants(self.sigma).a0

    @property
    def regime(self) -> str:
        a0 = self.a0
        if abs(self.A - a0) <= REGIME_TOL * max(a0, 1e-300):
            return "critical"
        return "supercritical" if self.A < a0 else "subcritical"


@dataclass(frozen=True)
class BoundReport:
    kind: str
    deterministic_part: float
    stochastic_part: float
    stderr: float
    components: dict = field(default_factory=dict)
    flags: tuple = ()

    @property
    def value(self) -> float:
        return self.deterministic_part + self.stochastic_part


def _require(pp: PhasePoint, regime: str):
    if pp.regime != regime:
        raise ValueError(f"phase point is {pp.regime}, expected {regime}")


def supercritical_lower_bound(pp: PhasePoint) -> BoundReport:
    """``-(σ/3)∫Q_N³ - A(∫Q_N²)² - ½∫|∇Q|² - ½∫Q² + I1 + I2`` at x0 = 0.

    ``I1 = -A E(∫:Y_N²:)²`` and ``I2 = -4A E(∫Y_N Q_N)²`` are the exact
    Gaussian expectations left by expanding ``(∫:(Y_N+Q_N)²:)²``. The bound
    is also evaluated at A = A0, where its q² part cancels.
    """
    if pp.regime == "subcritical":
        raise ValueError("the drift bound is only informative for A <= A0")
    spec = SolitonSpec(pp.sigma, pp.q)
    qn = torus_integrals(soliton_coefficients(spec, pp.N))
    full = soliton_coefficients(spec)
    qf = torus_integrals(full)
    cubic = -pp.sigma / 3 * qn["cube"]
    taming = -pp.A * qn["l2sq"] ** 2
    kinetic = -0.5 * qf["gradsq"]
    mass = -0.5 * qf["l2sq"]
    # E(∫ Y_N Q_N)² = Σ_{|n|<=N} (2π)⁴ |c_n|² / ⟨n⟩²
    L = min(pp.N, full.cutoff_N)
    k = np.arange(-L, L + 1)
    n = np.stack(np.meshgrid(k, k, indexing="ij"), axis=-1)
    c = soliton_coefficients(spec, L).coeffs
    hm1 = float((2 * np.pi) ** 4 * np.sum(np.abs(c) ** 2 / bracket(n) ** 2))
    I1 = -pp.A * wick2_integral_variance(pp.N, 1.0)
    I2 = -4 * pp.A * hm1
    det = cubic + taming + kinetic + mass
    comps = {"cubic": cubic, "taming": taming, "kinetic": kinetic, "mass": mass,
             "I1": I1, "I2": I2, "hminus1_sq": hm1, "N": pp.N}
    return BoundReport("lower", det, I1 + I2, 0.0, comps)


def critical_lower_bound(pp: PhasePoint, eps: float = 0.1, n_samples: int = 2000, seed: int = 0) -> BoundReport:
    """``E max_{Λ_q} Φ - q - e^{-cq}`` with c the measured periodization constant."""
    _require(pp, "critical")
    kernel = build_kernel(pp.q, eps, pp.sigma, N=pp.N)
    grid = build_grid(pp.q, eps)
    est = mc_max(kernel, grid, n_samples, seed)
    c = periodization_constant(pp.sigma)
    tail = math.exp(-c * pp.q)
    comps = {"mc_mean": est.mean, "mc_stderr": est.stderr, "minus_q": -pp.q, "minus_tail": -tail,
             "c_tail": c, "count": grid.count, "truncation_radius": kernel.truncation_radius}
    return BoundReport("lower", -pp.q - tail, est.mean, est.stderr, comps)


def coercivity_alpha(pp: PhasePoint, eta: float, eps_c: float) -> float:
    """``A - ε - ½(|σ|/(2‖Q*‖) + η|σ|/3)²/(1-2ε)``, the quartic coefficient."""
    l2 = gs.critical_constants(pp.sigma).l2sq_Qstar if pp.sigma else 1.0
    b = abs(pp.sigma) / (2 * math.sqrt(l2)) + eta * abs(pp.sigma) / 3
    return pp.A - eps_c - 0.5 * b * b / (1 - 2 * eps_c)


def coercivity_certificate(pp: PhasePoint, eta: float = 1e-4, eps_c: float = 1e-4, c_eta: float = 1.0) -> BoundReport:
    """``min_{m>=0} αm⁴ - C m³ = -27C⁴/(256α³)``; raises NotCoercive if α <= 0."""
    if not (eta > 0 and 0 < eps_c < 0.5):
        raise ValueError("need eta > 0 and eps_c in (0, 1/2)")
    alpha = coercivity_alpha(pp, eta, eps_c)
    if alpha <= 0:
        raise NotCoercive(f"alpha = {alpha:.6g} <= 0 for eta={eta}, eps_c={eps_c}")
    value = -27 * c_eta ** 4 / (256 * alpha ** 3)
    comps = {"alpha": alpha, "eta": eta, "eps_c": eps_c, "C_eta": c_eta, "argmin_mass": 3 * c_eta / (4 * alpha)}
    return BoundReport("lower", value, 0.0, 0.0, comps)


def lattice_log_weights(pp: PhasePoint, n_samples: int, seed: int) -> np.ndarray:
    """``-(σ/3)∫:Y³: - A(∫:Y²:)²`` for n free-field samples at cutoff pp.N."""
    out = np.empty(n_samples)
    for i, s in enumerate(rng.child_seeds(seed, rng.LATTICE, n_samples)):
        w2, w3 = wick_integrals(sample_free_field(pp.N, 1.0, s))
        out[i] = -pp.sigma / 3 * w3 - pp.A * w2 * w2
    return out


def log_mean_exp(logw: np.ndarray) -> tuple[float, float, float]:
    """(log mean e^w, jackknife stderr, share of the top 1% of weights)."""
    if not np.all(np.isfinite(logw)):
        raise Overflow("log-weights are not finite")
    n = logw.size
    m = float(np.max(logw))
    w = np.exp(logw - m)
    S = float(w.sum())
    value = m + math.log(S / n)
    # leave-one-out means; dropping the largest weight is done in log space so
    # a dominant sample is not lost to cancellation in S - w_i
    top_i = int(np.argmax(logw))
    others = S - w
    others[top_i] = 1.0
    loo = m + np.log(others / (n - 1))
    loo[top_i] = float(special.logsumexp(np.delete(logw, top_i))) - math.log(n - 1)
    se = math.sqrt((n - 1) / n * float(np.sum((loo - loo.mean()) ** 2)))
    top = max(1, n // 100)
    share = float(np.sort(w)[-top:].sum() / S)
    return value, se, share


def lattice_logz_mc(pp: PhasePoint, n_samples: int = 4000, seed: int = 0) -> BoundReport:
    """Direct estimate of ``log E exp(-(σ/3)∫:Y_N³: - A(∫:Y_N²:)²)``."""
    if pp.N > 16:
        raise ValueError("lattice Monte Carlo is limited to N <= 16")
    if pp.A <= 0:
        raise ValueError("A must be positive")
    logw = lattice_log_weights(pp, n_samples, seed)
    value, se, share = log_mean_exp(logw)
    flags = ("heavy_tail",) if share > 0.5 else ()
    comps = {"top1pct_share": share, "max_log_weight": float(logw.max()), "n_samples": n_samples}
    return BoundReport("estimate", 0.0, value, se, comps, flags)


def worker_count() -> int:
    try:
        return max(1, int(os.environ.get("PHI3LAB_THREADS", "1")))
    except ValueError:
        return 1


def _phase_row(sigma, mult, q, eps, n_samples, seed) -> ExperimentRecord:
    t0 = time.perf_counter()
    a0 = gs.critical_constants(sigma).a0
    N = cutoff_schedule(q, eps)
    pp = PhasePoint(sigma, mult * a0, q, N)
    regime = "critical" if mult == 1.0 else pp.regime
    if regime == "critical":
        pp = PhasePoint(sigma, a0, q, N)
    params = {"sigma": sigma, "A": pp.A, "A_over_A0": mult, "regime": regime, "q": q, "N": N, "eps": eps}
    try:
        if regime == "supercritical":
            rep = supercritical_lower_bound(pp)
        elif regime == "critical":
            rep = critical_lower_bound(pp, eps, n_samples, seed)
        else:
            rep = coercivity_certificate(pp)
        return ExperimentRecord("phases", params, rep.value, rep.stderr, seed,
                                int(1000 * (time.perf_counter() - t0)), dict(rep.components, kind=rep.kind))
    except Phi3LabError as exc:
        return ExperimentRecord("phases", params, float("nan"), None, seed,
                                int(1000 * (time.perf_counter() - t0)), {}, f"{type(exc).__name__}: {exc}")


def phase_sweep(sigma: float, A_grid, q_grid, eps: float = 0.1, n_samples: int = 2000, seed: int = 0,
                threads: int | None = None) -> list[ExperimentRecord]:
    """One record per (A, q); A_grid in units of A0(σ)."""
    A_grid, q_grid = list(A_grid), list(q_grid)
    if not A_grid or not q_grid:
        raise ValueError("grids must be nonempty")
    jobs = [(sigma, float(a), float(q), eps, n_samples, seed) for a in A_grid for q in q_grid]
    threads = worker_count() if threads is None else threads
    if threads <= 1:
        return [_phase_row(*j) for j in jobs]
    with ThreadPoolExecutor(threads) as ex:
        return list(ex.map(lambda j: _phase_row(*j), jobs))
