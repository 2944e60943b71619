"""Maxima of the fluctuation field over a coarse torus grid.

The grid spacing is ``δ_q = q^{-1/2}(log q)^{1/2-ε}``. ``E max`` is
estimated by Monte Carlo on the exact joint law of the grid values and
bracketed by a Sudakov-type lower bound and a union-type upper bound.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from . import rng
from .errors import DegenerateGrid
from .fluctuation import (FluctuationKernel, _mode_amplitudes, build_gram, covariance_exact, sample_phi_grid,
                          variance)
from .spectral import _scatter, _synthesize

SUDAKOV_C = 1 / math.sqrt(2 * math.pi)
UNION_C = math.sqrt(2.0)
GRID_BUDGET = 10_000
MIN_SAMPLES = 100
MAX_MODULUS_GRID = 2048


@dataclass(frozen=True, eq=False)
class CoarseGrid:
    q: float
    eps: float
    delta: float
    boxes_per_side: int
    points: np.ndarray

    @property
    def count(self) -> int:
        return self.points.shape[0]

    @property
    def side(self) -> float:
        return 2 * math.pi / self.boxes_per_side


@dataclass(frozen=True, eq=False)
class PointSet:
    """An arbitrary finite set of torus points."""
    points: np.ndarray

    @property
    def count(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class IndexSet:
    """A bare index set of given size, for kernels that ignore geometry."""
    count: int


@dataclass(frozen=True)
class IIDKernel:
    """Independent centred Gaussians with common standard deviation ``std``."""
    std: float = 1.0


@dataclass(frozen=True)
class MaxEstimate:
    mean: float
    stderr: float
    n_samples: int


@dataclass(frozen=True)
class GrowthFit:
    c_hat: float
    residuals: np.ndarray
    q: np.ndarray
    means: np.ndarray
    stderrs: np.ndarray


def grid_spacing(q: float, eps: float) -> float:
    return q ** -0.5 * math.log(q) ** (0.5 - eps)


def build_grid(q: float, eps: float = 0.1) -> CoarseGrid:
    """Centres of an m×m partition of the torus with box side in ``[δ_q, 2δ_q)``."""
    if q < math.e:
        raise ValueError("q must be at least e")
    if not 0 < eps < 0.5:
        raise ValueError("eps must lie in (0, 1/2)")
    delta = grid_spacing(q, eps)
    m = max(int(math.floor(2 * math.pi / delta)), 2)
    c = (np.arange(m) + 0.5) * (2 * math.pi / m)
    p1, p2 = np.meshgrid(c, c, indexing="ij")
    pts = np.stack([p1.ravel(), p2.ravel()], axis=1)
    if pts.shape[0] < 4:
        raise DegenerateGrid("grid has fewer than 4 points")
    return CoarseGrid(float(q), float(eps), delta, m, pts)


def torus_distance(a, b) -> np.ndarray:
    d = np.abs(np.asarray(a, float) - np.asarray(b, float)) % (2 * math.pi)
    d = np.minimum(d, 2 * math.pi - d)
    return np.hypot(d[..., 0], d[..., 1])


def _gram(kernel, grid) -> np.ndarray:
    if isinstance(kernel, IIDKernel):
        return kernel.std ** 2 * np.eye(grid.count)
    return build_gram(kernel, grid.points).matrix


def iid_max_mean(k: int, std: float = 1.0) -> float:
    """``E max`` of k independent N(0, std²) by integrating the max CDF."""
    if k == 1:
        return 0.0

    def tail(x):
        return 1 - special.ndtr(x) ** k

    def head(x):
        return special.ndtr(-x) ** k

    hi = integrate.quad(tail, 0, np.inf, limit=200, epsabs=1e-12)[0]
    lo = integrate.quad(head, 0, np.inf, limit=200, epsabs=1e-12)[0]
    return std * (hi - lo)


def mc_max(kernel, grid, n_samples: int, seed: int) -> MaxEstimate:
    """Monte Carlo ``E max`` over the grid from the exact joint law."""
    if n_samples < MIN_SAMPLES:
        raise ValueError(f"n_samples must be >= {MIN_SAMPLES}")
    gen = rng.stream(seed, rng.GRAM)
    if isinstance(kernel, IIDKernel) and grid.count > GRID_BUDGET:
        # max of k iid normals has CDF Φ(x)^k; invert it directly
        u = gen.random(n_samples)
        # 1 - u^{1/k} via expm1 keeps the upper tail accurate for huge k
        maxima = -kernel.std * special.ndtri(-np.expm1(np.log(u) / grid.count))
    else:
        if grid.count > GRID_BUDGET:
            raise ValueError(f"grid of {grid.count} points exceeds the budget {GRID_BUDGET}")
        if isinstance(kernel, IIDKernel):
            L = kernel.std * np.eye(grid.count)
        else:
            L = build_gram(kernel, grid.points).factor()
        maxima = np.empty(n_samples)
        for s in range(0, n_samples, 256):
            z = gen.standard_normal((min(256, n_samples - s), grid.count))
            maxima[s:s + z.shape[0]] = np.max(z @ L.T, axis=1)
    return MaxEstimate(float(maxima.mean()), float(maxima.std(ddof=1) / math.sqrt(n_samples)), n_samples)


def sudakov_lower(kernel, grid) -> float:
    """``c · min_{j≠k} d(x_j, x_k) · √(log count)`` with the canonical metric d."""
    if grid.count < 2:
        raise DegenerateGrid("Sudakov bound needs at least two points")
    G = _gram(kernel, grid)
    diag = np.diag(G)
    d2 = diag[:, None] + diag[None, :] - 2 * G
    np.fill_diagonal(d2, np.inf)
    dmin = math.sqrt(max(float(d2.min()), 0.0))
    return SUDAKOV_C * dmin * math.sqrt(math.log(grid.count))


def union_upper(kernel, grid) -> float:
    """``√2 · max σ · √(log count)``.

    This bound holds for every count >= 1 and every covariance, so no
    small-count correction term is needed.
    """
    if grid.count < 2:
        raise DegenerateGrid("union bound needs at least two points")
    if isinstance(kernel, IIDKernel):
        smax = kernel.std
    else:
        smax = math.sqrt(variance(kernel))
    return UNION_C * smax * math.sqrt(math.log(grid.count))


def canonical_distance(kernel: FluctuationKernel, d) -> np.ndarray:
    """``(E|Φ(x+d) - Φ(x)|²)^{1/2}``."""
    return np.sqrt(np.maximum(2 * (variance(kernel) - covariance_exact(kernel, d)), 0.0))


def modulus_resolution(kernel: FluctuationKernel, delta: float) -> int:
    """FFT grid size with spacing <= δ/4 that also carries every mode of Φ."""
    M = max(int(math.ceil(8 * math.pi / delta)), 2 * kernel.truncation_radius + 1)
    return M + (M % 2)


def _offsets(M: int, delta: float) -> np.ndarray:
    h = 2 * math.pi / M
    r = int(math.floor(delta / h + 1e-9))
    a, b = np.meshgrid(np.arange(-r, r + 1), np.arange(0, r + 1), indexing="ij")
    a, b = a.ravel(), b.ravel()
    keep = ((a * a + b * b) * h * h <= delta * delta * (1 + 1e-12)) & ((b > 0) | (a > 0))
    return np.stack([a[keep], b[keep]], axis=1)


def gradient_modulus(kernel: FluctuationKernel, delta: float, n_samples: int, seed: int,
                     oversample: int = 8) -> MaxEstimate:
    """``δ · E sup |∇Φ|``, the small-δ limit of the continuity modulus.

    The gradient is synthesized exactly on a grid ``oversample`` times finer
    than the Nyquist grid of Φ; relative error is O(δ q^{1/2}).
    """
    R = kernel.truncation_radius
    M = oversample * (2 * R + 1)
    m = kernel.modes.astype(float)
    sups = np.empty(n_samples)
    for i, s in enumerate(rng.child_seeds(seed, rng.FIELD, n_samples)):
        amp = _mode_amplitudes(kernel, s)
        g1 = _synthesize(_scatter(R, 1j * m[:, 0] * amp), R, M)
        g2 = _synthesize(_scatter(R, 1j * m[:, 1] * amp), R, M)
        sups[i] = delta * float(np.sqrt(np.max(g1 * g1 + g2 * g2)))
    return MaxEstimate(float(sups.mean()), float(sups.std(ddof=1) / math.sqrt(n_samples)), n_samples)


def continuity_modulus(kernel: FluctuationKernel, delta: float, n_samples: int, seed: int,
                       M: int | None = None) -> MaxEstimate:
    """MC estimate of ``E sup_{|y-z|<=δ} |Φ(y) - Φ(z)|`` on a grid of spacing <= δ/4.

    When that grid would exceed ``MAX_MODULUS_GRID`` per side, δ is far below
    the scale on which Φ varies and the gradient limit is returned instead.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    if M is None and modulus_resolution(kernel, delta) > MAX_MODULUS_GRID:
        return gradient_modulus(kernel, delta, n_samples, seed)
    M = modulus_resolution(kernel, delta) if M is None else M
    if 2 * math.pi / M > delta / 4 * (1 + 1e-12):
        raise ValueError("grid does not resolve delta/4")
    offs = _offsets(M, delta)
    sups = np.empty(n_samples)
    for i, s in enumerate(rng.child_seeds(seed, rng.FIELD, n_samples)):
        F = sample_phi_grid(kernel, M, s)
        sups[i] = max(float(np.max(np.abs(F - np.roll(F, (a, b), axis=(0, 1))))) for a, b in offs)
    return MaxEstimate(float(sups.mean()), float(sups.std(ddof=1) / math.sqrt(n_samples)), n_samples)


def grid_max_refined(kernel: FluctuationKernel, grid: CoarseGrid, n_samples: int, seed: int,
                     refine: int = 4) -> tuple[MaxEstimate, MaxEstimate]:
    """E max over the grid and over a refine×-finer superset, from the same samples."""
    m = grid.boxes_per_side
    M = refine * m
    if M < 2 * kernel.truncation_radius + 1:
        raise ValueError("refined grid cannot carry every mode of the field")
    sub = (np.arange(m) * refine + refine // 2)
    coarse, fine = np.empty(n_samples), np.empty(n_samples)
    for i, s in enumerate(rng.child_seeds(seed, rng.FIELD, n_samples)):
        F = sample_phi_grid(kernel, M, s)
        fine[i] = F.max()
        coarse[i] = F[np.ix_(sub, sub)].max()
    se = math.sqrt(n_samples)
    return (MaxEstimate(float(coarse.mean()), float(coarse.std(ddof=1) / se), n_samples),
            MaxEstimate(float(fine.mean()), float(fine.std(ddof=1) / se), n_samples))


def growth_fit(kernel_factory, q_list, eps: float, n_samples: int, seed: int,
               grid_factory=build_grid) -> GrowthFit:
    """Fit ``E max ≈ c · q √(log q)`` through the origin over ``q_list``."""
    q = np.asarray(list(q_list), dtype=float)
    if q.size < 3 or np.any(np.diff(q) <= 0):
        raise ValueError("q_list needs at least 3 increasing entries")
    est = [mc_max(kernel_factory(qq), grid_factory(qq, eps), n_samples, seed) for qq in q]
    means = np.array([e.mean for e in est])
    ses = np.array([e.stderr for e in est])
    x = q * np.sqrt(np.log(q))
    c = float(np.dot(means, x) / np.dot(x, x))
    return GrowthFit(c, (means - c * x) / (c * x), q, means, ses)

