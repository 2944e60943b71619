"""The fluctuation field ``Φ(x) = Σ_n w_n B_n(1/2) e^{in·x}``.

``w_n = |n|²/⟨n⟩ · Q̂(n/√q)`` with Q̂ the plane transform of the unit-mass
profile. Φ is the pairing of ``-ΔQ_{q,x}`` with the free field at time 1/2,
so ``E Φ(x)Φ(y) = t Σ_n w_n² cos(n·(x-y))`` with t = 1/2.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from . import groundstate as gs
from . import rng
from .errors import FactorizationFailure, HankelUnderflow, QuadratureUnstable
from .soliton import cutoff_schedule, decay_rate
from .spectral import _scatter, _synthesize, bracket, half_modes, standard_modes

TAIL_REL = 1e-12
PSD_CLIP = 1e-8


@dataclass(frozen=True, eq=False)
class FluctuationKernel:
    q: float
    cutoff_N: int
    sigma: float
    truncation_radius: int
    modes: np.ndarray      # half_modes(truncation_radius), canonical order
    weights: np.ndarray    # w_n on those modes
    tail_bound: float      # Σ_{|n| > R} w_n² / Σ w_n²
    time_t: float = 0.5

    def weight(self, n1: int, n2: int) -> float:
        r = math.hypot(n1, n2)
        if r > self.truncation_radius:
            return 0.0
        return float(_weights(self.q, self.sigma, np.array([[n1, n2]]))[0])

    @property
    def full_sq_sum(self) -> float:
        """``Σ_n w_n²`` over the full disk (every half mode but 0 counts twice)."""
        w2 = self.weights ** 2
        return float(2 * w2[1:].sum() + w2[0])


def _weights(q: float, sigma: float, modes: np.ndarray) -> np.ndarray:
    r2 = np.sum(modes.astype(float) ** 2, axis=-1)
    return r2 / np.sqrt(1 + r2) * gs.unit_spectrum(sigma)(np.sqrt(r2 / q))


def build_kernel(q: float, eps: float = 0.1, sigma: float = 1.0, N: int | None = None,
                 time_t: float = 0.5, tail_rel: float = TAIL_REL) -> FluctuationKernel:
    """Mode weights of Φ truncated where their squared tail drops below ``tail_rel``."""
    if q < 1:
        raise ValueError("q must be >= 1")
    N = cutoff_schedule(q, eps) if N is None else int(N)
    spec = gs.unit_spectrum(sigma)
    if abs(spec(spec.xi_cut)) > 1e3 * spec.level:
        raise HankelUnderflow("profile transform failed its decay scan")
    R_max = min(N, int(math.ceil(math.sqrt(q) * spec.xi_cut)) + 1)
    modes = half_modes(R_max)
    w = _weights(q, sigma, modes)
    r2 = np.sum(modes.astype(float) ** 2, axis=1)
    mult = np.where(r2 == 0, 1.0, 2.0)
    # modes are sorted by |n|, so the tail mass is a reversed cumulative sum
    w2 = mult * w * w
    total = w2.sum()
    tail = np.concatenate([np.cumsum(w2[::-1])[::-1][1:], [0.0]])
    ok = np.nonzero(tail < tail_rel * total)[0]
    cut = int(ok[0])
    R = int(math.ceil(math.sqrt(r2[cut])))
    R = max(R, 1)
    keep = half_modes(R).shape[0]
    return FluctuationKernel(float(q), N, float(sigma), R, half_modes(R), w[:keep],
                             float(tail[keep - 1] / total) if total else 0.0, time_t)


def with_time(kernel: FluctuationKernel, t: float) -> FluctuationKernel:
    return FluctuationKernel(kernel.q, kernel.cutoff_N, kernel.sigma, kernel.truncation_radius,
                             kernel.modes, kernel.weights, kernel.tail_bound, t)


def variance(kernel: FluctuationKernel) -> float:
    """``t Σ_{|n|<=N} w_n²`` with t the field time (1/2)."""
    return kernel.time_t * kernel.full_sq_sum


def variance_limit(sigma: float = 1.0, t: float = 0.5) -> float:
    """Large-q limit of variance/q²: ``t ∫ |ξ|² |Q̂(ξ)|² dξ``, by radial quadrature of Q̂."""
    spec = gs.unit_spectrum(sigma)
    x, wt = np.polynomial.legendre.leggauss(200)
    rho = 0.5 * spec.xi_cut * (x + 1)
    return float(t * 2 * np.pi * 0.5 * spec.xi_cut * np.sum(wt * rho ** 3 * spec(rho) ** 2))


def _as_disp(d) -> np.ndarray:
    d = np.asarray(d, dtype=float)
    return d.reshape(-1, 2)


def covariance_exact(kernel: FluctuationKernel, d):
    """``t Σ_n w_n² e^{in·d}`` summed over the truncation disk; real by symmetry."""
    disp = _as_disp(d)
    phase = disp @ kernel.modes.T.astype(float)
    w2 = kernel.weights ** 2
    w2 = np.where(np.arange(w2.size) == 0, w2, 2 * w2)
    # the sine parts of n and -n cancel exactly, so only cosines are summed
    out = kernel.time_t * (np.cos(phase) @ w2)
    return out if np.ndim(d) > 1 else float(out[0])


def _poisson_nodes(kernel: FluctuationKernel, xmax: float, order: int = 16):
    """Gauss-Legendre panels on [0, ρmax] resolving both F and J0(ρ x)."""
    spec = gs.unit_spectrum(kernel.sigma)
    s = math.sqrt(kernel.q)
    rho_max = s * spec.xi_cut
    width = min(0.25 * s, math.pi / max(xmax, 1e-12) / 2)
    panels = max(int(math.ceil(rho_max / width)), 4)
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(0.0, rho_max, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    rho = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    wts = (half[:, None] * w[None, :]).ravel()
    F = rho ** 4 / (1 + rho ** 2) * spec(rho / s) ** 2
    return rho, wts * F * rho


def poisson_image(kernel: FluctuationKernel, x) -> np.ndarray:
    """Plane term ``f̂(x) = t·2π ∫ F(ρ) J0(ρ|x|) ρ dρ``, ``F(ρ) = ρ⁴/(1+ρ²) Q̂(ρ/√q)²``."""
    r = np.atleast_1d(np.asarray(x, dtype=float))
    if r.ndim > 1:
        r = np.hypot(r[..., 0], r[..., 1]).ravel()
    rho, fw = _poisson_nodes(kernel, float(np.max(r)))
    out = np.empty(r.size)
    for i in range(0, r.size, 64):
        out[i:i + 64] = special.j0(np.outer(r[i:i + 64], rho)) @ fw
    coarse_rho, coarse_fw = _poisson_nodes(kernel, float(np.max(r)), order=12)
    check = special.j0(np.outer(r[:8], coarse_rho)) @ coarse_fw
    scale = abs(fw).sum()
    if np.max(np.abs(check - out[:8])) > 1e-9 * scale:
        raise QuadratureUnstable("Poisson-side quadrature does not converge")
    return kernel.time_t * 2 * np.pi * out


def default_images(kernel: FluctuationKernel) -> int:
    """Image radius for a 1e-17 tail: f̂ decays like e^{-β|x|}, β = min(1, κ√q)."""
    beta = min(1.0, decay_rate(kernel.sigma) * math.sqrt(kernel.q))
    return int(math.ceil(40.0 / (2 * math.pi * beta))) + 1


def covariance_poisson(kernel: FluctuationKernel, d, K: int | None = None) -> float:
    """``Σ_{|k|_∞<=K} f̂(d + 2πk)``: the covariance from the plane side."""
    K = default_images(kernel) if K is None else int(K)
    if K < 0:
        raise ValueError("K must be >= 0")
    d = np.asarray(d, dtype=float).reshape(2)
    k = np.arange(-K, K + 1)
    k1, k2 = np.meshgrid(k, k, indexing="ij")
    x = np.hypot(d[0] + 2 * np.pi * k1.ravel(), d[1] + 2 * np.pi * k2.ravel())
    terms = poisson_image(kernel, x)
    return float(np.sum(terms[np.argsort(np.abs(terms))]))


def decay_exponent(kernel: FluctuationKernel, lo: float = 2.0, hi: float = 20.0, points: int = 40) -> tuple[float, float]:
    """Fit ``|f̂(x)| <= C q²/(1+√q|x|)^M`` over ``√q|x| ∈ [lo, hi]``.

    Uses the decreasing envelope of |f̂| (f̂ changes sign) and returns (M, C).
    """
    s = math.sqrt(kernel.q)
    u = np.linspace(lo, hi, points)
    env = np.maximum.accumulate(np.abs(poisson_image(kernel, u / s))[::-1])[::-1]
    y = np.log(env / kernel.q ** 2)
    M, logc = np.polyfit(-np.log1p(u), y, 1)
    # C large enough that the bound holds at every sampled point
    C = float(np.max(env * (1 + u) ** M / kernel.q ** 2))
    return float(M), C


def correlation(kernel: FluctuationKernel, d):
    return covariance_exact(kernel, d) / variance(kernel)


@dataclass(frozen=True, eq=False)
class CovarianceGram:
    points: np.ndarray
    matrix: np.ndarray
    q: float
    cutoff_N: int

    def factor(self) -> np.ndarray:
        """L with ``L Lᵀ = matrix`` via a clipped eigendecomposition."""
        G = 0.5 * (self.matrix + self.matrix.T)
        vals, vecs = np.linalg.eigh(G)
        floor = PSD_CLIP * np.trace(G) / G.shape[0]
        if vals[0] < -floor:
            raise FactorizationFailure(f"Gram eigenvalue {vals[0]:.3g} below -{floor:.3g}")
        return vecs * np.sqrt(np.clip(vals, 0.0, None))

    @property
    def size(self) -> int:
        return self.points.shape[0]


def _check_points(points) -> np.ndarray:
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    wrapped = np.round(np.mod(pts, 2 * np.pi), 12)
    wrapped[wrapped == round(2 * np.pi, 12)] = 0.0
    if np.unique(wrapped, axis=0).shape[0] != pts.shape[0]:
        raise ValueError("points must be distinct on the torus")
    return pts


def _features(kernel: FluctuationKernel, pts: np.ndarray):
    phase = pts @ kernel.modes.T.astype(float)
    a = np.sqrt(2 * kernel.time_t) * kernel.weights
    a[0] = math.sqrt(kernel.time_t) * kernel.weights[0]
    return np.cos(phase) * a, np.sin(phase) * a


def build_gram(kernel: FluctuationKernel, points) -> CovarianceGram:
    """``E Φ(x_i)Φ(x_j)`` as a Gram of cosine/sine features."""
    pts = _check_points(points)
    c, s = _features(kernel, pts)
    G = c @ c.T + s @ s.T
    return CovarianceGram(pts, G, kernel.q, kernel.cutoff_N)


def _mode_amplitudes(kernel: FluctuationKernel, seed: int) -> np.ndarray:
    """``w_n B_n(t)`` on the half modes; B is the free field sample of the same seed."""
    g = standard_modes(kernel.truncation_radius, rng.stream(seed, rng.FIELD))
    return kernel.weights * math.sqrt(kernel.time_t) * g


def sample_phi(kernel: FluctuationKernel, points, seed: int, path: str = "spectral") -> np.ndarray:
    """Φ at the given points for one seed, by mode sum or by Gram factor."""
    return sample_phi_batch(kernel, points, [seed], path)[0]


def sample_phi_batch(kernel: FluctuationKernel, points, seeds, path: str = "spectral") -> np.ndarray:
    pts = _check_points(points)
    if path == "spectral":
        amp = np.array([_mode_amplitudes(kernel, s) for s in seeds])
        e = np.exp(1j * (pts @ kernel.modes.T.astype(float)))
        out = 2 * np.real(amp[:, 1:] @ e[:, 1:].T) + np.real(amp[:, :1]) * e[:, 0].real
        return out
    if path == "gram":
        L = build_gram(kernel, pts).factor()
        z = np.array([rng.stream(s, rng.GRAM).standard_normal(pts.shape[0]) for s in seeds])
        return z @ L.T
    raise ValueError("path must be 'spectral' or 'gram'")


def sample_phi_grid(kernel: FluctuationKernel, M: int, seed: int) -> np.ndarray:
    """Φ on the uniform grid ``x_j = 2πj/M`` by FFT (needs M >= 2R+1)."""
    R = kernel.truncation_radius
    if M < 2 * R + 1:
        raise ValueError(f"grid M={M} cannot resolve truncation radius {R}")
    return _synthesize(_scatter(R, _mode_amplitudes(kernel, seed)), R, M)


def phi_from_field(kernel: FluctuationKernel, f, x) -> float:
    """Φ(x) computed as ``Σ |n|² Q̂(n/√q) ŷ_n e^{in·x}`` from a t=1/2 free-field sample."""
    R = kernel.truncation_radius
    N = f.cutoff_N
    if N < R:
        raise ValueError("field cutoff below the kernel truncation radius")
    m = kernel.modes
    y = f.coeffs[m[:, 0] + N, m[:, 1] + N]
    a = kernel.weights * bracket(m) * y
    e = np.exp(1j * (m @ np.asarray(x, dtype=float)))
    return float(2 * np.real(np.sum(a[1:] * e[1:])) + np.real(a[0]))
