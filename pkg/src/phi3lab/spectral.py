"""Massive Gaussian free field on the torus [0, 2π)² with a Fourier cutoff.

Conventions: ``f(x) = Σ_n c_n e^{in·x}`` so ``∫_T² f = (2π)² c_0`` and
``∫_T² f² = (2π)² Σ |c_n|²``. A free-field sample at time t has
``c_n = B_n(t)/⟨n⟩`` with ``E|B_n|² = t`` and ``⟨n⟩ = (1+|n|²)^{1/2}``.
"""
from __future__ import annotations

import functools
import json
import math
from dataclasses import dataclass

import numpy as np

from . import rng
from .errors import AliasRisk, IoFailure, WrongTime

KINDS = ("white", "free_field", "deterministic")


@functools.lru_cache(maxsize=64)
def half_modes(N: int) -> np.ndarray:
    """Representative modes of the disk ``|n| <= N`` in canonical order.

    Row 0 is n = 0; the rest is the half plane ``n1 > 0 or (n1 = 0, n2 > 0)``
    sorted by ``|n|²`` then lexicographically, so the list for N is a prefix
    of the list for any larger N.
    """
    k = np.arange(-N, N + 1)
    n1, n2 = np.meshgrid(k, k, indexing="ij")
    n1, n2 = n1.ravel(), n2.ravel()
    r2 = n1 * n1 + n2 * n2
    keep = (r2 <= N * N) & ((n1 > 0) | ((n1 == 0) & (n2 >= 0)))
    n1, n2, r2 = n1[keep], n2[keep], r2[keep]
    order = np.lexsort((n2, n1, r2))
    out = np.stack([n1[order], n2[order]], axis=1)
    out.setflags(write=False)
    return out


def bracket(n) -> np.ndarray:
    """Japanese bracket ``(1+|n|²)^{1/2}`` of an (..., 2) array of modes."""
    n = np.asarray(n, dtype=float)
    return np.sqrt(1.0 + np.sum(n * n, axis=-1))


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Hermitian Fourier coefficients on ``|n| <= cutoff_N``.

    ``coeffs[n1 + N, n2 + N]`` holds c_n; entries outside the disk are zero.
    """
    cutoff_N: int
    coeffs: np.ndarray
    time_t: float = 0.0
    kind: str = "deterministic"

    def __post_init__(self):
        N = self.cutoff_N
        if N < 0 or self.coeffs.shape != (2 * N + 1, 2 * N + 1):
            raise ValueError("coeffs must have shape (2N+1, 2N+1)")
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}")
        c = self.coeffs
        scale = max(float(np.max(np.abs(c))), 1e-300)
        if np.max(np.abs(c - np.conj(c[::-1, ::-1]))) > 1e-12 * scale:
            raise ValueError("coefficients are not Hermitian symmetric")

    def coeff(self, n1: int, n2: int) -> complex:
        N = self.cutoff_N
        if n1 * n1 + n2 * n2 > N * N:
            return 0j
        return complex(self.coeffs[n1 + N, n2 + N])

    def to_grid(self, M: int, degree: int | None = None) -> GridField:
        """Evaluate at ``x_j = 2πj/M``; aliasing-free if ``M >= 2N+1``."""
        return GridField(M, _synthesize(self.coeffs, self.cutoff_N, M), degree if degree is not None else self.cutoff_N)

    def l2sq(self) -> float:
        return float((2 * np.pi) ** 2 * np.sum(np.abs(self.coeffs) ** 2))


@dataclass(frozen=True, eq=False)
class GridField:
    """Real field values on the uniform M×M torus grid ``x_j = 2πj/M``."""
    resolution_M: int
    values: np.ndarray
    dealias_degree: int

    def __post_init__(self):
        M = self.resolution_M
        if self.values.shape != (M, M):
            raise ValueError("values must be M x M")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("grid values must be finite")
        if M < self.dealias_degree + 1:
            raise AliasRisk(f"M={M} below dealias degree {self.dealias_degree} + 1")

    def integral(self) -> float:
        return float((2 * np.pi / self.resolution_M) ** 2 * self.values.sum())


def _synthesize(coeffs: np.ndarray, N: int, M: int) -> np.ndarray:
    if M < 2 * N + 1:
        # fold modes that alias onto the same grid frequency
        big = np.zeros((M, M), dtype=complex)
        k = np.arange(-N, N + 1) % M
        np.add.at(big, (k[:, None], k[None, :]), coeffs)
    else:
        big = np.zeros((M, M), dtype=complex)
        k = np.arange(-N, N + 1) % M
        big[np.ix_(k, k)] = coeffs
    return np.real(np.fft.ifft2(big)) * (M * M)


def grid_coefficients(values: np.ndarray, N: int) -> np.ndarray:
    """Discrete Fourier coefficients ``c_n, |n| <= N`` of grid values, as a (2N+1)² array."""
    M = values.shape[0]
    if M < 2 * N + 1:
        raise AliasRisk(f"resolution {M} cannot carry cutoff {N}")
    full = np.fft.fft2(values) / (M * M)
    k = np.arange(-N, N + 1)
    c = full[np.ix_(k % M, k % M)]
    K1, K2 = np.meshgrid(k, k, indexing="ij")
    c[K1 * K1 + K2 * K2 > N * N] = 0
    # exact Hermitian symmetry for real input
    return 0.5 * (c + np.conj(c[::-1, ::-1]))


def truncate(f: SpectralField, N: int) -> SpectralField:
    """Dirichlet projection onto ``|n| <= N``; idempotent."""
    if N >= f.cutoff_N:
        return f
    M = f.cutoff_N
    c = f.coeffs[M - N:M + N + 1, M - N:M + N + 1].copy()
    k = np.arange(-N, N + 1)
    c[(k[:, None] ** 2 + k[None, :] ** 2) > N * N] = 0
    return SpectralField(N, c, f.time_t, f.kind)


def _scatter(N: int, half_vals: np.ndarray) -> np.ndarray:
    """Build a Hermitian (2N+1)² array from values on ``half_modes(N)``."""
    modes = half_modes(N)
    c = np.zeros((2 * N + 1, 2 * N + 1), dtype=complex)
    i1, i2 = modes[:, 0] + N, modes[:, 1] + N
    c[i1, i2] = half_vals
    c[2 * N - i1, 2 * N - i2] = np.conj(half_vals)
    c[N, N] = half_vals[0].real
    return c


def standard_modes(N: int, gen: np.random.Generator) -> np.ndarray:
    """Standard complex Gaussians on ``half_modes(N)``; the zero mode is real N(0,1).

    Mode k consumes normals 2k and 2k+1 of the stream, so the value at a
    given mode does not depend on N.
    """
    z = gen.standard_normal(2 * half_modes(N).shape[0])
    g = (z[0::2] + 1j * z[1::2]) / math.sqrt(2.0)
    g[0] = z[0]
    return g


def sample_free_field(N: int, t: float, seed: int) -> SpectralField:
    """Free field ``Y_N(t)`` with coefficients ``g_n √t/⟨n⟩``."""
    if N < 1:
        raise ValueError("N must be >= 1")
    if not 0 < t <= 1:
        raise ValueError("t must lie in (0, 1]")
    g = standard_modes(N, rng.stream(seed, rng.FIELD))
    vals = g * math.sqrt(t) / bracket(half_modes(N))
    return SpectralField(N, _scatter(N, vals), float(t), "free_field")


def extend_in_time(f: SpectralField, seed: int, increment_scale: float = 1.0) -> SpectralField:
    """Continue a t=1/2 free field to t=1 with an independent increment.

    ``increment_scale`` multiplies the increment (0 gives the identity and
    exists for testing).
    """
    if f.kind != "free_field" or f.time_t != 0.5:
        raise WrongTime("extend_in_time needs a free field at t = 1/2")
    N = f.cutoff_N
    g = standard_modes(N, rng.stream(seed, rng.INCREMENT))
    inc = increment_scale * g * math.sqrt(0.5) / bracket(half_modes(N))
    return SpectralField(N, f.coeffs + _scatter(N, inc), 1.0, "free_field")


def lattice_sum(N: int, g) -> float:
    """``Σ_{|n|<=N} g(|n|²)`` summed row by row in a fixed order."""
    total = 0.0
    NN = N * N
    for n1 in range(N, -1, -1):
        m = math.isqrt(NN - n1 * n1)
        k = np.arange(-m, m + 1, dtype=float)
        s = float(np.sum(g(n1 * n1 + k * k)))
        total += s if n1 == 0 else 2.0 * s
    return total


_EXACT_LIMIT = 8192


def tadpole(N: int, t: float) -> float:
    """``σ_N(t) = Σ_{|n|<=N} t/⟨n⟩²``."""
    if N < 0 or t < 0:
        raise ValueError("need N >= 0 and t >= 0")
    return t * _bracket_sum(N, 1)


@functools.lru_cache(maxsize=256)
def _bracket_sum(N: int, power: int) -> float:
    """``Σ_{|n|<=N} ⟨n⟩^{-2 power}``.

    Exact up to ``_EXACT_LIMIT``; beyond that (power >= 2 only) the annulus is
    replaced by its integral, whose lattice-discrepancy error is
    O(N0^{-2power+2/3}) and below 1e-12 for power = 2.
    """
    if N <= _EXACT_LIMIT:
        return lattice_sum(N, lambda r2: (1.0 + r2) ** -power)
    if power < 2:
        return lattice_sum(N, lambda r2: (1.0 + r2) ** -power)
    N0 = _EXACT_LIMIT
    a, b = 1.0 + N0 * N0, 1.0 + N * N
    tail = math.pi / (power - 1) * (a ** (1 - power) - b ** (1 - power))
    return _bracket_sum(N0, power) + tail


def wick2_integral_variance(N: int, t: float) -> float:
    """``E[(∫ :Y_N²: dx)²] = 2 (2π)⁴ t² Σ_{|n|<=N} ⟨n⟩^{-4}``."""
    if N < 0:
        raise ValueError("N must be >= 0")
    return 2 * (2 * np.pi) ** 4 * t * t * _bracket_sum(N, 2)


def dealias_resolution(N: int, k: int) -> int:
    return k * N + 1


def wick_power(f: SpectralField, k: int, M: int | None = None) -> GridField:
    """``:Y²: = Y² - σ_N`` or ``:Y³: = Y³ - 3σ_N Y`` on a dealiased grid."""
    if f.kind != "free_field":
        raise ValueError("Wick powers are defined for free-field samples")
    if k not in (2, 3):
        raise ValueError("k must be 2 or 3")
    need = dealias_resolution(f.cutoff_N, k)
    M = need if M is None else M
    if M < need:
        raise AliasRisk(f"M={M} below {need} needed for degree {k}")
    y = _synthesize(f.coeffs, f.cutoff_N, M)
    s = tadpole(f.cutoff_N, f.time_t)
    vals = y * y - s if k == 2 else y ** 3 - 3 * s * y
    return GridField(M, vals, k * f.cutoff_N)


def wick_integrals(f: SpectralField) -> tuple[float, float]:
    """``(∫:Y²:, ∫:Y³:)`` for one sample, both exact trigonometric integrals."""
    g3 = wick_power(f, 3)
    y = _synthesize(f.coeffs, f.cutoff_N, g3.resolution_M)
    s = tadpole(f.cutoff_N, f.time_t)
    w = (2 * np.pi / g3.resolution_M) ** 2
    return float(w * np.sum(y * y - s)), float(w * g3.values.sum())


def field_to_json(f: SpectralField) -> str:
    """JSON header plus a flat ``[n1, n2, re, im]`` table over the half modes."""
    modes = half_modes(f.cutoff_N)
    N = f.cutoff_N
    vals = f.coeffs[modes[:, 0] + N, modes[:, 1] + N]
    table = [[int(a), int(b), float(v.real), float(v.imag)] for (a, b), v in zip(modes, vals)]
    return json.dumps({"cutoff_N": N, "time_t": f.time_t, "kind": f.kind, "modes": table})


def field_from_json(text: str) -> SpectralField:
    try:
        d = json.loads(text)
    except ValueError as exc:
        raise IoFailure(f"malformed field JSON: {exc}") from exc
    N = int(d["cutoff_N"])
    vals = np.array([complex(row[2], row[3]) for row in d["modes"]])
    return SpectralField(N, _scatter(N, vals), float(d["time_t"]), d["kind"])
