"""Radial ground state of ``ΔQ + 2Q^2 - 2Q = 0`` and the constants built from it.

The profile is found by shooting on ``Q(0)``: RK4 on a uniform radial grid,
started from a Taylor series at the origin, with bisection between shots that
turn back up (undershoot) and shots that cross zero (overshoot). Beyond a
matching radius, where the nonlinearity is below double precision, the
profile is continued by the decaying Bessel solution ``C K0(sqrt(2) r)`` so the
exponentially growing shooting error never reaches the tail.
"""
from __future__ import annotations

import functools
import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
from numba import njit
from scipy import special
from scipy.interpolate import CubicHermiteSpline

from .errors import (HankelUnderflow, IoFailure, NoBracket, NonConvergence,
                     OscillationUnderresolved, QuadratureUnstable, ZeroCoupling)

SQRT2 = math.sqrt(2.0)
BRACKET = (1.0, 10.0)
MATCH_LEVEL = 1e-6       # tail matching once Q drops below this
QUAD_RTOL = 1e-9         # Richardson tolerance for radial integrals
HANKEL_LEVEL = 1e-10     # decay level defining the spectral cutoff
MAX_XI_STEP = 0.25       # xi * step above this is treated as under-resolved


@dataclass(frozen=True, eq=False)
class RadialProfile:
    """Radial function sampled on ``r_grid`` (uniform, starting at 0)."""
    r_grid: np.ndarray
    values: np.ndarray
    r_max: float
    step_policy: str
    derivative: np.ndarray | None = None
    residual: float | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        r, v = self.r_grid, self.values
        if r.ndim != 1 or r.shape != v.shape or r.size < 5:
            raise ValueError("r_grid and values must be 1-d arrays of equal length >= 5")
        if r[0] != 0.0 or np.any(np.diff(r) <= 0):
            raise ValueError("r_grid must start at 0 and increase strictly")
        if not np.all(np.isfinite(v)):
            raise ValueError("profile values must be finite")
        if abs(v[-1]) >= 1e-8:
            raise ValueError(f"profile not decayed at r_max: |f(r_max)| = {abs(v[-1]):.3g}")

    @property
    def step(self) -> float:
        return float(self.r_grid[1] - self.r_grid[0])

    @cached_property
    def slope(self) -> np.ndarray:
        """f'(r): stored derivative if present, else 4th-order differences."""
        if self.derivative is not None:
            return self.derivative
        return _diff4(self.values, self.step)

    @cached_property
    def _spline(self):
        return CubicHermiteSpline(self.r_grid, self.values, self.slope, extrapolate=False)

    def __call__(self, r) -> np.ndarray:
        """Evaluate at arbitrary radii; zero beyond ``r_max``."""
        r = np.abs(np.asarray(r, dtype=float))
        out = self._spline(np.minimum(r, self.r_grid[-1]))
        return np.where(r > self.r_grid[-1], 0.0, out)


@dataclass(frozen=True)
class CriticalConstants:
    sigma: float
    l2sq_Qstar: float
    gradsq_Qstar: float
    l3cubed_Qstar: float
    c_gns: float
    a0: float


# ---------------------------------------------------------------- shooting

@njit(cache=True)
def _rhs(r, q, p):
    return p, 2.0 * q - 2.0 * q * q - p / r


@njit(cache=True)
def _shoot(a, h, n, qs, ps):
    """Integrate from Q(0)=a on r_i = i*h, i < n.

    Fills qs/ps up to the stopping index and returns (kind, index):
    kind = +1 overshoot (Q < 0 or |Q| > 1e3), -1 undershoot (Q' > 0 with
    Q > 0), 0 no event before the grid ends.
    """
    c2 = 0.5 * (a - a * a)
    c4 = c2 * (1.0 - 2.0 * a) / 8.0
    qs[0] = a
    ps[0] = 0.0
    qs[1] = a + c2 * h * h + c4 * h ** 4
    ps[1] = 2.0 * c2 * h + 4.0 * c4 * h ** 3
    q = qs[1]
    p = ps[1]
    for i in range(1, n - 1):
        r = i * h
        k1q, k1p = _rhs(r, q, p)
        k2q, k2p = _rhs(r + 0.5 * h, q + 0.5 * h * k1q, p + 0.5 * h * k1p)
        k3q, k3p = _rhs(r + 0.5 * h, q + 0.5 * h * k2q, p + 0.5 * h * k2p)
        k4q, k4p = _rhs(r + h, q + h * k3q, p + h * k3p)
        q = q + h * (k1q + 2.0 * k2q + 2.0 * k3q + k4q) / 6.0
        p = p + h * (k1p + 2.0 * k2p + 2.0 * k3p + k4p) / 6.0
        qs[i + 1] = q
        ps[i + 1] = p
        if q < 0.0 or abs(q) > 1e3:
            return 1, i + 1
        if p > 0.0:
            return -1, i + 1
    return 0, n - 1


def _bisect(h: float, n: int, bracket=BRACKET, max_iter: int = 200):
    qs = np.empty(n)
    ps = np.empty(n)
    lo, hi = bracket
    if _shoot(lo, h, n, qs, ps)[0] == 1 or _shoot(hi, h, n, qs, ps)[0] != 1:
        raise NoBracket(f"shots at Q(0) in {tuple(bracket)} do not bracket the ground state")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if _shoot(mid, h, n, qs, ps)[0] == 1:
            hi = mid
        else:
            lo = mid
    return lo, hi


def _diff6(f: np.ndarray, h: float) -> np.ndarray:
    """6th-order central first derivative on the interior (edges are nan)."""
    d = np.full_like(f, np.nan)
    d[3:-3] = (-f[:-6] + 9 * f[1:-5] - 45 * f[2:-4] + 45 * f[4:-2] - 9 * f[5:-1] + f[6:]) / (60 * h)
    return d


def _diff4(f: np.ndarray, h: float) -> np.ndarray:
    """4th-order first derivative, one-sided at the edges."""
    d = np.empty_like(f)
    d[2:-2] = (f[:-4] - 8 * f[1:-3] + 8 * f[3:-1] - f[4:]) / (12 * h)
    d[:2] = (-25 * f[0:2] + 48 * f[1:3] - 36 * f[2:4] + 16 * f[3:5] - 3 * f[4:6]) / (12 * h)
    d[-2:] = (25 * f[-2:] - 48 * f[-3:-1] + 36 * f[-4:-2] - 16 * f[-5:-3] + 3 * f[-6:-4]) / (12 * h)
    return d


def ode_residual(r: np.ndarray, q: np.ndarray, p: np.ndarray) -> np.ndarray:
    """Pointwise ``Q'' + Q'/r - 2Q + 2Q^2`` with Q'' from differences of Q'."""
    h = r[1] - r[0]
    res = _diff6(p, h)[3:-3] + p[3:-3] / r[3:-3] - 2 * q[3:-3] + 2 * q[3:-3] ** 2
    return res


def _assemble(a_lo: float, a_hi: float, h: float, n: int):
    r = np.arange(n) * h
    q_lo, p_lo = np.zeros(n), np.zeros(n)
    q_hi, p_hi = np.zeros(n), np.zeros(n)
    _, i_lo = _shoot(a_lo, h, n, q_lo, p_lo)
    _, i_hi = _shoot(a_hi, h, n, q_hi, p_hi)
    stop = min(i_lo, i_hi)
    below = np.nonzero(q_lo[1:stop] < MATCH_LEVEL)[0]
    if below.size == 0:
        raise NonConvergence("shots separate before the profile reaches the matching level")
    m = int(below[0]) + 1
    if abs(q_lo[m] - q_hi[m]) > 1e-3 * q_lo[m]:
        raise NonConvergence("bracketing shots disagree at the matching radius")
    # split the shot into decaying K0 and growing I0 parts at r_m, drop the growing one
    x = SQRT2 * r[m]
    mat = np.array([[special.k0(x), special.i0(x)],
                    [-SQRT2 * special.k1(x), SQRT2 * special.i1(x)]])
    c, d = np.linalg.solve(mat, [q_lo[m], p_lo[m]])
    xs = SQRT2 * r
    q = np.empty(n)
    p = np.empty(n)
    q[:m + 1] = q_lo[:m + 1] - d * special.i0(xs[:m + 1])
    p[:m + 1] = p_lo[:m + 1] - d * SQRT2 * special.i1(xs[:m + 1])
    tail = xs[m + 1:]
    q[m + 1:] = c * special.k0(tail)
    p[m + 1:] = -c * SQRT2 * special.k1(tail)
    return r, q, p, r[m]


def solve_ground_state(tol: float = 1e-10, r_max: float = 30.0, step: float = 1e-3,
                       bracket=BRACKET) -> RadialProfile:
    """Positive radial solution of ``Q'' + Q'/r = 2Q - 2Q^2`` decaying at infinity.

    ``bracket`` is the search interval for Q(0); its lower end must undershoot
    and its upper end overshoot.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if r_max < 15:
        raise ValueError("r_max must be at least 15")
    n = int(round(r_max / step)) + 1
    if n % 4 != 1:  # composite Boole/Simpson want a multiple of 4 intervals
        n += 4 - (n - 1) % 4
    a_lo, a_hi = _bisect(step, n, bracket)
    a_lo2, _ = _bisect(step / 2, 2 * n - 1, bracket)
    if abs(a_lo2 - a_lo) > tol:
        raise NonConvergence(f"step {step} too coarse: Q(0) moves by {abs(a_lo2 - a_lo):.3g} when halved")
    r, q, p, r_match = _assemble(a_lo, a_hi, step, n)
    res = float(np.max(np.abs(ode_residual(r, q, p))))
    if res >= 10 * tol:
        raise NonConvergence(f"ODE residual {res:.3g} above {10 * tol:.3g}")
    if np.any(q[:-1] <= 0) or np.any(np.diff(q) >= 0):
        raise NonConvergence("ground state is not positive and decreasing")
    meta = {"q0": a_lo, "r_match": float(r_match), "q0_halved_step": a_lo2}
    return RadialProfile(r, q, float(r[-1]), f"uniform:{step!r}", p, res, meta)


@functools.lru_cache(maxsize=None)
def ground_state() -> RadialProfile:
    """Default-resolution ground state, computed once per process."""
    return solve_ground_state()


# ---------------------------------------------------------------- quadrature

def _simpson(f: np.ndarray, h: float) -> float:
    return float(h / 3 * (f[0] + f[-1] + 4 * f[1:-1:2].sum() + 2 * f[2:-1:2].sum()))


def radial_integral(p: RadialProfile, integrand: np.ndarray, rtol: float = QUAD_RTOL) -> float:
    """``2π ∫ g(r) r dr`` by Simpson with a step-doubling Richardson check."""
    g = 2 * np.pi * integrand * p.r_grid
    h = p.step
    n = g.size - 1
    if n % 4:
        g = g[: n - n % 4 + 1]
    fine = _simpson(g, h)
    coarse = _simpson(g[::2], 2 * h)
    err = abs(fine - coarse) / 15
    scale = max(_simpson(np.abs(g), h), 1e-300)
    if err > rtol * scale:
        raise QuadratureUnstable(f"Richardson estimate {err:.3g} exceeds {rtol:g} relative")
    return fine + (fine - coarse) / 15


def radial_norms(p: RadialProfile) -> tuple[float, float, float]:
    """(‖f‖²_{L²}, ‖∇f‖²_{L²}, ‖f‖³_{L³}) of a radial function on the plane."""
    v = p.values
    l2 = radial_integral(p, v * v)
    g2 = radial_integral(p, p.slope ** 2)
    l3 = radial_integral(p, np.abs(v) ** 3)
    return max(l2, 0.0), max(g2, 0.0), max(l3, 0.0)


def critical_constants(sigma: float, p: RadialProfile | None = None) -> CriticalConstants:
    if sigma == 0:
        raise ZeroCoupling("sigma must be nonzero")
    p = ground_state() if p is None else p
    l2, g2, l3 = radial_norms(p)
    return CriticalConstants(float(sigma), l2, g2, l3, 1.5 / math.sqrt(l2), sigma * sigma / (8 * l2))


def lambda_star(sigma: float, p: RadialProfile | None = None) -> float:
    p = ground_state() if p is None else p
    return -sigma / (2 * math.sqrt(radial_norms(p)[1]))


def soliton_unit_profile(sigma: float, p: RadialProfile | None = None) -> RadialProfile:
    """Unit-mass minimizer ``λ Q*(|λ| r)/‖Q*‖`` with ``λ = -σ/(2‖∇Q*‖)``."""
    if sigma == 0:
        raise ZeroCoupling("sigma must be nonzero")
    p = ground_state() if p is None else p
    lam = lambda_star(sigma, p)
    scale = abs(lam)
    norm = math.sqrt(radial_norms(p)[0])
    r = p.r_grid / scale
    vals = lam * p.values / norm
    der = lam * scale * p.slope / norm
    meta = dict(p.meta, sigma=float(sigma), lam=lam)
    return RadialProfile(r, vals, float(r[-1]), f"uniform:{p.step / scale!r}", der, None, meta)


@functools.lru_cache(maxsize=None)
def unit_soliton(sigma: float) -> RadialProfile:
    return soliton_unit_profile(sigma, ground_state())


def scaled_profile(p: RadialProfile, q: float) -> RadialProfile:
    """``q f(q^{1/2} r)``: the mass-q member of the scaling family."""
    s = math.sqrt(q)
    r = p.r_grid / s
    return RadialProfile(r, q * p.values, float(r[-1]), f"uniform:{p.step / s!r}",
                         q * s * p.slope, None, dict(p.meta, q=q))


def laplacian(p: RadialProfile) -> np.ndarray:
    """``f'' + f'/r`` on the interior points (edges trimmed by 3)."""
    r = p.r_grid
    return _diff6(p.slope, p.step)[3:-3] + p.slope[3:-3] / r[3:-3]


def plane_energy(p: RadialProfile, sigma: float) -> float:
    """``H0(f) = ½‖∇f‖² + (σ/3)∫f³`` on the plane."""
    return 0.5 * radial_integral(p, p.slope ** 2) + sigma / 3 * radial_integral(p, p.values ** 3)


# ---------------------------------------------------------------- Hankel

def _boole(g: np.ndarray, h: float) -> np.ndarray:
    """Composite Boole rule along the last axis (Simpson plus one Richardson step)."""
    w = np.ones(g.shape[-1])
    w[1:-1:2] = 32
    w[2:-1:4] = 12
    w[4:-1:4] = 14
    w[0] = w[-1] = 7
    return g @ w * (2 * h / 45)


def hankel_transform(p: RadialProfile, xi):
    """Plane Fourier transform of a radial function: ``2π ∫ f(r) J0(ξ r) r dr``."""
    xi_arr = np.atleast_1d(np.asarray(xi, dtype=float))
    if np.any(xi_arr < 0):
        raise ValueError("xi must be nonnegative")
    h = p.step
    if np.max(xi_arr, initial=0.0) * h > MAX_XI_STEP:
        raise OscillationUnderresolved(f"xi*step = {np.max(xi_arr) * h:.3g} exceeds {MAX_XI_STEP}")
    n = p.r_grid.size - 1
    k = n - n % 4 + 1
    r = p.r_grid[:k]
    fr = 2 * np.pi * p.values[:k] * r
    out = np.empty(xi_arr.size)
    for s in range(0, xi_arr.size, 32):
        chunk = xi_arr[s:s + 32]
        out[s:s + 32] = _boole(special.j0(np.outer(chunk, r)) * fr, h)
    return out if np.ndim(xi) else float(out[0])


class RadialSpectrum:
    """Chebyshev table of ``ξ ↦ f̂(ξ)`` on ``[0, ξ*]``; zero beyond ``ξ*``.

    ``ξ*`` is the decay cutoff: beyond it the scanned transform stays below
    ``level`` in absolute value.
    """

    def __init__(self, p: RadialProfile, level: float = HANKEL_LEVEL, degree: int = 256):
        self.profile = p
        self.level = level
        self.xi_cut = self._decay_scan(p, level)
        self.degree = degree
        self._cheb = np.polynomial.Chebyshev.interpolate(
            lambda x: hankel_transform(p, np.clip(x, 0, None)), degree, domain=[0.0, self.xi_cut])
        self.value0 = float(hankel_transform(p, 0.0))

    @staticmethod
    def _decay_scan(p: RadialProfile, level: float) -> float:
        xi_lim = MAX_XI_STEP / p.step
        # transform varies on the scale 1/r where f is non-negligible
        rmass = p.r_grid[np.nonzero(np.abs(p.values) > level * np.max(np.abs(p.values)))[0][-1]]
        dxi = 0.25 / max(rmass, 1e-12)
        grid = np.arange(0.0, xi_lim, dxi)
        vals = np.abs(hankel_transform(p, grid[:64]))
        start = 0
        while True:
            above = np.nonzero(vals > level)[0]
            last = int(above[-1]) if above.size else -1
            if last < vals.size - 32:
                return float(grid[last + 1]) if last >= 0 else float(grid[1])
            if vals.size >= grid.size:
                raise HankelUnderflow(f"transform still above {level:g} at the resolution limit {xi_lim:.3g}")
            start = vals.size
            vals = np.concatenate([vals, np.abs(hankel_transform(p, grid[start:start + 2 * start]))])

    def __call__(self, xi) -> np.ndarray:
        xi = np.abs(np.asarray(xi, dtype=float))
        inside = xi <= self.xi_cut
        return np.where(inside, self._cheb(np.where(inside, xi, 0.0)), 0.0)


@functools.lru_cache(maxsize=None)
def unit_spectrum(sigma: float) -> RadialSpectrum:
    return RadialSpectrum(unit_soliton(sigma))


# ---------------------------------------------------------------- I/O

def save_profile(p: RadialProfile, csv_path, json_path=None, frozen: dict | None = None) -> None:
    """Write ``r,value`` CSV plus a JSON header (r_max, step, residual, constants)."""
    try:
        with open(csv_path, "w", newline="") as fh:
            fh.write("r,value\n")
            for r, v in zip(p.r_grid, p.values):
                fh.write(f"{float(r)!r},{float(v)!r}\n")
        if json_path is not None:
            head = {"r_max": p.r_max, "step": p.step, "step_policy": p.step_policy,
                    "residual": p.residual, "frozen": frozen or {}, "meta": p.meta}
            Path(json_path).write_text(json.dumps(head, indent=2, sort_keys=True))
    except OSError as exc:
        raise IoFailure(str(exc)) from exc


def load_profile(csv_path, json_path=None) -> RadialProfile:
    try:
        data = np.loadtxt(csv_path, delimiter=",", skiprows=1, ndmin=2)
        head = json.loads(Path(json_path).read_text()) if json_path else {}
    except OSError as exc:
        raise IoFailure(str(exc)) from exc
    return RadialProfile(data[:, 0], data[:, 1], float(data[-1, 0]),
                         head.get("step_policy", "uniform"), None, head.get("residual"), head.get("meta", {}))
