import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import solve_ivp

from phi3lab import _frozen
from phi3lab import groundstate as gs
from phi3lab.errors import (HankelUnderflow, IoFailure, NoBracket, NonConvergence,
                            OscillationUnderresolved, ZeroCoupling)


@pytest.fixture(scope="module")
def Q():
    return gs.ground_state()


def test_q0_matches_independent_integrator(Q):
    assert abs(Q.meta["q0"] - _frozen.Q0) < 1e-9


def test_norms_match_independent_quadrature(Q):
    l2, g2, l3 = gs.radial_norms(Q)
    assert abs(l2 - _frozen.L2SQ) < 1e-8 * l2
    assert abs(g2 - _frozen.GRADSQ) < 1e-8 * g2


def test_profile_is_positive_decreasing_and_decayed(Q):
    assert np.all(Q.values[:-1] > 0)
    assert np.all(np.diff(Q.values) < 0)
    assert Q.values[-1] < 1e-8
    assert Q.residual < 1e-8


def test_matches_rescaled_unit_equation(Q):
    # Q*(x) = u(√2 x) where u'' + u'/r = u - u², shot from the same centre value
    a = Q.meta["q0"]
    r0 = 1e-4
    c2 = (a - a * a) / 4
    sol = solve_ivp(lambda r, y: [y[1], y[0] - y[0] ** 2 - y[1] / r], (r0, 6.0),
                    [a + c2 * r0 * r0, 2 * c2 * r0], method="DOP853", rtol=1e-12, atol=1e-14,
                    dense_output=True)
    r = np.linspace(0.1, 2.5, 25)
    assert np.max(np.abs(Q(r) - sol.sol(math.sqrt(2) * r)[0])) < 1e-7


def test_short_domain_agrees_with_long_domain(Q):
    short = gs.solve_ground_state(r_max=15.0)
    assert abs(gs.radial_norms(short)[0] - gs.radial_norms(Q)[0]) < 1e-8
    with pytest.raises(ValueError):
        gs.solve_ground_state(r_max=10.0)


def test_bad_bracket_raises():
    with pytest.raises(NoBracket):
        gs.solve_ground_state(bracket=(3.0, 10.0))


def test_coarse_step_is_rejected():
    with pytest.raises(NonConvergence):
        gs.solve_ground_state(tol=1e-13, step=0.05)


def test_zero_profile_has_zero_norms(Q):
    z = gs.RadialProfile(Q.r_grid, np.zeros_like(Q.values), Q.r_max, "zero")
    assert gs.radial_norms(z) == (0.0, 0.0, 0.0)


def test_identities(Q):
    l2, g2, l3 = gs.radial_norms(Q)
    assert abs(l2 - 2 / 3 * l3) / l2 < 1e-6          # Pohozaev
    assert abs(g2 / l2 - 1) < 1e-6                    # energy identity
    cc = gs.critical_constants(1.0, Q)
    assert abs(l3 - cc.c_gns * math.sqrt(g2) * l2) / l3 < 1e-5


def test_a0_definition_and_frozen_value():
    cc = gs.critical_constants(1.0)
    assert cc.a0 == pytest.approx(1 / (8 * cc.l2sq_Qstar), rel=1e-14)
    assert cc.a0 == pytest.approx(_frozen.A0_SIGMA1, rel=1e-9)
    assert gs.critical_constants(-2.0).a0 == pytest.approx(4 * cc.a0, rel=1e-14)
    with pytest.raises(ZeroCoupling):
        gs.critical_constants(0.0)
    with pytest.raises(ZeroCoupling):
        gs.soliton_unit_profile(0.0)


@given(st.floats(0.2, 5.0), st.booleans())
def test_coupling_sign_symmetry(s, neg):
    sigma = -s if neg else s
    a = gs.critical_constants(sigma)
    b = gs.critical_constants(1.0)
    assert a.a0 == pytest.approx(sigma * sigma * b.a0, rel=1e-12)
    assert a.c_gns == b.c_gns
    assert gs.lambda_star(-sigma) == -gs.lambda_star(sigma)


@pytest.mark.parametrize("sigma", [1.0, -1.0, 2.0, 0.5])
def test_unit_soliton_mass_sign_and_energy(sigma):
    p = gs.unit_soliton(sigma)
    assert gs.radial_integral(p, p.values ** 2) == pytest.approx(1.0, abs=1e-8)
    assert np.sign(p.values[0]) == -np.sign(sigma)
    a0 = gs.critical_constants(sigma).a0
    assert gs.plane_energy(p, sigma) == pytest.approx(-a0, rel=1e-5)


def test_opposite_coupling_negates_profile():
    assert np.array_equal(gs.unit_soliton(-1.0).values, -gs.unit_soliton(1.0).values)


@pytest.mark.parametrize("q", [2.0, 5.0, 10.0])
def test_scaling_covariance_of_energy(q):
    p = gs.unit_soliton(1.0)
    assert gs.plane_energy(gs.scaled_profile(p, q), 1.0) == pytest.approx(q * q * gs.plane_energy(p, 1.0), rel=1e-9)


def test_hankel_at_zero_is_integral():
    p = gs.unit_soliton(1.0)
    assert gs.hankel_transform(p, 0.0) == pytest.approx(gs.radial_integral(p, p.values), rel=1e-10)


def test_spectrum_parseval_and_cutoff():
    spec = gs.unit_spectrum(1.0)
    x, w = np.polynomial.legendre.leggauss(300)
    rho = 0.5 * spec.xi_cut * (x + 1)
    parseval = 2 * np.pi * 0.5 * spec.xi_cut * np.sum(w * rho * spec(rho) ** 2) / (2 * np.pi) ** 2
    assert parseval == pytest.approx(1.0, abs=1e-5)
    beyond = np.linspace(spec.xi_cut, min(3 * spec.xi_cut, gs.MAX_XI_STEP / spec.profile.step), 50)
    assert np.max(np.abs(gs.hankel_transform(spec.profile, beyond))) < 2 * spec.level
    assert spec(spec.xi_cut * 1.01) == 0.0
    mid = np.linspace(0, spec.xi_cut, 37)
    assert np.max(np.abs(spec(mid) - gs.hankel_transform(spec.profile, mid))) < 1e-8


def test_hankel_resolution_guard():
    p = gs.unit_soliton(1.0)
    with pytest.raises(OscillationUnderresolved):
        gs.hankel_transform(p, 1.0 / p.step)


def test_slowly_decaying_transform_raises():
    r = np.arange(2001) * 0.01
    step = np.where(r < 1.0, 1.0, 0.0)
    with pytest.raises(HankelUnderflow):
        gs.RadialSpectrum(gs.RadialProfile(r, step, 20.0, "step"))


def test_profile_validation():
    r = np.arange(10) * 0.1
    with pytest.raises(ValueError):
        gs.RadialProfile(r, np.ones(10), 0.9, "x")
    with pytest.raises(ValueError):
        gs.RadialProfile(r + 0.1, np.zeros(10), 1.0, "x")


def test_profile_io_round_trip(tmp_path, Q):
    gs.save_profile(Q, tmp_path / "q.csv", tmp_path / "q.json", {"a0": 1.0})
    back = gs.load_profile(tmp_path / "q.csv", tmp_path / "q.json")
    assert np.array_equal(back.values, Q.values)
    assert np.array_equal(back.r_grid, Q.r_grid)
    assert back.residual == Q.residual
    with pytest.raises(IoFailure):
        gs.load_profile(tmp_path / "missing.csv")
    with pytest.raises(IoFailure):
        gs.save_profile(Q, tmp_path / "nodir" / "q.csv")
