import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hamlab.macro_solver import (
    FluxPair,
    InitialProfile,
    MacroSolution,
    RefinementRequiredError,
    smooth_bump,
    theta,
    u_value_grid,
    weak_residual,
)

SHOCK = InitialProfile.step(1.0, 0.0)  # density 1 left of 0, 0 right: moving shock
FAN = InitialProfile.step(0.0, 1.0)    # upward jump: rarefaction fan


def rand_profile(rng, pieces=4):
    k = rng.integers(1, pieces + 1)
    bp = np.sort(rng.uniform(-2, 2, size=k - 1))
    dens = rng.uniform(0.0, 2.0, size=k)
    return InitialProfile(bp, dens)


# -- flux pair ------------------------------------------------------------------


def test_flux_dual_and_derivative():
    fx = FluxPair.quadratic()
    for x in np.linspace(-3, 3, 25):
        # dual: g(x) = sup_r (x r - f(r))
        rs = np.linspace(-6, 6, 20001)
        assert fx.g(x) == pytest.approx(np.max(x * rs - rs**2), abs=1e-6)
        fd = (fx.g(x + 1e-8) - fx.g(x - 1e-8)) / 2e-8
        assert fx.b(x) == pytest.approx(fd, abs=1e-7)
        assert fx.b_inv(fx.b(x)) == pytest.approx(x, abs=1e-12)


def test_theta_is_half_for_quadratic():
    fx = FluxPair.quadratic()
    assert theta(fx, 1.0, 0.0) == pytest.approx(0.5)
    assert theta(fx, 3.0, -1.0) == pytest.approx(0.5)
    lam, rho = 2.3, 0.4
    th = theta(fx, lam, rho)
    slope = (fx.f(lam) - fx.f(rho)) / (lam - rho)
    assert th * fx.fprime(rho) + (1 - th) * fx.fprime(lam) == pytest.approx(slope, abs=1e-12)
    with pytest.raises(ValueError):
        theta(fx, 1.0, 1.0)


# -- profile --------------------------------------------------------------------


def test_profile_validation():
    with pytest.raises(ValueError):
        InitialProfile([0.0], [1.0])
    with pytest.raises(ValueError):
        InitialProfile([1.0, 0.0], [1.0, 1.0, 1.0])
    with pytest.raises(ValueError):
        InitialProfile([], [-0.5])


def test_u0_reproduced_by_integration():
    rng = np.random.default_rng(3)
    for _ in range(50):
        prof = rand_profile(rng)
        xs = rng.uniform(-4, 4, size=20)
        for x in xs:
            grid = np.linspace(0.0, x, 4001)
            quad = np.trapezoid(prof.rho0(grid), grid)
            assert float(prof.u0(x)) == pytest.approx(quad, abs=1e-6)
        assert float(prof.u0(0.0)) == 0.0


def test_clock_signed():
    assert float(SHOCK.clock(-2.0)) == pytest.approx(-2.0)
    assert float(SHOCK.clock(1.5)) == pytest.approx(0.0)
    assert float(FAN.clock(2.0)) == pytest.approx(2.0)
    assert float(FAN.clock(-3.0)) == pytest.approx(0.0)


# -- Hopf-Lax values --------------------------------------------------------------


def test_u_value_zero_density():
    sol = MacroSolution(InitialProfile.constant(0.0))
    for x in (-2.0, 0.0, 3.5):
        for t in (0.0, 0.5, 2.0):
            assert sol.u_value(x, t) == 0.0
    ms = sol.minimizers(1.0, 1.0)
    assert ms.members.tolist() == [1.0]


def test_u_value_shock_examples_with_grid_oracle():
    sol = MacroSolution(SHOCK)
    assert sol.u_value(0.0, 1.0) == pytest.approx(-1.0, abs=1e-12)
    assert sol.u_value(2.0, 1.0) == pytest.approx(0.0, abs=1e-12)
    val, _y = u_value_grid(SHOCK.u0, 0.0, 1.0, -10.0, 0.0)
    assert val == pytest.approx(-1.0, abs=1e-6)
    with pytest.raises(ValueError):
        sol.u_value(0.0, -1.0)


def test_u_value_random_profiles_vs_grid_oracle():
    rng = np.random.default_rng(11)
    for _ in range(100):
        prof = rand_profile(rng)
        sol = MacroSolution(prof)
        x = float(rng.uniform(-3, 3))
        t = float(rng.uniform(0.1, 2.0))
        exact = sol.u_value(x, t)
        approx, _ = u_value_grid(prof.u0, x, t, x - 4 * t * prof.max_density - 2.0, x)
        assert exact == pytest.approx(approx, abs=2e-6)
        assert exact <= approx + 1e-12  # exact candidate set can only do better


def test_minimizers_examples():
    sol = MacroSolution(SHOCK)
    ms = sol.minimizers(1.0, 1.0)
    assert ms.members.tolist() == pytest.approx([-1.0, 1.0])
    ms0 = sol.minimizers(0.0, 1.0)
    assert ms0.members.tolist() == pytest.approx([-2.0])
    assert sol.minimizers(0.5, 0.0).members.tolist() == [0.5]


def test_rho_pm_and_shock_flags():
    sol = MacroSolution(SHOCK)
    assert sol.rho_pm(1.0, 1.0) == pytest.approx((1.0, 0.0))
    assert sol.rho_pm(0.0, 1.0) == pytest.approx((1.0, 1.0))
    assert sol.is_shock(1.0, 1.0)
    assert not sol.is_shock(0.0, 1.0)
    assert not sol.is_shock(1.0, 0.0)
    solc = MacroSolution(InitialProfile.constant(0.7))
    assert solc.rho_pm(0.3, 0.8) == pytest.approx((0.7, 0.7))
    assert not solc.is_shock(0.3, 0.8)
    fan = MacroSolution(FAN)
    assert fan.rho_pm(1.0, 1.0) == pytest.approx((0.5, 0.5))


def test_shock_speed_and_forward_char():
    sol = MacroSolution(SHOCK)
    assert sol.shock_speed(1.0, 1.0) == pytest.approx(1.0)
    solc = MacroSolution(InitialProfile.constant(0.7))
    assert solc.shock_speed(0.0, 1.0) == pytest.approx(1.4)
    for t in (0.5, 1.0, 2.0):
        wm, wp = solc.forward_char(0.0, 0.0, t)
        assert wm == pytest.approx(2 * 0.7 * t, abs=1e-6)
        assert wp == pytest.approx(2 * 0.7 * t, abs=1e-6)
        wm, wp = sol.forward_char(0.0, 0.0, t)
        assert wm == pytest.approx(t, abs=1e-6) and wp == pytest.approx(t, abs=1e-6)
    fan = MacroSolution(FAN)
    wm, wp = fan.forward_char(0.0, 0.0, 1.0)
    assert wm == pytest.approx(0.0, abs=1e-4)
    assert wp == pytest.approx(2.0, abs=1e-4)


def test_forward_char_speed_matches_h():
    sol = MacroSolution(SHOCK)
    for t in (0.5, 1.0):
        dt = 1e-4
        w1 = sol.forward_char(0.0, 0.0, t)[0]
        w2 = sol.forward_char(0.0, 0.0, t + dt)[0]
        assert (w2 - w1) / dt == pytest.approx(sol.shock_speed(w1, t), abs=0.05)


def test_intermediate_minimizer():
    sol = MacroSolution(InitialProfile.constant(0.5))
    x, t = 1.0, 1.0
    ym, yp = sol.intermediate_minimizer(x, t, 0.5)
    assert ym == pytest.approx(0.5 * x + 0.5 * (x - 2 * 0.5 * t))
    assert ym == pytest.approx(yp)
    s_small = 1e-9
    ym2, _ = sol.intermediate_minimizer(x, t, s_small)
    assert ym2 == pytest.approx(sol.y_pm(x, t)[0], abs=1e-6)
    shock = MacroSolution(SHOCK)
    ym3, yp3 = shock.intermediate_minimizer(1.0, 1.0, 0.5)
    assert (ym3, yp3) == pytest.approx((0.0, 1.0))
    with pytest.raises(ValueError):
        sol.intermediate_minimizer(1.0, 1.0, 1.5)


def test_v_weak():
    sol = MacroSolution(SHOCK)
    assert sol.v_weak(lambda y: 3.14, 0.3, 1.0) == pytest.approx(3.14)
    assert sol.v_weak(lambda y: np.asarray(y), 1.0, 1.0) == pytest.approx(0.0)
    assert sol.v_weak(lambda y: np.asarray(y), 0.0, 1.0) == pytest.approx(-2.0)


# -- semigroup and structure -------------------------------------------------------


def test_semigroup_identity_on_grid():
    rng = np.random.default_rng(5)
    profiles = [SHOCK, FAN, InitialProfile([-.5, .7], [.3, 1.5, .9])]
    for prof in profiles:
        sol = MacroSolution(prof)
        for x in np.linspace(-2, 2, 7):
            for (s, t) in [(0.2, 1.0), (0.5, 0.8), (0.9, 1.0)]:
                lhs = sol.semigroup_value(float(x), s, t)
                rhs = sol.u_value(float(x), t)
                assert abs(lhs - rhs) <= 1e-9 * (1 + abs(rhs))


def test_shocks_at_and_structure():
    sol = MacroSolution(SHOCK)
    assert sol.shocks_at(1.0).tolist() == pytest.approx([1.0], abs=1e-6)
    fan = MacroSolution(FAN)
    assert fan.shocks_at(1.0).size == 0
    pts = fan.structure_points(1.0)
    assert pts.tolist() == pytest.approx([0.0, 2.0], abs=1e-6)


# -- monotonicity / equivalence fuzz -----------------------------------------------


@settings(max_examples=120, deadline=None)
@given(
    st.floats(-2, 2), st.floats(-2, 2),
    st.floats(0.1, 2.0), st.integers(0, 400)
)
def test_minimizer_monotone_in_x(x1, x2, t, pseed):
    rng = np.random.default_rng(pseed)
    sol = MacroSolution(rand_profile(rng))
    x1, x2 = min(x1, x2), max(x1, x2)
    if x2 - x1 < 1e-9:
        return
    assert sol.y_pm(x1, t)[1] <= sol.y_pm(x2, t)[0] + 1e-7


@settings(max_examples=120, deadline=None)
@given(st.floats(-2, 2), st.floats(0.1, 1.0), st.floats(1.01, 2.0), st.integers(0, 400))
def test_minimizer_monotone_in_t(x, t1, t2, pseed):
    rng = np.random.default_rng(pseed)
    sol = MacroSolution(rand_profile(rng))
    assert sol.y_pm(x, t2 * t1 + t1)[1] <= sol.y_pm(x, t1)[0] + 1e-7


@settings(max_examples=60, deadline=None)
@given(st.floats(-1.5, 1.5), st.floats(0.2, 1.5), st.integers(0, 400))
def test_xy_equivalence(a, t, pseed):
    # y-(x) <= a <= y+(x)  iff  w-(a) <= x <= w+(a)
    rng = np.random.default_rng(pseed)
    sol = MacroSolution(rand_profile(rng))
    wm, wp = sol.forward_char(a, 0.0, t)
    for x in np.linspace(a - 0.3, wp + 0.5, 7):
        ym, yp = sol.y_pm(float(x), t)
        inside_y = ym - 1e-6 <= a <= yp + 1e-6
        inside_w = wm - 1e-6 <= x <= wp + 1e-6
        assert inside_y == inside_w or abs(x - wm) < 1e-4 or abs(x - wp) < 1e-4


def test_minimizer_confinement():
    rng = np.random.default_rng(17)
    for _ in range(40):
        prof = rand_profile(rng)
        sol = MacroSolution(prof)
        lip = prof.max_density
        x = float(rng.uniform(-2, 2))
        t = float(rng.uniform(0.05, 2.0))
        ym, yp = sol.y_pm(x, t)
        assert yp <= x + 1e-12
        assert ym >= x - 2 * lip * t - 1e-9  # Lipschitz confinement for f' = 2 rho


# -- weak transport residual -------------------------------------------------------


def test_weak_residual_zero_data():
    sol = MacroSolution(SHOCK)
    phi = smooth_bump(-1.0, 2.5, 0.1, 1.5)
    res = weak_residual(sol, lambda y: np.zeros_like(np.asarray(y, float)), phi, n_t=8, n_x=8)
    assert res == 0.0


def test_weak_residual_smooth_case_refines():
    sol = MacroSolution(InitialProfile.constant(0.6))
    phi = smooth_bump(-1.0, 2.0, 0.1, 1.2)
    v0 = lambda y: np.sin(np.asarray(y, float))
    r1 = abs(weak_residual(sol, v0, phi, n_t=16, n_x=16))
    r2 = abs(weak_residual(sol, v0, phi, n_t=32, n_x=32))
    assert r2 < r1 / 3.0


def test_weak_residual_shock_needs_theta_half():
    sol = MacroSolution(SHOCK)
    phi = smooth_bump(-0.8, 2.6, 0.2, 1.6)
    v0 = lambda y: np.asarray(y, float)
    r_theta = abs(weak_residual(sol, v0, phi, n_t=48, n_x=48))
    r_plus = abs(weak_residual(sol, v0, phi, n_t=48, n_x=48, shock_value="plus"))
    assert r_theta < 0.02
    assert r_plus > 0.01
    with pytest.raises(ValueError):
        weak_residual(sol, v0, phi, shock_value="minus")
