import math

import numpy as np
import pytest

from frontlab.evolve import (BlowUpError, BoundaryContaminationError, CFLError, EvolveParams,
                             FitError, InvasionTrace, SplitStepper, Stepper, evolve_split,
                             fit_slope, interaction, interaction_excess, invasion_point, ramp,
                             remainder_decay, remainder_trace, simulate, split_initial, step,
                             trajectory)
from frontlab.front import hyperbolic_front_state
from frontlab.grid import Grid1D, WaveState
from frontlab.potential import make_cubic, supersonic_example, tabulated

from conftest import compact_right_state, observed_order


def front_sup_error(fp, alpha, dx, T):
    g = Grid1D.from_bounds(-30, 30, dx)
    prm = EvolveParams(alpha, 0.5 * dx, dx, T)
    p = make_cubic(0.25)
    s0 = hyperbolic_front_state(fp, alpha, 0.0, 0.0, g, method="hermite")
    end = simulate(s0, p, prm)
    exact = hyperbolic_front_state(fp, alpha, 0.0, end.t, g, method="hermite")
    return float(np.max(np.abs(end.u - exact.u)))


def test_cfl_rule():
    EvolveParams(1.0, 0.045, 0.05, 1.0)
    with pytest.raises(CFLError):
        EvolveParams(1.0, 0.046, 0.05, 1.0)
    with pytest.raises(CFLError):
        EvolveParams(0.25, 0.03, 0.05, 1.0)
    assert EvolveParams.auto(4.0, 0.05, 1.0).dt == pytest.approx(0.09)
    with pytest.raises(ValueError):
        EvolveParams(1.0, 0.01, 0.05, 1.0, boundary="periodic")


@pytest.mark.parametrize("level", [0.0, 1.0])
def test_equilibria_are_fixed_points(cubic, level):
    g = Grid1D.from_bounds(-10, 10, 0.05)
    s = WaveState(g, np.full(g.n, level), np.zeros(g.n), far_left=level, far_right=level)
    prm = EvolveParams.auto(1.0, 0.05, 20.0)
    end = simulate(s, cubic, prm)
    assert np.array_equal(end.u, s.u) and np.array_equal(end.ut, s.ut)
    one = step(s, cubic, prm)
    assert np.array_equal(one.u, s.u)


def test_second_order_on_exact_front(exact_front):
    errs = [front_sup_error(exact_front, 1.0, dx, 10.0) for dx in (0.1, 0.05, 0.025)]
    assert np.all(np.abs(observed_order(errs) - 2.0) < 0.15)


def test_second_order_on_supersonic_solution():
    s, alpha, T = 2.0, 1.0, 4.0
    p = supersonic_example(s, alpha)
    errs = []
    for dx in (0.1, 0.05, 0.025):
        g = Grid1D.from_bounds(-20, 30, dx)
        u = 1 / (1 + np.exp(g.x))
        s0 = WaveState(g, u, s * u * (1 - u))
        end = simulate(s0, p, EvolveParams(alpha, 0.5 * dx, dx, T))
        exact = 1 / (1 + np.exp(g.x - s * end.t))
        errs.append(np.max(np.abs(end.u - exact)))
    assert np.all(np.abs(observed_order(errs) - 2.0) < 0.15)


def test_generic_path_matches_kernel(cubic):
    tab = tabulated(cubic.V, cubic.dV, cubic.d2V, cubic.d3V)
    s0 = compact_right_state(-20, 20, 0.05)
    prm = EvolveParams.auto(1.0, 0.05, 5.0)
    a = simulate(s0, cubic, prm)
    b = simulate(s0, tab, prm)
    assert np.max(np.abs(a.u - b.u)) < 1e-13


def test_trajectory_snapshots(cubic):
    s0 = compact_right_state(-20, 20, 0.05)
    prm = EvolveParams(1.0, 0.025, 0.05, 2.0)
    ts = [s.t for s in trajectory(s0, cubic, prm, 0.5)]
    assert ts == pytest.approx([0.0, 0.5, 1.0, 1.5, 2.0])


def test_blow_up_detected():
    p = supersonic_example(2.0, 1.0)
    g = Grid1D.from_bounds(-10, 10, 0.05)
    s = WaveState(g, -3 * np.exp(-g.x ** 2), np.zeros(g.n), far_left=0.0)
    with pytest.raises(BlowUpError):
        simulate(s, p, EvolveParams.auto(1.0, 0.05, 5.0), every=0.1)


def test_finite_propagation(cubic):
    alpha, dx, T = 1.0, 0.05, 5.0
    prm = EvolveParams.auto(alpha, dx, T)
    g = Grid1D.from_bounds(-40, 40, dx)
    base = compact_right_state(-40, 40, dx)
    a, b = 5.0, 7.0
    bump = np.where((g.x > a) & (g.x < b), 0.01 * np.sin(np.pi * (g.x - a) / (b - a)) ** 2, 0.0)
    pert = base.replace(u=base.u + bump)
    sa, sb = Stepper(base, cubic, prm), Stepper(pert, cubic, prm)
    n = prm.nsteps(1.0)
    while sa.nstep < prm.nsteps(T):
        sa.advance(n)
        sb.advance(n)
        diff = np.abs(sa.u - sb.u)
        t = sa.t
        # discrete domain of dependence: one cell per step
        cone = sa.nstep * dx
        outside = (g.x < a - cone - 1e-9) | (g.x > b + cone + 1e-9)
        assert np.all(diff[outside] == 0.0)
        # physical cone: speed 1/sqrt(alpha), plus a margin for numerical dispersion
        reach = (t + prm.dt) / math.sqrt(alpha) + 1.5
        far = (g.x < a - reach) | (g.x > b + reach)
        assert np.max(diff[far]) <= 1e-12


def test_ramp_and_split_initial():
    assert ramp(np.array([-5.0, -4.0, -2.0, 0.0, 3.0])) == pytest.approx([0, 0, 0.5, 1, 1])
    g = Grid1D.from_bounds(-10, 10, 0.05)
    xi0 = 2.0
    s = WaveState(g, np.full(g.n, 0.7), np.full(g.n, 0.1))
    ss = split_initial(s, xi0)
    right = g.x >= xi0 - 1e-12
    left = g.x <= xi0 - 4 + 1e-12
    assert np.all(ss.r.u[right] == s.u[right]) and np.all(ss.v.u[right] == 0)
    assert np.all(ss.r.u[left] == 0) and np.all(ss.v.u[left] == s.u[left])
    assert ss.r.u[g.index_of(xi0 - 2)] == pytest.approx(0.35)
    assert np.array_equal(ss.total().u, s.u)
    assert ss.r.far_left == 0.0 and ss.v.far_right == 0.0
    with pytest.raises(ValueError):
        split_initial(s, 50.0)


def test_interaction_vanishes_on_axes(cubic):
    x = np.linspace(-2, 2, 101)
    assert np.all(interaction(x, 0 * x, cubic) == 0)
    assert np.all(interaction(0 * x, x, cubic) == 0)
    v, r = np.meshgrid(x, x)
    theta = cubic.theta
    assert np.allclose(interaction(v, r, cubic), v * r * (2 * (1 + theta) - 3 * (v + r)),
                       atol=1e-13)


def test_split_with_zero_remainder_is_full_equation(cubic):
    s0 = compact_right_state(-30, 30, 0.05)
    prm = EvolveParams.auto(1.0, 0.05, 5.0)
    ss = split_initial(s0, 29.0)  # r vanishes: the data is zero there
    assert np.all(ss.r.u == 0)
    end = evolve_split(ss, cubic, prm)
    full = simulate(s0, cubic, prm)
    assert np.all(end.r.u == 0)
    assert np.max(np.abs(end.v.u - full.u)) < 1e-14


def test_splitting_consistency_and_k2_bound(cubic, front):
    dx, T = 0.05, 10.0
    g = Grid1D.from_bounds(-40, 60, dx)
    s0 = hyperbolic_front_state(front, 1.0, 0.0, 0.0, g)
    prm = EvolveParams.auto(1.0, dx, T)
    ss = split_initial(s0, 5.0)
    excess = []
    end = evolve_split(ss, cubic, prm, every=0.1,
                       observer=lambda st: excess.append(interaction_excess(st.v.u, st.r.u,
                                                                            cubic)[0]))
    full = simulate(s0, cubic, prm)
    assert np.max(np.abs(end.total().u - full.u)) <= 1e-8
    assert max(excess) <= 0.0


def test_v_support_cone(cubic, front):
    alpha, dx, T = 1.0, 0.05, 5.0
    g = Grid1D.from_bounds(-40, 40, dx)
    s0 = hyperbolic_front_state(front, alpha, 0.0, 0.0, g)
    xi0 = 5.0
    st = SplitStepper(split_initial(s0, xi0), cubic, EvolveParams.auto(alpha, dx, T))
    while st.nstep < st.prm.nsteps(T):
        st.advance(10)
        v = st.state().v.u
        assert np.all(v[g.x > xi0 + st.nstep * dx + 1e-9] == 0.0)
        assert np.max(np.abs(v[g.x > xi0 + st.t / math.sqrt(alpha) + 1.5])) <= 1e-12


def test_split_needs_polynomial(cubic):
    tab = tabulated(cubic.V, cubic.dV, cubic.d2V, cubic.d3V)
    ss = split_initial(compact_right_state(-10, 10, 0.05), 3.0)
    with pytest.raises(NotImplementedError):
        SplitStepper(ss, tab, EvolveParams.auto(1.0, 0.05, 1.0))


def test_invasion_point_examples(front):
    eps0 = front.epsilon0
    g = Grid1D.from_bounds(-30, 30, 0.01)
    xc = 3.3
    h, _ = front.evaluate(g.x - xc)
    assert invasion_point(h, eps0, g) == pytest.approx(xc, abs=g.dx)
    assert invasion_point(np.zeros(g.n), eps0, g) == -math.inf
    for dx in (0.25, 0.125, 0.0625):
        gg = Grid1D(3.0, dx, int(round(6.0 / dx)) + 1)
        bump = eps0 * np.exp(-((gg.x - 5.0) ** 2))
        assert invasion_point(bump, eps0, gg) == 5.0
    with pytest.raises(ValueError):
        invasion_point(np.zeros(5), eps0)


def test_invasion_point_boundary_contamination(front):
    g = Grid1D.from_bounds(-10, 10, 0.05)
    with pytest.raises(BoundaryContaminationError):
        invasion_point(np.full(g.n, 0.5), front.epsilon0, g, margin=1.0)


def test_invasion_point_stays_inside_cone(cubic, front):
    alpha, dx, T = 1.0, 0.05, 30.0
    s0 = compact_right_state(-60, 60, dx)
    xi0 = 5.0
    xbars, times = [], []

    def obs(ss):
        xbars.append(invasion_point(ss.v, front.epsilon0))
        times.append(ss.t)

    evolve_split(split_initial(s0, xi0), cubic, EvolveParams.auto(alpha, dx, T), every=1.0,
                 observer=obs)
    assert np.all(np.array(xbars) < xi0 + np.array(times) / math.sqrt(alpha))


def test_invasion_speed_of_exact_front(cubic, front):
    alpha, dx, T = 1.0, 0.05, 40.0
    g = Grid1D.from_bounds(-60, 60, dx)
    s0 = hyperbolic_front_state(front, alpha, 0.0, 0.0, g, method="hermite")
    times, xb = [], []
    for s in trajectory(s0, cubic, EvolveParams.auto(alpha, dx, T), 0.5):
        times.append(s.t)
        xb.append(invasion_point(s, front.epsilon0))
    tr = InvasionTrace.from_series(times, xb)
    assert tr.s_fit == pytest.approx(1.0 / 3.0, abs=dx / (tr.fit_window[1] - tr.fit_window[0]))


def test_fit_slope_errors():
    with pytest.raises(FitError):
        fit_slope([0.0, 1.0], [0.0, 1.0], 0.5)
    assert fit_slope([0, 1, 2], [1, 3, 5], 0.0) == pytest.approx((2.0, 1.0))


def random_remainder(L, dx, seed, amp=1e-3):
    """Smooth random data with a flat envelope of half-width about L/3."""
    g = Grid1D.from_bounds(-L, L, dx)
    rng = np.random.default_rng(seed)
    k = np.fft.rfftfreq(g.n, dx)
    amps = (rng.standard_normal(k.size) + 1j * rng.standard_normal(k.size)) * np.exp(-(k / 0.1) ** 2)
    f = np.fft.irfft(amps, g.n) * np.exp(-((g.x / (L / 3)) ** 8))
    return WaveState(g, amp * f / np.max(np.abs(f)), np.zeros(g.n), far_left=0.0)


def test_remainder_decay_zero():
    g = Grid1D.from_bounds(-5, 5, 0.1)
    z = WaveState(g, np.zeros(g.n), np.zeros(g.n), far_left=0.0)
    t, n2 = remainder_trace([z, z.replace(t=1.0), z.replace(t=2.0)])
    assert remainder_decay(t, n2) == (0.0, math.inf)


def test_remainder_decay_rejects_growth():
    t = np.linspace(0, 10, 21)
    with pytest.raises(FitError):
        remainder_decay(t, np.exp(0.1 * t))


def test_remainder_decay_critical_damping(cubic):
    # alpha = 1, beta0 = 1/4: double root -1/2, squared norm decays like t^2 e^{-t}
    s0 = random_remainder(60.0, 0.05, seed=0)
    t, n2 = remainder_trace(trajectory(s0, cubic, EvolveParams.auto(1.0, 0.05, 100.0), 1.0))
    _, mu = remainder_decay(t, n2)
    assert mu == pytest.approx(1.0, rel=0.1)
