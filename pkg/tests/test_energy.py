import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from frontlab.energy import (FrameError, basin_divergence, classify_series, dissipation,
                             energy_balance, frame, frame_energy, frame_from_speed,
                             increment_check, invasion_energy_series, invasion_speed,
                             k3_envelope, lab_anchor, lower_bound, poincare_check,
                             remainder_term, repair_check)
from frontlab.evolve import (EvolveParams, FitError, InvasionTrace, evolve_split,
                             invasion_point, split_initial, trajectory)
from frontlab.front import hyperbolic_front_state
from frontlab.grid import Grid1D, WaveState
from frontlab.potential import min_V

from conftest import compact_right_state, smoothstep


def test_frame_examples():
    f0 = frame(0.0, 1.0)
    assert (f0.s, f0.stretch) == (0.0, 1.0)
    f = frame(1 / (2 * math.sqrt(2)), 1.0)
    assert f.s == pytest.approx(1 / 3, rel=1e-15)
    assert f.stretch == pytest.approx(3 / (2 * math.sqrt(2)), rel=1e-15)
    assert frame_from_speed(0.999, 1.0).c == pytest.approx(0.999 / math.sqrt(1 - 0.998001),
                                                          rel=1e-12)
    assert frame_from_speed(0.999, 1.0).c == pytest.approx(22.34, abs=0.01)
    for bad in (1.0, 1.5, -0.1):
        with pytest.raises(FrameError):
            frame_from_speed(bad, 1.0)
    with pytest.raises(FrameError):
        frame(-1.0, 1.0)


@settings(max_examples=100, deadline=None)
@given(st.floats(0.0, 50.0), st.floats(1e-3, 1e3))
def test_frame_round_trip(c, alpha):
    f = frame(c, alpha)
    assert f.s == pytest.approx(c / f.stretch, rel=1e-15)
    assert 0 <= f.s < 1 / math.sqrt(alpha)
    if alpha * f.s ** 2 < 1 - 1e-6:
        assert frame_from_speed(f.s, alpha).c == pytest.approx(c, rel=1e-8, abs=1e-300)


@pytest.fixture(scope="module")
def front_state(front):
    g = Grid1D.from_bounds(-40, 40, 0.02)
    return hyperbolic_front_state(front, 1.0, 0.0, 0.0, g, method="hermite")


def test_anchoring_identity(front_state, cubic):
    for c in (0.2, 0.35, 0.6):
        fr = frame(c, 1.0)
        e0 = frame_energy(front_state, fr, 0.0, cubic)
        e1 = frame_energy(front_state, fr, 1.7, cubic)
        # lab anchors a0, a1 correspond to frame anchors stretch * a
        assert e0 / e1 == pytest.approx(math.exp(fr.c * fr.stretch * 1.7), rel=1e-12)


def test_zero_state_has_zero_energy(cubic):
    g = Grid1D.from_bounds(-10, 10, 0.05)
    z = WaveState(g, np.zeros(g.n), np.zeros(g.n))
    for c in (0.1, 1.0):
        assert frame_energy(z, frame(c, 1.0), 0.0, cubic) == 0.0
        assert dissipation(z, frame(c, 1.0), 0.0) == 0.0


def test_steady_front_energy_and_dissipation(front, cubic):
    alpha, dx = 1.0, 0.02
    g = Grid1D.from_bounds(-40, 60, dx)
    fr = frame(front.c_star, alpha)
    energies, diss = [], []
    for s in trajectory(hyperbolic_front_state(front, alpha, 0.0, 0.0, g, method="hermite"),
                        cubic, EvolveParams.auto(alpha, dx, 20.0), 5.0):
        a = lab_anchor(fr, 0.0, s.t)
        energies.append(frame_energy(s, fr, a, cubic))
        diss.append(dissipation(s, fr, a))
    # the front carries zero energy in its own frame; what is left is discretisation error
    assert np.max(np.abs(energies)) < 1e-6
    assert max(diss) < 1e-6


def test_lab_frame_dissipation(cubic):
    s = compact_right_state(-20, 20, 0.01)
    s = s.replace(ut=np.exp(-s.x ** 2))
    assert dissipation(s, frame(0.0, 1.0), 0.0) == pytest.approx(math.sqrt(math.pi / 2),
                                                                 rel=1e-8)


def test_remainder_term_vanishes_on_axes(cubic, front):
    g = Grid1D.from_bounds(-30, 30, 0.05)
    s = hyperbolic_front_state(front, 1.0, 0.0, 0.0, g)
    fr = frame(0.3, 1.0)
    only_v = split_initial(s, 29.0)
    zero_r = only_v.__class__(only_v.v, only_v.r.replace(u=0 * only_v.r.u, ut=0 * only_v.r.u),
                              only_v.xi0)
    assert remainder_term(zero_r, fr, 0.0, cubic) == 0.0
    zero_v = only_v.__class__(only_v.v.replace(u=0 * s.u, ut=0 * s.u), only_v.r, only_v.xi0)
    assert remainder_term(zero_v, fr, 0.0, cubic) == 0.0


def test_k3_envelope_on_split_run(cubic, front):
    alpha, dx = 1.0, 0.05
    g = Grid1D.from_bounds(-60, 80, dx)
    s0 = hyperbolic_front_state(front, alpha, 0.0, 0.0, g, method="hermite")
    fr = frame(front.c_star, alpha)
    times, R, E, mass = [], [], [], []

    def obs(ss):
        xb = invasion_point(ss.v, front.epsilon0)
        times.append(ss.t)
        R.append(remainder_term(ss, fr, xb, cubic))
        E.append(frame_energy(ss.v, fr, xb, cubic))
        mass.append(1.0)  # anchored at the invasion point: e^{c (ybar - y0)} = 1

    evolve_split(split_initial(s0, 3.0), cubic, EvolveParams.auto(alpha, dx, 30.0), every=0.5,
                 observer=obs)
    assert np.any(np.abs(R) > 0)
    env = k3_envelope(times, R, E, mass, fr.c, mu=0.5)
    assert env.K3 > 0 and env.covered >= 0.99


def test_poincare_examples():
    g = Grid1D.from_bounds(0, 60, 1e-3)
    v = np.exp(-g.x)
    res = poincare_check(v, g, 1.0, 0.0, dv=-v)
    assert res.lhs == pytest.approx(0.25, rel=1e-6)
    assert res.rhs == pytest.approx(1.0, rel=1e-6)
    assert res.holds
    z = poincare_check(np.zeros(g.n), g, 1.0, 0.0)
    assert z == (0.0, 0.0, 0.0, 0.0) and z.holds
    with pytest.raises(ValueError):
        poincare_check(v, g, 0.0, 0.0)


@pytest.mark.parametrize("ratio", [0.55, 0.75, 1.0])
def test_poincare_sharp_family(ratio):
    c = 1.0
    lam = ratio * c
    g = Grid1D.from_bounds(0, 400, 1e-3)
    v = np.exp(-lam * g.x)
    res = poincare_check(v, g, c, 0.0, dv=-lam * v)
    assert res.lhs / res.rhs == pytest.approx(c * c / (4 * lam * lam), rel=1e-6)


@pytest.fixture(scope="module")
def step_run(cubic, front):
    alpha, dx, T = 1.0, 0.05, 60.0
    s0 = compact_right_state(-80, 90, dx)
    states, xbars = [], []

    def obs(ss):
        states.append(ss)
        xbars.append(invasion_point(ss.v, front.epsilon0))

    evolve_split(split_initial(s0, 7.0), cubic, EvolveParams.auto(alpha, dx, T), every=0.5,
                 observer=obs)
    return states, np.array(xbars)


def test_lower_bound_respected(step_run, cubic, front):
    states, xbars = step_run
    vmin = min_V(cubic)
    for c in (0.25, 0.3535, 0.5, 0.8):
        fr = frame(c, 1.0)
        for ss, xb in zip(states, xbars):
            for anchor in (xb, xb - 3.0, 0.0):
                e = frame_energy(ss.v, fr, anchor, cubic)
                assert e >= lower_bound(fr, front.epsilon0, vmin, xb, anchor)


def test_energy_series_and_classification(step_run, cubic, front):
    states, xbars = step_run
    ser = invasion_energy_series([s.v for s in states], xbars, [front.c_star], 1.0, cubic)
    assert classify_series(ser[front.c_star]) == "bounded"
    with pytest.raises(FrameError):
        invasion_energy_series([states[0].v], [-math.inf], [0.3], 1.0, cubic)


def test_classify_series_synthetic():
    t = np.linspace(0, 100, 201)
    assert classify_series(1 + 0.01 * np.sin(t)) == "bounded"
    assert classify_series(np.exp(0.05 * t)) == "growing"
    assert classify_series(np.r_[np.ones(150), 100.0, np.ones(50)]) == "growing"
    assert classify_series([1.0, np.inf, 1.0, 1.0]) == "growing"
    with pytest.raises(FitError):
        classify_series([1.0, 2.0])


def test_invasion_speed_and_increments(step_run, front):
    states, xbars = step_run
    times = np.array([s.t for s in states])
    s_inf, sub = invasion_speed(InvasionTrace.from_series(times, xbars), 1.0)
    assert sub and s_inf == pytest.approx(1 / 3, rel=0.01)
    assert increment_check(times, xbars, front.s_star, 10.0) < 0.05
    with pytest.raises(FitError):
        increment_check(times, xbars, front.s_star, 100.0)
    with pytest.raises(FitError):
        invasion_speed(InvasionTrace.from_series(times[:1], xbars[:1]), 1.0)


def test_increment_check_exact_front(cubic, front):
    dx = 0.05
    g = Grid1D.from_bounds(-50, 50, dx)
    times, xb = [], []
    for s in trajectory(hyperbolic_front_state(front, 1.0, 0.0, 0.0, g, method="hermite"),
                        cubic, EvolveParams.auto(1.0, dx, 30.0), 0.5):
        times.append(s.t)
        xb.append(invasion_point(s, front.epsilon0))
    assert increment_check(times, xb, front.s_star, 10.0) <= dx


def test_basin_divergence(cubic):
    L = 400.0
    g = Grid1D.from_bounds(-L - 10, 30, 0.02)
    u = smoothstep(-g.x) * smoothstep(g.x + L + 1)  # 1 on [-L, -1], 0 for x >= 0
    ss = split_initial(WaveState(g, u, 0 * u), 5.0)
    cl = np.array([0.1, 0.05, 0.025, 0.0125])
    E = basin_divergence(ss, cl, 1.0, cubic)
    assert np.all(np.diff(E) < 0) and E[-1] < -1.0
    # what remains after removing the bulk term V(1)(1 - e^{-c stretch L})/c is the
    # O(1) transition energy, which settles as c decreases
    v1 = float(cubic.V(1.0))
    bulk = v1 * (1 - np.exp(-cl * np.sqrt(1 + cl ** 2) * L)) / cl
    rest = E - bulk
    assert np.all((rest > 0.5) & (rest < 1.2))
    zero = split_initial(WaveState(g, 0 * u, 0 * u, far_left=0.0), 5.0)
    assert np.all(basin_divergence(zero, cl, 1.0, cubic) == 0.0)


def test_repair_check_exact_front(front):
    errs = []
    for dx in (0.1, 0.05):
        g = Grid1D.from_bounds(-30, 30, dx)
        s = hyperbolic_front_state(front, 1.0, 0.0, 0.0, g, method="hermite")
        xb = invasion_point(s, front.epsilon0)
        errs.append(repair_check([s], [xb], front, 1.0)[0])
    assert max(errs) < 1e-12


def test_energy_balance_accepts_split_states(step_run, cubic, front):
    states, _ = step_run
    fr = frame(front.c_star, 1.0)
    rep = energy_balance(states[:21], fr, 0.0, cubic)
    assert rep.times.size == 21 and rep.window_residuals.size == 9
    assert np.all(rep.D >= 0) and np.max(np.abs(rep.window_residuals)) < 1e-3
