"""Two-node thermal model: step math, gating, and calibrated envelopes."""
import numpy as np
import pytest

from payloadsim import orbitsim, thermal
from payloadsim.errors import ConfigError, InvalidStepError
from payloadsim.orbitsim import DEFAULT_EPOCH
from payloadsim.thermal import (
    ThermalLimits,
    ThermalParams,
    ThermalState,
    calibrated_defaults,
    gate,
    simulate_orbit_profile,
    steady_state_nano,
    step,
)

PARAMS = ThermalParams(c_nano=100.0, c_frame=1000.0, g_nano_frame=0.3,
                       g_frame_sink=0.2, sink_sunlit_c=-10.0, sink_eclipse_c=-30.0)


def _state(tn, tf):
    return ThermalState(tn, tf, DEFAULT_EPOCH)


def test_params_validation():
    with pytest.raises(ConfigError):
        ThermalParams(0, 1, 1, 1, 0, 0)
    with pytest.raises(ConfigError):
        ThermalParams(1, 1, 1, 1, 0, 0, p_active_w=1.0, p_idle_w=2.0)
    with pytest.raises(ConfigError):
        ThermalLimits(op_min_c=-50, nonop_min_c=-40, op_max_c=97)
    with pytest.raises(ConfigError):
        ThermalState(200.0, 0.0, DEFAULT_EPOCH)


def test_step_dt_bounds():
    st = _state(-10.0, -10.0)
    with pytest.raises(InvalidStepError):
        step(PARAMS, st, 0.0, False, False)
    with pytest.raises(InvalidStepError):
        step(PARAMS, st, 10.5, False, False)


def test_equilibrium_is_fixed_point():
    st = _state(-10.0, -10.0)  # both nodes at the sunlit sink, no power
    out = step(PARAMS, st, 10.0, False, False)
    assert out.t_nano_c == st.t_nano_c
    assert out.t_frame_c == st.t_frame_c
    assert (out.time - st.time).total_seconds() == 10.0


def test_converges_to_closed_form_steady_state():
    target = steady_state_nano(PARAMS, PARAMS.p_active_w, PARAMS.sink_sunlit_c)
    assert target == pytest.approx(-10.0 + 5.0 * (1 / 0.2 + 1 / 0.3), abs=1e-12)
    # 20x the slowest time constant
    tau = max(PARAMS.c_nano / PARAMS.g_nano_frame, PARAMS.c_frame / PARAMS.g_frame_sink)
    tn, tf = -10.0, -10.0
    steps = int(20 * tau / 10.0)
    for _ in range(steps):
        tn, tf = thermal.step_values(PARAMS, tn, tf, 10.0, True, False)
    assert tn == pytest.approx(target, abs=0.1)


def test_doubling_capacities_halves_initial_rate():
    heavy = ThermalParams(c_nano=200.0, c_frame=2000.0, g_nano_frame=0.3,
                          g_frame_sink=0.2, sink_sunlit_c=-10.0, sink_eclipse_c=-30.0)
    st = _state(5.0, -5.0)
    a = step(PARAMS, st, 1.0, True, False)
    b = step(heavy, st, 1.0, True, False)
    assert (b.t_nano_c - 5.0) == pytest.approx((a.t_nano_c - 5.0) / 2, rel=1e-12)
    assert (b.t_frame_c + 5.0) == pytest.approx((a.t_frame_c + 5.0) / 2, rel=1e-12)


def test_passive_decay_toward_sink_is_monotone():
    tn, tf = 40.0, 20.0
    prev = abs(tn - PARAMS.sink_sunlit_c)
    for _ in range(5000):
        tn, tf = thermal.step_values(PARAMS, tn, tf, 10.0, False, False)
        cur = abs(tn - PARAMS.sink_sunlit_c)
        assert cur <= prev + 1e-12
        prev = cur


def test_half_step_consistency():
    st = _state(12.0, -8.0)
    full = step(PARAMS, st, 1.0, True, True)
    halves = step(PARAMS, step(PARAMS, st, 0.5, True, True), 0.5, True, True)
    assert halves.t_nano_c == pytest.approx(full.t_nano_c, abs=0.01)
    assert halves.t_frame_c == pytest.approx(full.t_frame_c, abs=0.01)


def test_gate_examples():
    lim = ThermalLimits()
    assert gate(lim, _state(-30.0, -30.0), True) == "deny_cold"
    assert gate(lim, _state(-20.0, -20.0), True) == "allow"
    assert gate(lim, _state(95.0, 60.0), True) == "deny_hot"
    assert gate(lim, _state(-30.0, -30.0), False) == "allow"
    assert gate(lim, _state(95.0, 60.0), False) == "deny_hot"


def _orbit_extrema(t_s, series, period, orbits):
    out = []
    for k in orbits:
        m = (t_s >= k * period) & (t_s < (k + 1) * period)
        seg = series[m]
        ts = t_s[m]
        out.append((seg.max(), seg.min(), ts[np.argmax(seg)]))
    return out


def test_calibrated_idle_envelope():
    p = calibrated_defaults()
    t_s, nano, _, _, _ = simulate_orbit_profile(p, n_orbits=12, powered=False)
    period = orbitsim.orbital_period(orbitsim.OrbitConfig())
    steady = nano[t_s >= 6 * period]
    assert steady.min() >= -21.0
    assert steady.max() <= -14.0
    assert steady.max() - steady.min() >= 1.0  # visibly oscillating


def test_calibrated_active_max_and_gap():
    p = calibrated_defaults()
    period = orbitsim.orbital_period(orbitsim.OrbitConfig())
    t_s, idle, _, _, _ = simulate_orbit_profile(p, n_orbits=12, powered=False)
    _, act, _, _, _ = simulate_orbit_profile(p, n_orbits=12, powered=True)
    steady = t_s >= 6 * period
    act_hi = act[steady].max()
    gap = act_hi - idle[steady].max()
    assert 22.0 <= act_hi <= 29.0
    assert gap == pytest.approx(43.0, abs=4.0)


def test_calibrated_orbits_are_periodic():
    p = calibrated_defaults()
    period = orbitsim.orbital_period(orbitsim.OrbitConfig())
    for powered in (False, True):
        t_s, nano, _, _, _ = simulate_orbit_profile(p, n_orbits=12, powered=powered)
        ex = _orbit_extrema(t_s, nano, period, range(5, 12))
        for (hi_a, lo_a, _), (hi_b, lo_b, _) in zip(ex, ex[1:]):
            assert abs(hi_a - hi_b) <= 0.5
            assert abs(lo_a - lo_b) <= 0.5


def test_frame_peak_lags_nano_peak_each_powered_orbit():
    p = calibrated_defaults()
    period = orbitsim.orbital_period(orbitsim.OrbitConfig())
    t_s, nano, frame, _, _ = simulate_orbit_profile(p, n_orbits=12, powered=True)
    nano_ex = _orbit_extrema(t_s, nano, period, range(5, 12))
    frame_ex = _orbit_extrema(t_s, frame, period, range(5, 12))
    for (_, _, t_nano_peak), (_, _, t_frame_peak) in zip(nano_ex, frame_ex):
        assert t_frame_peak > t_nano_peak


def test_calibrated_active_never_trips_hot_gate():
    p = calibrated_defaults()
    lim = ThermalLimits()
    _, nano, _, _, _ = simulate_orbit_profile(p, n_orbits=12, powered=True)
    assert nano.max() <= lim.op_max_c - thermal.HOT_GUARD_C
    assert nano.min() > -100.0 and nano.max() < 150.0
