import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rfseek.seeker import (
    MINUS,
    PLUS,
    STAGE1,
    InsufficientDataError,
    ProtocolError,
    Seeker,
    SeekerConfig,
    SeekerState,
    centered_smooth,
    error_step,
    lyapunov_decrement,
    next_heading,
    reject_outlier,
    smooth,
    stage1_direction,
    stage2_update,
)
from rfseek.world import ConfigError, Scenario, UavState, advance, bearing_to_source, wrap_angle

SCN = Scenario()
F_D = SCN.f_d_max
THRESHOLD = 4 * math.pi * 10 * 2e9 / 2.998e8
DELTA = math.radians(10)


def test_outlier_threshold_from_constants():
    cfg = SeekerConfig(f_d_max=F_D)
    assert cfg.outlier_threshold == pytest.approx(THRESHOLD)
    assert THRESHOLD == pytest.approx(838.3, abs=0.1)


@pytest.mark.parametrize("kwargs", [dict(delta=0.0), dict(delta=math.radians(95)), dict(M=0),
                                    dict(smoothing_len=0), dict(R_c=-1.0)])
def test_config_invariants(kwargs):
    with pytest.raises(ConfigError):
        SeekerConfig(**kwargs)


def test_reject_outlier_examples():
    assert reject_outlier(5.0, 5.0, THRESHOLD) == 5.0
    assert reject_outlier(500.0, 100.0, THRESHOLD) == 500.0
    assert reject_outlier(1000.0, 100.0, THRESHOLD) == 100.0


@given(st.floats(-1e5, 1e5), st.floats(-1e5, 1e5), st.floats(1e-3, 1e4))
def test_reject_outlier_stays_within_threshold(new, prev, thr):
    out = reject_outlier(new, prev, thr)
    assert out == prev or abs(out - prev) < thr


def test_smooth_examples():
    assert smooth([4.2], 15) == 4.2
    assert smooth([3.0] * 40, 15) == 3.0
    assert smooth(list(range(1, 16)), 15) == 8.0
    assert smooth(list(range(100)), 15) == pytest.approx(np.mean(range(85, 100)))
    with pytest.raises(InsufficientDataError):
        smooth([], 15)


def test_centered_smooth_has_no_lag_on_a_symmetric_peak():
    x = -np.abs(np.arange(-50, 51)).astype(float)
    s = centered_smooth(x, 15)
    assert int(np.argmax(s)) == 50
    assert s[50] == pytest.approx(np.mean(x[43:58]))


def test_stage1_direction_argmax_contract():
    meas = [(1.0, 0.1), (3.0, 0.2), (2.0, 0.3), (3.0, 0.4)]
    assert stage1_direction(meas) == 0.2  # ties go to the first index
    shifted = [(w + 1e4, p) for w, p in meas]
    assert stage1_direction(shifted) == 0.2
    with pytest.raises(InsufficientDataError):
        stage1_direction([])


@given(st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=60), st.integers(-2**20, 2**20))
def test_stage1_direction_ignores_common_offset(omegas, offset):
    phis = np.linspace(-3, 3, len(omegas))
    base = stage1_direction(list(zip(omegas, phis)))
    # integer offsets added to values on a 1/64 grid stay exact
    q = [round(w * 64) / 64 for w in omegas]
    assert stage1_direction(list(zip(q, phis))) == stage1_direction(list(zip([w + offset for w in q], phis)))
    assert base in phis


def test_stage1_noiseless_circle_points_at_source():
    cfg = SeekerConfig(f_d_max=F_D)
    step = SCN.v * SCN.T_slot
    seeker = Seeker(cfg, step, circle_heading0=0.8)
    state = UavState(-3000.0, 4000.0, 0.0, SCN.v)
    f_o = 412.0
    positions = []
    while seeker.phase == STAGE1:
        heading = seeker.heading
        state = advance(state, heading, SCN.T_slot)
        positions.append(state.position)
        omega = 2 * np.pi * (F_D * math.cos(bearing_to_source(state.position) - heading) + f_o)
        seeker.observe(omega, heading)
    assert len(positions) == round(2 * math.pi / (step / cfg.R_c))
    theta0 = seeker.theta_k
    i = int(np.argmin([abs(wrap_angle(theta0 - (0.8 + k * step / cfg.R_c))) for k in range(len(positions))]))
    truth = bearing_to_source(positions[i])
    assert abs(wrap_angle(theta0 - truth)) <= step / cfg.R_c


def test_stage2_update_examples():
    legs = [1.0, 2.0, 3.0]
    assert stage2_update(0.3, legs, legs, DELTA, F_D) == 0.3
    c = 12345.0
    p, m = [10.0, 11.0], [9.0, 8.5]
    assert stage2_update(0.3, [x + c for x in p], [x + c for x in m], DELTA, F_D) == \
        stage2_update(0.3, p, m, DELTA, F_D)
    with pytest.raises(ProtocolError):
        stage2_update(0.0, [1.0, 2.0], [1.0], DELTA, F_D)


def test_stage2_update_noiseless_legs():
    # source bearing 0, current direction 0.5: legs fly 0.5 +- delta
    err = 0.5
    w = 2 * np.pi * F_D
    plus = [w * math.cos(err + DELTA)] * 20
    minus = [w * math.cos(err - DELTA)] * 20
    new = stage2_update(err, plus, minus, DELTA, F_D)
    assert new - err == pytest.approx(-2 * math.sin(0.5) * math.sin(DELTA) * DELTA, abs=1e-12)
    assert new - err == pytest.approx(-0.02906, abs=1e-5)
    assert new == pytest.approx(0.47094, abs=1e-5)


def test_stage2_update_agrees_with_error_recursion():
    rng = np.random.default_rng(0)
    for _ in range(100):
        err = rng.uniform(-3.0, 3.0)
        delta = rng.uniform(0.01, 1.0)
        truth = rng.uniform(-np.pi, np.pi)
        theta = truth + err
        w = 2 * np.pi * F_D
        plus = [w * math.cos(theta + delta - truth)] * 5
        minus = [w * math.cos(theta - delta - truth)] * 5
        via_update = wrap_angle(stage2_update(theta, plus, minus, delta, F_D) - truth)
        assert via_update == pytest.approx(error_step(err, delta), abs=1e-9)


def test_error_step_examples():
    assert error_step(0.0, DELTA) == 0.0
    assert error_step(math.pi, DELTA) == pytest.approx(math.pi)
    assert error_step(0.5, 0.17453) == pytest.approx(0.47094, abs=1e-5)


@given(st.floats(-0.3, 0.3), st.floats(math.radians(1), math.radians(15)))
def test_error_step_small_angle_contraction(err, delta):
    # the 1e-3 slack covers the cubic term of sin only while delta*sin(delta) stays small
    assert abs(error_step(err, delta)) <= abs(err) * (1 - 2 * delta * math.sin(delta)) + 1e-3


def test_lyapunov_examples():
    assert lyapunov_decrement(0.0, DELTA) == 0.0
    alpha = DELTA * math.sin(DELTA)
    assert alpha == pytest.approx(0.030304, abs=1e-5)
    expected = -4 * alpha * math.sin(1) * (1 - alpha * math.sin(1))
    assert lyapunov_decrement(1.0, DELTA) == pytest.approx(expected, rel=1e-12)
    assert lyapunov_decrement(1.0, DELTA) == pytest.approx(-0.09939, abs=1e-4)


def test_lyapunov_decrement_equals_change_of_squared_error():
    for err in np.linspace(-3.1, 3.1, 63):
        nxt = err - 2 * math.sin(err) * math.sin(DELTA) * DELTA
        assert lyapunov_decrement(err, DELTA) == pytest.approx(nxt**2 - err**2, abs=1e-12)


def test_lyapunov_negative_on_reference_grid():
    errs = np.concatenate([[0.01], np.arange(0.1, 3.1 + 1e-9, 0.1)])
    deltas = np.radians(np.arange(1, 46))
    e, d = np.meshgrid(errs, deltas)
    assert np.all(lyapunov_decrement(e, d) < 0)
    assert np.all(lyapunov_decrement(-e, d) < 0)


def test_next_heading_protocol():
    cfg = SeekerConfig(f_d_max=F_D)
    state = SeekerState(theta_k=0.0, phase=PLUS)
    assert next_heading(state, cfg) == pytest.approx(DELTA)
    seeker = Seeker(cfg, 0.5, theta0=0.0)
    assert seeker.heading == pytest.approx(DELTA)
    for _ in range(cfg.M):
        seeker.observe(100.0, seeker.heading)
    assert seeker.phase == MINUS
    assert seeker.heading == pytest.approx(-DELTA)
    assert seeker.state.k == 0
    for _ in range(cfg.M):
        seeker.observe(100.0, seeker.heading)
    assert seeker.state.k == 1
    assert seeker.phase == PLUS


def test_exactly_one_update_per_two_legs():
    cfg = SeekerConfig(f_d_max=F_D, M=7)
    seeker = Seeker(cfg, 0.5, theta0=0.2)
    ks = []
    for i in range(5 * 2 * cfg.M):
        seeker.observe(float(i % 3), seeker.heading)
        ks.append(seeker.state.k)
        assert len(seeker.state.plus_leg) <= cfg.M and len(seeker.state.minus_leg) <= cfg.M
    assert ks[-1] == 5
    assert np.count_nonzero(np.diff(ks)) == 5


def test_seeker_gates_jumps():
    cfg = SeekerConfig(f_d_max=F_D)
    seeker = Seeker(cfg, 0.5, theta0=0.0)
    assert seeker.observe(1000.0, 0.0) == (1000.0, True)
    assert seeker.observe(1000.0 + 2 * THRESHOLD, 0.0) == (1000.0, False)
    assert seeker.observe(1100.0, 0.0) == (1100.0, True)


def test_planned_headings_cover_the_phase():
    cfg = SeekerConfig(f_d_max=F_D)
    seeker = Seeker(cfg, 0.5, circle_heading0=0.0)
    plan = seeker.planned_headings()
    assert len(plan) == 628
    assert plan[1] == pytest.approx(0.01)
    seeker.observe(0.0, plan[0])
    assert seeker.planned_headings() == plan[1:]
