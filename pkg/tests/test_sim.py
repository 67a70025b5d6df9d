import numpy as np
import pytest

from nonholo.car import CarParams, build_car, car_chained, car_reduced
from nonholo.control import ControllerParams
from nonholo.core import ReducedPHSystem
from nonholo.errors import InvalidStart, NumericalFailure
from nonholo.sim import (
    SimConfig,
    Status,
    diagnostics,
    integrate_rk4,
    run_closed_loop,
    run_constrained,
    run_open_loop,
)

CAR = CarParams()
GAINS = ControllerParams(L=[1.0, 10.0, 0.01, 0.0001], k=0.01, Dhat=np.eye(2))


def oscillator(damping=0.0):
    one = lambda q: np.eye(1)  # noqa: E731
    return ReducedPHSystem(
        n=1, m=1, Q=one, M=one, D=lambda q, p: damping * np.eye(1),
        C=lambda q, p: np.zeros((1, 1)), G=one, V=lambda q: 0.5 * q @ q, gradV=lambda q: q,
        gradT=lambda q, p: np.zeros(1),
    )


def test_config_validation():
    with pytest.raises(ValueError, match="dt"):
        SimConfig([1.0], dt=0.0)
    with pytest.raises(ValueError, match="duration"):
        SimConfig([1.0], dt=0.1, duration=0.05)
    with pytest.raises(ValueError, match="log_stride"):
        SimConfig([1.0], log_stride=0)
    with pytest.raises(ValueError, match="log_stride"):
        SimConfig([1.0], log_stride=1.5)
    assert SimConfig([1.0], dt=1e-3, duration=2.0).steps == 2000


def test_harmonic_oscillator_energy():
    rec = run_open_loop(oscillator(), SimConfig([1.0], [0.0], dt=1e-3, duration=10.0))
    assert rec.status == Status.COMPLETED
    assert np.abs(rec["H"] - 0.5).max() < 1e-9
    assert rec["q"][-1, 0] == pytest.approx(np.cos(10.0), abs=1e-9)


def test_time_axis():
    rec = run_open_loop(oscillator(0.5), SimConfig([1.0], [0.0], dt=1e-2, duration=3.0))
    assert np.all(np.diff(rec.t) > 0)
    assert rec.t[0] == 0.0 and rec.t[-1] == pytest.approx(3.0)
    assert len(rec) == 301


def test_log_stride_keeps_final_sample():
    rec = run_open_loop(oscillator(), SimConfig([1.0], [0.0], dt=1e-2, duration=1.05, log_stride=10))
    assert len(rec) == 12
    assert rec.t[-1] == pytest.approx(1.05)
    assert np.allclose(np.diff(rec.t[:-1]), 0.1)


def test_zero_dynamics_stays_put():
    red = car_reduced(CAR)
    q0 = np.array([0.4, -0.3, 0.2, 0.1])
    rec = run_open_loop(red, SimConfig(q0, [0.0, 0.0], dt=1e-2, duration=1.0))
    assert np.all(rec["q"] == q0) and np.all(rec["p"] == 0)


def test_blow_up_is_numerical_failure():
    cfg = SimConfig([1.0], dt=1e-2, duration=2.0)
    with np.errstate(over="ignore", invalid="ignore"):
        rec = integrate_rk4(lambda x: x * x, [1.0], cfg)
    assert rec.status == Status.NUMERICAL_FAILURE
    assert 0.9 < rec.t[-1] < 1.5
    assert np.all(np.isfinite(rec.x))
    assert rec.message


def test_unevaluable_start_raises():
    def f(x):
        raise ArithmeticError("nope")

    with pytest.raises(NumericalFailure):
        integrate_rk4(f, [1.0], SimConfig([1.0], dt=0.1, duration=1.0), observe=lambda x: {"y": f(x)})


def test_invalid_start():
    cs = car_chained(CAR)
    with pytest.raises(InvalidStart):
        run_closed_loop(cs, GAINS, SimConfig([0.0, 1.0, 0.0, 0.0], duration=1.0))


def test_chart_exit_is_reported():
    # without damping the steering angle runs out to pi/2, where the reduced chart ends
    red = car_reduced(CAR.scaled(damping=0.0))
    rec = run_open_loop(red, SimConfig([0.5, 0.5, 0.2, 0.3], [1.0, 1.0], dt=1e-3, duration=10.0))
    assert rec.status == Status.CHART_BREAKDOWN
    assert rec.t[-1] < 10.0
    assert abs(rec["q"][-1, 3]) > 1.3


def test_closed_loop_record():
    cs = car_chained(CAR)
    rec = run_closed_loop(cs, GAINS, SimConfig([4.0, 2.0, 0.0, 0.0], dt=1e-3, duration=2.0, log_stride=100))
    assert rec.status == Status.COMPLETED
    for key in ("q", "z", "w", "p", "u", "H_d", "Hdot_d", "c_res"):
        assert key in rec and len(rec[key]) == len(rec)
    assert np.array_equal(rec["q"][0], [4.0, 2.0, 0.0, 0.0])
    assert np.all(np.diff(rec["H_d"]) <= 1e-9)
    slow = run_closed_loop(cs, GAINS, SimConfig([4.0, 2.0, 0.0, 0.0], dt=1e-3, duration=2.0, log_stride=100),
                           fast=False)
    assert np.abs(slow.x - rec.x).max() < 1e-10


def test_convergence_stops_run():
    cs = car_chained(CAR)
    cfg = SimConfig([4.0, 2.0, 0.0, 0.0], dt=1e-3, duration=5.0, converge_tol=10.0)
    rec = run_closed_loop(cs, GAINS, cfg)
    assert rec.status == Status.CONVERGED and len(rec) == 2


def test_diagnostics_open_loop():
    red = car_reduced(CAR)
    rec = run_open_loop(red, SimConfig([1.0, 0.5, 0.3, 0.2], [1.0, -1.0], dt=1e-3, duration=1.0))
    d = diagnostics(rec)
    assert d.status == Status.COMPLETED and d.samples == 1001
    assert d.max_energy_increase <= 1e-12
    assert d.max_constraint_residual < 1e-12
    assert np.isnan(d.min_abs_w1) and not d.w1_sign_changed
    assert np.isnan(d.max_u_norm)
    assert "status: Completed" in d.text()


def test_diagnostics_without_motion():
    red = car_reduced(CAR)
    rec = run_open_loop(red, SimConfig(np.zeros(4), np.zeros(2), dt=1e-2, duration=0.1))
    d = diagnostics(rec)
    assert d.max_energy_increase == 0.0 and d.final_q_inf == 0.0 and d.final_p_norm == 0.0


def test_step_size_insensitivity():
    cs = car_chained(CAR)
    coarse = run_closed_loop(cs, GAINS, SimConfig([4.0, 2.0, 0.0, 0.0], dt=1e-3, duration=60.0, log_stride=1000))
    fine = run_closed_loop(cs, GAINS, SimConfig([4.0, 2.0, 0.0, 0.0], dt=1e-4, duration=60.0, log_stride=10000))
    assert coarse.status == fine.status == Status.COMPLETED
    assert np.abs(coarse["q"][-1] - fine["q"][-1]).max() < 1e-3


def test_constrained_reference_conserves_energy():
    # the canonical model has no chart, so it runs through steering angles the reduced one cannot reach
    full = build_car(CAR.scaled(damping=0.0))
    q0 = np.array([0.5, 0.5, 0.2, 0.3])
    p0 = full.M0(q0) @ np.array([1.0, 0.0, 0.0, 1.0])
    rec = run_constrained(full, p0, SimConfig(q0, dt=1e-3, duration=10.0, log_stride=10))
    assert rec.status == Status.COMPLETED
    H = rec["H"]
    assert np.abs(H - H[0]).max() / H[0] < 1e-6
    assert np.abs(rec["q"][:, 3]).max() > np.pi / 2
