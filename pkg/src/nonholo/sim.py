"""Fixed-step RK4 simulation with closed-loop diagnostics."""

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from .control import control_z, injected_damping
from .core import constrained_dynamics, project_momentum
from .errors import ChartError, InvalidStart, NonholoError, NumericalFailure
from .linalg import solve


class Status(str, Enum):
    COMPLETED = "Completed"
    CONVERGED = "Converged"
    CHART_BREAKDOWN = "ChartBreakdown"
    NUMERICAL_FAILURE = "NumericalFailure"

    def __str__(self):
        return self.value


@dataclass
class SimConfig:
    initial_q: np.ndarray
    initial_p: Optional[np.ndarray] = None
    dt: float = 1e-3
    duration: float = 60.0
    log_stride: int = 1
    converge_tol: float = 1e-3

    def __post_init__(self):
        self.initial_q = np.asarray(self.initial_q, dtype=float)
        if self.initial_p is not None:
            self.initial_p = np.asarray(self.initial_p, dtype=float)
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not self.duration >= self.dt:
            raise ValueError(f"duration must be at least dt, got {self.duration}")
        if int(self.log_stride) != self.log_stride or self.log_stride < 1:
            raise ValueError(f"log_stride must be a positive integer, got {self.log_stride}")
        if not self.converge_tol > 0:
            raise ValueError("converge_tol must be positive")
        self.log_stride = int(self.log_stride)

    @property
    def steps(self):
        return int(round(self.duration / self.dt))


@dataclass
class TrajectoryRecord:
    """Logged samples of one run.

    ``x`` holds the raw integrator state; ``columns`` holds derived signals
    keyed by name (``q``, ``z``, ``w``, ``p``, ``u``, ``H_d``, ...), one row
    per entry of ``t``.
    """

    t: np.ndarray
    x: np.ndarray
    status: Status
    columns: dict = field(default_factory=dict)
    message: str = ""

    def __getitem__(self, name):
        return self.columns[name]

    def __contains__(self, name):
        return name in self.columns

    def __len__(self):
        return len(self.t)


def _rk4_step(f, x, dt):
    k1 = f(x)
    k2 = f(x + 0.5 * dt * k1)
    k3 = f(x + 0.5 * dt * k2)
    k4 = f(x + dt * k3)
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def integrate_rk4(dynamics, x0, cfg, observe=None, halt=None, on_chart_error=None, project=None):
    """Classic fourth-order Runge-Kutta on an autonomous system.

    ``observe(x)`` returns a dict of derived signals logged with each sample;
    ``halt(x)`` may return a Status to stop early; ``project(x)`` is applied
    after every step.  Chart errors end the run with the Status chosen by
    ``on_chart_error(x)`` (ChartBreakdown by default); non-finite values end
    it with NumericalFailure.  The last state reached is always logged.
    """
    x = np.array(x0, dtype=float)
    ts, xs, obs = [], [], []
    status = Status.COMPLETED
    message = ""

    def log(t, x):
        ts.append(t)
        xs.append(x.copy())
        if observe is not None:
            obs.append(observe(x))

    def fail_status(exc, x):
        if isinstance(exc, ChartError):
            return on_chart_error(x) if on_chart_error is not None else Status.CHART_BREAKDOWN
        return Status.NUMERICAL_FAILURE

    try:
        log(0.0, x)
    except (NonholoError, ArithmeticError, np.linalg.LinAlgError) as exc:
        raise NumericalFailure(f"cannot evaluate the initial state: {exc}") from exc

    logged_last = True
    for i in range(cfg.steps):
        t = (i + 1) * cfg.dt
        try:
            x_new = _rk4_step(dynamics, x, cfg.dt)
            if project is not None:
                x_new = project(x_new)
            if not np.all(np.isfinite(x_new)):
                raise NumericalFailure(f"non-finite state at t={t:.6g}")
        except (NonholoError, ArithmeticError, np.linalg.LinAlgError) as exc:
            status = fail_status(exc, x)
            message = f"t={t:.6g}: {exc}"
            break
        x = x_new
        logged_last = False
        verdict = halt(x) if halt is not None else None
        if (i + 1) % cfg.log_stride == 0 or verdict is not None:
            try:
                log(t, x)
                logged_last = True
            except (NonholoError, ArithmeticError, np.linalg.LinAlgError) as exc:
                status = fail_status(exc, x)
                message = f"t={t:.6g}: {exc}"
                break
        if verdict is not None:
            status = verdict
            break
    else:
        if not logged_last:
            log(cfg.steps * cfg.dt, x)

    columns = {}
    if obs:
        for key in obs[0]:
            columns[key] = np.array([o[key] for o in obs])
    return TrajectoryRecord(np.array(ts), np.array(xs), status, columns, message)


def closed_loop_rhs(cs, params):
    """State derivative of ``(z, p)`` under :func:`~nonholo.control.control_z`."""
    sz = cs.system
    n = sz.n

    def f(x):
        z, p = x[:n], x[n:]
        u = control_z(cs, z, p, params)
        zdot, pdot = sz.open_loop_dynamics(z, p, u)
        return np.concatenate([zdot, pdot])

    return f


def closed_loop_observer(cs, params):
    sz = cs.system
    n = sz.n
    chart = cs.wchart
    base = cs.base

    def observe(x):
        z, p = x[:n], x[n:]
        q = cs.fz_inv(z)
        w = chart.forward(z)
        u = control_z(cs, z, p, params)
        v = sz.velocity(z, p)
        Qz = sz.Q(z)
        D_d = sz.D(z, p) + injected_damping(Qz, z[0], params)
        row = {
            "q": q, "z": z.copy(), "w": w, "p": p.copy(), "u": u,
            "H_d": 0.5 * p @ v + 0.5 * w @ params.L @ w,
            "Hdot_d": -v @ D_d @ v,
        }
        if base is not None and base.parent is not None:
            qdot = solve(cs.J_fz(q), Qz @ v)
            row["c_res"] = np.abs(base.parent.Gc(q).T @ qdot).max()
        else:
            row["c_res"] = np.nan
        return row

    return observe


def run_closed_loop(cs, params, cfg, fast=True):
    """Simulate the chained system under the discontinuous feedback.

    Stops with Converged once ``|z|_inf`` and ``|p|_inf`` drop below
    ``cfg.converge_tol``.  Tripping the chart guard also counts as
    Converged when ``z`` is already that small, and as ChartBreakdown
    otherwise.  ``fast`` selects the system's scalar evaluator when it has
    one.
    """
    n = cs.n
    z0 = cs.fz(cfg.initial_q)
    if not abs(z0[0]) > params.eps_w1:
        raise InvalidStart(f"initial z1 = {z0[0]:.3e}; the w chart is undefined there")
    p0 = np.zeros(cs.system.m) if cfg.initial_p is None else cfg.initial_p
    tol = cfg.converge_tol

    def halt(x):
        if np.abs(x[:n]).max() < tol and np.abs(x[n:]).max() < tol:
            return Status.CONVERGED
        return None

    def on_chart_error(x):
        return Status.CONVERGED if np.abs(x[:n]).max() < tol else Status.CHART_BREAKDOWN

    if fast and cs.fast_loop is not None:
        loop = cs.fast_loop(params)
        rhs, observe = loop.rhs, loop.observe
    else:
        rhs, observe = closed_loop_rhs(cs, params), closed_loop_observer(cs, params)
    return integrate_rk4(
        rhs, np.concatenate([z0, p0]), cfg,
        observe=observe, halt=halt, on_chart_error=on_chart_error,
    )


def run_open_loop(sys, cfg, u=None):
    """Simulate a reduced model with input ``u(q, p)`` (zero when omitted)."""
    n = sys.n
    p0 = np.zeros(sys.m) if cfg.initial_p is None else cfg.initial_p

    def f(x):
        q, p = x[:n], x[n:]
        qdot, pdot = sys.open_loop_dynamics(q, p, None if u is None else u(q, p))
        return np.concatenate([qdot, pdot])

    def observe(x):
        q, p = x[:n], x[n:]
        row = {"q": q.copy(), "p": p.copy(), "H": sys.hamiltonian(q, p)}
        if sys.parent is not None:
            row["c_res"] = np.abs(sys.constraint_residual(q, p)).max()
        return row

    return integrate_rk4(f, np.concatenate([cfg.initial_q, p0]), cfg, observe=observe)


def run_constrained(sys, p0, cfg, u=None):
    """Reference simulation of the canonical constrained model.

    The multiplier is solved at every stage and the momentum is projected
    back onto the constraint set after every step.
    """
    n = sys.n

    def f(x):
        q, p0_ = x[:n], x[n:]
        qdot, p0dot = constrained_dynamics(sys, q, p0_, None if u is None else u(q, p0_))
        return np.concatenate([qdot, p0dot])

    def project(x):
        q = x[:n]
        return np.concatenate([q, project_momentum(sys, q, x[n:])])

    def observe(x):
        q, p0_ = x[:n], x[n:]
        return {"q": q.copy(), "p0": p0_.copy(), "H": sys.hamiltonian(q, p0_)}

    x0 = np.concatenate([cfg.initial_q, project_momentum(sys, cfg.initial_q, np.asarray(p0, float))])
    return integrate_rk4(f, x0, cfg, observe=observe, project=project)


@dataclass(frozen=True)
class Diagnostics:
    status: Status
    samples: int
    t_final: float
    max_energy_increase: float
    min_abs_w1: float
    w1_sign_changed: bool
    final_q_inf: float
    final_p_norm: float
    max_constraint_residual: float
    max_u_norm: float

    def text(self):
        lines = [
            f"status: {self.status}",
            f"samples: {self.samples}",
            f"t_final: {self.t_final:.6g}",
            f"max_energy_increase: {self.max_energy_increase:.6e}",
            f"min_abs_w1: {self.min_abs_w1:.6e}",
            f"w1_sign_changed: {self.w1_sign_changed}",
            f"final_q_inf: {self.final_q_inf:.6e}",
            f"final_p_norm: {self.final_p_norm:.6e}",
            f"max_constraint_residual: {self.max_constraint_residual:.6e}",
            f"max_u_norm: {self.max_u_norm:.6e}",
        ]
        return "\n".join(lines) + "\n"


def diagnostics(rec):
    """Summarise a run.

    Uses ``H_d`` as the energy column when present and ``H`` otherwise.
    Signals that a record does not carry are reported as NaN.
    """
    if len(rec) == 0:
        raise ValueError("empty trajectory record")
    nan = float("nan")

    energy = rec.columns.get("H_d", rec.columns.get("H"))
    if energy is not None and len(energy) > 1:
        max_inc = float(max(0.0, np.max(np.diff(energy))))
    else:
        max_inc = 0.0 if energy is not None else nan

    w = rec.columns.get("w")
    if w is not None:
        w1 = w[:, 0]
        min_w1 = float(np.min(np.abs(w1)))
        signs = np.sign(w1[w1 != 0])
        changed = bool(signs.size and np.any(signs != signs[0]))
    else:
        min_w1, changed = nan, False

    q = rec.columns.get("q", rec.x)
    p = rec.columns.get("p")
    c_res = rec.columns.get("c_res")
    u = rec.columns.get("u")
    return Diagnostics(
        status=rec.status,
        samples=len(rec),
        t_final=float(rec.t[-1]),
        max_energy_increase=max_inc,
        min_abs_w1=min_w1,
        w1_sign_changed=changed,
        final_q_inf=float(np.abs(q[-1]).max()),
        final_p_norm=float(np.linalg.norm(p[-1])) if p is not None else nan,
        max_constraint_residual=float(np.nanmax(c_res)) if c_res is not None else nan,
        max_u_norm=float(np.linalg.norm(u, axis=1).max()) if u is not None else nan,
    )
