"""Discontinuous potential-energy shaping with damping injection.

In ``w`` coordinates the feedback replaces the open-loop potential with
``V_d = w^T L w / 2`` and raises the damping to

    D_d = D_w + Dhat + (k / w1^2) Q_w^T e1 e1^T Q_w

so that the closed loop is again port-Hamiltonian with energy
``H_d = p^T M_w^{-1} p / 2 + V_d``.  The singular term stops ``w1`` from
reaching zero in finite time.
"""

from dataclasses import dataclass, replace

import numpy as np

from .errors import ChartGuard, IllConditioned, SingularInput
from .linalg import is_spd, solve

DET_GUARD = 1e-12


@dataclass(frozen=True, eq=False)
class ControllerParams:
    """Gains of the control law.

    ``L`` may be given as a vector of diagonal entries or a diagonal matrix;
    it is stored as a matrix.
    """

    L: np.ndarray
    k: float
    Dhat: np.ndarray
    eps_w1: float = 1e-9

    def __post_init__(self):
        L = np.asarray(self.L, dtype=float)
        if L.ndim == 1:
            L = np.diag(L)
        if L.ndim != 2 or L.shape[0] != L.shape[1] or np.any(L != np.diag(np.diag(L))):
            raise ValueError("L must be a diagonal matrix")
        if np.any(np.diag(L) <= 0):
            raise ValueError("L: all diagonal entries must be positive")
        if not self.k > 0:
            raise ValueError(f"k must be positive, got {self.k}")
        Dhat = np.asarray(self.Dhat, dtype=float)
        if Dhat.shape != (2, 2) or not is_spd(Dhat):
            raise ValueError("Dhat must be a symmetric positive definite 2x2 matrix")
        if not self.eps_w1 > 0:
            raise ValueError(f"eps_w1 must be positive, got {self.eps_w1}")
        object.__setattr__(self, "L", L)
        object.__setattr__(self, "Dhat", Dhat)
        object.__setattr__(self, "k", float(self.k))
        object.__setattr__(self, "eps_w1", float(self.eps_w1))


@dataclass(frozen=True)
class ShapedEnergy:
    H_d: float
    V_d: float
    kinetic: float
    dissipation_rate: float


def _guard(x1, params):
    if not abs(x1) > params.eps_w1:
        raise ChartGuard(f"|w1| = {abs(x1):.3e} is within the guard {params.eps_w1:.1e}")


def _solve_input(G, rhs):
    if G.shape == (2, 2) and abs(np.linalg.det(G)) < DET_GUARD:
        raise SingularInput(f"det G = {np.linalg.det(G):.3e}")
    try:
        return solve(G, rhs)
    except IllConditioned as exc:
        raise SingularInput(str(exc)) from exc


def injected_damping(Q, x1, params):
    """``Dhat + (k / x1^2) Q^T e1 e1^T Q``."""
    row = Q[0]
    return params.Dhat + (params.k / x1**2) * np.outer(row, row)


def closed_loop_damping(sys_w, w, p, params):
    return sys_w.D(w, p) + injected_damping(sys_w.Q(w), w[0], params)


def control_w(sys_w, w, p, params):
    """Control law evaluated in ``w`` coordinates."""
    w = np.asarray(w, dtype=float)
    p = np.asarray(p, dtype=float)
    _guard(w[0], params)
    Q = sys_w.Q(w)
    v = sys_w.velocity(w, p)
    rhs = Q.T @ (params.L @ w - sys_w.gradV(w)) + injected_damping(Q, w[0], params) @ v
    return -_solve_input(sys_w.G(w), rhs)


def control_z(sys_z, z, p, params):
    """The same law evaluated from chained coordinates ``z``.

    ``sys_z`` is a :class:`~nonholo.chained.ChainedSystem`.  The shaped
    potential gradient is pulled back with ``(df_w/dz)^T``; since ``w1 = z1``
    the singular damping term is unchanged.
    """
    z = np.asarray(z, dtype=float)
    p = np.asarray(p, dtype=float)
    _guard(z[0], params)
    sz = sys_z.system
    c = sys_z.wchart
    w = c.forward(z)
    grad_Vd = c.solve_jacobian_t(w, params.L @ w)
    Q = sz.Q(z)
    v = sz.velocity(z, p)
    rhs = Q.T @ (grad_Vd - sz.gradV(z)) + injected_damping(Q, z[0], params) @ v
    return -_solve_input(sz.G(z), rhs)


def shaped_hamiltonian(sys_w, w, p, params):
    w = np.asarray(w, dtype=float)
    p = np.asarray(p, dtype=float)
    _guard(w[0], params)
    v = sys_w.velocity(w, p)
    kinetic = 0.5 * p @ v
    V_d = 0.5 * w @ params.L @ w
    rate = -v @ closed_loop_damping(sys_w, w, p, params) @ v
    return ShapedEnergy(H_d=kinetic + V_d, V_d=V_d, kinetic=kinetic, dissipation_rate=rate)


def closed_loop_w(sys_w, w, p, params):
    """Right-hand side of the closed loop written in port-Hamiltonian form.

    ``pdot = -Q^T dH_d/dw + (C - D_d) v``; the kinetic part of ``dH_d/dw``
    is the open-loop one, since only the potential is shaped.
    """
    v = sys_w.velocity(w, p)
    Q = sys_w.Q(w)
    wdot = Q @ v
    pdot = -Q.T @ (sys_w.kinetic_gradient(w, p) + params.L @ w) + (sys_w.C(w, p) - closed_loop_damping(sys_w, w, p, params)) @ v
    return wdot, pdot


def control_from_velocity(sys_w, w, wdot, params):
    """Control law in terms of ``(w, wdot)``, with no reference to ``M_w``."""
    w = np.asarray(w, dtype=float)
    _guard(w[0], params)
    Q = sys_w.Q(w)
    v, *_ = np.linalg.lstsq(Q, np.asarray(wdot, dtype=float), rcond=None)
    rhs = Q.T @ (params.L @ w - sys_w.gradV(w)) + injected_damping(Q, w[0], params) @ v
    return -_solve_input(sys_w.G(w), rhs)


def mass_matrix_independence_check(sys_w, alternate_M, state, params, tol=1e-12):
    """Check that ``u`` depends on ``(w, wdot)`` only, not on the mass matrix.

    ``state = (w, p)`` is interpreted with ``sys_w.M``; the momentum is then
    rescaled so that the same ``wdot`` results under ``alternate_M`` and the
    law is re-evaluated on the modified model.
    """
    w, p = (np.asarray(x, dtype=float) for x in state)
    u = control_w(sys_w, w, p, params)
    v = sys_w.velocity(w, p)
    alt = replace(sys_w, M=alternate_M)
    u_alt = control_w(alt, w, alternate_M(w) @ v, params)
    return bool(np.max(np.abs(u - u_alt)) <= tol * max(1.0, np.max(np.abs(u))))
