"""Port-Hamiltonian models of mechanical systems with Pfaffian constraints.

A :class:`ConstrainedPHSystem` carries the canonical model, where the
constraint forces enter through Lagrange multipliers.  :func:`reduce` maps it
to a :class:`ReducedPHSystem` on the ``m = n - k`` dimensional momentum space
``p = Q^T p0`` in which the multipliers no longer appear.

Every matrix-valued field is a plain callable evaluated at a configuration
``q`` (and, for damping and Coriolis terms, a momentum).
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import IllConditioned, NotAnnihilator, NumericalFailure, SingularPairing
from .linalg import COND_LIMIT, cond1, solve

ANNIHILATOR_TOL = 1e-10


def _fd_steps(q, rel=1e-6):
    return rel * np.maximum(1.0, np.abs(q))


@dataclass(frozen=True)
class ConstrainedPHSystem:
    """Canonical model ``(q, p0)`` subject to ``Gc(q)^T qdot = 0``.

    ``D0`` takes ``(q, p0)``; all other maps take ``q`` only.
    """

    n: int
    k: int
    M0: Callable
    D0: Callable
    V: Callable
    gradV: Callable
    G0: Callable
    Gc: Callable

    @property
    def m(self):
        return self.n - self.k

    def hamiltonian(self, q, p0):
        return 0.5 * p0 @ solve(self.M0(q), p0) + self.V(q)

    def velocity(self, q, p0):
        return solve(self.M0(q), p0)


@dataclass(frozen=True)
class ReducedPHSystem:
    """Multiplier-free model on the reduced momentum space.

    ``parent`` is kept when the model was obtained from a constrained system,
    so that canonical momenta and constraint residuals can be recovered.
    ``gradT`` optionally gives ``dT/dq`` as a function of ``(q, p)``; without
    it the kinetic-energy gradient is taken by central differences.
    """

    n: int
    m: int
    Q: Callable
    M: Callable
    D: Callable
    C: Callable
    G: Callable
    V: Callable
    gradV: Callable
    parent: Optional[ConstrainedPHSystem] = field(default=None, compare=False)
    gradT: Optional[Callable] = field(default=None, compare=False)

    def velocity(self, q, p):
        """``dH/dp = M(q)^{-1} p``."""
        return solve(self.M(q), p)

    def kinetic(self, q, p):
        return 0.5 * p @ self.velocity(q, p)

    def hamiltonian(self, q, p):
        return self.kinetic(q, p) + self.V(q)

    def output(self, q, p):
        return self.G(q).T @ self.velocity(q, p)

    def kinetic_gradient(self, q, p):
        """``dT/dq`` at fixed ``p``."""
        q = np.asarray(q, dtype=float)
        if self.gradT is not None:
            return np.asarray(self.gradT(q, p), dtype=float)
        h = _fd_steps(q)
        g = np.empty(self.n)
        for i in range(self.n):
            e = np.zeros(self.n)
            e[i] = h[i]
            g[i] = (self.kinetic(q + e, p) - self.kinetic(q - e, p)) / (2.0 * h[i])
        return g

    def grad_hamiltonian(self, q, p):
        return self.kinetic_gradient(q, p) + self.gradV(q)

    def open_loop_dynamics(self, q, p, u=None):
        """Return ``(qdot, pdot)`` of the reduced model driven by ``u``."""
        v = self.velocity(q, p)
        Q = self.Q(q)
        qdot = Q @ v
        pdot = -Q.T @ self.grad_hamiltonian(q, p) + (self.C(q, p) - self.D(q, p)) @ v
        if u is not None:
            pdot = pdot + self.G(q) @ u
        return qdot, pdot

    def canonical_momentum(self, q, p):
        if self.parent is None:
            raise ValueError("canonical momentum needs the constrained parent model")
        return self.parent.M0(q) @ (self.Q(q) @ self.velocity(q, p))

    def constraint_residual(self, q, p):
        """``Gc(q)^T qdot`` for the velocity implied by ``p``."""
        if self.parent is None:
            raise ValueError("constraint residual needs the constrained parent model")
        return self.parent.Gc(q).T @ (self.Q(q) @ self.velocity(q, p))


def coriolis_matrix(M0, Q, q, p, steps=None):
    """Gyroscopic matrix of the reduced model by central differences.

    Differentiates ``v(q) = M0 Q (Q^T M0 Q)^{-1} p`` with respect to ``q`` and
    returns ``Q^T (J^T - J) Q`` with ``J = dv/dq``.
    """
    q = np.asarray(q, dtype=float)
    p = np.asarray(p, dtype=float)
    h = _fd_steps(q) if steps is None else np.broadcast_to(steps, q.shape)

    def v(x):
        Qx = Q(x)
        M0x = M0(x)
        return M0x @ (Qx @ solve(Qx.T @ M0x @ Qx, p))

    n = q.size
    J = np.empty((n, n))
    for j in range(n):
        e = np.zeros(n)
        e[j] = h[j]
        J[:, j] = (v(q + e) - v(q - e)) / (2.0 * h[j])
    Qq = Q(q)
    C = Qq.T @ (J.T - J) @ Qq
    if not np.all(np.isfinite(C)):
        raise NumericalFailure(f"non-finite Coriolis matrix at q={q}")
    return C


def default_complement(sys):
    """``A = M0^{-1} Gc``, which makes the cross momentum vanish."""
    return lambda q: solve(sys.M0(q), sys.Gc(q))


def _default_probes(n):
    rng = np.random.default_rng(0)
    return [np.zeros(n), *rng.uniform(-0.3, 0.3, size=(4, n))]


def check_pairing(sys, Q, A, probes):
    if sys.k == 0:
        return
    for q in probes:
        Gc = sys.Gc(q)
        res = np.abs(Gc.T @ Q(q)).max()
        if res > ANNIHILATOR_TOL:
            raise NotAnnihilator(f"|Gc^T Q| = {res:.3e} at q={q}")
        pairing = Gc.T @ A(q)
        if cond1(pairing) > COND_LIMIT:
            raise SingularPairing(f"Gc^T A is singular at q={q}")


def reduce(sys, Q, A=None, probes=None):
    """Eliminate the Lagrange multipliers of ``sys``.

    ``Q(q)`` must span the null space of ``Gc(q)^T``; ``A(q)`` completes it to
    an invertible momentum map and only enters through the validity check,
    since the reduced model does not depend on it.
    """
    if A is None:
        A = default_complement(sys)
    if probes is None:
        probes = _default_probes(sys.n)
    check_pairing(sys, Q, A, probes)

    def M(q):
        Qq = Q(q)
        return Qq.T @ sys.M0(q) @ Qq

    def D(q, p):
        Qq = Q(q)
        M0 = sys.M0(q)
        p0 = M0 @ (Qq @ solve(Qq.T @ M0 @ Qq, p))
        return Qq.T @ sys.D0(q, p0) @ Qq

    def C(q, p):
        return coriolis_matrix(sys.M0, Q, q, p)

    def G(q):
        return Q(q).T @ sys.G0(q)

    return ReducedPHSystem(
        n=sys.n, m=sys.m, Q=Q, M=M, D=D, C=C, G=G, V=sys.V, gradV=sys.gradV, parent=sys,
    )


def transformed_mass_matrix(sys, Q, A, q):
    """Mass matrix ``Q0^T M0 Q0`` in the split momentum ``(mu, p)``."""
    Q0 = np.hstack([A(q), Q(q)])
    return Q0.T @ sys.M0(q) @ Q0


def cross_momentum(sys, Q, A, q, p):
    """The redundant momentum component ``mu`` implied by ``p``."""
    Qq = Q(q)
    M0 = sys.M0(q)
    return A(q).T @ M0 @ Qq @ solve(Qq.T @ M0 @ Qq, p)


# -- constrained-DAE route, used as an independent reference ----------------


def constrained_dynamics(sys, q, p0, u=None, rel_step=1e-6):
    """Canonical dynamics with the multiplier solved from the constraint.

    ``lambda`` is chosen so that ``d/dt (Gc^T M0^{-1} p0) = 0``.  Partial
    derivatives of the Hamiltonian and of the constraint are taken by central
    differences, keeping this route independent of :func:`reduce`.
    """
    q = np.asarray(q, dtype=float)
    p0 = np.asarray(p0, dtype=float)
    n = q.size
    M0 = sys.M0(q)
    qdot = solve(M0, p0)

    h = _fd_steps(q, rel_step)
    grad_T = np.empty(n)
    for j in range(n):
        e = np.zeros(n)
        e[j] = h[j]
        grad_T[j] = (
            0.5 * p0 @ solve(sys.M0(q + e), p0) - 0.5 * p0 @ solve(sys.M0(q - e), p0)
        ) / (2.0 * h[j])

    force = -grad_T - sys.gradV(q) - sys.D0(q, p0) @ qdot
    if u is not None:
        force = force + sys.G0(q) @ u

    def g(x):
        return sys.Gc(x).T @ solve(sys.M0(x), p0)

    speed = np.linalg.norm(qdot)
    if speed > 0.0:
        s = rel_step * max(1.0, np.linalg.norm(q)) / speed
        drift = (g(q + s * qdot) - g(q - s * qdot)) / (2.0 * s)
    else:
        drift = np.zeros(sys.k)

    Gc = sys.Gc(q)
    M0inv_Gc = solve(M0, Gc)
    lam = solve(Gc.T @ M0inv_Gc, -(drift + M0inv_Gc.T @ force))
    return qdot, force + Gc @ lam


def project_momentum(sys, q, p0):
    """Remove the component of ``p0`` that violates the constraints."""
    M0 = sys.M0(q)
    Gc = sys.Gc(q)
    M0inv_Gc = solve(M0, Gc)
    W = Gc.T @ M0inv_Gc
    try:
        corr = solve(W, M0inv_Gc.T @ p0)
    except IllConditioned as exc:
        raise SingularPairing("Gc^T M0^{-1} Gc is singular") from exc
    return p0 - Gc @ corr
