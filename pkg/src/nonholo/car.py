"""Car-like vehicle with a steerable front wheel.

Configuration ``q = (x1, y1, theta, phi)``: rear-wheel position, heading and
steering angle.  The front wheel sits at ``(x1 + l cos theta, y1 + l sin theta)``
and both wheels roll without slipping.  Inputs are a rear-wheel force along
the heading and a steering torque.

The reduced momentum is built with the kinematic car's input matrix, which is
only defined for ``|theta|, |phi| < pi/2``; the chained coordinates

    z = (x1, sec^3(theta) tan(phi) / l, tan(theta), y1)

share that domain.
"""

from dataclasses import dataclass, replace

import numpy as np

from .chained import ChainedSystem
from .core import ConstrainedPHSystem, ReducedPHSystem, reduce
from .errors import DomainViolation

DOMAIN_MARGIN = 1e-6
HALF_PI = 0.5 * np.pi


@dataclass(frozen=True)
class CarParams:
    """Physical parameters.  Defaults are the values used in the reference run."""

    m1: float = 0.5
    m2: float = 2.0
    J1: float = 1.0
    J2: float = 1.0
    l: float = 1.5
    du: float = 4.0
    dtheta: float = 1.0
    dphi: float = 2.0

    def __post_init__(self):
        for name in ("m1", "m2", "J1", "J2", "l"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        # zero damping is allowed for conservative test runs
        for name in ("du", "dtheta", "dphi"):
            if not getattr(self, name) >= 0:
                raise ValueError(f"{name} must be non-negative, got {getattr(self, name)}")

    def scaled(self, mass=1.0, damping=1.0):
        """Copy with inertias scaled by ``mass`` and damping by ``damping``."""
        return replace(
            self,
            m1=self.m1 * mass, m2=self.m2 * mass, J1=self.J1 * mass, J2=self.J2 * mass,
            du=self.du * damping, dtheta=self.dtheta * damping, dphi=self.dphi * damping,
        )


def check_domain(q):
    th, ph = q[2], q[3]
    limit = HALF_PI - DOMAIN_MARGIN
    if not (abs(th) < limit and abs(ph) < limit):
        raise DomainViolation(f"theta={th:.6g}, phi={ph:.6g} outside |.| < pi/2 - {DOMAIN_MARGIN:g}")


def build_car(params=CarParams()):
    """Canonical constrained model of the vehicle."""
    m1, m2, J1, J2, l = params.m1, params.m2, params.J1, params.J2, params.l
    mt = m1 + m2
    D0 = np.diag([params.du, params.du, params.dtheta, params.dphi])

    def M0(q):
        s, c = np.sin(q[2]), np.cos(q[2])
        return np.array([
            [mt, 0.0, -m2 * l * s, 0.0],
            [0.0, mt, m2 * l * c, 0.0],
            [-m2 * l * s, m2 * l * c, m2 * l * l + J1, 0.0],
            [0.0, 0.0, 0.0, J2],
        ])

    def G0(q):
        return np.array([[np.cos(q[2]), 0.0], [np.sin(q[2]), 0.0], [0.0, 0.0], [0.0, 1.0]])

    def Gc(q):
        th, ph = q[2], q[3]
        return np.array([
            [np.sin(th), -np.cos(th), 0.0, 0.0],
            [np.sin(th + ph), -np.cos(th + ph), -l * np.cos(ph), 0.0],
        ]).T

    return ConstrainedPHSystem(
        n=4, k=2, M0=M0, D0=lambda q, p0: D0, V=lambda q: 0.0,
        gradV=lambda q: np.zeros(4), G0=G0, Gc=Gc,
    )


def car_Q(q, l):
    check_domain(q)
    th, ph = q[2], q[3]
    return np.array([
        [1.0, 0.0],
        [np.tan(th), 0.0],
        [np.tan(ph) / (l * np.cos(th)), 0.0],
        [0.0, 1.0],
    ])


def _den(params, ph):
    l2 = params.l**2
    return params.J1 * np.sin(ph) ** 2 + l2 * params.m2 + l2 * params.m1 * np.cos(ph) ** 2


def a_coef(q, params):
    th, ph = q[2], q[3]
    return _den(params, ph) / (params.l**2 * np.cos(th) ** 2 * np.cos(ph) ** 2)


def b_coef(q, params):
    th, ph = q[2], q[3]
    l2 = params.l**2
    s2 = np.sin(ph) ** 2
    num = params.dtheta * s2 + params.du * l2 - params.du * l2 * s2
    return num / (l2 * np.cos(th) ** 2 * np.cos(ph) ** 2)


def c_coef(q, params):
    ph = q[3]
    return (params.m2 * params.l**2 + params.J1) * np.sin(ph) / (np.cos(ph) * _den(params, ph))


def car_gradT(q, p, params):
    """``dT/dq`` for ``T = p1^2 / (2a) + p2^2 / (2 J2)``; only theta and phi enter."""
    th, ph = q[2], q[3]
    l2 = params.l**2
    a = a_coef(q, params)
    cph = np.cos(ph)
    da_dph = (
        2.0 * np.sin(ph) * cph * (params.J1 - l2 * params.m1) / (l2 * np.cos(th) ** 2 * cph**2)
        + 2.0 * a * np.tan(ph)
    )
    k = 0.5 * p[0] ** 2 / a**2
    return np.array([0.0, 0.0, -k * 2.0 * a * np.tan(th), -k * da_dph])


def car_reduced(params=CarParams()):
    """Closed-form reduced model.

    ``G`` is computed as ``Q^T G0 = diag(sec theta, 1)``.
    """
    l = params.l

    def M(q):
        return np.array([[a_coef(q, params), 0.0], [0.0, params.J2]])

    def D(q, p):
        return np.array([[b_coef(q, params), 0.0], [0.0, params.dphi]])

    def C(q, p):
        cp = c_coef(q, params) * p[0]
        return np.array([[0.0, cp], [-cp, 0.0]])

    def G(q):
        check_domain(q)
        return np.array([[1.0 / np.cos(q[2]), 0.0], [0.0, 1.0]])

    return ReducedPHSystem(
        n=4, m=2, Q=lambda q: car_Q(q, l), M=M, D=D, C=C, G=G,
        V=lambda q: 0.0, gradV=lambda q: np.zeros(4), parent=build_car(params),
        gradT=lambda q, p: car_gradT(q, p, params),
    )


def car_fz(q, l):
    check_domain(q)
    x, y, th, ph = q
    sec = 1.0 / np.cos(th)
    return np.array([x, sec**3 * np.tan(ph) / l, np.tan(th), y])


def car_fz_inv(z, l):
    z1, z2, z3, z4 = z
    th = np.arctan(z3)
    ph = np.arctan(l * z2 / (1.0 + z3 * z3) ** 1.5)
    q = np.array([z1, z4, th, ph])
    check_domain(q)
    return q


def car_Jfz(q, l):
    check_domain(q)
    th, ph = q[2], q[3]
    sec = 1.0 / np.cos(th)
    sec_ph2 = 1.0 / np.cos(ph) ** 2
    return np.array([
        [1.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 3.0 * sec**3 * np.tan(th) * np.tan(ph) / l, sec**3 * sec_ph2 / l],
        [0.0, 0.0, sec**2, 0.0],
        [0.0, 1.0, 0.0, 0.0],
    ])


def car_Qz(z, l):
    """Input matrix in chained coordinates, in closed form."""
    z2, z3 = z[1], z[2]
    s = z3 * z3 + 1.0
    return np.array([
        [1.0, 0.0],
        [3.0 * z2 * z2 * z3 / s, s**1.5 * (l * l * z2 * z2 / s**3 + 1.0) / l],
        [z2, 0.0],
        [z3, 0.0],
    ])


def car_chained(params=CarParams(), closed_form=True):
    """The vehicle in chained coordinates.

    With ``closed_form`` the z-space input matrix is the analytic expression
    and a scalar closed-loop evaluator is attached; otherwise ``Q_z`` is the
    generic pushforward ``J_fz Q``.
    """
    l = params.l
    base = car_reduced(params)
    fz = lambda q: car_fz(q, l)  # noqa: E731
    fz_inv = lambda z: car_fz_inv(z, l)  # noqa: E731
    J_fz = lambda q: car_Jfz(q, l)  # noqa: E731
    cs = ChainedSystem.from_reduced(base, fz, fz_inv, J_fz)
    if closed_form:
        from .fastcar import CarClosedLoop

        sz = replace(cs.system, Q=lambda z: car_Qz(z, l), gradV=lambda z: np.zeros(4))
        cs = replace(cs, system=sz, fast_loop=lambda ctrl: CarClosedLoop(params, ctrl))
    return cs


def front_wheel(q, l):
    """Front-wheel contact point from the holonomic constraints."""
    q = np.asarray(q, dtype=float)
    return q[..., 0] + l * np.cos(q[..., 2]), q[..., 1] + l * np.sin(q[..., 2])


def reduced_from_constraints(params=CarParams()):
    """Generic reduction of :func:`build_car` with the kinematic-car ``Q``."""
    return reduce(build_car(params), lambda q: car_Q(q, params.l))
