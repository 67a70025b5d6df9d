"""Chained structure and the discontinuous chart ``z -> w``.

The chart ``f_w`` is defined through its polynomial inverse

    z1 = w1
    z2 = w1 w2 + sum_{i>=3} w1^(i-2)/(i-2)! w_i
    zj = sum_{i>=3} w1^(i+j-4)/(i+j-4)! w_i        (j >= 3)

and is well defined wherever ``z1 != 0``.  The tail ``z' = (z3..zn)`` obeys
``z' = N S N w'`` with ``N = diag(w1, ..., w1^(n-2))`` and ``S`` the Hankel
matrix of reciprocal factorials returned by :func:`s_matrix`.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import factorial
from typing import Callable, Optional

import numpy as np

from .core import ReducedPHSystem
from .errors import ChartError, ChartViolation, DimensionTooSmall, NearSingularChart
from .linalg import solve

MAX_N = 12
DEFAULT_EPS = 1e-12


def _check_n(n):
    if n < 3:
        raise DimensionTooSmall(f"chained structure needs n >= 3, got {n}")
    if n > MAX_N:
        raise ValueError(f"n = {n} exceeds the supported maximum {MAX_N}")


def qz_perp(z):
    """Canonical left annihilator of a chained-structure input matrix."""
    z = np.asarray(z, dtype=float)
    n = z.size
    if n < 3:
        raise DimensionTooSmall(f"chained structure needs n >= 3, got {n}")
    P = np.zeros((n - 2, n))
    P[:, 0] = -z[1:n - 1]
    P[:, 2:] = np.eye(n - 2)
    return P


def chained_form_q(z):
    """Input matrix of the two-input kinematic chained form."""
    z = np.asarray(z, dtype=float)
    n = z.size
    Qc = np.zeros((n, 2))
    Qc[0, 0] = 1.0
    Qc[1, 1] = 1.0
    Qc[2:, 0] = z[1:n - 1]
    return Qc


def is_chained(sys, samples, tol=1e-10):
    """Check ``qz_perp(z) Q(z) = 0`` at every sample point."""
    for z in samples:
        if np.abs(qz_perp(z) @ sys.Q(np.asarray(z, dtype=float))).max() >= tol:
            return False
    return True


# -- exact rational helpers -------------------------------------------------


@lru_cache(maxsize=None)
def s_matrix(n):
    """``S[a][b] = 1/(a+b)!`` for ``a, b = 1..n-2`` as exact fractions."""
    if n < 3:
        raise DimensionTooSmall(f"S_n is defined for n >= 3, got {n}")
    r = n - 2
    return tuple(
        tuple(Fraction(1, factorial(a + b)) for b in range(1, r + 1)) for a in range(1, r + 1)
    )


def exact_det(rows):
    """Determinant of a square matrix of fractions by Gaussian elimination."""
    A = [[Fraction(x) for x in row] for row in rows]
    r = len(A)
    det = Fraction(1)
    for c in range(r):
        piv = next((i for i in range(c, r) if A[i][c] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != c:
            A[c], A[piv] = A[piv], A[c]
            det = -det
        det *= A[c][c]
        for i in range(c + 1, r):
            if A[i][c] != 0:
                f = A[i][c] / A[c][c]
                A[i] = [a - f * b for a, b in zip(A[i], A[c])]
    return det


def exact_inverse(rows):
    """Gauss-Jordan inverse over the rationals."""
    r = len(rows)
    A = [[Fraction(x) for x in row] + [Fraction(int(i == j)) for j in range(r)]
         for i, row in enumerate(rows)]
    for c in range(r):
        piv = next((i for i in range(c, r) if A[i][c] != 0), None)
        if piv is None:
            raise ZeroDivisionError("matrix is singular")
        A[c], A[piv] = A[piv], A[c]
        pv = A[c][c]
        A[c] = [x / pv for x in A[c]]
        for i in range(r):
            if i != c and A[i][c] != 0:
                f = A[i][c]
                A[i] = [a - f * b for a, b in zip(A[i], A[c])]
    return [row[r:] for row in A]


# -- the w chart ------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class WChart:
    """Discontinuous chart ``f_w`` for an ``n``-dimensional chained system.

    ``S`` is held exactly and inverted over the rationals before conversion
    to floating point.  Dimensions above :data:`MAX_N` are rejected because
    the reciprocal-factorial entries make the float solve meaningless.
    """

    n: int
    eps: float = DEFAULT_EPS
    S: tuple = field(init=False, repr=False)
    S_float: np.ndarray = field(init=False, repr=False)
    S_inv: np.ndarray = field(init=False, repr=False)
    _expo: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        _check_n(self.n)
        S = s_matrix(self.n)
        object.__setattr__(self, "S", S)
        object.__setattr__(self, "S_float", np.array(S, dtype=float))
        object.__setattr__(self, "S_inv", np.array(exact_inverse(S), dtype=float))
        # exponent of w1 multiplying w_i in z_j, rows j = 2..n, cols i = 3..n
        j = np.arange(2, self.n + 1)[:, None]
        i = np.arange(3, self.n + 1)[None, :]
        object.__setattr__(self, "_expo", i + j - 4)

    def _taylor(self, w1):
        # t[k] = w1^k / k!
        t = np.empty(2 * self.n - 3)
        t[0] = 1.0
        for k in range(1, t.size):
            t[k] = t[k - 1] * w1 / k
        return t

    def inverse(self, w):
        """``z = f_w^{-1}(w)``; smooth everywhere and ``z = 0`` when ``w1 = 0``."""
        w = np.asarray(w, dtype=float)
        if w.size != self.n:
            raise ValueError(f"expected a {self.n}-vector, got shape {w.shape}")
        w1 = w[0]
        t = self._taylor(w1)
        z = np.empty(self.n)
        z[0] = w1
        z[1:] = t[self._expo] @ w[2:]
        z[1] += w1 * w[1]
        return z

    def forward(self, z):
        """``w = f_w(z)``; raises NearSingularChart when ``|z1| <= eps``."""
        z = np.asarray(z, dtype=float)
        if z.size != self.n:
            raise ValueError(f"expected a {self.n}-vector, got shape {z.shape}")
        z1 = z[0]
        if not abs(z1) > self.eps:
            raise NearSingularChart(f"|z1| = {abs(z1):.3e} is within the chart guard {self.eps:.1e}")
        tail = self.solve_tail(z1, z[2:])
        t = self._taylor(z1)
        w = np.empty(self.n)
        w[0] = z1
        w[1] = z[1] / z1 - (t[1:self.n - 1] @ tail) / z1
        w[2:] = tail
        return w

    def solve_tail(self, w1, rhs):
        """Solve ``N(w1) S N(w1) x = rhs`` without forming ``N^{-1}``."""
        pw = w1 ** np.arange(1, self.n - 1)
        if rhs.ndim == 2:
            pw = pw[:, None]
        return (self.S_inv @ (rhs / pw)) / pw

    def jacobian_inverse(self, w):
        """``dz/dw`` of :meth:`inverse`, rows indexed by ``z``."""
        w = np.asarray(w, dtype=float)
        n = self.n
        w1 = w[0]
        t = self._taylor(w1)
        J = np.zeros((n, n))
        J[0, 0] = 1.0
        J[1:, 2:] = t[self._expo]
        J[1:, 0] = t[self._expo - 1] @ w[2:]
        J[1, 0] += w[1]
        J[1, 1] = w1
        return J

    def _guard(self, w1):
        if not abs(w1) > self.eps:
            raise NearSingularChart(f"|w1| = {abs(w1):.3e} is within the chart guard {self.eps:.1e}")

    def solve_jacobian(self, w, b):
        """Solve ``(dz/dw) x = b``, i.e. apply ``df_w/dz`` to ``b``."""
        w = np.asarray(w, dtype=float)
        b = np.asarray(b, dtype=float)
        w1 = w[0]
        self._guard(w1)
        J = self.jacobian_inverse(w)
        x = np.empty_like(b)
        x[0] = b[0]
        x[2:] = self.solve_tail(w1, b[2:] - np.multiply.outer(J[2:, 0], b[0]))
        x[1] = (b[1] - J[1, 0] * b[0] - J[1, 2:] @ x[2:]) / w1
        return x

    def solve_jacobian_t(self, w, b):
        """Solve ``(dz/dw)^T x = b``; maps a ``w``-gradient to a ``z``-gradient."""
        w = np.asarray(w, dtype=float)
        b = np.asarray(b, dtype=float)
        w1 = w[0]
        self._guard(w1)
        J = self.jacobian_inverse(w)
        x = np.empty_like(b)
        x[1] = b[1] / w1
        x[2:] = self.solve_tail(w1, b[2:] - np.multiply.outer(J[1, 2:], x[1]))
        x[0] = b[0] - J[1:, 0] @ x[1:]
        return x


@lru_cache(maxsize=None)
def chart(n, eps=DEFAULT_EPS):
    return WChart(n, eps)


def fw_inverse(w):
    w = np.asarray(w, dtype=float)
    return chart(w.size).inverse(w)


def fw_forward(z, eps=DEFAULT_EPS):
    z = np.asarray(z, dtype=float)
    return chart(z.size, eps).forward(z)


def jacobian_fw_inverse(w):
    w = np.asarray(w, dtype=float)
    return chart(w.size).jacobian_inverse(w)


# -- change of configuration coordinates ------------------------------------


def pushforward(sys, f, f_inv, J_f=None, J_finv=None):
    """Express ``sys`` in coordinates ``x = f(q)``.

    Exactly one of ``J_f`` (Jacobian of ``f`` at ``q``) or ``J_finv``
    (Jacobian of ``f_inv`` at ``x``) is needed.  The momentum is untouched;
    only ``Q`` and the potential gradient pick up Jacobian factors.
    """
    if (J_f is None) == (J_finv is None):
        raise ValueError("pass exactly one of J_f and J_finv")

    def src(x):
        try:
            return f_inv(np.asarray(x, dtype=float))
        except ChartError as exc:
            raise ChartViolation(str(exc)) from exc

    if J_f is not None:
        def Q(x):
            q = src(x)
            return J_f(q) @ sys.Q(q)

        def gradV(x):
            q = src(x)
            return solve(J_f(q).T, sys.gradV(q))

        def gradT(x, p):
            q = src(x)
            return solve(J_f(q).T, sys.gradT(q, p))
    else:
        def Q(x):
            q = src(x)
            try:
                return solve(J_finv(x), sys.Q(q))
            except ArithmeticError as exc:
                raise ChartViolation(f"chart Jacobian singular at {x}") from exc

        def gradV(x):
            return J_finv(x).T @ sys.gradV(src(x))

        def gradT(x, p):
            return J_finv(x).T @ sys.gradT(src(x), p)

    return ReducedPHSystem(
        n=sys.n,
        m=sys.m,
        Q=Q,
        M=lambda x: sys.M(src(x)),
        D=lambda x, p: sys.D(src(x), p),
        C=lambda x, p: sys.C(src(x), p),
        G=lambda x: sys.G(src(x)),
        V=lambda x: sys.V(src(x)),
        gradV=gradV,
        gradT=gradT if sys.gradT is not None else None,
    )


def w_system(sys_z, wchart=None):
    """Push a chained-structure system through ``f_w`` using structured solves."""
    c = wchart if wchart is not None else chart(sys_z.n)

    def Q(w):
        return c.solve_jacobian(w, sys_z.Q(c.inverse(w)))

    def gradV(w):
        return c.jacobian_inverse(w).T @ sys_z.gradV(c.inverse(w))

    def gradT(w, p):
        return c.jacobian_inverse(w).T @ sys_z.gradT(c.inverse(w), p)

    return ReducedPHSystem(
        n=sys_z.n,
        m=sys_z.m,
        Q=Q,
        M=lambda w: sys_z.M(c.inverse(w)),
        D=lambda w, p: sys_z.D(c.inverse(w), p),
        C=lambda w, p: sys_z.C(c.inverse(w), p),
        G=lambda w: sys_z.G(c.inverse(w)),
        V=lambda w: sys_z.V(c.inverse(w)),
        gradV=gradV,
        gradT=gradT if sys_z.gradT is not None else None,
    )


@dataclass(frozen=True, eq=False)
class ChainedSystem:
    """A reduced model in chained coordinates together with its chart.

    ``system`` lives in ``z``; ``base`` (optional) is the same model in the
    original configuration ``q = fz_inv(z)``.  ``fast_loop`` (optional) maps
    controller parameters to an object with ``rhs(x)`` and ``observe(x)``
    that evaluates the closed loop faster than the generic path.
    """

    system: ReducedPHSystem
    fz: Callable
    fz_inv: Callable
    J_fz: Callable
    base: Optional[ReducedPHSystem] = None
    fast_loop: Optional[Callable] = None

    @property
    def n(self):
        return self.system.n

    @property
    def wchart(self):
        return chart(self.n)

    def in_w(self):
        return w_system(self.system, self.wchart)

    @classmethod
    def from_reduced(cls, base, fz, fz_inv, J_fz):
        return cls(pushforward(base, fz, fz_inv, J_f=J_fz), fz, fz_inv, J_fz, base)
