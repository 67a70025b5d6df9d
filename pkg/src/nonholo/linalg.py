"""Small dense solves with a conditioning guard.

Matrices here are tiny (at most ``n x n`` with ``n <= 12``), so the 1-norm
condition number is computed exactly from the LU factors instead of estimated.
"""

import warnings

import numpy as np
from scipy.linalg import LinAlgWarning, lu_factor, lu_solve

from .errors import IllConditioned

COND_LIMIT = 1e12


def _solve2(A, b, cond_limit):
    a, c, d, e = A[0, 0], A[0, 1], A[1, 0], A[1, 1]
    det = a * e - c * d
    norm = max(abs(a) + abs(d), abs(c) + abs(e))
    if det == 0.0:
        raise IllConditioned("singular 2x2 matrix")
    inv_norm = max(abs(e) + abs(d), abs(c) + abs(a)) / abs(det)
    if norm * inv_norm > cond_limit:
        raise IllConditioned(f"condition number {norm * inv_norm:.3e} exceeds {cond_limit:.0e}")
    if b.ndim == 1:
        return np.array([(e * b[0] - c * b[1]) / det, (a * b[1] - d * b[0]) / det])
    return np.vstack([(e * b[0] - c * b[1]) / det, (a * b[1] - d * b[0]) / det])


def _lu(A):
    # exact singularity is detected from the pivots, so scipy's warning is noise
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", LinAlgWarning)
        return lu_factor(A, check_finite=False)


def cond1(A):
    """Exact 1-norm condition number of a small square matrix."""
    A = np.asarray(A, dtype=float)
    lu, piv = _lu(A)
    if np.any(np.diag(lu) == 0.0):
        return np.inf
    inv = lu_solve((lu, piv), np.eye(A.shape[0]), check_finite=False)
    return np.linalg.norm(A, 1) * np.linalg.norm(inv, 1)


def solve(A, b, cond_limit=COND_LIMIT):
    """Solve ``A x = b`` by LU with partial pivoting.

    Raises IllConditioned when the 1-norm condition number exceeds
    ``cond_limit``.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    if A.shape == (2, 2):
        return _solve2(A, b, cond_limit)
    if A.shape == (1, 1):
        if A[0, 0] == 0.0:
            raise IllConditioned("singular 1x1 matrix")
        return b / A[0, 0]
    lu, piv = _lu(A)
    diag = np.abs(np.diag(lu))
    if np.any(diag == 0.0):
        raise IllConditioned("singular matrix")
    inv = lu_solve((lu, piv), np.eye(A.shape[0]), check_finite=False)
    kappa = np.linalg.norm(A, 1) * np.linalg.norm(inv, 1)
    if kappa > cond_limit:
        raise IllConditioned(f"condition number {kappa:.3e} exceeds {cond_limit:.0e}")
    return lu_solve((lu, piv), b, check_finite=False)


def is_spd(A, tol=0.0):
    """True when ``A`` is symmetric and a Cholesky factorisation succeeds."""
    A = np.asarray(A, dtype=float)
    if not np.allclose(A, A.T, rtol=0.0, atol=1e-12 * max(1.0, np.abs(A).max())):
        return False
    try:
        np.linalg.cholesky(A - tol * np.eye(A.shape[0]))
    except np.linalg.LinAlgError:
        return False
    return True
