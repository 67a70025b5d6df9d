import numpy as np
import pytest

from nonholo.errors import IllConditioned
from nonholo.linalg import cond1, is_spd, solve


@pytest.mark.parametrize("n", [1, 2, 3, 5, 8])
def test_solve_matches_numpy(n):
    rng = np.random.default_rng(n)
    A = rng.normal(size=(n, n)) + n * np.eye(n)
    b = rng.normal(size=n)
    assert np.allclose(solve(A, b), np.linalg.solve(A, b), rtol=1e-12, atol=1e-12)
    B = rng.normal(size=(n, 3))
    assert np.allclose(solve(A, B), np.linalg.solve(A, B), rtol=1e-12, atol=1e-12)


@pytest.mark.parametrize("n", [1, 2, 4])
def test_singular(n):
    A = np.zeros((n, n))
    with pytest.raises(IllConditioned):
        solve(A, np.ones(n))
    if n > 1:
        assert cond1(A) == np.inf


@pytest.mark.parametrize("n", [2, 4])
def test_conditioning_guard(n):
    A = np.eye(n)
    A[-1, -1] = 1e-14
    with pytest.raises(IllConditioned, match="condition number"):
        solve(A, np.ones(n))
    assert np.allclose(solve(A, np.ones(n), cond_limit=1e15)[-1], 1e14)


def test_cond1_exact():
    A = np.array([[1.0, 2.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 4.0]])
    expected = np.linalg.norm(A, 1) * np.linalg.norm(np.linalg.inv(A), 1)
    assert cond1(A) == pytest.approx(expected, rel=1e-14)


def test_is_spd():
    assert is_spd(np.diag([1.0, 2.0]))
    assert not is_spd(np.diag([1.0, -2.0]))
    assert not is_spd(np.array([[1.0, 0.5], [0.0, 1.0]]))
    assert not is_spd(np.diag([1.0, 2.0]), tol=1.5)
