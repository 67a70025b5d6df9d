"""
A tour of the discontinuous chart
=================================

``w = f_w(z)`` is only defined for ``z1 != 0``.  Its inverse is polynomial,
and the forward map reduces to a small Hankel-like solve with entries
``1/(a+b)!``.
"""

# %%
import numpy as np

from nonholo.chained import chart, exact_det, exact_inverse, s_matrix

# %% [markdown]
# The structured matrix is kept as exact fractions, so its determinant is
# exact too.  None of them vanish.

# %%
for n in range(3, 9):
    print(n, exact_det(s_matrix(n)))
print(exact_inverse(s_matrix(4)))

# %% [markdown]
# For ``n = 3`` there is a closed form to compare with.

# %%
c3 = chart(3)
z = np.array([2.0, 3.0, 2.0])
print(c3.forward(z), [z[0], z[1] / z[0] - 2 * z[2] / z[0] ** 2, 2 * z[2] / z[0] ** 2])

# %% [markdown]
# Round trips lose accuracy as ``n`` grows: the forward map divides by
# growing powers of ``z1`` and the structured matrix gets ill-conditioned.
# The recovered ``w`` still reproduces ``z`` to working precision.

# %%
rng = np.random.default_rng(0)
for n in range(3, 9):
    c = chart(n)
    err_w, err_z = 0.0, 0.0
    for _ in range(500):
        w = rng.uniform(-1, 1, n)
        w[0] = rng.choice([-1.0, 1.0]) * rng.uniform(0.1, 10.0)
        z = c.inverse(w)
        w_back = c.forward(z)
        err_w = max(err_w, np.abs(w_back - w).max())
        err_z = max(err_z, np.abs(c.inverse(w_back) - z).max() / max(1.0, np.abs(z).max()))
    print(f"n={n}: |w - f_w(f_w^-1(w))| {err_w:.1e}   relative z residual {err_z:.1e}")
