"""
Reduced model against the constrained one
=========================================

Eliminating the Lagrange multipliers gives a model on the reduced momenta
``p = Q^T p0``.  Here both are driven by the same constant input and the
trajectories are compared.
"""

# %%
import numpy as np

from nonholo import CarParams, SimConfig
from nonholo.car import build_car, car_Q, car_reduced
from nonholo.sim import run_constrained, run_open_loop

car = CarParams()
full = build_car(car)
red = car_reduced(car)

q0 = np.array([1.0, 0.5, 0.3, 0.2])
p = np.array([1.0, -1.0])
u = np.array([0.5, -0.2])
p0 = red.canonical_momentum(q0, p)

# %%
a = run_open_loop(red, SimConfig(q0, p, dt=1e-4, duration=1.0), u=lambda q, p: u)
b = run_constrained(full, p0, SimConfig(q0, dt=1e-4, duration=1.0), u=lambda q, p0: u)
pb = np.array([car_Q(q, car.l).T @ x for q, x in zip(b["q"], b["p0"])])
print("max |q_reduced - q_constrained| =", np.abs(a["q"] - b["q"]).max())
print("max |p_reduced - Q^T p0|       =", np.abs(a["p"] - pb).max())

# %% [markdown]
# The reduced Coriolis matrix is skew, so it does no work; with damping
# switched off the energy stays put until the steering reaches pi/2.

# %%
C = red.C(q0, p)
print("C + C^T =", np.abs(C + C.T).max())
