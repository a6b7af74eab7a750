"""Green's functions from time slicing.

The free propagator is reproduced exactly by any number of slices; the
oscillator converges at second order and Richardson extrapolation recovers
the Mehler kernel to near machine precision.
"""

import numpy as np

from phasefeyn import free_green, ho_green, schrodinger_residual, time_slice_oracle
from phasefeyn.extrapolate import observed_order, richardson

y, t = 0.8, 1.0
print("free propagator at y=0.8, t=1")
for n in (1, 4, 64):
    print(f"  n={n:4d}  slices={time_slice_oracle(y, t, 0.0, n):.15f}")
print(f"  closed  {complex(free_green(y, t)):.15f}")

k = 1.0
ns = [2 ** j for j in range(4, 11)]
vals = [time_slice_oracle(y, t, k, n) for n in ns]
exact = complex(ho_green(y, t, k))
print("\noscillator k=1: error of the sliced kernel")
for n, v in zip(ns, vals):
    print(f"  n={n:5d}  |err|={abs(v - exact):.3e}")
print(f"  observed order {observed_order(vals):.4f}")
print(f"  Richardson error {abs(richardson(vals) - exact):.3e}")

ys, ts = np.linspace(0.2, 1.5, 6), [0.5, 1.0]
print("\nSchroedinger residual (relative, h=1e-3)")
print(f"  free {schrodinger_residual('free', ys, ts):.2e}")
print(f"  HO   {schrodinger_residual('ho', ys, ts, k):.2e}")
print(f"  HO with the wrong potential sign {schrodinger_residual('ho', ys, ts, k, potential_sign=-1):.2f}")
