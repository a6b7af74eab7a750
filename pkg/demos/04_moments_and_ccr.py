"""Wick moments and the canonical commutator.

Momentum smeared just after ``s`` and just before ``s``, paired with the
position integral up to ``s``, differ by ``-i`` times the propagator.
"""

import numpy as np

from phasefeyn import GaussKernelSpec, build_grid, ccr_limit, free_green, moment1, moment2
from phasefeyn import wick_derivative_oracle, wick_mixed_oracle
from phasefeyn.verify import random_smooth

rng = np.random.default_rng(1)
grid = build_grid(1.0, 4 / 3, 128)
spec = GaussKernelSpec.harmonic(grid, 1.0, 0.2)
f, k, h = (random_smooth(grid, rng) for _ in range(3))
print("moments of the oscillator integrand")
print(f"  first   closed {moment1(spec, k, f):.10f}  finite diff {wick_derivative_oracle(spec, k, f):.10f}")
print(f"  second  closed {moment2(spec, k, h, f):.10f}  finite diff {wick_mixed_oracle(spec, k, h, f):.10f}")

target = -1j * complex(free_green(0.0, 1.0))
print(f"\ncommutator target -i T(0) = {target:.12f}")
for s in (0.25, 0.5, 0.9):
    res = ccr_limit(s, 1.0)
    print(f"  s={s}")
    for eps, width, d in res.rows:
        print(f"    eps={eps:.3f} width={width:.4f}  diff={d:.12f}  err={abs(d - target):.1e}")
