"""T-transforms of pinned Gauss kernels.

One routine evaluates every Gauss kernel with Donsker-delta pinning.  Here
it is checked against the free and oscillator generating functionals and
its specializations (Donsker's delta, normalized exponential).
"""

import numpy as np

from phasefeyn import (
    BlockOperator,
    GaussKernelSpec,
    PhaseFunction,
    build_grid,
    donsker_t_transform,
    free_t_transform,
    ho_t_transform,
    master_t_transform,
    nexp_t_transform,
)
from phasefeyn.verify import random_smooth

rng = np.random.default_rng(0)
grid = build_grid(1.0, 4 / 3, 384)
f = random_smooth(grid, rng)

free = GaussKernelSpec.free(grid, 0.5)
res = master_t_transform(free, f)
print("free integrand pinned at y=0.5")
print(f"  master      {res.value:.15f}")
print(f"  closed form {free_t_transform(f, 0.5):.15f}")
print(f"  pairing (eta, N^-1 eta) = {res.gram[0, 0]:.12f}  (i t)")

print("\noscillator k=1: closed form against the discretized master formula")
for m in (96, 192, 384):
    g = build_grid(1.0, 4 / 3, m)
    fm = random_smooth(g, np.random.default_rng(0))
    a = ho_t_transform(fm, 0.5, 1.0, 1.0)
    b = master_t_transform(GaussKernelSpec.harmonic(g, 1.0, 0.5), fm).value
    print(f"  m={m:4d}  |diff|/|T| = {abs(a - b) / abs(b):.3e}")

zero = BlockOperator.zero(grid)
eta = PhaseFunction.from_callables(grid, np.cos, np.sin)
print("\nreductions")
print(f"  Donsker  {abs(master_t_transform(GaussKernelSpec(zero, zero, None, ((eta, 0.3),)), f).value - donsker_t_transform(eta, 0.3, f)):.1e}")
print(f"  Nexp     {abs(master_t_transform(GaussKernelSpec(free.K, zero), f).value - nexp_t_transform(free.K, f)):.1e}")
print("\nserialized fields:", ", ".join(sorted(res.to_json())))
