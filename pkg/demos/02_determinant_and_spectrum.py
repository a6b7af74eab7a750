"""The oscillator's Fredholm determinant and the spectrum behind it.

``A(s, r) = t - max(s, r)`` on ``[0, t)`` has eigenvalues
``(t / ((n - 1/2) pi))^2``, so ``det(Id + L (Id + K)^{-1}) = prod (1 - k l_n)``
equals ``cos(sqrt(k) t)``.
"""

import numpy as np

from phasefeyn import build_grid, fredholm_det, make_K_free, make_L_ho, spectrum_A
from phasefeyn.operators import ho_eigenvalues

t, k = 1.0, 2.0
grid = build_grid(t, 1.25 * t, 640)
sp = spectrum_A(grid, k, 6)
print("leading eigenvalues of kA")
for n, (num, ana) in enumerate(zip(sp.eigenvalues, ho_eigenvalues(k, t, 6)), 1):
    print(f"  n={n}  numeric {num:.8f}  analytic {ana:.8f}")

K, L = make_K_free(grid), make_L_ho(grid, k)
print(f"\ncos(sqrt(k) t)      {np.cos(np.sqrt(k) * t):.12f}")
print(f"product, 10^4 modes {fredholm_det(K, L, 'product').real:.12f}")
print(f"dense, m={grid.m}     {fredholm_det(K, L, 'dense').real:.12f}")

print("\ndeterminant as t approaches the first caustic pi/(2 sqrt(k))")
for frac in (0.5, 0.9, 0.99):
    tt = frac * np.pi / (2 * np.sqrt(k))
    g = build_grid(tt, tt, 64)
    print(f"  t={tt:.4f}  det={fredholm_det(make_K_free(g), make_L_ho(g, k), 'product').real:.6f}")
