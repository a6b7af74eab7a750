"""Richardson extrapolation for sequences with even-power error expansions."""

from __future__ import annotations

import numpy as np


def richardson(values, ratio: float = 2.0, order: int = 2, step: int = 2) -> complex:
    """Extrapolate ``values[i] ~ v + c1 h_i^order + c2 h_i^(order+step) + ...``.

    Consecutive entries must use step sizes shrinking by ``ratio``.  Returns
    the last diagonal entry of the Neville/Richardson tableau.
    """
    row = [complex(v) for v in values]
    p = order
    while len(row) > 1:
        fac = ratio ** p
        row = [(fac * b - a) / (fac - 1) for a, b in zip(row[:-1], row[1:])]
        p += step
    return row[0]


def observed_order(values, ratio: float = 2.0) -> float:
    """Convergence order from the last three members of a refinement sequence."""
    v = np.asarray(values, dtype=complex)
    if v.size < 3:
        raise ValueError("need at least three values")
    d1 = abs(v[-2] - v[-3])
    d2 = abs(v[-1] - v[-2])
    return float(np.log(d1 / d2) / np.log(ratio))
