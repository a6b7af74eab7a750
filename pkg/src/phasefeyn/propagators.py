"""Free and harmonic-oscillator generating functionals and Green's functions.

Units: hbar = m = 1, start point y0 = 0.  Besides the closed forms this
module holds the independent oracles used to check them: exact complex
Gaussian integration, time slicing on quadratic-form coefficients, a finite
difference Schroedinger residual and the semigroup (composition) check.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import GaussianPreconditionError, PhaseFeynError
from .grid import PhaseFunction, TimeGrid
from .operators import a_kernel


def _check_ho_range(t: float, k: float):
    if not t > 0:
        raise PhaseFeynError(f"t must be positive, got {t}")
    if k < 0:
        raise PhaseFeynError(f"spring constant must be >= 0, got {k}")
    if k > 0 and np.sqrt(k) * t >= np.pi / 2:
        raise PhaseFeynError(
            f"t={t} outside 0 < t < pi/(2 sqrt(k)) = {np.pi / (2 * np.sqrt(k)):.6g}")


def _sin_ratio(k: float, t: float) -> float:
    """``sqrt(k) / sin(sqrt(k) t)``, continuous at k = 0."""
    return 1.0 / (t * np.sinc(np.sqrt(k) * t / np.pi))


def _cot_ratio(k: float, t: float) -> float:
    """``sqrt(k) / tan(sqrt(k) t)``, continuous at k = 0."""
    return np.cos(np.sqrt(k) * t) * _sin_ratio(k, t)


def complex_gauss_integral(a: complex, b: complex) -> complex:
    """``int exp(a z^2 + b z) dz = sqrt(pi / -a) exp(-b^2 / (4a))``.

    For ``Re a = 0`` this is the Fresnel integral, understood as the limit
    of the ``exp(-eps z^2)`` regulated integral.
    """
    a = complex(a)
    if a == 0 or a.real > 1e-12 * abs(a):
        raise GaussianPreconditionError(f"need Re(a) <= 0 and a != 0, got a={a}")
    return complex(np.sqrt(np.pi / -a) * np.exp(-complex(b) ** 2 / (4 * a)))


@dataclass(frozen=True)
class GaussianKernel1D:
    """Two-point kernel ``amplitude * exp(a y^2 + b y y0 + c y0^2)``."""

    amplitude: complex
    a: complex
    b: complex
    c: complex

    def __post_init__(self):
        coeffs = (self.amplitude, self.a, self.b, self.c)
        if not all(np.isfinite(complex(z)) for z in coeffs):
            raise GaussianPreconditionError(f"non-finite kernel coefficients {coeffs}")
        if self.amplitude == 0:
            raise GaussianPreconditionError("kernel amplitude vanishes")

    def __call__(self, y, y0=0.0):
        return self.amplitude * np.exp(self.a * y ** 2 + self.b * y * y0 + self.c * y0 ** 2)

    def then(self, later: "GaussianKernel1D") -> "GaussianKernel1D":
        """``(later o self)(y, y0) = int later(y, z) self(z, y0) dz``."""
        alpha = later.c + self.a
        norm = complex_gauss_integral(alpha, 0.0)
        return GaussianKernel1D(
            self.amplitude * later.amplitude * norm,
            later.a - later.b ** 2 / (4 * alpha),
            -self.b * later.b / (2 * alpha),
            self.c - self.b ** 2 / (4 * alpha),
        )


def free_kernel(t: float) -> GaussianKernel1D:
    if not t > 0:
        raise PhaseFeynError(f"t must be positive, got {t}")
    return GaussianKernel1D(1 / np.sqrt(2j * np.pi * t), 0.5j / t, -1j / t, 0.5j / t)


def mehler_kernel(t: float, k: float) -> GaussianKernel1D:
    """Two-point oscillator kernel; reduces to :func:`free_kernel` at k = 0."""
    _check_ho_range(t, k)
    sr, cr = _sin_ratio(k, t), _cot_ratio(k, t)
    return GaussianKernel1D(np.sqrt(sr / (2j * np.pi)), 0.5j * cr, -1j * sr, 0.5j * cr)


def free_green(y, t: float):
    """``(2 pi i t)^{-1/2} exp(-y^2 / (2 i t))``."""
    if not t > 0:
        raise PhaseFeynError(f"t must be positive, got {t}")
    return 1 / np.sqrt(2j * np.pi * t) * np.exp(-np.asarray(y) ** 2 / (2j * t))


def ho_green(y, t: float, k: float):
    """``sqrt(sqrt(k) / (2 pi i sin(sqrt(k) t))) exp(i sqrt(k) y^2 / (2 tan(sqrt(k) t)))``."""
    _check_ho_range(t, k)
    return np.sqrt(_sin_ratio(k, t) / (2j * np.pi)) * np.exp(0.5j * _cot_ratio(k, t) * np.asarray(y) ** 2)


def _window_t(f: PhaseFunction, t: float | None) -> float:
    grid = f.grid
    if t is None:
        return grid.t_window
    if not np.isclose(t, grid.t_window, rtol=1e-12, atol=0):
        raise PhaseFeynError(f"t={t} differs from the grid window {grid.t_window}")
    return float(t)


def free_t_transform(f: PhaseFunction, y: float, t: float | None = None) -> complex:
    """Generating functional of the free phase-space integrand, written out.

    ``(2 pi i t)^{-1/2} exp(-(y + int_0^t (f_x + f_p))^2 / (2 i t))
    * exp(-1/2 (int_out (f_x^2 + f_p^2) + i int_in f_x^2 + 2i int_in f_x f_p))``
    """
    t = _window_t(f, t)
    grid = f.grid
    win, w = grid.window, grid.weights
    out = ~win
    src = np.sum((f.x + f.p)[win] * w[win])
    quad = (np.sum((f.x ** 2 + f.p ** 2)[out] * w[out])
            + 1j * np.sum((f.x ** 2)[win] * w[win])
            + 2j * np.sum((f.x * f.p)[win] * w[win]))
    pref = 1 / np.sqrt(2j * np.pi * t)
    return complex(pref * np.exp(-(y + src) ** 2 / (2j * t) - 0.5 * quad))


@lru_cache(maxsize=16)
def _ho_window_operators(grid: TimeGrid, k: float) -> tuple[np.ndarray, np.ndarray]:
    """``(A, (kA - 1)^{-1})`` restricted to the window cells."""
    s = grid.centers[grid.window]
    A = a_kernel(s[:, None], s[None, :], grid.t_window) * grid.dt
    R = np.linalg.inv(k * A - np.eye(s.size))
    A.setflags(write=False)
    R.setflags(write=False)
    return A, R


def ho_t_transform(f: PhaseFunction, y: float, t: float | None, k: float) -> complex:
    """Oscillator generating functional from the resolvent ``(kA - 1)^{-1}``.

    Prefactor and pinning coefficient are the closed forms in ``sin`` and
    ``tan``; only the resolvent acting on ``f`` is discretized.
    """
    t = _window_t(f, t)
    _check_ho_range(t, k)
    grid = f.grid
    win, w = grid.window, grid.weights
    out = ~win
    dw = w[win]
    A, R = _ho_window_operators(grid, float(k))
    fx, fp = f.x[win], f.p[win]
    # (eta, N^-1 f) = i (1, (1 - kA)^-1 (f_x + f_p))
    src = -np.sum((R @ (fx + fp)) * dw)
    q_out = np.sum((f.x ** 2 + f.p ** 2)[out] * w[out])
    Rx, Rp = R @ fx, R @ fp
    q_in = np.sum((fx * (-1j * Rx - 1j * Rp) + fp * (-1j * Rx - 1j * k * (A @ Rp))) * dw)
    pref = np.sqrt(_sin_ratio(k, t) / (2j * np.pi))
    pin = -_cot_ratio(k, t) / 2j * (y + src) ** 2
    return complex(pref * np.exp(pin - 0.5 * q_out - 0.5 * q_in))


def short_time_kernel(eps: float, k: float) -> GaussianKernel1D:
    """Free slice kernel with the symmetric (midpoint) potential factor."""
    a = 0.5j / eps - 0.25j * eps * k
    return GaussianKernel1D(1 / np.sqrt(2j * np.pi * eps), a, -1j / eps, a)


def slice_matrix(eps: float, k: float) -> np.ndarray:
    """Transfer matrix ``[[A, B], [C, D]]`` of :func:`short_time_kernel`.

    A kernel ``(2 pi i B)^{-1/2} exp(i (A y0^2 - 2 y y0 + D y^2) / (2B))`` is
    fixed by its matrix, and folding two such kernels with
    :func:`complex_gauss_integral` yields the kernel of the matrix product.
    Multiplying matrices avoids the cancellation in the ``1/eps``-sized
    coefficients, whose relative error otherwise grows like ``n_slices**2``.
    """
    kick = np.array([[1.0, 0.0], [-0.5 * k * eps, 1.0]])
    drift = np.array([[1.0, eps], [0.0, 1.0]])
    return kick @ drift @ kick


def kernel_from_matrix(M: np.ndarray) -> GaussianKernel1D:
    (A, B), (_, D) = M
    if not B > 0:
        raise GaussianPreconditionError(f"transfer matrix has B={B} <= 0 (caustic)")
    return GaussianKernel1D(1 / np.sqrt(2j * np.pi * B), 0.5j * D / B, -1j / B, 0.5j * A / B)


def time_slice_kernel(t: float, k: float, n_slices: int) -> GaussianKernel1D:
    if n_slices < 1:
        raise PhaseFeynError(f"n_slices must be >= 1, got {n_slices}")
    _check_ho_range(t, k)
    return kernel_from_matrix(np.linalg.matrix_power(slice_matrix(t / n_slices, k), n_slices))


def time_slice_oracle(y: float, t: float, k: float, n_slices: int) -> complex:
    """Green's function from ``n_slices`` composed short-time kernels (y0 = 0)."""
    return complex(time_slice_kernel(t, k, n_slices)(y, 0.0))


def schrodinger_residual(which: str, y_grid, t_grid, k: float = 0.0,
                         h_y: float = 1e-3, h_t: float = 1e-3,
                         potential_sign: float = 1.0) -> float:
    """Max relative residual of ``i G_t + G_yy / 2 - k y^2 G / 2`` by central differences.

    ``potential_sign=-1`` flips the potential term (a negative control).
    """
    if which == "free":
        G, k = free_green, 0.0
    elif which == "ho":
        def G(y, t):
            return ho_green(y, t, k)
    else:
        raise PhaseFeynError(f"which must be 'free' or 'ho', got {which!r}")
    y = np.asarray(y_grid, dtype=float)[:, None]
    t = np.asarray(t_grid, dtype=float)[None, :]
    if np.any(t < 0.1):
        raise PhaseFeynError("residual needs t >= 0.1")
    g0 = np.vectorize(G)(y, t)
    gt = (np.vectorize(G)(y, t + h_t) - np.vectorize(G)(y, t - h_t)) / (2 * h_t)
    gyy = (np.vectorize(G)(y + h_y, t) - 2 * g0 + np.vectorize(G)(y - h_y, t)) / h_y ** 2
    res = 1j * gt + 0.5 * gyy - potential_sign * 0.5 * k * y ** 2 * g0
    return float(np.max(np.abs(res) / np.maximum(np.abs(gt), 1e-30)))


def compose_check(t1: float, t2: float, k: float, y0: float, y: float) -> tuple[complex, complex]:
    """``(int G(y, t2; z) G(z, t1; y0) dz, G(y, t1 + t2; y0))``."""
    kern = free_kernel if k == 0 else (lambda t: mehler_kernel(t, k))
    _check_ho_range(t1 + t2, k)
    first, second = kern(t1), kern(t2)
    alpha = second.c + first.a
    beta = second.b * y + first.b * y0
    composed = (second.amplitude * first.amplitude
                * np.exp(second.a * y ** 2 + first.c * y0 ** 2)
                * complex_gauss_integral(alpha, beta))
    return complex(composed), complex(kern(t1 + t2)(y, y0))
