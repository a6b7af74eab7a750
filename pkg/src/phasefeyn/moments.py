"""First and second moments of pinned Gauss kernels and the canonical commutator.

Moments come from differentiating the generating functional along a ray,
``T(<k,.>^n Phi)(f) = (-i)^n d^n/dlam^n T Phi(f + lam k) |_{lam=0}``.
With ``w = f + g``, ``b(k)_j = (eta_j, N^{-1} k)`` and ``u`` as in
:func:`~phasefeyn.kernels.master_t_transform` the log-derivatives are

    a(k)    = -(k, N^{-1} w) + b(k)^T M^{-1} u
    c(k, h) = -(k, N^{-1} h) + b(k)^T M^{-1} b(h)

so that ``moment1 = -i T a(k)`` and ``moment2 = -T (a(k) a(h) + c(k, h))``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np

from .errors import PhaseFeynError
from .grid import PhaseFunction, TimeGrid, bilinear_pair, build_grid, indicator
from .kernels import GaussKernelSpec, master_t_transform


def _log_slope(spec: GaussKernelSpec, k: PhaseFunction, w: PhaseFunction,
               u: np.ndarray, b: np.ndarray) -> complex:
    a = -bilinear_pair(k, spec.N_inv(w))
    if spec.J:
        a += b @ np.linalg.solve(spec.gram, u)
    return complex(a)


def _log_curvature(spec: GaussKernelSpec, k: PhaseFunction, h: PhaseFunction,
                   bk: np.ndarray, bh: np.ndarray) -> complex:
    c = -bilinear_pair(k, spec.N_inv(h))
    if spec.J:
        c += bk @ np.linalg.solve(spec.gram, bh)
    return complex(c)


def moment1(spec: GaussKernelSpec, k: PhaseFunction, f: PhaseFunction) -> complex:
    """``T(<k,.> Phi)(f)``."""
    res = master_t_transform(spec, f)
    w = f + spec.g
    a = _log_slope(spec, k, w, res.u, spec.eta_pairings(k))
    return complex(-1j * res.value * a)


def moment2(spec: GaussKernelSpec, k: PhaseFunction, h: PhaseFunction,
            f: PhaseFunction) -> complex:
    """``T(<k,.> <h,.> Phi)(f)``."""
    res = master_t_transform(spec, f)
    w = f + spec.g
    bk, bh = spec.eta_pairings(k), spec.eta_pairings(h)
    ak = _log_slope(spec, k, w, res.u, bk)
    ah = _log_slope(spec, h, w, res.u, bh)
    return complex(-res.value * (ak * ah + _log_curvature(spec, k, h, bk, bh)))


def _check_step(h: float):
    if not 1e-8 <= h <= 1e-2:
        raise PhaseFeynError(f"finite-difference step {h} outside [1e-8, 1e-2]")


def wick_derivative_oracle(spec: GaussKernelSpec, k: PhaseFunction, f: PhaseFunction,
                           order: Literal[1, 2] = 1, h: float = 1e-4,
                           richardson: bool = False) -> complex:
    """``(-i)^n d^n/dlam^n T Phi(f + lam k)`` at 0 by central differences.

    With ``richardson=True`` the steps ``h`` and ``h/2`` are combined to
    cancel the leading ``h^2`` error.
    """
    _check_step(h)
    if order not in (1, 2):
        raise PhaseFeynError(f"order must be 1 or 2, got {order}")

    def T(lam):
        return master_t_transform(spec, f + lam * k).value

    def diff(step):
        if order == 1:
            return (T(step) - T(-step)) / (2 * step)
        return (T(step) - 2 * T(0.0) + T(-step)) / step ** 2

    d = diff(h)
    if richardson:
        d = (4 * diff(h / 2) - d) / 3
    return complex((-1j) ** order * d)


def wick_mixed_oracle(spec: GaussKernelSpec, k: PhaseFunction, h: PhaseFunction,
                      f: PhaseFunction, step: float = 1e-3) -> complex:
    """``-d^2/dlam dmu T Phi(f + lam k + mu h)`` at 0 by a four-point stencil."""
    _check_step(step)

    def T(lam, mu):
        return master_t_transform(spec, f + lam * k + mu * h).value

    d = (T(step, step) - T(step, -step) - T(-step, step) + T(-step, -step)) / (4 * step ** 2)
    return complex(-d)


@dataclass(frozen=True)
class Mollifier:
    """Approximate identity ``psi_n`` of width ``base_width / n``.

    ``gaussian`` uses the width as standard deviation (effective support
    +-6 sigma); ``bump`` is ``exp(-1 / (1 - (x/width)^2))`` on ``|x| < width``;
    ``cell`` puts all mass in the grid cell containing the center, i.e. the
    point evaluation as seen by the grid.
    """

    family: Literal["gaussian", "bump", "cell"] = "gaussian"
    n: int = 1
    base_width: float = 0.01

    def __post_init__(self):
        if self.family not in ("gaussian", "bump", "cell"):
            raise PhaseFeynError(f"unknown mollifier family {self.family!r}")
        if self.n < 1 or not self.base_width > 0:
            raise PhaseFeynError("need n >= 1 and base_width > 0")

    @property
    def width(self) -> float:
        return self.base_width / self.n

    @property
    def reach(self) -> float:
        return {"gaussian": 6 * self.width, "bump": self.width, "cell": 0.0}[self.family]


def smeared_delta(grid: TimeGrid, mollifier: Mollifier, center: float,
                  channel: str = "p") -> PhaseFunction:
    """``psi_n * delta_center`` sampled at cell centers, unit midpoint mass."""
    if channel not in ("x", "p"):
        raise PhaseFeynError(f"channel must be 'x' or 'p', got {channel!r}")
    if center - mollifier.reach < 0 or center + mollifier.reach > grid.t_total:
        raise PhaseFeynError(
            f"mollifier at {center} with reach {mollifier.reach} leaks outside [0, {grid.t_total}]")
    s = grid.centers
    x = (s - center) / mollifier.width
    if mollifier.family == "gaussian":
        v = np.exp(-0.5 * x ** 2)
    elif mollifier.family == "bump":
        v = np.zeros_like(s)
        inside = np.abs(x) < 1
        v[inside] = np.exp(-1.0 / (1.0 - x[inside] ** 2))
    else:
        v = np.zeros_like(s)
        v[min(int(center / grid.dt), grid.m - 1)] = 1.0
    mass = np.sum(v * grid.weights)
    if mass <= 0:
        raise PhaseFeynError("mollifier is not resolved by the grid (zero sampled mass)")
    v = v / mass
    zero = np.zeros(grid.m)
    return PhaseFunction(grid, zero, v) if channel == "p" else PhaseFunction(grid, v, zero)


@dataclass(frozen=True)
class CcrParams:
    """Equal-time commutator setup: momentum at ``s +- epsilon`` against ``x(s)``."""

    s: float
    epsilon: float
    mollifier: Mollifier = field(default_factory=Mollifier)
    y: float = 0.0
    f: PhaseFunction | None = None

    def validate(self, t: float):
        s, eps = self.s, self.epsilon
        if not (0 < s - eps < s < s + eps < t):
            raise PhaseFeynError(f"need 0 < s-eps < s < s+eps < t, got s={s}, eps={eps}, t={t}")
        if self.mollifier.family != "cell" and not self.mollifier.width < eps / 4:
            raise PhaseFeynError(
                f"mollifier width {self.mollifier.width} must be below eps/4 = {eps / 4}")


def ccr_grid(t: float, width: float, m: int | None = None) -> TimeGrid:
    """Grid on ``[0, 5t/4]`` with the window edge on a cell boundary.

    The margin past ``t`` holds mollifier tails near ``s + epsilon ~ t``;
    by default a cell is at most ``width / 8``.
    """
    if m is None:
        m = max(1280, int(np.ceil(10 * t / width)))
    m = 5 * int(np.ceil(m / 5))
    return build_grid(t, 1.25 * t, m)


def ccr_terms(params: CcrParams, t: float, m: int | None = None,
              grid: TimeGrid | None = None) -> tuple[complex, complex]:
    """The two moments ``T(<psi^{+-}, .> <(1_[0,s), 0), .> I_0)(f)`` for ``+`` and ``-``."""
    params.validate(t)
    if grid is None:
        w = params.mollifier.width if params.mollifier.family != "cell" else params.epsilon
        grid = ccr_grid(t, w, m)
    spec = GaussKernelSpec.free(grid, params.y)
    f = params.f if params.f is not None else PhaseFunction.zeros(grid)
    h = indicator(grid, 0.0, params.s, "x")
    out = []
    for sign in (1, -1):
        k = smeared_delta(grid, params.mollifier, params.s + sign * params.epsilon, "p")
        out.append(moment2(spec, k, h, f))
    return out[0], out[1]


def ccr_difference(params: CcrParams, t: float, m: int | None = None,
                   grid: TimeGrid | None = None) -> complex:
    plus, minus = ccr_terms(params, t, m, grid)
    return plus - minus


def ccr_point_difference(s: float, epsilon: float, t: float, y: float = 0.0,
                         m: int = 1280) -> complex:
    """Commutator difference with momentum evaluated in a single grid cell."""
    params = CcrParams(s, epsilon, Mollifier("cell"), y)
    return ccr_difference(params, t, m=m)


# (epsilon, width) pairs; width / epsilon shrinks so the approach is monotone
DEFAULT_SCHEDULE: tuple[tuple[float, float], ...] = (
    (0.08, 0.08 * 0.24),
    (0.04, 0.04 * 0.20),
    (0.02, 0.02 * 0.16),
    (0.01, 0.01 * 0.12),
)


@dataclass(frozen=True)
class CcrLimit:
    limit: complex
    error: float
    rows: tuple[tuple[float, float, complex], ...]  # (epsilon, width, difference)


def ccr_limit(s: float, t: float, y: float = 0.0,
              schedule: Sequence[tuple[float, float]] = DEFAULT_SCHEDULE,
              family: str = "gaussian", m: int | None = None) -> CcrLimit:
    """Commutator difference along a shrinking ``(epsilon, width)`` schedule.

    The mollified difference approaches its limit faster than any power of
    ``width / epsilon``, so the last schedule point is reported as the
    limit and the last change as the error estimate.
    """
    schedule = [(float(e), float(w)) for e, w in schedule]
    if len(schedule) < 2:
        raise PhaseFeynError("schedule needs at least two points")
    for (e0, w0), (e1, w1) in zip(schedule[:-1], schedule[1:]):
        if not (e1 < e0 and w1 < w0):
            raise PhaseFeynError("schedule must be strictly decreasing in epsilon and width")
    if any(not w < e / 4 for e, w in schedule):
        raise PhaseFeynError("every schedule point needs width < epsilon / 4")
    grid = ccr_grid(t, min(w for _, w in schedule), m)
    rows = []
    for eps, width in schedule:
        params = CcrParams(s, eps, Mollifier(family, 1, width), y)
        rows.append((eps, width, ccr_difference(params, t, grid=grid)))
    limit = rows[-1][2]
    return CcrLimit(limit, float(abs(rows[-1][2] - rows[-2][2])), tuple(rows))
