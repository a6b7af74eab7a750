"""Uniform time grids and two-channel (position, momentum) test functions.

Everything is sampled at cell centers and integrated with the midpoint rule.
A cell belongs to an interval ``[a, b)`` iff its center does.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np

from .errors import GridMismatchError, PhaseFeynError

CHANNELS = ("x", "p")


@dataclass(frozen=True)
class TimeGrid:
    """Midpoint grid on ``[0, t_total]`` with a window ``[0, t_window)``.

    ``t_window`` is the propagation time ``t``; the remainder of the grid
    carries the part of a test function supported outside the window.
    """

    t_window: float
    t_total: float
    m: int

    def __post_init__(self):
        if not self.t_window > 0:
            raise PhaseFeynError(f"t_window must be positive, got {self.t_window}")
        if self.t_window > self.t_total:
            raise PhaseFeynError(
                f"t_window={self.t_window} exceeds t_total={self.t_total}")
        if int(self.m) != self.m or self.m < 2:
            raise PhaseFeynError(f"need an integer m >= 2, got {self.m}")

    @property
    def dt(self) -> float:
        return self.t_total / self.m

    @cached_property
    def centers(self) -> np.ndarray:
        c = (np.arange(self.m) + 0.5) * self.dt
        c.setflags(write=False)
        return c

    @cached_property
    def weights(self) -> np.ndarray:
        w = np.full(self.m, self.dt)
        w.setflags(write=False)
        return w

    @cached_property
    def window(self) -> np.ndarray:
        """Boolean mask of cells whose center lies in ``[0, t_window)``."""
        mask = self.centers < self.t_window
        mask.setflags(write=False)
        return mask

    @property
    def n_window(self) -> int:
        return int(np.count_nonzero(self.window))

    def mask(self, a: float, b: float) -> np.ndarray:
        return (self.centers >= a) & (self.centers < b)


def build_grid(t_window: float, t_total: float, m: int) -> TimeGrid:
    return TimeGrid(float(t_window), float(t_total), int(m))


@dataclass(frozen=True, eq=False)
class PhaseFunction:
    """A pair ``(f_x, f_p)`` of complex samples on a :class:`TimeGrid`."""

    grid: TimeGrid
    x: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        x = np.array(self.x, dtype=complex).reshape(-1)
        p = np.array(self.p, dtype=complex).reshape(-1)
        if x.shape != (self.grid.m,) or p.shape != (self.grid.m,):
            raise PhaseFeynError(
                f"channels must have {self.grid.m} samples, got {x.shape} and {p.shape}")
        x.setflags(write=False)
        p.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "p", p)

    @classmethod
    def zeros(cls, grid: TimeGrid) -> "PhaseFunction":
        return cls(grid, np.zeros(grid.m), np.zeros(grid.m))

    @classmethod
    def from_callables(cls, grid: TimeGrid, fx: Callable | None = None,
                       fp: Callable | None = None) -> "PhaseFunction":
        s = grid.centers
        x = fx(s) if fx is not None else np.zeros(grid.m)
        p = fp(s) if fp is not None else np.zeros(grid.m)
        return cls(grid, np.broadcast_to(x, s.shape), np.broadcast_to(p, s.shape))

    @classmethod
    def from_stack(cls, grid: TimeGrid, v: np.ndarray) -> "PhaseFunction":
        return cls(grid, v[:grid.m], v[grid.m:])

    def stack(self) -> np.ndarray:
        return np.concatenate([self.x, self.p])

    @property
    def is_real(self) -> bool:
        return not (np.any(self.x.imag) or np.any(self.p.imag))

    def _check(self, other: "PhaseFunction"):
        if other.grid != self.grid:
            raise GridMismatchError("phase functions live on different grids")

    def __add__(self, other: "PhaseFunction") -> "PhaseFunction":
        self._check(other)
        return PhaseFunction(self.grid, self.x + other.x, self.p + other.p)

    def __sub__(self, other: "PhaseFunction") -> "PhaseFunction":
        self._check(other)
        return PhaseFunction(self.grid, self.x - other.x, self.p - other.p)

    def __mul__(self, alpha: complex) -> "PhaseFunction":
        return PhaseFunction(self.grid, alpha * self.x, alpha * self.p)

    __rmul__ = __mul__

    def __neg__(self) -> "PhaseFunction":
        return self * -1.0

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["cell_index", "center", "x_re", "x_im", "p_re", "p_im"])
            for j, (c, xv, pv) in enumerate(zip(self.grid.centers, self.x, self.p)):
                writer.writerow([j, repr(float(c)), repr(float(xv.real)), repr(float(xv.imag)),
                                 repr(float(pv.real)), repr(float(pv.imag))])

    @classmethod
    def from_csv(cls, path, grid: TimeGrid) -> "PhaseFunction":
        """Read a function written by :meth:`to_csv`; centers must match ``grid``."""
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        if len(rows) != grid.m:
            raise GridMismatchError(f"file has {len(rows)} cells, grid has {grid.m}")
        centers = np.array([float(r["center"]) for r in rows])
        if not np.allclose(centers, grid.centers, rtol=0, atol=1e-12 * grid.t_total):
            raise GridMismatchError("cell centers in file do not match the grid")
        x = np.array([complex(float(r["x_re"]), float(r["x_im"])) for r in rows])
        p = np.array([complex(float(r["p_re"]), float(r["p_im"])) for r in rows])
        return cls(grid, x, p)


def bilinear_pair(f: PhaseFunction, g: PhaseFunction) -> complex:
    """Midpoint quadrature of ``sum_channels int f g ds`` (no conjugation)."""
    if f.grid != g.grid:
        raise GridMismatchError("cannot pair functions on different grids")
    w = f.grid.weights
    return complex(np.sum(f.x * g.x * w) + np.sum(f.p * g.p * w))


def indicator(grid: TimeGrid, a: float, b: float, channel: str = "x") -> PhaseFunction:
    """``1_[a,b)`` in one channel, zero in the other."""
    if channel not in CHANNELS:
        raise PhaseFeynError(f"channel must be 'x' or 'p', got {channel!r}")
    if not (0 <= a < b <= grid.t_total):
        raise PhaseFeynError(f"need 0 <= a < b <= t_total, got [{a}, {b})")
    v = grid.mask(a, b).astype(float)
    zero = np.zeros(grid.m)
    return PhaseFunction(grid, v, zero) if channel == "x" else PhaseFunction(grid, zero, v)
