"""2x2 block operators on sampled phase-space functions.

A block is either a 1-D array (a multiplication operator, i.e. a diagonal
matrix) or a dense ``m x m`` matrix acting on cell samples, so integral
operators carry their quadrature weights inside the matrix entries.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from typing import Literal

import numpy as np
from scipy import special

from .errors import (
    GridMismatchError,
    IllConditionedError,
    PhaseFeynError,
    VanishingDeterminantError,
)
from .grid import PhaseFunction, TimeGrid

logger = logging.getLogger(__name__)

BLOCK_NAMES = ("xx", "xp", "px", "pp")
DEFAULT_MAX_CONDITION = 1e10


def _as_dense(block: np.ndarray) -> np.ndarray:
    return np.diag(block) if block.ndim == 1 else block


def _add(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if a.ndim == b.ndim:
        return a + b
    return _as_dense(a) + _as_dense(b)


def _matvec(block: np.ndarray, v: np.ndarray) -> np.ndarray:
    return block * v if block.ndim == 1 else block @ v


@dataclass(frozen=True, eq=False)
class BlockOperator:
    """Operator ``[[xx, xp], [px, pp]]`` on ``(f_x, f_p)`` stacks.

    ``kind`` and ``k`` record provenance (``"free_K"``, ``"A"``, ``"ho_L"``,
    ``"N"``, ...) so closed-form routines can check what they were handed.
    """

    grid: TimeGrid
    xx: np.ndarray
    xp: np.ndarray
    px: np.ndarray
    pp: np.ndarray
    symmetric: bool = False
    kind: str = "generic"
    k: float | None = None

    def __post_init__(self):
        m = self.grid.m
        for name in BLOCK_NAMES:
            b = np.asarray(getattr(self, name), dtype=complex)
            if b.shape not in ((m,), (m, m)):
                raise PhaseFeynError(f"block {name} has shape {b.shape}, expected ({m},) or ({m}, {m})")
            b.setflags(write=False)
            object.__setattr__(self, name, b)

    @classmethod
    def identity(cls, grid: TimeGrid) -> "BlockOperator":
        one, zero = np.ones(grid.m), np.zeros(grid.m)
        return cls(grid, one, zero, zero, one, symmetric=True, kind="Id")

    @classmethod
    def zero(cls, grid: TimeGrid) -> "BlockOperator":
        z = np.zeros(grid.m)
        return cls(grid, z, z, z, z, symmetric=True, kind="zero", k=0.0)

    @classmethod
    def from_dense(cls, grid: TimeGrid, mat: np.ndarray, **kw) -> "BlockOperator":
        m = grid.m
        return cls(grid, mat[:m, :m], mat[:m, m:], mat[m:, :m], mat[m:, m:], **kw)

    @property
    def blocks(self) -> tuple[np.ndarray, ...]:
        return (self.xx, self.xp, self.px, self.pp)

    @property
    def is_diagonal(self) -> bool:
        return all(b.ndim == 1 for b in self.blocks)

    @property
    def is_zero(self) -> bool:
        return not any(np.any(b) for b in self.blocks)

    def dense(self) -> np.ndarray:
        return np.block([[_as_dense(self.xx), _as_dense(self.xp)],
                         [_as_dense(self.px), _as_dense(self.pp)]])

    def apply(self, f: PhaseFunction) -> PhaseFunction:
        if f.grid != self.grid:
            raise GridMismatchError("operator and function live on different grids")
        x = _matvec(self.xx, f.x) + _matvec(self.xp, f.p)
        p = _matvec(self.px, f.x) + _matvec(self.pp, f.p)
        return PhaseFunction(self.grid, x, p)

    __call__ = apply

    def __add__(self, other: "BlockOperator") -> "BlockOperator":
        if other.grid != self.grid:
            raise GridMismatchError("cannot add operators on different grids")
        blocks = [_add(a, b) for a, b in zip(self.blocks, other.blocks)]
        return BlockOperator(self.grid, *blocks, symmetric=self.symmetric and other.symmetric)

    def check_symmetric(self, tol: float = 1e-12) -> bool:
        """Bilinear symmetry: ``pair(f, B g) == pair(B f, g)`` for all f, g."""
        scale = max(1.0, max(float(np.max(np.abs(b))) for b in self.blocks))

        def close(a, b):
            if a.ndim == b.ndim == 1:
                return np.max(np.abs(a - b)) <= tol * scale
            return np.max(np.abs(_as_dense(a) - _as_dense(b).T)) <= tol * scale

        return close(self.xx, self.xx) and close(self.pp, self.pp) and close(self.xp, self.px)

    def to_csv(self, path) -> None:
        """Dump every nonzero block entry as ``block,row,col,re,im``."""

        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["block", "row", "col", "re", "im"])
            for name, b in zip(BLOCK_NAMES, self.blocks):
                d = _as_dense(b)
                for i, j in zip(*np.nonzero(d)):
                    w.writerow([name, int(i), int(j), repr(float(d[i, j].real)), repr(float(d[i, j].imag))])


def make_K_free(grid: TimeGrid) -> BlockOperator:
    """Kinetic block matrix of the free phase-space integrand.

    Multiplication operators ``-1``, ``-i``, ``-i``, ``-(1-i)`` times the
    window indicator.
    """
    w = grid.window.astype(float)
    return BlockOperator(grid, -w, -1j * w, -1j * w, -(1 - 1j) * w,
                         symmetric=True, kind="free_K")


def a_kernel(s: np.ndarray, r: np.ndarray, t: float) -> np.ndarray:
    """Kernel of ``f -> int_s^t int_0^tau f(r) dr dtau`` on ``[0, t)``."""
    return t - np.maximum(s, r)


def make_A(grid: TimeGrid) -> BlockOperator:
    s = grid.centers
    win = grid.window
    a = a_kernel(s[:, None], s[None, :], grid.t_window) * grid.dt
    a[~win, :] = 0.0
    a[:, ~win] = 0.0
    z = np.zeros(grid.m)
    return BlockOperator(grid, a, z, z, z, symmetric=True, kind="A")


def make_L_ho(grid: TimeGrid, k: float, A: BlockOperator | None = None) -> BlockOperator:
    """Potential block ``[[i k A, 0], [0, 0]]`` of the harmonic oscillator."""
    if k < 0:
        raise PhaseFeynError(f"spring constant must be >= 0, got {k}")
    if A is None:
        A = make_A(grid)
    z = np.zeros(grid.m)
    return BlockOperator(grid, 1j * k * A.xx, z, z, z, symmetric=True, kind="ho_L", k=float(k))


def assemble_N(K: BlockOperator, L: BlockOperator) -> BlockOperator:
    if K.grid != L.grid:
        raise GridMismatchError("K and L live on different grids")
    N = BlockOperator.identity(K.grid) + K + L
    return BlockOperator(N.grid, *N.blocks, symmetric=K.symmetric and L.symmetric,
                         kind="N", k=L.k)


def invert_N(N: BlockOperator, max_condition: float = DEFAULT_MAX_CONDITION) -> BlockOperator:
    """Invert a block operator, refusing ill-conditioned input.

    Multiplication operators are inverted cell by cell as 2x2 matrices;
    anything else goes through a dense solve of the stacked ``2m`` system.
    """
    grid = N.grid
    if N.is_diagonal:
        a, b, c, d = N.blocks
        det = a * d - b * c
        with np.errstate(divide="ignore", invalid="ignore"):
            inv = (d / det, -b / det, -c / det, a / det)
            norm = np.maximum(np.abs(a) + np.abs(c), np.abs(b) + np.abs(d))
            norm_inv = np.maximum(np.abs(inv[0]) + np.abs(inv[2]), np.abs(inv[1]) + np.abs(inv[3]))
            cond = float(np.max(norm * norm_inv))
        if not np.isfinite(cond) or cond > max_condition:
            raise IllConditionedError(f"operator is singular or ill-conditioned (cond_1 ~ {cond:.3e})", cond)
        return BlockOperator(grid, *inv, symmetric=N.symmetric, kind="N_inv", k=N.k)

    mat = N.dense()
    try:
        inv = np.linalg.inv(mat)
    except np.linalg.LinAlgError as exc:
        raise IllConditionedError(f"operator is singular: {exc}") from exc
    cond = float(np.linalg.norm(mat, 1) * np.linalg.norm(inv, 1))
    if not np.isfinite(cond) or cond > max_condition:
        raise IllConditionedError(f"operator is ill-conditioned (cond_1 ~ {cond:.3e})", cond)
    resid = float(np.max(np.abs(mat @ inv - np.eye(mat.shape[0]))))
    if resid >= 1e-8:
        raise IllConditionedError(f"inverse residual {resid:.3e} exceeds 1e-8 (cond_1 ~ {cond:.3e})", cond)
    logger.debug("inverted %d x %d operator, cond_1=%.3e", *mat.shape, cond)
    return BlockOperator.from_dense(grid, inv, symmetric=N.symmetric, kind="N_inv", k=N.k)


@dataclass(frozen=True, eq=False)
class SpectrumResult:
    eigenvalues: np.ndarray
    eigenfunctions: np.ndarray  # (n_modes, m), zero outside the window
    n_modes: int


def spectrum_A(grid: TimeGrid, k: float, n_modes: int) -> SpectrumResult:
    """Leading eigenpairs of ``k A`` restricted to the window.

    Eigenfunctions are normalized in midpoint-quadrature L2 and signed so
    that they are positive at the left end of the window.
    """
    if k < 0:
        raise PhaseFeynError(f"spring constant must be >= 0, got {k}")
    n_win = grid.n_window
    if n_modes < 1 or n_modes > n_win // 4:
        raise PhaseFeynError(f"n_modes={n_modes} not resolvable on {n_win} window cells (max {n_win // 4})")
    s = grid.centers[grid.window]
    a = a_kernel(s[:, None], s[None, :], grid.t_window)
    # symmetric weighting sqrt(w) a sqrt(w); uniform weights make this a * dt
    sw = np.sqrt(grid.weights[grid.window])
    vals, vecs = np.linalg.eigh(sw[:, None] * a * sw[None, :])
    order = np.argsort(vals)[::-1][:n_modes]
    vals, vecs = vals[order], vecs[:, order]
    funcs = np.zeros((n_modes, grid.m))
    funcs[:, grid.window] = (vecs / sw[:, None]).T
    funcs *= np.sign(funcs[:, [np.argmax(grid.window)]])
    return SpectrumResult(k * vals, funcs, n_modes)


def ho_eigenvalues(k: float, t: float, n: int) -> np.ndarray:
    """Analytic nonzero eigenvalues ``k (t / ((j - 1/2) pi))**2``, j = 1..n."""
    j = np.arange(1, n + 1)
    return k * (t / ((j - 0.5) * np.pi)) ** 2


def product_tail(k: float, t: float, n: int) -> float:
    """``prod_{j>n} (1 - l_j)`` to first order, ``exp(-sum_{j>n} l_j)``.

    The tail sum is ``k t^2 / pi^2 * psi_1(n + 1/2)`` (trigamma).
    """
    return float(np.exp(-k * t ** 2 / np.pi ** 2 * special.polygamma(1, n + 0.5)))


def tan_series(k: float, t: float, n: int) -> float:
    """Partial sum ``sum_{j<=n} 2t / ((j-1/2)^2 pi^2 - k t^2)``; tends to tan(sqrt(k) t)/sqrt(k)."""
    j = np.arange(1, n + 1)
    return float(np.sum(2 * t / (((j - 0.5) * np.pi) ** 2 - k * t ** 2)))


def fredholm_det(K: BlockOperator, L: BlockOperator,
                 method: Literal["product", "dense"] = "dense",
                 n_modes: int = 10_000) -> complex:
    """``det(Id + L (Id + K)^{-1})``.

    ``product`` multiplies ``1 - l_n`` over the analytic spectrum of ``k A``
    and appends the trigamma tail estimate; it needs an oscillator ``L``.
    ``dense`` takes the determinant of the discretized ``2m x 2m`` matrix.
    """
    if K.grid != L.grid:
        raise GridMismatchError("K and L live on different grids")
    grid = K.grid
    if L.is_zero:
        return 1.0 + 0.0j
    if method == "product":
        if L.kind != "ho_L" or L.k is None:
            raise PhaseFeynError("product method needs an oscillator potential block L")
        t = grid.t_window
        det = complex(np.prod(1.0 - ho_eigenvalues(L.k, t, n_modes)) * product_tail(L.k, t, n_modes))
    elif method == "dense":
        inv = invert_N(BlockOperator.identity(grid) + K).dense()
        mat = L.dense() @ inv
        sw = np.sqrt(np.concatenate([grid.weights, grid.weights]))
        mat = sw[:, None] * mat / sw[None, :]
        sign, logabs = np.linalg.slogdet(np.eye(mat.shape[0]) + mat)
        det = complex(sign * np.exp(logabs))
    else:
        raise PhaseFeynError(f"unknown determinant method {method!r}")
    if abs(det) < 1e-8:
        k = L.k if L.k is not None else float("nan")
        raise VanishingDeterminantError(
            f"Fredholm determinant {det:.3e} vanishes; t={grid.t_window} at or beyond "
            f"pi/(2 sqrt(k)) = {np.pi / (2 * np.sqrt(k)) if k and k > 0 else float('inf'):.6g}")
    return det
