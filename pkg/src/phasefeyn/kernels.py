"""Generalized Gauss kernels with Donsker-delta pinnings and their T-transforms.

The master closed form for

    Nexp(-1/2 <.,K.>) * exp(-1/2 <.,L.>) * exp(i<.,g>) * prod_j delta(<.,eta_j> - y_j)

is

    T(f) = (2 pi)^{-J/2} det(M)^{-1/2} det(Id + L(Id+K)^{-1})^{-1/2}
           * exp(-1/2 (f+g, N^{-1}(f+g))) * exp(+1/2 u^T M^{-1} u)

with ``N = Id + K + L``, ``M_ij = (eta_i, N^{-1} eta_j)`` and
``u_j = i y_j + (eta_j, N^{-1}(f+g))``.  The sign of the last exponent is
what the Fourier representation of the delta produces; it reduces to the
Donsker formula for ``K = L = 0`` and to the free propagator
``exp(-y^2 / (2 i t))``.  All square roots use the principal branch.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import (
    GramConditionError,
    GridMismatchError,
    PhaseFeynError,
)
from .grid import PhaseFunction, TimeGrid, bilinear_pair, indicator
from .operators import (
    BlockOperator,
    assemble_N,
    fredholm_det,
    invert_N,
    make_K_free,
    make_L_ho,
)

MAX_PINNINGS = 8
GRAM_POSITIVE = "re_positive"
GRAM_IMAGINARY = "re_zero_im_nonzero"
GRAM_VIOLATED = "violated"


@dataclass(frozen=True, eq=False)
class GaussKernelSpec:
    """Integrand descriptor: ``K``, ``L``, source ``g`` and pinnings ``(eta_j, y_j)``."""

    K: BlockOperator
    L: BlockOperator
    g: PhaseFunction | None = None
    pinnings: tuple[tuple[PhaseFunction, float], ...] = field(default_factory=tuple)

    def __post_init__(self):
        grid = self.K.grid
        if self.L.grid != grid:
            raise GridMismatchError("K and L live on different grids")
        g = self.g if self.g is not None else PhaseFunction.zeros(grid)
        if g.grid != grid:
            raise GridMismatchError("source g lives on a different grid")
        object.__setattr__(self, "g", g)
        pins = tuple((eta, float(y)) for eta, y in self.pinnings)
        if len(pins) > MAX_PINNINGS:
            raise PhaseFeynError(f"at most {MAX_PINNINGS} pinnings supported, got {len(pins)}")
        for i, (eta, _) in enumerate(pins):
            if eta.grid != grid:
                raise GridMismatchError(f"pinning {i} lives on a different grid")
            if not eta.is_real:
                raise PhaseFeynError(f"pinning function {i} must be real")
            if bilinear_pair(eta, eta).real <= 0:
                raise PhaseFeynError(f"pinning function {i} is zero")
            for j in range(i):
                ov = bilinear_pair(eta, pins[j][0])
                if abs(ov) > 1e-10:
                    raise PhaseFeynError(f"pinnings {j} and {i} are not orthogonal (overlap {abs(ov):.3e})")
        object.__setattr__(self, "pinnings", pins)

    @property
    def grid(self) -> TimeGrid:
        return self.K.grid

    @property
    def J(self) -> int:
        return len(self.pinnings)

    @property
    def etas(self) -> list[PhaseFunction]:
        return [eta for eta, _ in self.pinnings]

    @property
    def ys(self) -> np.ndarray:
        return np.array([y for _, y in self.pinnings], dtype=float)

    @cached_property
    def N(self) -> BlockOperator:
        N = assemble_N(self.K, self.L)
        # u and the moment formulas assume (eta, N^-1 v) == (N^-1 eta, v)
        if not N.check_symmetric():
            raise PhaseFeynError("N = Id + K + L must be symmetric under the bilinear pairing")
        return N

    @cached_property
    def N_inv(self) -> BlockOperator:
        return invert_N(self.N)

    @cached_property
    def det(self) -> complex:
        return fredholm_det(self.K, self.L, "dense")

    @cached_property
    def det_factor(self) -> complex:
        return complex(1.0 / np.sqrt(complex(self.det)))

    @cached_property
    def N_inv_etas(self) -> list[PhaseFunction]:
        return [self.N_inv(eta) for eta in self.etas]

    @cached_property
    def gram(self) -> np.ndarray:
        J = self.J
        M = np.empty((J, J), dtype=complex)
        for i, eta in enumerate(self.etas):
            for j, neta in enumerate(self.N_inv_etas):
                M[i, j] = bilinear_pair(eta, neta)
        return M

    @cached_property
    def gram_class(self) -> str:
        return classify_gram(self.gram)

    def eta_pairings(self, v: PhaseFunction) -> np.ndarray:
        """Vector ``((eta_j, N^{-1} v))_j``."""
        nv = self.N_inv(v)
        return np.array([bilinear_pair(eta, nv) for eta in self.etas], dtype=complex)

    def _share_caches(self, other: "GaussKernelSpec") -> "GaussKernelSpec":
        # everything cached depends on K, L and the etas only; compute once here
        self.gram_class, self.det_factor
        for name in ("N", "N_inv", "det", "det_factor", "N_inv_etas", "gram", "gram_class"):
            if name in self.__dict__:
                other.__dict__[name] = self.__dict__[name]
        return other

    def with_source(self, g: PhaseFunction) -> "GaussKernelSpec":
        return self._share_caches(GaussKernelSpec(self.K, self.L, g, self.pinnings))

    def with_targets(self, ys) -> "GaussKernelSpec":
        """Same kernel and pinning functions, new pinning values ``y_j``."""
        ys = np.atleast_1d(np.asarray(ys, dtype=float))
        if ys.shape != (self.J,):
            raise PhaseFeynError(f"expected {self.J} pinning values, got {ys.shape}")
        pins = tuple((eta, y) for eta, y in zip(self.etas, ys))
        return self._share_caches(GaussKernelSpec(self.K, self.L, self.g, pins))

    @classmethod
    def free(cls, grid: TimeGrid, y: float) -> "GaussKernelSpec":
        """Free phase-space integrand pinned to ``x(t) = y``."""
        return cls(make_K_free(grid), BlockOperator.zero(grid), None,
                   ((indicator(grid, 0.0, grid.t_window, "x"), y),))

    @classmethod
    def harmonic(cls, grid: TimeGrid, k: float, y: float) -> "GaussKernelSpec":
        return cls(make_K_free(grid), make_L_ho(grid, k), None,
                   ((indicator(grid, 0.0, grid.t_window, "x"), y),))


def classify_gram(M: np.ndarray, tol: float = 1e-10) -> str:
    """Which integrability assumption the Gram matrix satisfies.

    Either ``Re M`` is positive definite, or ``Re M = 0`` with ``Im M != 0``;
    otherwise the pinning integral is not defined.
    """
    if M.size == 0:
        return GRAM_POSITIVE
    scale = max(1.0, float(np.max(np.abs(M))))
    re = 0.5 * (M.real + M.real.T)
    im = 0.5 * (M.imag + M.imag.T)
    if np.max(np.abs(re)) <= tol * scale:
        return GRAM_IMAGINARY if np.max(np.abs(im)) > tol * scale else GRAM_VIOLATED
    if np.min(np.linalg.eigvalsh(re)) > -tol * scale:
        return GRAM_POSITIVE
    return GRAM_VIOLATED


def pinning_gram(spec: GaussKernelSpec) -> tuple[np.ndarray, str]:
    return spec.gram, spec.gram_class


@dataclass(frozen=True)
class TTransformResult:
    value: complex
    det_factor: complex
    gram: np.ndarray
    u: np.ndarray
    quad_form: complex
    pin_prefactor: complex = 1.0
    pin_exponent: complex = 0.0

    def reassemble(self) -> complex:
        return complex(self.det_factor * self.pin_prefactor
                       * np.exp(self.quad_form + self.pin_exponent))

    def to_json(self) -> dict:
        def cplx(z):
            return [float(np.real(z)), float(np.imag(z))]
        return {
            "value_re": float(self.value.real),
            "value_im": float(self.value.imag),
            "det_factor": cplx(self.det_factor),
            "gram": [cplx(z) for z in np.ravel(self.gram)],
            "gram_shape": list(np.shape(self.gram)),
            "u": [cplx(z) for z in self.u],
            "quad_form": cplx(self.quad_form),
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True)


def master_t_transform(spec: GaussKernelSpec, f: PhaseFunction) -> TTransformResult:
    if f.grid != spec.grid:
        raise GridMismatchError("argument lives on a different grid than the spec")
    if spec.gram_class == GRAM_VIOLATED:
        raise GramConditionError(f"pinning Gram matrix violates the integrability assumption: {spec.gram}")
    w = f + spec.g
    quad = -0.5 * bilinear_pair(w, spec.N_inv(w))
    det_factor = spec.det_factor
    M = spec.gram
    J = spec.J
    if J:
        u = 1j * spec.ys + spec.eta_pairings(w)
        pin_pref = complex((2 * np.pi) ** (-J / 2) / np.sqrt(complex(np.linalg.det(M))))
        pin_exp = complex(0.5 * u @ np.linalg.solve(M, u))
    else:
        u = np.zeros(0, dtype=complex)
        pin_pref, pin_exp = 1.0 + 0j, 0j
    value = complex(det_factor * pin_pref * np.exp(quad + pin_exp))
    return TTransformResult(value, det_factor, M, u, complex(quad), pin_pref, pin_exp)


def donsker_t_transform(eta: PhaseFunction, x: float, f: PhaseFunction) -> complex:
    """T-transform of Donsker's delta ``delta_x(<eta, .>)`` at ``f``."""
    if not eta.is_real:
        raise PhaseFeynError("eta must be real")
    nn = bilinear_pair(eta, eta).real
    if nn <= 0:
        raise PhaseFeynError("eta must be nonzero")
    ef = bilinear_pair(eta, f)
    return complex((2 * np.pi * nn) ** -0.5
                   * np.exp(-(1j * ef - x) ** 2 / (2 * nn) - 0.5 * bilinear_pair(f, f)))


def nexp_t_transform(K: BlockOperator, f: PhaseFunction) -> complex:
    """``exp(-1/2 <f, (Id+K)^{-1} f>)``: the normalized exponential."""
    mat = (BlockOperator.identity(K.grid) + K).dense()
    v = f.stack()
    w = np.concatenate([K.grid.weights, K.grid.weights])
    try:
        sol = np.linalg.solve(mat, v)
    except np.linalg.LinAlgError as exc:
        raise PhaseFeynError(f"Id + K is singular: {exc}") from exc
    return complex(np.exp(-0.5 * np.sum(v * sol * w)))


def pointprod_t_transform(K: BlockOperator, L: BlockOperator, f: PhaseFunction) -> complex:
    """``Nexp(-1/2<.,K.>) exp(-1/2<.,L.>)`` at ``f``, without pinning."""
    det = fredholm_det(K, L, "dense")
    mat = (BlockOperator.identity(K.grid) + K + L).dense()
    v = f.stack()
    w = np.concatenate([K.grid.weights, K.grid.weights])
    sol = np.linalg.solve(mat, v)
    return complex(np.exp(-0.5 * np.sum(v * sol * w)) / np.sqrt(complex(det)))


def gaussian_quadratic_expectation(K: np.ndarray) -> float:
    """``E exp(-w^T K w) = det(Id + 2K)^{-1/2}`` for standard normal ``w``.

    ``K`` must be real symmetric with spectrum in ``(-1/2, 0]``.
    """
    K = np.asarray(K, dtype=float)
    if K.ndim != 2 or K.shape[0] != K.shape[1] or not np.allclose(K, K.T, atol=1e-12):
        raise PhaseFeynError("K must be a real symmetric matrix")
    ev = np.linalg.eigvalsh(K)
    if ev.min() <= -0.5 or ev.max() > 1e-12:
        raise PhaseFeynError(f"eigenvalues must lie in (-1/2, 0], got [{ev.min():.4g}, {ev.max():.4g}]")
    return float(np.prod(1.0 + 2.0 * ev) ** -0.5)


@dataclass(frozen=True)
class ExponentCoefficients:
    """``T(z f) = exp(quadratic * z**2 + linear * z + constant)``."""

    quadratic: complex
    linear: complex
    constant: complex

    def log_bound(self, z: np.ndarray) -> np.ndarray:
        """Upper bound for ``log |T(z f)|`` via ``|Re(q z^2 + l z)| <= |q||z|^2 + |l||z|``."""
        r = np.abs(z)
        return self.constant.real + abs(self.quadratic) * r ** 2 + abs(self.linear) * r

    def growth_constants(self, norm_sq: float) -> tuple[float, float]:
        """Constants ``(K, C)`` with ``|T(z f)| <= K exp(C |z|^2 ||f||^2)``."""
        q, l = abs(self.quadratic), abs(self.linear)
        if q == 0:
            q = max(l, 1e-300)
        Kc = float(np.exp(self.constant.real + l ** 2 / (4 * q)))
        return Kc, 2 * q / norm_sq


def exponent_coefficients(spec: GaussKernelSpec, f: PhaseFunction) -> ExponentCoefficients:
    """Exact coefficients of the exponent of ``z -> T(z f)`` as a polynomial in z."""
    g = spec.g
    Nf, Ng = spec.N_inv(f), spec.N_inv(g)
    q = -0.5 * bilinear_pair(f, Nf)
    l = -bilinear_pair(f, Ng)
    c = -0.5 * bilinear_pair(g, Ng)
    if spec.J:
        b = np.array([bilinear_pair(eta, Nf) for eta in spec.etas])
        u0 = 1j * spec.ys + np.array([bilinear_pair(eta, Ng) for eta in spec.etas])
        Mi = np.linalg.inv(spec.gram)
        q += 0.5 * b @ Mi @ b
        l += b @ Mi @ u0
        c += 0.5 * u0 @ Mi @ u0
        c += np.log((2 * np.pi) ** (-spec.J / 2) / np.sqrt(complex(np.linalg.det(spec.gram))))
    c += np.log(spec.det_factor)
    return ExponentCoefficients(complex(q), complex(l), complex(c))

