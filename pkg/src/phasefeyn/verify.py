"""Identity checks run by ``phasefeyn verify``.

Each check compares an observed value with an expected one at a fixed
tolerance and records enough to say exactly what failed.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from . import operators as ops
from .extrapolate import observed_order, richardson
from .grid import PhaseFunction, TimeGrid, build_grid, indicator
from .kernels import (
    GaussKernelSpec,
    donsker_t_transform,
    master_t_transform,
    nexp_t_transform,
    pointprod_t_transform,
)
from .moments import ccr_limit, moment1, moment2, wick_derivative_oracle, wick_mixed_oracle
from .propagators import (
    compose_check,
    free_green,
    free_t_transform,
    ho_green,
    ho_t_transform,
    schrodinger_residual,
    time_slice_oracle,
)


@dataclass
class Check:
    name: str
    module: str
    operation: str
    observed: complex
    expected: complex
    error: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(self.error <= self.tolerance)

    def to_json(self) -> dict:
        d = asdict(self)
        for key in ("observed", "expected"):
            z = complex(d[key])
            d[key] = [z.real, z.imag]
        d["passed"] = self.passed
        return d


def _check(name, module, operation, observed, expected, tol, relative=False) -> Check:
    err = abs(complex(observed) - complex(expected))
    if relative:
        err /= abs(complex(expected))
    return Check(name, module, operation, complex(observed), complex(expected), float(err), tol)


def random_smooth(grid: TimeGrid, rng: np.random.Generator, scale: float = 0.3,
                  n_modes: int = 3) -> PhaseFunction:
    """Random trigonometric polynomial in each channel, smooth on the grid."""
    T = grid.t_total

    def channel():
        c = rng.normal(size=(n_modes, 2)) * scale / np.arange(1, n_modes + 1)[:, None]
        s = grid.centers
        return sum(c[j, 0] * np.cos(np.pi * j * s / T) + c[j, 1] * np.sin(np.pi * (j + 1) * s / T)
                   for j in range(n_modes))

    return PhaseFunction(grid, channel(), channel())


def identities_suite(m: int = 1024, seed: int = 7) -> list[Check]:
    """Cosine product, tangent sum, free inverse, reduction chain."""
    rng = np.random.default_rng(seed)
    out = []
    for k, t in ((0.25, 1.0), (1.0, 1.0), (2.0, 1.0)):
        K = ops.make_K_free(build_grid(t, t, 8))
        L = ops.make_L_ho(K.grid, k)
        out.append(_check(f"cos-product k={k} t={t}", "operators", "fredholm_det",
                          ops.fredholm_det(K, L, "product"), np.cos(np.sqrt(k) * t), 1e-3))
        out.append(_check(f"tan-sum k={k} t={t}", "operators", "tan_series",
                          ops.tan_series(k, t, 10_000), np.tan(np.sqrt(k) * t) / np.sqrt(k), 1e-3))

    grid = build_grid(1.0, 2.0, m)
    Ninv = ops.invert_N(ops.assemble_N(ops.make_K_free(grid), ops.BlockOperator.zero(grid)))
    win = grid.window.astype(float)
    expected = (1 - win + 1j * win, 1j * win, 1j * win, 1 - win)
    err = max(float(np.max(np.abs(b - e))) for b, e in zip(Ninv.blocks, expected))
    out.append(Check("free inverse blocks", "operators", "invert_N", err, 0.0, err, 1e-8))

    small = build_grid(1.0, 1.5, 96)
    free = GaussKernelSpec.free(small, 0.0)
    ho = GaussKernelSpec(ops.make_K_free(small), ops.make_L_ho(small, 1.0))
    zero = ops.BlockOperator.zero(small)
    worst = {"nexp": 0.0, "donsker": 0.0, "pointprod": 0.0}
    for _ in range(10):
        f = random_smooth(small, rng)
        nexp = GaussKernelSpec(free.K, zero)
        worst["nexp"] = max(worst["nexp"], abs(master_t_transform(nexp, f).value
                                               - nexp_t_transform(free.K, f)))
        eta = PhaseFunction(small, rng.normal(size=small.m), np.zeros(small.m))
        y = rng.normal()
        dspec = GaussKernelSpec(zero, zero, None, ((eta, y),))
        worst["donsker"] = max(worst["donsker"], abs(master_t_transform(dspec, f).value
                                                     - donsker_t_transform(eta, y, f)))
        worst["pointprod"] = max(worst["pointprod"], abs(master_t_transform(ho, f).value
                                                         - pointprod_t_transform(ho.K, ho.L, f)))
    for name, err in worst.items():
        out.append(Check(f"reduction master->{name}", "kernels", "master_t_transform",
                         err, 0.0, err, 1e-12))
    return out


def propagators_suite(m: int = 1024, seed: int = 7) -> list[Check]:
    rng = np.random.default_rng(seed)
    out = []
    for n in (1, 7, 100):
        out.append(_check(f"free slicing n={n}", "propagators", "time_slice_oracle",
                          time_slice_oracle(0.8, 1.0, 0.0, n), free_green(0.8, 1.0), 1e-12))
    ns = 2 ** np.arange(4, 11)
    for y, t, k in ((0.0, 0.5, 1.0), (1.0, 1.0, 1.0), (0.5, np.pi / 3, 1.0)):
        vals = [time_slice_oracle(y, t, k, int(n)) for n in ns]
        out.append(_check(f"HO slicing y={y} t={t:.4f}", "propagators", "time_slice_oracle",
                          richardson(vals), ho_green(y, t, k), 1e-6, relative=True))
        out.append(_check(f"Trotter order y={y} t={t:.4f}", "propagators", "time_slice_oracle",
                          observed_order(vals), 2.0, 0.2))
    for which, k in (("free", 0.0), ("ho", 1.0)):
        r = schrodinger_residual(which, [0.25, 0.5, 1.0], [0.6, 1.0], k, 1e-3, 1e-3)
        out.append(_check(f"Schroedinger residual {which}", "propagators", "schrodinger_residual",
                          r, 0.0, 1e-5))
    composed, direct = compose_check(0.4, 0.5, 1.0, 0.3, 1.0)
    out.append(_check("HO composition", "propagators", "compose_check", composed, direct, 1e-10))
    grid = build_grid(1.0, 4 / 3, m)
    fspec = GaussKernelSpec.free(grid, 0.4)
    f = random_smooth(grid, rng)
    out.append(_check("free closed form vs master", "propagators", "free_t_transform",
                      free_t_transform(f, 0.4), master_t_transform(fspec, f).value, 1e-8,
                      relative=True))
    hspec = GaussKernelSpec.harmonic(grid, 1.0, 0.4)
    out.append(_check("HO closed form vs master", "propagators", "ho_t_transform",
                      ho_t_transform(f, 0.4, 1.0, 1.0), master_t_transform(hspec, f).value, 1e-8,
                      relative=True))
    return out


def moments_suite(m: int = 128, seed: int = 7) -> list[Check]:
    rng = np.random.default_rng(seed)
    out = []
    grid = build_grid(1.0, 4 / 3, m)
    for label, spec in (("free", GaussKernelSpec.free(grid, 0.3)),
                        ("HO", GaussKernelSpec.harmonic(grid, 1.0, 0.3))):
        f, k, h = (random_smooth(grid, rng) for _ in range(3))
        out.append(_check(f"moment1 {label}", "moments", "moment1", moment1(spec, k, f),
                          wick_derivative_oracle(spec, k, f, 1, 1e-4), 1e-6))
        out.append(_check(f"moment2 {label}", "moments", "moment2", moment2(spec, k, h, f),
                          wick_mixed_oracle(spec, k, h, f, 1e-3), 1e-5))
        out.append(_check(f"moment2 symmetry {label}", "moments", "moment2",
                          moment2(spec, k, h, f), moment2(spec, h, k, f), 1e-12))
    res = ccr_limit(0.5, 1.0, 0.0)
    out.append(_check("CCR limit", "moments", "ccr_limit", res.limit,
                      -1j * free_green(0.0, 1.0), 1e-3))
    return out


SUITES = {
    "identities": identities_suite,
    "propagators": propagators_suite,
    "moments": moments_suite,
}


def run_suite(name: str, m: int | None = None, seed: int = 7) -> list[Check]:
    names = list(SUITES) if name == "all" else [name]
    checks = []
    for n in names:
        if n not in SUITES:
            raise KeyError(n)
        fn = SUITES[n]
        checks.extend(fn(seed=seed) if m is None else fn(m=m, seed=seed))
    return checks
