"""Command-line harness: ``python -m phasefeyn <command> [options]``.

Options can also come from a flat ``key=value`` config file (``--config``);
flags win over the file.  Exit status is 0 on success, 1 when an input
violates a precondition, 2 when a verification tolerance is exceeded.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import operators as ops
from .errors import PhaseFeynError
from .grid import PhaseFunction, build_grid
from .kernels import GaussKernelSpec, master_t_transform
from .moments import DEFAULT_SCHEDULE, ccr_limit
from .propagators import free_green, ho_green, time_slice_oracle
from .verify import run_suite

logger = logging.getLogger("phasefeyn")

SCHEMA = 1
EXIT_OK, EXIT_PRECONDITION, EXIT_VERIFY = 0, 1, 2

# key -> (type, default); every key has a --flag twin with '-' for '_'
KEYS = {
    "t": (float, 1.0),
    "t_total": (float, None),
    "m": (int, 256),
    "y": (float, 0.0),
    "k": (float, 0.0),
    "s": (float, 0.5),
    "y_range": (str, "0:2:0.1"),
    "n_slices": (str, "16,32,64,128,256,512,1024"),
    "schedule": (str, "default"),
    "n_modes": (int, 10),
    "method": (str, "dense"),
    "suite": (str, "identities"),
    "seed": (int, 7),
    "f_csv": (str, None),
    "dump_matrix": (str, None),
    "output": (str, None),
}


def read_config(path) -> dict:
    cfg = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise PhaseFeynError(f"{path}:{lineno}: expected key=value")
            key, value = (part.strip() for part in line.split("=", 1))
            key = key.replace("-", "_")
            if key not in KEYS:
                raise PhaseFeynError(f"{path}:{lineno}: unknown key {key!r}")
            cfg[key] = KEYS[key][0](value)
    return cfg


def resolve(args: argparse.Namespace) -> dict:
    cfg = read_config(args.config) if args.config else {}
    out = {}
    for key, (_, default) in KEYS.items():
        flag = getattr(args, key, None)
        out[key] = flag if flag is not None else cfg.get(key, default)
    return out


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("PHASEFEYN_THREADS", "1")))
    except ValueError:
        return 1


def _parse_range(spec: str) -> np.ndarray:
    try:
        a, b, step = (float(v) for v in spec.split(":"))
    except ValueError as exc:
        raise PhaseFeynError(f"range must be start:stop:step, got {spec!r}") from exc
    if step <= 0 or b < a:
        raise PhaseFeynError(f"bad range {spec!r}")
    n = int(np.floor((b - a) / step + 1e-9)) + 1
    return a + step * np.arange(n)


def _parse_schedule(spec: str):
    if spec == "default":
        return DEFAULT_SCHEDULE
    try:
        return tuple(tuple(float(v) for v in item.split(":")) for item in spec.split(","))
    except ValueError as exc:
        raise PhaseFeynError(f"schedule must be 'default' or eps:width,... got {spec!r}") from exc


def _fmt(x) -> str:
    return repr(float(x))


def _emit_csv(header, rows, path):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])
    _write(buf.getvalue(), path)


def _emit_json(obj, path):
    _write(json.dumps({"schema": SCHEMA, **obj}, indent=2, sort_keys=True) + "\n", path)


def _write(text: str, path):
    if path in (None, "-"):
        sys.stdout.write(text)
        return
    try:
        with open(path, "w") as fh:
            fh.write(text)
    except OSError as exc:
        raise PhaseFeynError(f"cannot write {path}: {exc}") from exc


def _green(y, t, k):
    return complex(free_green(y, t) if k == 0 else ho_green(y, t, k))


def cmd_propagator(c):
    ys = _parse_range(c["y_range"])
    t, k = c["t"], c["k"]
    _green(0.0, t, k)  # precondition check before fan-out
    with ThreadPoolExecutor(max_workers=_threads()) as pool:
        vals = list(pool.map(lambda y: _green(y, t, k), ys))
    rows = [(float(y), t, k, v.real, v.imag, abs(v), np.angle(v)) for y, v in zip(ys, vals)]
    _emit_csv(["y", "t", "k", "re", "im", "abs", "phase"], rows, c["output"])
    return EXIT_OK


def _grid(c):
    t_total = c["t_total"] if c["t_total"] is not None else c["t"]
    return build_grid(c["t"], t_total, c["m"])


def cmd_t_transform(c):
    grid = _grid(c)
    spec = (GaussKernelSpec.free(grid, c["y"]) if c["k"] == 0
            else GaussKernelSpec.harmonic(grid, c["k"], c["y"]))
    f = PhaseFunction.from_csv(c["f_csv"], grid) if c["f_csv"] else PhaseFunction.zeros(grid)
    res = master_t_transform(spec, f)
    if c["dump_matrix"]:
        spec.N_inv.to_csv(c["dump_matrix"])
    _emit_json({"command": "t-transform", "t": c["t"], "k": c["k"], "y": c["y"], "m": c["m"],
                **res.to_json()}, c["output"])
    return EXIT_OK


def cmd_spectrum(c):
    grid = _grid(c)
    sp = ops.spectrum_A(grid, c["k"], c["n_modes"])
    exact = ops.ho_eigenvalues(c["k"], grid.t_window, sp.n_modes)
    rows = [(n + 1, float(a), float(b)) for n, (a, b) in enumerate(zip(sp.eigenvalues, exact))]
    _emit_csv(["n", "numeric", "analytic"], rows, c["output"])
    return EXIT_OK


def cmd_determinant(c):
    grid = _grid(c)
    K, L = ops.make_K_free(grid), ops.make_L_ho(grid, c["k"])
    det = ops.fredholm_det(K, L, c["method"])
    if c["dump_matrix"]:
        L.to_csv(c["dump_matrix"])
    _emit_json({"command": "determinant", "method": c["method"], "k": c["k"], "t": c["t"],
                "m": c["m"], "det": [det.real, det.imag],
                "cos_sqrt_k_t": float(np.cos(np.sqrt(c["k"]) * c["t"]))}, c["output"])
    return EXIT_OK


def cmd_verify(c, m_given):
    try:
        checks = run_suite(c["suite"], c["m"] if m_given else None, c["seed"])
    except KeyError as exc:
        raise PhaseFeynError(f"unknown suite {exc}") from exc
    failed = [ch for ch in checks if not ch.passed]
    for ch in failed:
        logger.error("FAIL %s.%s [%s]: observed %r expected %r (err %.3e > tol %.1e)",
                     ch.module, ch.operation, ch.name, ch.observed, ch.expected,
                     ch.error, ch.tolerance)
    _emit_json({"command": "verify", "suite": c["suite"], "seed": c["seed"],
                "checks": [ch.to_json() for ch in checks],
                "passed": not failed}, c["output"])
    return EXIT_VERIFY if failed else EXIT_OK


def cmd_ccr(c):
    res = ccr_limit(c["s"], c["t"], c["y"], _parse_schedule(c["schedule"]))
    target = -1j * complex(free_green(c["y"], c["t"]))
    rows = [(eps, w, d.real, d.imag, abs(d - target)) for eps, w, d in res.rows]
    _emit_csv(["epsilon", "width", "diff_re", "diff_im", "abs_err_vs_minus_i_T0"], rows, c["output"])
    if abs(res.limit - target) > 1e-3:
        logger.error("FAIL moments.ccr_limit: observed %r expected %r (tol 1e-3)", res.limit, target)
        return EXIT_VERIFY
    return EXIT_OK


def cmd_oracle_compare(c):
    t, k, y = c["t"], c["k"], c["y"]
    exact = _green(y, t, k)
    try:
        ns = [int(v) for v in c["n_slices"].split(",")]
    except ValueError as exc:
        raise PhaseFeynError(f"n_slices must be a comma list of integers: {c['n_slices']!r}") from exc
    with ThreadPoolExecutor(max_workers=_threads()) as pool:
        vals = list(pool.map(lambda n: time_slice_oracle(y, t, k, n), ns))
    rows = [(n, v.real, v.imag, abs(v - exact)) for n, v in zip(ns, vals)]
    _emit_csv(["n_slices", "re", "im", "abs_err_vs_closed_form"], rows, c["output"])
    return EXIT_OK


COMMANDS = {
    "propagator": (cmd_propagator, ("t", "k", "y_range")),
    "t-transform": (cmd_t_transform, ("t", "t_total", "m", "y", "k", "f_csv", "dump_matrix")),
    "spectrum": (cmd_spectrum, ("t", "t_total", "m", "k", "n_modes")),
    "determinant": (cmd_determinant, ("t", "t_total", "m", "k", "method", "dump_matrix")),
    "verify": (cmd_verify, ("suite", "m", "seed")),
    "ccr": (cmd_ccr, ("s", "t", "y", "schedule")),
    "oracle-compare": (cmd_oracle_compare, ("t", "k", "y", "n_slices")),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="phasefeyn", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, keys) in COMMANDS.items():
        p = sub.add_parser(name)
        p.add_argument("--config", help="key=value file; flags override it")
        p.add_argument("--output", "-o", help="output path (default stdout)")
        for key in keys:
            typ = KEYS[key][0]
            p.add_argument("--" + key.replace("_", "-"), dest=key, type=typ, default=None)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        # argparse uses 2 for usage errors; 2 is reserved for failed verification
        return EXIT_PRECONDITION if exc.code else EXIT_OK
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    fn = COMMANDS[args.command][0]
    try:
        c = resolve(args)
        if args.command == "verify":
            m_given = args.m is not None or "m" in (read_config(args.config) if args.config else {})
            return fn(c, m_given)
        return fn(c)
    except (PhaseFeynError, OSError) as exc:
        logger.error("precondition failed: %s", exc)
        return EXIT_PRECONDITION


if __name__ == "__main__":
    sys.exit(main())
