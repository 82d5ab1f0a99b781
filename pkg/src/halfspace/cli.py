"""Command-line entry point: ``halfspace <subcommand> [--config f] [--out d]``.

Configs are JSON, validated against a per-subcommand schema before any
computation.  Outputs are written atomically into ``--out``; a one-line
summary goes to stdout and diagnostics (JSON) to stderr.

Exit codes: 0 success, 1 config error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile
import time
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from .experiments import invariance_battery, random_smooth_data
from .extension import (
    BoundaryFunction,
    extend_dirichlet,
    extend_neumann,
    fourier_oracle,
    fractional_laplacian,
)
from .grid import BoundaryDatum, HalfSpaceGrid, write_field_csv
from .kernels import KernelSpec, eval_kernel_at, kernel_normalization
from .liouville import exterior_probes, family, moving_sphere_scan, random_maps, tangential_variation, uniqueness_experiment
from .solver import ConvergenceError, SolveConfig, fit_family, solve

NORMALIZATION = "mass-one"
MIN_RATE = 1.8


class ConfigError(Exception):
    """Bad or missing configuration (exit 1)."""


class NumericalFailure(Exception):
    """Non-convergence, low-confidence extrapolation or failed certificate (exit 2)."""

    def __init__(self, message, detail=None):
        super().__init__(message)
        self.detail = detail or {}


# --------------------------------------------------------------------------- schemas

_NUM = {"type": "number"}
_POS = {"type": "number", "exclusiveMinimum": 0}
_POINT = {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 3}
_GRID = {
    "n": {"enum": [2, 3]},
    "L": _POS,
    "H": _POS,
    "nodes": {
        "oneOf": [
            {"type": "integer", "minimum": 3},
            {"type": "array", "items": {"type": "integer", "minimum": 3}, "minItems": 2, "maxItems": 2},
        ]
    },
}
_BOUNDARY_FN = {
    "type": "object",
    "additionalProperties": False,
    "required": ["kind"],
    "properties": {
        "kind": {"enum": ["gaussian", "bump", "constant"]},
        "amplitude": _NUM,
        "width": _POS,
        "center": {"type": "array", "items": _NUM, "minItems": 1, "maxItems": 2},
    },
}


def _obj(props, required=()):
    return {"type": "object", "additionalProperties": False, "required": list(required), "properties": props}


SCHEMAS = {
    "kernel": _obj(
        {
            "kind": {"enum": ["poisson", "riesz", "gluck", "gamma_d", "gamma_n"]},
            "n": {"enum": [2, 3]},
            "a": _NUM,
            "alpha": _NUM,
            "beta": _NUM,
            "point": _POINT,
            "points": {"type": "array", "items": _POINT, "minItems": 1},
            "method": {"enum": ["closed", "quadrature"]},
        },
        ["kind", "n"],
    ),
    "verify-invariance": _obj(
        {
            "dims": {"type": "array", "items": {"enum": [2, 3]}, "minItems": 1},
            "exponents": {"type": "array", "items": _NUM, "minItems": 1},
            "steps": {"type": "array", "items": _POS, "minItems": 2},
            "radius": _POS,
        }
    ),
    "solve": _obj(
        {
            **_GRID,
            "a": _NUM,
            "bc": {"enum": ["dirichlet", "neumann"]},
            "data": _obj(
                {
                    "kind": {"enum": ["constant", "family", "random"]},
                    "value": _NUM,
                    "c_star": _NUM,
                    "c2": _NUM,
                    "modes": {"type": "integer", "minimum": 1},
                    "amplitude": _NUM,
                    "flux": _NUM,
                },
                ["kind"],
            ),
            "tolerance": _POS,
            "max_iterations": {"type": "integer", "minimum": 1},
            "rule": {"enum": ["harmonic", "midpoint"]},
        },
        ["n", "L", "H", "nodes", "a", "bc", "data"],
    ),
    "extend": _obj(
        {
            "a": _NUM,
            "type": {"enum": ["dirichlet", "neumann"]},
            "f": _BOUNDARY_FN,
            "points": {"type": "array", "items": _POINT, "minItems": 1},
            "tol": _POS,
        },
        ["a", "f", "points"],
    ),
    "fraclap": _obj(
        {
            "s": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
            "f": _BOUNDARY_FN,
            "points": {"type": "array", "items": {"type": "array", "items": _NUM, "minItems": 1, "maxItems": 2},
                       "minItems": 1},
            "h": _POS,
            "rtol": _POS,
            "oracle": {"type": "boolean"},
        },
        ["s", "f", "points"],
    ),
    "moving-sphere": _obj(
        {
            "n": {"enum": [2, 3]},
            "a": _NUM,
            "c_star": _NUM,
            "maps": {"type": "integer", "minimum": 1},
            "probes": {"type": "integer", "minimum": 2},
            "reach": {"type": "number", "exclusiveMinimum": 1},
            "tol": {"type": "number", "minimum": 0},
        },
        ["n", "a"],
    ),
    "classify": _obj(
        {
            **_GRID,
            "scenario": {"enum": ["dirichlet", "neumann"]},
            "a": _NUM,
            "c_star": _NUM,
            "c2": _NUM,
            "tolerance": _POS,
            "maps": {"type": "integer", "minimum": 1},
            "probes": {"type": "integer", "minimum": 2},
            "max_fit_residual": _POS,
            "max_variation": _POS,
        },
        ["scenario", "n", "L", "H", "nodes", "a"],
    ),
}


def load_config(path, command: str) -> dict:
    """Read and validate a config; missing path gives an empty config."""
    if path is None:
        cfg = {}
    else:
        try:
            cfg = json.loads(Path(path).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
    try:
        jsonschema.validate(cfg, SCHEMAS[command])
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"schema violation at {where}: {exc.message}") from exc
    return cfg


# --------------------------------------------------------------------------- output


def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else repr(x)
    return obj


def _atomic_write(path: Path, writer) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    os.close(fd)
    try:
        writer(tmp)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json(path: Path, obj) -> None:
    text = json.dumps(_clean(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"
    _atomic_write(path, lambda tmp: Path(tmp).write_text(text))


def write_csv(path: Path, field) -> None:
    _atomic_write(path, lambda tmp: write_field_csv(tmp, field))


def meta(seed, a=None, n=None, grid=None, **extra) -> dict:
    return {
        "a": a,
        "n": n,
        "grid": grid.to_dict() if isinstance(grid, HalfSpaceGrid) else grid,
        "normalization": NORMALIZATION,
        "version": __version__,
        "seed": seed,
        **extra,
    }


def _diag(kind: str, message: str, **detail) -> None:
    print(json.dumps(_clean({"status": kind, "message": message, **detail}), sort_keys=True), file=sys.stderr)


# --------------------------------------------------------------------------- helpers


def _grid(cfg) -> HalfSpaceGrid:
    nodes = cfg["nodes"]
    m_t, m_v = (nodes, nodes) if isinstance(nodes, int) else nodes
    return HalfSpaceGrid(cfg["n"], cfg["L"], cfg["H"], m_t, m_v)


def _boundary_fn(spec: dict, dim: int) -> BoundaryFunction:
    kind = spec["kind"]
    amp = spec.get("amplitude", 1.0)
    if kind == "constant":
        return BoundaryFunction.constant(dim, amp)
    return BoundaryFunction(kind, dim, amp, spec.get("width", 1.0), spec.get("center"))


def _threads(args) -> int:
    if args.threads is not None:
        return args.threads
    env = os.environ.get("HALFSPACE_THREADS")
    if env is None:
        return 1
    try:
        k = int(env)
    except ValueError:
        raise ConfigError(f"HALFSPACE_THREADS must be a positive integer, got {env!r}") from None
    if k < 1:
        raise ConfigError(f"HALFSPACE_THREADS must be a positive integer, got {env!r}")
    return k


# --------------------------------------------------------------------------- subcommands


def cmd_kernel(args, cfg, out: Path) -> str:
    spec = KernelSpec(cfg["kind"], cfg["n"], cfg.get("a"), cfg.get("alpha"), cfg.get("beta"))
    m = meta(args.seed, spec.a, spec.n)
    if args.action == "norm":
        method = cfg.get("method", "closed")
        value = kernel_normalization(spec, method)
        write_json(out / "kernel.json", {"spec": spec.to_dict(), "point": None, "value": value,
                                         "method": method, "meta": m})
        return f"kernel norm {spec.kind} n={spec.n}: {value:.12g}"
    if "point" in cfg:
        pts = [cfg["point"]]
    elif "points" in cfg:
        pts = cfg["points"]
    else:
        raise ConfigError("kernel eval needs 'point' or 'points'")
    arr = np.asarray(pts, dtype=float)
    if arr.shape[-1] != spec.n:
        raise ConfigError(f"points must have {spec.n} coordinates")
    vals = eval_kernel_at(spec, arr)
    rows = [{"spec": spec.to_dict(), "point": p, "value": float(v)} for p, v in zip(arr.tolist(), vals)]
    body = {**rows[0], "meta": m} if "point" in cfg else {"results": rows, "meta": m}
    write_json(out / "kernel.json", body)
    return f"kernel eval {spec.kind} n={spec.n}: {len(rows)} point(s), first value {float(vals[0]):.12g}"


def cmd_verify_invariance(args, cfg, out: Path) -> str:
    kw = {}
    if "dims" in cfg:
        kw["dims"] = tuple(cfg["dims"])
    if "exponents" in cfg:
        kw["exponents"] = tuple(cfg["exponents"])
    if "steps" in cfg:
        kw["steps"] = tuple(cfg["steps"])
    if "radius" in cfg:
        kw["radius"] = cfg["radius"]
    records = invariance_battery(**kw)
    rows = [r.to_dict() for r in records]
    rates = [r.rate for r in records]
    worst = min(rates)
    write_json(out / "invariance.json", {
        "records": rows,
        "min_rate": worst,
        "meta": meta(args.seed, sorted({r.a for r in records}), sorted({r.n for r in records})),
    })
    for r in records:
        print(f"n={r.n} a={r.a:+.3f} {r.function:<10s} rate={r.rate:.3f}", file=sys.stderr)
    if worst < MIN_RATE:
        raise NumericalFailure(f"invariance rate {worst:.3f} below {MIN_RATE}", {"min_rate": worst})
    return f"verify-invariance: {len(records)} cases, min rate {worst:.3f}"


def _solve_data(cfg, rng) -> BoundaryDatum:
    d = cfg["data"]
    a = cfg["a"]
    kind = d["kind"]
    if kind == "constant":
        v = d.get("value", 1.0)
        far = lambda p: np.full(np.shape(p)[:-1], float(v))  # noqa: E731
    elif kind == "family":
        cs, c2 = d.get("c_star", 1.0), d.get("c2", 0.0)
        if a >= 1 and cs:
            raise ConfigError("family data needs a < 1 when c_star != 0")
        far = lambda p: cs * np.asarray(p)[..., -1] ** (1 - a) + c2  # noqa: E731
    else:
        far = random_smooth_data(cfg["n"], rng, d.get("modes", 4), d.get("amplitude", 1.0)).bottom
    if cfg["bc"] == "neumann":
        return BoundaryDatum.neumann(d.get("flux", 0.0), far)
    if "flux" in d:
        raise ConfigError("'flux' only applies to bc = neumann")
    return BoundaryDatum.dirichlet_from(far)


def cmd_solve(args, cfg, out: Path) -> str:
    grid = _grid(cfg)
    rng = np.random.default_rng(args.seed)
    data = _solve_data(cfg, rng)
    scfg = SolveConfig(cfg.get("tolerance", 1e-10), cfg.get("max_iterations"), rule=cfg.get("rule", "harmonic"))
    m = meta(args.seed, cfg["a"], grid.n, grid, config=cfg)
    try:
        u, rep = solve(grid, cfg["a"], data, scfg)
    except ConvergenceError as exc:
        write_json(out / "report.json", {"converged": False, "residual_history": exc.history, "meta": m})
        raise NumericalFailure(str(exc), {"iterations": len(exc.history) - 1}) from exc
    fit = fit_family(u)
    report = {**rep.to_dict(), **fit.to_dict(), "tangential_variation": tangential_variation(u), "meta": m}
    write_csv(out / "field.csv", u)
    write_json(out / "report.json", report)
    return (f"solve: {rep.iterations} iterations, residual {rep.residual:.2e}, "
            f"c_star={fit.c_star:.6g} c2={fit.c2:.6g}")


def cmd_extend(args, cfg, out: Path) -> str:
    a = cfg["a"]
    pts = np.asarray(cfg["points"], dtype=float)
    n = pts.shape[-1]
    f = _boundary_fn(cfg["f"], n - 1)
    kind = cfg.get("type", "dirichlet")
    fn = extend_dirichlet if kind == "dirichlet" else extend_neumann
    vals, errs = fn(f, a, pts, tol=cfg.get("tol", 1e-8), threads=_threads(args), with_error=True)
    rows = [{"point": p, "value": float(v), "error_estimate": float(e)} for p, v, e in zip(pts.tolist(), vals, errs)]
    normalization = NORMALIZATION if kind == "dirichlet" else "unnormalized"
    write_json(out / "extend.json", {"results": rows, "f": f.to_dict(), "type": kind,
                                     "meta": meta(args.seed, a, n, normalization_used=normalization)})
    return f"extend ({kind}): {len(rows)} point(s), max |u| {float(np.max(np.abs(vals))):.6g}"


def cmd_fraclap(args, cfg, out: Path) -> str:
    s = cfg["s"]
    xs = [list(p) for p in cfg["points"]]
    dim = len(xs[0])
    if any(len(p) != dim for p in xs):
        raise ConfigError("all fraclap points must share one dimension")
    f = _boundary_fn(cfg["f"], dim)
    rows = []
    low = []
    for x in xs:
        lim = fractional_laplacian(f, s, x, h=cfg.get("h", 0.05), rtol=cfg.get("rtol", 1e-2))
        row = {"point": x, "value": lim.value, "error_estimate": lim.error_estimate,
               "low_confidence": lim.low_confidence}
        if cfg.get("oracle"):
            row["oracle"] = fourier_oracle(f, s, x)
        rows.append(row)
        if lim.low_confidence:
            low.append(x)
    write_json(out / "fraclap.json", {"results": rows, "f": f.to_dict(), "s": s,
                                      "meta": meta(args.seed, 1 - 2 * s, dim + 1)})
    if low:
        raise NumericalFailure("low-confidence extrapolation", {"points": low})
    return f"fraclap s={s}: {len(rows)} point(s)"


def cmd_moving_sphere(args, cfg, out: Path) -> str:
    n, a = cfg["n"], cfg["a"]
    rng = np.random.default_rng(args.seed)
    maps = random_maps(cfg.get("maps", 50), n, rng)
    count = cfg.get("probes", 1000)
    reach = cfg.get("reach", 4.0)
    probes = [exterior_probes(m, count, rng, reach=reach) for m in maps]
    u = family(a, n, cfg.get("c_star", 1.0))
    tol = cfg.get("tol", 1e-12)
    rep = moving_sphere_scan(u, a, maps, lambda m, i: probes[i], tol=tol)
    write_json(out / "scan.json", {**rep.to_dict(), "maps": [m.to_dict() for m in maps],
                                   "meta": meta(args.seed, a, n)})
    if rep.violations:
        raise NumericalFailure(f"scan found {len(rep.violations)} violation(s)", {"global_min": rep.global_min})
    return f"moving-sphere n={n} a={a}: {len(maps)} maps, global min {rep.global_min:.6g}"


def cmd_classify(args, cfg, out: Path) -> str:
    grid = _grid(cfg)
    scfg = SolveConfig(cfg.get("tolerance", 1e-10))
    try:
        res = uniqueness_experiment(cfg["scenario"], cfg["a"], grid, scfg, cfg.get("c_star", 1.0),
                                    cfg.get("c2", 1.0), cfg.get("maps", 10), cfg.get("probes", 200), args.seed)
    except ConvergenceError as exc:
        raise NumericalFailure(str(exc)) from exc
    body = {**res.to_dict(), "scan": res.scan.to_dict(), "meta": meta(args.seed, cfg["a"], grid.n, grid)}
    write_csv(out / "field.csv", res.field)
    write_json(out / "classify.json", body)
    fit_tol = cfg.get("max_fit_residual", 1e-2)
    var_tol = cfg.get("max_variation", 1e-2)
    if res.fit.residual > fit_tol or res.variation > var_tol:
        raise NumericalFailure("solution does not match the family",
                               {"fit_residual": res.fit.residual, "tangential_variation": res.variation})
    return (f"classify {cfg['scenario']} a={cfg['a']}: c_star={res.fit.c_star:.6g} c2={res.fit.c2:.6g} "
            f"variation={res.variation:.2e}")


COMMANDS = {
    "kernel": cmd_kernel,
    "verify-invariance": cmd_verify_invariance,
    "solve": cmd_solve,
    "extend": cmd_extend,
    "fraclap": cmd_fraclap,
    "moving-sphere": cmd_moving_sphere,
    "classify": cmd_classify,
}
NEEDS_CONFIG = {"kernel", "solve", "extend", "fraclap", "moving-sphere", "classify"}


def _u64(text: str) -> int:
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON run config")
    common.add_argument("--out", type=Path, default=Path("out"), help="output directory (default: ./out)")
    common.add_argument("--seed", type=_u64, default=0, help="RNG seed (default: 0)")
    common.add_argument("--threads", type=_positive, default=None,
                        help="worker threads (default: $HALFSPACE_THREADS or 1)")
    p = argparse.ArgumentParser(prog="halfspace", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    k = sub.add_parser("kernel", parents=[common], help="evaluate or normalize a kernel")
    k.add_argument("action", choices=["eval", "norm"])
    for name in COMMANDS:
        if name != "kernel":
            sub.add_parser(name, parents=[common])
    return p


def dispatch(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        if exc.code == 0:
            return 0
        _diag("config_error", "invalid command line", argv=list(sys.argv[1:] if argv is None else argv))
        return 1
    start = time.perf_counter()
    try:
        if args.config is None and args.command in NEEDS_CONFIG:
            raise ConfigError(f"{args.command} requires --config")
        cfg = load_config(args.config, args.command)
        summary = COMMANDS[args.command](args, cfg, args.out)
    except ConfigError as exc:
        _diag("config_error", str(exc), command=args.command)
        return 1
    except NumericalFailure as exc:
        _diag("numerical_failure", str(exc), command=args.command, **exc.detail)
        return 2
    except (ValueError, TypeError, NotImplementedError) as exc:
        # domain-level precondition failures surface from the library as ValueError
        _diag("config_error", str(exc), command=args.command, exception=type(exc).__name__)
        return 1
    print(summary)
    _diag("ok", summary, command=args.command, seconds=round(time.perf_counter() - start, 3))
    return 0


def main() -> None:
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
