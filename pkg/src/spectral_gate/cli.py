"""``spectral-gate`` command line front end; every command writes one JSON report."""
from __future__ import annotations

import argparse
import json
import os
import sys
import time

import numpy as np

from . import __version__, _kernels
from .capacity import (DEFAULT_BOX_FACTOR, DEFAULT_GAMMA, IndicatorSet, capacity, matrix_ms_scan,
                       mazya_shubin_scan)
from .errors import ConfigError, NumericalError, SpectralGateError
from .geometry import Cube, Grid
from .muckenhoupt import DEFAULT_C, DEFAULT_DELTA, a2loc_bracket, ainfty_scan, condition_b_margin
from .oscillation import (PartitionScheme, SubspaceFamilySpec, build_degenerate_potential, load_family,
                          omega_infinity, theorem13_check)
from .potential import GALLERY, MatrixPolynomial, gallery, min_eig_integral_scan
from .spectrum import classify_cube, compare_HV_Hlambda, count_eigenvalues, discreteness_probe
from .verdict import Status, Witness, _jsonable

SCHEMA = "1"
DEFAULT_SCHEME = {"a": [2, 2, 2, 2], "b": [2, 4, 8, 16]}
EXTRA_POTENTIALS = {"degenerate": "glued rank-deficient potential growth(x) * P_L(x) (see --family/--scheme)"}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _floats(text):
    if isinstance(text, (list, tuple)):
        return [float(x) for x in text]
    try:
        return [float(x) for x in str(text).split(",") if x.strip()]
    except ValueError as exc:
        raise ConfigError(f"expected a comma-separated list of numbers, got {text!r}") from exc


def _common(p):
    p.add_argument("--config", help="JSON file whose keys override command-line flags")
    p.add_argument("--output", help="write the report here instead of stdout")
    p.add_argument("--seed", type=int, default=0)


def _potential_args(p):
    p.add_argument("--gallery", default=None, help="gallery potential name")
    p.add_argument("--potential", default=None, help="potential JSON file")
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--d", type=int, default=None)
    p.add_argument("--params", default=None, help="gallery parameters as a JSON object")
    p.add_argument("--family", default=None, help="subspace family JSON (degenerate potential)")
    p.add_argument("--scheme", default=None, help="partition scheme JSON (degenerate potential)")
    p.add_argument("--growth", default="power", choices=["power", "log"])
    p.add_argument("--power", type=float, default=2.0)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="spectral-gate", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("gallery-list")
    _common(p)

    p = sub.add_parser("ainfty")
    _common(p), _potential_args(p)
    p.add_argument("--delta", type=float, default=DEFAULT_DELTA)
    p.add_argument("--c", type=float, default=DEFAULT_C)
    p.add_argument("--ell0", type=float, default=1.0)
    p.add_argument("--region", type=float, default=4.0)
    p.add_argument("--m", type=int, default=32)

    p = sub.add_parser("condition-b")
    _common(p), _potential_args(p)
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--center", default="0.5")
    p.add_argument("--side", type=float, default=1.0)
    p.add_argument("--m", type=int, default=64)
    p.add_argument("--u-samples", type=int, default=256)

    p = sub.add_parser("a2")
    _common(p), _potential_args(p)
    p.add_argument("--ell0", type=float, default=1.0)
    p.add_argument("--region", type=float, default=2.0)
    p.add_argument("--m", type=int, default=32)

    p = sub.add_parser("min-eig-scan")
    _common(p), _potential_args(p)
    p.add_argument("--ell", type=float, default=1.0)
    p.add_argument("--radii", default="10,50,100")
    p.add_argument("--threshold", type=float, default=1.0)
    p.add_argument("--width", type=float, default=None)

    p = sub.add_parser("oscillation")
    _common(p), _potential_args(p)
    p.add_argument("--ell", type=float, default=0.25)
    p.add_argument("--radii", default="4,8,12")
    p.add_argument("--m", type=int, default=16)

    p = sub.add_parser("theorem13")
    _common(p), _potential_args(p)
    p.add_argument("--ells", default="0.5,0.25,0.125")
    p.add_argument("--radii", default="4,8,12")
    p.add_argument("--m", type=int, default=16)
    p.add_argument("--lambda-threshold", type=float, default=1.0)
    p.add_argument("--omega-threshold", type=float, default=1.0)

    p = sub.add_parser("capacity")
    _common(p)
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--set", dest="set_kind", choices=["ball", "cube"], default="ball")
    p.add_argument("--radius", type=float, default=1.0)
    p.add_argument("--h", type=float, default=0.125)
    p.add_argument("--box-factor", type=float, default=DEFAULT_BOX_FACTOR)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--max-iter", type=int, default=20000)

    for name in ("mazya-shubin", "matrix-ms"):
        p = sub.add_parser(name)
        _common(p), _potential_args(p)
        p.add_argument("--ell", type=float, default=1.0)
        p.add_argument("--gamma", type=float, default=DEFAULT_GAMMA)
        p.add_argument("--radii", default="10,50,100")
        p.add_argument("--h", type=float, default=None)
        p.add_argument("--box-factor", type=float, default=DEFAULT_BOX_FACTOR)
        p.add_argument("--threshold", type=float, default=1.0)
        if name == "matrix-ms":
            p.add_argument("--u-samples", type=int, default=64)

    for name in ("spectrum", "compare"):
        p = sub.add_parser(name)
        _common(p), _potential_args(p)
        p.add_argument("--E", type=float, default=1.0)
        p.add_argument("--L", default="4,8,16")
        p.add_argument("--h", type=float, default=0.0625)
        p.add_argument("--method", choices=["auto", "dense", "lanczos"], default="auto")
        if name == "spectrum":
            p.add_argument("--csv", default=None, help="also write the counting table as CSV")

    p = sub.add_parser("classify")
    _common(p), _potential_args(p)
    p.add_argument("--center", default="2")
    p.add_argument("--side", type=float, default=2.0)
    p.add_argument("--m", type=int, default=16)
    p.add_argument("--max-depth", type=int, default=6)
    return parser


def _apply_config(args, parser) -> None:
    if not getattr(args, "config", None):
        return
    try:
        with open(args.config) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("config file must hold a JSON object")
    known = set(vars(args)) - {"command", "config"}
    for key, value in doc.items():
        dest = key.replace("-", "_")
        if dest == "set":
            dest = "set_kind"
        if dest not in known:
            raise ConfigError(f"unknown config field {key!r}")
        setattr(args, dest, value)


def resolve_potential(args):
    if args.potential and args.gallery:
        raise ConfigError("give either --gallery or --potential, not both")
    if args.potential:
        return MatrixPolynomial.load(args.potential)
    name = args.gallery
    if name is None:
        raise ConfigError("a potential is required (--gallery NAME or --potential FILE)")
    if name == "degenerate":
        family = load_family(args.family) if args.family else SubspaceFamilySpec.coordinate(args.d or 2)
        scheme = PartitionScheme.from_dict(_load_json(args.scheme) if args.scheme else DEFAULT_SCHEME)
        return build_degenerate_potential(scheme, family, args.growth, args.power, args.n)
    params = args.params
    if isinstance(params, str):
        try:
            params = json.loads(params)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"--params is not JSON: {exc}") from exc
    return gallery(name, args.n, args.d, params)


def _load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc


def _center(text, n):
    c = _floats(text)
    if len(c) == 1 and n > 1:
        c = c * n
    if len(c) != n:
        raise ConfigError(f"center needs {n} coordinates")
    return tuple(c)


def _verdict_report(v):
    d = v.to_dict()
    return {"status": d["status"], "witnesses": d["witnesses"], "tables": {"main": d["table"]},
            "notes": d["notes"], "params": d["params"]}


def execute(args) -> dict:
    cmd = args.command
    if cmd == "gallery-list":
        names = dict(GALLERY, **EXTRA_POTENTIALS)
        return {"status": "satisfied", "witnesses": [],
                "tables": {"gallery": [{"name": k, "description": v} for k, v in sorted(names.items())]}}
    if cmd == "capacity":
        Q = Cube((0.0,) * args.n, 2.0 * args.radius)
        m = int(round(Q.side / args.h))
        F = IndicatorSet.ball(Q, m, args.radius) if args.set_kind == "ball" else IndicatorSet.full(Q, m)
        res = capacity(F, args.h, args.box_factor, args.tol, args.max_iter, keep_potential=False)
        row = {"value": res.value, "residual": res.residual, "iterations": res.iterations}
        if args.set_kind == "ball" and args.n == 3:
            row["newtonian_reference"] = 4 * np.pi * args.radius
            row["relative_error"] = res.value / row["newtonian_reference"] - 1.0
        return {"status": "satisfied", "witnesses": [Witness(res.value, Q.center, Q.side).to_dict()],
                "tables": {"capacity": [row]}}
    V = resolve_potential(args)
    if cmd == "ainfty":
        return _verdict_report(ainfty_scan(V, args.delta, args.c, args.ell0, args.region, args.m))
    if cmd == "condition-b":
        Q = Cube(_center(args.center, V.n), args.side)
        res = condition_b_margin(V, Q, args.alpha, args.m, args.u_samples)
        return {"status": "satisfied" if res.beta > 0 else "violated",
                "witnesses": [Witness(res.beta, Q.center, Q.side, tuple(res.direction)).to_dict()],
                "tables": {"margin": [{"alpha": args.alpha, "beta": res.beta}]}}
    if cmd == "a2":
        cubes = Grid(args.ell0, V.n).cells_in_box(args.region)
        T = a2loc_bracket(V, cubes, args.m)
        return {"status": "satisfied", "witnesses": [Witness(T, label="A2 bracket").to_dict()],
                "tables": {"bracket": [{"cubes": len(cubes), "bracket": T}]}}
    if cmd == "min-eig-scan":
        return _verdict_report(min_eig_integral_scan(V, args.ell, _floats(args.radii), args.threshold,
                                                     args.width))
    if cmd in ("oscillation", "theorem13"):
        S = getattr(V, "subspace_field", None)
        if S is None:
            raise ConfigError(f"{cmd} needs --gallery degenerate (a potential with a declared S/L split)")
        if cmd == "oscillation":
            oi = omega_infinity(args.ell, S, _floats(args.radii), args.m)
            return {"status": "satisfied" if oi.value > 0 else "inconclusive",
                    "witnesses": [Witness(oi.value, label=f"omega_inf({args.ell})").to_dict()],
                    "tables": {"per_annulus": oi.per_annulus}}
        return _verdict_report(theorem13_check(V, S, _floats(args.ells), _floats(args.radii), args.m,
                                               args.lambda_threshold, args.omega_threshold))
    if cmd == "mazya-shubin":
        if V.d != 1:
            raise ConfigError("mazya-shubin takes a scalar potential; use matrix-ms")
        return _verdict_report(mazya_shubin_scan(V, args.ell, args.gamma, _floats(args.radii), args.h,
                                                 args.box_factor, args.threshold))
    if cmd == "matrix-ms":
        return _verdict_report(matrix_ms_scan(V, args.ell, args.gamma, _floats(args.radii), args.h,
                                              args.u_samples, args.box_factor, args.threshold))
    if cmd == "spectrum":
        v = discreteness_probe(V, args.E, _floats(args.L), args.h, args.method)
        if args.csv:
            rep = count_eigenvalues(V, args.E, _floats(args.L), args.h, args.method)
            with open(args.csv, "w") as fh:
                fh.write(rep.to_csv())
        return _verdict_report(v)
    if cmd == "compare":
        c = compare_HV_Hlambda(V, args.E, _floats(args.L), args.h, args.method)
        status = Status.INCONCLUSIVE.value if c.inconsistent else c.vector.status.value
        return {"status": status, "witnesses": [],
                "verdicts": {"H_V": c.vector.status.value, "H_lambda": c.scalar.status.value},
                "inconsistent": c.inconsistent,
                "tables": {"H_V": c.vector.table, "H_lambda": c.scalar.table},
                "notes": c.vector.notes}
    if cmd == "classify":
        Q = Cube(_center(args.center, V.n), args.side)
        res = classify_cube(V, Q, args.m, args.max_depth)
        return {"status": "satisfied", "kind": res.kind,
                "witnesses": [Witness(res.c, res.sub.center, res.sub.side, label=res.kind).to_dict()],
                "tables": {"classification": [res.to_dict()]}}
    raise ConfigError(f"unknown command {cmd!r}")


def _config_echo(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in ("output", "config")}


def run(argv=None) -> int:
    _kernels.set_threads(int(os.environ.get("SPECTRAL_GATE_THREADS", "0") or 0))
    parser = build_parser()
    start = time.perf_counter()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise ConfigError("a subcommand is required")
        _apply_config(args, parser)
        body = execute(args)
    except ConfigError as exc:
        return _fail(exc, 2)
    except NumericalError as exc:
        return _fail(exc, 3)
    except SpectralGateError as exc:  # pragma: no cover - every subclass is handled above
        return _fail(exc, 3)
    report = {"schema": SCHEMA, "command": args.command, "config": _config_echo(args),
              "runtime_ms": (time.perf_counter() - start) * 1000.0, "toolkit_version": __version__}
    report.update(body)
    text = json.dumps(_jsonable(report), sort_keys=True, indent=2)
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return 0


def _fail(exc, code) -> int:
    doc = {"schema": SCHEMA, "error": type(exc).__name__, "message": str(exc), "exit_code": code}
    node = getattr(exc, "node", None)
    if node is not None:
        doc["node"] = np.asarray(node).tolist()
    print(json.dumps(doc, sort_keys=True), file=sys.stderr)
    return code


def main():  # console-script entry point
    sys.exit(run())
