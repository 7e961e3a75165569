"""Command-line front end.

    diracsys check    [--seed N] [--tol T] [--trials K] [--suite NAME]... [--structure FILE] [--output PATH]
    diracsys compose  DA DB DI [--u2 K] [--v2 K] [--output PATH]
    diracsys simulate --model NAME [--netlist FILE] [--closed [FILE]] [--param KEY=VALUE]...
                      [--dt H] [--t-final T] [--scheme midpoint|rk4] [--tol T]
                      [--output PATH] [--format csv|json]

Exit status: 0 success, 1 property failure, 2 usage or parse error,
3 inconsistent initial data, 4 regularity violation.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from typing import NamedTuple, Optional

import numpy as np

from . import __version__, checks, dirac, models, transfer
from . import dynamics as dy
from . import subspace as ss
from .dirac import LinearStructure, StructureError

EXIT_OK = 0
EXIT_PROPERTY = 1
EXIT_USAGE = 2
EXIT_INCONSISTENT = 3
EXIT_REGULARITY = 4

COMPOSE_SCHEMA = "diracsys.compose/1"
SIMULATE_SCHEMA = "diracsys.simulate/1"

log = logging.getLogger("diracsys")


class UsageError(Exception):
    """Bad flags, unreadable or malformed input files."""


# ----------------------------------------------------------------------------- argument types


def _seed(text: str) -> int:
    try:
        value = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {text!r}") from None
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return value


def _positive(text: str) -> float:
    value = _finite(text)
    if value <= 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return value


def _nonnegative(text: str) -> float:
    value = _finite(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"expected a nonnegative number, got {text}")
    return value


def _finite(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not math.isfinite(value):
        raise argparse.ArgumentTypeError(f"expected a finite number, got {text}")
    return value


def _param(text: str):
    key, sep, value = text.partition("=")
    if not sep or not key:
        raise argparse.ArgumentTypeError(f"expected KEY=VALUE, got {text!r}")
    try:
        nums = [float(v) for v in value.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"parameter {key}: expected numbers, got {value!r}") from None
    return key, nums[0] if len(nums) == 1 else nums


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="diracsys", description="Dirac structures, composition and Dirac-system simulation.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true", help="log diagnostics to stderr")
    sub = ap.add_subparsers(dest="command", required=True)

    ck = sub.add_parser("check", help="run the seeded property batteries")
    ck.add_argument("--seed", type=_seed, default=0)
    ck.add_argument("--tol", type=_positive, default=checks.DEFAULT_TOL)
    ck.add_argument("--trials", type=int, default=None, help="trials per suite (default: per-suite)")
    ck.add_argument("--suite", action="append", choices=sorted(checks.SUITES), help="run only these suites")
    ck.add_argument("--structure", help="also classify and audit a LinearStructure JSON file")
    ck.add_argument("--output", help="write the report here instead of standard output")

    cp = sub.add_parser("compose", help="compose D_a and D_b through D_I")
    cp.add_argument("da", help="structure on U1 + U2")
    cp.add_argument("db", help="structure on V1 + V2")
    cp.add_argument("di", help="structure on U2 + V2")
    cp.add_argument("--u2", type=int, help="port dimension of D_a (else the file's port_dim)")
    cp.add_argument("--v2", type=int, help="port dimension of D_b (else the file's port_dim)")
    cp.add_argument("--tol", type=_positive, default=None, help="equality tolerance for classification")
    cp.add_argument("--output", help="write the composite here instead of standard output")

    sm = sub.add_parser("simulate", help="integrate a model and report drift and residuals")
    sm.add_argument("--model", required=True, choices=sorted(MODELS))
    sm.add_argument("--netlist", help="netlist JSON (model lc)")
    sm.add_argument(
        "--closed",
        nargs="?",
        const=True,
        default=False,
        help="close the ports, with the model's default closure or a LinearStructure JSON file",
    )
    sm.add_argument("--param", type=_param, action="append", default=[], metavar="KEY=VALUE")
    sm.add_argument("--dt", type=_positive, default=1e-3)
    sm.add_argument("--t-final", type=_nonnegative, default=1.0)
    sm.add_argument("--scheme", choices=dy.SCHEMES, default="midpoint")
    sm.add_argument("--tol", type=_positive, default=dy.CONSISTENCY_TOL, help="consistency tolerance")
    sm.add_argument("--seed", type=_seed, default=0, help="accepted for uniformity; runs are deterministic")
    sm.add_argument("--output", help="trajectory file")
    sm.add_argument("--format", choices=("csv", "json"), default="csv")
    return ap


# ----------------------------------------------------------------------------- io helpers


def _read_json(path: str):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as err:
        raise UsageError(f"{path}: {err.strerror}") from err
    except json.JSONDecodeError as err:
        raise UsageError(f"{path}: invalid JSON at line {err.lineno} column {err.colno}: {err.msg}") from err


def load_structure(path: str) -> tuple:
    """(structure, raw dict) from a LinearStructure JSON file."""
    data = _read_json(path)
    if not isinstance(data, dict):
        raise UsageError(f"{path}: expected a JSON object")
    try:
        return LinearStructure.from_json(data), data
    except (KeyError, TypeError, ValueError) as err:
        raise UsageError(f"{path}: malformed structure: {type(err).__name__}: {err}") from err


def _emit(text: str, path: Optional[str]):
    if path is None:
        sys.stdout.write(text)
        return
    try:
        with open(path, "w") as fh:
            fh.write(text)
    except OSError as err:
        raise UsageError(f"{path}: {err.strerror}") from err


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


# ----------------------------------------------------------------------------- check


def structure_audit(s: LinearStructure) -> dict:
    out = {
        "n": s.n,
        "dim": s.dim,
        "class": s.class_tag,
        "pairing_defect": dirac.pairing_defect(s),
    }
    if s.is_isotropic:
        dec = dirac.isotropic_decompose(s)
        out["isotropic_roundtrip_error"] = checks.projector_distance(dec.reconstruct().span.basis, s.span.basis)
        out["dim_f"], out["dim_f2"] = dec.f.rank, dec.f2.rank
    if s.is_coisotropic:
        dec = dirac.coisotropic_decompose(s)
        out["coisotropic_roundtrip_error"] = checks.projector_distance(dec.reconstruct().span.basis, s.span.basis)
    return out


def run_check(args) -> int:
    if args.trials is not None and args.trials < 1:
        raise UsageError("--trials must be at least 1")
    structure = load_structure(args.structure)[0] if args.structure else None
    report = checks.run_suites(args.seed, args.tol, names=args.suite, trials=args.trials)
    passed = report["passed"]
    if structure is not None:
        audit = structure_audit(structure)
        errors = [v for k, v in audit.items() if k.endswith("_roundtrip_error")]
        audit["passed"] = all(e <= args.tol for e in errors)
        report["structure"] = audit
        passed = passed and audit["passed"]
        report["passed"] = passed
    _emit(_dumps(report), args.output)
    return EXIT_OK if passed else EXIT_PROPERTY


# ----------------------------------------------------------------------------- compose


def _port_dim(flag, data, path) -> int:
    value = flag if flag is not None else data.get("port_dim")
    if value is None:
        raise UsageError(f"{path}: port dimension not given (use --u2/--v2 or a port_dim field)")
    if isinstance(value, bool) or not isinstance(value, int) or value < 0:
        raise UsageError(f"{path}: port dimension must be a nonnegative integer, got {value!r}")
    return value


def run_compose(args) -> int:
    (da, raw_a), (db, raw_b), (di, _) = (load_structure(p) for p in (args.da, args.db, args.di))
    u2 = _port_dim(args.u2, raw_a, args.da)
    v2 = _port_dim(args.v2, raw_b, args.db)
    u1, v1 = da.n - u2, db.n - v2
    if u1 < 0 or v1 < 0:
        raise UsageError(f"port dimensions ({u2}, {v2}) exceed the structure dimensions ({da.n}, {db.n})")
    if di.n != u2 + v2:
        raise UsageError(f"D_I lives on R^{di.n}, expected R^{u2 + v2} = U2 + V2")
    for name, s in (("D_a", da), ("D_b", db), ("D_I", di)):
        if not s.is_dirac:
            raise UsageError(f"{name} is not Dirac (class {s.class_tag})")
    out = transfer.compose(da, db, di, u1, u2, v1, v2)
    if args.tol is not None:
        with ss.numeric_policy(equal_tol=args.tol):
            out = LinearStructure(out.n, out.span)
    doc = {"schema": COMPOSE_SCHEMA, "dims": {"u1": u1, "u2": u2, "v1": v1, "v2": v2}, **out.to_json()}
    _emit(_dumps(doc), args.output)
    if not out.is_dirac:
        log.error("composite is %s, not Dirac", out.class_tag)
        return EXIT_PROPERTY
    return EXIT_OK


# ----------------------------------------------------------------------------- simulate


class Setup(NamedTuple):
    field: dy.StateField
    x0: np.ndarray
    extras: object  # Trajectory -> dict of model-specific diagnostics


class Params:
    """KEY=VALUE flags with defaults; unknown keys are a usage error."""

    def __init__(self, pairs, model):
        self.values = dict(pairs)
        self.model = model
        self.used = set()

    def get(self, key, default):
        self.used.add(key)
        return self.values.get(key, default)

    def scalar(self, key, default) -> float:
        value = self.get(key, default)
        if isinstance(value, list):
            raise UsageError(f"parameter {key} takes one number")
        return float(value)

    def vector(self, key, default, size) -> np.ndarray:
        value = np.atleast_1d(np.asarray(self.get(key, default), dtype=float))
        if value.shape != (size,):
            raise UsageError(f"parameter {key} needs {size} comma-separated numbers, got {value.size}")
        return value

    def finish(self):
        unknown = sorted(set(self.values) - self.used)
        if unknown:
            raise UsageError(f"model {self.model} has no parameter(s) {', '.join(unknown)}")


def _no_netlist(args):
    if args.netlist:
        raise UsageError(f"--netlist applies to model lc, not {args.model}")


def _closure_file(args, m) -> Optional[LinearStructure]:
    if not isinstance(args.closed, str):
        return None
    s = load_structure(args.closed)[0]
    if s.n != m:
        raise UsageError(f"{args.closed}: closure lives on R^{s.n}, the model has {m} ports")
    if not s.is_dirac:
        raise UsageError(f"{args.closed}: closure must be Dirac, got {s.class_tag}")
    return s


def setup_oscillator(args, prm) -> Setup:
    """Mass-spring oscillator H = p^2/2m + k q^2/2, optionally with a force port.

    With ``g`` nonzero and no closure the force f(t) = a sin(w t) drives it;
    ``--closed`` imposes 0 = g p/m instead.
    """
    _no_netlist(args)
    mass, k, g = prm.scalar("m", 1.0), prm.scalar("k", 1.0), prm.scalar("g", 0.0)
    amp, freq = prm.scalar("a", 1.0), prm.scalar("w", 1.0)
    x0 = np.array([prm.scalar("q0", 1.0), prm.scalar("p0", 0.0)])
    if mass <= 0 or k <= 0:
        raise UsageError("m and k must be positive")
    spec = models.quadratic_port_controlled([[0.0, 1.0], [-1.0, 0.0]], [[0.0], [g]], np.diag([k, 1.0 / mass]))
    if args.closed:
        model = models.build_port_controlled(spec, "closed", d_ports=_closure_file(args, 1))
    else:
        model = models.build_port_controlled(spec, "open", inputs=lambda t: amp * np.sin(freq * t))
    return Setup(model.field, x0, lambda traj: {})


def setup_lc(args, prm) -> Setup:
    if not args.netlist:
        raise UsageError("model lc needs --netlist")
    try:
        net = models.Netlist.from_json(_read_json(args.netlist))
    except ValueError as err:
        raise UsageError(f"{args.netlist}: {err}") from err
    els = net.elements
    ne = len(els)
    q0 = prm.vector("q0", [1.0 if b.kind == "C" else 0.0 for b in els], ne)
    v0 = prm.vector("v0", [0.0] * ne, ne)
    closure = None
    if args.closed:
        if not net.ports:
            raise UsageError(f"{args.netlist}: no ports to close")
        closure = _closure_file(args, len(net.ports)) or dirac.flows_only(len(net.ports))
    model = models.build_lc(net, closure)
    delta = net.distribution()

    def extras(traj):
        v = traj.states[:, ne : 2 * ne]
        off = v - v @ delta.projector
        return {"max_kcl_residual": float(np.abs(off).max(initial=0.0))}

    return Setup(model.field, models.lc_consistent_state(net, q0, v0), extras)


def setup_nonholonomic(args, prm) -> Setup:
    """Particle in R^3 with the constraint dz - y dx; p_z is set to y p_x."""
    _no_netlist(args)
    if args.closed:
        raise UsageError("model nonholonomic has no ports to close")
    q = prm.vector("q0", [0.0, 0.5, 0.0], 3)
    px, py = prm.scalar("px", 1.0), prm.scalar("py", 0.3)
    spec = models.nonholonomic_particle()
    x0 = np.concatenate([q, [px, py, q[1] * px]])

    def extras(traj):
        return {"max_constraint_residual": max(models.constraint_residual(spec, x) for x in traj.states)}

    return Setup(models.build_nonholonomic(spec).field, x0, extras)


def setup_spring_pendulum(args, prm) -> Setup:
    _no_netlist(args)
    if args.closed:
        raise UsageError("model spring-pendulum is driven by a prescribed force; there is nothing to close")
    k, r0, m = prm.scalar("k", 10.0), prm.scalar("r0", 1.0), prm.scalar("m", 1.0)
    force = (prm.scalar("Fr", 0.0), prm.scalar("Ftheta", 0.0))
    init = (prm.scalar("r", 1.2), prm.scalar("theta", 0.3), prm.scalar("vr", 0.0), prm.scalar("vtheta", 0.5))
    try:
        model = models.build_spring_pendulum(k, r0, m, force)
    except ValueError as err:
        raise UsageError(str(err)) from err
    return Setup(model.field, models.spring_pendulum_state(m, *init), lambda traj: {})


def setup_pendulum_pair(args, prm) -> Setup:
    _no_netlist(args)
    if isinstance(args.closed, str):
        raise UsageError("model pendulum-pair uses its built-in closure; pass --closed without a file")
    try:
        spec = models.PendulumPairSpec(
            M=prm.scalar("M", 1.0),
            m=prm.scalar("m", 1.0),
            g_const=prm.scalar("g", 9.81),
            theta0=prm.scalar("theta0", 0.3),
            x0=prm.get("x0", None),
            y0=prm.get("y0", None),
            omega0=prm.scalar("omega0", 0.0),
        )
    except ValueError as err:
        raise UsageError(str(err)) from err
    closed = bool(args.closed)

    def extras(traj):
        if not closed:
            return {}
        th, x, y = traj.states[:, 0], traj.states[:, 1], traj.states[:, 2]
        dx = x - np.sin(th) + np.sin(spec.theta0) - spec.x0
        dy_ = y - np.cos(th) + np.cos(spec.theta0) - spec.y0
        return {"sticking_residual": float(max(np.abs(dx).max(), np.abs(dy_).max()))}

    return Setup(models.build_pendulum_pair(spec, closed).field, spec.initial_state(), extras)


MODELS = {
    "oscillator": setup_oscillator,
    "lc": setup_lc,
    "nonholonomic": setup_nonholonomic,
    "spring-pendulum": setup_spring_pendulum,
    "pendulum-pair": setup_pendulum_pair,
}


def run_simulate(args) -> int:
    prm = Params(args.param, args.model)
    setup = MODELS[args.model](args, prm)
    prm.finish()
    traj = dy.simulate(setup.field, setup.x0, args.dt, args.t_final, args.scheme, consistency_tol=args.tol)
    if args.output:
        _emit(traj.to_csv() if args.format == "csv" else traj.dumps() + "\n", args.output)
    balance = dy.power_balance(traj)
    summary = {
        "schema": SIMULATE_SCHEMA,
        "model": args.model,
        "closed": bool(args.closed),
        "scheme": args.scheme,
        "dt": args.dt,
        "t_final": args.t_final,
        "steps": len(traj) - 1,
        "energy_initial": float(traj.energies[0]),
        "energy_drift": balance.max_drift,
        "max_consistency_residual": float(traj.consistency_residuals.max()),
        "max_power_residual": balance.max_residual if balance.ports else None,
        "output": args.output,
        **setup.extras(traj),
    }
    sys.stdout.write(_dumps(summary))
    return EXIT_OK


# ----------------------------------------------------------------------------- entry point

COMMANDS = {"check": run_check, "compose": run_compose, "simulate": run_simulate}


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:  # argparse exits 2 on bad usage, 0 on --help
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR, format="%(levelname)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (UsageError, StructureError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except dy.InconsistentDAEError as err:
        print(f"inconsistent initial data: {err}", file=sys.stderr)
        return EXIT_INCONSISTENT
    except dy.DynamicsError as err:
        print(f"regularity violation: {err}", file=sys.stderr)
        return EXIT_REGULARITY


if __name__ == "__main__":
    sys.exit(main())
