"""Command-line driver: ``python -m plapeig <command> ...``.

Each command runs one toolkit operation and writes its table or record to
standard output, or to ``--out``.  When ``--out`` is given, a manifest
``<out>.manifest.json`` records the resolved configuration and content
hashes of inputs and outputs.

Exit codes: 0 on success, 2 for usage or configuration errors, 3 when a
solver did not converge (outputs are still written).
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import datetime
import hashlib
import io
import json
import logging
import math
import os
import sys
from importlib import metadata, resources

import jsonschema

from . import __version__
from .core import (ConvergenceError, DomainError, IntegrationError, MeshError, SolverConfig,
                   domain_from_dict, domain_to_dict)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NONCONVERGED = 3

logger = logging.getLogger("plapeig")


class ConfigError(Exception):
    pass


# --------------------------------------------------------------------------
# helpers

def parse_range(text):
    """Parse ``a:step:b`` (endpoint inclusive) or a comma list into floats."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ConfigError(f"range {text!r} must look like a:step:b")
        a, step, b = (float(x) for x in parts)
        if step <= 0 or b < a:
            raise ConfigError(f"range {text!r} needs step > 0 and a <= b")
        count = int(math.floor((b - a) / step + 1e-9)) + 1
        return [round(a + k * step, 12) for k in range(count)]
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"cannot parse number list {text!r}") from None


def _float_list(text):
    try:
        return parse_range(text)
    except ConfigError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def load_schema(name):
    return json.loads(resources.files("plapeig").joinpath("schemas", f"{name}.json").read_text())


def sha256_file(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def toolkit_version():
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return __version__


def _dump_json(doc, schema):
    jsonschema.validate(doc, load_schema(schema))
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _csv_text(header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _emit(args, text, outputs):
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
        outputs.append(args.out)
    else:
        sys.stdout.write(text)


def write_manifest(path, command, config, inputs, outputs):
    doc = {
        "command": command,
        "config": config,
        "version": toolkit_version(),
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds"),
        "inputs": [{"path": p, "sha256": sha256_file(p)} for p in inputs],
        "outputs": [{"path": p, "sha256": sha256_file(p)} for p in outputs],
    }
    jsonschema.validate(doc, load_schema("manifest"))
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return doc


def _solver_config(args):
    data = dict(args.solver or {})
    if getattr(args, "p", None) is not None:
        data.setdefault("p", args.p)
    if getattr(args, "mesh_h", None) is not None:
        data.setdefault("mesh_h", args.mesh_h)
    return SolverConfig.from_dict(data)


def _fmt(x):
    return repr(float(x))


# --------------------------------------------------------------------------
# commands

def cmd_gamma(args, outputs):
    from .radial import radial_eigenvalue

    if args.n_max < 1:
        raise ConfigError("--n-max must be at least 1")
    rows, ok = [], True
    for n in range(1, args.n_max + 1):
        pair = radial_eigenvalue(args.p, args.dim, n, tol=args.tol)
        ok = ok and pair.converged
        rows.append([n, _fmt(pair.lam), _fmt(pair.residual)])
    _emit(args, _csv_text(["n", "gamma_n", "residual"], rows), outputs)
    return ok


def cmd_nodal_radius(args, outputs):
    from .radial import nodal_radius_report

    rep = nodal_radius_report(args.p, args.dim, tol=args.tol)
    doc = dataclasses.asdict(rep)
    _emit(args, _dump_json(doc, "nodal_radius"), outputs)
    return True


def cmd_lambda1(args, outputs):
    from .eigensolver import extrapolated_first_eigenvalue, first_eigenpair
    from .mesh import build_mesh, write_vtk

    if args.domain is None:
        raise ConfigError("lambda1 needs --domain (JSON text or a path to a JSON file)")
    domain = args.domain
    config = _solver_config(args)
    if args.refine < 0:
        raise ConfigError("--refine must be nonnegative")
    if args.refine == 0:
        pair = first_eigenpair(build_mesh(domain, config.mesh_h), config.p, config)
        levels = [{"h": config.mesh_h, "lambda": pair.lam, "iterations": pair.iterations,
                   "residual": pair.residual, "converged": pair.converged}]
        value, err, rate, ok = pair.lam, None, None, pair.converged
    else:
        finest = config.replace(mesh_h=config.mesh_h / 2**args.refine)
        ext = extrapolated_first_eigenvalue(domain, config.p, finest, levels=args.refine + 1)
        pair = ext.finest
        levels = [{"h": h, "lambda": lam} for h, lam in zip(ext.h, ext.lambdas)]
        value, ok = ext.value, ext.converged
        err = ext.error
        rate = None if math.isnan(ext.rate) else ext.rate
    doc = {"domain": domain_to_dict(domain), "p": config.p, "lambda": value, "error": err,
           "rate": rate, "converged": ok, "levels": levels}
    _emit(args, _dump_json(doc, "lambda1"), outputs)
    if args.vtk:
        write_vtk(args.vtk, pair.field.mesh, {"u": pair.field.values})
        outputs.append(args.vtk)
    return ok


def _certify_one(task):
    from .eigensolver import certify_second_asymmetry

    p, config, levels = task
    return certify_second_asymmetry(p, config, levels=levels).to_dict()


def cmd_certify(args, outputs):
    config = _solver_config(args)
    tasks = [(p, config.replace(p=p), args.levels) for p in args.p_list]
    if args.jobs > 1 and len(tasks) > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            certs = list(pool.map(_certify_one, tasks))
    else:
        certs = [_certify_one(t) for t in tasks]
    _emit(args, _dump_json({"certificates": certs}, "certificate"), outputs)
    return all(c["converged"] for c in certs)


def cmd_obstacle_sweep(args, outputs):
    from .eigensolver import obstacle_sweep

    config = _solver_config(args)
    rows = obstacle_sweep(args.r, args.t, config.p, config, jobs=args.jobs)
    table = [[_fmt(row.t), _fmt(row.lam), row.iterations, _fmt(row.residual), int(row.converged), row.error]
             for row in rows]
    _emit(args, _csv_text(["t", "lambda_1", "iterations", "residual", "converged", "error"], table), outputs)
    for row in rows:
        if row.error:
            logger.warning("t=%g skipped: %s", row.t, row.error)
    return all(row.converged for row in rows if not row.error)


def cmd_reflect(args, outputs):
    from . import fem
    from .eigensolver import tau_n
    from .mesh import write_vtk
    from .reflect import count_nodal_domains, reflect_odd, reflection_plan, weak_residual

    config = _solver_config(args)
    pair = tau_n(args.n, config.p, config)
    plan = reflection_plan(args.n, pair.field.mesh)
    psi = reflect_odd(pair.field, plan)
    doc = {"n": args.n, "p": config.p, "tau_n": pair.lam,
           "nodal_domains": count_nodal_domains(psi),
           "weak_residual": weak_residual(psi, pair.lam, config.p),
           "rayleigh": fem.rayleigh_quotient(psi, config.p),
           "converged": pair.converged,
           "note": REFLECT_NOTE}
    sys.stdout.write(_dump_json(doc, "reflect"))
    if args.out:
        write_vtk(args.out, plan.disk, {"psi": psi.values}, title=f"Psi_{args.n} p={config.p}")
        outputs.append(args.out)
    return pair.converged


REFLECT_NOTE = ("exploratory: whether nodal surfaces close up and whether gamma_2 is maximal "
                "among eigenvalues with two nodal domains are not decided by this output")


COMMANDS = {
    "gamma": cmd_gamma,
    "nodal-radius": cmd_nodal_radius,
    "lambda1": cmd_lambda1,
    "certify": cmd_certify,
    "obstacle-sweep": cmd_obstacle_sweep,
    "reflect": cmd_reflect,
}


def _domain_arg(text):
    try:
        if os.path.exists(text):
            with open(text) as fh:
                text = fh.read()
        return domain_from_dict(json.loads(text))
    except (ValueError, DomainError) as exc:
        raise argparse.ArgumentTypeError(f"bad domain: {exc}") from None


def build_parser():
    parser = argparse.ArgumentParser(
        prog="plapeig",
        description="Dirichlet eigenvalues of the p-Laplacian on the disk and related domains.",
        epilog="Ranges use a:step:b with the endpoint included, e.g. 0:0.1:0.6. "
               "Set PLAP_LOG=DEBUG|INFO|WARNING to control logging.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_):
        sp = sub.add_parser(name, help=help_, description=help_)
        sp.add_argument("--config", help="JSON file whose keys override the flags")
        sp.add_argument("--out", help="output file (default: standard output)")
        return sp

    sp = add("gamma", "radial eigenvalues gamma_1..gamma_n of the unit ball (CSV)")
    sp.add_argument("--p", type=float, default=2.0, help="exponent (default 2)")
    sp.add_argument("--dim", type=int, default=2, help="space dimension (default 2)")
    sp.add_argument("--n-max", type=int, default=2, help="number of eigenvalues (default 2)")
    sp.add_argument("--tol", type=float, default=1e-12, help="relative bracket width (default 1e-12)")

    sp = add("nodal-radius", "radius of the nodal sphere of the second radial eigenfunction (JSON)")
    sp.add_argument("--p", type=float, default=2.0, help="exponent (default 2)")
    sp.add_argument("--dim", type=int, default=2, help="space dimension (default 2)")
    sp.add_argument("--tol", type=float, default=1e-8, help="consistency tolerance (default 1e-8)")

    sp = add("lambda1", "first eigenvalue on a meshed domain (JSON)")
    sp.add_argument("--domain", type=_domain_arg,
                    help='domain as JSON text or file, e.g. \'{"kind": "ball"}\'')
    sp.add_argument("--p", type=float, default=None, help="exponent (default 2)")
    sp.add_argument("--mesh-h", type=float, default=None, help="base mesh size (default 0.05)")
    sp.add_argument("--refine", type=int, default=0,
                    help="number of refinements; with k > 0 the k+1 levels are extrapolated (default 0)")
    sp.add_argument("--vtk", help="also write the finest mesh and eigenfunction as VTK")

    sp = add("certify", "certificate tau_1 + error < gamma_2 for each p (JSON)")
    sp.add_argument("--p-list", type=_float_list, default=[1.5, 2.0, 3.0],
                    help="exponents, comma list or range (default 1.5,2,3)")
    sp.add_argument("--mesh-h", type=float, default=None, help="finest mesh size (default 0.05)")
    sp.add_argument("--levels", type=int, default=4, help="meshes in the refinement chain (default 4)")
    sp.add_argument("--jobs", type=int, default=1, help="worker processes (default 1)")

    sp = add("obstacle-sweep", "first eigenvalue of the disk with an off-centre hole (CSV)")
    sp.add_argument("--r", type=float, default=0.3, help="hole radius (default 0.3)")
    sp.add_argument("--t", type=_float_list, default=parse_range("0:0.1:0.6"),
                    help="offsets, range or comma list (default 0:0.1:0.6)")
    sp.add_argument("--p", type=float, default=None, help="exponent (default 2)")
    sp.add_argument("--mesh-h", type=float, default=None, help="mesh size (default 0.05)")
    sp.add_argument("--jobs", type=int, default=1, help="worker processes (default 1)")

    sp = add("reflect", "odd reflection Psi_n of the pi/n-sector eigenfunction")
    sp.add_argument("--n", type=int, default=1, help="number of reflections / 2 (default 1)")
    sp.add_argument("--p", type=float, default=None, help="exponent (default 2)")
    sp.add_argument("--mesh-h", type=float, default=None, help="sector mesh size (default 0.05)")
    return parser


def _apply_config_file(args, parser):
    """Overlay ``--config`` keys on the parsed flags."""
    args.solver = None
    if not args.config:
        return []
    try:
        with open(args.config) as fh:
            doc = json.load(fh)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read config {args.config}: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError("config file must hold a JSON object")
    for key, value in doc.items():
        if key == "solver":
            args.solver = value
            continue
        if key == "domain":
            value = domain_from_dict(value)
        dest = key.replace("-", "_")
        if dest in ("config", "command") or not hasattr(args, dest):
            raise ConfigError(f"unknown config key {key!r} for command {args.command}")
        if dest in ("t", "p_list") and isinstance(value, str):
            value = parse_range(value)
        setattr(args, dest, value)
    return [args.config]


def _resolved(args):
    out = {}
    for key, value in vars(args).items():
        if key == "domain" and value is not None:
            value = domain_to_dict(value)
        out[key] = value
    return out


def run(argv=None):
    """Run the CLI and return its exit code."""
    logging.basicConfig(level=os.environ.get("PLAP_LOG", "WARNING").upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_CONFIG
    outputs = []
    try:
        inputs = _apply_config_file(args, parser)
        ok = COMMANDS[args.command](args, outputs)
    except (ConfigError, DomainError, MeshError, jsonschema.ValidationError) as exc:
        print(f"plapeig {args.command}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ConvergenceError, IntegrationError) as exc:
        print(f"plapeig {args.command}: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGED
    if args.out:
        write_manifest(args.out + ".manifest.json", args.command, _resolved(args), inputs, outputs)
    if not ok:
        print(f"plapeig {args.command}: solver did not converge", file=sys.stderr)
        return EXIT_NONCONVERGED
    return EXIT_OK


def main():
    sys.exit(run())
