"""Command-line entry point: ``hybridsim <command> ...``.

Exit codes: 0 success, 2 invalid input (parse, validation, infeasible
mapping, expansion, singular fit), 3 simulation failure (deadlock, routing,
negative model time), 4 some suite instances failed.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from .costs import fit_linear_model
from .engine import simulate
from .errors import (ExpansionError, HybridSimError, ModelDomainError, ParseError,
                     SimulationError, SingularFitError, ValidationError)
from .mapping import select_and_map_under_limit
from .model import load_application, load_system, validate_mapping
from .sweep import expand_suite, failures, load_instance, load_suite, run_suite, suite_csv

EXIT_OK, EXIT_INVALID, EXIT_SIMULATION, EXIT_SUITE = 0, 2, 3, 4


def _read_json(path):
    try:
        return json.loads(Path(path).read_text())
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: malformed JSON: {exc}") from exc


def _scalar(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _parse_pairs(pairs, what):
    out = {}
    for item in pairs or ():
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise ParseError(f"{what} must look like name=value, got {item!r}")
        out[key] = value
    return out


def _emit(text: str, out):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _dump(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _instance_from_args(args):
    """Build the run configuration from an instance file and/or flags."""
    doc = _read_json(args.instance) if args.instance else {}
    base_dir = Path(args.instance).parent if args.instance else Path(".")
    doc = dict(doc)
    if args.system:
        doc["system"] = str(Path(args.system).resolve())
    if args.app:
        doc["application"] = str(Path(args.app).resolve())
    if args.mapping:
        doc["mapping"] = (args.mapping if args.mapping == "round_robin"
                          else str(Path(args.mapping).resolve()))
    params = dict(doc.get("params", {}))
    if args.params:
        params.update(_read_json(args.params))
    params.update({k: _scalar(v) for k, v in _parse_pairs(args.param, "--param").items()})
    doc["params"] = params
    if args.idle_scope:
        doc["idle_scope"] = args.idle_scope
    return load_instance(doc, base_dir)


def cmd_simulate(args) -> int:
    inst = _instance_from_args(args)
    res = simulate(inst, keep_trace=bool(args.trace))
    if args.trace:
        with open(args.trace, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["time_s", "device", "delta_demand", "label"])
            for rec in res.trace:
                w.writerow([repr(rec.time), rec.device, rec.delta, rec.label])
    _emit(_dump(res.to_dict(inst.params, inst.mapping)), args.out)
    return EXIT_OK


def cmd_validate(args) -> int:
    inst = _instance_from_args(args)
    violations = validate_mapping(inst.system, inst.app, inst.caps, inst.mapping)
    for v in violations:
        print(f"violation: {v}", file=sys.stderr)
    if violations:
        return EXIT_INVALID
    _emit(_dump({"valid": True, "mapping": inst.mapping.to_nested()}), args.out)
    return EXIT_OK


def cmd_sweep(args) -> int:
    path = Path(args.suite)
    suite = load_suite(_read_json(path), path.parent, idle_scope=args.idle_scope)
    instances = expand_suite(suite)
    outcomes = run_suite(instances, args.workers)
    _emit(suite_csv(outcomes, suite.param_space.names), args.out)
    bad = failures(outcomes)
    for i, exc in bad:
        print(f"instance {i}: {type(exc).__name__}: {exc}", file=sys.stderr)
    return EXIT_SUITE if bad else EXIT_OK


def cmd_fit(args) -> int:
    try:
        with open(args.samples, newline="") as fh:
            rows = list(csv.DictReader(fh))
    except OSError as exc:
        raise ParseError(f"cannot read {args.samples}: {exc.strerror}") from exc
    try:
        samples = [(float(r["data_size"]), float(r["performance"]), float(r["seconds"]))
                   for r in rows]
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError("samples CSV needs numeric columns data_size,performance,seconds") from exc
    try:
        model = fit_linear_model(samples)
    except ModelDomainError as exc:
        raise SingularFitError(str(exc)) from exc
    _emit(_dump({"phi": model.phi, "psi": model.psi, "mpe": model.mpe}), args.out)
    return EXIT_OK


def cmd_select(args) -> int:
    system = load_system(_read_json(args.system))
    appdoc = load_application(_read_json(args.app))
    power = {}
    if args.device_power_file:
        power.update({str(k): float(v) for k, v in _read_json(args.device_power_file).items()})
    try:
        power.update({k: float(v)
                      for k, v in _parse_pairs(args.device_power, "--device-power").items()})
    except ValueError as exc:
        raise ParseError(f"--device-power watts must be numeric: {exc}") from exc
    mapping = select_and_map_under_limit(system, appdoc.app, appdoc.caps, power, args.power_limit,
                                         args.worker)
    drawn = sum(power.get(d, 0.0) for d in mapping.allocated_devices)
    _emit(_dump({"mapping": mapping.to_nested(), "power_limit_w": args.power_limit,
                 "max_power_w": drawn}), args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--idle-scope", choices=("all", "allocated"),
                        help="devices whose idle power counts toward average power")
    common.add_argument("--trace", metavar="PATH", help="write the power trace CSV here")
    common.add_argument("--out", metavar="PATH", help="output file (default: stdout)")

    run = argparse.ArgumentParser(add_help=False)
    run.add_argument("instance", nargs="?", help="instance JSON")
    run.add_argument("--system", help="system JSON (overrides the instance)")
    run.add_argument("--app", help="application JSON (overrides the instance)")
    run.add_argument("--mapping", help="mapping JSON or 'round_robin'")
    run.add_argument("--param", action="append", metavar="NAME=VALUE")
    run.add_argument("--params", metavar="PATH", help="JSON object of parameters")

    p = argparse.ArgumentParser(prog="hybridsim", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", parents=[common, run], help="run one simulation instance")
    s.set_defaults(func=cmd_simulate)
    s = sub.add_parser("validate", parents=[common, run], help="check a mapping against its bounds")
    s.set_defaults(func=cmd_validate)

    s = sub.add_parser("sweep", parents=[common], help="expand and run an optimizer suite")
    s.add_argument("suite")
    s.add_argument("--workers", type=int, default=1)
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("fit", parents=[common], help="fit phi/psi from timing samples")
    s.add_argument("samples", help="CSV with data_size,performance,seconds")
    s.set_defaults(func=cmd_fit)

    s = sub.add_parser("select", parents=[common], help="pick devices under a power limit")
    s.add_argument("--system", required=True)
    s.add_argument("--app", required=True)
    s.add_argument("--power-limit", type=float, required=True, metavar="WATTS")
    s.add_argument("--device-power", action="append", metavar="DEVICE=WATTS")
    s.add_argument("--device-power-file", metavar="PATH")
    s.add_argument("--worker", default="slave")
    s.set_defaults(func=cmd_select)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "sweep" and args.workers < 1:
        print("error: --workers must be >= 1", file=sys.stderr)
        return EXIT_INVALID
    try:
        return args.func(args)
    except (ParseError, ValidationError, ExpansionError, SingularFitError) as exc:
        field = getattr(exc, "field", None)
        where = f" [{field}]" if field else ""
        print(f"error: {type(exc).__name__}{where}: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (SimulationError, ModelDomainError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SIMULATION
    except HybridSimError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
