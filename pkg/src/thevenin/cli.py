"""Command-line entry point: simulate, estimate, detect and apps.

Exit codes: 0 ok, 2 input/config error, 3 infeasible circuit, 4 estimation
or detection failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass
from pathlib import Path

from . import __version__
from .applications import (SocCalibration, StabilityInput, load_power, soc_from_voc,
                           stability_derivative)
from .change_detect import WindowConfig, detect_changes, sliding_estimate
from .circuit import SingularCircuitError
from .multi_source import estimate_all
from .nonlinear import NlsConfig
from .phasor import MeasurementFormatError, TheveninParams, format_measurements, read_measurements
from .report import EstimationError
from .scenario import ScenarioError, bundled_names, bundled_path, load_scenario

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_INFEASIBLE = 3
EXIT_ESTIMATION = 4

TRACE_HEADER = ("time_s", "v_th", "theta_rad", "r_th", "x_th", "residual_norm", "converged")


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


@dataclass(frozen=True)
class RunManifest:
    command: str
    input_paths: list[str]
    output_paths: list[str]
    config_digest: str
    tool_version: str = __version__

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "input_paths": self.input_paths,
            "output_paths": self.output_paths,
            "config_digest": self.config_digest,
            "tool_version": self.tool_version,
        }


def _clean(obj):
    """Replace non-finite floats by None so the output stays strict JSON."""
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def dumps(obj) -> str:
    return json.dumps(_clean(obj), indent=2, allow_nan=False) + "\n"


def config_digest(command: str, config: dict, inputs: list[Path]) -> str:
    h = hashlib.sha256()
    h.update(json.dumps({"command": command, "config": config}, sort_keys=True).encode())
    for p in inputs:
        h.update(hashlib.sha256(p.read_bytes()).digest())
    return h.hexdigest()


def write_outputs(command: str, config: dict, inputs: list[Path], outputs: dict[Path, str]) -> None:
    """Write every output plus a manifest, each via temp file and atomic rename."""
    out_paths = list(outputs)
    manifest = RunManifest(
        command=command,
        input_paths=[str(p) for p in inputs],
        output_paths=[str(p) for p in out_paths],
        config_digest=config_digest(command, config, inputs),
    )
    files = dict(outputs)
    files[Path(str(out_paths[0]) + ".manifest.json")] = dumps(manifest.to_dict())
    staged = []
    try:
        for path, text in files.items():
            path.parent.mkdir(parents=True, exist_ok=True)
            fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
            with os.fdopen(fd, "w", newline="") as f:
                f.write(text)
            staged.append((tmp, path))
        for tmp, path in staged:
            os.replace(tmp, path)
    finally:
        for tmp, _ in staged:
            if os.path.exists(tmp):
                os.unlink(tmp)


def _resolve_scenario(arg: str) -> Path:
    p = Path(arg)
    if p.exists():
        return p
    if arg.removesuffix(".json") in bundled_names():
        return bundled_path(arg)
    raise CliError(f"scenario {arg!r} not found (bundled: {', '.join(bundled_names())})", EXIT_INPUT)


def _read_csv(path: Path):
    try:
        return read_measurements(path)
    except FileNotFoundError:
        raise CliError(f"no such file: {path}", EXIT_INPUT) from None
    except MeasurementFormatError as exc:
        raise CliError(f"{path}: {exc}", EXIT_INPUT) from None


def _params_from(d: dict) -> TheveninParams:
    theta = d.get("theta_rad", d.get("theta", 0.0))
    return TheveninParams(float(d["v_th"]), float(theta), float(d["r_th"]), float(d["x_th"]))


def load_truth(path: Path, source_ids, degrees: bool = False) -> dict[str, TheveninParams]:
    """Truth from a scenario file, a flat parameter object, or an object keyed by source id."""
    try:
        data = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise CliError(f"cannot read truth {path}: {exc}", EXIT_INPUT) from None
    try:
        if "sources" in data:
            return load_scenario(path, degrees).truth()
        if "v_th" in data:
            if len(source_ids) != 1:
                raise CliError("flat truth object given for a multi-source batch", EXIT_INPUT)
            return {source_ids[0]: _params_from(data)}
        return {sid: _params_from(v) for sid, v in data.items()}
    except (KeyError, TypeError, ValueError) as exc:
        raise CliError(f"malformed truth {path}: {exc}", EXIT_INPUT) from None


def cmd_simulate(args) -> int:
    path = _resolve_scenario(args.scenario)
    try:
        scenario = load_scenario(path, args.degrees)
        sets = scenario.simulate()
    except SingularCircuitError as exc:
        raise CliError(f"singular circuit: {exc}", EXIT_INFEASIBLE) from None
    except (ScenarioError, ValueError) as exc:
        raise CliError(str(exc), EXIT_INPUT) from None
    out = Path(args.out_csv)
    write_outputs("simulate", {"degrees": args.degrees}, [path], {out: format_measurements(sets)})
    return EXIT_OK


def cmd_estimate(args) -> int:
    in_path = Path(args.in_csv)
    sets = _read_csv(in_path)
    method = "linear" if args.linear else "nonlinear"
    cfg = NlsConfig(initial_guess=args.init, seed=args.seed)
    if method == "linear" and len(sets) < 3:
        print("note: at least three measurement sets are recommended for the linear estimator",
              file=sys.stderr)
    source_ids = sets[0].source_ids
    inputs = [in_path]
    truth = None
    if args.truth:
        inputs.append(Path(args.truth))
        truth = load_truth(Path(args.truth), source_ids, args.degrees)

    try:
        report = estimate_all(sets, method, cfg)
    except EstimationError as exc:
        raise CliError(f"estimation failed: {exc}", EXIT_ESTIMATION) from None
    if truth:
        for sid, r in report.per_source.items():
            if sid in truth:
                r.with_truth(truth[sid])

    if len(source_ids) == 1:
        sid = source_ids[0]
        if sid in report.errors:
            raise CliError(f"estimation failed: {report.errors[sid]}", EXIT_ESTIMATION)
        single = report.per_source[sid]
        if not single.converged:
            raise CliError("estimation failed: solver did not converge within caps", EXIT_ESTIMATION)
        payload = {"source_id": sid, **single.to_dict(args.degrees)}
    else:
        payload = report.to_dict(args.degrees)
    config = {"method": method, "init": args.init, "seed": args.seed, "degrees": args.degrees}
    write_outputs("estimate", config, inputs, {Path(args.out_json): dumps(payload)})
    for sid, msg in report.errors.items():
        print(f"source {sid}: {msg}", file=sys.stderr)
    if not report.ok:
        return EXIT_ESTIMATION
    return EXIT_OK


def _trace_csv(trace) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRACE_HEADER)
    for t, r in trace.points:
        p = r.params
        w.writerow([repr(float(t)), repr(p.v_th), repr(p.theta), repr(p.r_th), repr(p.x_th),
                    repr(r.residual_norm), int(r.converged)])
    return buf.getvalue()


def cmd_detect(args) -> int:
    in_path = Path(args.in_csv)
    sets = _read_csv(in_path)
    if len(sets[0].source_ids) != 1:
        raise CliError("detect expects a single-source measurement stream", EXIT_INPUT)
    try:
        wcfg = WindowConfig(args.window, args.stride, args.method, not args.cold_start,
                            NlsConfig(seed=args.seed))
    except ValueError as exc:
        raise CliError(str(exc), EXIT_INPUT) from None
    try:
        trace = sliding_estimate(sets, wcfg)
        events = detect_changes(trace, args.threshold, args.settle)
    except EstimationError as exc:
        raise CliError(f"detection failed: {exc}", EXIT_ESTIMATION) from None
    except ValueError as exc:
        raise CliError(str(exc), EXIT_INPUT) from None
    payload = {
        "config": {"window_size": args.window, "stride": args.stride, "method": args.method,
                   "warm_start": not args.cold_start, "threshold_rel": args.threshold,
                   "settle_points": args.settle},
        "events": [e.to_dict() for e in events],
    }
    config = dict(payload["config"], seed=args.seed)
    write_outputs("detect", config, [in_path],
                  {Path(args.trace): _trace_csv(trace), Path(args.events): dumps(payload)})
    return EXIT_OK


def format_scalar(x: float) -> str:
    """Six significant digits, fixed-point where sensible."""
    if x == 0:
        return "0.000000"
    return f"{x:#.6g}"


def cmd_apps(args) -> int:
    try:
        if args.app == "power":
            value = load_power(args.vth, args.rth, args.rl)
        elif args.app == "soc":
            value = soc_from_voc(args.voc, SocCalibration(args.a, args.b)).soc
            if not 0.0 <= value <= 1.0:
                print("warning: SOC outside [0, 1]", file=sys.stderr)
            if args.percent:
                value *= 100.0
        else:
            conv = math.radians if args.degrees else float
            value = stability_derivative(StabilityInput(args.eth, args.zth, conv(args.theta), args.y, conv(args.phi)))
    except ValueError as exc:
        raise CliError(str(exc), EXIT_INPUT) from None
    print(format_scalar(value))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="thevenin", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--degrees", action="store_true",
                        help="read/report user-facing angles in degrees (internal math stays in radians)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate a scenario JSON into a measurement CSV")
    p.add_argument("scenario", help=f"scenario JSON path or bundled name ({', '.join(bundled_names())})")
    p.add_argument("out_csv")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("estimate", help="estimate Thevenin parameters from a measurement CSV")
    p.add_argument("in_csv")
    p.add_argument("out_json")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--nonlinear", action="store_true", default=True, help="polar Gauss-Newton fit (default)")
    g.add_argument("--linear", action="store_true", help="linearized regression")
    p.add_argument("--truth", help="ground truth JSON (scenario file or parameter object) for error %%")
    p.add_argument("--init", choices=("random", "from_linear"), default="random")
    p.add_argument("--seed", type=int, default=0, help="seed of the random initial guess")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("detect", help="sliding-window estimation and step-change detection")
    p.add_argument("in_csv")
    p.add_argument("--trace", required=True, help="output trace CSV")
    p.add_argument("--events", required=True, help="output events JSON")
    p.add_argument("--window", type=int, default=4)
    p.add_argument("--stride", type=int, default=1)
    p.add_argument("--method", choices=("nonlinear", "linear"), default="nonlinear")
    p.add_argument("--threshold", type=float, default=0.5, help="relative jump threshold")
    p.add_argument("--settle", type=int, default=3, help="trace points per side for settled medians")
    p.add_argument("--cold-start", action="store_true", help="do not warm-start windows")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("apps", help="application formulas")
    apps = p.add_subparsers(dest="app", required=True)
    a = apps.add_parser("power", help="power into a resistive load")
    a.add_argument("--vth", type=float, required=True)
    a.add_argument("--rth", type=float, required=True)
    a.add_argument("--rl", type=float, required=True)
    a = apps.add_parser("soc", help="state of charge from open-circuit voltage")
    a.add_argument("--voc", type=float, required=True)
    a.add_argument("--a", type=float, required=True, help="slope, volts per unit SOC")
    a.add_argument("--b", type=float, required=True, help="intercept, volts")
    a.add_argument("--percent", action="store_true")
    a = apps.add_parser("stability", help="dS/dY voltage-stability proximity")
    a.add_argument("--eth", type=float, required=True)
    a.add_argument("--zth", type=float, required=True)
    a.add_argument("--theta", type=float, required=True, help="Thevenin impedance angle")
    a.add_argument("--y", type=float, required=True, help="load admittance magnitude")
    a.add_argument("--phi", type=float, required=True, help="load impedance angle")
    p.set_defaults(func=cmd_apps)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"thevenin {args.command}: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
