"""Command-line entry point: ``twovec estimate | montecarlo | validate-covariance``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from ..estimator import EstimatorConfig, VectorObservation, estimate
from ..exceptions import (
    AttitudeError,
    CollinearObservations,
    InvalidNoiseModel,
    InvalidObservation,
    NonUnitQuaternion,
    SingularTrueGeometry,
)
from . import report
from .config import ConfigError, ScenarioConfig
from .montecarlo import validate

EXIT_PASS = 0
EXIT_VALIDATION = 1
EXIT_INPUT = 2
EXIT_NUMERICAL = 3

INPUT_ERRORS = (
    ConfigError,
    InvalidObservation,
    NonUnitQuaternion,
    CollinearObservations,
    InvalidNoiseModel,
    SingularTrueGeometry,
    OSError,
    json.JSONDecodeError,
)


def _u64(text: str) -> int:
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def _nonneg(text: str) -> float:
    v = float(text)
    if not v >= 0:
        raise argparse.ArgumentTypeError("must be a non-negative number")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=_u64)
    common.add_argument("--trials", type=_positive)
    common.add_argument("--sigma", type=_nonneg, help="override the noise standard deviation")
    common.add_argument("--format", choices=("json", "csv"))
    common.add_argument("--threads", type=_positive)

    parser = argparse.ArgumentParser(prog="twovec", description="Two-vector attitude estimation and error validation.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate", parents=[common], help="estimate the attitude from one observation pair")
    p.add_argument("--obs", required=True, help="JSON file with b1, r1, b2, r2")
    p.add_argument("--renormalize", action="store_true", help="normalize the input vectors first")

    p = sub.add_parser("montecarlo", parents=[common], help="run a scenario and write its report")
    p.add_argument("--config", required=True)
    p.add_argument("--out", help="report path (default: config output.path or stdout)")

    p = sub.add_parser("validate-covariance", parents=[common], help="exit 0 iff every validation flag passes")
    p.add_argument("--config", required=True)
    p.add_argument("--out")
    return parser


def _load_obs(path):
    data = json.loads(Path(path).read_text())
    if not isinstance(data, dict) or set(data) != {"b1", "r1", "b2", "r2"}:
        raise ConfigError("observation file needs exactly the keys b1, r1, b2, r2")
    return data


def cmd_estimate(args) -> int:
    data = _load_obs(args.obs)
    vm1 = VectorObservation.checked(data["b1"], data["r1"], renormalize=args.renormalize)
    vm2 = VectorObservation.checked(data["b2"], data["r2"], renormalize=args.renormalize)
    res = estimate(vm1, vm2, EstimatorConfig())
    print(json.dumps(res.to_dict(), sort_keys=True, indent=2))
    return EXIT_PASS


def _run(args):
    cfg = ScenarioConfig.load(args.config).with_overrides(
        seed=args.seed, trials=args.trials, sigma=args.sigma, threads=args.threads
    )
    rep = validate(cfg)
    fmt = args.format or cfg.output.get("format", "json")
    text = report.render(rep, fmt)
    out = args.out or cfg.output.get("path")
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text + ("" if text.endswith("\n") else "\n"))
    return rep


def cmd_montecarlo(args) -> int:
    _run(args)
    return EXIT_PASS


def cmd_validate(args) -> int:
    rep = _run(args)
    for name, ok in sorted(rep.flags.items()):
        print(f"{'PASS' if ok else 'FAIL'} {name}", file=sys.stderr)
    return EXIT_PASS if rep.passed else EXIT_VALIDATION


COMMANDS = {"estimate": cmd_estimate, "montecarlo": cmd_montecarlo, "validate-covariance": cmd_validate}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_PASS if exc.code == 0 else EXIT_INPUT
    try:
        return COMMANDS[args.command](args)
    except INPUT_ERRORS as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (AttitudeError, ArithmeticError, ValueError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
