#!/usr/bin/env python3
from dotenv import dotenv_values, load_dotenv
load_dotenv("config.env", override=True)

import argparse
import math
import os
import sys
import time
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

from __init__ import DEFAULT_RADII, DEFAULT_SAMPLES, EVENTS, LOGGER, SUITES, VERSION
from config import ConfigError, config
from helpers import exponent, mc_estimator, moment, numtheory
from helpers.errors import BackboneError
from helpers.suites import run_suite
from helpers.utils import get_readable_time, provenance, to_json

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SUITE_FAILED = 3
EXIT_NUMERICAL = 4

COMMANDS = ["exact", "table", "moment", "verify", "simulate", "estimate", "numtheory"]


def parse_radii(text: str) -> List[int]:
    try:
        radii = [int(r) for r in str(text).split(",") if r.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"radii must be comma-separated integers, got {text!r}")
    if not radii:
        raise argparse.ArgumentTypeError("radii must not be empty")
    return radii


@dataclass
class RunConfig:
    """Validated view of one invocation."""
    command: str
    kappa: Optional[float] = None
    q: Optional[float] = None
    lam: Optional[float] = None
    gamma: Optional[float] = None
    alpha: Optional[float] = None
    theta: Optional[float] = None
    radii: List[int] = field(default_factory=list)
    samples: int = DEFAULT_SAMPLES
    seed: int = 0
    workers: int = 1
    tol: Optional[float] = None
    output_path: Optional[str] = None
    format: str = "json"

    def validate(self):
        if self.command not in COMMANDS:
            raise ConfigError(f"command: unknown subcommand {self.command!r}")
        if self.kappa is not None and not (4.0 < self.kappa < 8.0):
            raise ConfigError(f"kappa: {self.kappa} outside (4, 8)")
        if self.q is not None and not (0.0 < self.q <= 4.0):
            raise ConfigError(f"q: {self.q} outside (0, 4]")
        if self.gamma is not None and not (math.sqrt(2.0) < self.gamma < 2.0):
            raise ConfigError(f"gamma: {self.gamma} outside (sqrt 2, 2)")
        if self.samples < 1:
            raise ConfigError(f"samples: must be >= 1, got {self.samples}")
        if self.workers < 1:
            raise ConfigError(f"workers: must be >= 1, got {self.workers}")
        if self.tol is not None and not self.tol > 0:
            raise ConfigError(f"tol: must be positive, got {self.tol}")
        if any(r < 1 for r in self.radii):
            raise ConfigError(f"radii: must be positive, got {self.radii}")
        if any(b <= a for a, b in zip(self.radii, self.radii[1:])):
            raise ConfigError(f"radii: must be increasing, got {self.radii}")
        if self.format not in ("json", "csv"):
            raise ConfigError(f"format: expected json or csv, got {self.format!r}")
        return self


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="backbone", description="Backbone exponent toolkit")
    parser.add_argument("--version", action="version", version=f"%(prog)s {VERSION}")
    parser.add_argument("--config", help="flat key=value file; keys are flag names")
    parser.add_argument("--output", help="write the result here instead of stdout")
    sub = parser.add_subparsers(dest="command", required=True)
    parser.set_defaults(subcommands=sub.choices)

    exact = sub.add_parser("exact", help="solve the exponent equation at one kappa")
    point = exact.add_mutually_exclusive_group()
    point.add_argument("--kappa", type=float, default=6.0)
    point.add_argument("--q", type=float)

    sub.add_parser("table", help="exponent at the tabulated FK cluster weights q")

    mom = sub.add_parser("moment", help="evaluate the moment formula")
    mom.add_argument("--kappa", type=float)
    mom.add_argument("--gamma", type=float)
    mom.add_argument("--lambda", dest="lam", type=float, help="real moment parameter; omit to solve F(-x) = 1")
    mom.add_argument("--lambda-im", dest="lam_im", type=float, default=0.0)
    mom.add_argument("--alpha", type=float, help="evaluate in the Liouville parametrisation")
    mom.add_argument("--theta", type=float, help="evaluate directly at theta")
    mom.add_argument("--theta-im", dest="theta_im", type=float, default=0.0)

    verify = sub.add_parser("verify", help="run a verification suite")
    verify.add_argument("--suite", choices=SUITES, required=True)
    verify.add_argument("--tol", type=float)
    verify.add_argument("--workers", type=int)
    verify.add_argument("--format", choices=["json", "csv"], default="csv")

    sim = sub.add_parser("simulate", help="Monte Carlo arm-event frequencies")
    sim.add_argument("--event", choices=EVENTS, default="bb")
    sim.add_argument("--radii", type=parse_radii, default=list(DEFAULT_RADII))
    sim.add_argument("--samples", type=int, default=DEFAULT_SAMPLES)
    sim.add_argument("--seed", type=int, default=config.SEED)
    sim.add_argument("--workers", type=int)
    sim.add_argument("--ratio", type=int, help="use annuli (n, ratio*n) instead of balls")
    sim.add_argument("--p", type=float, default=0.5)
    sim.add_argument("--format", choices=["json", "csv"], default="csv")

    est = sub.add_parser("estimate", help="fit exponents from a simulate CSV")
    est.add_argument("--input", required=True)
    est.add_argument("--reference", type=float, help="exponent to report alongside the fit")

    nt = sub.add_parser("numtheory", help="cyclotomic and minimal-polynomial queries")
    nt.add_argument("--n", type=int)
    nt.add_argument("--k", type=int, default=1)
    nt.add_argument("--scan", type=float, help="search a small integer polynomial vanishing here")
    nt.add_argument("--scan-xi", type=float, help="scan at xi(kappa) for this kappa")
    nt.add_argument("--max-degree", type=int, default=4)
    nt.add_argument("--max-height", type=int, default=30)
    nt.add_argument("--workers", type=int)
    return parser


def _subparser(parser: argparse.ArgumentParser, command: str) -> argparse.ArgumentParser:
    subcommands = parser.get_default("subcommands")
    if command in subcommands:
        return subcommands[command]
    raise ConfigError(f"command: unknown subcommand {command!r}")


def apply_config_file(parser: argparse.ArgumentParser, path: str, command: str):
    """Turn key=value lines into parser defaults so explicit flags still win."""
    if not os.path.isfile(path):
        raise ConfigError(f"config: file {path!r} not found")
    target = _subparser(parser, command)
    dests = {a.dest for a in target._actions} | {a.dest for a in parser._actions}
    defaults = {}
    for key, value in dotenv_values(path).items():
        dest = key.strip().lstrip("-").replace("-", "_")
        if dest == "lambda":
            dest = "lam"
        if dest not in dests or dest in ("help", "config", "version", "subcommands"):
            raise ConfigError(f"{key}: not a flag of '{command}'")
        if value is None:
            raise ConfigError(f"{key}: missing value")
        defaults[dest] = value
    # string defaults go through each action's type on parse
    target.set_defaults(**{k: v for k, v in defaults.items() if k != "output"})
    if "output" in defaults:
        parser.set_defaults(output=defaults["output"])
    LOGGER.debug(f"config file {path}: {sorted(defaults)}")


def resolve_workers(requested: Optional[int]) -> int:
    if config.THREADS:
        return config.THREADS
    return requested or config.WORKERS


def run_config(args: argparse.Namespace) -> RunConfig:
    return RunConfig(
        command=args.command,
        kappa=getattr(args, "kappa", None),
        q=getattr(args, "q", None),
        lam=getattr(args, "lam", None),
        gamma=getattr(args, "gamma", None),
        alpha=getattr(args, "alpha", None),
        theta=getattr(args, "theta", None),
        radii=list(getattr(args, "radii", []) or []),
        samples=getattr(args, "samples", DEFAULT_SAMPLES),
        seed=getattr(args, "seed", config.SEED),
        workers=resolve_workers(getattr(args, "workers", None)),
        tol=getattr(args, "tol", None),
        output_path=args.output,
        format=getattr(args, "format", "json"),
    ).validate()


def _settings(args: argparse.Namespace, workers: int) -> dict:
    settings = {k: v for k, v in vars(args).items() if k not in ("config", "output", "workers", "subcommands")}
    # counts are identical for any worker count
    LOGGER.debug(f"settings {settings} on {workers} worker(s)")
    return settings


def _emit(text: str, path: Optional[str]):
    if path:
        os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        LOGGER.info(f"Wrote {path}")
    else:
        sys.stdout.write(text)
        sys.stdout.flush()


def _json(payload: dict, args: argparse.Namespace, run: RunConfig, seed: Optional[int] = None) -> str:
    payload = dict(payload, provenance=provenance(_settings(args, run.workers), seed))
    return to_json(payload) + "\n"


# ---------------------------------------------------------------------------
# commands


def cmd_exact(args, run: RunConfig) -> int:
    kappa = exponent.kappa_from_q(run.q) if run.q is not None else run.kappa
    solution = exponent.solve_xi(kappa)
    payload = solution.to_dict()
    if run.q is not None:
        payload["q"] = run.q
    _emit(_json(payload, args, run), run.output_path)
    return EXIT_OK


def cmd_table(args, run: RunConfig) -> int:
    rows = [{"q": q, "kappa": kappa, "xi": xi} for q, kappa, xi in exponent.exponent_table()]
    kappa0 = exponent.solve_kappa0()
    payload = {"rows": rows, "kappa0": kappa0, "xi_kappa0": 1.0 - kappa0 / 8.0,
               "arm_exponents": exponent.arm_exponents(6.0)}
    _emit(_json(payload, args, run), run.output_path)
    return EXIT_OK


def cmd_moment(args, run: RunConfig) -> int:
    if run.gamma is not None:
        params = exponent.KappaParams.from_gamma(run.gamma)
    elif run.kappa is not None:
        params = exponent.KappaParams(run.kappa)
    else:
        raise ConfigError("kappa: moment needs --kappa or --gamma")
    payload = {"kappa": params.kappa, "gamma": params.gamma}
    if run.alpha is not None:
        value = moment.moment_f_gamma(params, run.alpha)
        payload.update(alpha=run.alpha, **{"lambda": moment.lambda_from_alpha(params, run.alpha)}, re=value, im=0.0)
    elif run.theta is not None:
        value = moment.moment_f_theta(params, complex(run.theta, args.theta_im))
        payload.update(theta=run.theta, theta_im=args.theta_im, re=value.real, im=value.imag)
    elif run.lam is not None:
        value = moment.moment_f(params, complex(run.lam, args.lam_im))
        payload.update(**{"lambda": run.lam, "lambda_im": args.lam_im}, re=value.value.real, im=value.value.imag)
    else:
        payload["root"] = moment.xi_from_moment(params).to_dict()
    _emit(_json(payload, args, run), run.output_path)
    return EXIT_OK


def _suite_csv(report) -> str:
    lines = ["name,params,lhs,rhs,error,pass"]
    for row in report.rows:
        params = ";".join(f"{k}={v!r}" for k, v in row.params.items())
        lines.append(f"{row.name},{params},{row.lhs!r},{row.rhs!r},{row.error!r},{'pass' if row.passed else 'fail'}")
    return "\n".join(lines) + "\n"


def cmd_verify(args, run: RunConfig) -> int:
    start = time.time()
    report = run_suite(args.suite, run.tol, run.workers)
    LOGGER.info(f"verify {args.suite} finished in {get_readable_time(time.time() - start)}")
    if run.format == "csv":
        header = "".join(f"# {k}: {v}\n" for k, v in provenance(_settings(args, run.workers)).items())
        _emit(header + _suite_csv(report), run.output_path)
    else:
        _emit(_json(report.to_dict(), args, run), run.output_path)
    return EXIT_OK if report.passed else EXIT_SUITE_FAILED


def cmd_simulate(args, run: RunConfig) -> int:
    batches = mc_estimator.run_trials(args.event, run.radii, run.samples, run.seed, run.workers, args.p,
                                      args.ratio)
    prov = provenance(_settings(args, run.workers), run.seed)
    if run.format == "csv":
        _emit(mc_estimator.to_csv_text(batches, prov), run.output_path)
    else:
        _emit(_json({"batches": [b.to_row() for b in batches]}, args, run, run.seed), run.output_path)
    return EXIT_OK


def cmd_estimate(args, run: RunConfig) -> int:
    if not os.path.isfile(args.input):
        raise ConfigError(f"input: file {args.input!r} not found")
    with open(args.input, encoding="utf-8") as f:
        batches, source = mc_estimator.read_csv(f)
    reports = []
    for event in sorted({b.event for b in batches}):
        balls, annuli = mc_estimator.split_by_kind(b for b in batches if b.event == event)
        reports.append(mc_estimator.fit_report(balls, annuli, args.reference))
    payload = {"reports": reports, "source": source}
    _emit(_json(payload, args, run, int(source["seed"]) if "seed" in source else None), run.output_path)
    return EXIT_OK


def cmd_numtheory(args, run: RunConfig) -> int:
    payload = {}
    if args.n is not None:
        n = args.n
        payload.update(
            n=n,
            totient=numtheory.totient(n),
            cyclotomic=numtheory.cyclotomic(n).to_dict(),
            min_poly=numtheory.min_poly_two_cos(n).to_dict(),
            classification=str(numtheory.classify_two_cos(args.k, n)),
            k=args.k,
        )
    target = args.scan
    if args.scan_xi is not None:
        target = exponent.solve_xi(args.scan_xi).xi
    if target is not None:
        found = numtheory.small_poly_scan(target, args.max_degree, args.max_height, run.workers)
        payload["scan"] = {"x": target, "max_degree": args.max_degree, "max_height": args.max_height,
                           "polynomial": found.to_dict() if found else None}
    if not payload:
        raise ConfigError("n: numtheory needs --n, --scan or --scan-xi")
    _emit(_json(payload, args, run), run.output_path)
    return EXIT_OK


HANDLERS = {
    "exact": cmd_exact,
    "table": cmd_table,
    "moment": cmd_moment,
    "verify": cmd_verify,
    "simulate": cmd_simulate,
    "estimate": cmd_estimate,
    "numtheory": cmd_numtheory,
}


def parse_and_dispatch(argv: Optional[Sequence[str]] = None, config_file: Optional[str] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        path = config_file or args.config
        if path:
            apply_config_file(parser, path, args.command)
            args = parser.parse_args(argv)
        run = run_config(args)
        LOGGER.info(f"backbone {VERSION}: {run.command}")
        return HANDLERS[run.command](args, run)
    except SystemExit as e:
        # argparse exits 2 on usage errors and 0 on --help
        return int(e.code or 0)
    except ConfigError as e:
        print(f"backbone: configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except BackboneError as e:
        print(f"backbone: {type(e).__name__}: {e}", file=sys.stderr)
        LOGGER.debug("command failed", exc_info=True)
        return e.exit_code


def main():
    sys.exit(parse_and_dispatch())


if __name__ == "__main__":
    main()
