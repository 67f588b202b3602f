"""Command-line entry point: ``denseleaf {calibrate,run,evaluate,theory-check,rates}``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .config import PROFILES, ConfigError, ExperimentConfig, load_config

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage; that code is reserved for runtime failures here
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(f"{self.prog}: error: {message}")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)
    p.add_argument("--config", help="experiment config (JSON)")
    p.add_argument("--profile", choices=sorted(PROFILES), help="start from a named profile")
    p.add_argument("--seed", type=int, help="override master_seed")
    p.add_argument("--out", help="override output_dir")
    p.add_argument("--replicates", type=int)
    p.add_argument("--n-test", type=int, dest="n_test")
    p.add_argument("--threads", type=int, help="worker processes (default: $DENSELEAF_THREADS or 1)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="denseleaf", description="Two-stage KDE + sparse network density estimation.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    for name, helptext in (("calibrate", "cross-validate the bandwidth constants"),
                           ("run", "run the full experiment")):
        _common(sub.add_parser(name, help=helptext))

    ev = sub.add_parser("evaluate", help="Monte-Carlo risk of a saved estimator")
    _common(ev)
    ev.add_argument("--handle", required=True, help="directory written by save_handle")
    ev.add_argument("--model", help="model descriptor as JSON, e.g. '{\"family\": \"NBm\", \"d\": 2}'")

    tc = sub.add_parser("theory-check", help="Monte-Carlo checks of the probabilistic bounds")
    tc.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)
    tc.add_argument("--seed", type=int, default=0)
    tc.add_argument("--trials", type=int, default=20_000)

    r = sub.add_parser("rates", help="rate phi_n, effective smoothness and entropy bound")
    r.add_argument("--q", type=int, required=True)
    r.add_argument("--alpha", type=float, nargs="+", required=True)
    r.add_argument("--t", type=int, nargs="+", required=True)
    r.add_argument("--n", type=int, required=True)
    r.add_argument("--L", type=int, help="entropy bound: depth")
    r.add_argument("--p0", type=int)
    r.add_argument("--pL1", type=int)
    r.add_argument("--s", type=int)
    r.add_argument("--delta", type=float)
    return parser


def _config(args) -> ExperimentConfig:
    if args.config:
        cfg = load_config(args.config)
    else:
        cfg = PROFILES[args.profile or "desk"]
    if args.config and args.profile:
        raw = json.loads(Path(args.config).read_text())
        raw["profile"] = args.profile
        cfg = ExperimentConfig.from_dict(raw)
    over = {}
    if args.seed is not None:
        over["master_seed"] = args.seed
    if args.out is not None:
        over["output_dir"] = args.out
    if args.replicates is not None:
        over["replicates"] = args.replicates
    if args.n_test is not None:
        over["n_test"] = args.n_test
    return replace(cfg, **over) if over else cfg


def _cmd_calibrate(args) -> int:
    from .runner import calibrate

    cfg = _config(args)
    constants = calibrate(cfg)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "calibration.json").write_text(json.dumps(constants, indent=2, sort_keys=True))
    print(json.dumps(constants, sort_keys=True))
    return EXIT_OK


def _cmd_run(args) -> int:
    from .runner import run_experiment

    cfg = _config(args)
    rows = run_experiment(cfg, args.threads)
    failed = sum(1 for r in rows if r.error)
    print(f"{len(rows)} rows written to {Path(cfg.output_dir) / 'results.csv'} ({failed} failed)")
    return EXIT_OK


def _cmd_evaluate(args) -> int:
    from dataclasses import asdict

    from .._rng import derive_seed
    from ..densities import make_model
    from ..twostage import evaluate, load_handle

    cfg = _config(args)
    if args.model:
        try:
            desc = json.loads(args.model)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"--model is not valid JSON: {exc}") from exc
    else:
        desc = cfg.model.to_dict()
    handle_dir = Path(args.handle)
    if not (handle_dir / "manifest.json").is_file():
        raise ConfigError(f"no estimator manifest in {handle_dir}")
    truth = make_model(desc)
    report = evaluate(load_handle(handle_dir), truth, cfg.n_test, derive_seed(cfg.master_seed, "test"))
    print(json.dumps(asdict(report)))
    return EXIT_OK


def _cmd_theory_check(args) -> int:
    from ..theorycheck import run_default_checks

    reports = run_default_checks(args.seed, args.trials)
    for rep in reports:
        print(rep.to_json())
    return EXIT_OK if all(r.passed for r in reports) else EXIT_RUNTIME


def _cmd_rates(args) -> int:
    from ..network import CompositionDescriptor, entropy_bound, rate_phi

    try:
        desc = CompositionDescriptor(args.q, tuple(args.t), tuple(args.alpha))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    phi, a_star = rate_phi(desc, args.n)
    print(f"{phi:.12g}")
    print("alpha_star " + " ".join(f"{a:.12g}" for a in a_star))
    ent = (args.L, args.p0, args.pL1, args.s, args.delta)
    if all(v is not None for v in ent):
        print(f"entropy_bound {entropy_bound(*ent):.12g}")
    elif any(v is not None for v in ent):
        raise ConfigError("entropy bound needs all of --L --p0 --pL1 --s --delta")
    return EXIT_OK


_COMMANDS = {
    "calibrate": _cmd_calibrate,
    "run": _cmd_run,
    "evaluate": _cmd_evaluate,
    "theory-check": _cmd_theory_check,
    "rates": _cmd_rates,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
