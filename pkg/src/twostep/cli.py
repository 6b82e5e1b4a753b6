"""Command-line entry point: ``twostep <command> [--config PATH] [--seed INT] [--out DIR] ...``.

Exit codes: 0 on success, 2 for a configuration error, 3 when a run
diverges where divergence is not an expected outcome.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .harness import (
    ConfigError,
    ExperimentConfig,
    UnexpectedDivergence,
    cmd_bounds_check,
    cmd_compare,
    cmd_lower_bound,
    cmd_run,
    cmd_stability_map,
    load_config,
)

log = logging.getLogger("twostep")

EXIT_OK, EXIT_CONFIG, EXIT_DIVERGED = 0, 2, 3


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON configuration file")
    common.add_argument("--seed", type=int, help="master seed (overrides the config)")
    common.add_argument("--out", default="out", help="output directory (default: out)")
    common.add_argument("--reps", type=int, help="replications (overrides the config)")
    common.add_argument("--anytime", action="store_true", help="recompute horizon-tuned step sizes at every step")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="twostep", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("run", parents=[common], help="seeded replications of configured algorithms")
    sm = sub.add_parser("stability-map", parents=[common], help="root classification over an (alpha, beta) grid")
    sm.add_argument("--alpha-range", type=float, nargs=2, metavar=("LOW", "HIGH"))
    sm.add_argument("--beta-range", type=float, nargs=2, metavar=("LOW", "HIGH"))
    sm.add_argument("--h", type=float)
    sm.add_argument("--resolution", type=int)
    bc = sub.add_parser("bounds-check", parents=[common], help="exact empirical values against upper bounds")
    bc.add_argument("--theorem", choices=["2", "corollary1", "3", "4"])
    lb = sub.add_parser("lower-bound", parents=[common], help="adversarial sequences approaching their limits")
    lb.add_argument("--regime", choices=["first", "second"])
    lb.add_argument("--n", type=int, nargs="+")
    sub.add_parser("compare", parents=[common], help="unified, averaged, accelerated and baseline methods side by side")
    return p


def _dispatch(args: argparse.Namespace) -> None:
    data = load_config(args.config)
    if args.command in ("run", "compare"):
        if not data:
            raise ConfigError(f"'{args.command}' needs --config")
        cfg = ExperimentConfig.from_dict(data, seed=args.seed, reps=args.reps)
        if args.command == "run":
            for name, path in cmd_run(cfg, args.out, args.anytime).items():
                log.info("%s -> %s", name, path)
        else:
            for path in cmd_compare(cfg, args.out, args.anytime):
                log.info("wrote %s", path)
    elif args.command == "stability-map":
        a = args.alpha_range or data.get("alpha_range")
        b = args.beta_range or data.get("beta_range")
        h = args.h if args.h is not None else data.get("h", 1.0)
        res = args.resolution or data.get("resolution", 200)
        if a is None or b is None:
            raise ConfigError("stability-map needs alpha and beta ranges")
        log.info("wrote %s", cmd_stability_map(tuple(a), tuple(b), float(h), int(res), args.out))
    elif args.command == "bounds-check":
        if args.theorem:
            data["theorem"] = args.theorem
        log.info("wrote %s", cmd_bounds_check(data, args.out))
    elif args.command == "lower-bound":
        if args.regime:
            data["regime"] = args.regime
        if args.n:
            data["n"] = args.n
        log.info("wrote %s", cmd_lower_bound(data, args.out))


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        _dispatch(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except UnexpectedDivergence as exc:
        print(f"diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
