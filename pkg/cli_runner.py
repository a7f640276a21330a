# cli_runner.py
"""Command line for the entangled-imaging simulator.

    python cli_runner.py run --config presets/far_field.cfg --pulses 2000 --out results/far_field
    python cli_runner.py oracle --config presets/near_field.cfg --model W
    python cli_runner.py discriminate --config presets/far_field.cfg
    python cli_runner.py stats --seed 7

Exit codes: 0 success, 1 configuration error, 2 any other simulation or output failure.
Progress goes to standard error; data go to files only.
"""
import argparse
import logging
import sys

from services.errors import ConfigurationError, SimulationError
from services.experiments import discriminate, run_experiment, run_oracle, run_stats_suite
from services.run_config import load_config

logger = logging.getLogger("cli_runner")

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_FAILURE = 2


def build_parser():
    parser = argparse.ArgumentParser(description="Entangled imaging Monte-Carlo and oracles")
    parser.add_argument("--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_config=True):
        if needs_config:
            p.add_argument("--config", required=True, help="run configuration file")
        p.add_argument("--seed", type=int, default=None, help="override the master seed")
        p.add_argument("--out", default=None, help="output directory")

    run = sub.add_parser("run", help="Monte-Carlo experiment")
    common(run)
    run.add_argument("--pulses", type=int, default=None, help="override the pulse count")
    run.add_argument("--workers", type=int, default=None, help="worker processes")

    oracle = sub.add_parser("oracle", help="quadrature correlation function")
    common(oracle)
    oracle.add_argument("--model", choices=("pure", "W", "Wprime"), default=None)

    disc = sub.add_parser("discriminate", help="pure / W / Wprime contrast table")
    common(disc)
    disc.add_argument("--monte-carlo", action="store_true", help="use the samplers instead of oracles")
    disc.add_argument("--pulses", type=int, default=None)
    disc.add_argument("--workers", type=int, default=None)

    stats = sub.add_parser("stats", help="photon-statistics checks")
    common(stats, needs_config=False)
    stats.add_argument("--samples", type=int, default=100000)
    stats.add_argument("--pulses", type=int, default=10000)
    return parser


def configure_logging(verbose):
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


def dispatch(args):
    if args.command == "stats":
        report = run_stats_suite(seed=args.seed or 0, n_samples=args.samples,
                                 n_pulses=args.pulses, out_dir=args.out or "results")
        logger.info("Thermal fit p=%.3g, pmf p=%.3g, twin-beam z=%.2f",
                    report.thermal.p_value, report.pmf_p_value, report.twin_z)
        return EXIT_OK

    config = load_config(args.config)
    overrides = {"seed": args.seed, "pulses": getattr(args, "pulses", None)}
    config = config.with_values(**{k: v for k, v in overrides.items() if v is not None})

    if args.command == "run":
        output = run_experiment(config, out_dir=args.out, workers=args.workers)
        for name, path in output.files.items():
            logger.info("Wrote %s: %s", name, path)
    elif args.command == "oracle":
        run_oracle(config, out_dir=args.out, model=args.model)
    elif args.command == "discriminate":
        table = discriminate(config, out_dir=args.out, monte_carlo=args.monte_carlo,
                             workers=args.workers)
        sys.stderr.write(table.to_string(index=False) + "\n")
        if not table["passed"].all():
            logger.warning("Discriminator ordering not reproduced")
    return EXIT_OK


def main(argv=None):
    args = build_parser().parse_args(argv)
    configure_logging(args.verbose)
    try:
        return dispatch(args)
    except ConfigurationError as e:
        logger.error("Configuration error: %s", e)
        return EXIT_CONFIG
    except SimulationError as e:
        logger.error("Simulation failed: %s", e)
        return EXIT_FAILURE
    except OSError as e:
        logger.error("Cannot write results: %s", e)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
