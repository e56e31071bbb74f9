import argparse
import logging
import sys

from application.experiments import list_experiments
from application.runner import ExperimentRunner
from utils.errors import ConfigError, OutputError, TimeChangeError
from utils.loader import load_config

logging_levels = {0: logging.NOTSET, 1: logging.DEBUG, 2: logging.INFO, 3: logging.WARNING, 4: logging.ERROR,
                  5: logging.CRITICAL}

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2
EXIT_OUTPUT = 3


def build_parser():
    parser = argparse.ArgumentParser(description='Numerical experiments on time changes of the cat-map suspension')
    parser.add_argument('--log-level', type=int, help='logging level, 0 (all) to 5 (critical)', required=False,
                        default=2, choices=sorted(logging_levels))
    commands = parser.add_subparsers(dest='command', required=True)
    run = commands.add_parser('run', help='run the experiment named in a config file')
    run.add_argument('config', type=str, help='path of the YAML experiment config')
    run.add_argument('--seed', type=int, help='seed, overrides the config', required=False, default=None)
    run.add_argument('--out', type=str, help='output directory, overrides the config', required=False, default=None)
    run.add_argument('--tol', type=float, help='numerical tolerance, overrides the config', required=False,
                     default=None)
    commands.add_parser('list', help='list the available experiments')
    return parser


def main(argv=None):
    logging.basicConfig(level=logging.INFO)
    args = build_parser().parse_args(argv)
    logging.getLogger().setLevel(logging_levels[args.log_level])

    if args.command == 'list':
        print(list_experiments())
        return EXIT_OK

    try:
        config = load_config(args.config, {'seed': args.seed, 'out': args.out, 'tol': args.tol})
        runner = ExperimentRunner(config)
    except ConfigError as e:
        logging.error(f"Error in config: {e}")
        return EXIT_CONFIG
    try:
        certificate = runner.run_and_save()
    except OutputError as e:
        logging.error(f"Error while writing results: {e}")
        return EXIT_OUTPUT
    except TimeChangeError as e:
        logging.error(f"Error during experiment '{config.experiment}': {e}")
        return EXIT_FAILED
    logging.info(f"Certificate for '{config.experiment}': pass={certificate.passed}")
    return EXIT_OK if certificate.passed else EXIT_FAILED


if __name__ == '__main__':
    sys.exit(main())
