"""
Command-line entry point for the stationary scattering inversion toolkit
"""
import argparse
import logging
import sys
from pathlib import Path

from pydantic import ValidationError

import config
from utils.logger_config import configure_logging
from cli.commands import COMMANDS, RunContext, load_config

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_INVALID = 2

OVERRIDE_FLAGS = {
    "--n": "n",
    "--q": "q",
    "--T": "T",
    "--steps": "steps",
    "--keep": "keep",
    "--xi-band": "xi_band",
    "--ladder": "ladder",
    "--mode": "mode",
    "--extrapolate": "extrapolate",
    "--refine": "refine",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="app.py",
        description="Spectral simulation and reconstruction for the stationary Schrodinger inverse problem",
    )
    parser.add_argument("command", choices=sorted(COMMANDS), help="Experiment to run")
    parser.add_argument("--config", default=None, help="Flat key = value config file")
    parser.add_argument("--out", default="out", help="Output directory")
    parser.add_argument("--seed", type=int, default=0, help="64-bit seed of the Philox generator")
    parser.add_argument("--threads", type=int, default=1, help="Worker threads for independent tasks")
    parser.add_argument("--log-dir", default=config.LOG_DIR, help="Directory of app.log")
    for flag, key in OVERRIDE_FLAGS.items():
        parser.add_argument(flag, dest=key, default=None, help=f"Override config key '{key}'")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.log_dir)
    try:
        logger.info("=" * 60)
        logger.info(f"Running '{args.command}'")
        logger.info("=" * 60)
        if args.threads < 1:
            raise ValueError(f"--threads must be at least 1, got {args.threads}")
        if not 0 <= args.seed < 2 ** 64:
            raise ValueError(f"--seed must be an unsigned 64-bit integer, got {args.seed}")

        overrides = {key: getattr(args, key) for key in OVERRIDE_FLAGS.values()}
        cfg = load_config(args.command, args.config, overrides)
        ctx = RunContext(command=args.command, out=Path(args.out), seed=args.seed, threads=args.threads)
        manifest = COMMANDS[args.command](cfg, ctx)

        logger.info(f"✓ Manifest written to {manifest}")
        logger.info("=" * 60)
        return EXIT_OK
    except ValidationError as e:
        logger.error(f"Invalid configuration: {str(e)}")
        return EXIT_INVALID
    except (ValueError, FileNotFoundError) as e:
        logger.error(f"Invalid input: {str(e)}")
        return EXIT_INVALID
    except RuntimeError as e:
        logger.error(f"Run failed: {str(e)}")
        return EXIT_RUNTIME
    except KeyboardInterrupt:
        logger.warning("Run interrupted by user")
        return EXIT_RUNTIME
    except Exception as e:
        logger.critical(f"Unexpected error: {str(e)}", exc_info=True)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
