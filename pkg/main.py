#!/usr/bin/env python3
"""Command-line entry point: simulate, stationary, verify and sweep."""
import logging
import sys
from pathlib import Path

import click

from core.config import settings
from core.errors import ConfigError, SimulationError
from core.logging import configure_logging
from services import reports, runner, sweep, verification
from services.config_parser import load_config

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2


def _output_dir(spec, output: str | None) -> Path:
    return Path(output or settings.OUTPUT_DIR, spec.run.name)


@click.group()
@click.option("--log-level", default=None, help="Override LOG_LEVEL from the environment.")
@click.version_option(settings.APP_VERSION, prog_name=settings.APP_NAME)
def cli(log_level):
    configure_logging(log_level)


@cli.command()
@click.argument("config", type=click.Path(dir_okay=False))
@click.option("--output", "-o", default=None, help="Output root (default OUTPUT_DIR).")
def simulate(config, output):
    """Integrate the system described by CONFIG."""
    spec = load_config(config)
    result = runner.simulate(spec, _output_dir(spec, output))
    click.echo(f"{spec.run.name}: {result['status']} after {result['steps']} steps -> {result['directory']}")
    return EXIT_OK if result["passed"] else EXIT_FAILED


@cli.command()
@click.argument("config", type=click.Path(dir_okay=False))
@click.option("--output", "-o", default=None, help="Output root (default OUTPUT_DIR).")
def stationary(config, output):
    """Solve for the equilibrium reached from the initial state of CONFIG."""
    spec = load_config(config)
    result = runner.stationary(spec, _output_dir(spec, output))
    click.echo(f"{spec.run.name}: {result['status']} after {result['steps']} Newton steps -> {result['directory']}")
    return EXIT_OK if result["passed"] else EXIT_FAILED


@cli.command()
def verify():
    """Run the manufactured-solution and oracle suite."""
    outcomes = verification.run_verification()
    click.echo(reports.render_verification_summary(outcomes), nl=False)
    return EXIT_OK if all(o.passed for o in outcomes) else EXIT_FAILED


@cli.command(name="sweep")
@click.argument("config", type=click.Path(dir_okay=False))
@click.option("--output", "-o", default=None, help="Output root (default OUTPUT_DIR).")
def sweep_command(config, output):
    """Run one simulation per value of the [sweep] parameter of CONFIG."""
    spec = load_config(config)
    if spec.sweep is None:
        raise ConfigError("sweep needs a [sweep] section", key_path="sweep")
    results = sweep.run_sweep(spec, _output_dir(spec, output))
    for r in results:
        click.echo(f"{spec.sweep.parameter}={r['value']:g}: {r['status']} -> {r['directory']}")
    return EXIT_OK if all(r["passed"] for r in results) else EXIT_FAILED


def cli_main(argv=None) -> int:
    """Run the CLI and map outcomes to exit codes (0 ok, 1 failed, 2 usage or config error)."""
    try:
        code = cli.main(args=argv, prog_name="bulk-surface-ch", standalone_mode=False)
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.ClickException as exc:
        exc.show()
        return EXIT_USAGE
    except click.Abort:
        return EXIT_USAGE
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        return EXIT_USAGE
    except SimulationError as exc:
        logger.error("%s", exc)
        click.echo(f"error: {exc}", err=True)
        return EXIT_FAILED
    return EXIT_OK if code is None else int(code)


if __name__ == "__main__":
    sys.exit(cli_main(sys.argv[1:]))
