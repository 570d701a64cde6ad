"""Command line entry point: `poissonlab simulate | sweep | frontier | verify`.

Values come from the defaults, then `--config`, then the flags. Exit status is 0 on success, 1 on invalid input,
2 on a runtime failure or an infeasible frontier, and 3 when a verification check fails.
"""
import sys
import functools

import click
from loguru import logger

from .__version__ import __version__
from .harness import cmd_simulate, cmd_sweep, cmd_frontier, cmd_verify
from ._base.settings import ExperimentConfig, FrontierQuery, VerifyConfig, ConfigError, FORMATS, SUITES

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME, EXIT_FAILED = 0, 1, 2, 3


def _configure_logging(verbose, quiet, log_json):
    logger.remove()
    level = 'DEBUG' if verbose else 'WARNING' if quiet else 'INFO'
    if log_json:
        logger.add(sys.stderr, level=level, serialize=True)
    else:
        logger.add(sys.stderr, level=level, format="<green>{time:HH:mm:ss}</green> | <level>{level: <7}</level> | {message}")


def _configured(config, path, **flags):
    "File values first, then every flag that was given."
    if path:
        config.load(path)
    return config(**{k: v for k, v in flags.items() if v is not None})


def _emit(report, config):
    if config.out:
        path = report.write(config.out, config.format)
        logger.info(f"wrote {len(report)} rows to {path}")
    else:
        click.echo(report.render(config.format), nl=False)


def _output_options(func):
    @click.option('--config', 'config_path', type=click.Path(dir_okay=False), help='TOML or JSON configuration file.')
    @click.option('--trials', 'n_trials', type=int, help='Monte Carlo trials per message.')
    @click.option('--seed', type=int, help='Root seed, 0 <= seed < 2**64.')
    @click.option('--format', 'format', type=click.Choice(FORMATS), help='Report format.')
    @click.option('--out', type=click.Path(dir_okay=False), help='Report file; stdout when omitted.')
    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        return func(*args, **kwargs)
    return wrapper


def _scheme_options(func):
    @click.option('--scheme', type=str, help='binary-zero-dark, binary-dark-window, mary-zero-dark or mary-dark-window.')
    @click.option('--M', 'M', type=int, help='Number of messages.')
    @click.option('--A', 'A', type=float, help='Peak power.')
    @click.option('--horizon', type=float, help='T for zero-dark schemes, the window for dark-window schemes.')
    @click.option('--dark-current', 'dark_current', type=float, help='Dark current rate.')
    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        return func(*args, **kwargs)
    return wrapper


@click.group()
@click.version_option(__version__, prog_name='poissonlab')
@click.option('-v', '--verbose', is_flag=True, help='Log debug messages.')
@click.option('-q', '--quiet', is_flag=True, help='Log warnings and errors only.')
@click.option('--log-json', is_flag=True, help='Log serialized JSON records to stderr.')
def main(verbose, quiet, log_json):
    """Poisson channel with feedback: simulate schemes, sweep parameters, search the energy frontier, verify identities."""
    _configure_logging(verbose, quiet, log_json)


@main.command()
@_scheme_options
@_output_options
def simulate(config_path, **flags):
    """Per-message error and energy of one scheme, with closed forms where they exist."""
    config = _configured(ExperimentConfig(), config_path, **flags)
    _emit(cmd_simulate(config), config)
    return EXIT_OK


@main.command()
@click.option('--axis', 'axes', multiple=True, help='NAME=VALUES with VALUES as 1,2,3 or lo:hi:num or log:lo:hi:num. Up to two.')
@_scheme_options
@_output_options
def sweep(config_path, axes, **flags):
    """simulate over a grid of one or two parameters."""
    config = _configured(ExperimentConfig(), config_path, axes=list(axes) or None, **flags)
    _emit(cmd_sweep(config), config)
    return EXIT_OK


@main.command()
@click.option('--epsilon', type=float, help='Target average error probability.')
@click.option('--M', 'M', type=int, help='Number of messages.')
@click.option('--dark-current', 'dark_current', type=float, help='Dark current rate.')
@click.option('--A-min', 'A_min', type=float)
@click.option('--A-max', 'A_max', type=float)
@click.option('--horizon-min', 'horizon_min', type=float)
@click.option('--horizon-max', 'horizon_max', type=float)
@click.option('--grid', type=int, help='Search points per axis.')
@_output_options
def frontier(config_path, **flags):
    """Least average energy meeting the target error, with a Monte Carlo certificate."""
    query = _configured(FrontierQuery(), config_path, **flags)
    report, result = cmd_frontier(query)
    _emit(report, query)
    return EXIT_OK if result.feasible else EXIT_RUNTIME


@main.command()
@click.argument('suites', nargs=-1)
@click.option('--policies', 'n_policies', type=int, help='Fuzzed policies for the identity and converse suites.')
@_output_options
def verify(config_path, suites, **flags):
    """Run check suites: identity, converse, oracle, substrate."""
    config = _configured(VerifyConfig(), config_path, suites=list(suites) or None, **flags)
    report, passed = cmd_verify(config)
    _emit(report, config)
    return EXIT_OK if passed else EXIT_FAILED


def run(args=None):
    "Console entry point, returns the exit status."
    try:
        return main.main(args=args, prog_name='poissonlab', standalone_mode=False) or EXIT_OK
    except ConfigError as e:
        logger.error(f"invalid configuration: {e}")
        return EXIT_INVALID
    except click.ClickException as e:
        e.show()
        return EXIT_INVALID
    except click.exceptions.Abort:
        return EXIT_INVALID
    except Exception as e:
        logger.exception(f"{type(e).__name__}: {e}")
        return EXIT_RUNTIME


if __name__ == '__main__':
    sys.exit(run())
