# Use of this source code is governed by a BSD 2-Clause
# license that can be found in the LICENSE file.

import logging

import click
from dotenv import load_dotenv

from .configs import ProblemConfig
from .errors import ConfigErrors, ZerobiasError
from .expansion import check_order_improvement
from .formatters import ModelFormatter, formatter_for


logging.basicConfig()
logger = logging.getLogger(__name__)


class ZerobiasConfigErrors(click.UsageError):
    """Lists every configuration problem, exits with status 2"""

    def __init__(self, wrapped):
        assert isinstance(wrapped, ConfigErrors)
        super().__init__(str(wrapped))
        self.wrapped = wrapped

    def show(self, file=None):
        click.echo(click.style('Configuration Errors:', fg='red'), err=True)
        for e in self.wrapped.errors:
            click.echo(click.style(f' - {e}'), err=True)


def _load(config_path):
    try:
        return ProblemConfig.load_from(config_path)
    except ConfigErrors as e:
        raise ZerobiasConfigErrors(e)


@click.group()
@click.option('--verbose', '-v', count=True,
              help='Log progress, twice for debugging output')
@click.option('--quiet', '-q', is_flag=True, default=False,
              help='Only log errors')
@click.pass_context
def zerobias(ctx, verbose, quiet):
    """Poisson asymptotic expansions of E[h(X_1 + ... + X_n)]

    Problems are described by JSON or YAML files listing the independent
    summands, the test function h and the expansion order.
    """
    package_logger = logging.getLogger('zerobias')
    if quiet:
        package_logger.setLevel(logging.ERROR)
    elif verbose > 1:
        package_logger.setLevel(logging.DEBUG)
    elif verbose:
        package_logger.setLevel(logging.INFO)

    ctx.ensure_object(dict)
    ctx.obj['verbose'] = verbose


@zerobias.command()
@click.option('--config', '-c', 'config_path', required=True,
              envvar='ZEROBIAS_CONFIG', help='Problem description file')
@click.option('--format', '-f', 'output_format', default=None,
              type=click.Choice(['json', 'text']), envvar='ZEROBIAS_FORMAT',
              help='Report format, overrides the configured one')
@click.option('--order', '-n', default=None, type=int,
              envvar='ZEROBIAS_ORDER',
              help='Expansion order, overrides the configured one')
@click.option('--no-oracle', is_flag=True, default=False,
              help='Skip the exact convolution, for large supports')
@click.option('--no-bounds', is_flag=True, default=False,
              help='Skip the remainder bounds')
@click.option('--output', '-o', type=click.File('w'), default='-',
              help='Write the report to a file instead of stdout')
def run(config_path, output_format, order, no_oracle, no_bounds, output):
    """Expand E[h(W)] and report C_k, e_k and the bound of every order"""
    config = _load(config_path)

    report_options = config.report
    try:
        if order is not None:
            config = config.replace(order=order)
        if no_oracle:
            report_options = report_options.replace(include_oracle=False)
        if no_bounds:
            report_options = report_options.replace(include_bounds=False)
        config = config.replace(report=report_options)
    except ConfigErrors as e:
        raise ZerobiasConfigErrors(e)

    try:
        report = config.run()
    except ConfigErrors as e:
        raise ZerobiasConfigErrors(e)
    except ZerobiasError as e:
        raise click.ClickException(f'{type(e).__name__}: {e}')

    check_order_improvement(report)
    formatter = formatter_for(output_format or report_options.format)
    click.echo(formatter.render(report), file=output, nl=False)


@zerobias.command()
@click.option('--config', '-c', 'config_path', required=True,
              envvar='ZEROBIAS_CONFIG', help='Problem description file')
def desc(config_path):
    """Describe the components of the configured sum"""
    config = _load(config_path)
    try:
        model = config.model()
    except ZerobiasError as e:
        raise click.ClickException(f'{type(e).__name__}: {e}')

    for variable in config.variables:
        click.echo(f'variable: {variable.describe()}')
    click.echo(f'function: {config.function.describe()}')
    click.echo(f'order: {config.order}')
    click.echo()
    click.echo(ModelFormatter().render(model), nl=False)


def main():
    load_dotenv()
    zerobias(auto_envvar_prefix='ZEROBIAS')
