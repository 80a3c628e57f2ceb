#!/usr/bin/env python3

"""Design and evaluation of control charts for unit interval processes."""

import logging
import pathlib
from typing import Any, Optional, Sequence

import click

from . import charts
from . import config
from . import inference
from . import models
from . import plots
from . import reports
from . import simulation
from . import tables
from . import utils

logger = logging.getLogger(__name__)

DEFAULT_LAMBDAS = tables.LAMBDAS
DEFAULT_DELTAS = (-0.08, -0.06, -0.04, -0.02, 0.0, 0.02, 0.04, 0.06, 0.08)
MAX_SEED = 2 ** 64 - 1


def _add_options(options):
    def _add_options(func):
        for option in reversed(options):
            func = option(func)
        return func
    return _add_options


class _Group(click.Group):
    """Command group turning unitcharts errors into exit codes."""

    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except utils.UnitChartsException as err:
            logger.error("%s", err)
            ctx.exit(err.exit_code)


@click.group(cls=_Group)
@click.option('-v', '--verbose', count=True, help="Increase verbosity")
@click.option('--config', 'config_path',
              type=click.Path(dir_okay=False, path_type=pathlib.Path),
              help="Use another configuration file")
@click.pass_context
def maingroup(ctx: click.Context, verbose: int,
              config_path: Optional[pathlib.Path]):
    """Design and evaluate Shewhart and EWMA charts for unit interval data."""
    utils.setup_logging(verbose)
    userconfig = config.load_config(config_path)
    ctx.default_map = config.default_map(userconfig,
                                         list(maingroup.commands))


def main():
    """Design and evaluate control charts for unit interval data."""
    maingroup()  # pylint: disable=no-value-for-parameter


model_options = [
    click.option('--family', '-f',
                 type=click.Choice([str(f) for f in models.Family],
                                   case_sensitive=False),
                 help="Distribution family"),
    click.option('--mu', type=click.FloatRange(0, 1, min_open=True,
                                               max_open=True),
                 help="In-control mean"),
    click.option('--phi', type=click.FloatRange(0, min_open=True),
                 help="Beta precision"),
    click.option('--sigma', type=click.FloatRange(0, min_open=True),
                 help="Simplex dispersion"),
    click.option('--tau', type=click.FloatRange(0, min_open=True),
                 help="Unit Gamma shape"),
]


def _simulation_options(seed_required: bool = True,
                        count_start: bool = False):
    return [
        click.option('--arl0', type=click.FloatRange(1, min_open=True),
                     default=config.DEFAULTS['arl0'], show_default=True,
                     help="Target in-control ARL"),
        click.option('--xi', type=click.FloatRange(0, min_open=True),
                     default=config.DEFAULTS['xi'], show_default=True,
                     help="Tolerance on the in-control ARL"),
        click.option('--runs', '-n', type=click.IntRange(1),
                     default=config.DEFAULTS['runs'], show_default=True,
                     help="Monte-Carlo replications"),
        click.option('--seed', type=click.IntRange(0, MAX_SEED),
                     required=seed_required, help="Random seed"),
        click.option('--rl-cap', type=click.IntRange(1),
                     default=config.DEFAULTS['rl_cap'], show_default=True,
                     help="Run length at which replications are censored"),
        click.option('--l-grid', type=click.FloatRange(0, min_open=True),
                     default=config.DEFAULTS['l_grid'], show_default=True,
                     help="Resolution of calibrated L values"),
        click.option('--threads', '-j', type=click.IntRange(1),
                     envvar='UNITCHARTS_THREADS',
                     default=config.DEFAULTS['threads'], show_default=True,
                     help="Worker processes"),
        click.option('--count-start/--no-count-start', default=count_start,
                     show_default=True,
                     help="Also count the EWMA starting value in run "
                     "lengths, as the published tables do"),
    ]


report_options = [
    click.option('--output', '-o',
                 type=click.Path(dir_okay=False, path_type=pathlib.Path),
                 help="Write the report to a file instead of stdout"),
    click.option('--table', '-t', 'show_table', is_flag=True,
                 help="Also print an aligned table"),
]

lambda_option = click.option('--lambda', '-l', 'lambdas', multiple=True,
                             type=click.FloatRange(0, 1, min_open=True),
                             help="EWMA smoothing weight (repeatable)")
alpha_option = click.option('--alpha', type=click.FloatRange(0, 1,
                                                             min_open=True,
                                                             max_open=True),
                            default=config.DEFAULTS['alpha'],
                            show_default=True,
                            help="Shewhart false alarm rate")


def parse_model(kwargs: dict[str, Any]) -> models.UnitModel:
    """Get the model described by model options."""
    if not kwargs.get('family') or kwargs.get('mu') is None:
        raise click.UsageError("--family and --mu are required")
    family = models.Family(kwargs['family'].lower())
    name = family.dispersion_name
    others = [f"--{f.dispersion_name}" for f in models.Family
              if f != family and kwargs.get(f.dispersion_name) is not None]
    if others:
        raise click.UsageError(f"{', '.join(others)} not valid for the "
                               f"{family} family")
    if kwargs.get(name) is None:
        raise click.UsageError(f"--{name} is required for the {family} "
                               "family")
    return family.model(kwargs['mu'], kwargs[name])


def parse_design_config(kwargs: dict[str, Any]) -> simulation.DesignConfig:
    """Get the Monte-Carlo settings given by simulation options."""
    if kwargs.get('seed') is None:
        raise click.UsageError("--seed is required for simulations")
    return simulation.DesignConfig(arl0=kwargs['arl0'], xi=kwargs['xi'],
                                   n_runs=kwargs['runs'],
                                   seed=kwargs['seed'],
                                   rl_cap=kwargs['rl_cap'],
                                   l_grid=kwargs['l_grid'],
                                   workers=kwargs['threads'],
                                   count_start=kwargs['count_start'])


def _write(ctx: click.Context, result: Any, output: Optional[pathlib.Path],
           inputs: Sequence[pathlib.Path] = (),
           table: Optional[tuple[list[str], list[list[Any]], str]] = None):
    snapshot = {k: str(v) if isinstance(v, pathlib.Path) else v
                for k, v in ctx.params.items()}
    manifest = reports.make_manifest(ctx.info_name, snapshot, inputs)
    reports.write_report(manifest, result, output)
    if table:
        headers, rows, title = table
        click.echo(reports.render_table(headers, rows, title))


def _phase1_fits(data, families: Sequence[models.Family]
                 ) -> list[inference.FitReport]:
    fits = []
    for family in families:
        logger.info("Fitting %s model...", family.display_name)
        fits.append(inference.fit_mle(family, data))
    return inference.select_model(fits)


@maingroup.command()
@click.argument('input_file',
                type=click.Path(exists=True, dir_okay=False,
                                path_type=pathlib.Path))
@click.option('--ad-method', type=click.Choice([str(m) for m in
                                                inference.AdMethod]),
              default=str(inference.AdMethod.BOOTSTRAP), show_default=True,
              help="Anderson-Darling p-value method")
@click.option('--bootstrap', type=click.IntRange(1),
              default=config.DEFAULTS['bootstrap'], show_default=True,
              help="Bootstrap resamples")
@click.option('--runs-method', type=click.Choice([str(m) for m in
                                                  inference.RunsMethod]),
              default=str(inference.RunsMethod.NORMAL), show_default=True,
              help="Runs test null distribution")
@click.option('--seed', type=click.IntRange(0, MAX_SEED), default=0,
              show_default=True, help="Bootstrap random seed")
@click.option('--threads', '-j', type=click.IntRange(1),
              envvar='UNITCHARTS_THREADS', default=config.DEFAULTS['threads'],
              show_default=True, help="Worker processes")
@click.option('--plot-dir', type=click.Path(file_okay=False,
                                            path_type=pathlib.Path),
              help="Write the distribution function plot in a directory")
@_add_options(report_options)
@click.pass_context
def fit(ctx: click.Context, input_file: pathlib.Path, ad_method: str,
        bootstrap: int, runs_method: str, seed: int, threads: int,
        plot_dir: Optional[pathlib.Path], output: Optional[pathlib.Path],
        show_table: bool):
    """Fit all families on a Phase I sample and test it."""
    # pylint: disable=too-many-arguments,too-many-positional-arguments
    # pylint: disable=too-many-locals
    data = reports.read_series(input_file)
    runs = inference.runs_test(data, inference.RunsMethod(runs_method))
    fits = _phase1_fits(data, list(models.Family))

    gofs = {}
    for fitreport in fits:
        logger.info("Testing %s fit...", fitreport.family.display_name)
        gofs[fitreport.family] = inference.goodness_of_fit(
            data, fitreport, inference.AdMethod(ad_method), bootstrap, seed,
            threads)
    logger.warning("KS p-values ignore parameter estimation and are "
                   "anti-conservative")

    if plot_dir:
        plot_dir.mkdir(parents=True, exist_ok=True)
        plots.save_ecdf(data, fits, plot_dir / "phase1-cdf.svg")

    result = {'n': int(data.size),
              'runs_test': runs,
              'fits': [{**f.as_dict(), **gofs[f.family].as_dict()}
                       for f in fits],
              'ranking': [str(f.family) for f in fits],
              'selected': str(fits[0].family)}
    rows = [[f.family.display_name, f.estimates[0], f.std_errors[0],
             f.estimates[1], f.std_errors[1], f.aic, f.bic,
             gofs[f.family].ad_stat, gofs[f.family].ad_pvalue,
             gofs[f.family].ks_stat, gofs[f.family].ks_pvalue] for f in fits]
    _write(ctx, result, output, [input_file],
           (["family", "mu", "se", "dispersion", "se", "AIC", "BIC", "AD",
             "AD p", "KS", "KS p"], rows,
            f"Runs test p-value: {runs.pvalue:.4f}") if show_table else None)


@maingroup.command()
@_add_options(model_options)
@lambda_option
@_add_options(_simulation_options())
@_add_options(report_options)
@click.pass_context
def design(ctx: click.Context, lambdas: tuple[float, ...],
           output: Optional[pathlib.Path], show_table: bool, **kwargs):
    """Calibrate EWMA charts for a target in-control ARL."""
    model = parse_model(kwargs)
    design_config = parse_design_config(kwargs)

    designs = []
    for lam in lambdas or DEFAULT_LAMBDAS:
        limit, achieved = simulation.calibrate_l(model, lam, design_config)
        chart = charts.ewma_limits(model, lam, limit)
        designs.append({'lambda': lam, 'L': limit, 'chart': chart.describe(),
                        'achieved': achieved.as_dict()})

    rows = [[d['lambda'], d['L'], d['chart']['lcl'], d['chart']['ucl'],
             d['achieved']['arl'], d['achieved']['se_arl']] for d in designs]
    _write(ctx, {'model': model.describe(), 'designs': designs}, output,
           table=(["lambda", "L", "LCL", "UCL", "ARL0", "se"], rows,
                  str(model)) if show_table else None)


def _charts_from_report(path: pathlib.Path
                        ) -> tuple[models.UnitModel, list[charts.EwmaChart]]:
    document = reports.load_report(path)
    try:
        desc = document['result']['model']
        family = models.Family(desc['family'])
        model = family.model(desc['mu'], desc[family.dispersion_name])
        found = [charts.EwmaChart(lam=d['chart']['lambda'],
                                  L=d['chart']['L'], lcl=d['chart']['lcl'],
                                  ucl=d['chart']['ucl'], cl=d['chart']['cl'],
                                  sigma0x=d['chart']['sigma0x'])
                 for d in document['result']['designs']]
    except (KeyError, TypeError, ValueError) as err:
        raise utils.InputError(f"{path} is not a design report: {err}") \
            from err
    return model, found


@maingroup.command()
@_add_options(model_options)
@lambda_option
@click.option('--L', 'limit', type=click.FloatRange(0, min_open=True),
              help="EWMA limit multiplier (calibrated when missing)")
@click.option('--chart', 'chart_report',
              type=click.Path(exists=True, dir_okay=False,
                              path_type=pathlib.Path),
              help="Use the charts of a design report")
@click.option('--shewhart', is_flag=True,
              help="Add the exact Shewhart chart run lengths")
@alpha_option
@click.option('--mu1', multiple=True,
              type=click.FloatRange(0, 1, min_open=True, max_open=True),
              help="Out-of-control mean (repeatable)")
@_add_options(_simulation_options())
@_add_options(report_options)
@click.pass_context
def evaluate(ctx: click.Context, lambdas: tuple[float, ...],
             limit: Optional[float], chart_report: Optional[pathlib.Path],
             shewhart: bool, alpha: float, mu1: tuple[float, ...],
             output: Optional[pathlib.Path], show_table: bool, **kwargs):
    """Estimate run lengths of charts across mean shifts."""
    # pylint: disable=too-many-arguments,too-many-positional-arguments
    # pylint: disable=too-many-locals
    design_config = parse_design_config(kwargs)
    inputs = []
    if chart_report:
        model, ewmas = _charts_from_report(chart_report)
        inputs.append(chart_report)
    else:
        model = parse_model(kwargs)
        ewmas = []
        for lam in lambdas:
            lam_l = limit
            if lam_l is None:
                lam_l, _ = simulation.calibrate_l(model, lam, design_config)
            ewmas.append(charts.ewma_limits(model, lam, lam_l))
    if not ewmas and not shewhart:
        raise click.UsageError("Nothing to evaluate: give --lambda, --chart "
                               "or --shewhart")

    if mu1:
        profile = simulation.ShiftProfile.from_means(model.mu, mu1)
    else:
        profile = simulation.ShiftProfile(
            model.mu, tuple(d for d in DEFAULT_DELTAS
                            if 0.0 < model.mu + d < 1.0))

    result: dict[str, Any] = {'model': model.describe(), 'charts': []}
    rows = []
    for chart in ewmas:
        logger.info("Evaluating EWMA chart with lambda=%s, L=%s...",
                    chart.lam, chart.L)
        estimates = simulation.ooc_profile(chart, model, profile,
                                           design_config)
        result['charts'].append({
            'chart': chart.describe(),
            'profile': [{'mu1': m, **s.as_dict()} for m, s in estimates]})
        rows += [[f"EWMA {chart.lam:g}", m, s.arl, s.sdrl, s.mrl, s.se_arl]
                 for m, s in estimates]

    if shewhart:
        chart = charts.shewhart_limits(model, alpha)
        exact = []
        for m in profile.mu1_values:
            p = simulation.p_out(model.with_mean(m), chart.lcl, chart.ucl)
            exact.append((m, simulation.shewhart_rl_exact(p)))
        result['charts'].append({
            'chart': chart.describe(),
            'profile': [{'mu1': m, **s.as_dict()} for m, s in exact]})
        rows += [["Shewhart", m, s.arl, s.sdrl, s.mrl, s.se_arl]
                 for m, s in exact]

    _write(ctx, result, output, inputs,
           (["chart", "mu1", "ARL", "SDRL", "MRL", "se"], rows, str(model))
           if show_table else None)


@maingroup.command()
@click.option('--case', '-c', type=click.IntRange(1, len(tables.CASES)),
              required=True, help="Reference case")
@click.option('--lambda', '-l', 'lam', required=True,
              type=click.FloatRange(0, 1, min_open=True),
              help="EWMA smoothing weight")
@click.option('--published-l', is_flag=True,
              help="Use published L values instead of calibrating")
@_add_options(_simulation_options())
@_add_options(report_options)
@click.pass_context
def robustness(ctx: click.Context, case: int, lam: float, published_l: bool,
               output: Optional[pathlib.Path], show_table: bool, **kwargs):
    """Evaluate every case model under the limits of every other one."""
    # pylint: disable=too-many-arguments,too-many-positional-arguments
    design_config = parse_design_config(kwargs)
    l_values = None
    if published_l:
        l_values = {f: tables.published_l(f, case, lam)
                    for f in models.Family}

    cells = simulation.robustness_matrix(tables.case_models(case), lam,
                                         design_config,
                                         tables.shift_profile(), l_values)

    rows = [[cell.true_model.family.display_name,
             cell.limits_model.family.display_name, mu1, s.arl, s.sdrl, s.mrl]
            for cell in cells for mu1, s in cell.profile]
    _write(ctx, {'case': case, 'lambda': lam, 'cells': cells}, output,
           table=(["true", "limits", "mu1", "ARL", "SDRL", "MRL"], rows,
                  f"Case {case}, lambda = {lam}") if show_table else None)


@maingroup.command()
@click.argument('phase1', type=click.Path(exists=True, dir_okay=False,
                                          path_type=pathlib.Path))
@click.argument('phase2', type=click.Path(exists=True, dir_okay=False,
                                          path_type=pathlib.Path))
@click.option('--family', '-f',
              type=click.Choice([str(f) for f in models.Family],
                                case_sensitive=False),
              help="Use this family instead of the best fitting one")
@lambda_option
@alpha_option
@click.option('--force', is_flag=True,
              help="Monitor Phase II even if Phase I signals")
@click.option('--plot-dir', type=click.Path(file_okay=False,
                                            path_type=pathlib.Path),
              help="Write chart plots in a directory")
@_add_options(_simulation_options())
@_add_options(report_options)
@click.pass_context
def monitor(ctx: click.Context, phase1: pathlib.Path, phase2: pathlib.Path,
            family: Optional[str], lambdas: tuple[float, ...], alpha: float,
            force: bool, plot_dir: Optional[pathlib.Path],
            output: Optional[pathlib.Path], show_table: bool, **kwargs):
    """Fit a Phase I sample, then monitor a Phase II series."""
    # pylint: disable=too-many-arguments,too-many-positional-arguments
    # pylint: disable=too-many-locals
    design_config = parse_design_config(kwargs)
    data1 = reports.read_series(phase1)
    data2 = reports.read_series(phase2)

    families = [models.Family(family.lower())] if family \
        else list(models.Family)
    fits = _phase1_fits(data1, families)
    model = fits[0].model()
    logger.info("Monitoring with %s", model)

    shewhart = charts.shewhart_limits(model, alpha)
    phase1_result = charts.monitor(shewhart, data1)
    plot_data = [plots.ChartPlotData.from_monitor(
        "Phase I Shewhart chart", shewhart, phase1_result)]
    result: dict[str, Any] = {
        'fits': fits, 'selected': str(model.family),
        'model': model.describe(),
        'phase1': {'chart': shewhart.describe(), **phase1_result.as_dict()},
        'phase2': None}
    rows = [["Phase I Shewhart", shewhart.lcl, shewhart.ucl,
             phase1_result.signal_index]]

    if phase1_result.signaled:
        logger.warning("Phase I sample signals at point %s, it may not be "
                       "in control", phase1_result.signal_index)

    if force or not phase1_result.signaled:
        first = int(data1.size) + 1
        phase2_charts: list[charts.Chart] = [shewhart]
        for lam in lambdas or DEFAULT_LAMBDAS:
            limit, _ = simulation.calibrate_l(model, lam, design_config)
            phase2_charts.append(charts.ewma_limits(model, lam, limit))

        result['phase2'] = []
        for chart in phase2_charts:
            monitored = charts.monitor(chart, data2)
            name = "Shewhart" if isinstance(chart, charts.ShewhartChart) \
                else f"EWMA lambda={chart.lam:g}"
            result['phase2'].append({'chart': chart.describe(),
                                     **monitored.as_dict()})
            plot_data.append(plots.ChartPlotData.from_monitor(
                f"Phase II {name} chart", chart, monitored, first))
            rows.append([f"Phase II {name}", chart.lcl, chart.ucl,
                         monitored.signal_index])
    else:
        logger.warning("Phase II monitoring skipped, use --force to run it")

    result['plots'] = plot_data
    if plot_dir:
        plot_dir.mkdir(parents=True, exist_ok=True)
        for i, data in enumerate(plot_data):
            plots.save_chart(data, plot_dir / f"chart-{i}.svg")

    _write(ctx, result, output, [phase1, phase2],
           (["chart", "LCL", "UCL", "signal"], rows, str(model))
           if show_table else None)


@maingroup.command(name='tables')
@click.argument('table_id', type=click.Choice(tables.TABLE_IDS,
                                              case_sensitive=False))
@click.option('--case', '-c', 'cases', multiple=True,
              type=click.IntRange(1, len(tables.CASES)),
              help="Only compute some cases (repeatable)")
@click.option('--published-l', is_flag=True,
              help="Use published L values instead of calibrating")
@click.option('--input', 'input_file',
              type=click.Path(exists=True, dir_okay=False,
                              path_type=pathlib.Path),
              help="Phase I sample of table 16 (bundled data by default)")
@click.option('--ad-method', type=click.Choice([str(m) for m in
                                                inference.AdMethod]),
              default=str(inference.AdMethod.BOOTSTRAP), show_default=True,
              help="Anderson-Darling p-value method")
@click.option('--bootstrap', type=click.IntRange(1),
              default=config.DEFAULTS['bootstrap'], show_default=True,
              help="Bootstrap resamples")
@_add_options(_simulation_options(seed_required=False,
                                  count_start=True))
@_add_options(report_options)
@click.pass_context
def tables_command(ctx: click.Context, table_id: str, cases: tuple[int, ...],
                   published_l: bool, input_file: Optional[pathlib.Path],
                   ad_method: str, bootstrap: int,
                   output: Optional[pathlib.Path], show_table: bool,
                   **kwargs):
    """Regenerate a table of the reference study."""
    # pylint: disable=too-many-arguments,too-many-positional-arguments
    table_id = table_id.upper()
    inputs = []
    if table_id == '3':
        table = tables.table_moments(cases)
    elif table_id == '16':
        input_file = input_file or reports.bundled_dataset(1)
        inputs.append(input_file)
        seed = kwargs['seed'] if kwargs['seed'] is not None else 0
        table = tables.table_fits(reports.read_series(input_file),
                                  inference.AdMethod(ad_method), bootstrap,
                                  seed, kwargs['threads'])
    elif table_id == 'A1':
        table = tables.table_l_values(parse_design_config(kwargs), cases)
    elif table_id in tables.FAMILY_TABLES:
        table = tables.table_family(table_id, parse_design_config(kwargs),
                                    published_l, cases)
    else:
        table = tables.table_robustness(table_id,
                                        parse_design_config(kwargs),
                                        published_l, cases)

    _write(ctx, table, output, inputs,
           (table.headers, table.rows, f"Table {table.table_id}: "
            f"{table.title}") if show_table else None)
