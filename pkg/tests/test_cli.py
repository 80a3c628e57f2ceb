#!/usr/bin/env python3

"""Tests of the command line interface."""

import pytest
import yaml
from click.testing import CliRunner

from unitcharts import config
from unitcharts import main
from unitcharts import reports


@pytest.fixture(autouse=True)
def no_user_config(monkeypatch, tmp_path):
    """Keep the user's configuration file out of the tests."""
    monkeypatch.setattr(config, 'CONFIG_FILE', tmp_path / "missing.yaml")


def _run(args, output=None):
    runner = CliRunner()
    if output is not None:
        args = [*args, '-o', str(output)]
    return runner.invoke(main.maingroup, args, catch_exceptions=False)


def _report(path):
    return yaml.safe_load(path.read_text(encoding="utf-8"))


def test_fit_bundled_sample(tmp_path):
    out = tmp_path / "fit.yaml"
    phase1 = str(reports.bundled_dataset(1))
    result = _run(['fit', phase1, '--ad-method', 'asymptotic'], out)
    assert result.exit_code == 0

    document = _report(out)
    assert document['schema_version'] == 1
    assert document['manifest']['command'] == 'fit'
    assert len(document['manifest']['input_digest']) == 64
    report = document['result']
    assert report['n'] == 20
    assert report['selected'] == 'simplex'
    assert report['ranking'][0] == 'simplex'
    assert report['runs_test']['n_runs_observed'] == 9
    assert report['runs_test']['pvalue'] == pytest.approx(0.3581, abs=5e-4)
    simplex = report['fits'][0]
    assert simplex['aic'] == pytest.approx(-88.653, abs=0.02)
    assert simplex['ad_method'] == 'asymptotic'


def test_fit_report_on_stdout():
    phase1 = str(reports.bundled_dataset(1))
    result = _run(['fit', phase1, '--ad-method', 'asymptotic', '-t'])
    assert result.exit_code == 0
    assert "schema_version: 1" in result.output
    assert "Runs test p-value: 0.358" in result.output


def test_fit_plot(tmp_path):
    phase1 = str(reports.bundled_dataset(1))
    result = _run(['fit', phase1, '--ad-method', 'asymptotic', '--plot-dir',
                   str(tmp_path / "plots")], tmp_path / "fit.yaml")
    assert result.exit_code == 0
    assert (tmp_path / "plots" / "phase1-cdf.svg").stat().st_size > 0


@pytest.mark.parametrize("content", ["0.5\n1.0\n0.3\n", "", "x\ny\n"])
def test_fit_rejects_bad_input(tmp_path, content):
    path = tmp_path / "data.txt"
    path.write_text(content, encoding="utf-8")
    result = _run(['fit', str(path), '--ad-method', 'asymptotic'])
    assert result.exit_code == 2


def test_fit_missing_file(tmp_path):
    result = _run(['fit', str(tmp_path / "nothing.txt")])
    assert result.exit_code == 2


def test_design_requires_seed():
    result = _run(['design', '-f', 'beta', '--mu', '0.2', '--phi', '148'])
    assert result.exit_code == 2


def test_model_options_are_checked():
    result = _run(['design', '-f', 'beta', '--mu', '0.2', '--sigma', '0.5',
                   '--seed', '1'])
    assert result.exit_code == 2
    result = _run(['design', '-f', 'simplex', '--mu', '0.2', '--seed', '1'])
    assert result.exit_code == 2


def test_design(tmp_path):
    out = tmp_path / "design.yaml"
    result = _run(['design', '-f', 'beta', '--mu', '0.2', '--phi', '148',
                   '-l', '1.0', '--runs', '200', '--arl0', '50', '--xi', '2',
                   '--seed', '3'], out)
    assert result.exit_code == 0

    document = _report(out)
    assert document['manifest']['config']['count_start'] is False
    report = document['result']
    assert report['model'] == {'family': 'beta', 'mu': 0.2, 'phi': 148.0}
    (design,) = report['designs']
    assert design['lambda'] == 1.0
    assert design['L'] > 0.0
    assert design['chart']['type'] == 'ewma'
    assert design['achieved']['arl'] > 48.0

    # The design report drives an evaluation.
    evaluated = tmp_path / "evaluate.yaml"
    result = _run(['evaluate', '--chart', str(out), '--mu1', '0.2',
                   '--runs', '200', '--seed', '3'], evaluated)
    assert result.exit_code == 0
    (chart,) = _report(evaluated)['result']['charts']
    assert chart['chart']['L'] == design['L']
    assert chart['profile'][0]['arl'] == pytest.approx(
        design['achieved']['arl'], rel=1e-3)


def test_evaluate_shewhart(tmp_path):
    out = tmp_path / "evaluate.yaml"
    result = _run(['evaluate', '-f', 'beta', '--mu', '0.2', '--phi', '290',
                   '--shewhart', '--mu1', '0.12', '--mu1', '0.2', '--seed',
                   '1'], out)
    assert result.exit_code == 0

    report = _report(out)['result']
    (chart,) = report['charts']
    assert chart['chart']['type'] == 'shewhart'
    assert [p['mu1'] for p in chart['profile']] == [0.12, 0.2]
    assert chart['profile'][0]['arl'] == pytest.approx(1.26, rel=0.01)
    assert chart['profile'][1]['arl'] == pytest.approx(370.37, abs=0.01)


def test_evaluate_needs_a_chart():
    result = _run(['evaluate', '-f', 'beta', '--mu', '0.2', '--phi', '290',
                   '--seed', '1'])
    assert result.exit_code == 2


def test_config_file_defaults(tmp_path):
    path = tmp_path / "config.yaml"
    path.write_text("defaults:\n  runs: 50\nevaluate:\n  seed: 5\n",
                    encoding="utf-8")
    out = tmp_path / "evaluate.yaml"
    result = _run(['--config', str(path), 'evaluate', '-f', 'beta', '--mu',
                   '0.2', '--phi', '290', '--shewhart', '--mu1', '0.16'],
                  out)
    assert result.exit_code == 0
    settings = _report(out)['manifest']['config']
    assert settings['seed'] == 5
    assert settings['runs'] == 50


def test_missing_config_file(tmp_path):
    result = _run(['--config', str(tmp_path / "nothing.yaml"), 'tables',
                   '3'])
    assert result.exit_code == 2


def test_robustness_with_published_l(tmp_path):
    out = tmp_path / "robustness.yaml"
    result = _run(['robustness', '-c', '4', '-l', '0.2', '--published-l',
                   '--runs', '100', '--seed', '2'], out)
    assert result.exit_code == 0
    report = _report(out)['result']
    assert (report['case'], report['lambda']) == (4, 0.2)
    assert len(report['cells']) == 9
    cell = report['cells'][4]
    assert cell['true_model']['family'] == 'simplex'
    assert cell['limits_model']['family'] == 'simplex'


def test_tables_moments(tmp_path):
    out = tmp_path / "table3.yaml"
    result = _run(['tables', '3', '-t'], out)
    assert result.exit_code == 0
    assert "Table 3: Properties" in result.output
    document = _report(out)
    assert document['manifest']['config']['count_start'] is True
    report = document['result']
    assert report['table'] == '3'
    assert len(report['rows']) == 12


def test_tables_fits(tmp_path):
    out = tmp_path / "table16.yaml"
    result = _run(['tables', '16', '--ad-method', 'asymptotic'], out)
    assert result.exit_code == 0
    rows = _report(out)['result']['rows']
    assert [row['family'] for row in rows] == ["Beta", "Simplex",
                                               "Unit Gamma"]


def test_tables_simulation_requires_seed():
    result = _run(['tables', '4', '--published-l', '-c', '1'])
    assert result.exit_code == 2


def test_monitor(tmp_path):
    out = tmp_path / "monitor.yaml"
    plot_dir = tmp_path / "plots"
    result = _run(['monitor', str(reports.bundled_dataset(1)),
                   str(reports.bundled_dataset(2)), '-f', 'simplex', '-l',
                   '0.2', '--runs', '200', '--arl0', '50', '--xi', '2',
                   '--seed', '1', '--plot-dir', str(plot_dir)], out)
    assert result.exit_code == 0

    report = _report(out)['result']
    assert report['selected'] == 'simplex'
    assert report['phase1']['signaled'] is False
    shewhart, ewma = report['phase2']
    assert shewhart['chart']['type'] == 'shewhart'
    assert shewhart['signal_index'] == 12
    assert ewma['chart']['lambda'] == 0.2
    assert len(ewma['statistic_path']) == 14
    assert report['plots'][1]['first_signal'] == 32
    assert sorted(p.name for p in plot_dir.iterdir()) == [
        "chart-0.svg", "chart-1.svg", "chart-2.svg"]


@pytest.mark.slow
def test_monitor_reference_signals(tmp_path):
    out = tmp_path / "monitor.yaml"
    result = _run(['monitor', str(reports.bundled_dataset(1)),
                   str(reports.bundled_dataset(2)), '--seed', '1'], out)
    assert result.exit_code == 0
    report = _report(out)['result']
    assert report['selected'] == 'simplex'
    assert [c['signal_index'] for c in report['phase2']] == [12, 5, 5, 4]
