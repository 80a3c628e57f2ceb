#!/usr/bin/env python3

"""Tests of input files, reports and the user configuration."""

import math

import numpy as np
import pytest
import yaml

from unitcharts import config
from unitcharts import inference
from unitcharts import reports
from unitcharts import utils


def test_bundled_datasets(phase1, phase2):
    assert phase1.shape == (20,)
    assert phase2.shape == (14,)
    assert phase2[0] == 0.958 and phase2[-1] == 0.658


def test_read_series_skips_header_and_comments(tmp_path):
    path = tmp_path / "data.txt"
    path.write_text("# sample\nproportion\n\n0.25\n 0.5 \n# end\n0.75\n",
                    encoding="utf-8")
    assert reports.read_series(path).tolist() == [0.25, 0.5, 0.75]


@pytest.mark.parametrize("content, line", [
    ("0.2\n0.3\n1.0\n", 3),
    ("value\n0.2\n-0.1\n", 3),
    ("0.2\nvalue\n", 2),
])
def test_read_series_reports_line(tmp_path, content, line):
    path = tmp_path / "data.txt"
    path.write_text(content, encoding="utf-8")
    with pytest.raises(utils.InputError) as excinfo:
        reports.read_series(path)
    assert excinfo.value.line == line
    assert f":{line}:" in str(excinfo.value)


def test_read_series_errors(tmp_path):
    path = tmp_path / "data.txt"
    path.write_text("# nothing\n", encoding="utf-8")
    with pytest.raises(utils.InputError):
        reports.read_series(path)
    with pytest.raises(utils.InputError):
        reports.read_series(tmp_path / "missing.txt")


def test_input_digest(tmp_path):
    first = tmp_path / "a.txt"
    second = tmp_path / "b.txt"
    first.write_text("0.1\n", encoding="utf-8")
    second.write_text("0.2\n", encoding="utf-8")
    assert reports.input_digest([]) == \
        "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
    assert reports.input_digest([first, second]) != \
        reports.input_digest([second, first])


def test_normalize():
    runs = inference.RunsTestReport(9, 10, 10, 0.358123456789123)
    value = reports.normalize({'a': np.float64(1.0 / 3.0), 'b': np.int64(4),
                               'c': (np.bool_(True), None),
                               'd': np.array([0.5]), 'e': math.inf,
                               'f': runs, 'g': inference.AdMethod.BOOTSTRAP})
    assert value == {'a': 0.3333333333, 'b': 4, 'c': [True, None],
                     'd': [0.5], 'e': 'inf',
                     'f': {'n_runs_observed': 9, 'n_above': 10,
                           'n_below': 10, 'pvalue': 0.3581234568,
                           'method': 'normal'},
                     'g': 'bootstrap'}
    assert type(value['b']) is int  # pylint: disable=unidiomatic-typecheck


def test_write_and_load_report(tmp_path):
    manifest = reports.make_manifest('fit', {'seed': 1})
    path = tmp_path / "report.yaml"
    reports.write_report(manifest, {'x': 0.5}, path)

    document = reports.load_report(path)
    assert list(document) == ['schema_version', 'manifest', 'result']
    assert document['result'] == {'x': 0.5}
    assert document['manifest']['config'] == {'seed': 1}

    path.write_text("- 1\n- 2\n", encoding="utf-8")
    with pytest.raises(utils.InputError):
        reports.load_report(path)


def test_render_table():
    text = reports.render_table(["name", "value", "empty"],
                                [["a", 0.123456, None], ["b", 370.37, 1]],
                                title="Title")
    lines = text.splitlines()
    assert lines[0] == "Title"
    assert "0.1235" in text and "370.37" in text
    assert len(lines) == 5


def test_load_config(tmp_path, monkeypatch):
    monkeypatch.setattr(config, 'CONFIG_FILE', tmp_path / "missing.yaml")
    assert config.load_config() == {}
    with pytest.raises(utils.InputError):
        config.load_config(tmp_path / "other.yaml")

    path = tmp_path / "config.yaml"
    path.write_text("design:\n  seed: 7\n", encoding="utf-8")
    monkeypatch.setattr(config, 'CONFIG_FILE', path)
    assert config.load_config() == {'design': {'seed': 7}}

    path.write_text("design: 7\n", encoding="utf-8")
    with pytest.raises(utils.InputError):
        config.load_config(path)
    path.write_text("design: [\n", encoding="utf-8")
    with pytest.raises(utils.InputError):
        config.load_config(path)


def test_default_map():
    settings = yaml.safe_load("defaults:\n  runs: 100\n  rl-cap: 50000\n"
                              "design:\n  runs: 300\n  seed: 7\n"
                              "unknown:\n  x: 1\n")
    mapping = config.default_map(settings, ['design', 'evaluate'])
    assert mapping['design'] == {'runs': 300, 'rl_cap': 50000, 'seed': 7}
    assert mapping['evaluate'] == {'runs': 100, 'rl_cap': 50000}
    assert 'unknown' not in mapping
