"""Tests for MetricReport serialization and writers"""

import json

import pandas as pd
import pytest

from src.posterior_validation import MetricReport, read_report, write_report
from src.posterior_validation.reporting import config_hash, make_provenance, summary_table


def _report():
    report = MetricReport()
    report.add_scalar('recall', 0.5)
    report.add_scalar('fppi', 1.25, ['upper_bound'])
    report.curves['froc'] = [{'threshold': 0.9, 'recall': 0.5, 'fppi': 0.0},
                             {'threshold': 0.4, 'recall': 0.5, 'fppi': 1.25}]
    report.provenance = make_provenance({'seed': 1}, 1, '1.0.0', created_at='2026-01-01T00:00:00+00:00')
    return report


def test_config_hash_ignores_key_order():
    assert config_hash({'a': 1, 'b': [1, 2]}) == config_hash({'b': [1, 2], 'a': 1})
    assert config_hash({'a': 1}) != config_hash({'a': 2})


def test_write_and_read(tmp_path):
    paths = write_report(_report(), str(tmp_path))
    assert set(paths) == {'report', 'froc'}
    loaded = read_report(paths['report'])
    assert loaded.flags('fppi') == ['upper_bound']
    assert loaded.value('recall') == 0.5
    table = pd.read_csv(paths['froc'])
    assert list(table.columns) == ['threshold', 'recall', 'fppi']
    assert len(table) == 2


def test_named_report_prefixes_curve_files(tmp_path):
    paths = write_report(_report(), str(tmp_path), name='report_multimodal')
    assert paths['froc'].endswith('report_multimodal_froc.csv')


def test_body_excludes_timestamp():
    a, b = _report(), _report()
    b.provenance['created_at'] = '2030-01-01T00:00:00+00:00'
    assert a.body_json() == b.body_json()
    assert 'created_at' not in a.body()['provenance']


def test_scalar_without_flags_rejected():
    data = _report().to_dict()
    data['scalars']['recall'] = {'value': 0.5}
    with pytest.raises(ValueError, match='flag'):
        MetricReport.from_dict(data)


def test_nan_is_not_written(tmp_path):
    report = _report()
    report.add_scalar('bad', float('nan'))
    with pytest.raises(ValueError):
        write_report(report, str(tmp_path))


def test_summary_table_rows():
    table = summary_table(_report())
    assert list(table['metric']) == ['fppi', 'recall']
    assert table.loc[table['metric'] == 'fppi', 'flags'].item() == 'upper_bound'


def test_report_json_is_sorted(tmp_path):
    path = write_report(_report(), str(tmp_path))['report']
    with open(path) as handle:
        data = json.load(handle)
    assert list(data) == sorted(data)
