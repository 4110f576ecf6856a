"""Tests for case file reading, writing and fingerprint consistency"""

import copy
import json

import numpy as np
import pytest

from src.posterior_validation.core import (
    CaseFileError,
    DuplicateCaseError,
    case_from_record,
    check_case_consistency,
    dump_dataset,
    load_dataset,
)
from tests.conftest import make_fingerprint


def _record(case_id='c0', **extra):
    record = {
        'id': case_id,
        'prediction': {'samples': [[0.0, 0.0], [0.1, 0.0], [1.0, 1.0]]},
        'reference': {'granularity': 'modes_exhaustive',
                      'modes': [{'center': [0.0, 0.0]}, {'center': [1.0, 1.0], 'label': 'b'}]},
    }
    record.update(extra)
    return record


def _write_lines(path, records):
    with open(path, 'w', encoding='utf-8') as handle:
        for record in records:
            handle.write(record if isinstance(record, str) else json.dumps(record))
            handle.write('\n')


def test_minimal_record_gets_default_mass():
    case = case_from_record(_record())
    assert case.dim == 2
    assert [m.relative_mass for m in case.reference.modes] == [0.5, 0.5]
    assert case.reference.modes[1].label == 'b'
    assert case.observation is None


def test_periodic_and_observation_parsed():
    case = case_from_record(_record(observation={'y': [1.0, 2.0], 'params': {'n': 2}},
                                    dims={'periodic': [{'index': 1, 'period': 360}]}))
    assert case.periodic == {1: 360.0}
    assert case.observation.params['n'] == 2


def test_missing_required_key_names_field():
    record = _record()
    del record['reference']['granularity']
    with pytest.raises(CaseFileError) as info:
        case_from_record(record, line=7)
    assert info.value.field == 'reference.granularity'
    assert info.value.line == 7
    assert info.value.case_id == 'c0'


def test_bad_granularity_is_case_file_error():
    record = _record()
    record['reference']['granularity'] = 'modes_partial'
    with pytest.raises(CaseFileError, match='reference.granularity'):
        case_from_record(record)


def test_non_numeric_periodic_index_is_case_file_error():
    with pytest.raises(CaseFileError) as info:
        case_from_record(_record(dims={'periodic': [{'index': 'x', 'period': 360}]}))
    assert info.value.field == 'dims.periodic'
    with pytest.raises(CaseFileError, match='dims.periodic'):
        case_from_record(_record(dims={'periodic': {'index': 0, 'period': 360}}))


def _random_record(rng):
    dim = int(rng.integers(1, 4))
    count = int(rng.integers(3, 8))
    samples = rng.standard_normal((count, dim))
    centers = rng.standard_normal((int(rng.integers(1, 4)), dim))
    return {
        'id': 'c0',
        'prediction': {'samples': samples.tolist(), 'weights': [1.0 / count] * count,
                       'log_density': [0.0] * count},
        'reference': {'granularity': 'modes_exhaustive',
                      'modes': [{'center': c.tolist(), 'covariance': np.eye(dim).tolist(),
                                 'confidence': 0.5} for c in centers],
                      'samples': samples.tolist()},
        'observation': {'y': [1.0, 2.0]},
        'dims': {'periodic': [{'index': dim - 1, 'period': 360}]},
    }


def _negative_weight(r):
    r['prediction']['weights'][0] = -r['prediction']['weights'][0]


def _unnormalized_weights(r):
    r['prediction']['weights'] = [1.0] * len(r['prediction']['weights'])


def _nan_sample(r):
    r['prediction']['samples'][-1][0] = float('nan')


def _ragged_samples(r):
    r['prediction']['samples'][0] = r['prediction']['samples'][0] + [0.0]


def _wrong_dim_center(r):
    r['reference']['modes'][0]['center'] = r['reference']['modes'][0]['center'] + [0.0]


def _broken_covariance(r):
    cov = r['reference']['modes'][0]['covariance']
    if len(cov) == 1:
        cov[0][0] = float('nan')
    else:
        cov[0][-1] += 0.5


def _negative_eigenvalue(r):
    r['reference']['modes'][0]['covariance'][0][0] = -1.0


def _mass_above_one(r):
    r['reference']['modes'][0]['relative_mass'] = 1.5


def _confidence_above_one(r):
    r['reference']['modes'][0]['confidence'] = 1.5


def _unknown_granularity(r):
    r['reference']['granularity'] = 'modes_some'


def _posterior_without_samples(r):
    r['reference']['granularity'] = 'posterior_labeled'
    del r['reference']['samples']


def _no_modes(r):
    r['reference']['modes'] = []


def _log_density_length(r):
    r['prediction']['log_density'].append(0.0)


def _infinite_observation(r):
    r['observation']['y'][0] = float('inf')


def _periodic_index_out_of_range(r):
    r['dims']['periodic'][0]['index'] = len(r['prediction']['samples'][0])


def _negative_period(r):
    r['dims']['periodic'][0]['period'] = -360


def _empty_id(r):
    r['id'] = ''


VIOLATIONS = [
    _negative_weight, _unnormalized_weights, _nan_sample, _ragged_samples, _wrong_dim_center,
    _broken_covariance, _negative_eigenvalue, _mass_above_one, _confidence_above_one,
    _unknown_granularity, _posterior_without_samples, _no_modes, _log_density_length,
    _infinite_observation, _periodic_index_out_of_range, _negative_period, _empty_id,
]


def test_random_valid_record_loads():
    for seed in range(20):
        case = case_from_record(_random_record(np.random.default_rng(seed)))
        assert len(case.periodic) == 1


@pytest.mark.parametrize('seed', range(100))
def test_random_invalid_record_rejected(seed):
    rng = np.random.default_rng(seed)
    record = copy.deepcopy(_random_record(rng))
    violation = VIOLATIONS[seed % len(VIOLATIONS)]
    violation(record)
    with pytest.raises(CaseFileError):
        case_from_record(record)


def test_load_dataset_keeps_file_order(tmp_path):
    path = tmp_path / 'cases.jsonl'
    _write_lines(path, [_record('b'), '', _record('a')])
    cases = load_dataset(str(path))
    assert [c.id for c in cases] == ['b', 'a']


def test_duplicate_ids_rejected(tmp_path):
    path = tmp_path / 'cases.jsonl'
    _write_lines(path, [_record('a'), _record('a')])
    with pytest.raises(DuplicateCaseError) as info:
        load_dataset(str(path))
    assert info.value.line == 2


def test_invalid_json_reports_line(tmp_path):
    path = tmp_path / 'cases.jsonl'
    _write_lines(path, [_record('a'), '{"id": '])
    with pytest.raises(CaseFileError) as info:
        load_dataset(str(path))
    assert info.value.line == 2


def test_missing_file():
    with pytest.raises(FileNotFoundError):
        load_dataset('/nonexistent/cases.jsonl')


def test_dump_then_load_preserves_floats(tmp_path):
    rng = np.random.default_rng(3)
    record = _record(prediction={'samples': rng.standard_normal((5, 2)).tolist()})
    case = case_from_record(record)
    path = dump_dataset([case], str(tmp_path / 'out' / 'cases.jsonl'))
    loaded = load_dataset(path)[0]
    np.testing.assert_array_equal(loaded.prediction.points, case.prediction.points)


class TestConsistency:
    def test_consistent_case_has_no_diagnostics(self):
        case = case_from_record(_record())
        assert check_case_consistency(case, make_fingerprint()) == []

    def test_each_false_claim_is_flagged(self):
        case = case_from_record(_record())
        fp = make_fingerprint(p1_reference_granularity='modes_nonexhaustive',
                              p2_resimulation='available',
                              p4_prediction_density='available',
                              p6_univariate='yes')
        props = {d['property'] for d in check_case_consistency(case, fp)}
        assert props == {'P1', 'P2', 'P4', 'P6'}
