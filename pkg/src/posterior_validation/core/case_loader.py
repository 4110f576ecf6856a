"""
Case file reading, writing and fingerprint consistency checks.

Case file: one JSON record per line (UTF-8).

    {"id": "case-0",
     "prediction": {"samples": [[...], ...], "weights": [...], "log_density": [...]},
     "reference": {"granularity": "modes_exhaustive",
                   "modes": [{"center": [...], "covariance": [[...]], "label": "a",
                              "relative_mass": 0.5, "confidence": 0.9}],
                   "samples": [[...]], "sample_labels": ["a", ...]},
     "observation": {"y": [...], "params": {...}},
     "dims": {"periodic": [{"index": 0, "period": 360}]}}

Only id, prediction.samples, reference.granularity and reference.modes are
required.
"""

import json
import logging
import os
from typing import Dict, Iterable, List, Mapping, Optional

import numpy as np

from .data_model import (
    Fingerprint,
    Mode,
    ModeSet,
    Observation,
    PosteriorSamples,
    Reference,
    ReferenceGranularity,
    ValidationCase,
)
from .exceptions import CaseFileError, DuplicateCaseError
from .registry import has_density_model

logger = logging.getLogger(__name__)


# =============================================================================
# PARSING
# =============================================================================
def _get(record: Mapping, path: str, case_id: Optional[str], line: Optional[int], required: bool = True):
    node = record
    for part in path.split('.'):
        if not isinstance(node, Mapping) or part not in node:
            if required:
                raise CaseFileError('required key missing', case_id=case_id, field=path, line=line)
            return None
        node = node[part]
    return node


def _build(factory, field_name: str, case_id: Optional[str], line: Optional[int], *args, **kwargs):
    try:
        return factory(*args, **kwargs)
    except CaseFileError:
        raise
    except (ValueError, TypeError) as e:
        raise CaseFileError(str(e), case_id=case_id, field=field_name, line=line) from None


def _parse_modes(raw_modes, case_id: str, line: Optional[int]) -> ModeSet:
    if not isinstance(raw_modes, list):
        raise CaseFileError('must be an array', case_id=case_id, field='reference.modes', line=line)
    default_mass = 1.0 / len(raw_modes) if raw_modes else 1.0
    modes = []
    for i, raw in enumerate(raw_modes):
        field_name = f'reference.modes[{i}]'
        if not isinstance(raw, Mapping) or 'center' not in raw:
            raise CaseFileError('mode needs a center', case_id=case_id, field=field_name, line=line)
        modes.append(_build(
            Mode, field_name, case_id, line,
            center=raw['center'],
            covariance=raw.get('covariance'),
            relative_mass=raw.get('relative_mass', default_mass),
            confidence=raw.get('confidence'),
            label=raw.get('label'),
        ))
    return _build(ModeSet, 'reference.modes', case_id, line, tuple(modes))


def case_from_record(record: Mapping, line: Optional[int] = None) -> ValidationCase:
    """Build a ValidationCase from one decoded case-file record."""
    if not isinstance(record, Mapping):
        raise CaseFileError('record must be an object', line=line)
    case_id = _get(record, 'id', None, line)
    if not isinstance(case_id, str) or not case_id:
        raise CaseFileError('id must be a non-empty string', field='id', line=line)

    raw_samples = _get(record, 'prediction.samples', case_id, line)
    prediction = _build(
        PosteriorSamples, 'prediction.samples', case_id, line,
        raw_samples, _get(record, 'prediction.weights', case_id, line, required=False))

    granularity = _build(
        ReferenceGranularity, 'reference.granularity', case_id, line,
        _get(record, 'reference.granularity', case_id, line))
    modes = _parse_modes(_get(record, 'reference.modes', case_id, line), case_id, line)
    raw_ref_samples = _get(record, 'reference.samples', case_id, line, required=False)
    ref_samples = None
    if raw_ref_samples is not None:
        ref_samples = _build(PosteriorSamples, 'reference.samples', case_id, line, raw_ref_samples)
    sample_labels = _get(record, 'reference.sample_labels', case_id, line, required=False)
    reference = _build(
        Reference, 'reference', case_id, line,
        granularity=granularity, modes=modes, samples=ref_samples,
        sample_labels=tuple(sample_labels) if sample_labels is not None else None)

    observation = None
    raw_obs = _get(record, 'observation', case_id, line, required=False)
    if raw_obs is not None:
        observation = _build(
            Observation, 'observation', case_id, line,
            y=_get(record, 'observation.y', case_id, line),
            params=raw_obs.get('params', {}) if isinstance(raw_obs, Mapping) else {})

    periodic: Dict[int, float] = {}
    raw_periodic = _get(record, 'dims.periodic', case_id, line, required=False) or []
    if not isinstance(raw_periodic, list):
        raise CaseFileError('must be an array', case_id=case_id, field='dims.periodic', line=line)
    for entry in raw_periodic:
        if not isinstance(entry, Mapping) or 'index' not in entry or 'period' not in entry:
            raise CaseFileError('entries need index and period', case_id=case_id, field='dims.periodic', line=line)
        index, period = _build(lambda e: (int(e['index']), float(e['period'])),
                               'dims.periodic', case_id, line, entry)
        periodic[index] = period

    log_density = _get(record, 'prediction.log_density', case_id, line, required=False)
    return _build(
        ValidationCase, 'prediction.log_density', case_id, line,
        id=case_id, prediction=prediction, reference=reference,
        prediction_log_density=log_density, observation=observation, periodic=periodic)


def load_dataset(path: str) -> List[ValidationCase]:
    """Load every case of a case file, in file order."""
    if not os.path.exists(path):
        raise FileNotFoundError(f'case file not found: {path}')
    cases: List[ValidationCase] = []
    seen = {}
    with open(path, 'r', encoding='utf-8') as handle:
        for line_no, text in enumerate(handle, start=1):
            if not text.strip():
                continue
            try:
                record = json.loads(text)
            except json.JSONDecodeError as e:
                raise CaseFileError(f'invalid JSON ({e.msg})', line=line_no) from None
            case = case_from_record(record, line=line_no)
            if case.id in seen:
                raise DuplicateCaseError(f'duplicate id (first seen on line {seen[case.id]})',
                                         case_id=case.id, field='id', line=line_no)
            seen[case.id] = line_no
            cases.append(case)
    logger.info(f'Loaded {len(cases)} cases from {path}')
    return cases


# =============================================================================
# WRITING
# =============================================================================
def _mode_record(mode: Mode) -> Dict:
    record = {'center': mode.center.tolist(), 'relative_mass': mode.relative_mass}
    if mode.covariance is not None:
        record['covariance'] = mode.covariance.tolist()
    if mode.confidence is not None:
        record['confidence'] = mode.confidence
    if mode.label is not None:
        record['label'] = mode.label
    return record


def case_to_record(case: ValidationCase) -> Dict:
    prediction = {'samples': case.prediction.points.tolist()}
    if case.prediction.weights is not None:
        prediction['weights'] = case.prediction.weights.tolist()
    if case.prediction_log_density is not None:
        prediction['log_density'] = case.prediction_log_density.tolist()

    reference = {
        'granularity': case.reference.granularity.value,
        'modes': [_mode_record(m) for m in case.reference.modes],
    }
    if case.reference.samples is not None:
        reference['samples'] = case.reference.samples.points.tolist()
    if case.reference.sample_labels is not None:
        reference['sample_labels'] = list(case.reference.sample_labels)

    record = {'id': case.id, 'prediction': prediction, 'reference': reference}
    if case.observation is not None:
        record['observation'] = {'y': case.observation.y.tolist(), 'params': dict(case.observation.params)}
    if case.periodic:
        record['dims'] = {'periodic': [{'index': i, 'period': p} for i, p in sorted(case.periodic.items())]}
    return record


def dump_dataset(cases: Iterable[ValidationCase], path: str) -> str:
    """Write cases as a case file; floats keep full precision."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    count = 0
    with open(path, 'w', encoding='utf-8') as handle:
        for case in cases:
            handle.write(json.dumps(case_to_record(case), sort_keys=True))
            handle.write('\n')
            count += 1
    logger.info(f'Wrote {count} cases to {path}')
    return path


# =============================================================================
# FINGERPRINT CONSISTENCY
# =============================================================================
def check_case_consistency(case: ValidationCase, fingerprint: Fingerprint,
                           density_model: Optional[str] = None) -> List[Dict]:
    """
    Check that a case supports every claim of the fingerprint.

    Returns a list of diagnostics ({case_id, property, message}); empty when
    the case is consistent.
    """
    diagnostics = []

    def flag(prop: str, message: str):
        diagnostics.append({'case_id': case.id, 'property': prop, 'message': message})

    if case.reference.granularity is not fingerprint.p1_reference_granularity:
        flag('P1', f'reference granularity claimed {fingerprint.p1_reference_granularity.value} '
                   f'but case has {case.reference.granularity.value}')

    if fingerprint.prediction_density and case.prediction_log_density is None \
            and not has_density_model(density_model):
        flag('P4', 'prediction density claimed available but case has no log-densities '
                   'and no density model is registered')

    if fingerprint.univariate and case.dim != 1:
        flag('P6', f'univariate claimed but d={case.dim}')

    if fingerprint.resimulation and case.observation is None:
        flag('P2', 'resimulation claimed available but case has no observation')

    return diagnostics
