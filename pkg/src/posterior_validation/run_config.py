"""
Run configuration: one JSON file drives an evaluate run.

    {"dataset": "cases.jsonl",
     "fingerprint": {"p1_reference_granularity": "modes_exhaustive", ...},
     "detection": {"algorithm": "dbscan", "dbscan": {"eps": 0.2, "min_samples": 20},
                   "unidip": {"alpha": 0.05, "bootstrap_draws": 1000, "seed": 0},
                   "center_rule": null, "resamples": 2},
     "localization": {"kind": "centroid", "threshold": 0.2},
     "assignment": "greedy_by_score",
     "metrics": "auto",
     "betas": [1.0],
     "aggregation": {"within_case": "mean", "across_cases": "mean", "spread": "std"},
     "distribution": {"discretization": {"bins": [10], "ranges": [[0, 1]]},
                      "kernel": {"bandwidth": "median"}, "mmd_estimator": "unbiased",
                      "density_model": null},
     "resimulation": {"enabled": false, "forward_model": null, "tol": 0.05, "relative": true},
     "sweep": {"parameter": "min_samples", "values": [3, 10, 50]},
     "target": {"metric": "fppi", "value": 0.35, "report": "recall"},
     "calibration_bins": 10,
     "subset_by": null,
     "high_dimensional": false,
     "output_dir": "results",
     "seed": 0}

Every section is optional except the fingerprint; missing sections fall
back to the dict constants in config.py.
"""

import json
import logging
import os
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Mapping, Optional, Tuple, Union

import numpy as np

try:
    from .config import (
        AGGREGATION_CONFIG, ASSIGNMENT_CONFIG, BOOTSTRAP_CONFIG, CALIBRATION_CONFIG, DBSCAN_CONFIG,
        FROC_CONFIG, KL_CONFIG, LOCALIZATION_CONFIG, METRIC_CONFIG, MMD_CONFIG, MODE_CONFIG,
        RECOMMENDER_CONFIG, RESIMULATION_CONFIG, SWEEP_CONFIG, UNIDIP_CONFIG,
    )
    from .core import ConfigError, Fingerprint
    from .models import (
        AggregationSpec, DbscanParams, DiscretizationSpec, KernelSpec, LocalizationCriterion,
        ModeDetector, UnidipParams,
    )
except ImportError:
    from posterior_validation.config import (
        AGGREGATION_CONFIG, ASSIGNMENT_CONFIG, BOOTSTRAP_CONFIG, CALIBRATION_CONFIG, DBSCAN_CONFIG,
        FROC_CONFIG, KL_CONFIG, LOCALIZATION_CONFIG, METRIC_CONFIG, MMD_CONFIG, MODE_CONFIG,
        RECOMMENDER_CONFIG, RESIMULATION_CONFIG, SWEEP_CONFIG, UNIDIP_CONFIG,
    )
    from posterior_validation.core import ConfigError, Fingerprint
    from posterior_validation.models import (
        AggregationSpec, DbscanParams, DiscretizationSpec, KernelSpec, LocalizationCriterion,
        ModeDetector, UnidipParams,
    )

logger = logging.getLogger(__name__)

KNOWN_METRICS = tuple(METRIC_CONFIG['detection_metrics']) + tuple(METRIC_CONFIG['distribution_metrics'])

# sweepable name -> (config section, key)
SWEEP_TARGETS = {
    'min_samples': ('dbscan', 'min_samples'),
    'eps': ('dbscan', 'eps'),
    'alpha': ('unidip', 'alpha'),
    'threshold': ('localization', 'threshold'),
}


def _default_detection() -> Dict:
    return {
        'algorithm': MODE_CONFIG['algorithm'],
        'dbscan': {'eps': DBSCAN_CONFIG['eps'], 'min_samples': DBSCAN_CONFIG['min_samples']},
        'unidip': {'alpha': UNIDIP_CONFIG['alpha'], 'bootstrap_draws': UNIDIP_CONFIG['bootstrap_draws'],
                   'seed': UNIDIP_CONFIG['seed']},
        'center_rule': None,
        'resamples': BOOTSTRAP_CONFIG['resamples'],
    }


def _default_distribution() -> Dict:
    return {
        'discretization': None,
        'kernel': {'family': MMD_CONFIG['family'], 'bandwidth': MMD_CONFIG['bandwidth']},
        'mmd_estimator': MMD_CONFIG['estimator'],
        'kl_epsilon': KL_CONFIG['epsilon'],
        'density_model': None,
    }


def _default_resimulation() -> Dict:
    return {key: RESIMULATION_CONFIG[key] for key in ('enabled', 'forward_model', 'tol', 'relative')}


def _default_target() -> Dict:
    return {'metric': 'fppi', 'value': FROC_CONFIG['operating_point_fppi'], 'report': 'recall'}


def _merged(defaults: Dict, override: Optional[Mapping], section: str) -> Dict:
    if override is None:
        return defaults
    if not isinstance(override, Mapping):
        raise ConfigError(f'section "{section}" must be an object')
    unknown = set(override) - set(defaults)
    if unknown:
        raise ConfigError(f'section "{section}": unknown keys {sorted(unknown)}')
    merged = dict(defaults)
    for key, value in override.items():
        if isinstance(defaults.get(key), dict) and isinstance(value, Mapping):
            merged[key] = {**defaults[key], **value}
        else:
            merged[key] = value
    return merged


@dataclass(frozen=True)
class RunConfig:
    fingerprint: Fingerprint
    dataset: Optional[str] = None
    detection: Dict = field(default_factory=_default_detection)
    localization: Dict = field(default_factory=lambda: {'kind': LOCALIZATION_CONFIG['kind'],
                                                        'threshold': LOCALIZATION_CONFIG['threshold']})
    assignment: str = ASSIGNMENT_CONFIG['strategy']
    metrics: Union[str, Tuple[str, ...]] = 'auto'
    betas: Tuple[float, ...] = METRIC_CONFIG['betas']
    aggregation: Dict = field(default_factory=lambda: dict(AGGREGATION_CONFIG))
    distribution: Dict = field(default_factory=_default_distribution)
    resimulation: Dict = field(default_factory=_default_resimulation)
    sweep: Optional[Dict] = None
    target: Dict = field(default_factory=_default_target)
    calibration_bins: int = CALIBRATION_CONFIG['num_bins']
    subset_by: Optional[str] = None
    high_dimensional: bool = RECOMMENDER_CONFIG['high_dimensional']
    output_dir: Optional[str] = None
    seed: int = 0

    def __post_init__(self):
        if self.assignment not in ASSIGNMENT_CONFIG['strategies']:
            raise ConfigError(f'unknown assignment strategy "{self.assignment}"')
        if self.metrics != 'auto':
            metrics = tuple(self.metrics)
            if not metrics:
                raise ConfigError('metric list is empty')
            unknown = [m for m in metrics if m not in KNOWN_METRICS]
            if unknown:
                raise ConfigError(f'unknown metrics {unknown}; known: {list(KNOWN_METRICS)}')
            object.__setattr__(self, 'metrics', metrics)
        betas = tuple(float(b) for b in self.betas)
        if not betas or any(b <= 0 for b in betas):
            raise ConfigError('betas must be a nonempty list of positive numbers')
        object.__setattr__(self, 'betas', betas)
        if self.sweep is not None:
            object.__setattr__(self, 'sweep', _validated_sweep(self.sweep))
        if self.target.get('metric') is None or self.target.get('report') is None:
            raise ConfigError('target needs "metric" and "report"')
        # build every component once so bad values fail at load time
        try:
            self.mode_detector()
            self.criterion()
            self.aggregation_spec()
            self.kernel_spec()
            self.discretization_spec()
        except (TypeError, ValueError) as e:
            if isinstance(e, ConfigError):
                raise
            raise ConfigError(str(e)) from None

    # -------------------------------------------------------------------------
    # component factories
    # -------------------------------------------------------------------------
    def mode_detector(self) -> ModeDetector:
        detection = self.detection
        return ModeDetector(
            algorithm=detection['algorithm'],
            dbscan_params=DbscanParams(**detection['dbscan']),
            unidip_params=UnidipParams(**detection['unidip']),
            center_rule=detection['center_rule'],
            resamples=int(detection['resamples']),
        )

    def criterion(self) -> LocalizationCriterion:
        params = dict(self.localization)
        if 'dims' in params and params['dims'] is not None:
            params['dims'] = tuple(params['dims'])
        if 'periodic' in params:
            params['periodic'] = {int(k): float(v) for k, v in params['periodic'].items()}
        if 'equivalent_offsets' in params:
            params['equivalent_offsets'] = tuple(tuple(o) for o in params['equivalent_offsets'])
        return LocalizationCriterion(**params)

    def aggregation_spec(self) -> AggregationSpec:
        return AggregationSpec(**self.aggregation)

    def kernel_spec(self) -> KernelSpec:
        return KernelSpec(**self.distribution['kernel'])

    def discretization_spec(self) -> Optional[DiscretizationSpec]:
        raw = self.distribution.get('discretization')
        if raw is None:
            return None
        return DiscretizationSpec(bins=tuple(raw['bins']), ranges=tuple(tuple(r) for r in raw['ranges']),
                                  epsilon=self.distribution['kl_epsilon'])

    @property
    def sweep_declared(self) -> bool:
        return self.sweep is not None

    def with_parameter(self, name: str, value) -> 'RunConfig':
        """Copy with one sweepable parameter replaced."""
        if name not in SWEEP_TARGETS:
            raise ConfigError(f'"{name}" is not sweepable; choose from {list(SWEEP_TARGETS)}')
        section, key = SWEEP_TARGETS[name]
        if section == 'localization':
            return replace(self, localization={**self.localization, key: float(value)}, sweep=None)
        detection = dict(self.detection)
        detection[section] = {**detection[section], key: value}
        return replace(self, detection=detection, sweep=None)

    # -------------------------------------------------------------------------
    # serialization
    # -------------------------------------------------------------------------
    def to_dict(self) -> Dict[str, Any]:
        return {
            'dataset': self.dataset,
            'fingerprint': self.fingerprint.to_dict(),
            'detection': self.detection,
            'localization': self.localization,
            'assignment': self.assignment,
            'metrics': self.metrics if self.metrics == 'auto' else list(self.metrics),
            'betas': list(self.betas),
            'aggregation': self.aggregation,
            'distribution': self.distribution,
            'resimulation': self.resimulation,
            'sweep': self.sweep,
            'target': self.target,
            'calibration_bins': self.calibration_bins,
            'subset_by': self.subset_by,
            'high_dimensional': self.high_dimensional,
            'output_dir': self.output_dir,
            'seed': self.seed,
        }

    @classmethod
    def from_dict(cls, data: Mapping, base_dir: Optional[str] = None) -> 'RunConfig':
        if not isinstance(data, Mapping):
            raise ConfigError('run config must be an object')
        known = {
            'dataset', 'fingerprint', 'detection', 'localization', 'assignment', 'metrics', 'betas',
            'aggregation', 'distribution', 'resimulation', 'sweep', 'target', 'calibration_bins',
            'subset_by', 'high_dimensional', 'output_dir', 'seed',
        }
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f'unknown run config keys {sorted(unknown)}')
        if 'fingerprint' not in data:
            raise ConfigError('run config needs a fingerprint')

        def resolve(path):
            if path is None or base_dir is None or os.path.isabs(path):
                return path
            return os.path.normpath(os.path.join(base_dir, path))

        localization = data.get('localization')
        if localization is not None and not isinstance(localization, Mapping):
            raise ConfigError('section "localization" must be an object')

        return cls(
            fingerprint=Fingerprint.from_dict(data['fingerprint']),
            dataset=resolve(data.get('dataset')),
            detection=_merged(_default_detection(), data.get('detection'), 'detection'),
            localization=dict(localization) if localization is not None
            else {'kind': LOCALIZATION_CONFIG['kind'], 'threshold': LOCALIZATION_CONFIG['threshold']},
            assignment=data.get('assignment', ASSIGNMENT_CONFIG['strategy']),
            metrics=data.get('metrics', 'auto'),
            betas=tuple(data.get('betas', METRIC_CONFIG['betas'])),
            aggregation=_merged(dict(AGGREGATION_CONFIG), data.get('aggregation'), 'aggregation'),
            distribution=_merged(_default_distribution(), data.get('distribution'), 'distribution'),
            resimulation=_merged(_default_resimulation(), data.get('resimulation'), 'resimulation'),
            sweep=data.get('sweep'),
            target=_merged(_default_target(), data.get('target'), 'target'),
            calibration_bins=int(data.get('calibration_bins', CALIBRATION_CONFIG['num_bins'])),
            subset_by=data.get('subset_by'),
            high_dimensional=bool(data.get('high_dimensional', RECOMMENDER_CONFIG['high_dimensional'])),
            output_dir=resolve(data.get('output_dir')),
            seed=int(data.get('seed', 0)),
        )


def _validated_sweep(sweep: Mapping) -> Dict:
    if not isinstance(sweep, Mapping) or 'parameter' not in sweep or 'values' not in sweep:
        raise ConfigError('sweep needs "parameter" and "values"')
    name = sweep['parameter']
    if name not in SWEEP_CONFIG['parameters']:
        raise ConfigError(f'"{name}" is not sweepable; choose from {list(SWEEP_CONFIG["parameters"])}')
    values = list(sweep['values'])
    if not values:
        raise ConfigError('sweep values are empty')
    if name == 'min_samples':
        values = [int(v) for v in values]
    else:
        values = [float(v) for v in values]
    return {'parameter': name, 'values': values}


def load_run_config(path: str) -> RunConfig:
    """Read a run config file; relative paths resolve against its directory."""
    if not os.path.exists(path):
        raise FileNotFoundError(f'run config not found: {path}')
    with open(path, 'r', encoding='utf-8') as handle:
        data = json.load(handle)
    config = RunConfig.from_dict(data, base_dir=os.path.dirname(os.path.abspath(path)))
    if config.dataset is not None and not os.path.exists(config.dataset):
        raise ConfigError(f'dataset not found: {config.dataset}')
    logger.info(f'Loaded run config from {path}')
    return config


def write_run_config(config: RunConfig, path: str) -> str:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, 'w', encoding='utf-8') as handle:
        json.dump(config.to_dict(), handle, sort_keys=True, indent=2)
        handle.write('\n')
    return path


def parse_sweep(spec: str, points: int = SWEEP_CONFIG['points']) -> Dict:
    """
    Parse a --sweep option.

    name=a..b     log-spaced grid of `points` values from a to b
    name=a..b:k   the same with k values
    name=v1,v2    explicit values
    min_samples grids are rounded to distinct integers.
    """
    if '=' not in spec:
        raise ConfigError(f'sweep "{spec}" must look like name=a..b, name=a..b:k or name=v1,v2')
    name, _, body = spec.partition('=')
    name = name.strip()
    if name not in SWEEP_CONFIG['parameters']:
        raise ConfigError(f'"{name}" is not sweepable; choose from {list(SWEEP_CONFIG["parameters"])}')
    try:
        if '..' in body:
            span, _, count = body.partition(':')
            lo, _, hi = span.partition('..')
            lo, hi = float(lo), float(hi)
            k = int(count) if count else points
            if lo <= 0 or hi <= lo or k < 2:
                raise ConfigError(f'sweep range "{body}" needs 0 < a < b and at least 2 points')
            values: List = list(np.geomspace(lo, hi, k))
        else:
            values = [float(v) for v in body.split(',') if v.strip()]
    except ConfigError:
        raise
    except ValueError:
        raise ConfigError(f'cannot parse sweep values "{body}"') from None
    if name == 'min_samples':
        values = sorted({max(1, int(round(v))) for v in values})
    else:
        values = [float(v) for v in values]
    return _validated_sweep({'parameter': name, 'values': values})
