"""
Toy benchmark driver.

Two synthetic predictors stand in for trained networks:
- multimodal: isotropic Gaussian mixture with one component per true root
- mean_point: one isotropic Gaussian at the mean of the roots (0 for n >= 2)

Both go through the same evaluate pipeline as any case file, so writing
the cases and the run config and calling `evaluate` reproduces the numbers.
"""

import logging
import os
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np

from .roots import ToyInstance, sample_instances

try:
    from ..config import TOYBENCH_CONFIG
    from ..core import (
        Fingerprint, Mode, ModeSet, Observation, PosteriorSamples, Reference, ReferenceGranularity,
        ValidationCase, dump_dataset,
    )
    from ..reporting import MetricReport, write_report
    from ..run_config import RunConfig, write_run_config
    from ..validation_utils import PosteriorValidator
except ImportError:
    from posterior_validation.config import TOYBENCH_CONFIG
    from posterior_validation.core import (
        Fingerprint, Mode, ModeSet, Observation, PosteriorSamples, Reference, ReferenceGranularity,
        ValidationCase, dump_dataset,
    )
    from posterior_validation.reporting import MetricReport, write_report
    from posterior_validation.run_config import RunConfig, write_run_config
    from posterior_validation.validation_utils import PosteriorValidator

logger = logging.getLogger(__name__)

PREDICTORS = ('multimodal', 'mean_point')

TOY_METRICS = ('precision', 'recall', 'f_beta', 'ap', 'froc', 'fppi', 'matched_distance', 'point_estimate_error')


@dataclass(frozen=True)
class SyntheticPosteriorConfig:
    predictor: str = 'multimodal'
    samples_per_posterior: int = TOYBENCH_CONFIG['samples_per_posterior']
    component_spread: float = TOYBENCH_CONFIG['component_spread']
    mode_mass_skew: float = TOYBENCH_CONFIG['mode_mass_skew']

    def __post_init__(self):
        if self.predictor not in PREDICTORS:
            raise ValueError(f'predictor must be one of {PREDICTORS}, got {self.predictor!r}')
        if self.samples_per_posterior < 1:
            raise ValueError('samples_per_posterior must be >= 1')
        if not self.component_spread > 0:
            raise ValueError('component_spread must be positive')
        if self.mode_mass_skew < 0:
            raise ValueError('mode_mass_skew must be >= 0')


def _as_xy(value: complex) -> np.ndarray:
    return np.array([value.real, value.imag])


def synthesize_posterior(inst: ToyInstance, cfg: SyntheticPosteriorConfig, rng_seed: int) -> PosteriorSamples:
    """Samples of the predictor's posterior for one instance, in (re, im) coordinates."""
    rng = np.random.default_rng(rng_seed)
    size = cfg.samples_per_posterior
    if cfg.predictor == 'mean_point':
        center = np.mean([_as_xy(root) for root in inst.roots], axis=0)
        return PosteriorSamples(center + cfg.component_spread * rng.standard_normal((size, 2)))

    # component k gets weight proportional to (1 + skew)^-k
    weights = (1.0 + cfg.mode_mass_skew) ** -np.arange(inst.n, dtype=float)
    counts = rng.multinomial(size, weights / weights.sum())
    parts = [_as_xy(root) + cfg.component_spread * rng.standard_normal((count, 2))
             for root, count in zip(inst.roots, counts) if count]
    points = np.vstack(parts)
    return PosteriorSamples(points[rng.permutation(len(points))])


def instance_case(inst: ToyInstance, samples: PosteriorSamples, case_id: str) -> ValidationCase:
    reference = Reference(
        granularity=ReferenceGranularity.MODES_EXHAUSTIVE,
        modes=ModeSet(tuple(Mode(center=_as_xy(root), relative_mass=1.0 / inst.n, label=f'root-{k}')
                            for k, root in enumerate(inst.roots))),
    )
    return ValidationCase(
        id=case_id,
        prediction=samples,
        reference=reference,
        observation=Observation(y=_as_xy(inst.w), params={'n': inst.n, 'reference_index': inst.reference_index}),
    )


def build_toy_cases(instances: Sequence[ToyInstance], cfg: SyntheticPosteriorConfig,
                    seed: int = TOYBENCH_CONFIG['seed']) -> List[ValidationCase]:
    """One case per instance; posterior seed = dataset seed XOR case index."""
    return [instance_case(inst, synthesize_posterior(inst, cfg, seed ^ index), f'toy-{index:05d}')
            for index, inst in enumerate(instances)]


def toy_fingerprint() -> Fingerprint:
    """Exhaustive root list, resimulation and bootstrap confidences available"""
    return Fingerprint(
        p1_reference_granularity='modes_exhaustive',
        p2_resimulation='available',
        p3_confidence_score='available',
        p4_prediction_density='unavailable',
        p5_natural_discretization='unavailable',
        p6_univariate='no',
        p7_accurate_uncertainty='no',
    )


def toy_run_config(dataset: Optional[str] = None, threshold: float = TOYBENCH_CONFIG['threshold'],
                   resimulation: bool = False, seed: int = TOYBENCH_CONFIG['seed'],
                   sweep: Optional[Dict] = None) -> RunConfig:
    return RunConfig(
        fingerprint=toy_fingerprint(),
        dataset=dataset,
        localization={'kind': 'centroid', 'p': 2.0, 'metric': 'lp', 'threshold': float(threshold)},
        assignment='greedy_by_score',
        metrics=TOY_METRICS,
        resimulation={'enabled': bool(resimulation), 'forward_model': TOYBENCH_CONFIG['forward_model'],
                      'tol': 0.05, 'relative': True},
        sweep=sweep,
        subset_by='n',
        seed=seed,
    )


def run_toy_benchmark(num_cases: int = TOYBENCH_CONFIG['num_cases'],
                      configs: Optional[Sequence[SyntheticPosteriorConfig]] = None,
                      seed: int = TOYBENCH_CONFIG['seed'],
                      threshold: float = TOYBENCH_CONFIG['threshold'],
                      resimulation: bool = False,
                      sweep: Optional[Dict] = None,
                      out_dir: Optional[str] = None) -> Dict[str, MetricReport]:
    """
    Evaluate every predictor on one shared set of instances.

    With `out_dir`, writes per predictor the case file, the run config that
    reproduces the report through `evaluate`, the report and its curves.
    """
    configs = list(configs) if configs is not None else [SyntheticPosteriorConfig(p) for p in PREDICTORS]
    instances = sample_instances(num_cases, seed)
    reports: Dict[str, MetricReport] = {}

    for cfg in configs:
        cases = build_toy_cases(instances, cfg, seed)
        dataset_name = f'cases_{cfg.predictor}.jsonl'
        run_config = toy_run_config(dataset_name, threshold, resimulation, seed, sweep)
        report = PosteriorValidator(run_config).evaluate(cases)
        reports[cfg.predictor] = report
        logger.info(f"{cfg.predictor}: recall={report.value('recall')}, ap={report.value('ap')}")

        if out_dir is not None:
            dump_dataset(cases, os.path.join(out_dir, dataset_name))
            write_run_config(run_config, os.path.join(out_dir, f'config_{cfg.predictor}.json'))
            write_report(report, out_dir, name=f'report_{cfg.predictor}')
    return reports
