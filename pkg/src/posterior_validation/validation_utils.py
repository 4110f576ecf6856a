"""
Posterior Validator
===================
Input: validation cases, run config
Output: MetricReport (dataset values, flags, per-case records, curves)

Pipeline per case:
- STEP 1: fingerprint consistency
- STEP 2-4: mode detection, localization, assignment (+ resimulation)
- STEP 5: distances of matched modes
- STEP 6: distribution metrics

Detection metrics, curves and hierarchical aggregation run once per dataset.
"""

import logging
from collections import OrderedDict
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .config import LOCALIZATION_CONFIG, METRIC_CONFIG, TOOL_VERSION
from .core import (
    CaseFileError,
    ConfigError,
    MetricRequestError,
    Mode,
    ModeSet,
    ReferenceGranularity,
    ValidationCase,
    ValidationToolkitError,
    check_case_consistency,
    get_density_model,
    get_forward_model,
)
from .models import (
    MatchResult,
    ModeDetector,
    apply_resimulation,
    assign,
    average_precision,
    calibration_curve,
    confusion_from_matches,
    cross_entropy,
    expected_calibration_error,
    froc_curve,
    histogram_pair,
    kl_discretized,
    ks_two_sample,
    marginal_wasserstein,
    metric_at_target,
    mmd,
    prf_metrics,
    scored_predictions,
    wasserstein_1d,
)
from .models.aggregation import aggregate_hierarchical
from .models.detection_metrics import f_beta_score
from .models.localization import DistanceSpec, LocalizationCriterion, centroid_distance, distribution_distance
from .models.recommender import METRIC_REQUIREMENTS, MetricRecommender, resolve_metrics
from .reporting import MetricReport, make_provenance
from .run_config import RunConfig

logger = logging.getLogger(__name__)

DISTRIBUTION_METRICS = tuple(METRIC_CONFIG['distribution_metrics'])

# consistency property -> metrics it invalidates, with the licensing rule
INVALIDATED_BY = {
    'P4': (('cross_entropy',), 'S1.CE'),
    'P6': (('ks', 'wasserstein'), 'S1.UNI'),
}


@dataclass
class CaseOutcome:
    """Everything the dataset-level metrics need from one case"""

    result: MatchResult
    matched_distances: List[float] = field(default_factory=list)
    point_error: Optional[float] = None
    per_mode_distribution: List[float] = field(default_factory=list)
    distribution: Dict[str, Optional[float]] = field(default_factory=dict)
    distribution_flags: Dict[str, List[str]] = field(default_factory=dict)
    record: Dict = field(default_factory=dict)
    diagnostics: List[Dict] = field(default_factory=list)


class PosteriorValidator:
    """
    Complete posterior validation pipeline.

    Per case: consistency check, mode detection, localization, assignment,
    optional resimulation, distances and distribution metrics. Per dataset:
    detection metrics, curves and hierarchical aggregation.
    """

    def __init__(self, run_config: RunConfig):
        self.config = run_config
        self.fingerprint = run_config.fingerprint
        self.detector = run_config.mode_detector()
        self.criterion = run_config.criterion()
        self.aggregation = run_config.aggregation_spec()
        self.recommender = MetricRecommender()
        self.plan = self.recommender.recommend(
            self.fingerprint,
            high_dimensional=run_config.high_dimensional,
            sweep_declared=run_config.sweep_declared,
        )

        if run_config.metrics == 'auto':
            self.metrics = resolve_metrics(self.plan)
        else:
            self.recommender.validate_metric_request(run_config.metrics, self.fingerprint,
                                                     sweep_declared=run_config.sweep_declared)
            self.metrics = list(run_config.metrics)
        if not self.metrics:
            raise ConfigError('no metrics left after resolving the plan')
        if 'kl' in self.metrics and run_config.discretization_spec() is None:
            raise ConfigError('kl needs distribution.discretization (bins and ranges) in the run config')

        self.forward = None
        resimulation = run_config.resimulation
        if resimulation['enabled']:
            self.forward = get_forward_model(resimulation['forward_model'])
        logger.info(f"Validator ready: metrics={self.metrics}, assignment={run_config.assignment}, "
                    f"localization={self.criterion.kind.value}")

    # =========================================================================
    # PER-CASE STAGES
    # =========================================================================
    def _reference_detector(self, detector: ModeDetector) -> ModeDetector:
        return ModeDetector(algorithm=detector.algorithm, dbscan_params=detector.dbscan_params,
                            unidip_params=detector.unidip_params, center_rule=detector.center_rule,
                            resamples=0)

    def _reference_modes(self, case: ValidationCase, detector: ModeDetector, rng_seed: int) -> ModeSet:
        reference = case.reference
        if reference.granularity is ReferenceGranularity.POSTERIOR_UNLABELED and len(reference.modes) == 0:
            modes, _ = self._reference_detector(detector).detect(reference.samples, rng_seed)
            return modes
        if reference.granularity is ReferenceGranularity.POSTERIOR_LABELED and reference.sample_labels is not None:
            with_samples = []
            for mode in reference.modes:
                members = reference.samples_for_label(mode.label) if mode.label is not None else None
                if members is not None and len(members):
                    mode = replace(mode, samples=members)
                with_samples.append(mode)
            return ModeSet(tuple(with_samples))
        return reference.modes

    def _match_case(self, case: ValidationCase, index: int, detector: ModeDetector,
                    criterion: LocalizationCriterion) -> Tuple[MatchResult, ModeSet, ModeSet, Dict]:
        rng_seed = self.config.seed ^ index
        pred_modes, details = detector.detect(case.prediction, rng_seed)
        ref_modes = self._reference_modes(case, detector, rng_seed)
        result = assign(pred_modes, ref_modes, criterion.for_case(case.periodic), self.config.assignment)

        if self.forward is not None:
            if case.observation is None:
                raise CaseFileError('resimulation is enabled but the case has no observation',
                                    case_id=case.id, field='observation')
            tol = self.config.resimulation['tol']
            if self.config.resimulation['relative']:
                tol *= float(np.linalg.norm(case.observation.y))
            result = apply_resimulation(result, pred_modes, self.forward, case.observation.y, tol,
                                        case.observation.params)
        elif case.reference.granularity is ReferenceGranularity.MODES_NONEXHAUSTIVE:
            result = replace(result, fp_upper_bound_flag=True)
        return result, pred_modes, ref_modes, details

    def _escalate(self, diagnostic: Dict):
        prop = diagnostic['property']
        if prop in INVALIDATED_BY:
            metrics, rule_id = INVALIDATED_BY[prop]
            for metric in metrics:
                if metric in self.metrics:
                    raise MetricRequestError(metric, rule_id, f"case {diagnostic['case_id']}: {diagnostic['message']}")
        if prop == 'P2' and self.forward is not None:
            raise MetricRequestError('precision', 'CLS.RESIM', f"case {diagnostic['case_id']}: {diagnostic['message']}")

    def _point_estimate_error(self, case: ValidationCase, pred_modes: ModeSet, ref_modes: ModeSet) -> Optional[float]:
        """Distance of the MAP proxy to the generating (or most massive) reference mode"""
        if len(ref_modes) == 0:
            return None
        best = pred_modes.most_massive()
        if best is not None:
            estimate = best.center
        else:
            estimate = np.average(case.prediction.points, axis=0, weights=case.prediction.weights)

        ref_index = None
        if case.observation is not None:
            ref_index = case.observation.params.get('reference_index')
        if ref_index is None or not 0 <= int(ref_index) < len(ref_modes):
            target = ref_modes.most_massive().center
        else:
            target = ref_modes[int(ref_index)].center
        return centroid_distance(Mode(center=estimate), Mode(center=target), DistanceSpec(periodic=case.periodic))

    def _distribution_values(self, case: ValidationCase, outcome: CaseOutcome):
        requested = [m for m in self.metrics if m in DISTRIBUTION_METRICS]
        if not requested:
            return
        reference = case.reference.samples
        if reference is None:
            raise MetricRequestError(requested[0], METRIC_REQUIREMENTS[requested[0]][0],
                                     f'case {case.id} has no reference posterior samples')
        ref = reference.points
        pred = case.prediction.points
        extras = {}

        for name in requested:
            try:
                if name == 'cross_entropy':
                    log_q = case.prediction_log_density
                    if log_q is None:
                        log_q = get_density_model(self.config.distribution['density_model'])(case)
                    value = cross_entropy(log_q)
                elif name == 'kl':
                    hist_spec = self.config.discretization_spec()
                    if histogram_pair(ref, pred, hist_spec)['smoothed_bins']:
                        outcome.distribution_flags.setdefault(name, []).append('smoothed_bins')
                    value = kl_discretized(ref, pred, hist_spec)
                elif name == 'ks':
                    if case.dim != 1:
                        raise MetricRequestError('ks', 'S1.UNI', f'case {case.id} has d={case.dim}')
                    ks = ks_two_sample(ref[:, 0], pred[:, 0])
                    value = ks['statistic']
                    extras['ks_p_value'] = ks['p_value']
                elif name == 'wasserstein':
                    if case.dim == 1:
                        value = wasserstein_1d(ref[:, 0], pred[:, 0])
                    else:
                        value = marginal_wasserstein(ref, pred, 'mean')
                        outcome.distribution_flags.setdefault(name, []).append('marginal_heuristic')
                elif name == 'marginal_wasserstein':
                    value = marginal_wasserstein(ref, pred)
                else:
                    value = mmd(ref, pred, self.config.kernel_spec(), self.config.distribution['mmd_estimator'])
            except ValidationToolkitError:
                raise
            except (KeyError, ValueError) as e:
                value = None
                outcome.diagnostics.append({'case_id': case.id, 'property': name, 'message': str(e)})
            outcome.distribution[name] = None if value is None else float(value)
        outcome.record['distribution'] = {**outcome.distribution, **extras}

    def evaluate_case(self, case: ValidationCase, index: int) -> CaseOutcome:
        # STEP 1: FINGERPRINT CONSISTENCY
        diagnostics = check_case_consistency(case, self.fingerprint, self.config.distribution['density_model'])
        for diagnostic in diagnostics:
            self._escalate(diagnostic)

        # STEP 2-4: DETECTION, LOCALIZATION, ASSIGNMENT (+ RESIMULATION)
        result, pred_modes, ref_modes, details = self._match_case(case, index, self.detector, self.criterion)
        outcome = CaseOutcome(result=result, diagnostics=list(diagnostics))
        for message in details['diagnostics']:
            outcome.diagnostics.append({'case_id': case.id, 'property': 'detection', 'message': message})
        if len(pred_modes) == 0:
            logger.warning(f'case {case.id}: no predicted modes found')
            outcome.diagnostics.append({'case_id': case.id, 'property': 'detection',
                                        'message': 'no predicted modes found'})

        # STEP 5: DISTANCES OF MATCHED MODES
        spec = DistanceSpec(periodic=case.periodic)
        outcome.matched_distances = [centroid_distance(pred_modes[i], ref_modes[j], spec)
                                     for i, j, _ in result.matches]
        outcome.point_error = self._point_estimate_error(case, pred_modes, ref_modes)
        if case.reference.granularity is ReferenceGranularity.POSTERIOR_LABELED \
                and any(m in DISTRIBUTION_METRICS for m in self.metrics):
            per_mode_metric = self.criterion.dist_metric or LOCALIZATION_CONFIG['dist_metric']
            for i, j, _ in result.matches:
                if pred_modes[i].samples is not None and ref_modes[j].samples is not None:
                    outcome.per_mode_distribution.append(distribution_distance(
                        pred_modes[i], ref_modes[j], per_mode_metric))

        outcome.record = {
            'case_id': case.id,
            'num_pred_modes': len(pred_modes),
            'num_ref_modes': len(ref_modes),
            'noise_count': details['noise_count'],
            'tp': result.tp,
            'fp': result.fp,
            'fn': result.fn,
            'surplus': len(result.surplus_pred),
            'resimulated': len(result.resimulated_pred),
            'fp_upper_bound': result.fp_upper_bound_flag,
            'matched_distances': [float(d) for d in outcome.matched_distances],
            'point_estimate_error': outcome.point_error,
        }
        if self.config.subset_by is not None:
            outcome.record['subset'] = self._subset_value(case)

        # STEP 6: DISTRIBUTION METRICS
        self._distribution_values(case, outcome)
        return outcome

    def _subset_value(self, case: ValidationCase) -> str:
        if case.observation is None or self.config.subset_by not in case.observation.params:
            return 'none'
        return str(case.observation.params[self.config.subset_by])

    # =========================================================================
    # SWEEP
    # =========================================================================
    def sweep_results(self, cases: Sequence[ValidationCase]) -> List[Tuple[float, List[MatchResult]]]:
        """Per-case MatchResults for every value of the declared sweep"""
        sweep = self.config.sweep
        grid = []
        for value in sweep['values']:
            variant = self.config.with_parameter(sweep['parameter'], value)
            detector, criterion = variant.mode_detector(), variant.criterion()
            results = [self._match_case(case, index, detector, criterion)[0] for index, case in enumerate(cases)]
            grid.append((value, results))
            logger.info(f"Sweep {sweep['parameter']}={value}: {sum(r.tp for r in results)} TP")
        return grid

    # =========================================================================
    # DATASET LEVEL
    # =========================================================================
    def evaluate(self, cases: Sequence[ValidationCase]) -> MetricReport:
        """Run the pipeline over a dataset in case order and assemble the report."""
        if not cases:
            raise ValueError('evaluate needs at least one case')
        report = MetricReport()
        outcomes = [self.evaluate_case(case, index) for index, case in enumerate(cases)]
        logger.info(f'Evaluated {len(outcomes)} cases')

        results = [o.result for o in outcomes]
        report.per_case = [o.record for o in outcomes]
        report.diagnostics = [d for o in outcomes for d in o.diagnostics]

        self._detection_scalars(report, results)
        self._curves_and_ranking(report, results, cases)
        self._distance_scalars(report, outcomes)
        self._distribution_scalars(report, outcomes)
        if self.config.subset_by is not None:
            self._subset_scalars(report, outcomes)

        report.plan = {**self.plan.to_dict(), 'metrics': list(self.metrics)}
        report.provenance = make_provenance(self.config.to_dict(), self.config.seed, TOOL_VERSION)
        return report

    def _detection_scalars(self, report: MetricReport, results: List[MatchResult]):
        counts = confusion_from_matches(results)
        report.scalars['counts'] = {'value': None, 'flags': [], 'tp': counts.tp, 'fp': counts.fp, 'fn': counts.fn,
                                    'cases': len(results)}
        prf = prf_metrics(counts, self.config.betas[0])
        if 'recall' in self.metrics:
            report.add_scalar('recall', prf['recall'], prf['flags']['recall'])
        if 'precision' in self.metrics:
            report.add_scalar('precision', prf['precision'], prf['flags']['precision'])
        if 'f_beta' in self.metrics:
            for k, beta in enumerate(self.config.betas):
                scores = prf if k == 0 else prf_metrics(counts, beta)
                name = 'f_beta' if k == 0 else f'f_beta@{beta:g}'
                report.add_scalar(name, scores['f_beta'], scores['flags']['f_beta'], beta=beta)
        if 'fppi' in self.metrics:
            flags = ['upper_bound'] if counts.fp_is_upper_bound else []
            report.add_scalar('fppi', counts.fp / len(results), flags)

    def _scored(self, results: List[MatchResult], metric: str, rule_id: str):
        try:
            return scored_predictions(results)
        except ValueError as e:
            raise MetricRequestError(metric, rule_id, str(e)) from None

    def _curves_and_ranking(self, report: MetricReport, results: List[MatchResult],
                            cases: Sequence[ValidationCase]):
        total_refs = sum(r.tp + r.fn for r in results)
        upper = ['upper_bound_derived'] if any(r.fp_upper_bound_flag for r in results) else []
        needs_scores = [m for m in ('ap', 'froc', 'calibration') if m in self.metrics]
        needs_scores += ['metric_at_target'] if 'metric_at_target' in self.metrics and not self.config.sweep else []

        scored = self._scored(results, needs_scores[0], 'CLS.AP') if needs_scores else None
        if 'ap' in self.metrics:
            if total_refs == 0:
                report.add_scalar('ap', None, ['undefined'])
            else:
                report.add_scalar('ap', average_precision(scored, total_refs), upper)

        points = None
        if scored is not None and ('ap' in self.metrics or 'froc' in self.metrics
                                   or 'metric_at_target' in needs_scores):
            points = froc_curve(results)
            if 'froc' in self.metrics:
                report.curves['froc'] = [{'threshold': p.threshold, 'recall': p.recall, 'fppi': p.fppi}
                                         for p in points]
            report.curves['pr'] = [{'threshold': p.threshold, 'recall': p.recall, 'precision': p.precision}
                                   for p in points]

        if 'calibration' in self.metrics:
            bins = calibration_curve(scored, self.config.calibration_bins)
            report.curves['calibration'] = bins
            ece = expected_calibration_error(bins)
            report.add_scalar('calibration', ece, [] if ece is not None else ['undefined'],
                              statistic='expected_calibration_error')

        grid_points = None
        if self.config.sweep is not None:
            grid = self.sweep_results(cases)
            grid_points = froc_curve(grid=grid)
            report.curves['froc_sweep'] = [{'parameter': self.config.sweep['parameter'], 'value': p.threshold,
                                            'recall': p.recall, 'precision': p.precision, 'fppi': p.fppi}
                                           for p in grid_points]

        if 'metric_at_target' in self.metrics:
            sweep_points = grid_points if grid_points is not None else points
            self._metric_at_target(report, sweep_points, total_refs)

    def _metric_at_target(self, report: MetricReport, points, total_refs: int):
        target = self.config.target
        label = f"{target['report']}@{target['metric']}={target['value']:g}"
        if not points or total_refs == 0:
            report.add_scalar('metric_at_target', None, ['undefined'], label=label)
            return
        beta = self.config.betas[0]
        sweep = [(p.threshold, {'recall': p.recall, 'precision': p.precision, 'fppi': p.fppi,
                                'f_beta': f_beta_score(p.precision, p.recall, beta)})
                 for p in points]
        found = metric_at_target(sweep, target['metric'], float(target['value']), target['report'])
        report.add_scalar('metric_at_target', found['value'], found['flags'], label=label,
                          operating_point=found['operating_point'], achieved=found['achieved'])

    def _aggregate(self, report: MetricReport, name: str, per_case: List[List[float]], flags=()):
        if not any(per_case):
            report.add_scalar(name, None, ['undefined'] + list(flags))
            return
        aggregated = aggregate_hierarchical(per_case, self.aggregation)
        report.add_scalar(name, aggregated['location'], aggregated['flags'] + list(flags),
                          spread=aggregated['spread'], excluded_cases=len(aggregated['excluded_cases']))

    def _distance_scalars(self, report: MetricReport, outcomes: List[CaseOutcome]):
        if 'matched_distance' in self.metrics:
            self._aggregate(report, 'matched_distance', [o.matched_distances for o in outcomes])
        if 'point_estimate_error' in self.metrics:
            self._aggregate(report, 'point_estimate_error',
                            [[o.point_error] if o.point_error is not None else [] for o in outcomes])
        if any(o.per_mode_distribution for o in outcomes):
            self._aggregate(report, 'per_mode_distribution', [o.per_mode_distribution for o in outcomes])

    def _distribution_scalars(self, report: MetricReport, outcomes: List[CaseOutcome]):
        for name in self.metrics:
            if name not in DISTRIBUTION_METRICS:
                continue
            per_case = [[o.distribution[name]] if o.distribution.get(name) is not None else [] for o in outcomes]
            flags = ['marginal_heuristic'] if name == 'marginal_wasserstein' else []
            for outcome in outcomes:
                flags += [f for f in outcome.distribution_flags.get(name, []) if f not in flags]
            self._aggregate(report, name, per_case, flags)

    def _subset_scalars(self, report: MetricReport, outcomes: List[CaseOutcome]):
        groups: Dict[str, List[CaseOutcome]] = OrderedDict()
        for outcome in outcomes:
            groups.setdefault(outcome.record['subset'], []).append(outcome)
        key = self.config.subset_by
        for value in sorted(groups):
            members = groups[value]
            suffix = f'[{key}={value}]'
            if 'recall' in self.metrics:
                prf = prf_metrics(confusion_from_matches([o.result for o in members]))
                report.add_scalar('recall' + suffix, prf['recall'], prf['flags']['recall'], cases=len(members))
            if 'precision' in self.metrics:
                prf = prf_metrics(confusion_from_matches([o.result for o in members]))
                report.add_scalar('precision' + suffix, prf['precision'], prf['flags']['precision'],
                                  cases=len(members))
            if 'matched_distance' in self.metrics:
                self._aggregate(report, 'matched_distance' + suffix, [o.matched_distances for o in members])
            if 'point_estimate_error' in self.metrics:
                self._aggregate(report, 'point_estimate_error' + suffix,
                                [[o.point_error] if o.point_error is not None else [] for o in members])


def evaluate_cases(cases: Sequence[ValidationCase], run_config: RunConfig) -> MetricReport:
    """Evaluate a dataset with one run config"""
    return PosteriorValidator(run_config).evaluate(cases)
