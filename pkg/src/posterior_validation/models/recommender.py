"""
RULE ENGINE: Metric Recommendation
==================================
Maps a problem Fingerprint to a MetricPlan through an ordered rule table.
Each rule is (rule id, predicate, plan fragment, note). Every note in a
plan cites the rule that produced it.

S1 rules select distribution metrics for posterior references, S2 rules
select the localization criterion, assignment strategy and classification
metrics of the mode-detection view.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, List, Mapping, Optional, Tuple

try:
    from ..config import RECOMMENDER_CONFIG
    from ..core.data_model import Fingerprint, ReferenceGranularity
    from ..core.exceptions import MetricRequestError, PlanConflictError
except ImportError:
    from posterior_validation.config import RECOMMENDER_CONFIG
    from posterior_validation.core.data_model import Fingerprint, ReferenceGranularity
    from posterior_validation.core.exceptions import MetricRequestError, PlanConflictError

logger = logging.getLogger(__name__)

INFERRED = ' (inferred from text)'

# keys of a plan fragment that hold one value; two rules must not disagree on them
SINGLE_VALUED = ('localization', 'assignment')


@dataclass(frozen=True)
class Context:
    high_dimensional: bool = RECOMMENDER_CONFIG['high_dimensional']
    sweep_declared: bool = RECOMMENDER_CONFIG['sweep_declared']


@dataclass(frozen=True)
class Rule:
    rule_id: str
    predicate: Callable[[Fingerprint, Context], bool]
    fragment: Mapping
    note: str


def _posterior(fp: Fingerprint) -> bool:
    return fp.p1_reference_granularity.is_posterior


def _nonexhaustive(fp: Fingerprint) -> bool:
    return fp.p1_reference_granularity is ReferenceGranularity.MODES_NONEXHAUSTIVE


def _kl_usable(fp: Fingerprint, ctx: Context) -> bool:
    return fp.natural_discretization and not ctx.high_dimensional


RULES: Tuple[Rule, ...] = (
    # ---- S1: distribution-based metrics --------------------------------------
    Rule('S1.CE',
         lambda fp, ctx: _posterior(fp) and fp.prediction_density,
         {'distribution': [('cross_entropy', {})]},
         'Prediction density is available: use the cross entropy of the predicted '
         'density at the reference samples.'),
    Rule('S1.KL',
         lambda fp, ctx: _posterior(fp) and _kl_usable(fp, ctx),
         {'distribution': [('kl', {'discretization': 'natural'})]},
         'A natural discretization exists and the problem is low-dimensional: '
         'discretized KL divergence has no further hyperparameters.'),
    Rule('S1.UNI',
         lambda fp, ctx: _posterior(fp) and fp.univariate,
         {'distribution': [('ks', {}), ('wasserstein', {'p': 1})]},
         'Univariate posterior: Kolmogorov-Smirnov statistic and 1-Wasserstein distance.'),
    Rule('S1.FALLBACK',
         lambda fp, ctx: (_posterior(fp) and not fp.prediction_density
                          and not _kl_usable(fp, ctx) and not fp.univariate),
         {'distribution': [('marginal_wasserstein', {'aggregate': 'mean'}),
                           ('mmd', {'kernel': 'rbf', 'bandwidth': 'median'})]},
         'No density, discretization or univariate structure: marginal Wasserstein '
         '(a heuristic, marginals do not determine the joint) and kernel MMD.'),

    # ---- S2: detection-inspired metrics --------------------------------------
    Rule('S2.MODES',
         lambda fp, ctx: fp.p1_reference_granularity is not ReferenceGranularity.POSTERIOR_UNLABELED,
         {'detection': True},
         'Reference provides modes: validate the posterior as a set of detected instances.'),
    Rule('S2.DERIVED',
         lambda fp, ctx: fp.p1_reference_granularity is ReferenceGranularity.POSTERIOR_UNLABELED,
         {'detection': True},
         'Reference posterior without labeled modes: derive reference modes by clustering '
         'the reference samples with the same mode detection' + INFERRED + '.'),

    Rule('LOC.COV',
         lambda fp, ctx: fp.accurate_uncertainty
         and fp.p1_reference_granularity is not ReferenceGranularity.POSTERIOR_LABELED,
         {'localization': 'mahalanobis', 'localization_alternatives': ['ellipsoid']},
         'Accurate uncertainty matters: Mahalanobis distance takes the covariance of the '
         'predicted mode into account; the confidence ellipsoid is the boolean alternative.'),
    Rule('LOC.DIST',
         lambda fp, ctx: fp.accurate_uncertainty
         and fp.p1_reference_granularity is ReferenceGranularity.POSTERIOR_LABELED,
         {'localization': 'distribution', 'localization_alternatives': ['mahalanobis', 'ellipsoid']},
         'Accurate uncertainty matters and reference modes are distributions: compare '
         'per-mode sample sets with a distribution distance' + INFERRED + '.'),
    Rule('LOC.CENTROID',
         lambda fp, ctx: not fp.accurate_uncertainty,
         {'localization': 'centroid', 'localization_alternatives': ['centroid_cosine']},
         'Only mode locations matter: collapse modes to their centers (Lp distance, '
         'cosine for rotational variables).'),

    Rule('ASG.SCORE',
         lambda fp, ctx: fp.confidence_score,
         {'assignment': 'greedy_by_score'},
         'Confidence score available: greedy matching in descending confidence.'),
    Rule('ASG.LOC',
         lambda fp, ctx: not fp.confidence_score,
         {'assignment': 'greedy_by_localization',
          'assignment_alternatives': ['hungarian', 'fixed_threshold']},
         'No confidence score: greedy matching by localization score. Hungarian matching '
         'minimizes total distance but can be overly optimistic; a fixed threshold suits '
         'applications that count modes.'),

    Rule('CLS.RECALL',
         lambda fp, ctx: True,
         {'classification': ['recall'], 'distances': ['matched_distance']},
         'Recall and matched-mode distances (aggregated per posterior, then over the '
         'dataset) are always computable.'),
    Rule('CLS.EXH',
         lambda fp, ctx: fp.p1_reference_granularity.is_exhaustive,
         {'classification': ['precision', 'f_beta']},
         'Reference covers all modes: every unmatched prediction is a true false positive, '
         'so Precision and F-beta are exact.'),
    Rule('CLS.RESIM',
         lambda fp, ctx: fp.resimulation,
         {'classification': ['precision', 'f_beta']},
         'Resimulation available: unmatched predictions whose forward simulation reproduces '
         'the observation are plausible solutions, not false positives.'),
    Rule('CLS.FPPI',
         lambda fp, ctx: _nonexhaustive(fp),
         {'classification': ['fppi']},
         'Reference list may be incomplete: report false positives per case.'),
    Rule('CLS.FPPI_UB',
         lambda fp, ctx: _nonexhaustive(fp) and not fp.resimulation,
         {'metric_flags': {'fppi': ['upper_bound'], 'froc': ['upper_bound'], 'ap': ['upper_bound_derived']}},
         'Without resimulation, FP counts against an incomplete reference are upper bounds; '
         'Precision is not reported.'),
    Rule('CLS.AP',
         lambda fp, ctx: fp.confidence_score,
         {'classification': ['ap']},
         'Confidence score available: Average Precision avoids fixing an operating threshold.'),
    Rule('CLS.FROC',
         lambda fp, ctx: fp.confidence_score and _nonexhaustive(fp),
         {'classification': ['froc']},
         'Confidence score with an incomplete reference: plot Recall against FPPI (FROC).'),
    Rule('CLS.CAL',
         lambda fp, ctx: fp.confidence_score and fp.accurate_uncertainty,
         {'classification': ['calibration']},
         'Accurate uncertainty matters and confidences exist: calibration curve of '
         'confidence against empirical precision' + INFERRED + '.'),
    Rule('TARGET',
         lambda fp, ctx: ctx.sweep_declared,
         {'classification': ['metric_at_target']},
         'An operating-point sweep is declared: report Metric@(TargetMetric = TargetValue).'),
)


# which rule licenses each metric, and under which condition
METRIC_REQUIREMENTS: Dict[str, Tuple[str, Callable[[Fingerprint, Context], bool]]] = {
    'cross_entropy': ('S1.CE', lambda fp, ctx: _posterior(fp) and fp.prediction_density),
    'kl': ('S1.KL', lambda fp, ctx: _posterior(fp) and fp.natural_discretization),
    'ks': ('S1.UNI', lambda fp, ctx: _posterior(fp) and fp.univariate),
    'wasserstein': ('S1.UNI', lambda fp, ctx: _posterior(fp) and fp.univariate),
    'marginal_wasserstein': ('S1.FALLBACK', lambda fp, ctx: _posterior(fp)),
    'mmd': ('S1.FALLBACK', lambda fp, ctx: _posterior(fp)),
    'recall': ('CLS.RECALL', lambda fp, ctx: True),
    'matched_distance': ('CLS.RECALL', lambda fp, ctx: True),
    'point_estimate_error': ('CLS.RECALL', lambda fp, ctx: True),
    'precision': ('CLS.EXH', lambda fp, ctx: fp.p1_reference_granularity.is_exhaustive or fp.resimulation),
    'f_beta': ('CLS.EXH', lambda fp, ctx: fp.p1_reference_granularity.is_exhaustive or fp.resimulation),
    'fppi': ('CLS.FPPI', lambda fp, ctx: True),
    'ap': ('CLS.AP', lambda fp, ctx: fp.confidence_score),
    'froc': ('CLS.AP', lambda fp, ctx: fp.confidence_score),
    'calibration': ('CLS.CAL', lambda fp, ctx: fp.confidence_score),
    'metric_at_target': ('TARGET', lambda fp, ctx: ctx.sweep_declared or fp.confidence_score),
}


@dataclass(frozen=True)
class MetricPlan:
    distribution_metrics: Tuple[Tuple[str, Mapping], ...] = ()
    detection_plan: Optional[Mapping] = None
    notes: Tuple[str, ...] = ()
    rules_fired: Tuple[str, ...] = field(default=(), compare=False)

    @property
    def distribution_names(self) -> List[str]:
        return [name for name, _ in self.distribution_metrics]

    @property
    def classification_metrics(self) -> List[str]:
        return list(self.detection_plan['classification_metrics']) if self.detection_plan else []

    def metric_names(self) -> List[str]:
        """Concrete metric names the evaluate pipeline computes for this plan"""
        names = self.distribution_names + self.classification_metrics
        if self.detection_plan:
            names += list(self.detection_plan['distance_metrics'])
        return names

    def to_dict(self) -> Dict:
        return {
            'distribution_metrics': [{'name': n, 'params': dict(p)} for n, p in self.distribution_metrics],
            'detection_plan': dict(self.detection_plan) if self.detection_plan else None,
            'notes': list(self.notes),
        }

    def rationale(self) -> str:
        """Human-readable plan"""
        lines = []
        if self.distribution_metrics:
            lines.append('Distribution metrics: ' + ', '.join(self.distribution_names))
        if self.detection_plan:
            plan = self.detection_plan
            lines.append(f"Localization: {plan['localization']}"
                         + (f" (alternatives: {', '.join(plan['localization_alternatives'])})"
                            if plan['localization_alternatives'] else ''))
            lines.append(f"Assignment: {plan['assignment']}"
                         + (f" (alternatives: {', '.join(plan['assignment_alternatives'])})"
                            if plan['assignment_alternatives'] else ''))
            lines.append('Classification metrics: ' + ', '.join(plan['classification_metrics']))
            lines.append('Distance metrics: ' + ', '.join(plan['distance_metrics']))
            for metric, flags in sorted(plan['metric_flags'].items()):
                lines.append(f"  {metric}: {', '.join(flags)}")
        lines.append('Rationale:')
        lines.extend(f'  - {note}' for note in self.notes)
        return '\n'.join(lines)


class MetricRecommender:
    """Ordered rule table evaluation"""

    def __init__(self, rules: Iterable[Rule] = RULES):
        self.config = RECOMMENDER_CONFIG
        self.rules = tuple(rules)

    def fired_rules(self, fp: Fingerprint, ctx: Context) -> List[Rule]:
        return [rule for rule in self.rules if rule.predicate(fp, ctx)]

    def recommend(self, fp: Fingerprint, high_dimensional: Optional[bool] = None,
                  sweep_declared: Optional[bool] = None) -> MetricPlan:
        ctx = Context(
            high_dimensional=self.config['high_dimensional'] if high_dimensional is None else high_dimensional,
            sweep_declared=self.config['sweep_declared'] if sweep_declared is None else sweep_declared,
        )
        fired = self.fired_rules(fp, ctx)

        distribution: List[Tuple[str, Mapping]] = []
        single: Dict[str, Tuple[str, str]] = {}
        lists: Dict[str, List[str]] = {
            'localization_alternatives': [], 'assignment_alternatives': [],
            'classification': [], 'distances': [],
        }
        metric_flags: Dict[str, List[str]] = {}
        detection = False

        for rule in fired:
            fragment = rule.fragment
            for name, params in fragment.get('distribution', []):
                if name not in [n for n, _ in distribution]:
                    distribution.append((name, dict(params)))
            for key in SINGLE_VALUED:
                if key in fragment:
                    previous = single.get(key)
                    if previous is not None and previous[0] != fragment[key]:
                        raise PlanConflictError(
                            f'{key}: rule {previous[1]} chose {previous[0]}, rule {rule.rule_id} chose {fragment[key]}')
                    single[key] = (fragment[key], rule.rule_id)
            for key in lists:
                for item in fragment.get(key, []):
                    if item not in lists[key]:
                        lists[key].append(item)
            for metric, flags in fragment.get('metric_flags', {}).items():
                metric_flags.setdefault(metric, [])
                metric_flags[metric].extend(f for f in flags if f not in metric_flags[metric])
            detection = detection or bool(fragment.get('detection'))

        detection_plan = None
        if detection:
            classification = lists['classification']
            detection_plan = {
                'localization': single['localization'][0],
                'localization_alternatives': lists['localization_alternatives'],
                'assignment': single['assignment'][0],
                'assignment_alternatives': lists['assignment_alternatives'],
                'classification_metrics': classification,
                'distance_metrics': lists['distances'],
                'metric_flags': {m: f for m, f in metric_flags.items() if m in classification},
            }

        plan = MetricPlan(
            distribution_metrics=tuple(distribution),
            detection_plan=detection_plan,
            notes=tuple(self._generate_notes(fired)),
            rules_fired=tuple(rule.rule_id for rule in fired),
        )
        if not plan.distribution_metrics and not plan.detection_plan:
            raise PlanConflictError(f'empty plan for fingerprint {fp.to_dict()}')
        return plan

    def _generate_notes(self, fired: Iterable[Rule]) -> List[str]:
        return [f'[{rule.rule_id}] {rule.note}' for rule in fired]

    def validate_metric_request(self, metrics: Iterable[str], fp: Fingerprint,
                                sweep_declared: bool = False) -> None:
        """Reject explicitly requested metrics the fingerprint cannot support"""
        ctx = Context(high_dimensional=self.config['high_dimensional'], sweep_declared=sweep_declared)
        for metric in metrics:
            if metric not in METRIC_REQUIREMENTS:
                raise MetricRequestError(metric, 'UNKNOWN', f'known metrics: {", ".join(sorted(METRIC_REQUIREMENTS))}')
            rule_id, allowed = METRIC_REQUIREMENTS[metric]
            if not allowed(fp, ctx):
                raise MetricRequestError(metric, rule_id,
                                         f'not supported by fingerprint {fp.to_dict()}')


def recommend(fp: Fingerprint, high_dimensional: Optional[bool] = None,
              sweep_declared: Optional[bool] = None) -> MetricPlan:
    """Recommend a metric plan for a fingerprint"""
    return MetricRecommender().recommend(fp, high_dimensional, sweep_declared)


def validate_metric_request(metrics: Iterable[str], fp: Fingerprint, sweep_declared: bool = False) -> None:
    MetricRecommender().validate_metric_request(metrics, fp, sweep_declared)


def resolve_metrics(plan: MetricPlan) -> List[str]:
    """Metric names for a run config that asks for "auto"."""
    return plan.metric_names()
