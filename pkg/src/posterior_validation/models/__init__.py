"""
Posterior Validation Models Package
"""

from .aggregation import AggregationSpec, aggregate_flat, aggregate_hierarchical
from .assignment import MatchResult, assign, greedy_assign, hungarian_assign, threshold_assign
from .detection_metrics import (
    ConfusionCounts,
    CurvePoint,
    Plausibility,
    apply_resimulation,
    average_precision,
    calibration_curve,
    confusion_from_matches,
    expected_calibration_error,
    froc_curve,
    metric_at_target,
    prf_metrics,
    resimulation_fp_check,
    scored_predictions,
)
from .dip_test import UniDipSearch, dip_statistic, dip_test, null_dip_distribution, unidip_intervals
from .distribution_metrics import (
    DiscretizationSpec,
    KernelSpec,
    cross_entropy,
    histogram_pair,
    kl_discretized,
    ks_two_sample,
    marginal_wasserstein,
    mmd,
    mmd2,
    wasserstein_1d,
)
from .localization import (
    CriterionKind,
    DistanceSpec,
    LocalizationCriterion,
    centroid_distance,
    chi2_threshold,
    mahalanobis_distance,
    point_in_confidence_ellipsoid,
    score_matrix,
)
from .mode_detector import (
    ClusterLabeling,
    DbscanParams,
    ModeDetector,
    UnidipParams,
    bootstrap_confidence,
    cluster,
    dbscan,
    detect_modes,
    extract_modes,
    unidip,
)
from .recommender import MetricPlan, MetricRecommender, recommend, resolve_metrics, validate_metric_request

__all__ = [
    'AggregationSpec', 'aggregate_flat', 'aggregate_hierarchical',
    'MatchResult', 'assign', 'greedy_assign', 'hungarian_assign', 'threshold_assign',
    'ConfusionCounts', 'CurvePoint', 'Plausibility', 'apply_resimulation', 'average_precision',
    'calibration_curve', 'confusion_from_matches', 'expected_calibration_error', 'froc_curve',
    'metric_at_target', 'prf_metrics', 'resimulation_fp_check', 'scored_predictions',
    'UniDipSearch', 'dip_statistic', 'dip_test', 'null_dip_distribution', 'unidip_intervals',
    'DiscretizationSpec', 'KernelSpec', 'cross_entropy', 'histogram_pair', 'kl_discretized',
    'ks_two_sample', 'marginal_wasserstein', 'mmd', 'mmd2', 'wasserstein_1d',
    'CriterionKind', 'DistanceSpec', 'LocalizationCriterion', 'centroid_distance', 'chi2_threshold',
    'mahalanobis_distance', 'point_in_confidence_ellipsoid', 'score_matrix',
    'ClusterLabeling', 'DbscanParams', 'ModeDetector', 'UnidipParams', 'bootstrap_confidence',
    'cluster', 'dbscan', 'detect_modes', 'extract_modes', 'unidip',
    'MetricPlan', 'MetricRecommender', 'recommend', 'resolve_metrics', 'validate_metric_request',
]
