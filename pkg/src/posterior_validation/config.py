"""
Configuration for the Posterior Validation Toolkit
All thresholds and defaults in one place
"""

# =============================================================================
# CASE FILE VALIDATION
# =============================================================================
CASE_CONFIG = {
    'weight_sum_tolerance': 1e-9,
    'symmetry_tolerance': 1e-9,
    'psd_tolerance': 1e-9,
}

# =============================================================================
# MODE DETECTION (DBSCAN / UniDip)
# =============================================================================
DBSCAN_CONFIG = {
    'eps': 0.2,
    'min_samples': 20,
    'algorithm': 'auto',
}

UNIDIP_CONFIG = {
    'alpha': 0.05,
    'bootstrap_draws': 1000,
    'seed': 0,
    'min_window': 4,
}

BOOTSTRAP_CONFIG = {
    'resamples': 2,
}

MODE_CONFIG = {
    'algorithm': 'dbscan',
    'center_rule_multivariate': 'mean',
    'center_rule_univariate': 'median',
}

# =============================================================================
# LOCALIZATION
# =============================================================================
LOCALIZATION_CONFIG = {
    'kind': 'centroid',
    'metric': 'lp',
    'p': 2.0,
    'threshold': 0.2,
    'level': 0.95,
    'dist_metric': 'marginal_wasserstein',
    'ridge': 1e-9,
}

# =============================================================================
# ASSIGNMENT
# =============================================================================
ASSIGNMENT_CONFIG = {
    'strategy': 'greedy_by_score',
    'strategies': ('greedy_by_score', 'greedy_by_localization', 'hungarian', 'fixed_threshold'),
}

# =============================================================================
# METRICS
# =============================================================================
METRIC_CONFIG = {
    'betas': (1.0,),
    'detection_metrics': (
        'recall', 'precision', 'f_beta', 'fppi', 'ap', 'froc', 'calibration',
        'metric_at_target', 'matched_distance', 'point_estimate_error',
    ),
    'distribution_metrics': (
        'cross_entropy', 'kl', 'ks', 'wasserstein', 'marginal_wasserstein', 'mmd',
    ),
}

# Direction in which each reportable metric improves
METRIC_DIRECTIONS = {
    'precision': 'higher',
    'recall': 'higher',
    'f_beta': 'higher',
    'fppi': 'lower',
}

KL_CONFIG = {
    'epsilon': 1e-10,
}

MMD_CONFIG = {
    'family': 'rbf',
    'bandwidth': 'median',
    'estimator': 'unbiased',
}

WASSERSTEIN_CONFIG = {
    'aggregate': 'mean',
}

CALIBRATION_CONFIG = {
    'num_bins': 10,
}

FROC_CONFIG = {
    # Recall-vs-FPPI knee reported for angular pose matching
    'operating_point_fppi': 0.35,
}

# =============================================================================
# AGGREGATION
# =============================================================================
AGGREGATION_CONFIG = {
    'within_case': 'mean',
    'across_cases': 'mean',
    'spread': 'std',
}

# =============================================================================
# RESIMULATION
# =============================================================================
RESIMULATION_CONFIG = {
    'enabled': False,
    'forward_model': None,
    'tol': 0.05,
    'relative': True,
}

# =============================================================================
# RECOMMENDER
# =============================================================================
RECOMMENDER_CONFIG = {
    'high_dimensional': False,
    'sweep_declared': False,
}

# =============================================================================
# TOY BENCHMARK
# =============================================================================
TOYBENCH_CONFIG = {
    'num_cases': 2000,
    'samples_per_posterior': 1024,
    'component_spread': 0.05,
    'mode_mass_skew': 0.0,
    'inner_radius': 0.8,
    'outer_radius': 1.2,
    'orders': (1, 2, 3),
    'threshold': 0.2,
    'seed': 0,
    'forward_model': 'complex_power',
}

# =============================================================================
# SWEEPS
# =============================================================================
SWEEP_CONFIG = {
    'points': 10,
    'parameters': ('min_samples', 'eps', 'alpha', 'threshold'),
}

# =============================================================================
# VERSION
# =============================================================================
TOOL_VERSION = '1.0.0'
