"""
Posterior Validation Toolkit
============================
Mode-centric validation of posterior predictions for inverse problems:
- Recommendation: problem fingerprint -> metric plan (rule engine)
- Detection view: modes as instances (DBSCAN / UniDip, localization,
  assignment, Precision / Recall / AP / FROC / calibration)
- Distribution view: cross entropy, KL, KS, Wasserstein, MMD
- Toy benchmark: closed-form roots of w = z^n
"""

from .config import TOOL_VERSION
from .models import MetricPlan, recommend, resolve_metrics, validate_metric_request
from .reporting import MetricReport, read_report, write_report
from .run_config import RunConfig, load_run_config, parse_sweep
from .validation_utils import PosteriorValidator, evaluate_cases
from . import toybench

__version__ = TOOL_VERSION

__all__ = [
    'MetricPlan', 'recommend', 'resolve_metrics', 'validate_metric_request',
    'MetricReport', 'read_report', 'write_report',
    'RunConfig', 'load_run_config', 'parse_sweep',
    'PosteriorValidator', 'evaluate_cases',
    'toybench',
]
