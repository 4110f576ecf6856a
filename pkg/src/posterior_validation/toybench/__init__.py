"""
Closed-form roots benchmark (w = z^n)
"""

from .benchmark import (
    PREDICTORS,
    SyntheticPosteriorConfig,
    build_toy_cases,
    run_toy_benchmark,
    synthesize_posterior,
    toy_fingerprint,
    toy_run_config,
)
from .roots import ToyInstance, complex_power, enumerate_roots, forward_power, sample_instances

try:
    from ..config import TOYBENCH_CONFIG
    from ..core import register_forward_model
except ImportError:
    from posterior_validation.config import TOYBENCH_CONFIG
    from posterior_validation.core import register_forward_model

register_forward_model(TOYBENCH_CONFIG['forward_model'], complex_power)

__all__ = [
    'PREDICTORS', 'SyntheticPosteriorConfig', 'build_toy_cases', 'run_toy_benchmark',
    'synthesize_posterior', 'toy_fingerprint', 'toy_run_config',
    'ToyInstance', 'complex_power', 'enumerate_roots', 'forward_power', 'sample_instances',
]
