"""
Hierarchical aggregation: per-mode values are reduced within each case
first, then across cases. Quartiles use linear interpolation.
"""

import logging
from dataclasses import dataclass
from typing import Dict, Optional, Sequence

import numpy as np

try:
    from ..config import AGGREGATION_CONFIG
except ImportError:
    from posterior_validation.config import AGGREGATION_CONFIG

logger = logging.getLogger(__name__)

_REDUCERS = {
    'mean': np.mean,
    'median': np.median,
}


@dataclass(frozen=True)
class AggregationSpec:
    within_case: str = AGGREGATION_CONFIG['within_case']
    across_cases: str = AGGREGATION_CONFIG['across_cases']
    spread: str = AGGREGATION_CONFIG['spread']

    def __post_init__(self):
        if self.within_case not in _REDUCERS:
            raise ValueError(f'within_case must be mean or median, got {self.within_case!r}')
        if self.across_cases not in _REDUCERS:
            raise ValueError(f'across_cases must be mean or median, got {self.across_cases!r}')
        if self.spread not in ('std', 'iqr', 'none'):
            raise ValueError(f'spread must be std, iqr or none, got {self.spread!r}')


def _spread(values: np.ndarray, kind: str):
    if kind == 'none':
        return None, []
    if kind == 'std':
        if values.size < 2:
            return 0.0, ['spread_undefined']
        return float(np.std(values, ddof=1)), []
    q1, q3 = np.percentile(values, [25, 75], method='linear')
    return float(q3 - q1), []


def aggregate_hierarchical(values: Sequence[Sequence[float]], spec: Optional[AggregationSpec] = None) -> Dict:
    """
    Reduce each case's values with `within_case`, then the per-case values
    with `across_cases`. Cases without values are excluded and counted.
    """
    spec = spec or AggregationSpec()
    per_case = []
    excluded = []
    for case_index, case_values in enumerate(values):
        arr = np.asarray(case_values, dtype=float).reshape(-1)
        if arr.size == 0:
            excluded.append(case_index)
            continue
        per_case.append(float(_REDUCERS[spec.within_case](arr)))
    if not per_case:
        raise ValueError('aggregation needs at least one case with at least one value')
    if excluded:
        logger.warning(f'{len(excluded)} cases without values excluded from aggregation')

    per_case_arr = np.array(per_case)
    spread, flags = _spread(per_case_arr, spec.spread)
    return {
        'location': float(_REDUCERS[spec.across_cases](per_case_arr)),
        'spread': spread,
        'per_case_values': per_case,
        'excluded_cases': excluded,
        'flags': flags,
    }


def aggregate_flat(values: Sequence[Sequence[float]], reducer: str = 'mean') -> float:
    """Pool every value regardless of case and reduce once."""
    pooled = [float(v) for case_values in values for v in case_values]
    if not pooled:
        raise ValueError('aggregation needs at least one value')
    return float(_REDUCERS[reducer](np.array(pooled)))
