"""
MODEL 4: Detection Metrics
==========================
Input: per-case MatchResults (with optional confidences and resimulation)
Output: confusion counts, Precision / Recall / F-beta, AP, FROC and PR
        operating points, calibration bins, Metric@Target

No metric relies on true negatives.
"""

import logging
from dataclasses import dataclass, replace
from enum import Enum
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .assignment import MatchResult

try:
    from ..config import CALIBRATION_CONFIG, METRIC_DIRECTIONS
    from ..core.data_model import Mode, ModeSet
    from ..core.exceptions import MissingForwardModelError
except ImportError:
    from posterior_validation.config import CALIBRATION_CONFIG, METRIC_DIRECTIONS
    from posterior_validation.core.data_model import Mode, ModeSet
    from posterior_validation.core.exceptions import MissingForwardModelError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    fp_is_upper_bound: bool = False

    def __post_init__(self):
        if min(self.tp, self.fp, self.fn) < 0:
            raise ValueError('confusion counts must be nonnegative')


@dataclass(frozen=True)
class CurvePoint:
    threshold: float
    recall: float
    precision: Optional[float] = None
    fppi: Optional[float] = None

    def to_dict(self) -> Dict:
        return {'threshold': self.threshold, 'recall': self.recall,
                'precision': self.precision, 'fppi': self.fppi}


# =============================================================================
# COUNTS AND PRF
# =============================================================================
def confusion_from_matches(results: Sequence[MatchResult]) -> ConfusionCounts:
    return ConfusionCounts(
        tp=sum(r.tp for r in results),
        fp=sum(r.fp for r in results),
        fn=sum(r.fn for r in results),
        fp_is_upper_bound=any(r.fp_upper_bound_flag for r in results),
    )


def f_beta_score(precision: float, recall: float, beta: float) -> float:
    denominator = beta * beta * precision + recall
    if denominator == 0:
        return 0.0
    return (1.0 + beta * beta) * precision * recall / denominator


def prf_metrics(counts: ConfusionCounts, beta: float = 1.0) -> Dict:
    """
    Precision, recall and F-beta. Conventions: precision = 1 without
    predictions; both undefined (None, flagged) with no references and no
    predictions; recall undefined without references.
    """
    if not beta > 0:
        raise ValueError(f'beta must be positive, got {beta}')
    tp, fp, fn = counts.tp, counts.fp, counts.fn
    flags: Dict[str, List[str]] = {'precision': [], 'recall': [], 'f_beta': []}

    if tp + fp + fn == 0:
        for name in flags:
            flags[name].append('undefined')
        return {'precision': None, 'recall': None, 'f_beta': None, 'flags': flags}

    if tp + fp == 0:
        precision = 1.0
        flags['precision'].append('precision_by_convention')
    else:
        precision = tp / (tp + fp)

    if tp + fn == 0:
        recall = None
        flags['recall'].append('undefined')
    else:
        recall = tp / (tp + fn)

    if recall is None:
        f_beta = None
        flags['f_beta'].append('undefined')
    else:
        f_beta = f_beta_score(precision, recall, beta)

    if counts.fp_is_upper_bound:
        flags['precision'].append('upper_bound_derived')
        flags['f_beta'].append('upper_bound_derived')

    return {'precision': precision, 'recall': recall, 'f_beta': f_beta, 'flags': flags}


# =============================================================================
# AVERAGE PRECISION
# =============================================================================
def scored_predictions(results: Sequence[MatchResult]) -> List[Tuple[float, bool]]:
    """Dataset-wide (confidence, is_tp) pairs: matches are TP, FP candidates are FP."""
    scored = []
    for result in results:
        if result.pred_scores is None:
            if result.num_preds:
                raise ValueError('predictions carry no confidence scores')
            continue
        for i, _, _ in result.matches:
            scored.append((result.pred_scores[i], True))
        for i in result.unmatched_pred:
            scored.append((result.pred_scores[i], False))
    return scored


def average_precision(scored: Sequence[Tuple[Optional[float], bool]], total_positives: int) -> float:
    """All-points interpolated area under the precision-recall staircase."""
    if total_positives < 1:
        raise ValueError('average precision needs at least one positive')
    if any(conf is None for conf, _ in scored):
        raise ValueError('every prediction needs a confidence for average precision')
    if not scored:
        return 0.0
    confidences = np.array([c for c, _ in scored], dtype=float)
    is_tp = np.array([t for _, t in scored], dtype=bool)
    order = np.argsort(-confidences, kind='stable')
    tp = np.cumsum(is_tp[order])
    fp = np.cumsum(~is_tp[order])
    recall = tp / total_positives
    precision = tp / np.maximum(tp + fp, np.finfo(np.float64).eps)

    mrec = np.concatenate(([0.0], recall, [1.0]))
    mpre = np.concatenate(([0.0], precision, [0.0]))
    for i in range(mpre.size - 1, 0, -1):
        mpre[i - 1] = np.maximum(mpre[i - 1], mpre[i])
    steps = np.where(mrec[1:] != mrec[:-1])[0]
    return float(np.sum((mrec[steps + 1] - mrec[steps]) * mpre[steps + 1]))


# =============================================================================
# FROC / PR
# =============================================================================
def _total_refs(results: Sequence[MatchResult]) -> int:
    return sum(r.tp + r.fn for r in results)


def _operating_point(threshold: float, tp: int, fp: int, total_refs: int, cases: int) -> CurvePoint:
    recall = tp / total_refs if total_refs else 0.0
    precision = tp / (tp + fp) if tp + fp else 1.0
    fppi = fp / cases if cases else 0.0
    return CurvePoint(threshold=float(threshold), recall=recall, precision=precision, fppi=fppi)


def froc_curve(results: Optional[Sequence[MatchResult]] = None,
               grid: Optional[Sequence[Tuple[float, Sequence[MatchResult]]]] = None) -> List[CurvePoint]:
    """
    Recall and FPPI per operating point.

    results: confidence sweep over the distinct observed confidences, descending
    grid: one (grid value, per-case MatchResults) entry per hyperparameter setting
    """
    if grid is not None:
        points = []
        for value, grid_results in grid:
            counts = confusion_from_matches(grid_results)
            points.append(_operating_point(value, counts.tp, counts.fp,
                                           _total_refs(grid_results), len(grid_results)))
        return points
    if results is None:
        raise ValueError('froc_curve needs per-case results with confidences or a hyperparameter grid')

    scored = scored_predictions(results)
    total_refs = _total_refs(results)
    cases = len(results)
    if not scored:
        return [_operating_point(1.0, 0, 0, total_refs, cases)]
    confidences = np.array([c for c, _ in scored], dtype=float)
    is_tp = np.array([t for _, t in scored], dtype=bool)
    points = []
    for t in np.unique(confidences)[::-1]:
        kept = confidences >= t
        tp = int(np.sum(is_tp & kept))
        fp = int(np.sum(~is_tp & kept))
        points.append(_operating_point(t, tp, fp, total_refs, cases))
    return points


# =============================================================================
# CALIBRATION
# =============================================================================
def calibration_curve(scored: Sequence[Tuple[float, bool]],
                      num_bins: int = CALIBRATION_CONFIG['num_bins']) -> List[Dict]:
    """Equal-width bins on [0, 1]: mean confidence, TP fraction and count per bin."""
    if num_bins < 1:
        raise ValueError('num_bins must be >= 1')
    confidences = np.array([c for c, _ in scored], dtype=float)
    is_tp = np.array([t for _, t in scored], dtype=bool)
    if confidences.size and (confidences.min() < 0 or confidences.max() > 1):
        raise ValueError('confidences must lie in [0, 1]')
    index = np.minimum((confidences * num_bins).astype(int), num_bins - 1)

    bins = []
    for b in range(num_bins):
        member = index == b
        count = int(member.sum())
        bins.append({
            'bin_lower': b / num_bins,
            'bin_upper': (b + 1) / num_bins,
            'mean_confidence': float(confidences[member].mean()) if count else None,
            'precision': float(is_tp[member].mean()) if count else None,
            'count': count,
        })
    return bins


def expected_calibration_error(bins: Sequence[Mapping]) -> Optional[float]:
    """Count-weighted mean |precision - confidence| over populated bins."""
    total = sum(b['count'] for b in bins)
    if total == 0:
        return None
    return float(sum(b['count'] * abs(b['precision'] - b['mean_confidence'])
                     for b in bins if b['count']) / total)


# =============================================================================
# METRIC @ TARGET
# =============================================================================
def _better(metric: str, a: float, b: float) -> bool:
    return a > b if METRIC_DIRECTIONS[metric] == 'higher' else a < b


def metric_at_target(sweep: Sequence[Tuple[float, Mapping[str, float]]], target_metric: str,
                     target_value: float, report_metric: str) -> Dict:
    """
    Report `report_metric` at the operating point where `target_metric`
    reaches `target_value` (>= for higher-is-better, <= for lower-is-better).
    """
    for name in (target_metric, report_metric):
        if name not in METRIC_DIRECTIONS:
            raise ValueError(f'unknown metric {name!r}; known: {", ".join(sorted(METRIC_DIRECTIONS))}')
    if not sweep:
        raise ValueError('metric_at_target needs a nonempty sweep')
    for point, values in sweep:
        for name in (target_metric, report_metric):
            if values.get(name) is None:
                raise ValueError(f'metric {name!r} missing at operating point {point}')

    higher = METRIC_DIRECTIONS[target_metric] == 'higher'
    qualifying = [(p, v) for p, v in sweep
                  if (v[target_metric] >= target_value if higher else v[target_metric] <= target_value)]

    def pick(candidates):
        best = candidates[0]
        for candidate in candidates[1:]:
            if _better(report_metric, candidate[1][report_metric], best[1][report_metric]):
                best = candidate
        return best

    flags = []
    if qualifying:
        point, values = pick(qualifying)
    else:
        gap = min(abs(v[target_metric] - target_value) for _, v in sweep)
        closest = [(p, v) for p, v in sweep if abs(v[target_metric] - target_value) == gap]
        point, values = pick(closest)
        flags.append('target_unmet')
        logger.warning(f'{report_metric}@{target_metric}={target_value}: target unmet, '
                       f'closest point {point} reaches {values[target_metric]}')
    return {
        'operating_point': point,
        'value': values[report_metric],
        'target_metric': target_metric,
        'target_value': target_value,
        'achieved': values[target_metric],
        'flags': flags,
    }


# =============================================================================
# RESIMULATION
# =============================================================================
class Plausibility(str, Enum):
    PLAUSIBLE = 'plausible'
    IMPLAUSIBLE = 'implausible'


def resimulation_fp_check(pred_mode: Mode, forward, observation, tol: float,
                          params: Optional[Mapping] = None) -> Plausibility:
    """Plausible iff |forward(center) - observation| <= tol in observable space."""
    if forward is None:
        raise MissingForwardModelError('resimulation requested but no forward model is available')
    y = np.asarray(observation, dtype=float).reshape(-1)
    simulated = np.asarray(forward(pred_mode.center, params or {}), dtype=float).reshape(-1)
    if simulated.shape != y.shape:
        raise ValueError(f'forward model output shape {simulated.shape} does not match observation {y.shape}')
    distance = float(np.linalg.norm(simulated - y))
    return Plausibility.PLAUSIBLE if distance <= tol else Plausibility.IMPLAUSIBLE


def apply_resimulation(result: MatchResult, preds: ModeSet, forward, observation, tol: float,
                       params: Optional[Mapping] = None) -> MatchResult:
    """Move plausible FP candidates out of the FP list; FP is exact afterwards."""
    plausible = tuple(i for i in result.unmatched_pred
                      if resimulation_fp_check(preds[i], forward, observation, tol, params)
                      is Plausibility.PLAUSIBLE)
    return replace(
        result,
        unmatched_pred=tuple(i for i in result.unmatched_pred if i not in plausible),
        resimulated_pred=plausible,
        fp_upper_bound_flag=False,
    )
