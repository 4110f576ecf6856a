"""
MODEL 3: Assignment
===================
Input: predicted modes, reference modes, localization criterion
Output: MatchResult (matched pairs, FP candidates, FN)

Strategies:
- greedy_by_score: predictions in descending confidence take their best free reference
- greedy_by_localization: admissible pairs in ascending score
- hungarian: max-cardinality, min-cost one-to-one matching over admissible pairs
- fixed_threshold: coverage counting; duplicate hits on one reference are not penalized

Ties are broken by (pred index, ref index) ascending everywhere.
"""

import logging
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
from scipy.optimize import linear_sum_assignment

from .localization import LocalizationCriterion, score_matrix

try:
    from ..config import ASSIGNMENT_CONFIG
    from ..core.data_model import ModeSet
except ImportError:
    from posterior_validation.config import ASSIGNMENT_CONFIG
    from posterior_validation.core.data_model import ModeSet

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MatchResult:
    """Per-case assignment outcome."""

    matches: Tuple[Tuple[int, int, float], ...] = ()
    unmatched_pred: Tuple[int, ...] = ()
    unmatched_ref: Tuple[int, ...] = ()
    fp_upper_bound_flag: bool = False
    # confidence of every prediction, indexed by pred index
    pred_scores: Optional[Tuple[float, ...]] = None
    # fixed_threshold only: admissible predictions left out of the coverage matching
    surplus_pred: Tuple[int, ...] = ()
    # unmatched predictions judged plausible by resimulation (removed from FP)
    resimulated_pred: Tuple[int, ...] = ()
    num_preds: int = 0
    num_refs: int = 0
    strategy: str = field(default='', compare=False)

    @property
    def tp(self) -> int:
        return len(self.matches)

    @property
    def fp(self) -> int:
        return len(self.unmatched_pred)

    @property
    def fn(self) -> int:
        return len(self.unmatched_ref)

    @property
    def total_cost(self) -> float:
        return float(sum(score for _, _, score in self.matches))


def _pred_scores(preds: ModeSet) -> Optional[Tuple[float, ...]]:
    confidences = preds.confidences()
    return None if confidences is None else tuple(float(c) for c in confidences)


def _finish(preds: ModeSet, refs: ModeSet, matches, strategy: str, surplus=()) -> MatchResult:
    matches = tuple(sorted((int(i), int(j), float(s)) for i, j, s in matches))
    matched_preds = {i for i, _, _ in matches} | set(surplus)
    matched_refs = {j for _, j, _ in matches}
    return MatchResult(
        matches=matches,
        unmatched_pred=tuple(i for i in range(len(preds)) if i not in matched_preds),
        unmatched_ref=tuple(j for j in range(len(refs)) if j not in matched_refs),
        pred_scores=_pred_scores(preds),
        surplus_pred=tuple(sorted(surplus)),
        num_preds=len(preds),
        num_refs=len(refs),
        strategy=strategy,
    )


def greedy_assign(preds: ModeSet, refs: ModeSet, criterion: LocalizationCriterion,
                  order: str = 'by_score') -> MatchResult:
    """Greedy one-to-one matching by confidence or by localization score."""
    if order not in ('by_score', 'by_localization'):
        raise ValueError(f"order must be 'by_score' or 'by_localization', got {order!r}")
    if order == 'by_score' and not preds.has_confidence:
        raise ValueError('greedy matching by score needs a confidence on every predicted mode')

    scores, admissible = score_matrix(preds, refs, criterion)
    matches = []
    taken_refs = set()

    if order == 'by_score':
        confidences = preds.confidences()
        for i in np.argsort(-confidences, kind='stable'):
            candidates = [j for j in range(len(refs)) if admissible[i, j] and j not in taken_refs]
            if not candidates:
                continue
            best = min(candidates, key=lambda j: (scores[i, j], j))
            matches.append((i, best, scores[i, best]))
            taken_refs.add(best)
    else:
        taken_preds = set()
        pairs = sorted((scores[i, j], i, j) for i, j in zip(*np.nonzero(admissible)))
        for score, i, j in pairs:
            if i in taken_preds or j in taken_refs:
                continue
            matches.append((i, j, score))
            taken_preds.add(i)
            taken_refs.add(j)

    return _finish(preds, refs, matches, f'greedy_{order}')


def _min_cost_matching(scores: np.ndarray, admissible: np.ndarray):
    """Most admissible pairs first, then the lowest total score among them."""
    if not admissible.any():
        return []
    if not np.all(np.isfinite(scores[admissible])):
        raise ValueError('min-cost matching needs finite scores on admissible pairs')
    # any admissible pair must be cheaper than every inadmissible one combined with all costs
    big = 1.0 + 2.0 * float(np.abs(scores[admissible]).sum())
    cost = np.where(admissible, scores, big)
    rows, cols = linear_sum_assignment(cost)
    return [(i, j, scores[i, j]) for i, j in zip(rows, cols) if admissible[i, j]]


def hungarian_assign(preds: ModeSet, refs: ModeSet, criterion: LocalizationCriterion) -> MatchResult:
    """
    Minimum total localization score among the matchings with the most
    admissible pairs. Inadmissible pairs get a prohibitive cost and are
    dropped from the solution.
    """
    if len(preds) == 0 or len(refs) == 0:
        return _finish(preds, refs, [], 'hungarian')
    scores, admissible = score_matrix(preds, refs, criterion)
    return _finish(preds, refs, _min_cost_matching(scores, admissible), 'hungarian')


def threshold_assign(preds: ModeSet, refs: ModeSet, criterion: LocalizationCriterion) -> MatchResult:
    """
    Coverage counting. References are covered through a maximum coverage
    matching, so a prediction whose closest reference is already hit still
    covers another reference it is admissible to. Every hit reference records
    one representative; the remaining admissible predictions are surplus
    (neither TP nor FP). One prediction hits at most one reference.
    """
    if len(preds) == 0 or len(refs) == 0:
        return _finish(preds, refs, [], 'fixed_threshold')
    scores, admissible = score_matrix(preds, refs, criterion)
    matches = _min_cost_matching(scores, admissible)
    matched_preds = {i for i, _, _ in matches}
    surplus = [i for i in range(len(preds)) if i not in matched_preds and admissible[i].any()]
    return _finish(preds, refs, matches, 'fixed_threshold', surplus)


def assign(preds: ModeSet, refs: ModeSet, criterion: LocalizationCriterion,
           strategy: str = ASSIGNMENT_CONFIG['strategy']) -> MatchResult:
    """Dispatch on a strategy name from the run config"""
    if strategy == 'greedy_by_score':
        return greedy_assign(preds, refs, criterion, 'by_score')
    if strategy == 'greedy_by_localization':
        return greedy_assign(preds, refs, criterion, 'by_localization')
    if strategy == 'hungarian':
        return hungarian_assign(preds, refs, criterion)
    if strategy == 'fixed_threshold':
        return threshold_assign(preds, refs, criterion)
    raise ValueError(f'unknown assignment strategy {strategy!r}')
