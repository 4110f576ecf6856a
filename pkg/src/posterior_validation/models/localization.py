"""
MODEL 2: Localization
=====================
Input: one predicted mode and one reference mode (or point)
Output: localization score and whether the pair is admissible as a match

Criteria:
- centroid: Lp or cosine distance between centers, periodic-aware
- mahalanobis: distance of the reference center under the predicted covariance
- ellipsoid: reference center inside the predicted confidence ellipsoid (0/1 score)
- distribution: distribution distance between per-mode sample sets
"""

import logging
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Mapping, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import chi2

from . import distribution_metrics

try:
    from ..config import LOCALIZATION_CONFIG
    from ..core.data_model import Mode, ModeSet
    from ..core.exceptions import SingularCovarianceError
except ImportError:
    from posterior_validation.config import LOCALIZATION_CONFIG
    from posterior_validation.core.data_model import Mode, ModeSet
    from posterior_validation.core.exceptions import SingularCovarianceError

logger = logging.getLogger(__name__)


class CriterionKind(str, Enum):
    CENTROID = 'centroid'
    MAHALANOBIS = 'mahalanobis'
    ELLIPSOID = 'ellipsoid'
    DISTRIBUTION = 'distribution'


DISTRIBUTION_CRITERIA = ('wasserstein', 'marginal_wasserstein', 'mmd', 'ks')


@dataclass(frozen=True)
class DistanceSpec:
    """Centroid distance: Lp exponent or cosine, periodic dims, optional dim subset."""

    p: float = 2.0
    metric: str = 'lp'
    periodic: Mapping[int, float] = field(default_factory=dict)
    dims: Optional[Tuple[int, ...]] = None

    def __post_init__(self):
        if self.metric not in ('lp', 'cosine'):
            raise ValueError(f"distance metric must be 'lp' or 'cosine', got {self.metric!r}")
        if self.metric == 'lp' and not self.p >= 1:
            raise ValueError(f'Lp exponent must be >= 1, got {self.p}')
        object.__setattr__(self, 'periodic', {int(k): float(v) for k, v in dict(self.periodic).items()})
        if self.dims is not None:
            object.__setattr__(self, 'dims', tuple(int(d) for d in self.dims))


# =============================================================================
# SCORES
# =============================================================================
def _check_dims(a: np.ndarray, b: np.ndarray):
    if a.shape != b.shape:
        raise ValueError(f'dimension mismatch: {a.size} vs {b.size}')


def _selected(dim: int, dims: Optional[Sequence[int]]) -> np.ndarray:
    if dims is None:
        return np.arange(dim)
    index = np.asarray(dims, dtype=int)
    if np.any(index < 0) or np.any(index >= dim):
        raise ValueError(f'dims {list(dims)} out of range for dimension {dim}')
    return index


def wrapped_difference(a: np.ndarray, b: np.ndarray, periodic: Mapping[int, float]) -> np.ndarray:
    """Signed a - b, wrapped into (-P/2, P/2] on periodic dimensions."""
    diff = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
    for index, period in periodic.items():
        wrapped = np.mod(diff[index], period)
        diff[index] = wrapped - period if wrapped > period / 2 else wrapped
    return diff


def centroid_distance(pred: Mode, ref: Mode, spec: Optional[DistanceSpec] = None) -> float:
    """Distance between the centers of two modes."""
    spec = spec or DistanceSpec()
    a, b = pred.center, ref.center
    _check_dims(a, b)
    index = _selected(a.size, spec.dims)

    if spec.metric == 'cosine':
        angular = [i for i in index if i in spec.periodic]
        if angular:
            angles = [2.0 * np.pi * (a[i] - b[i]) / spec.periodic[i] for i in angular]
            return float(np.mean(1.0 - np.cos(angles)))
        u, v = a[index], b[index]
        norm = np.linalg.norm(u) * np.linalg.norm(v)
        if norm == 0:
            return 0.0 if np.allclose(u, v) else 1.0
        return float(max(0.0, 1.0 - np.dot(u, v) / norm))

    diff = np.abs(a - b)
    for i, period in spec.periodic.items():
        m = np.mod(diff[i], period)
        diff[i] = min(m, period - m)
    diff = diff[index]
    if np.isinf(spec.p):
        return float(diff.max())
    return float(np.sum(diff ** spec.p) ** (1.0 / spec.p))


def _regularized_inverse_solve(pred: Mode, diff: np.ndarray, ridge: float, index: np.ndarray) -> float:
    if pred.covariance is None:
        raise SingularCovarianceError(pred.name, 'predicted mode has no covariance')
    cov = pred.covariance[np.ix_(index, index)]
    trace = float(np.trace(cov))
    if not np.isfinite(trace) or trace <= 0:
        raise SingularCovarianceError(pred.name, 'covariance has zero trace')
    regularized = cov + ridge * trace / index.size * np.eye(index.size)
    try:
        solved = np.linalg.solve(regularized, diff)
    except np.linalg.LinAlgError:
        raise SingularCovarianceError(pred.name) from None
    return float(diff @ solved)


def mahalanobis_distance(pred: Mode, ref_point, ridge: float = LOCALIZATION_CONFIG['ridge'],
                         periodic: Optional[Mapping[int, float]] = None,
                         dims: Optional[Sequence[int]] = None) -> float:
    """sqrt((x - mu)^T Sigma^-1 (x - mu)) with the ridge-regularized predicted covariance."""
    x = np.asarray(ref_point, dtype=float).reshape(-1)
    _check_dims(pred.center, x)
    index = _selected(x.size, dims)
    diff = wrapped_difference(x, pred.center, periodic or {})[index]
    return float(np.sqrt(max(_regularized_inverse_solve(pred, diff, ridge, index), 0.0)))


def chi2_threshold(level: float, dof: int) -> float:
    return float(chi2.ppf(level, dof))


def point_in_confidence_ellipsoid(pred: Mode, ref_point, level: float = LOCALIZATION_CONFIG['level'],
                                  ridge: float = LOCALIZATION_CONFIG['ridge'],
                                  periodic: Optional[Mapping[int, float]] = None,
                                  dims: Optional[Sequence[int]] = None) -> bool:
    """True iff the squared Mahalanobis distance is within the chi-square quantile at `level`."""
    if not 0.0 < level < 1.0:
        raise ValueError(f'level must be in (0, 1), got {level}')
    x = np.asarray(ref_point, dtype=float).reshape(-1)
    _check_dims(pred.center, x)
    index = _selected(x.size, dims)
    diff = wrapped_difference(x, pred.center, periodic or {})[index]
    squared = _regularized_inverse_solve(pred, diff, ridge, index)
    return bool(squared <= chi2_threshold(level, index.size))


def distribution_distance(pred: Mode, ref: Mode, dist_metric: str) -> float:
    """Distance between the member samples of two modes."""
    if pred.samples is None or ref.samples is None:
        raise ValueError('distribution localization needs per-mode samples on both modes '
                         '(reference must be a labeled posterior)')
    a, b = pred.samples, ref.samples
    if dist_metric == 'wasserstein':
        if a.shape[1] != 1:
            return distribution_metrics.marginal_wasserstein(a, b, 'mean')
        return distribution_metrics.wasserstein_1d(a[:, 0], b[:, 0])
    if dist_metric == 'marginal_wasserstein':
        return distribution_metrics.marginal_wasserstein(a, b, 'mean')
    if dist_metric == 'mmd':
        return distribution_metrics.mmd(a, b)
    if dist_metric == 'ks':
        if a.shape[1] != 1:
            raise ValueError('ks localization needs univariate modes')
        return distribution_metrics.ks_two_sample(a[:, 0], b[:, 0])['statistic']
    raise ValueError(f'unknown distribution metric {dist_metric!r}')


# =============================================================================
# CRITERION
# =============================================================================
_KIND_FIELDS = {
    CriterionKind.CENTROID: {'p', 'metric'},
    CriterionKind.MAHALANOBIS: set(),
    CriterionKind.ELLIPSOID: {'level'},
    CriterionKind.DISTRIBUTION: {'dist_metric'},
}


@dataclass(frozen=True)
class LocalizationCriterion:
    """
    How one predicted mode is scored against one reference mode.

    `equivalent_offsets` lists shifts of the reference center that count as
    the same solution (for example 180 degrees on an angular dimension).
    """

    kind: CriterionKind = CriterionKind.CENTROID
    threshold: Optional[float] = LOCALIZATION_CONFIG['threshold']
    p: Optional[float] = None
    metric: Optional[str] = None
    level: Optional[float] = None
    dist_metric: Optional[str] = None
    periodic: Mapping[int, float] = field(default_factory=dict)
    dims: Optional[Tuple[int, ...]] = None
    equivalent_offsets: Tuple[Tuple[float, ...], ...] = ()
    ridge: float = LOCALIZATION_CONFIG['ridge']

    def __post_init__(self):
        kind = CriterionKind(self.kind)
        object.__setattr__(self, 'kind', kind)
        for name in ('p', 'metric', 'level', 'dist_metric'):
            if getattr(self, name) is not None and name not in _KIND_FIELDS[kind]:
                raise ValueError(f"field '{name}' does not apply to the {kind.value} criterion")
        if kind is CriterionKind.CENTROID:
            if self.p is None:
                object.__setattr__(self, 'p', LOCALIZATION_CONFIG['p'])
            if self.metric is None:
                object.__setattr__(self, 'metric', LOCALIZATION_CONFIG['metric'])
        elif kind is CriterionKind.ELLIPSOID:
            level = LOCALIZATION_CONFIG['level'] if self.level is None else self.level
            if not 0.0 < level < 1.0:
                raise ValueError(f'level must be in (0, 1), got {level}')
            object.__setattr__(self, 'level', level)
        elif kind is CriterionKind.DISTRIBUTION:
            dist_metric = self.dist_metric or LOCALIZATION_CONFIG['dist_metric']
            if dist_metric not in DISTRIBUTION_CRITERIA:
                raise ValueError(f'unknown distribution metric {dist_metric!r}')
            object.__setattr__(self, 'dist_metric', dist_metric)
        if kind is not CriterionKind.ELLIPSOID and self.threshold is None:
            raise ValueError(f'the {kind.value} criterion needs a threshold')
        object.__setattr__(self, 'periodic', {int(k): float(v) for k, v in dict(self.periodic).items()})
        if self.dims is not None:
            object.__setattr__(self, 'dims', tuple(int(d) for d in self.dims))
        object.__setattr__(self, 'equivalent_offsets',
                           tuple(tuple(float(v) for v in off) for off in self.equivalent_offsets))

    @property
    def direction(self) -> str:
        return 'boolean' if self.kind is CriterionKind.ELLIPSOID else 'smaller_is_match'

    @property
    def distance_spec(self) -> DistanceSpec:
        return DistanceSpec(p=self.p, metric=self.metric, periodic=self.periodic, dims=self.dims)

    def for_case(self, periodic: Mapping[int, float]) -> 'LocalizationCriterion':
        """Copy with the case's periodic dimensions merged in."""
        if not periodic:
            return self
        merged = dict(periodic)
        merged.update(self.periodic)
        return replace(self, periodic=merged)

    def _reference_points(self, ref: Mode):
        yield ref.center
        for offset in self.equivalent_offsets:
            shifted = ref.center + np.asarray(offset, dtype=float)
            yield shifted

    def evaluate(self, pred: Mode, ref: Mode) -> Tuple[float, bool]:
        """(localization score, admissible)"""
        if self.kind is CriterionKind.CENTROID:
            spec = self.distance_spec
            score = min(centroid_distance(pred, Mode(center=point), spec) for point in self._reference_points(ref))
            return score, score <= self.threshold
        if self.kind is CriterionKind.MAHALANOBIS:
            score = min(mahalanobis_distance(pred, point, self.ridge, self.periodic, self.dims)
                        for point in self._reference_points(ref))
            return score, score <= self.threshold
        if self.kind is CriterionKind.ELLIPSOID:
            inside = any(point_in_confidence_ellipsoid(pred, point, self.level, self.ridge, self.periodic, self.dims)
                         for point in self._reference_points(ref))
            return (0.0, True) if inside else (1.0, False)
        score = distribution_distance(pred, ref, self.dist_metric)
        return score, score <= self.threshold


def score_matrix(preds: ModeSet, refs: ModeSet, criterion: LocalizationCriterion) -> Tuple[np.ndarray, np.ndarray]:
    """Localization scores and admissibility for every (pred, ref) pair."""
    scores = np.zeros((len(preds), len(refs)))
    admissible = np.zeros((len(preds), len(refs)), dtype=bool)
    for i, pred in enumerate(preds):
        for j, ref in enumerate(refs):
            scores[i, j], admissible[i, j] = criterion.evaluate(pred, ref)
    return scores, admissible
