"""
MODEL 1: Mode Detection
=======================
Input: posterior samples
Output: ModeSet (center, covariance, relative mass, bootstrap confidence)

Steps:
- Clustering: DBSCAN (scikit-learn) for any dimension, UniDip for d = 1
- Mode extraction: per-cluster center (mean or median), covariance, mass
- Confidence: mean IoU between the original clusters and the clusters of
  bootstrap resamples
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
from sklearn.cluster import DBSCAN

from .dip_test import unidip_intervals

try:
    from ..config import BOOTSTRAP_CONFIG, DBSCAN_CONFIG, MODE_CONFIG, UNIDIP_CONFIG
    from ..core.data_model import Mode, ModeSet, PosteriorSamples
except ImportError:
    from posterior_validation.config import BOOTSTRAP_CONFIG, DBSCAN_CONFIG, MODE_CONFIG, UNIDIP_CONFIG
    from posterior_validation.core.data_model import Mode, ModeSet, PosteriorSamples

logger = logging.getLogger(__name__)


# =============================================================================
# TYPES
# =============================================================================
@dataclass(frozen=True, eq=False)
class ClusterLabeling:
    """One label per sample; -1 is noise, clusters are 0..num_clusters-1."""

    labels: np.ndarray

    def __post_init__(self):
        labels = np.array(self.labels, dtype=np.int64, copy=True).reshape(-1)
        if np.any(labels < -1):
            raise ValueError('labels must be >= -1')
        present = np.unique(labels[labels >= 0])
        if present.size and not np.array_equal(present, np.arange(present.size)):
            raise ValueError('cluster labels must be contiguous from 0')
        labels.setflags(write=False)
        object.__setattr__(self, 'labels', labels)

    @property
    def num_clusters(self) -> int:
        return int(self.labels.max()) + 1 if self.labels.size and self.labels.max() >= 0 else 0

    @property
    def noise_count(self) -> int:
        return int(np.sum(self.labels == -1))

    def __len__(self) -> int:
        return self.labels.size


@dataclass(frozen=True)
class DbscanParams:
    eps: float = DBSCAN_CONFIG['eps']
    min_samples: int = DBSCAN_CONFIG['min_samples']

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError(f'eps must be positive, got {self.eps}')
        if int(self.min_samples) < 1:
            raise ValueError(f'min_samples must be >= 1, got {self.min_samples}')
        object.__setattr__(self, 'min_samples', int(self.min_samples))


@dataclass(frozen=True)
class UnidipParams:
    alpha: float = UNIDIP_CONFIG['alpha']
    bootstrap_draws: int = UNIDIP_CONFIG['bootstrap_draws']
    seed: int = UNIDIP_CONFIG['seed']

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f'alpha must be in (0, 1), got {self.alpha}')
        if int(self.bootstrap_draws) < 1:
            raise ValueError('bootstrap_draws must be positive')


ClusterParams = Union[DbscanParams, UnidipParams]


# =============================================================================
# CLUSTERING
# =============================================================================
def _points(samples: Union[PosteriorSamples, np.ndarray]) -> np.ndarray:
    if isinstance(samples, PosteriorSamples):
        return samples.points
    points = np.asarray(samples, dtype=float)
    return points.reshape(-1, 1) if points.ndim == 1 else points


def dbscan(samples: Union[PosteriorSamples, np.ndarray], params: DbscanParams) -> ClusterLabeling:
    """
    DBSCAN under Euclidean distance. A core point has at least min_samples
    neighbours within eps, itself included. Border points join the first
    cluster, in index order, that reaches them.
    """
    points = _points(samples)
    model = DBSCAN(eps=params.eps, min_samples=params.min_samples,
                   metric='euclidean', algorithm=DBSCAN_CONFIG['algorithm'])
    labels = model.fit_predict(points)
    return ClusterLabeling(labels)


def unidip(samples: Union[PosteriorSamples, np.ndarray], params: UnidipParams) -> ClusterLabeling:
    """UniDip clustering of univariate samples; one cluster per modal interval."""
    points = _points(samples)
    if points.shape[1] != 1:
        raise ValueError(f'unidip needs univariate samples, got d={points.shape[1]}')
    values = points[:, 0]
    order = np.argsort(values, kind='stable')
    intervals = unidip_intervals(values[order], params.alpha, params.bootstrap_draws, params.seed)

    labels = np.full(values.size, -1, dtype=np.int64)
    for cluster_id, (lo, hi) in enumerate(intervals):
        labels[order[lo:hi + 1]] = cluster_id
    return ClusterLabeling(labels)


def cluster(samples: Union[PosteriorSamples, np.ndarray], params: ClusterParams) -> ClusterLabeling:
    if isinstance(params, UnidipParams):
        return unidip(samples, params)
    return dbscan(samples, params)


# =============================================================================
# MODE EXTRACTION
# =============================================================================
def extract_modes(samples: PosteriorSamples, labeling: ClusterLabeling,
                  center_rule: Optional[str] = None,
                  confidences: Optional[np.ndarray] = None,
                  diagnostics: Optional[List[str]] = None) -> ModeSet:
    """
    One Mode per cluster, sorted by descending relative mass (ties keep
    cluster order). Noise counts toward the mass denominator.
    """
    points = samples.points
    if len(labeling) != len(samples):
        raise ValueError(f'{len(labeling)} labels for {len(samples)} samples')
    if center_rule is None:
        center_rule = MODE_CONFIG['center_rule_univariate'] if samples.dim == 1 \
            else MODE_CONFIG['center_rule_multivariate']
    if center_rule not in ('mean', 'median'):
        raise ValueError(f"center_rule must be 'mean' or 'median', got {center_rule!r}")

    weights = samples.weights
    total = len(samples)
    modes = []
    for cluster_id in range(labeling.num_clusters):
        member = labeling.labels == cluster_id
        cluster_points = points[member]
        if center_rule == 'median':
            center = np.median(cluster_points, axis=0)
        elif weights is not None:
            center = np.average(cluster_points, axis=0, weights=weights[member])
        else:
            center = cluster_points.mean(axis=0)

        if cluster_points.shape[0] > 1:
            covariance = np.atleast_2d(np.cov(
                cluster_points, rowvar=False, ddof=1,
                aweights=weights[member] if weights is not None else None))
        else:
            covariance = np.zeros((samples.dim, samples.dim))
            message = f'cluster {cluster_id} has a single sample; covariance set to zero'
            logger.warning(message)
            if diagnostics is not None:
                diagnostics.append(message)

        mass = float(weights[member].sum()) if weights is not None else cluster_points.shape[0] / total
        confidence = None
        if confidences is not None:
            confidence = float(np.clip(confidences[cluster_id], 0.0, 1.0))
        modes.append((-mass, cluster_id, Mode(
            center=center,
            covariance=covariance,
            relative_mass=min(mass, 1.0),
            confidence=confidence,
            label=f'cluster-{cluster_id}',
            samples=cluster_points,
        )))

    modes.sort(key=lambda item: (item[0], item[1]))
    return ModeSet(tuple(mode for _, _, mode in modes))


# =============================================================================
# BOOTSTRAP CONFIDENCE
# =============================================================================
def cluster_iou(original_labels: np.ndarray, new_labels: np.ndarray, indices: np.ndarray) -> np.ndarray:
    """
    Best IoU of every original cluster with the clusters of a resample.

    `indices[i]` is the original index of resampled point i; repeated
    indices count once. Original clusters are restricted to drawn indices.
    """
    original_labels = np.asarray(original_labels)
    num_original = int(original_labels.max()) + 1 if original_labels.size and original_labels.max() >= 0 else 0
    ious = np.zeros(num_original)
    if num_original == 0:
        return ious

    drawn, first = np.unique(np.asarray(indices), return_index=True)
    orig = original_labels[drawn]
    new = np.asarray(new_labels)[first]
    num_new = int(new.max()) + 1 if new.size and new.max() >= 0 else 0
    if num_new == 0:
        return ious

    both = (orig >= 0) & (new >= 0)
    intersection = np.zeros((num_original, num_new))
    np.add.at(intersection, (orig[both], new[both]), 1.0)
    size_orig = np.bincount(orig[orig >= 0], minlength=num_original).astype(float)
    size_new = np.bincount(new[new >= 0], minlength=num_new).astype(float)
    union = size_orig[:, None] + size_new[None, :] - intersection
    with np.errstate(invalid='ignore', divide='ignore'):
        iou = np.where(union > 0, intersection / union, 0.0)
    return iou.max(axis=1)


def bootstrap_confidence(samples: PosteriorSamples, params: ClusterParams,
                         resamples: int = BOOTSTRAP_CONFIG['resamples'],
                         rng_seed: int = 0,
                         labeling: Optional[ClusterLabeling] = None) -> np.ndarray:
    """Mean IoU per original cluster over `resamples` bootstrap reclusterings."""
    if resamples < 1:
        raise ValueError(f'resamples must be positive, got {resamples}')
    original = labeling if labeling is not None else cluster(samples, params)
    if original.num_clusters == 0:
        return np.zeros(0)

    points = samples.points
    rng = np.random.default_rng(rng_seed)
    total = np.zeros(original.num_clusters)
    for _ in range(resamples):
        indices = rng.integers(0, len(points), size=len(points))
        relabeled = cluster(points[indices], params)
        total += cluster_iou(original.labels, relabeled.labels, indices)
    return total / resamples


# =============================================================================
# DETECTOR FACADE
# =============================================================================
class ModeDetector:
    """Clustering, mode extraction and confidence scoring in one call"""

    def __init__(self, algorithm: str = MODE_CONFIG['algorithm'],
                 dbscan_params: Optional[DbscanParams] = None,
                 unidip_params: Optional[UnidipParams] = None,
                 center_rule: Optional[str] = None,
                 resamples: int = BOOTSTRAP_CONFIG['resamples']):
        if algorithm not in ('dbscan', 'unidip', 'auto'):
            raise ValueError(f'unknown mode detection algorithm {algorithm!r}')
        self.algorithm = algorithm
        self.dbscan_params = dbscan_params or DbscanParams()
        self.unidip_params = unidip_params or UnidipParams()
        self.center_rule = center_rule
        self.resamples = resamples

    def params_for(self, dim: int) -> ClusterParams:
        if self.algorithm == 'unidip' or (self.algorithm == 'auto' and dim == 1):
            return self.unidip_params
        return self.dbscan_params

    def detect(self, samples: PosteriorSamples, rng_seed: int = 0) -> Tuple[ModeSet, Dict]:
        """
        Returns (ModeSet, details) where details holds cluster and noise
        counts plus any diagnostics.
        """
        params = self.params_for(samples.dim)
        labeling = cluster(samples, params)
        confidences = None
        if self.resamples > 0 and labeling.num_clusters > 0:
            confidences = bootstrap_confidence(samples, params, self.resamples, rng_seed, labeling)
        diagnostics: List[str] = []
        modes = extract_modes(samples, labeling, self.center_rule, confidences, diagnostics)
        return modes, {
            'num_clusters': labeling.num_clusters,
            'noise_count': labeling.noise_count,
            'diagnostics': diagnostics,
        }


def detect_modes(samples: PosteriorSamples, rng_seed: int = 0) -> ModeSet:
    """Detect modes with the default configuration"""
    detector = ModeDetector()
    modes, _ = detector.detect(samples, rng_seed)
    return modes
