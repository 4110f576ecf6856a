"""
CORE DATA MODEL
===============
Immutable types shared by every stage of the pipeline:
PosteriorSamples, Mode, ModeSet, Reference, Observation, ValidationCase
and the seven-property problem Fingerprint.

Arrays are copied on construction and marked read-only, so instances can be
shared across workers.
"""

import itertools
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterator, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .exceptions import CaseFileError, FingerprintError

try:
    from ..config import CASE_CONFIG
except ImportError:
    from posterior_validation.config import CASE_CONFIG


def _frozen(values, ndim: int) -> np.ndarray:
    arr = np.array(values, dtype=float, copy=True)
    if arr.ndim != ndim:
        raise ValueError(f'expected a {ndim}-d array, got shape {arr.shape}')
    arr.setflags(write=False)
    return arr


# =============================================================================
# ENUMS
# =============================================================================
class ReferenceGranularity(str, Enum):
    POSTERIOR_LABELED = 'posterior_labeled'
    POSTERIOR_UNLABELED = 'posterior_unlabeled'
    MODES_EXHAUSTIVE = 'modes_exhaustive'
    MODES_NONEXHAUSTIVE = 'modes_nonexhaustive'

    @property
    def is_posterior(self) -> bool:
        return self in (ReferenceGranularity.POSTERIOR_LABELED,
                        ReferenceGranularity.POSTERIOR_UNLABELED)

    @property
    def is_exhaustive(self) -> bool:
        return self is not ReferenceGranularity.MODES_NONEXHAUSTIVE


class Availability(str, Enum):
    AVAILABLE = 'available'
    UNAVAILABLE = 'unavailable'


class YesNo(str, Enum):
    YES = 'yes'
    NO = 'no'


# =============================================================================
# SAMPLES AND MODES
# =============================================================================
@dataclass(frozen=True, eq=False)
class PosteriorSamples:
    """N samples of a d-dimensional posterior, optionally weighted."""

    points: np.ndarray
    weights: Optional[np.ndarray] = None

    def __post_init__(self):
        points = np.array(self.points, dtype=float, copy=True)
        if points.ndim == 1:
            points = points.reshape(-1, 1)
        if points.ndim != 2 or points.shape[0] < 1 or points.shape[1] < 1:
            raise ValueError(f'samples must be a non-empty list of vectors, got shape {points.shape}')
        if not np.all(np.isfinite(points)):
            raise ValueError('samples contain non-finite values')
        points.setflags(write=False)
        object.__setattr__(self, 'points', points)

        if self.weights is not None:
            weights = _frozen(self.weights, 1)
            if len(weights) != len(points):
                raise ValueError(f'{len(weights)} weights for {len(points)} samples')
            if np.any(weights <= 0):
                raise ValueError('weights must be positive')
            if abs(weights.sum() - 1.0) > CASE_CONFIG['weight_sum_tolerance']:
                raise ValueError(f'weights sum to {weights.sum()!r}, not 1')
            object.__setattr__(self, 'weights', weights)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return self.points.shape[0]

    def column(self, index: int = 0) -> np.ndarray:
        return self.points[:, index]


def _validated_covariance(cov, dim: int) -> np.ndarray:
    cov = np.array(cov, dtype=float, copy=True)
    if cov.ndim == 0 and dim == 1:
        cov = cov.reshape(1, 1)
    if cov.shape != (dim, dim):
        raise ValueError(f'covariance shape {cov.shape} does not match dimension {dim}')
    if not np.all(np.isfinite(cov)):
        raise ValueError('covariance contains non-finite values')
    tol = CASE_CONFIG['symmetry_tolerance']
    if np.max(np.abs(cov - cov.T)) > tol:
        raise ValueError('covariance is not symmetric')
    eigvals, eigvecs = np.linalg.eigh(cov)
    if eigvals.min() < -CASE_CONFIG['psd_tolerance']:
        raise ValueError(f'covariance has negative eigenvalue {eigvals.min()!r}')
    if eigvals.min() < 0:
        cov = (eigvecs * np.clip(eigvals, 0.0, None)) @ eigvecs.T
    cov.setflags(write=False)
    return cov


@dataclass(frozen=True, eq=False)
class Mode:
    """A posterior mode treated as a detection instance."""

    center: np.ndarray
    covariance: Optional[np.ndarray] = None
    relative_mass: float = 1.0
    confidence: Optional[float] = None
    label: Optional[str] = None
    # member samples of a detected or labeled mode; never serialized
    samples: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        center = np.array(self.center, dtype=float, copy=True).reshape(-1)
        if center.size < 1 or not np.all(np.isfinite(center)):
            raise ValueError('mode center must be a non-empty finite vector')
        center.setflags(write=False)
        object.__setattr__(self, 'center', center)

        if self.covariance is not None:
            object.__setattr__(self, 'covariance', _validated_covariance(self.covariance, center.size))
        if not 0.0 <= float(self.relative_mass) <= 1.0:
            raise ValueError(f'relative_mass {self.relative_mass!r} outside [0, 1]')
        object.__setattr__(self, 'relative_mass', float(self.relative_mass))
        if self.confidence is not None:
            if not 0.0 <= float(self.confidence) <= 1.0:
                raise ValueError(f'confidence {self.confidence!r} outside [0, 1]')
            object.__setattr__(self, 'confidence', float(self.confidence))
        if self.samples is not None:
            samples = np.array(self.samples, dtype=float, copy=True).reshape(-1, center.size)
            samples.setflags(write=False)
            object.__setattr__(self, 'samples', samples)

    @property
    def dim(self) -> int:
        return self.center.size

    @property
    def name(self) -> str:
        return self.label if self.label is not None else f'mode@{np.round(self.center, 4).tolist()}'


@dataclass(frozen=True, eq=False)
class ModeSet:
    modes: Tuple[Mode, ...] = ()

    def __post_init__(self):
        modes = tuple(self.modes)
        if modes and len({m.dim for m in modes}) != 1:
            raise ValueError('all modes in a set must share one dimension')
        object.__setattr__(self, 'modes', modes)

    def __len__(self) -> int:
        return len(self.modes)

    def __iter__(self) -> Iterator[Mode]:
        return iter(self.modes)

    def __getitem__(self, index: int) -> Mode:
        return self.modes[index]

    @property
    def dim(self) -> Optional[int]:
        return self.modes[0].dim if self.modes else None

    def centers(self) -> np.ndarray:
        if not self.modes:
            return np.empty((0, 0))
        return np.vstack([m.center for m in self.modes])

    @property
    def has_confidence(self) -> bool:
        return all(m.confidence is not None for m in self.modes)

    def confidences(self) -> Optional[np.ndarray]:
        if not self.has_confidence:
            return None
        return np.array([m.confidence for m in self.modes], dtype=float)

    def most_massive(self) -> Optional[Mode]:
        if not self.modes:
            return None
        # stable: first mode wins ties
        return max(self.modes, key=lambda m: m.relative_mass)


# =============================================================================
# REFERENCE, OBSERVATION, CASE
# =============================================================================
@dataclass(frozen=True, eq=False)
class Reference:
    granularity: ReferenceGranularity
    modes: ModeSet = field(default_factory=ModeSet)
    samples: Optional[PosteriorSamples] = None
    sample_labels: Optional[Tuple[str, ...]] = None

    def __post_init__(self):
        granularity = ReferenceGranularity(self.granularity)
        object.__setattr__(self, 'granularity', granularity)
        if not isinstance(self.modes, ModeSet):
            object.__setattr__(self, 'modes', ModeSet(tuple(self.modes)))
        if granularity.is_posterior and self.samples is None:
            raise ValueError(f'granularity {granularity.value} requires reference samples')
        if not granularity.is_posterior and len(self.modes) == 0:
            raise ValueError(f'granularity {granularity.value} requires at least one mode')
        if self.samples is not None and self.modes.dim is not None and self.samples.dim != self.modes.dim:
            raise ValueError('reference samples and modes differ in dimension')
        if self.sample_labels is not None:
            labels = tuple(str(x) for x in self.sample_labels)
            if self.samples is None or len(labels) != len(self.samples):
                raise ValueError('sample_labels must have one entry per reference sample')
            object.__setattr__(self, 'sample_labels', labels)

    @property
    def dim(self) -> Optional[int]:
        if self.samples is not None:
            return self.samples.dim
        return self.modes.dim

    def samples_for_label(self, label: str) -> Optional[np.ndarray]:
        if self.samples is None or self.sample_labels is None:
            return None
        mask = np.array([lab == label for lab in self.sample_labels], dtype=bool)
        return self.samples.points[mask]


@dataclass(frozen=True, eq=False)
class Observation:
    """Observable-space measurement plus forward-problem parameters."""

    y: np.ndarray
    params: Mapping = field(default_factory=dict)

    def __post_init__(self):
        y = np.array(self.y, dtype=float, copy=True).reshape(-1)
        if not np.all(np.isfinite(y)):
            raise ValueError('observation contains non-finite values')
        y.setflags(write=False)
        object.__setattr__(self, 'y', y)
        object.__setattr__(self, 'params', dict(self.params))


@dataclass(frozen=True, eq=False)
class ValidationCase:
    id: str
    prediction: PosteriorSamples
    reference: Reference
    prediction_log_density: Optional[np.ndarray] = None
    observation: Optional[Observation] = None
    # dimension index -> period, in the units of that dimension
    periodic: Dict[int, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.prediction_log_density is not None:
            log_density = _frozen(self.prediction_log_density, 1)
            ref_count = len(self.reference.samples) if self.reference.samples is not None else 0
            if len(log_density) != ref_count:
                raise CaseFileError(
                    f'{len(log_density)} log-density values for {ref_count} reference samples',
                    case_id=self.id, field='prediction.log_density')
            object.__setattr__(self, 'prediction_log_density', log_density)
        ref_dim = self.reference.dim
        if ref_dim is not None and ref_dim != self.prediction.dim:
            raise CaseFileError(
                f'prediction dimension {self.prediction.dim} differs from reference dimension {ref_dim}',
                case_id=self.id, field='reference')
        periodic = {int(k): float(v) for k, v in dict(self.periodic).items()}
        for index, period in periodic.items():
            if not 0 <= index < self.prediction.dim:
                raise CaseFileError(f'periodic index {index} out of range', case_id=self.id, field='dims.periodic')
            if period <= 0:
                raise CaseFileError(f'period {period} must be positive', case_id=self.id, field='dims.periodic')
        object.__setattr__(self, 'periodic', periodic)

    @property
    def dim(self) -> int:
        return self.prediction.dim


# =============================================================================
# FINGERPRINT
# =============================================================================
FINGERPRINT_FIELDS = {
    'p1_reference_granularity': ReferenceGranularity,
    'p2_resimulation': Availability,
    'p3_confidence_score': Availability,
    'p4_prediction_density': Availability,
    'p5_natural_discretization': Availability,
    'p6_univariate': YesNo,
    'p7_accurate_uncertainty': YesNo,
}


@dataclass(frozen=True)
class Fingerprint:
    """The seven properties of an inverse problem that drive metric selection."""

    p1_reference_granularity: ReferenceGranularity
    p2_resimulation: Availability
    p3_confidence_score: Availability
    p4_prediction_density: Availability
    p5_natural_discretization: Availability
    p6_univariate: YesNo
    p7_accurate_uncertainty: YesNo

    def __post_init__(self):
        for name, enum_type in FINGERPRINT_FIELDS.items():
            value = getattr(self, name)
            try:
                object.__setattr__(self, name, enum_type(value))
            except ValueError:
                allowed = ', '.join(v.value for v in enum_type)
                raise FingerprintError(name, f'"{value}" is not one of {allowed}') from None

    @classmethod
    def from_dict(cls, data: Mapping) -> 'Fingerprint':
        if not isinstance(data, Mapping):
            raise FingerprintError('<root>', 'fingerprint must be a mapping')
        unknown = set(data) - set(FINGERPRINT_FIELDS)
        if unknown:
            raise FingerprintError(sorted(unknown)[0], 'unknown field')
        missing = [name for name in FINGERPRINT_FIELDS if name not in data]
        if missing:
            raise FingerprintError(missing[0], 'missing')
        return cls(**{name: data[name] for name in FINGERPRINT_FIELDS})

    def to_dict(self) -> Dict[str, str]:
        return {name: getattr(self, name).value for name in FINGERPRINT_FIELDS}

    @property
    def resimulation(self) -> bool:
        return self.p2_resimulation is Availability.AVAILABLE

    @property
    def confidence_score(self) -> bool:
        return self.p3_confidence_score is Availability.AVAILABLE

    @property
    def prediction_density(self) -> bool:
        return self.p4_prediction_density is Availability.AVAILABLE

    @property
    def natural_discretization(self) -> bool:
        return self.p5_natural_discretization is Availability.AVAILABLE

    @property
    def univariate(self) -> bool:
        return self.p6_univariate is YesNo.YES

    @property
    def accurate_uncertainty(self) -> bool:
        return self.p7_accurate_uncertainty is YesNo.YES


def all_fingerprints() -> List[Fingerprint]:
    """Every combination of fingerprint values (4 * 2**6 = 256)."""
    value_lists: Sequence[Sequence] = [list(enum_type) for enum_type in FINGERPRINT_FIELDS.values()]
    return [Fingerprint(*combo) for combo in itertools.product(*value_lists)]
