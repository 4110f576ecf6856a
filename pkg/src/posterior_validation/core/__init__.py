"""
Core data model, case file I/O and registries
"""

from .data_model import (
    Availability,
    Fingerprint,
    FINGERPRINT_FIELDS,
    Mode,
    ModeSet,
    Observation,
    PosteriorSamples,
    Reference,
    ReferenceGranularity,
    ValidationCase,
    YesNo,
    all_fingerprints,
)
from .case_loader import (
    case_from_record,
    case_to_record,
    check_case_consistency,
    dump_dataset,
    load_dataset,
)
from .exceptions import (
    CaseFileError,
    ConfigError,
    DuplicateCaseError,
    FingerprintError,
    MetricRequestError,
    MissingForwardModelError,
    NonFiniteDensityError,
    PlanConflictError,
    SingularCovarianceError,
    ValidationToolkitError,
)
from .registry import (
    get_density_model,
    get_forward_model,
    has_density_model,
    register_density_model,
    register_forward_model,
)

__all__ = [
    'Availability', 'Fingerprint', 'FINGERPRINT_FIELDS', 'Mode', 'ModeSet', 'Observation',
    'PosteriorSamples', 'Reference', 'ReferenceGranularity', 'ValidationCase', 'YesNo',
    'all_fingerprints',
    'case_from_record', 'case_to_record', 'check_case_consistency', 'dump_dataset', 'load_dataset',
    'CaseFileError', 'ConfigError', 'DuplicateCaseError', 'FingerprintError', 'MetricRequestError',
    'MissingForwardModelError', 'NonFiniteDensityError', 'PlanConflictError', 'SingularCovarianceError',
    'ValidationToolkitError',
    'get_density_model', 'get_forward_model', 'has_density_model', 'register_density_model',
    'register_forward_model',
]
