"""
Error types raised by the toolkit. Input errors derive from ValueError;
PlanConflictError is an internal fault of the rule table.
"""

from typing import Optional


class ValidationToolkitError(ValueError):
    """Base class for input errors (CLI exit code 2)"""


class CaseFileError(ValidationToolkitError):
    """Case file violates the schema or a type invariant"""

    def __init__(self, message: str, case_id: Optional[str] = None,
                 field: Optional[str] = None, line: Optional[int] = None):
        self.case_id = case_id
        self.field = field
        self.line = line
        where = []
        if line is not None:
            where.append(f'line {line}')
        if case_id is not None:
            where.append(f'case "{case_id}"')
        if field is not None:
            where.append(f'field "{field}"')
        prefix = f"{', '.join(where)}: " if where else ''
        super().__init__(f'{prefix}{message}')


class DuplicateCaseError(CaseFileError):
    """Two cases share an id"""


class FingerprintError(ValidationToolkitError):
    """Fingerprint field missing or outside its allowed values"""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f'fingerprint field "{field}": {message}')


class ConfigError(ValidationToolkitError):
    """Run config is malformed"""


class MetricRequestError(ValidationToolkitError):
    """A requested metric is not supported by the fingerprint or the data"""

    def __init__(self, metric: str, rule_id: str, message: str):
        self.metric = metric
        self.rule_id = rule_id
        super().__init__(f'metric "{metric}" rejected by rule {rule_id}: {message}')


class SingularCovarianceError(ValidationToolkitError):
    """Mode covariance cannot be inverted even after ridge regularization"""

    def __init__(self, mode_label: Optional[str], message: str = 'covariance is singular'):
        self.mode_label = mode_label
        super().__init__(f'mode "{mode_label}": {message}')


class MissingForwardModelError(ValidationToolkitError):
    """Resimulation requested but no forward model is registered"""


class NonFiniteDensityError(ValidationToolkitError):
    """A log-density value is NaN or infinite"""

    def __init__(self, index: int, value: float):
        self.index = index
        super().__init__(f'log-density at index {index} is not finite ({value})')


class PlanConflictError(RuntimeError):
    """Two rules set different values for a single-valued plan field"""
