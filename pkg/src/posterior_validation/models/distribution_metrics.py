"""
MODEL 5: Distribution Metrics
=============================
Input: predicted and reference posterior samples (or log-densities)
Output: distribution-level distances, natural log (nats) throughout

- wasserstein_1d / marginal_wasserstein: W1 via exact quantile integration
- mmd2 / mmd: RBF-kernel maximum mean discrepancy
- kl_discretized: KL on a shared histogram grid with epsilon smoothing
- ks_two_sample: Kolmogorov-Smirnov statistic and asymptotic p-value
- cross_entropy: -mean(log q) at reference samples
"""

import logging
from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.spatial.distance import cdist, pdist
from scipy.special import kolmogorov
from scipy.stats import entropy, wasserstein_distance

try:
    from ..config import KL_CONFIG, MMD_CONFIG, WASSERSTEIN_CONFIG
    from ..core.exceptions import NonFiniteDensityError
except ImportError:
    from posterior_validation.config import KL_CONFIG, MMD_CONFIG, WASSERSTEIN_CONFIG
    from posterior_validation.core.exceptions import NonFiniteDensityError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DiscretizationSpec:
    """Per-dimension bin counts and ranges plus q-smoothing epsilon."""

    bins: Tuple[int, ...]
    ranges: Tuple[Tuple[float, float], ...]
    epsilon: float = KL_CONFIG['epsilon']

    def __post_init__(self):
        bins = tuple(int(b) for b in self.bins)
        ranges = tuple((float(lo), float(hi)) for lo, hi in self.ranges)
        if len(bins) != len(ranges):
            raise ValueError('one bin count and one range per dimension')
        if any(b < 1 for b in bins):
            raise ValueError('bin counts must be >= 1')
        if any(lo >= hi for lo, hi in ranges):
            raise ValueError('range lower bound must be below upper bound')
        if not self.epsilon > 0:
            raise ValueError('epsilon must be positive')
        object.__setattr__(self, 'bins', bins)
        object.__setattr__(self, 'ranges', ranges)


@dataclass(frozen=True)
class KernelSpec:
    family: str = MMD_CONFIG['family']
    bandwidth: Union[float, str] = MMD_CONFIG['bandwidth']

    def __post_init__(self):
        if self.family != 'rbf':
            raise ValueError(f'only the rbf kernel is supported, got {self.family!r}')
        if self.bandwidth != 'median' and not float(self.bandwidth) > 0:
            raise ValueError('explicit bandwidth must be positive')


def _univariate(samples, name: str) -> np.ndarray:
    x = np.asarray(samples, dtype=float)
    if x.ndim == 2 and x.shape[1] == 1:
        x = x[:, 0]
    if x.ndim != 1:
        raise ValueError(f'{name} must be univariate')
    if x.size == 0:
        raise ValueError(f'{name} is empty')
    return x


def _multivariate(samples, name: str) -> np.ndarray:
    x = np.asarray(samples, dtype=float)
    if x.ndim == 1:
        x = x.reshape(-1, 1)
    if x.shape[0] == 0:
        raise ValueError(f'{name} is empty')
    return x


# =============================================================================
# WASSERSTEIN
# =============================================================================
def wasserstein_1d(a, b) -> float:
    """W1 between two empirical distributions."""
    a = _univariate(a, 'a')
    b = _univariate(b, 'b')
    return float(wasserstein_distance(a, b))


def marginal_wasserstein(a, b, aggregate: str = WASSERSTEIN_CONFIG['aggregate']) -> float:
    """
    W1 of every 1-D marginal, aggregated by mean or max. Distinct joint
    distributions can share all marginals, so this bounds nothing.
    """
    a = _multivariate(a, 'a')
    b = _multivariate(b, 'b')
    if a.shape[1] != b.shape[1]:
        raise ValueError(f'dimension mismatch: {a.shape[1]} vs {b.shape[1]}')
    per_dim = np.array([wasserstein_distance(a[:, i], b[:, i]) for i in range(a.shape[1])])
    if aggregate == 'mean':
        return float(per_dim.mean())
    if aggregate == 'max':
        return float(per_dim.max())
    raise ValueError(f"aggregate must be 'mean' or 'max', got {aggregate!r}")


# =============================================================================
# MMD
# =============================================================================
def median_bandwidth(a: np.ndarray, b: np.ndarray) -> float:
    """Median of the nonzero pooled pairwise distances (1.0 if all coincide)."""
    distances = pdist(np.vstack([a, b]))
    distances = distances[distances > 0]
    if distances.size == 0:
        return 1.0
    return float(np.median(distances))


def mmd2(a, b, kernel: Optional[KernelSpec] = None, estimator: str = MMD_CONFIG['estimator']) -> float:
    """
    Squared MMD with k(x, y) = exp(-|x - y|^2 / (2 h^2)).

    biased: V-statistic over all pairs; unbiased: U-statistic (diagonals dropped).
    Sums run over full kernel matrices in row-major order.
    """
    kernel = kernel or KernelSpec()
    a = _multivariate(a, 'a')
    b = _multivariate(b, 'b')
    if a.shape[1] != b.shape[1]:
        raise ValueError(f'dimension mismatch: {a.shape[1]} vs {b.shape[1]}')
    n, m = a.shape[0], b.shape[0]
    if estimator == 'unbiased' and (n < 2 or m < 2):
        raise ValueError('unbiased MMD needs at least 2 points per set')
    if estimator not in ('biased', 'unbiased'):
        raise ValueError(f"estimator must be 'biased' or 'unbiased', got {estimator!r}")

    h = median_bandwidth(a, b) if kernel.bandwidth == 'median' else float(kernel.bandwidth)
    gamma = 1.0 / (2.0 * h * h)
    k_aa = np.exp(-gamma * cdist(a, a, 'sqeuclidean'))
    k_bb = np.exp(-gamma * cdist(b, b, 'sqeuclidean'))
    k_ab = np.exp(-gamma * cdist(a, b, 'sqeuclidean'))

    if estimator == 'biased':
        return float(k_aa.mean() + k_bb.mean() - 2.0 * k_ab.mean())
    term_aa = (k_aa.sum() - np.trace(k_aa)) / (n * (n - 1))
    term_bb = (k_bb.sum() - np.trace(k_bb)) / (m * (m - 1))
    return float(term_aa + term_bb - 2.0 * k_ab.mean())


def mmd(a, b, kernel: Optional[KernelSpec] = None, estimator: str = 'biased') -> float:
    """Square root of the nonnegative-clamped squared MMD."""
    return float(np.sqrt(max(mmd2(a, b, kernel, estimator), 0.0)))


# =============================================================================
# KL (DISCRETIZED)
# =============================================================================
def _histogram(samples: np.ndarray, spec: DiscretizationSpec, name: str) -> np.ndarray:
    lows = np.array([lo for lo, _ in spec.ranges])
    highs = np.array([hi for _, hi in spec.ranges])
    inside = np.all((samples >= lows) & (samples <= highs), axis=1)
    if not np.any(inside):
        raise ValueError(f'all {name} samples lie outside the discretization range')
    clamped = np.clip(samples, lows, highs)
    counts, _ = np.histogramdd(clamped, bins=spec.bins, range=spec.ranges)
    return counts.ravel() / counts.sum()


def histogram_pair(p_samples, q_samples, spec: DiscretizationSpec) -> Dict:
    """Normalized p and smoothed q histograms on the shared grid."""
    p_samples = _multivariate(p_samples, 'p_samples')
    q_samples = _multivariate(q_samples, 'q_samples')
    if p_samples.shape[1] != len(spec.bins) or q_samples.shape[1] != len(spec.bins):
        raise ValueError('discretization dimension does not match the samples')
    p = _histogram(p_samples, spec, 'p')
    q_raw = _histogram(q_samples, spec, 'q')
    q = (q_raw + spec.epsilon) / (1.0 + spec.epsilon * q_raw.size)
    smoothed = int(np.sum((q_raw == 0) & (p > 0)))
    return {'p': p, 'q': q, 'smoothed_bins': smoothed}


def kl_discretized(p_samples, q_samples, spec: DiscretizationSpec) -> float:
    """KL(p || q) = sum p ln(p / q) over the shared histogram grid."""
    hist = histogram_pair(p_samples, q_samples, spec)
    if hist['smoothed_bins']:
        logger.warning(f"KL: {hist['smoothed_bins']} bins empty in q but not in p; value driven by epsilon")
    return float(max(entropy(hist['p'], hist['q']), 0.0))


# =============================================================================
# KOLMOGOROV-SMIRNOV
# =============================================================================
def ks_two_sample(a, b) -> Dict[str, float]:
    """
    D = sup |ECDF_a - ECDF_b| over the pooled sample points; p-value from the
    Kolmogorov distribution at lambda = D sqrt(nm / (n + m)).
    """
    a = np.sort(_univariate(a, 'a'))
    b = np.sort(_univariate(b, 'b'))
    n, m = a.size, b.size
    pooled = np.concatenate([a, b])
    cdf_a = np.searchsorted(a, pooled, side='right') / n
    cdf_b = np.searchsorted(b, pooled, side='right') / m
    statistic = float(np.max(np.abs(cdf_a - cdf_b)))
    lam = statistic * np.sqrt(n * m / (n + m))
    p_value = float(np.clip(kolmogorov(lam), 0.0, 1.0))
    return {'statistic': statistic, 'p_value': p_value}


# =============================================================================
# CROSS ENTROPY
# =============================================================================
def cross_entropy(log_q_at_ref: Sequence[float]) -> float:
    """-mean(log q) over the reference samples, in nats."""
    values = np.asarray(log_q_at_ref, dtype=float).reshape(-1)
    if values.size == 0:
        raise ValueError('cross entropy needs at least one log-density value')
    bad = np.flatnonzero(~np.isfinite(values))
    if bad.size:
        raise NonFiniteDensityError(int(bad[0]), float(values[bad[0]]))
    return float(-values.mean())
