"""
MODEL: Hartigan Dip Test and UniDip Interval Search
===================================================
Input: sorted univariate samples
Output: dip statistic, Monte-Carlo p-value against the uniform null,
        modal interval, and the UniDip set of modal intervals

The dip is the sup-norm distance between the empirical CDF and the closest
unimodal CDF, computed from the greatest convex minorant and least concave
majorant of the ECDF. Values lie in [1/(2n), 0.5].
"""

import logging
from functools import lru_cache
from typing import Dict, List, Optional, Tuple

import numpy as np

try:
    from numba import njit
    NUMBA_AVAILABLE = True
except ImportError:
    NUMBA_AVAILABLE = False

    def njit(*args, **kwargs):
        """Fallback: run the kernel as plain Python"""
        if len(args) == 1 and callable(args[0]):
            return args[0]
        return lambda fn: fn

try:
    from ..config import UNIDIP_CONFIG
except ImportError:
    from posterior_validation.config import UNIDIP_CONFIG

logger = logging.getLogger(__name__)


@njit(cache=False)
def _dip_kernel(x):
    """
    Dip of sorted data x. Returns (dip, low, high) with the modal interval
    as 0-based indices into x. Arrays below are 1-based.
    """
    n = x.shape[0]
    xs = np.empty(n + 1)
    xs[0] = 0.0
    for i in range(n):
        xs[i + 1] = x[i]

    low = 1
    high = n
    dip = 1.0
    if n < 2 or xs[n] == xs[1]:
        return dip / (2.0 * n), low - 1, high - 1

    mn = np.zeros(n + 1, dtype=np.int64)
    mj = np.zeros(n + 1, dtype=np.int64)
    gcm = np.zeros(n + 1, dtype=np.int64)
    lcm = np.zeros(n + 1, dtype=np.int64)

    # convex minorant fit indices
    mn[1] = 1
    for j in range(2, n + 1):
        mn[j] = j - 1
        while True:
            mnj = mn[j]
            mnmnj = mn[mnj]
            if mnj == 1 or (xs[j] - xs[mnj]) * (mnj - mnmnj) < (xs[mnj] - xs[mnmnj]) * (j - mnj):
                break
            mn[j] = mnmnj

    # concave majorant fit indices
    mj[n] = n
    for k in range(n - 1, 0, -1):
        mj[k] = k + 1
        while True:
            mjk = mj[k]
            mjmjk = mj[mjk]
            if mjk == n or (xs[k] - xs[mjk]) * (mjk - mjmjk) < (xs[mjk] - xs[mjmjk]) * (k - mjk):
                break
            mj[k] = mjmjk

    while True:
        gcm[1] = high
        i = 1
        while gcm[i] > low:
            gcm[i + 1] = mn[gcm[i]]
            i += 1
        ig = i
        l_gcm = i
        ix = ig - 1

        lcm[1] = low
        i = 1
        while lcm[i] < high:
            lcm[i + 1] = mj[lcm[i]]
            i += 1
        ih = i
        l_lcm = i
        iv = 2

        d = 0.0
        if l_gcm != 2 or l_lcm != 2:
            while True:
                gcmix = gcm[ix]
                lcmiv = lcm[iv]
                if gcmix > lcmiv:
                    gcmi1 = gcm[ix + 1]
                    dx = (lcmiv - gcmi1 + 1) - \
                        (xs[lcmiv] - xs[gcmi1]) * (gcmix - gcmi1) / (xs[gcmix] - xs[gcmi1])
                    iv += 1
                    if dx >= d:
                        d = dx
                        ig = ix + 1
                        ih = iv - 1
                else:
                    lcmiv1 = lcm[iv - 1]
                    dx = (xs[gcmix] - xs[lcmiv1]) * (lcmiv - lcmiv1) / (xs[lcmiv] - xs[lcmiv1]) - \
                        (gcmix - lcmiv1 - 1)
                    ix -= 1
                    if dx >= d:
                        d = dx
                        ig = ix + 1
                        ih = iv
                if ix < 1:
                    ix = 1
                if iv > l_lcm:
                    iv = l_lcm
                if gcm[ix] == lcm[iv]:
                    break
        else:
            d = 1.0

        if d < dip:
            break

        dip_l = 0.0
        for j in range(ig, l_gcm):
            max_t = 1.0
            jb = gcm[j + 1]
            je = gcm[j]
            if je - jb > 1 and xs[je] != xs[jb]:
                c = (je - jb) / (xs[je] - xs[jb])
                for jj in range(jb, je + 1):
                    t = (jj - jb + 1) - (xs[jj] - xs[jb]) * c
                    if max_t < t:
                        max_t = t
            if dip_l < max_t:
                dip_l = max_t

        dip_u = 0.0
        for j in range(ih, l_lcm):
            max_t = 1.0
            jb = lcm[j]
            je = lcm[j + 1]
            if je - jb > 1 and xs[je] != xs[jb]:
                c = (je - jb) / (xs[je] - xs[jb])
                for jj in range(jb, je + 1):
                    t = (xs[jj] - xs[jb]) * c - (jj - jb - 1)
                    if max_t < t:
                        max_t = t
            if dip_u < max_t:
                dip_u = max_t

        dipnew = dip_l if dip_l > dip_u else dip_u
        if dip < dipnew:
            dip = dipnew

        if low == gcm[ig] and high == lcm[ih]:
            break
        low = gcm[ig]
        high = lcm[ih]

    return dip / (2.0 * n), low - 1, high - 1


@njit(cache=False)
def _null_dips(sorted_rows):
    out = np.empty(sorted_rows.shape[0])
    for i in range(sorted_rows.shape[0]):
        out[i] = _dip_kernel(sorted_rows[i])[0]
    return out


def _as_sorted(samples) -> np.ndarray:
    x = np.asarray(samples, dtype=float).reshape(-1)
    if x.size < 2:
        raise ValueError(f'dip needs at least 2 samples, got {x.size}')
    if np.any(np.diff(x) < 0):
        raise ValueError('dip samples must be sorted ascending')
    return np.ascontiguousarray(x)


def dip_statistic(samples) -> float:
    """Hartigan's dip of sorted samples (n >= 2)."""
    dip, _, _ = _dip_kernel(_as_sorted(samples))
    return float(dip)


@lru_cache(maxsize=256)
def null_dip_distribution(n: int, draws: int, seed: int) -> np.ndarray:
    """Sorted dips of `draws` uniform samples of size n."""
    rng = np.random.default_rng([seed, n])
    rows = np.sort(rng.random((draws, n)), axis=1)
    dips = np.sort(_null_dips(rows))
    dips.setflags(write=False)
    return dips


def dip_test(samples, draws: Optional[int] = None, seed: Optional[int] = None) -> Dict:
    """
    Dip test of unimodality.

    p_value = (#{null dips >= dip} + 1) / (draws + 1)
    """
    draws = UNIDIP_CONFIG['bootstrap_draws'] if draws is None else int(draws)
    seed = UNIDIP_CONFIG['seed'] if seed is None else int(seed)
    x = _as_sorted(samples)
    dip, low, high = _dip_kernel(x)
    null = null_dip_distribution(x.size, draws, seed)
    exceed = null.size - np.searchsorted(null, dip, side='left')
    p_value = (exceed + 1) / (draws + 1)
    return {
        'dip': float(dip),
        'p_value': float(p_value),
        'modal_interval': (int(low), int(high)),
    }


# =============================================================================
# UNIDIP
# =============================================================================
class UniDipSearch:
    """
    Recursive modal-interval search over sorted univariate data.

    Intervals are inclusive index pairs into the sorted array.
    """

    def __init__(self, alpha: float, draws: int, seed: int, min_window: Optional[int] = None):
        self.alpha = alpha
        self.draws = draws
        self.seed = seed
        self.min_window = UNIDIP_CONFIG['min_window'] if min_window is None else min_window
        self.tests_run = 0

    def _test(self, xs: np.ndarray, lo: int, hi: int) -> Dict:
        self.tests_run += 1
        return dip_test(xs[lo:hi + 1], self.draws, self.seed)

    def search(self, xs: np.ndarray) -> List[Tuple[int, int]]:
        intervals = self._search(xs, 0, xs.size - 1, is_modal=False)
        logger.debug(f'UniDip found {len(intervals)} intervals after {self.tests_run} dip tests')
        return sorted(intervals)

    def _search(self, xs: np.ndarray, lo: int, hi: int, is_modal: bool) -> List[Tuple[int, int]]:
        size = hi - lo + 1
        if size < self.min_window:
            # too few points to test
            return [(lo, hi)] if is_modal and size > 0 else []

        result = self._test(xs, lo, hi)
        mlo = lo + result['modal_interval'][0]
        mhi = lo + result['modal_interval'][1]
        covers_window = mlo == lo and mhi == hi

        if result['p_value'] >= self.alpha or covers_window:
            return [(lo, hi)] if is_modal else [(mlo, mhi)]

        modal = self._search(xs, mlo, mhi, is_modal=True)
        if not modal:
            return [(lo, hi)] if is_modal else [(mlo, mhi)]
        if is_modal and len(modal) == 1:
            return [(lo, hi)]

        first_lo = min(a for a, _ in modal)
        first_hi = min(b for _, b in modal)
        last_lo = max(a for a, _ in modal)
        last_hi = max(b for _, b in modal)

        left: List[Tuple[int, int]] = []
        if first_lo > lo and self._test(xs, lo, first_hi)['p_value'] < self.alpha:
            left = self._search(xs, lo, first_lo - 1, is_modal=False)

        right: List[Tuple[int, int]] = []
        if last_hi < hi and self._test(xs, last_lo, hi)['p_value'] < self.alpha:
            right = self._search(xs, last_hi + 1, hi, is_modal=False)

        return left + modal + right


def unidip_intervals(sorted_values, alpha: Optional[float] = None, draws: Optional[int] = None,
                     seed: Optional[int] = None) -> List[Tuple[int, int]]:
    """Modal intervals of sorted univariate data, as inclusive index pairs."""
    xs = np.ascontiguousarray(np.asarray(sorted_values, dtype=float).reshape(-1))
    if xs.size == 0:
        return []
    search = UniDipSearch(
        alpha=UNIDIP_CONFIG['alpha'] if alpha is None else alpha,
        draws=UNIDIP_CONFIG['bootstrap_draws'] if draws is None else draws,
        seed=UNIDIP_CONFIG['seed'] if seed is None else seed,
    )
    if xs.size < search.min_window:
        return [(0, xs.size - 1)]
    return search.search(xs)
