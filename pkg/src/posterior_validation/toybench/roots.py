"""
MODEL: Complex Roots Toy Problem
================================
Forward problem w = z^n with n in {1, 2, 3}. Every w != 0 has exactly n
solutions z_k = R^(1/n) exp(i (Phi + 2 pi k) / n), k = 0..n-1, so the true
posterior of z given (w, n) is known in closed form.

z is drawn uniformly (by area) from an annulus around the origin.
"""

import cmath
import logging
import math
from dataclasses import dataclass
from typing import List, Mapping, Sequence, Tuple

import numpy as np

try:
    from ..config import TOYBENCH_CONFIG
except ImportError:
    from posterior_validation.config import TOYBENCH_CONFIG

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ToyInstance:
    n: int
    w: complex
    roots: Tuple[complex, ...]
    z: complex
    # index of the root that generated w
    reference_index: int

    @property
    def R(self) -> float:
        return abs(self.w)

    @property
    def Phi(self) -> float:
        return cmath.phase(self.w)


def enumerate_roots(n: int, w: complex) -> List[complex]:
    """The n solutions of z^n = w, k ascending."""
    if n < 1:
        raise ValueError(f'n must be >= 1, got {n}')
    w = complex(w)
    if w == 0:
        raise ValueError('w = 0 has a single repeated root; excluded')
    radius = abs(w) ** (1.0 / n)
    phase = cmath.phase(w)
    return [radius * cmath.exp(1j * (phase + 2.0 * math.pi * k) / n) for k in range(n)]


def forward_power(z: complex, n: int) -> complex:
    """z^n by repeated multiplication."""
    result = complex(1.0, 0.0)
    for _ in range(n):
        result *= z
    return result


def complex_power(center: np.ndarray, params: Mapping) -> np.ndarray:
    """Forward model on (re, im) vectors; params carry the exponent n."""
    center = np.asarray(center, dtype=float).reshape(-1)
    w = forward_power(complex(center[0], center[1]), int(params['n']))
    return np.array([w.real, w.imag])


def sample_instances(count: int, rng_seed: int = TOYBENCH_CONFIG['seed'],
                     orders: Sequence[int] = TOYBENCH_CONFIG['orders'],
                     inner: float = TOYBENCH_CONFIG['inner_radius'],
                     outer: float = TOYBENCH_CONFIG['outer_radius']) -> List[ToyInstance]:
    """
    Draw `count` instances: n uniform over `orders`, z area-uniform on the
    annulus inner <= |z| <= outer, w = z^n.
    """
    if count < 1:
        raise ValueError(f'count must be >= 1, got {count}')
    rng = np.random.default_rng(rng_seed)
    ns = rng.choice(np.asarray(orders, dtype=int), size=count)
    # inverse CDF of r^2 scaling on [inner^2, outer^2]
    radii = np.sqrt(rng.random(count) * (outer ** 2 - inner ** 2) + inner ** 2)
    angles = rng.random(count) * 2.0 * np.pi

    instances = []
    for n, r, theta in zip(ns, radii, angles):
        n = int(n)
        z = complex(r * math.cos(theta), r * math.sin(theta))
        w = forward_power(z, n)
        roots = tuple(enumerate_roots(n, w))
        reference_index = int(np.argmin([abs(root - z) for root in roots]))
        instances.append(ToyInstance(n=n, w=w, roots=roots, z=z, reference_index=reference_index))
    logger.info(f'Sampled {count} toy instances (seed {rng_seed})')
    return instances
