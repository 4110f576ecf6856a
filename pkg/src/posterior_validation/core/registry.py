"""
Named forward models (for resimulation) and density models (for
cross-entropy when a case carries no log-densities).

A forward model maps (solution-space vector, problem params) to an
observable-space vector. A density model maps a ValidationCase to the
log-density of the prediction at each reference sample.
"""

import logging
from typing import Callable, Dict, Mapping, Optional

import numpy as np

from .exceptions import MissingForwardModelError

logger = logging.getLogger(__name__)

ForwardModel = Callable[[np.ndarray, Mapping], np.ndarray]
DensityModel = Callable[[object], np.ndarray]

FORWARD_MODELS: Dict[str, ForwardModel] = {}
DENSITY_MODELS: Dict[str, DensityModel] = {}


def register_forward_model(name: str, fn: ForwardModel) -> None:
    if name in FORWARD_MODELS and FORWARD_MODELS[name] is not fn:
        logger.warning(f"Replacing forward model '{name}'")
    FORWARD_MODELS[name] = fn


def get_forward_model(name: Optional[str]) -> ForwardModel:
    if name is None or name not in FORWARD_MODELS:
        known = ', '.join(sorted(FORWARD_MODELS)) or 'none'
        raise MissingForwardModelError(f"no forward model registered as '{name}' (registered: {known})")
    return FORWARD_MODELS[name]


def register_density_model(name: str, fn: DensityModel) -> None:
    if name in DENSITY_MODELS and DENSITY_MODELS[name] is not fn:
        logger.warning(f"Replacing density model '{name}'")
    DENSITY_MODELS[name] = fn


def has_density_model(name: Optional[str]) -> bool:
    return name is not None and name in DENSITY_MODELS


def get_density_model(name: str) -> DensityModel:
    if name not in DENSITY_MODELS:
        raise KeyError(f"no density model registered as '{name}'")
    return DENSITY_MODELS[name]
