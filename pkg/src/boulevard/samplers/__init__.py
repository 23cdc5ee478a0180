from __future__ import annotations

import logging
from typing import Dict, List, Type

from ..errors import ConfigurationError
from ..models.config import StructureMode
from .base import StructureSampler
from .greedy import FrozenGreedySampler, GreedySampler
from .randomized import RandomizedSampler

logger = logging.getLogger(__name__)

_SAMPLERS: Dict[str, Type[StructureSampler]] = {
    StructureMode.RANDOMIZED.value: RandomizedSampler,
    StructureMode.GRADIENT_ADAPTIVE.value: GreedySampler,
}


def register_sampler(name: str, sampler_cls: Type[StructureSampler]) -> None:
    _SAMPLERS[name] = sampler_cls
    logger.info(f"Structure sampler registered: {name}")


def get_sampler(mode: str) -> StructureSampler:
    key = mode.value if isinstance(mode, StructureMode) else str(mode)
    if key not in _SAMPLERS:
        raise ConfigurationError(f"Unknown structure mode: {key}. Available: {list(_SAMPLERS.keys())}")
    return _SAMPLERS[key]()


def list_samplers() -> List[str]:
    return list(_SAMPLERS.keys())


__all__ = [
    "FrozenGreedySampler",
    "GreedySampler",
    "RandomizedSampler",
    "StructureSampler",
    "get_sampler",
    "list_samplers",
    "register_sampler",
]
