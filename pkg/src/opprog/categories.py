"""The closed set of problem domain categories."""
from __future__ import annotations

from enum import Enum


class Category(str, Enum):
    GEOMETRY = "geometry"
    PHYSICS = "physics"
    PROBABILITY = "probability"
    GAIN_LOSS = "gain-loss"
    GENERAL = "general"
    OTHER = "other"

    def __str__(self) -> str:
        return self.value


ALL_CATEGORIES: tuple[Category, ...] = tuple(Category)
