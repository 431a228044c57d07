"""Physical goods: per-category ground truth, items and their drifting measurements."""

from __future__ import annotations

import random
from dataclasses import dataclass, field

FEATURE_DIM = 8
DEFAULT_TOLERANCE = 1.0
COUNTERFEIT = "counterfeit"

Vector = tuple[float, ...]


def _vec(values, dim: int = FEATURE_DIM) -> Vector:
    if isinstance(values, (int, float)):
        return (float(values),) * dim
    out = tuple(float(v) for v in values)
    if len(out) != dim:
        raise ValueError(f"expected {dim} features, got {len(out)}")
    return out


@dataclass(frozen=True)
class CategoryTruth:
    """Hidden generative model of a category. Tolerance is the full box width."""

    category: str
    mean: Vector
    tolerance: Vector
    drift_rate: Vector

    def __post_init__(self) -> None:
        if any(t <= 0 for t in self.tolerance):
            raise ValueError("tolerance must be positive")

    @classmethod
    def build(cls, category: str, mean, tolerance=DEFAULT_TOLERANCE, drift_rate=0.0) -> "CategoryTruth":
        return cls(category, _vec(mean), _vec(tolerance), _vec(drift_rate))


@dataclass(frozen=True)
class Counterfeit:
    """Adversary-chosen feature vector that imitates no category."""

    features: Vector

    @classmethod
    def offset_from(cls, truth: CategoryTruth, k: float) -> "Counterfeit":
        """Every feature shifted by ``k`` tolerances from the category mean."""
        return cls(tuple(m + k * t for m, t in zip(truth.mean, truth.tolerance)))


@dataclass
class PhysicalItem:
    item: str
    true_category: str
    features: Vector
    born_at: int
    drift_rate: Vector = field(default=(0.0,) * FEATURE_DIM)
    consumed: bool = False


@dataclass(frozen=True)
class CategoryFingerprint:
    category: str
    est_mean: Vector
    est_tolerance: Vector
    trained_at: int
    trained_by: str

    def to_json(self) -> dict:
        return {
            "category": self.category,
            "est_mean": list(self.est_mean),
            "est_tolerance": list(self.est_tolerance),
            "trained_at": self.trained_at,
            "trained_by": self.trained_by,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "CategoryFingerprint":
        return cls(doc["category"], tuple(doc["est_mean"]), tuple(doc["est_tolerance"]),
                   int(doc["trained_at"]), doc["trained_by"])


def spawn_item(item: str, source: CategoryTruth | Counterfeit, rng: random.Random, now: int) -> PhysicalItem:
    """Genuine items draw each feature uniformly from the open box around the mean."""
    if isinstance(source, Counterfeit):
        return PhysicalItem(item, COUNTERFEIT, tuple(source.features), now)
    features = tuple(m + (rng.random() - 0.5) * t for m, t in zip(source.mean, source.tolerance))
    return PhysicalItem(item, source.category, features, now, source.drift_rate)


def measure(item: PhysicalItem, now: int) -> Vector:
    """Features observed at time ``now``; drift grows linearly with age."""
    age = now - item.born_at
    return tuple(f + r * age for f, r in zip(item.features, item.drift_rate))


class GoodsWorld:
    """Container of the physical layer shared by both worlds."""

    def __init__(self) -> None:
        self.categories: dict[str, CategoryTruth] = {}
        self.items: dict[str, PhysicalItem] = {}

    def add_category(self, truth: CategoryTruth) -> None:
        self.categories[truth.category] = truth

    def spawn(self, item: str, source: CategoryTruth | Counterfeit, rng: random.Random, now: int) -> PhysicalItem:
        if item in self.items:
            raise ValueError(f"physical item {item} already exists")
        self.items[item] = spawn_item(item, source, rng, now)
        return self.items[item]

    def get(self, item: str) -> PhysicalItem | None:
        return self.items.get(item)
