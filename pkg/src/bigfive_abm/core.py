"""Domain types, the normalized objective, noisy perception and trait sampling.

Everything here is a small immutable value object or a pure function that
takes an explicit ``numpy.random.Generator``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from typing import Sequence

import numpy as np

TRAIT_NAMES = ("neuroticism", "extraversion", "openness", "agreeableness", "conscientiousness")
TRAIT_CODES = ("N", "E", "O", "A", "C")


@dataclass(frozen=True)
class TraitVector:
    """Per-timestep activation probability of each Big-Five trait."""

    neuroticism: float
    extraversion: float
    openness: float
    agreeableness: float
    conscientiousness: float

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not (0.0 <= v <= 1.0):
                raise ValueError(f"{f.name}={v!r} outside [0, 1]")

    @classmethod
    def from_sequence(cls, values: Sequence[float]) -> "TraitVector":
        if len(values) != 5:
            raise ValueError(f"expected 5 trait scores (N, E, O, A, C), got {len(values)}")
        return cls(*(float(v) for v in values))

    @classmethod
    def uniform(cls, value: float) -> "TraitVector":
        return cls(value, value, value, value, value)

    def as_array(self) -> np.ndarray:
        return np.array(
            [self.neuroticism, self.extraversion, self.openness, self.agreeableness, self.conscientiousness],
            dtype=float,
        )

    def replace(self, code: str, value: float) -> "TraitVector":
        """Copy with the trait named by its one-letter code set to ``value``."""
        vals = list(self.as_array())
        vals[TRAIT_CODES.index(code)] = value
        return TraitVector.from_sequence(vals)


@dataclass(frozen=True)
class SampledTraits:
    n_active: bool
    e_active: bool
    o_active: bool
    a_active: bool
    c_active: bool

    def as_array(self) -> np.ndarray:
        return np.array([self.n_active, self.e_active, self.o_active, self.a_active, self.c_active])


@dataclass(frozen=True)
class Bounds:
    min_corner: tuple[float, ...] = (-100.0, -100.0)
    max_corner: tuple[float, ...] = (100.0, 100.0)

    def __post_init__(self):
        object.__setattr__(self, "min_corner", tuple(float(v) for v in self.min_corner))
        object.__setattr__(self, "max_corner", tuple(float(v) for v in self.max_corner))
        if len(self.min_corner) != len(self.max_corner):
            raise ValueError("min_corner and max_corner differ in dimension")
        if not all(lo < hi for lo, hi in zip(self.min_corner, self.max_corner)):
            raise ValueError("min_corner must be strictly below max_corner in every component")

    @property
    def ndim(self) -> int:
        return len(self.min_corner)

    @property
    def lower(self) -> np.ndarray:
        return np.asarray(self.min_corner, dtype=float)

    @property
    def upper(self) -> np.ndarray:
        return np.asarray(self.max_corner, dtype=float)

    def clamp(self, pos) -> np.ndarray:
        return np.clip(np.asarray(pos, dtype=float), self.lower, self.upper)

    def contains(self, pos, tol: float = 0.0) -> bool:
        p = np.asarray(pos, dtype=float)
        return bool(np.all(p >= self.lower - tol) and np.all(p <= self.upper + tol))


@dataclass(frozen=True)
class ObjectiveSpec:
    kind: str = "parabola"
    bounds: Bounds = field(default_factory=Bounds)

    def __post_init__(self):
        if self.kind != "parabola":
            raise ValueError(f"unsupported objective kind {self.kind!r}")

    @property
    def radius(self) -> float:
        """Distance from the optimum (origin) to the farthest domain corner."""
        far = np.maximum(np.abs(self.bounds.lower), np.abs(self.bounds.upper))
        return float(math.sqrt(float(np.dot(far, far))))


@dataclass(frozen=True)
class NoiseModel:
    eta: float = 0.0

    def __post_init__(self):
        if not (0.0 <= self.eta < 1.0):
            raise ValueError(f"noise eta={self.eta!r} outside [0, 1)")


def evaluate_objective(pos, spec: ObjectiveSpec) -> float:
    """Negated distance to the origin, min-max normalized onto [0, 1] over the domain."""
    p = np.asarray(pos, dtype=float)
    if p.shape != (spec.bounds.ndim,):
        raise ValueError(f"position of shape {p.shape} does not match a {spec.bounds.ndim}-d domain")
    return 1.0 - math.sqrt(float(np.dot(p, p))) / spec.radius


def perceive_fitness(true_fitness: float, noise: NoiseModel, rng: np.random.Generator) -> float:
    if noise.eta == 0.0:
        return true_fitness
    u = noise.eta * (2.0 * rng.random() - 1.0)
    return true_fitness * (1.0 + u)


def sample_traits(traits: TraitVector, rng: np.random.Generator) -> SampledTraits:
    draws = rng.random(5)
    return SampledTraits(*(bool(d) for d in draws < traits.as_array()))
