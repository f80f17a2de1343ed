#!/usr/bin/env python3
"""
Spiral family parameters
Validated, immutable parameter set for M logarithmic-spiral vortex sheets
r = e^{a(θ-θ_m)} carrying circulation g_m t^{2μ-1} e^{2a(θ-θ_m)}
"""

import cmath
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, Mapping, Sequence, Tuple

import numpy as np

from spiral_errors import (ConfigError, LengthMismatch, NonPositivePitch, OnSheet,
                           UnsortedPhases, ZeroCirculation)

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi
REQUIRED_FIELDS = ('a', 'mu', 'g', 'theta')


def growth_constant(a: float) -> complex:
    """A = -2ai/(a+i), evaluated as (-2a/(1+a²))(1+ai)"""
    if not (isinstance(a, (int, float)) and math.isfinite(a) and a > 0):
        raise NonPositivePitch(f"spiral pitch must be positive, got {a}")
    scale = -2.0 * a / (1.0 + a * a)
    return complex(scale, scale * a)


def shifted_growth_constant(a: float) -> complex:
    """B = A + 2i = -2/(a+i); exp(πA) = exp(πB) and the hyperbolic functions
    of πA follow from πB without the -2πi offset"""
    if not (isinstance(a, (int, float)) and math.isfinite(a) and a > 0):
        raise NonPositivePitch(f"spiral pitch must be positive, got {a}")
    denom = 1.0 + a * a
    return complex(-2.0 * a / denom, 2.0 / denom)


@dataclass(frozen=True)
class SpiralFamily:
    """Parameters (a, μ, g_m, θ_m); validated on construction, A cached"""

    a: float
    mu: float
    g: Tuple[float, ...]
    theta: Tuple[float, ...]
    A: complex = field(init=False, repr=False, compare=False)
    B: complex = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, 'g', tuple(float(v) for v in self.g))
        object.__setattr__(self, 'theta', tuple(float(v) for v in self.theta))
        object.__setattr__(self, 'A', growth_constant(self.a))
        object.__setattr__(self, 'B', shifted_growth_constant(self.a))

        if not math.isfinite(self.mu):
            raise ConfigError(f"mu must be finite, got {self.mu}")
        if len(self.g) != len(self.theta):
            raise LengthMismatch(f"g has {len(self.g)} entries but theta has {len(self.theta)}")
        if len(self.g) == 0:
            raise LengthMismatch("a family needs at least one branch")
        for m, g_m in enumerate(self.g):
            if not math.isfinite(g_m):
                raise ConfigError(f"g[{m}] must be finite, got {g_m}")
            if g_m == 0.0:
                raise ZeroCirculation(f"g[{m}] is zero")
        previous = None
        for m, theta_m in enumerate(self.theta):
            if not (0.0 <= theta_m < TWO_PI):
                raise UnsortedPhases(f"theta[{m}] = {theta_m} is outside [0, 2π)")
            if previous is not None and theta_m <= previous:
                raise UnsortedPhases(f"theta must be strictly increasing (theta[{m}] = {theta_m})")
            previous = theta_m

    @property
    def M(self) -> int:
        return len(self.g)

    @property
    def g_array(self) -> np.ndarray:
        return np.asarray(self.g, dtype=float)

    @property
    def theta_array(self) -> np.ndarray:
        return np.asarray(self.theta, dtype=float)

    @property
    def total_abs_circulation(self) -> float:
        return float(sum(abs(v) for v in self.g))

    @property
    def geometric_ratio(self) -> complex:
        """e^{2πA}, the ratio between successive loops"""
        return cmath.exp(TWO_PI * self.B)

    def replace(self, **changes) -> 'SpiralFamily':
        raw = family_to_dict(self)
        raw.update(changes)
        return validate_family(raw)


def validate_family(raw: Mapping[str, Any]) -> SpiralFamily:
    """Build a SpiralFamily from a raw parameter record"""
    if not isinstance(raw, Mapping):
        raise ConfigError("family config must be a JSON object")
    missing = [name for name in REQUIRED_FIELDS if name not in raw]
    if missing:
        raise ConfigError(f"family config is missing fields: {', '.join(missing)}")

    g = raw['g']
    theta = raw['theta']
    if not isinstance(g, Sequence) or not isinstance(theta, Sequence):
        raise ConfigError("g and theta must be lists")
    try:
        a = float(raw['a'])
        mu = float(raw['mu'])
        g_values = [float(v) for v in g]
        theta_values = [float(v) for v in theta]
    except (TypeError, ValueError) as e:
        raise ConfigError(f"family config has a non-numeric entry: {e}")

    family = SpiralFamily(a=a, mu=mu, g=tuple(g_values), theta=tuple(theta_values))
    logger.debug(f"Validated family a={family.a} mu={family.mu} M={family.M}")
    return family


def family_to_dict(family: SpiralFamily) -> Dict[str, Any]:
    return {
        'a': family.a,
        'mu': family.mu,
        'g': list(family.g),
        'theta': list(family.theta),
    }


def family_from_dict(raw: Mapping[str, Any]) -> SpiralFamily:
    return validate_family(raw)


def alexander_family(a: float, M: int, g: float, mu: float) -> SpiralFamily:
    """Symmetric family g_m = g, θ_m = 2πm/M (M = 1 is the Prandtl spiral)"""
    if M < 1:
        raise LengthMismatch(f"M must be at least 1, got {M}")
    theta = [TWO_PI * m / M for m in range(M)]
    return SpiralFamily(a=a, mu=mu, g=tuple([g] * M), theta=tuple(theta))


@dataclass(frozen=True)
class PolarPoint:
    """Plane point z = r e^{iθ} with θ kept unreduced"""

    r: float
    theta: float

    def __post_init__(self):
        if not (math.isfinite(self.r) and math.isfinite(self.theta)):
            raise ValueError(f"polar point must be finite, got r={self.r} theta={self.theta}")
        if self.r <= 0.0:
            raise OnSheet("the spiral centre z = 0 lies in the closure of every branch")

    @classmethod
    def from_complex(cls, z: complex) -> 'PolarPoint':
        return cls(abs(z), cmath.phase(z))

    @property
    def z(self) -> complex:
        return cmath.rect(self.r, self.theta)

    @property
    def log_r(self) -> float:
        return math.log(self.r)

    def shifted(self, turns: int) -> 'PolarPoint':
        return PolarPoint(self.r, self.theta + TWO_PI * turns)

    def scaled(self, factor: float) -> 'PolarPoint':
        return PolarPoint(self.r * factor, self.theta)
