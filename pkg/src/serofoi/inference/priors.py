"""Independent priors on the flat parameter vector."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InvariantViolation

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class Exponential:
    """Exponential law in the rate parameterization (mean ``1 / rate``)."""

    rate: float

    def __post_init__(self):
        if not self.rate > 0:
            raise InvariantViolation("exponential rate must be positive")

    def logpdf(self, x):
        return np.log(self.rate) - self.rate * x if x >= 0 else -np.inf

    def sample(self, rng, size=None):
        return rng.exponential(1.0 / self.rate, size)

    def cdf(self, x):
        return 1.0 - np.exp(-self.rate * np.maximum(x, 0.0))


@dataclass(frozen=True)
class Uniform:
    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo < self.hi:
            raise InvariantViolation("uniform prior needs lo < hi")

    def logpdf(self, x):
        return -np.log(self.hi - self.lo) if self.lo <= x <= self.hi else -np.inf

    def sample(self, rng, size=None):
        return rng.uniform(self.lo, self.hi, size)

    def cdf(self, x):
        return np.clip((np.asarray(x) - self.lo) / (self.hi - self.lo), 0.0, 1.0)


@dataclass(frozen=True)
class UniformAngle:
    """Uniform on ``[0, 2 pi)``; proposals for this coordinate are wrapped."""

    def logpdf(self, x):
        return -np.log(TWO_PI) if 0.0 <= x < TWO_PI else -np.inf

    def sample(self, rng, size=None):
        return rng.uniform(0.0, TWO_PI, size)

    def cdf(self, x):
        return np.clip(np.asarray(x) / TWO_PI, 0.0, 1.0)


@dataclass(frozen=True)
class PriorSpec:
    components: tuple

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))

    def __len__(self):
        return len(self.components)

    @property
    def angle_mask(self):
        return np.array([isinstance(c, UniformAngle) for c in self.components])

    def sample(self, rng):
        return np.array([c.sample(rng) for c in self.components])


def log_prior(theta, spec):
    """Sum of component log-densities; ``-inf`` outside the support."""
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    if theta.shape != (len(spec),):
        raise ValueError(f"expected {len(spec)} parameters, got {theta.shape}")
    total = 0.0
    for x, comp in zip(theta, spec.components):
        total += comp.logpdf(x)
        if total == -np.inf:
            break
    return float(total)
