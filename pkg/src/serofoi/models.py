"""Parameterized model families: flat parameter vector to force of infection."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .foi import TWO_PI, AgeModulatedForce, AgeModulatedParams, ToyForce
from .inference.likelihood import LikelihoodEstimator
from .inference.priors import Exponential, PriorSpec, Uniform, UniformAngle, log_prior
from .inference.samplers import Target

VARICELLA_BREAKPOINTS = (0.0, 3.0, 7.0, 15.0, 20.0)


@dataclass(frozen=True)
class ToyModel:
    """``lambda = amplitude * (sin(gamma t) + offset)`` with unknown ``gamma``."""

    amplitude: float = 20.0
    offset: float = 1.1
    prior: PriorSpec = PriorSpec((Uniform(0.0, 5.0),))

    names = ("gamma",)

    def force(self, theta):
        return ToyForce(float(np.ravel(theta)[0]), self.amplitude, self.offset)

    def log_prior(self, theta):
        theta = np.ravel(theta)
        if not theta[0] > 0:
            return -np.inf
        return log_prior(theta, self.prior)

    def covering(self, boxes):
        return self


def varicella_prior(k):
    return PriorSpec(
        (Exponential(0.8), UniformAngle(), Exponential(1.0), *[Exponential(10.0)] * k)
    )


@dataclass(frozen=True)
class VaricellaModel:
    """Age-step force with a sinusoidal calendar-time profile.

    ``theta = (gamma1, gamma2, gamma3, alpha_1, ..., alpha_k)``.  The phase
    ``gamma2`` is measured from ``time_origin``, so calendar years can be used
    directly as times.  ``age_limit`` raises the last breakpoint so that the
    top age level also covers smoothed box edges beyond it.
    """

    breakpoints: tuple = VARICELLA_BREAKPOINTS
    time_origin: float = 2000.0
    prior: PriorSpec | None = None
    age_limit: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "breakpoints", tuple(float(b) for b in self.breakpoints))
        if self.prior is None:
            object.__setattr__(self, "prior", varicella_prior(self.k))
        if len(self.prior) != 3 + self.k:
            raise ValueError(f"prior has {len(self.prior)} components, expected {3 + self.k}")

    @property
    def k(self):
        return len(self.breakpoints) - 1

    @property
    def names(self):
        return ("gamma1", "gamma2", "gamma3", *[f"alpha_{i + 1}" for i in range(self.k)])

    @property
    def force_breakpoints(self):
        if self.age_limit is None or self.age_limit <= self.breakpoints[-1]:
            return self.breakpoints
        return (*self.breakpoints[:-1], float(self.age_limit))

    def params(self, theta):
        return AgeModulatedParams.from_array(theta)

    def force(self, theta):
        theta = np.array(theta, dtype=float)
        # sin(g1 (t - t0) + g2) = sin(g1 t + (g2 - g1 t0))
        theta[1] = np.mod(theta[1] - theta[0] * self.time_origin, TWO_PI)
        return AgeModulatedForce(self.force_breakpoints, AgeModulatedParams.from_array(theta))

    def log_prior(self, theta):
        theta = np.ravel(theta)
        if theta[0] <= 0 or theta[2] <= 0 or np.any(theta[3:] <= 0):
            return -np.inf
        return log_prior(theta, self.prior)

    def covering(self, boxes):
        """Copy whose top age level reaches the oldest smoothed age in ``boxes``."""
        top = max(b.a_support[1] for b in boxes) if boxes else None
        if top is None or top <= self.breakpoints[-1]:
            return self
        return replace(self, age_limit=top)


def make_target(model, dataset, M=500, solver=None):
    """Bundle the likelihood of ``dataset`` and the model prior for a sampler."""
    model = model.covering(dataset.boxes)
    estimator = LikelihoodEstimator(dataset, M, solver)

    def log_likelihood(theta, rng):
        return estimator(model.force(theta), rng)

    return Target(log_likelihood, model.log_prior, model.prior.angle_mask, tuple(model.names))
