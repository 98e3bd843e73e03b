"""Bayesian force-of-infection inference from aggregated serological data."""

from .design import SmoothedBox, box_density, box_sample, time_marginal, toy_design
from .foi import AgeModulatedForce, AgeModulatedParams, ConstantForce, ToyForce, q_exact
from .models import ToyModel, VaricellaModel, make_target

__version__ = "0.1.0"
