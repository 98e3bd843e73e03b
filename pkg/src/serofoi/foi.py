"""Force of infection models and the exact susceptible fraction.

The susceptible fraction solves the transport equation
``dq/dt + dq/da = -lambda(t, a) q`` with ``q(t, 0) = 1``.  Along the
characteristic of an individual born at ``b = t - a`` the solution is
``q(t, a) = exp(-H(t, a))`` with ``H(t, a) = int_0^a lambda(b + s, s) ds``.
All forces here have a closed form for ``H``, so the solution is exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import AgeOutOfDomain, InvariantViolation

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class ToyParams:
    """Single frequency parameter of the toy force of infection."""

    gamma: float

    def to_array(self):
        return np.array([self.gamma], dtype=float)


@dataclass(frozen=True)
class AgeModulatedParams:
    """Age levels ``alphas`` and the periodic time profile ``gamma1..3``.

    The flat layout used by the samplers is ``(gamma1, gamma2, gamma3,
    alpha_1, ..., alpha_k)``.
    """

    alphas: tuple
    gamma1: float
    gamma2: float
    gamma3: float

    def __post_init__(self):
        alphas = tuple(float(x) for x in self.alphas)
        object.__setattr__(self, "alphas", alphas)
        if len(alphas) < 1:
            raise InvariantViolation("need at least one age level")
        if any(not x > 0 for x in alphas):
            raise InvariantViolation(f"age levels must be positive, got {alphas}")
        if not self.gamma1 > 0:
            raise InvariantViolation("gamma1 must be positive")
        if not self.gamma3 > 0:
            raise InvariantViolation("gamma3 must be positive")
        if not 0.0 <= self.gamma2 < TWO_PI:
            raise InvariantViolation("gamma2 must lie in [0, 2*pi)")

    @property
    def k(self):
        return len(self.alphas)

    def to_array(self):
        return np.array([self.gamma1, self.gamma2, self.gamma3, *self.alphas])

    @classmethod
    def from_array(cls, theta):
        theta = np.asarray(theta, dtype=float)
        return cls(tuple(theta[3:]), theta[0], theta[1], theta[2])


def _check_nonnegative_age(a):
    if np.any(np.asarray(a) < 0):
        raise AgeOutOfDomain("negative age")


@dataclass(frozen=True)
class ConstantForce:
    """Constant hazard; ``rate=0`` gives the degenerate no-infection model."""

    rate_value: float = 0.0
    age_kinks = ()

    def rate(self, t, a):
        _check_nonnegative_age(a)
        return np.full(np.broadcast(np.asarray(t), np.asarray(a)).shape, float(self.rate_value))

    def hazard(self, t, a):
        _check_nonnegative_age(a)
        t, a = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(a, dtype=float))
        return self.rate_value * a


@dataclass(frozen=True)
class ToyForce:
    """``lambda(t, a) = amplitude * (sin(gamma t) + offset)``, constant in age."""

    gamma: float
    amplitude: float = 20.0
    offset: float = 1.1
    age_kinks = ()

    def __post_init__(self):
        if not self.gamma > 0:
            raise InvariantViolation("gamma must be positive")
        if self.amplitude < 0 or self.offset < 1:
            raise InvariantViolation("toy force would become negative")

    @property
    def period(self):
        return TWO_PI / self.gamma

    def rate(self, t, a):
        _check_nonnegative_age(a)
        t, _ = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(a, dtype=float))
        return self.amplitude * (np.sin(self.gamma * t) + self.offset)

    def hazard(self, t, a):
        _check_nonnegative_age(a)
        t = np.asarray(t, dtype=float)
        a = np.asarray(a, dtype=float)
        g = self.gamma
        # cos(g t) - cos(g (t - a)) written as a product avoids cancellation at small a
        half = 0.5 * g * a
        return self.amplitude * (
            self.offset * a + 2.0 * np.sin(g * t - half) * np.sin(half) / g
        )


@dataclass(frozen=True)
class AgeModulatedForce:
    """Piecewise constant age profile times a shifted sine in calendar time.

    ``lambda(t, a) = alpha_i * (sin(gamma1 t + gamma2) + 1 + gamma3)`` for
    ``a`` in ``(a_{i-1}, a_i]``.  The first breakpoint must be 0 so that the
    hazard integral from birth is defined.
    """

    breakpoints: tuple
    params: AgeModulatedParams
    _cum_level: np.ndarray = field(init=False, repr=False, compare=False)
    _amp: np.ndarray = field(init=False, repr=False, compare=False)
    _shift: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        bps = tuple(float(x) for x in self.breakpoints)
        object.__setattr__(self, "breakpoints", bps)
        if len(bps) != self.params.k + 1:
            raise InvariantViolation(
                f"{self.params.k} age levels need {self.params.k + 1} breakpoints, got {len(bps)}"
            )
        if bps[0] != 0.0:
            raise InvariantViolation("first age breakpoint must be 0")
        if np.any(np.diff(bps) <= 0):
            raise InvariantViolation("age breakpoints must be strictly increasing")

        b = np.asarray(bps)
        alphas = np.asarray(self.params.alphas)
        g1 = self.params.gamma1
        # integral of the age profile up to each breakpoint
        cum = np.concatenate([[0.0], np.cumsum(alphas * np.diff(b))])
        # With phi = g1 (t - a) + g2, the oscillating part of every completed
        # segment i is alpha_i [cos(phi + g1 a_{i-1}) - cos(phi + g1 a_i)] / g1.
        # Their sum up to segment m - 1 is Re(exp(i phi) P_m) / g1, stored as
        # amplitude and phase shift of a single cosine.
        rot = np.exp(1j * g1 * b)
        terms = alphas * (rot[:-1] - rot[1:])
        prefix = np.concatenate([[0.0, 0.0], np.cumsum(terms)[:-1]])
        object.__setattr__(self, "_cum_level", cum)
        object.__setattr__(self, "_amp", np.abs(prefix))
        object.__setattr__(self, "_shift", np.angle(prefix))

    @property
    def age_kinks(self):
        return self.breakpoints

    @property
    def period(self):
        return TWO_PI / self.params.gamma1

    def _segment(self, a):
        a = np.asarray(a, dtype=float)
        if np.any(a < 0) or np.any(a > self.breakpoints[-1]):
            raise AgeOutOfDomain(
                f"age outside [{self.breakpoints[0]}, {self.breakpoints[-1]}]"
            )
        idx = np.searchsorted(self.breakpoints, a, side="left")
        return np.maximum(idx, 1)

    def age_level(self, a):
        return np.asarray(self.params.alphas)[self._segment(a) - 1]

    def time_profile(self, t):
        p = self.params
        return np.sin(p.gamma1 * np.asarray(t, dtype=float) + p.gamma2) + 1.0 + p.gamma3

    def rate(self, t, a):
        return self.age_level(a) * self.time_profile(t)

    def hazard(self, t, a):
        t = np.asarray(t, dtype=float)
        a = np.asarray(a, dtype=float)
        m = self._segment(a)
        p = self.params
        alphas = np.asarray(p.alphas)
        start = np.asarray(self.breakpoints)[m - 1]
        level = alphas[m - 1]
        linear = self._cum_level[m - 1] + level * (a - start)
        phase = p.gamma1 * (t - a) + p.gamma2
        # partial segment [a_{m-1}, a] in product form: no cancellation at small a
        half = 0.5 * p.gamma1 * (a - start)
        partial = 2.0 * level * np.sin(phase + p.gamma1 * start + half) * np.sin(half)
        done = self._amp[m] * np.cos(phase + self._shift[m])
        return (1.0 + p.gamma3) * linear + (done + partial) / p.gamma1


def foi_eval(foi, t, a):
    """Force of infection at calendar time ``t`` and age ``a``."""
    return foi.rate(t, a)


def cumulative_hazard(foi, t, a):
    """Hazard accumulated from birth along the characteristic through (t, a)."""
    return foi.hazard(t, a)


def log_q_exact(foi, t, a):
    return -foi.hazard(t, a)


def q_exact(foi, t, a):
    """Exact susceptible fraction ``exp(-H(t, a))``."""
    return np.exp(-foi.hazard(t, a))
