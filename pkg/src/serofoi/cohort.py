"""Birth-cohort (Escalator Boxcar Train) approximation of the solution.

Birth time is cut into intervals of width ``epsilon`` centred on
``x_i = i * epsilon``.  Each cohort carries its initial mass ``epsilon`` along
its characteristic ``a = t - x_i`` and decays at the local force of
infection, so the population is a sum of point masses in age.  Aggregated
probabilities are then integrals over time of the box density evaluated at
the cohort ages.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ._quadrature import GL_ORDER, adaptive, panel_rule
from .design import time_marginal_sample
from .errors import GridTooNarrow, TimeBeforeBirth

COHORT_TOL = 1e-12


@dataclass(frozen=True)
class CohortGrid:
    """Birth times ``i * epsilon`` for ``i`` in ``[i_min, i_max]``."""

    epsilon: float
    i_min: int
    i_max: int

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.i_max < self.i_min:
            raise ValueError("empty cohort window")

    @classmethod
    def covering(cls, boxes, epsilon):
        """Smallest window holding every cohort whose age can fall in a box."""
        lo = min(b.t_support[0] - b.a_support[1] for b in boxes) - epsilon
        hi = max(b.t_support[1] - b.a_support[0] for b in boxes) + epsilon
        return cls(epsilon, math.floor(lo / epsilon), math.ceil(hi / epsilon))

    @classmethod
    def per_box(cls, boxes, cohorts_per_box):
        """Grid with ``cohorts_per_box`` birth times per unit of box duration."""
        width = boxes[0].t_range[1] - boxes[0].t_range[0]
        return cls.covering(boxes, width / cohorts_per_box)

    @property
    def birth_times(self):
        return np.arange(self.i_min, self.i_max + 1) * self.epsilon

    def indices_for(self, box):
        """Indices of cohorts that can be inside ``box``; checks coverage."""
        eps = self.epsilon
        need_lo = box.t_support[0] - box.a_support[1]
        need_hi = box.t_support[1] - box.a_support[0]
        i_lo = math.ceil(need_lo / eps - 1e-12)
        i_hi = math.floor(need_hi / eps + 1e-12)
        if i_hi < i_lo:
            return np.arange(0)
        if i_lo < self.i_min or i_hi > self.i_max:
            raise GridTooNarrow(
                f"box needs cohorts {i_lo}..{i_hi}, grid has {self.i_min}..{self.i_max}"
            )
        return np.arange(i_lo, i_hi + 1)


def cohort_mass(foi, x_i, epsilon, t):
    """Mass of the cohort born at ``x_i`` at time ``t``: ``eps * exp(-H)``."""
    t = np.asarray(t, dtype=float)
    if np.any(t < x_i):
        raise TimeBeforeBirth(f"cohort born at {x_i} queried at t < birth")
    return epsilon * np.exp(-foi.hazard(t, t - x_i))


@lru_cache(maxsize=4096)
def _cohort_panels(grid, box, age_kinks):
    """Per-cohort panel edges in time; rows padded with repeated endpoints."""
    idx = grid.indices_for(box)
    if idx.size == 0:
        return idx.astype(float), np.zeros((0, 2))
    x = idx * grid.epsilon
    a_lo, a_hi = box.a_support
    t_lo, t_hi = box.t_support
    start = np.maximum(t_lo, x + a_lo)
    stop = np.minimum(t_hi, x + a_hi)
    stop = np.maximum(stop, start)
    ages = [k for k in (*box.a_kinks(), *age_kinks) if a_lo < k < a_hi]
    cand = np.concatenate(
        [
            np.broadcast_to(np.asarray(box.t_kinks()), (x.size, len(box.t_kinks()))),
            x[:, None] + np.asarray(ages, dtype=float).reshape(1, -1),
        ],
        axis=1,
    )
    cand = np.clip(cand, start[:, None], stop[:, None])
    edges = np.sort(np.concatenate([start[:, None], cand, stop[:, None]], axis=1), axis=1)
    return x, edges


@lru_cache(maxsize=4096)
def _cohort_layout(grid, box, age_kinks, level):
    x, edges = _cohort_panels(grid, box, age_kinks)
    if x.size == 0:
        return np.zeros(0), np.zeros(0), np.zeros(0)
    t, w = panel_rule(edges, level, GL_ORDER)
    a = t - x[:, None]
    # ages at the support ends may round slightly outside; weight is 0 there
    a = np.clip(a, box.a_support[0], box.a_support[1])
    dens = box.norm * box.t_weight(t) * box.a_weight(a)
    weight = (grid.epsilon * w * dens).ravel()
    keep = weight > 0
    return t.ravel()[keep], a.ravel()[keep], weight[keep]


def _cohort_value(foi, grid, box, level):
    t, a, w = _cohort_layout(grid, box, tuple(foi.age_kinks), level)
    if w.size == 0:
        return 0.0
    return float(np.dot(w, np.exp(-foi.hazard(t, a))))


def p_cohort_det(foi, grid, box, tol=COHORT_TOL, start_level=1):
    """Aggregated probability of the cohort solution by panelled quadrature.

    Computes ``int sum_i Psi(t, t - x_i) m_i(t) dt`` with panel edges at every
    kink of the box density and at every age breakpoint of the force.
    """
    value, _ = adaptive(lambda lvl: _cohort_value(foi, grid, box, lvl), tol, start_level)
    return value


def _cohort_offsets(grid, box):
    lo, hi = box.a_support
    return int(math.floor((hi - lo) / grid.epsilon)) + 2


def cohort_sum_at(foi, grid, box, t):
    """``sum_i Psi(t, t - x_i) m_i(t) / marginal(t)`` for an array of times.

    The ratio reduces to the normalized age factor, so it stays finite
    wherever the time marginal is positive.
    """
    t = np.asarray(t, dtype=float)
    eps = grid.epsilon
    a_lo, a_hi = box.a_support
    first = np.ceil((t - a_hi) / eps)
    k = np.arange(_cohort_offsets(grid, box))
    i = first[..., None] + k
    age = t[..., None] - i * eps
    inside = (age >= a_lo) & (age <= a_hi)
    if inside.any():
        used = i[inside]
        if used.min() < grid.i_min or used.max() > grid.i_max:
            raise GridTooNarrow("cohort window does not cover the sampled times")
    safe = np.where(inside, age, a_lo)
    w = np.where(inside, box.a_weight(safe), 0.0) / box.age_mass
    mass = eps * np.exp(-foi.hazard(np.broadcast_to(t[..., None], safe.shape), safe))
    return np.sum(w * mass, axis=-1)


def p_cohort_mc(foi, grid, box, M, rng):
    """Unbiased Monte Carlo estimate of ``p_cohort_det`` from ``M`` test times.

    Times are drawn from the time marginal of the box and each term is divided
    by that marginal density (importance weight).
    """
    if M < 1:
        raise ValueError("M must be at least 1")
    t = time_marginal_sample(box, rng, M)
    return float(np.mean(cohort_sum_at(foi, grid, box, t)))
