"""Aggregated probabilities and (estimated) log-likelihoods.

Each tested individual in subsample ``j`` is susceptible with probability
``p_j = E_Psi[q]``.  The pseudo-marginal estimator replaces every ``p_j`` by
an independent Monte Carlo average per individual, which makes the product
over individuals an unbiased estimate of the binomial likelihood.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import logsumexp

from .._quadrature import GL_ORDER, adaptive, breakpoints_within, panel_rule
from ..cohort import CohortGrid, _cohort_value, cohort_sum_at, p_cohort_det
from ..design import _trapezoid_quantile
from ..errors import InvariantViolation

REFERENCE_TOL = 1e-10


@dataclass(frozen=True)
class Subsample:
    box: object
    N: int
    Y: int

    def __post_init__(self):
        if self.N < 1:
            raise InvariantViolation("a subsample needs at least one test")
        if not 0 <= self.Y <= self.N:
            raise InvariantViolation(f"need 0 <= Y <= N, got Y={self.Y}, N={self.N}")


@dataclass(frozen=True)
class SeroDataset:
    """Aggregated test outcomes; ``Y`` counts susceptible (seronegative) people."""

    subsamples: tuple

    def __post_init__(self):
        subs = tuple(self.subsamples)
        object.__setattr__(self, "subsamples", subs)
        boxes = [s.box for s in subs]
        if len(set(boxes)) != len(boxes):
            raise InvariantViolation("subsample boxes must be pairwise distinct")

    def __len__(self):
        return len(self.subsamples)

    def __iter__(self):
        return iter(self.subsamples)

    @property
    def boxes(self):
        return [s.box for s in self.subsamples]

    @property
    def n_tested(self):
        return sum(s.N for s in self.subsamples)

    def select(self, keep):
        return SeroDataset(tuple(s for s in self.subsamples if keep(s)))


@lru_cache(maxsize=4096)
def _reference_layout(box, age_kinks, level):
    t_edges = breakpoints_within(box.t_kinks(), *box.t_support)
    a_lo, a_hi = box.a_support
    a_edges = breakpoints_within((*box.a_kinks(), *age_kinks), a_lo, a_hi)
    t, wt = panel_rule(t_edges, level, GL_ORDER)
    a, wa = panel_rule(a_edges, level, GL_ORDER)
    wt = wt * box.t_weight(t)
    wa = wa * box.a_weight(a)
    tt, aa = np.meshgrid(t, a, indexing="ij")
    w = box.norm * np.outer(wt, wa)
    keep = w > 0
    return tt[keep], aa[keep], w[keep]


def _reference_value(foi, box, level):
    t, a, w = _reference_layout(box, tuple(foi.age_kinks), level)
    return float(np.dot(w, np.exp(-foi.hazard(t, a))))


def p_reference(foi, box, tol=REFERENCE_TOL, start_level=1):
    """``p = int Psi q dt da`` by tensor Gauss-Legendre on kink-aligned panels.

    Panels are refined by halving until two successive levels agree to
    ``tol``; raises ``QuadratureNonConvergence`` otherwise.
    """
    value, _ = adaptive(lambda lvl: _reference_value(foi, box, lvl), tol, start_level)
    return value


def _log_mean_exp(x, axis=-1):
    return logsumexp(x, axis=axis) - np.log(x.shape[axis])


def _draw(box_t, box_a, rng, shape):
    """Draw test times and ages for many individuals at once.

    ``box_t`` / ``box_a`` hold (lo, hi, edge) arrays per individual; rows of
    the output are individuals, columns the ``M`` replicate draws.
    """
    t_lo, t_hi, e_t = box_t
    a_lo, a_hi, e_a, a_cut = box_a
    u = rng.random((2, *shape))
    s_t = u[0] * (t_hi - t_lo)[:, None]
    s_a = a_cut[:, None] + u[1] * (a_hi - a_lo - a_cut)[:, None]
    t = _quantile_rows(s_t, t_lo, t_hi, e_t)
    a = _quantile_rows(s_a, a_lo, a_hi, e_a)
    return t, a


def _quantile_rows(s, lo, hi, edge):
    """Row-wise trapezoid quantiles; only the few ramp draws take the slow path."""
    x = s + lo[:, None]
    upper = (hi - lo - edge)[:, None]
    low_ramp = s < edge[:, None]
    high_ramp = s > upper
    if low_ramp.any():
        r, _ = np.nonzero(low_ramp)
        x[low_ramp] = lo[r] - edge[r] + np.sqrt(4.0 * edge[r] * s[low_ramp])
    if high_ramp.any():
        r, _ = np.nonzero(high_ramp)
        gap = np.maximum(hi[r] - lo[r] - s[high_ramp], 0.0)
        x[high_ramp] = hi[r] + edge[r] - np.sqrt(4.0 * edge[r] * gap)
    return x


def log_p_hat(foi, box, M, rng, size=None):
    """Log of ``(1/M) sum_m q(T_m, A_m)`` with ``(T_m, A_m)`` drawn from the box.

    The mean is taken with log-sum-exp over the exact exponents ``-H``.  With
    ``size`` given, returns that many independent replicates.
    """
    if M < 1:
        raise ValueError("M must be at least 1")
    n = 1 if size is None else int(size)
    layout = _IndividualLayout([box], [n])
    t, a = layout.draw(rng, M)
    out = _log_mean_exp(-foi.hazard(t, a))
    return float(out[0]) if size is None else out


class _IndividualLayout:
    """Per-individual box parameters, flattened for vectorized sampling."""

    def __init__(self, boxes, counts):
        boxes = list(boxes)
        counts = np.asarray(counts, dtype=int) if boxes else np.zeros(1, dtype=int)
        t_cols = [(*b.t_range, b.edge_t) for b in boxes] or [(0.0, 1.0, 0.0)]
        a_cols = [(*b.a_range, b.edge_a, b._a_cut) for b in boxes] or [(0.0, 1.0, 0.0, 0.0)]
        self.n = int(counts.sum())
        self.t = tuple(np.repeat(np.array(c, dtype=float), counts) for c in zip(*t_cols))
        self.a = tuple(np.repeat(np.array(c, dtype=float), counts) for c in zip(*a_cols))

    def __len__(self):
        return self.n

    def draw(self, rng, M):
        return _draw(self.t, self.a, rng, (self.n, M))


def _binomial_terms(log_p, success):
    """``log p`` for successes, ``log(1 - p)`` for failures; -inf if 1 - p <= 0."""
    with np.errstate(divide="ignore", invalid="ignore"):
        fail = np.log1p(-np.exp(log_p))
    fail = np.where(np.isnan(fail), -np.inf, fail)
    return np.where(success, log_p, fail)


@dataclass(frozen=True)
class Solver:
    """How the aggregated probabilities are obtained.

    ``exact``: pseudo-marginal Monte Carlo over the exact solution.
    ``reference``: deterministic quadrature of the exact solution.
    ``cohort``: deterministic quadrature of the cohort solution.
    ``cohort_mc``: pseudo-marginal Monte Carlo over the cohort solution.
    """

    kind: str = "exact"
    epsilon: float | None = None
    cohorts_per_box: int | None = None

    KINDS = ("exact", "reference", "cohort", "cohort_mc")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown solver {self.kind!r}")
        if self.kind.startswith("cohort") and (self.epsilon is None) == (self.cohorts_per_box is None):
            raise ValueError("cohort solvers need exactly one of epsilon or cohorts_per_box")

    @property
    def stochastic(self):
        return self.kind in ("exact", "cohort_mc")

    def grid(self, boxes):
        if self.epsilon is not None:
            return CohortGrid.covering(boxes, self.epsilon)
        return CohortGrid.per_box(boxes, self.cohorts_per_box)


class LikelihoodEstimator:
    """Log-likelihood (estimate) of a dataset as a function of the force.

    For stochastic solvers each call draws fresh, mutually independent
    estimators, one per tested individual, with ``M`` draws each.
    """

    def __init__(self, dataset, M=500, solver=None):
        self.dataset = dataset
        self.M = int(M)
        self.solver = solver or Solver()
        if self.M < 1:
            raise ValueError("M must be at least 1")
        success = []
        for sub in dataset:
            success.extend([True] * sub.Y + [False] * (sub.N - sub.Y))
        self._layout = _IndividualLayout(dataset.boxes, [s.N for s in dataset])
        self._success = np.array(success, dtype=bool)
        self._counts = [(s.Y, s.N - s.Y) for s in dataset]
        self._grid = None
        if self.solver.kind.startswith("cohort") and len(dataset):
            self._grid = self.solver.grid(dataset.boxes)
        self._levels = {}

    @property
    def grid(self):
        return self._grid

    def __call__(self, foi, rng=None):
        if not len(self.dataset):
            return 0.0
        kind = self.solver.kind
        if kind == "exact":
            t, a = self._layout.draw(rng, self.M)
            log_p = _log_mean_exp(-foi.hazard(t, a))
            return float(np.sum(_binomial_terms(log_p, self._success)))
        if kind == "cohort_mc":
            return self._cohort_mc(foi, rng)
        return self._deterministic(foi)

    def probabilities(self, foi):
        """Deterministic ``p_j`` for every subsample (reference or cohort)."""
        out = []
        for k, sub in enumerate(self.dataset):
            start = self._levels.get(k, 1)
            if self.solver.kind == "cohort":
                value, level = adaptive(
                    lambda lvl: _cohort_value(foi, self._grid, sub.box, lvl),
                    1e-12, start)
            else:
                value, level = adaptive(
                    lambda lvl: _reference_value(foi, sub.box, lvl), REFERENCE_TOL, start)
            # next call may start one level coarser than the converged one
            self._levels[k] = max(1, level // 2)
            out.append(value)
        return np.array(out)

    def _deterministic(self, foi):
        p = self.probabilities(foi)
        total = 0.0
        for pj, (y, f) in zip(p, self._counts):
            if y:
                total += y * np.log(pj) if pj > 0 else -np.inf
            if f:
                total += f * np.log1p(-pj) if pj < 1 else -np.inf
        return float(total)

    def _cohort_mc(self, foi, rng):
        # individuals of one box share a layout; draw their times together
        total = 0.0
        start = 0
        for sub in self.dataset:
            t = _time_draws(sub.box, rng, (sub.N, self.M))
            est = cohort_sum_at(foi, self._grid, sub.box, t).mean(axis=1)
            with np.errstate(divide="ignore", invalid="ignore"):
                log_p = np.log(est)
            total += float(np.sum(_binomial_terms(log_p, self._success[start:start + sub.N])))
            start += sub.N
        return total


def _time_draws(box, rng, shape):
    t_lo, t_hi = box.t_range
    s = rng.random(shape) * (t_hi - t_lo)
    return _trapezoid_quantile(s, t_lo, t_hi, box.edge_t)


def log_likelihood_hat(foi, dataset, M, rng, solver=None):
    """One draw of the log-likelihood estimator (see ``LikelihoodEstimator``)."""
    return LikelihoodEstimator(dataset, M, solver)(foi, rng)


def log_likelihood_exact(foi, dataset, solver=None):
    """Deterministic binomial log-likelihood from reference (or cohort) probabilities."""
    return LikelihoodEstimator(dataset, 1, solver or Solver("reference"))(foi)


__all__ = [
    "Subsample",
    "SeroDataset",
    "Solver",
    "LikelihoodEstimator",
    "p_reference",
    "p_cohort_det",
    "log_p_hat",
    "log_likelihood_hat",
    "log_likelihood_exact",
]
