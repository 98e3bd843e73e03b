"""Posterior diagnostics: W1 distance, autocorrelation, summaries, prediction."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateVariance, EmptySample, LagTooLarge, NonPositiveError
from .inference.likelihood import p_reference

QUANTILES = (2.5, 5.0, 50.0, 95.0, 97.5)


def wasserstein_1d(sample_a, sample_b):
    """W1 between two empirical measures: ``int |F_a - F_b| dx``.

    Works for unequal sample sizes by integrating the difference of the two
    step CDFs over the merged support.
    """
    a = np.sort(np.asarray(sample_a, dtype=float).ravel())
    b = np.sort(np.asarray(sample_b, dtype=float).ravel())
    if a.size == 0 or b.size == 0:
        raise EmptySample("both samples must be non-empty")
    merged = np.concatenate([a, b])
    merged.sort()
    widths = np.diff(merged)
    left = merged[:-1]
    cdf_a = np.searchsorted(a, left, side="right") / a.size
    cdf_b = np.searchsorted(b, left, side="right") / b.size
    return float(np.sum(np.abs(cdf_a - cdf_b) * widths))


def acf(values, max_lag):
    """Autocorrelations at lags ``0..max_lag`` with the biased normalization.

    ``r_k = sum_t (x_t - m)(x_{t+k} - m) / sum_t (x_t - m)^2``.
    """
    x = np.asarray(values, dtype=float).ravel()
    n = x.size
    if max_lag < 0 or max_lag >= n:
        raise LagTooLarge(f"max_lag {max_lag} needs a chain longer than {max_lag}")
    d = x - x.mean()
    denom = float(np.dot(d, d))
    if not denom > 0:
        raise DegenerateVariance("constant sequence has no autocorrelation")
    size = 1 << int(np.ceil(np.log2(2 * n)))
    spec = np.fft.rfft(d, size)
    cov = np.fft.irfft(spec * np.conj(spec), size)[: max_lag + 1]
    out = cov / denom
    out[0] = 1.0
    return out


def _draws(chain):
    theta = getattr(chain, "theta", chain)
    theta = np.asarray(theta, dtype=float)
    return theta[:, None] if theta.ndim == 1 else theta


def summarize(chain, burn_in=0, names=None):
    """Mean, standard deviation and quantiles of each component after burn-in.

    ``chain`` is a ``Chain`` or an array of shape (n, d).  Quantiles use
    linear interpolation between order statistics.  Returns a dict keyed by
    component name.
    """
    theta = _draws(chain)
    if not 0 <= burn_in < len(theta):
        raise ValueError("burn_in must be smaller than the chain length")
    names = names or getattr(chain, "names", None) or [f"theta_{i}" for i in range(theta.shape[1])]
    kept = theta[burn_in:]
    qs = np.percentile(kept, QUANTILES, axis=0)
    sd = kept.std(axis=0, ddof=1) if len(kept) > 1 else np.zeros(kept.shape[1])
    return {
        name: {
            "mean": float(kept[:, i].mean()),
            "sd": float(sd[i]),
            **{f"q{q:g}": float(qs[k, i]) for k, q in enumerate(QUANTILES)},
        }
        for i, name in enumerate(names)
    }


def convergence_order(errors):
    """``log2(err[k] / err[k+1])`` along a ladder of halving cohort widths."""
    e = np.asarray(errors, dtype=float)
    if e.size < 2:
        raise ValueError("need at least two error values")
    if not np.all(np.isfinite(e) & (e > 0)):
        raise NonPositiveError("errors must be finite and positive")
    return np.log2(e[:-1] / e[1:])


@dataclass(frozen=True)
class ConvergenceRow:
    cohorts_per_box: int
    w1: float
    order: float
    mean_diff: float
    sd_diff: float


@dataclass(frozen=True)
class ConvergenceReport:
    """W1 to the reference posterior for an increasing number of cohorts."""

    rows: tuple

    def __post_init__(self):
        rows = tuple(self.rows)
        object.__setattr__(self, "rows", rows)
        counts = [r.cohorts_per_box for r in rows]
        if counts != sorted(counts) or len(set(counts)) != len(counts):
            raise ValueError("rows must have strictly increasing cohort counts")
        if any(r.w1 < 0 for r in rows):
            raise ValueError("W1 cannot be negative")

    @classmethod
    def from_values(cls, counts, w1, mean_diff, sd_diff):
        w1 = np.asarray(w1, dtype=float)
        orders = np.full(len(w1), np.nan)
        if len(w1) > 1:
            with np.errstate(divide="ignore", invalid="ignore"):
                orders[1:] = np.log2(w1[:-1] / w1[1:])
        return cls(tuple(
            ConvergenceRow(int(c), float(w), float(o), float(m), float(s))
            for c, w, o, m, s in zip(counts, w1, orders, mean_diff, sd_diff)
        ))

    def __len__(self):
        return len(self.rows)

    @property
    def w1(self):
        return np.array([r.w1 for r in self.rows])

    @property
    def orders(self):
        return np.array([r.order for r in self.rows[1:]])


@dataclass(frozen=True)
class PredictionBand:
    box: object
    prevalence_median: float
    prevalence_q05: float
    prevalence_q95: float
    susceptible_median: float
    susceptible_q05: float
    susceptible_q95: float


def posterior_probabilities(draws, model, boxes, tol=1e-8):
    """``p_reference`` of every box under every posterior draw, shape (n, boxes)."""
    theta = _draws(draws)
    model = model.covering(boxes)
    out = np.empty((len(theta), len(boxes)))
    for i, th in enumerate(theta):
        foi = model.force(th)
        out[i] = [p_reference(foi, box, tol) for box in boxes]
    return out


def predict_prevalence(chain, model, boxes, burn_in=0, thin=1, tol=1e-8):
    """Posterior median and 90% band of prevalence ``1 - p`` in each box."""
    theta = _draws(chain)[burn_in::thin]
    if len(theta) == 0:
        raise EmptySample("no draws left after burn-in")
    p = posterior_probabilities(theta, model, boxes, tol)
    q05, med, q95 = np.percentile(p, [5.0, 50.0, 95.0], axis=0)
    return [
        PredictionBand(box, 1.0 - med[j], 1.0 - q95[j], 1.0 - q05[j], med[j], q05[j], q95[j])
        for j, box in enumerate(boxes)
    ]
