"""Sampling densities for the time and age of a test.

A subsample is described by a box ``[t_lo, t_hi] x [a_lo, a_hi]`` whose
indicator is smoothed by linear ramps of half-width ``edge`` around each
face.  Each coordinate factor is a trapezoid; it is the convolution of the
uniform law on ``[lo, hi]`` with the uniform law on ``[-edge, edge]``, so its
unnormalized area is ``hi - lo``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidGeometry


def _check_interval(lo, hi, edge):
    if not hi > lo:
        raise InvalidGeometry(f"empty interval [{lo}, {hi}]")
    if not 0.0 <= edge < (hi - lo) / 2.0:
        raise InvalidGeometry(f"edge {edge} must lie in [0, {(hi - lo) / 2.0})")


def trapezoid_eval(x, lo, hi, edge):
    """Unnormalized trapezoid weight: 0 outside the ramps, 1 on the plateau.

    At ``x == lo`` and ``x == hi`` the weight is 1/2, also for ``edge == 0``.
    """
    _check_interval(lo, hi, edge)
    return _trapezoid(np.asarray(x, dtype=float), lo, hi, edge)


def _trapezoid(x, lo, hi, edge):
    if edge == 0.0:
        inside = ((x > lo) & (x < hi)).astype(float)
        return np.where((x == lo) | (x == hi), 0.5, inside)
    with np.errstate(over="ignore"):
        # a very thin ramp overflows to +-inf, which the clip maps correctly
        rise = (x - lo) / (2.0 * edge) + 0.5
        fall = (hi - x) / (2.0 * edge) + 0.5
    return np.clip(np.minimum(rise, fall), 0.0, 1.0)


def _trapezoid_area(x, lo, hi, edge):
    """Area under the unnormalized trapezoid on ``(-inf, x]``."""
    x = np.asarray(x, dtype=float)
    if edge == 0.0:
        return np.clip(x - lo, 0.0, hi - lo)
    left = np.clip(x - lo + edge, 0.0, 2.0 * edge) ** 2 / (4.0 * edge)
    mid = np.clip(x - lo - edge, 0.0, hi - lo - 2.0 * edge)
    right_gap = np.clip(hi + edge - x, 0.0, 2.0 * edge)
    right = np.where(x > hi - edge, edge - right_gap ** 2 / (4.0 * edge), 0.0)
    return left + mid + right


def _trapezoid_quantile(s, lo, hi, edge):
    """Inverse of ``_trapezoid_area`` for ``s`` in ``[0, hi - lo]``."""
    if edge == 0.0:
        return lo + s
    upper = hi - lo - edge
    return np.where(
        s < edge,
        lo - edge + np.sqrt(4.0 * edge * np.maximum(s, 0.0)),
        np.where(
            s <= upper,
            lo + s,
            hi + edge - np.sqrt(4.0 * edge * np.maximum(hi - lo - s, 0.0)),
        ),
    )


@dataclass(frozen=True)
class SmoothedBox:
    """Edge-smoothed uniform density on a time x age rectangle.

    ``a_floor`` truncates the age factor from below (ages cannot be
    negative); the density is renormalized to unit mass on what remains.
    Leave it as ``None`` when the smoothed age support is already
    nonnegative.
    """

    t_range: tuple
    a_range: tuple
    edge_t: float = 0.0
    edge_a: float = 0.0
    a_floor: float | None = None
    norm: float = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        t_lo, t_hi = (float(x) for x in self.t_range)
        a_lo, a_hi = (float(x) for x in self.a_range)
        object.__setattr__(self, "t_range", (t_lo, t_hi))
        object.__setattr__(self, "a_range", (a_lo, a_hi))
        _check_interval(t_lo, t_hi, self.edge_t)
        _check_interval(a_lo, a_hi, self.edge_a)
        if self.a_floor is not None and not self.a_floor < a_hi - self.edge_a:
            raise InvalidGeometry("age floor cuts away the plateau")
        object.__setattr__(self, "norm", 1.0 / ((t_hi - t_lo) * self.age_mass))

    @classmethod
    def unit_cell(cls, year, age, edge=0.01):
        """One calendar year times one completed year of age."""
        return cls((year, year + 1.0), (age, age + 1.0), edge, edge,
                   a_floor=0.0 if age - edge < 0 else None)

    @property
    def t_support(self):
        return (self.t_range[0] - self.edge_t, self.t_range[1] + self.edge_t)

    @property
    def a_support(self):
        lo = self.a_range[0] - self.edge_a
        if self.a_floor is not None:
            lo = max(lo, self.a_floor)
        return (lo, self.a_range[1] + self.edge_a)

    @property
    def _a_cut(self):
        if self.a_floor is None:
            return 0.0
        return float(_trapezoid_area(self.a_floor, *self.a_range, self.edge_a))

    @property
    def age_mass(self):
        """Area of the (possibly truncated) unnormalized age factor."""
        a_lo, a_hi = self.a_range
        return (a_hi - a_lo) - self._a_cut

    def t_weight(self, t):
        return _trapezoid(np.asarray(t, dtype=float), *self.t_range, self.edge_t)

    def a_weight(self, a):
        a = np.asarray(a, dtype=float)
        w = _trapezoid(a, *self.a_range, self.edge_a)
        if self.a_floor is not None:
            w = np.where(a < self.a_floor, 0.0, w)
        return w

    def t_kinks(self):
        lo, hi = self.t_range
        e = self.edge_t
        return tuple(sorted({lo - e, lo + e, hi - e, hi + e}))

    def a_kinks(self):
        lo, hi = self.a_range
        e = self.edge_a
        pts = {lo - e, lo + e, hi - e, hi + e}
        if self.a_floor is not None:
            pts = {max(p, self.a_floor) for p in pts}
        return tuple(sorted(pts))


def box_density(box, t, a):
    """Normalized density of (test time, age at test) for one subsample."""
    return box.norm * box.t_weight(t) * box.a_weight(a)


def time_marginal(box, t):
    """Density of the test time alone; the age factor integrates out."""
    t_lo, t_hi = box.t_range
    return box.t_weight(t) / (t_hi - t_lo)


def age_conditional(box, a):
    """Density of age given time; the box is a product so it ignores time."""
    return box.a_weight(a) / box.age_mass


def time_marginal_sample(box, rng, n):
    t_lo, t_hi = box.t_range
    s = rng.random(n) * (t_hi - t_lo)
    return _trapezoid_quantile(s, t_lo, t_hi, box.edge_t)


def age_sample(box, rng, n):
    a_lo, a_hi = box.a_range
    cut = box._a_cut
    s = cut + rng.random(n) * (a_hi - a_lo - cut)
    return _trapezoid_quantile(s, a_lo, a_hi, box.edge_a)


def box_sample(box, rng, n):
    """Draw ``n`` independent (t, a) points from the box density.

    Returns two arrays of length ``n``.  Each coordinate uses inverse-CDF
    sampling of its trapezoid.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    t = time_marginal_sample(box, rng, n)
    a = age_sample(box, rng, n)
    return t, a


def time_cdf(box, t):
    t_lo, t_hi = box.t_range
    return _trapezoid_area(t, t_lo, t_hi, box.edge_t) / (t_hi - t_lo)


def age_cdf(box, a):
    a_lo, a_hi = box.a_range
    area = _trapezoid_area(a, a_lo, a_hi, box.edge_a) - box._a_cut
    return np.clip(area / box.age_mass, 0.0, 1.0)


def toy_design(n_boxes=6, age_width=0.05, rel_edge=0.01):
    """Boxes ``[j-1, j] x [0, age_width]`` for j = 1..n_boxes.

    Edges are ``rel_edge`` times each side length, which reproduces the
    +-0.01 ramps of a unit interval rescaled to the age window.
    """
    return [
        SmoothedBox((j - 1.0, float(j)), (0.0, age_width), rel_edge, rel_edge * age_width,
                    a_floor=0.0)
        for j in range(1, n_boxes + 1)
    ]
