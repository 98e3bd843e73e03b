"""Panelled Gauss-Legendre rules shared by the deterministic integrators."""

from functools import lru_cache

import numpy as np

from .errors import QuadratureNonConvergence

GL_ORDER = 10
MAX_LEVEL = 256


@lru_cache(maxsize=None)
def _gl(n):
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


def panel_rule(edges, level=1, n=GL_ORDER):
    """Nodes and weights on consecutive panels, each cut into ``level`` pieces.

    ``edges`` may be 2-D (one row of sorted edges per integrand); zero-width
    panels then simply get zero weight.  Returns arrays with the panel axis
    flattened into the last dimension.
    """
    edges = np.asarray(edges, dtype=float)
    if level > 1:
        frac = np.arange(level) / level
        lo = edges[..., :-1, None]
        width = np.diff(edges, axis=-1)[..., None]
        inner = (lo + width * frac).reshape(*edges.shape[:-1], -1)
        edges = np.concatenate([inner, edges[..., -1:]], axis=-1)
    x, w = _gl(n)
    lo = edges[..., :-1, None]
    half = 0.5 * np.diff(edges, axis=-1)[..., None]
    nodes = lo + half * (x + 1.0)
    weights = half * w
    shape = (*edges.shape[:-1], -1)
    return nodes.reshape(shape), weights.reshape(shape)


def breakpoints_within(points, lo, hi):
    inner = sorted({float(p) for p in points if lo < p < hi})
    return np.array([lo, *inner, hi])


def adaptive(evaluate, tol, start=1):
    """Double the panel subdivision until two successive levels agree.

    ``evaluate(level)`` returns the quadrature value at that level.  Returns
    ``(value, level)`` where ``level`` is the finer of the agreeing pair.
    """
    level = start
    prev = evaluate(level)
    while level < MAX_LEVEL:
        level *= 2
        cur = evaluate(level)
        if abs(cur - prev) <= tol:
            return cur, level
        prev = cur
    raise QuadratureNonConvergence(f"no convergence to {tol} by level {level}")
