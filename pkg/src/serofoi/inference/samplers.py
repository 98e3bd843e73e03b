"""Pseudo-marginal random-walk Metropolis and adaptive parallel tempering.

Both samplers keep the likelihood estimate of the current state attached to
it.  A new estimate is drawn only for a proposal; the retained one is never
refreshed, which is what makes the pseudo-marginal chain target the exact
posterior.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

TWO_PI = 2.0 * np.pi
SCALE_TARGET = 0.1
SWAP_TARGET = 0.234
ADAPT_EXPONENT = 0.6


@dataclass
class Target:
    """Unnormalized posterior pieces handed to the samplers.

    ``log_likelihood(theta, rng)`` returns a (possibly random) log-likelihood
    estimate; ``log_prior(theta)`` is deterministic and ``-inf`` off support.
    Coordinates flagged in ``angle_mask`` are wrapped into ``[0, 2 pi)``.
    """

    log_likelihood: object
    log_prior: object
    angle_mask: np.ndarray | None = None
    names: tuple = ()


@dataclass
class Chain:
    theta: np.ndarray
    log_lik: np.ndarray
    accepted: np.ndarray
    scale: np.ndarray
    names: tuple = ()
    seed: object = None
    interrupted: bool = False

    def __len__(self):
        return len(self.log_lik)

    @property
    def acceptance_rate(self):
        return float(np.mean(self.accepted))

    def component(self, name):
        return self.theta[:, self.names.index(name)]


@dataclass
class TemperingResult:
    """Per-level chains plus the adaptation and swap traces."""

    chains: list
    betas: np.ndarray
    swap_level: np.ndarray
    swap_prob: np.ndarray
    swap_accepted: np.ndarray
    seed: object = None
    names: tuple = field(default=())
    interrupted: bool = False

    @property
    def cold(self):
        return self.chains[0]

    def swap_rate(self, burn_in=0):
        return float(np.mean(self.swap_accepted[burn_in:]))

    def level_acceptance(self, burn_in=0):
        return np.array([float(np.mean(c.accepted[burn_in:])) for c in self.chains])


def _propose(theta, scale, shape, rng, angle_mask):
    prop = theta + scale * shape * rng.standard_normal(theta.size)
    if angle_mask is not None and angle_mask.any():
        prop[angle_mask] = np.mod(prop[angle_mask], TWO_PI)
    return prop


def pm_rwm(target, theta0, n_iter, sigma, rng, proposal_shape=None, seed=None):
    """Pseudo-marginal random-walk Metropolis with a fixed Gaussian step.

    Proposals are ``theta + sigma * shape * z`` with standard normal ``z``;
    ``shape`` defaults to ones, i.e. covariance ``sigma**2 * I``.
    """
    theta = np.array(theta0, dtype=float).ravel()
    d = theta.size
    shape = np.ones(d) if proposal_shape is None else np.asarray(proposal_shape, dtype=float)
    lp = target.log_prior(theta)
    if not np.isfinite(lp):
        raise ValueError("initial state has zero prior density")
    ll = target.log_likelihood(theta, rng)

    draws = np.empty((n_iter, d))
    lls = np.empty(n_iter)
    acc = np.zeros(n_iter, dtype=bool)
    done = 0
    try:
        for n in range(n_iter):
            prop = _propose(theta, sigma, shape, rng, target.angle_mask)
            lp_prop = target.log_prior(prop)
            u = rng.random()
            if np.isfinite(lp_prop):
                ll_prop = target.log_likelihood(prop, rng)
                log_ratio = (ll_prop + lp_prop) - (ll + lp)
                if np.log(u) < log_ratio:
                    theta, ll, lp = prop, ll_prop, lp_prop
                    acc[n] = True
            draws[n] = theta
            lls[n] = ll
            done = n + 1
    except KeyboardInterrupt:
        # keep the completed iterations so callers can flush them
        pass
    return Chain(draws[:done], lls[:done], acc[:done], np.full(done, float(sigma)),
                 tuple(target.names), seed, interrupted=done < n_iter)


def initial_ladder(levels):
    """Inverse temperatures with ``1 / beta_l = 2**(l - 1)``."""
    return 1.0 / 2.0 ** np.arange(levels)


def _betas_from_gaps(log_gaps):
    inv = np.concatenate([[1.0], 1.0 + np.cumsum(np.exp(log_gaps))])
    return 1.0 / inv


def apt(target, theta0, levels, n_iter, rng, sigma0=0.1, proposal_shape=None,
        betas0=None, adapt_scale=True, adapt_temperatures=True, seed=None):
    """Adaptive parallel tempering where only the likelihood is tempered.

    Every iteration runs one random-walk step per level against
    ``Lhat**beta * prior``, adapts that level's log step size towards
    acceptance 0.1, proposes one swap between a uniformly chosen adjacent
    pair (using the stored estimates, which move with the states), and
    adapts the log temperature gap of that pair towards swap acceptance
    0.234.  The adaptation step is ``n**-0.6`` throughout.
    """
    if levels < 2:
        raise ValueError("parallel tempering needs at least two levels")
    theta0 = np.asarray(theta0, dtype=float)
    if theta0.ndim == 1:
        theta0 = np.tile(theta0, (levels, 1))
    d = theta0.shape[1]
    shape = np.ones(d) if proposal_shape is None else np.asarray(proposal_shape, dtype=float)
    betas = initial_ladder(levels) if betas0 is None else np.asarray(betas0, dtype=float)
    log_gaps = np.log(np.diff(1.0 / betas))
    log_sigma = np.log(np.broadcast_to(np.asarray(sigma0, dtype=float), (levels,))).copy()

    thetas = theta0.copy()
    lps = np.array([target.log_prior(th) for th in thetas])
    if not np.all(np.isfinite(lps)):
        raise ValueError("initial states must have positive prior density")
    lls = np.array([target.log_likelihood(th, rng) for th in thetas])

    draws = np.empty((levels, n_iter, d))
    ll_trace = np.empty((levels, n_iter))
    acc = np.zeros((levels, n_iter), dtype=bool)
    sigma_trace = np.empty((levels, n_iter))
    beta_trace = np.empty((n_iter, levels))
    swap_level = np.empty(n_iter, dtype=int)
    swap_prob = np.empty(n_iter)
    swap_acc = np.zeros(n_iter, dtype=bool)

    done = 0
    try:
        for n in range(n_iter):
            step = (n + 1.0) ** -ADAPT_EXPONENT
            for lvl in range(levels):
                prop = _propose(thetas[lvl], np.exp(log_sigma[lvl]), shape, rng, target.angle_mask)
                lp_prop = target.log_prior(prop)
                u = rng.random()
                alpha = 0.0
                if np.isfinite(lp_prop):
                    ll_prop = target.log_likelihood(prop, rng)
                    log_ratio = betas[lvl] * (ll_prop - lls[lvl]) + lp_prop - lps[lvl]
                    alpha = float(np.exp(min(0.0, log_ratio))) if not np.isnan(log_ratio) else 0.0
                    if np.log(u) < log_ratio:
                        thetas[lvl], lls[lvl], lps[lvl] = prop, ll_prop, lp_prop
                        acc[lvl, n] = True
                if adapt_scale:
                    log_sigma[lvl] += step * (alpha - SCALE_TARGET)
                sigma_trace[lvl, n] = np.exp(log_sigma[lvl])

            k = int(rng.integers(levels - 1))
            log_eta = (betas[k] - betas[k + 1]) * (lls[k + 1] - lls[k])
            eta = float(np.exp(min(0.0, log_eta))) if not np.isnan(log_eta) else 0.0
            if rng.random() < eta:
                thetas[[k, k + 1]] = thetas[[k + 1, k]]
                lls[[k, k + 1]] = lls[[k + 1, k]]
                lps[[k, k + 1]] = lps[[k + 1, k]]
                swap_acc[n] = True
            swap_level[n] = k
            swap_prob[n] = eta
            if adapt_temperatures:
                log_gaps[k] += step * (eta - SWAP_TARGET)
                betas = _betas_from_gaps(log_gaps)

            draws[:, n] = thetas
            ll_trace[:, n] = lls
            beta_trace[n] = betas
            done = n + 1
    except KeyboardInterrupt:
        pass

    names = tuple(target.names)
    cut = slice(0, done)
    chains = [
        Chain(draws[lvl, cut], ll_trace[lvl, cut], acc[lvl, cut], sigma_trace[lvl, cut], names,
              seed, done < n_iter)
        for lvl in range(levels)
    ]
    return TemperingResult(chains, beta_trace[cut], swap_level[cut], swap_prob[cut],
                           swap_acc[cut], seed, names, done < n_iter)
