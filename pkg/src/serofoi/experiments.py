"""Experiment drivers behind the command line: simulate, fit, compare, predict."""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import analysis
from .config import SolverConfig, dumps
from .data import generate_synthetic, write_serodata
from .errors import DegenerateVariance, InvariantViolation, LagTooLarge
from .inference.likelihood import SeroDataset
from .inference.priors import Exponential, Uniform, UniformAngle
from .inference.samplers import apt, pm_rwm
from .models import make_target

ACF_LAGS = 100
PREDICTION_DRAWS = 500


def fmt(x):
    """17 significant digits so that floats survive a text round trip."""
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.17g}"


def write_csv(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) if not isinstance(v, str) else v for v in row])


def spawn_rngs(seed, n):
    """Independent generators split deterministically from one master seed."""
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(n)]


def typical_value(component):
    if isinstance(component, Exponential):
        return 1.0 / component.rate
    if isinstance(component, Uniform):
        return 0.5 * (component.lo + component.hi)
    if isinstance(component, UniformAngle):
        return np.pi
    raise TypeError(f"unsupported prior component {component!r}")


def initial_state(model, sampler_cfg):
    """Configured start, or the prior means (midpoints for uniform laws)."""
    if sampler_cfg.theta0:
        return np.array(sampler_cfg.theta0, dtype=float)
    return np.array([typical_value(c) for c in model.prior.components])


def simulate(config, rng):
    """Synthetic survey over the configured design with the configured truth."""
    model = config.build_model()
    boxes = config.design.boxes()
    foi = model.covering(boxes).force(np.array(config.synthetic.theta))
    return generate_synthetic(boxes, foi, config.synthetic.counts(boxes), rng)


def write_simulation(out, dataset, log):
    out = Path(out)
    write_serodata(out / "data.csv", dataset)
    boxes = dataset.boxes
    rows = (
        (int(boxes[j].t_range[0]), int(boxes[j].a_range[0]), t, a, q, bool(s))
        for j, t, a, q, s in zip(log.box_index, log.t, log.a, log.q, log.susceptible)
    )
    write_csv(out / "individuals.csv", ("year", "age", "t", "a", "q", "susceptible"), rows)


def sample_posterior(model, dataset, sampler_cfg, solver_cfg, rng, seed=None):
    """Run the configured sampler; returns a ``Chain`` or ``TemperingResult``."""
    target = make_target(model, dataset, sampler_cfg.M, solver_cfg.build())
    theta0 = initial_state(model, sampler_cfg)
    shape = sampler_cfg.proposal_shape or None
    if sampler_cfg.algorithm == "pm_rwm":
        return pm_rwm(target, theta0, sampler_cfg.iterations, sampler_cfg.sigma, rng,
                      proposal_shape=shape, seed=seed)
    return apt(target, theta0, sampler_cfg.levels, sampler_cfg.iterations, rng,
               sigma0=sampler_cfg.sigma, proposal_shape=shape, seed=seed)


def cold_chain(result):
    return getattr(result, "cold", result)


def write_chain(path, chain, thin=1):
    header = ("iteration", *chain.names, "log_lik", "accepted", "scale")
    idx = np.arange(0, len(chain), thin)
    rows = (
        (int(i) + 1, *chain.theta[i], chain.log_lik[i], bool(chain.accepted[i]), chain.scale[i])
        for i in idx
    )
    write_csv(path, header, rows)


def write_fit(out, result, burn_in, thin=1):
    """Chains, posterior summary, ACF table and sampler traces as CSV files."""
    out = Path(out)
    chains = getattr(result, "chains", [result])
    for lvl, chain in enumerate(chains):
        write_chain(out / f"chain_{lvl}.csv", chain, thin)
    cold = chains[0]
    burn = min(burn_in, max(len(cold) - 1, 0))
    if len(cold) == 0:
        return
    summ = analysis.summarize(cold, burn)
    cols = ("mean", "sd", *[f"q{q:g}" for q in analysis.QUANTILES])
    write_csv(out / "summary.csv", ("parameter", *cols),
              ((name, *[s[c] for c in cols]) for name, s in summ.items()))

    kept = cold.theta[burn:]
    lags = min(ACF_LAGS, len(kept) - 1)
    acfs = []
    for i in range(kept.shape[1]):
        try:
            acfs.append(analysis.acf(kept[:, i], lags))
        except (DegenerateVariance, LagTooLarge):
            acfs.append(np.full(lags + 1, np.nan))
    write_csv(out / "acf.csv", ("lag", *cold.names),
              ((k, *[a[k] for a in acfs]) for k in range(lags + 1)))

    header = ["iteration"]
    cols = []
    for lvl, chain in enumerate(chains):
        header += [f"scale_{lvl}", f"accepted_{lvl}"]
        cols += [chain.scale, chain.accepted]
    if hasattr(result, "betas"):
        header += [f"beta_{lvl}" for lvl in range(len(chains))]
        cols += list(result.betas.T)
        header += ["swap_level", "swap_prob", "swap_accepted"]
        cols += [result.swap_level, result.swap_prob, result.swap_accepted]
    write_csv(out / "diagnostics.csv", header,
              ((n + 1, *[c[n] for c in cols]) for n in range(len(cold))))


def run_fit(config, dataset, out=None, seed=None):
    """Fit ``dataset`` with the configured model and sampler; write outputs."""
    seed = config.sampler.seed if seed is None else seed
    model = config.build_model()
    rng = np.random.default_rng(seed)
    result = sample_posterior(model, dataset, config.sampler, config.solver, rng, seed)
    if out is not None:
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "config.toml").write_text(dumps(config.with_seed(seed)), encoding="utf-8")
        write_fit(out, result, config.sampler.burn_in, config.sampler.thin)
    return result


@dataclass
class ConvergenceRun:
    """One replicate: reference chain plus one chain per cohort count."""

    reference: object
    cohort: dict


def toy_convergence_runs(config, dataset, seed=None):
    """Reference and cohort-solver chains for every replicate of the study."""
    seed = config.sampler.seed if seed is None else seed
    conv = config.convergence
    model = config.build_model()
    counts = [2 ** k for k in range(conv.max_power + 1)]
    runs = []
    for rep, rep_seed in enumerate(np.random.SeedSequence(seed).spawn(conv.runs)):
        rngs = [np.random.default_rng(s) for s in rep_seed.spawn(len(counts) + 1)]
        ref_solver = SolverConfig(conv.reference_solver)
        sampler = config.sampler
        if conv.reference_solver == "reference":
            sampler = replace(sampler, M=1)
        ref = sample_posterior(model, dataset, sampler, ref_solver, rngs[0])
        cohort = {}
        for c, rng in zip(counts, rngs[1:]):
            solver = SolverConfig(conv.cohort_solver, cohorts_per_box=c)
            cohort[c] = sample_posterior(model, dataset, config.sampler, solver, rng)
        runs.append(ConvergenceRun(cold_chain(ref), {c: cold_chain(v) for c, v in cohort.items()}))
    return runs


def convergence_report(runs, burn_in, component=0):
    """Median over replicates of W1 and moment differences, per cohort count."""
    counts = sorted(runs[0].cohort)
    w1 = np.empty((len(runs), len(counts)))
    dm = np.empty_like(w1)
    ds = np.empty_like(w1)
    for r, run in enumerate(runs):
        ref = run.reference.theta[burn_in:, component]
        for k, c in enumerate(counts):
            other = run.cohort[c].theta[burn_in:, component]
            w1[r, k] = analysis.wasserstein_1d(ref, other)
            dm[r, k] = abs(other.mean() - ref.mean())
            ds[r, k] = abs(other.std(ddof=1) - ref.std(ddof=1))
    med = [np.median(x, axis=0) for x in (w1, dm, ds)]
    return analysis.ConvergenceReport.from_values(counts, *med), w1


def write_convergence(path, report):
    write_csv(path, ("cohorts_per_box", "w1", "order", "mean_diff", "sd_diff"),
              ((r.cohorts_per_box, r.w1, r.order, r.mean_diff, r.sd_diff) for r in report.rows))


def run_toy_convergence(config, out=None, seed=None):
    """Table of W1(reference posterior, cohort posterior) over the cohort ladder.

    The survey is simulated once from the configured truth with the sampler
    seed; replicate chains use seeds split from it.
    """
    seed = config.sampler.seed if seed is None else seed
    data_rng, chain_seed = spawn_rngs(seed, 2)[0], seed + 1
    dataset, log = simulate(config, data_rng)
    runs = toy_convergence_runs(config, dataset, chain_seed)
    report, per_run = convergence_report(runs, config.sampler.burn_in)
    if out is not None:
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "config.toml").write_text(dumps(config.with_seed(seed)), encoding="utf-8")
        write_simulation(out, dataset, log)
        write_convergence(out / "convergence.csv", report)
        counts = [r.cohorts_per_box for r in report.rows]
        write_csv(out / "convergence_runs.csv", ("run", "cohorts_per_box", "w1"),
                  ((r, c, per_run[r, k]) for r in range(len(runs)) for k, c in enumerate(counts)))
    return report, runs


@dataclass(frozen=True)
class HoldoutCell:
    year: int
    age: int
    n_tested: int
    observed: float
    band: analysis.PredictionBand

    @property
    def covered(self):
        return self.band.prevalence_q05 <= self.observed <= self.band.prevalence_q95


def run_holdout(config, dataset, holdout_year, out=None, seed=None, draws=PREDICTION_DRAWS):
    """Fit on all years but ``holdout_year`` and predict its prevalence by age.

    Prevalence is the seropositive fraction ``1 - p``; the band is the
    posterior 5%-95% range evaluated on ``draws`` evenly spaced post-burn-in
    draws of the cold chain.
    """
    def year(sub):
        return int(sub.box.t_range[0])

    held = [s for s in dataset if year(s) == holdout_year]
    if not held:
        raise InvariantViolation(f"year {holdout_year} is not in the dataset")
    train = SeroDataset(tuple(s for s in dataset if year(s) != holdout_year))
    result = run_fit(config, train, out, seed)
    chain = cold_chain(result)
    kept = chain.theta[config.sampler.burn_in:]
    pick = np.unique(np.linspace(0, len(kept) - 1, min(draws, len(kept))).round().astype(int))
    bands = analysis.predict_prevalence(kept[pick], config.build_model(), [s.box for s in held])
    cells = [
        HoldoutCell(year(s), int(s.box.a_range[0]), s.N, 1.0 - s.Y / s.N, b)
        for s, b in zip(held, bands)
    ]
    if out is not None:
        write_csv(Path(out) / "prediction.csv",
                  ("year", "age", "n_tested", "observed_prevalence", "median", "q05", "q95",
                   "covered"),
                  ((c.year, c.age, c.n_tested, c.observed, c.band.prevalence_median,
                    c.band.prevalence_q05, c.band.prevalence_q95, c.covered) for c in cells))
    return cells, result


__all__ = [
    "simulate",
    "run_fit",
    "run_toy_convergence",
    "run_holdout",
    "convergence_report",
]
