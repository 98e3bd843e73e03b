"""Experiment configuration stored as TOML.

Top-level keys and sections::

    output = "runs/toy"          # output directory (overridden by --out)

    [model]                      # kind = "toy" | "varicella"
    [[model.prior]]              # optional, one table per parameter
    [design]                     # kind = "toy" | "grid"
    [synthetic]                  # truth and sample sizes for `simulate`
    [sampler]                    # algorithm = "pm_rwm" | "apt"
    [solver]                     # kind = "exact" | "reference" | "cohort" | "cohort_mc"
    [convergence]                # cohort ladder for `toy-convergence`

Every key is checked; unknown keys and wrong types raise ``ConfigError``
before any computation starts.  See ``README.md`` for the full key list.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import tomli
import tomli_w

from .design import SmoothedBox, toy_design
from .errors import ConfigError
from .inference.likelihood import Solver
from .inference.priors import Exponential, PriorSpec, Uniform, UniformAngle
from .models import VARICELLA_BREAKPOINTS, ToyModel, VaricellaModel


def _check_keys(table, allowed, where):
    if not isinstance(table, dict):
        raise ConfigError(f"[{where}] must be a table")
    unknown = sorted(set(table) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown key(s) in [{where}]: {', '.join(unknown)}")


def _number(value, where, integer=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where} must be a number, got {value!r}")
    if integer:
        if isinstance(value, float) and not value.is_integer():
            raise ConfigError(f"{where} must be an integer, got {value!r}")
        return int(value)
    return float(value)


def _numbers(values, where, integer=False):
    if not isinstance(values, list):
        raise ConfigError(f"{where} must be a list")
    return tuple(_number(v, f"{where}[{i}]", integer) for i, v in enumerate(values))


def _choice(value, options, where):
    if value not in options:
        raise ConfigError(f"{where} must be one of {', '.join(options)}, got {value!r}")
    return value


@dataclass(frozen=True)
class PriorConfig:
    kind: str
    rate: float | None = None
    lo: float | None = None
    hi: float | None = None

    KINDS = ("exponential", "uniform", "angle")

    def build(self):
        if self.kind == "exponential":
            return Exponential(self.rate)
        if self.kind == "uniform":
            return Uniform(self.lo, self.hi)
        return UniformAngle()

    @classmethod
    def parse(cls, table, where):
        _check_keys(table, ("kind", "rate", "lo", "hi"), where)
        kind = _choice(table.get("kind"), cls.KINDS, f"{where}.kind")
        need = {"exponential": ("rate",), "uniform": ("lo", "hi"), "angle": ()}[kind]
        extra = set(table) - {"kind", *need}
        if extra or any(k not in table for k in need):
            raise ConfigError(f"{where}: kind {kind!r} takes exactly {need or 'no parameters'}")
        vals = {k: _number(table[k], f"{where}.{k}") for k in need}
        try:
            cfg = cls(kind, **vals)
            cfg.build()
        except ValueError as exc:
            raise ConfigError(f"{where}: {exc}") from None
        return cfg

    def to_dict(self):
        return {k: v for k, v in dataclasses.asdict(self).items() if v is not None}


@dataclass(frozen=True)
class ModelConfig:
    kind: str = "toy"
    amplitude: float = 20.0
    offset: float = 1.1
    breakpoints: tuple = VARICELLA_BREAKPOINTS
    time_origin: float = 2000.0
    prior: tuple = ()

    KEYS = ("kind", "amplitude", "offset", "breakpoints", "time_origin", "prior")

    @classmethod
    def parse(cls, table):
        _check_keys(table, cls.KEYS, "model")
        kind = _choice(table.get("kind", "toy"), ("toy", "varicella"), "model.kind")
        kw = {"kind": kind}
        for key in ("amplitude", "offset", "time_origin"):
            if key in table:
                kw[key] = _number(table[key], f"model.{key}")
        if "breakpoints" in table:
            kw["breakpoints"] = _numbers(table["breakpoints"], "model.breakpoints")
        if "prior" in table:
            if not isinstance(table["prior"], list):
                raise ConfigError("model.prior must be an array of tables")
            kw["prior"] = tuple(
                PriorConfig.parse(t, f"model.prior[{i}]") for i, t in enumerate(table["prior"])
            )
        cfg = cls(**kw)
        try:
            cfg.build()
        except ValueError as exc:
            raise ConfigError(f"model: {exc}") from None
        return cfg

    def build(self):
        prior = PriorSpec(tuple(p.build() for p in self.prior)) if self.prior else None
        if self.kind == "toy":
            if prior is not None and len(prior) != 1:
                raise ConfigError("the toy model has exactly one parameter")
            model = ToyModel(self.amplitude, self.offset)
            return model if prior is None else dataclasses.replace(model, prior=prior)
        bps = self.breakpoints
        if len(bps) < 2 or bps[0] != 0.0 or np.any(np.diff(bps) <= 0):
            raise ConfigError("breakpoints must start at 0 and increase strictly")
        return VaricellaModel(bps, self.time_origin, prior)

    def to_dict(self):
        out = {"kind": self.kind}
        if self.kind == "toy":
            out.update(amplitude=self.amplitude, offset=self.offset)
        else:
            out.update(breakpoints=list(self.breakpoints), time_origin=self.time_origin)
        if self.prior:
            out["prior"] = [p.to_dict() for p in self.prior]
        return out


@dataclass(frozen=True)
class DesignConfig:
    """Observation boxes: the toy strip or a year x age grid of unit cells."""

    kind: str = "toy"
    n_boxes: int = 6
    age_width: float = 0.05
    rel_edge: float = 0.01
    years: tuple = (2000, 2004)
    ages: tuple = (1, 19)
    edge: float = 0.01

    KEYS = ("kind", "n_boxes", "age_width", "rel_edge", "years", "ages", "edge")

    @classmethod
    def parse(cls, table):
        _check_keys(table, cls.KEYS, "design")
        kind = _choice(table.get("kind", "toy"), ("toy", "grid"), "design.kind")
        kw = {"kind": kind}
        if "n_boxes" in table:
            kw["n_boxes"] = _number(table["n_boxes"], "design.n_boxes", integer=True)
        for key in ("age_width", "rel_edge", "edge"):
            if key in table:
                kw[key] = _number(table[key], f"design.{key}")
        for key in ("years", "ages"):
            if key in table:
                pair = _numbers(table[key], f"design.{key}", integer=True)
                if len(pair) != 2 or pair[1] < pair[0]:
                    raise ConfigError(f"design.{key} must be [first, last] with first <= last")
                kw[key] = pair
        cfg = cls(**kw)
        if cfg.n_boxes < 1 or not cfg.age_width > 0 or not 0 <= cfg.rel_edge < 0.5:
            raise ConfigError("design: need n_boxes >= 1, age_width > 0, 0 <= rel_edge < 0.5")
        if not 0 <= cfg.edge < 0.5 or cfg.ages[0] < 0:
            raise ConfigError("design: need 0 <= edge < 0.5 and nonnegative ages")
        return cfg

    def boxes(self):
        if self.kind == "toy":
            return toy_design(self.n_boxes, self.age_width, self.rel_edge)
        return [
            SmoothedBox.unit_cell(y, a, self.edge)
            for y in range(self.years[0], self.years[1] + 1)
            for a in range(self.ages[0], self.ages[1] + 1)
        ]

    def to_dict(self):
        if self.kind == "toy":
            return {"kind": "toy", "n_boxes": self.n_boxes, "age_width": self.age_width,
                    "rel_edge": self.rel_edge}
        return {"kind": "grid", "years": list(self.years), "ages": list(self.ages),
                "edge": self.edge}


@dataclass(frozen=True)
class SyntheticConfig:
    """True parameters and per-box sample sizes for simulated surveys.

    ``n_per_year`` overrides ``n_per_box`` for the listed calendar years.
    """

    theta: tuple = (np.pi,)
    n_per_box: int = 10
    n_per_year: dict = field(default_factory=dict)

    @classmethod
    def parse(cls, table):
        _check_keys(table, ("theta", "n_per_box", "n_per_year"), "synthetic")
        kw = {}
        if "theta" in table:
            kw["theta"] = _numbers(table["theta"], "synthetic.theta")
        if "n_per_box" in table:
            kw["n_per_box"] = _number(table["n_per_box"], "synthetic.n_per_box", integer=True)
        if "n_per_year" in table:
            sub = table["n_per_year"]
            if not isinstance(sub, dict):
                raise ConfigError("synthetic.n_per_year must be a table")
            try:
                kw["n_per_year"] = {
                    int(k): _number(v, f"synthetic.n_per_year.{k}", integer=True)
                    for k, v in sub.items()
                }
            except ValueError:
                raise ConfigError("synthetic.n_per_year keys must be years") from None
        cfg = cls(**kw)
        if cfg.n_per_box < 1 or any(n < 1 for n in cfg.n_per_year.values()):
            raise ConfigError("synthetic sample sizes must be at least 1")
        return cfg

    def counts(self, boxes):
        return [self.n_per_year.get(int(b.t_range[0]), self.n_per_box) for b in boxes]

    def to_dict(self):
        out = {"theta": list(self.theta), "n_per_box": self.n_per_box}
        if self.n_per_year:
            out["n_per_year"] = {str(k): v for k, v in sorted(self.n_per_year.items())}
        return out


@dataclass(frozen=True)
class SamplerConfig:
    algorithm: str = "pm_rwm"
    iterations: int = 10000
    burn_in: int = 1000
    M: int = 500
    sigma: float = 0.5
    levels: int = 5
    seed: int = 1
    proposal_shape: tuple = ()
    theta0: tuple = ()
    thin: int = 1

    KEYS = ("algorithm", "iterations", "burn_in", "M", "sigma", "levels", "seed",
            "proposal_shape", "theta0", "thin")

    @classmethod
    def parse(cls, table):
        _check_keys(table, cls.KEYS, "sampler")
        kw = {}
        if "algorithm" in table:
            kw["algorithm"] = _choice(table["algorithm"], ("pm_rwm", "apt"), "sampler.algorithm")
        for key in ("iterations", "burn_in", "M", "levels", "seed", "thin"):
            if key in table:
                kw[key] = _number(table[key], f"sampler.{key}", integer=True)
        if "sigma" in table:
            kw["sigma"] = _number(table["sigma"], "sampler.sigma")
        for key in ("proposal_shape", "theta0"):
            if key in table:
                kw[key] = _numbers(table[key], f"sampler.{key}")
        cfg = cls(**kw)
        if cfg.iterations < 1 or not 0 <= cfg.burn_in < cfg.iterations:
            raise ConfigError("sampler: need iterations >= 1 and 0 <= burn_in < iterations")
        if cfg.M < 1 or not cfg.sigma > 0 or cfg.levels < 2 or cfg.thin < 1 or cfg.seed < 0:
            raise ConfigError("sampler: need M >= 1, sigma > 0, levels >= 2, thin >= 1, seed >= 0")
        if any(not s > 0 for s in cfg.proposal_shape):
            raise ConfigError("sampler.proposal_shape entries must be positive")
        return cfg

    def to_dict(self):
        out = dataclasses.asdict(self)
        for key in ("proposal_shape", "theta0"):
            out[key] = list(out[key])
            if not out[key]:
                del out[key]
        return out


@dataclass(frozen=True)
class SolverConfig:
    kind: str = "exact"
    epsilon: float | None = None
    cohorts_per_box: int | None = None

    @classmethod
    def parse(cls, table):
        _check_keys(table, ("kind", "epsilon", "cohorts_per_box"), "solver")
        kw = {"kind": _choice(table.get("kind", "exact"), Solver.KINDS, "solver.kind")}
        if "epsilon" in table:
            kw["epsilon"] = _number(table["epsilon"], "solver.epsilon")
        if "cohorts_per_box" in table:
            kw["cohorts_per_box"] = _number(table["cohorts_per_box"], "solver.cohorts_per_box",
                                            integer=True)
        cfg = cls(**kw)
        try:
            cfg.build()
        except ValueError as exc:
            raise ConfigError(f"solver: {exc}") from None
        if (cfg.epsilon is not None and not cfg.epsilon > 0) or (
            cfg.cohorts_per_box is not None and cfg.cohorts_per_box < 1
        ):
            raise ConfigError("solver: epsilon and cohorts_per_box must be positive")
        return cfg

    def build(self):
        return Solver(self.kind, self.epsilon, self.cohorts_per_box)

    def to_dict(self):
        return {k: v for k, v in dataclasses.asdict(self).items() if v is not None}


@dataclass(frozen=True)
class ConvergenceConfig:
    """Cohort ladder ``2**k`` per box for ``k = 0..max_power``, ``runs`` replicates.

    ``cohort_solver`` is ``cohort`` (deterministic quadrature of the cohort
    solution) or ``cohort_mc`` (pseudo-marginal with sampled test times);
    ``reference_solver`` is ``exact`` or ``reference``.
    """

    max_power: int = 4
    runs: int = 5
    cohort_solver: str = "cohort"
    reference_solver: str = "exact"

    @classmethod
    def parse(cls, table):
        _check_keys(table, ("max_power", "runs", "cohort_solver", "reference_solver"),
                    "convergence")
        kw = {}
        for key in ("max_power", "runs"):
            if key in table:
                kw[key] = _number(table[key], f"convergence.{key}", integer=True)
        if "cohort_solver" in table:
            kw["cohort_solver"] = _choice(table["cohort_solver"], ("cohort", "cohort_mc"),
                                          "convergence.cohort_solver")
        if "reference_solver" in table:
            kw["reference_solver"] = _choice(table["reference_solver"], ("exact", "reference"),
                                             "convergence.reference_solver")
        cfg = cls(**kw)
        if cfg.max_power < 0 or cfg.runs < 1:
            raise ConfigError("convergence: need max_power >= 0 and runs >= 1")
        return cfg

    def to_dict(self):
        return dataclasses.asdict(self)


SECTIONS = {
    "model": ModelConfig,
    "design": DesignConfig,
    "synthetic": SyntheticConfig,
    "sampler": SamplerConfig,
    "solver": SolverConfig,
    "convergence": ConvergenceConfig,
}


@dataclass(frozen=True)
class ExperimentConfig:
    model: ModelConfig = ModelConfig()
    design: DesignConfig = DesignConfig()
    synthetic: SyntheticConfig = SyntheticConfig()
    sampler: SamplerConfig = SamplerConfig()
    solver: SolverConfig = SolverConfig()
    convergence: ConvergenceConfig = ConvergenceConfig()
    output: str = "out"

    @classmethod
    def from_dict(cls, data):
        _check_keys(data, (*SECTIONS, "output"), "top level")
        kw = {name: sec.parse(data.get(name, {})) for name, sec in SECTIONS.items()}
        if "output" in data:
            if not isinstance(data["output"], str):
                raise ConfigError("output must be a string")
            kw["output"] = data["output"]
        cfg = cls(**kw)
        n_params = len(cfg.build_model().names)
        if "synthetic" in data and "theta" in data["synthetic"] and len(cfg.synthetic.theta) != n_params:
            raise ConfigError(f"synthetic.theta needs {n_params} values")
        for key in ("proposal_shape", "theta0"):
            vals = getattr(cfg.sampler, key)
            if vals and len(vals) != n_params:
                raise ConfigError(f"sampler.{key} needs {n_params} values")
        if cfg.sampler.theta0 and not np.isfinite(cfg.build_model().log_prior(cfg.sampler.theta0)):
            raise ConfigError("sampler.theta0 lies outside the prior support")
        return cfg

    def to_dict(self):
        out = {name: getattr(self, name).to_dict() for name in SECTIONS}
        out["output"] = self.output
        return out

    def build_model(self):
        return self.model.build()

    def with_seed(self, seed):
        return dataclasses.replace(self, sampler=dataclasses.replace(self.sampler, seed=seed))

    def with_output(self, output):
        return dataclasses.replace(self, output=str(output))


def loads(text):
    try:
        data = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML: {exc}") from None
    return ExperimentConfig.from_dict(data)


def load_config(path):
    return loads(Path(path).read_text(encoding="utf-8"))


def dumps(config):
    return tomli_w.dumps(config.to_dict())


def save_config(config, path):
    Path(path).write_text(dumps(config), encoding="utf-8")
