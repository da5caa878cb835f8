"""Experiment definitions: configuration, tuning, estimation and figure data.

Each experiment maps an :class:`ExperimentConfig` to

- ``tune(config) -> TuningReport`` (meeting-time survey, k, m, m2, q), and
- ``replicator(config, report) -> f(index) -> UpsEstimate``,

so that replicate ``index`` depends only on (seed, index) and can run on
any worker.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ConfigError
from .estimators import (
    UpsEstimate,
    cv_estimate,
    fixed_tuning,
    mse_cv_estimate,
    replicate_rng,
    sample_split,
    ups_estimate,
)
from .mathutils import type7_quantile
from .models import (
    LinearCvProblem,
    LogisticCvProblem,
    PggKernel,
    RwmhConfig,
    RwmhKernel,
    laplace_fit,
    laplace_rwmh_config,
    load_leukemia,
    load_mammals,
    load_stackloss,
    rwmh_kernel,
    synthetic_logistic,
)
from .models.linear import LinregGibbsKernel
from .paths import doublewell_path, normal_translation_path
from .tuning import (
    LambdaGrid,
    TuningReport,
    _child,
    _rng_for,
    build_proposal,
    choose_k,
    choose_m,
    estimate_m2,
    survey_meetings,
)
from .unbiased import DEFAULT_MAX_ITERATIONS, EstimatorConfig, meeting_time

EXPERIMENTS = (
    "normal", "doublewell", "logistic-evidence", "logistic-cv",
    "leukemia", "mammal-mse", "mammal-logscore", "stackloss",
)

LOG2 = math.log(2.0)

# per-experiment defaults that differ from the dataclass defaults
_DEFAULTS = {
    "normal": dict(survey_replicates=100, m2_replicates=100, replicates=5000, adapt=True),
    "doublewell": dict(survey_replicates=1000, m2_replicates=100, replicates=1000, k_multiplier=2.0),
    "logistic-evidence": dict(survey_replicates=1000, m2_replicates=100, replicates=1000, path="covariate"),
    "logistic-cv": dict(survey_replicates=1000, replicates=1000, path="covariate"),
    "leukemia": dict(survey_replicates=1000, replicates=10000, k=100, m=500),
    "mammal-mse": dict(survey_replicates=1000, replicates=1000, k=10, m=25),
    "mammal-logscore": dict(survey_replicates=1000, replicates=1000, k=10, m=25),
    "stackloss": dict(survey_replicates=1000, replicates=10000, k=10, m=25),
}


@dataclass
class ExperimentConfig:
    """Flat set of knobs; every field is also a CLI flag and a config-file key.

    ``k``/``m`` of 0 mean "choose from the meeting-time survey"; for the
    Laplace evidence path and the CV experiments m defaults to 5k.
    """

    experiment: str
    grid: str = "equispaced"
    L: int = 10
    survey_replicates: int = 100
    m2_replicates: int = 100
    replicates: int = 1000
    k_quantile: float = 0.99
    k_multiplier: float = 1.0
    k: int = 0
    m: int = 0
    path: str = "default"
    adapt: bool = False
    seed: int = 1
    data_seed: int = 1
    max_iterations: int = DEFAULT_MAX_ITERATIONS
    workers: int = 1
    out: str = "ups-out"

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}; choose from {', '.join(EXPERIMENTS)}")
        for name in ("L", "survey_replicates", "m2_replicates", "replicates", "workers", "max_iterations"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be at least 1")
        if self.k < 0 or self.m < 0 or (self.m and self.m < self.k):
            raise ConfigError("need 0 <= k <= m")
        if not 0.0 < self.k_quantile < 1.0 or self.k_multiplier <= 0:
            raise ConfigError("need 0 < k_quantile < 1 and k_multiplier > 0")
        if self.grid not in ("equispaced", "log"):
            raise ConfigError(f"unknown grid kind {self.grid!r}")

    @classmethod
    def for_experiment(cls, experiment: str, **overrides) -> "ExperimentConfig":
        if experiment not in _DEFAULTS:
            raise ConfigError(f"unknown experiment {experiment!r}; choose from {', '.join(EXPERIMENTS)}")
        values = {**_DEFAULTS[experiment], **{k: v for k, v in overrides.items() if v is not None}}
        return cls(experiment=experiment, **values)

    # flat "key = value" text, one per line; '#' starts a comment
    def to_text(self) -> str:
        return "".join(f"{f.name} = {getattr(self, f.name)}\n" for f in dataclasses.fields(self))

    @classmethod
    def parse_values(cls, text: str) -> dict:
        types = {f.name: f.type for f in dataclasses.fields(cls)}
        values = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"line {lineno}: expected 'key = value'")
            key, val = (s.strip() for s in line.split("=", 1))
            key = key.replace("-", "_")
            if key not in types:
                raise ConfigError(f"line {lineno}: unknown key {key!r}")
            values[key] = coerce(types[key], val)
        return values

    @classmethod
    def from_text(cls, text: str, **overrides) -> "ExperimentConfig":
        values = cls.parse_values(text)
        values.update({k: v for k, v in overrides.items() if v is not None})
        if "experiment" not in values:
            raise ConfigError("config is missing 'experiment'")
        return cls.for_experiment(values.pop("experiment"), **values)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def coerce(type_name, val: str):
    type_name = type_name if isinstance(type_name, str) else type_name.__name__
    try:
        if type_name == "int":
            return int(val)
        if type_name == "float":
            return float(val)
        if type_name == "bool":
            low = val.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(val)
    except ValueError as exc:
        raise ConfigError(f"cannot read {val!r} as {type_name}") from exc
    return val


@dataclass
class Estimand:
    """How raw UpsEstimates map to the reported quantity."""

    name: str
    sign: float = 1.0
    offset: float | None = None  # None keeps the path's own offset

    def apply(self, est: UpsEstimate) -> UpsEstimate:
        est.sign = self.sign
        if self.offset is not None:
            est.offset = self.offset
        return est


@dataclass
class Experiment:
    name: str
    tune: Callable[[ExperimentConfig], TuningReport]
    replicator: Callable[[ExperimentConfig, TuningReport], Callable[[int], UpsEstimate]]
    estimand: Callable[[ExperimentConfig], str]
    figures: tuple = field(default_factory=tuple)


def _grid(cfg: ExperimentConfig) -> LambdaGrid:
    return LambdaGrid.make(cfg.grid, cfg.L)


def _survey_then_tune(cfg, factory, path, grid):
    """Survey -> k, m -> m2 -> q with the config's quantile and multiplier."""
    ss = np.random.SeedSequence(cfg.seed)
    taus = survey_meetings(factory, grid, cfg.survey_replicates, _child(ss, 0), cfg.max_iterations)
    ks = np.array([choose_k(t, cfg.k_quantile, cfg.k_multiplier) for t in taus])
    mean_taus = np.array([t.mean() for t in taus])
    ms = choose_m(ks, mean_taus)
    return taus, ks, mean_taus, ms, ss


def _finish(grid, taus, ks, mean_taus, ms, sqrt_m2, cfg, extra=None):
    q = build_proposal(grid, sqrt_m2)
    return TuningReport(
        grid=grid.points, kind=grid.kind, k=ks, m=ms, tau_mean=mean_taus,
        tau_q99=[type7_quantile(t, 0.99) for t in taus], sqrt_m2=sqrt_m2, masses=q.masses,
        meeting_times=taus, m2_replicates=cfg.m2_replicates, survey_replicates=cfg.survey_replicates,
        extra=extra or {},
    )


def _standard_replicator(path, factory, estimand: Estimand):
    def build(cfg: ExperimentConfig, report: TuningReport):
        q = report.proposal

        def one(index: int) -> UpsEstimate:
            est = ups_estimate(path, q, report, factory(report), replicate_rng(cfg.seed, index),
                               cfg.max_iterations)
            est.replicate = index
            return estimand.apply(est)

        return one

    return build


# ---------------------------------------------------------------- normal toy

NORMAL_SHIFT = 4.0
NORMAL_INIT = (-1.0, 2.0)
NORMAL_PROPOSAL_SD = 1.0


def _normal_cfg(init_mean=NORMAL_INIT[0], init_sd=NORMAL_INIT[1], prop_sd=NORMAL_PROPOSAL_SD):
    return RwmhConfig.isotropic(prop_sd, [init_mean], init_sd)


def _normal_factory(report: TuningReport | None):
    path = normal_translation_path(NORMAL_SHIFT)
    settings = None if report is None else report.extra.get("kernel_settings")
    grid = None if report is None else report.lambda_grid

    def factory(lam):
        if settings is None:
            return rwmh_kernel(path, lam, _normal_cfg())
        mean, sd, prop = settings[grid.nearest_index(lam)]
        return rwmh_kernel(path, lam, _normal_cfg(mean, sd, prop))

    return factory


def _tune_normal(cfg: ExperimentConfig) -> TuningReport:
    path = normal_translation_path(NORMAL_SHIFT)
    grid = _grid(cfg)
    base = _normal_factory(None)
    taus, ks, mean_taus, ms, ss = _survey_then_tune(cfg, base, path, grid)
    extra = {}
    factory = base
    if cfg.adapt:
        # moments of pi_lambda from m2_replicates unbiased estimators each;
        # k and m are kept from the first survey
        settings = []
        for l, lam in enumerate(grid.points):
            pair = base(float(lam))
            mom = np.array([
                per_lambda_estimate_vec(pair, lambda x: np.column_stack([x[:, 0], x[:, 0] ** 2]),
                                        ks[l], ms[l], _rng_for(ss, 2, l, r), cfg.max_iterations)
                for r in range(cfg.m2_replicates)
            ]).mean(axis=0)
            var = max(mom[1] - mom[0] ** 2, 1e-8)
            settings.append([float(mom[0]), float(np.sqrt(var)), float(np.sqrt(var))])
        extra["kernel_settings"] = settings
        provisional = TuningReport(grid.points, grid.kind, ks, ms, mean_taus, mean_taus, np.ones(len(grid)),
                                   np.diff(grid.points), extra=extra)
        factory = _normal_factory(provisional)
    m2, _ = estimate_m2(factory, path, grid, ks, ms, cfg.m2_replicates, _child(ss, 1), cfg.max_iterations)
    return _finish(grid, taus, ks, mean_taus, ms, np.sqrt(m2), cfg, extra)


def per_lambda_estimate_vec(pair, h, k, m, rng, max_iterations):
    from .unbiased import h_km, run_coupled

    c = EstimatorConfig(int(k), int(m), max_iterations)
    return np.asarray(h_km(run_coupled(pair, h, c, rng), c))


# ----------------------------------------------------------------- double-well

DOUBLEWELL_INIT = ((-2.0, -2.0), 1.0)
DOUBLEWELL_PROPOSAL_VAR = 2.0


def _doublewell_cfg():
    return RwmhConfig.isotropic(math.sqrt(DOUBLEWELL_PROPOSAL_VAR), DOUBLEWELL_INIT[0], DOUBLEWELL_INIT[1])


def _doublewell_factory(report=None):
    path = doublewell_path()
    return lambda lam: rwmh_kernel(path, lam, _doublewell_cfg())


def _tune_factory_based(path_fn, factory_fn):
    def tune(cfg: ExperimentConfig) -> TuningReport:
        path = path_fn(cfg)
        grid = _grid(cfg)
        factory = factory_fn(cfg, None)
        taus, ks, mean_taus, ms, ss = _survey_then_tune(cfg, factory, path, grid)
        m2, _ = estimate_m2(factory, path, grid, ks, ms, cfg.m2_replicates, _child(ss, 1), cfg.max_iterations)
        return _finish(grid, taus, ks, mean_taus, ms, np.sqrt(m2), cfg)

    return tune


# ----------------------------------------------------------- logistic evidence


def _synthetic(cfg):
    return synthetic_logistic(seed=cfg.data_seed)


def _evidence_variant(cfg):
    v = "covariate" if cfg.path == "default" else cfg.path
    if v not in ("covariate", "laplace"):
        raise ConfigError(f"logistic-evidence path must be 'covariate' or 'laplace', got {cfg.path!r}")
    return v


def _tune_logistic_evidence(cfg: ExperimentConfig) -> TuningReport:
    model = _synthetic(cfg)
    if _evidence_variant(cfg) == "covariate":
        path = model.covariate_path()
        return _tune_factory_based(lambda c: path, lambda c, r: (lambda lam: PggKernel(path, lam)))(cfg)
    # Laplace-anchored path: k from the lambda = 0 survey, m = 5k, q uniform
    fit = laplace_fit(model)
    path = model.laplace_path(fit)
    rw = laplace_rwmh_config(fit)
    grid = LambdaGrid.equispaced(1)
    ss = np.random.SeedSequence(cfg.seed)
    taus0 = survey_meetings(lambda lam: RwmhKernel(path.target_at(lam), rw), LambdaGrid(np.array([0.0, 1.0])),
                            cfg.survey_replicates, _child(ss, 0), cfg.max_iterations)[0]
    k = cfg.k or choose_k(taus0, cfg.k_quantile, cfg.k_multiplier)
    m = cfg.m or 5 * k
    taus = [taus0, np.array([], dtype=int)]
    return TuningReport(
        grid=grid.points, kind=grid.kind, k=[k, k], m=[m, m], tau_mean=[taus0.mean(), math.nan],
        tau_q99=[type7_quantile(taus0, 0.99), math.nan], sqrt_m2=[1.0, 1.0], masses=[1.0],
        meeting_times=taus, survey_replicates=cfg.survey_replicates,
        extra={"laplace_mean": fit[0].tolist(), "laplace_cov": fit[1].tolist()},
    )


def _replicate_logistic_evidence(cfg: ExperimentConfig, report: TuningReport):
    model = _synthetic(cfg)
    n_log2 = model.n * LOG2
    if _evidence_variant(cfg) == "covariate":
        path = model.covariate_path()
        # r_01 itself estimates log Z_1 + n log 2
        est = Estimand("log_z1_plus_n_log2", offset=0.0)
        return _standard_replicator(path, lambda r: (lambda lam: PggKernel(path, lam)), est)(cfg, report)
    fit = (np.asarray(report.extra["laplace_mean"]), np.asarray(report.extra["laplace_cov"]))
    path = model.laplace_path(fit)
    rw = laplace_rwmh_config(fit)
    est = Estimand("log_z1_plus_n_log2", offset=n_log2)
    return _standard_replicator(path, lambda r: (lambda lam: RwmhKernel(path.target_at(lam), rw)), est)(cfg, report)


# ------------------------------------------------------------ cross-validation


def _cv_variant(cfg):
    v = "covariate" if cfg.path == "default" else cfg.path
    if v not in ("covariate", "tempering"):
        raise ConfigError(f"logistic CV path must be 'covariate' or 'tempering', got {cfg.path!r}")
    return v


def _fixed_report(cfg, taus, k, m, extra=None) -> TuningReport:
    rep = fixed_tuning(k, m)
    # one survey, filed under the first grid point
    rep.meeting_times = [np.asarray(taus, dtype=int), np.zeros(0, dtype=int)]
    finite = np.asarray(taus, dtype=float)
    if finite.size:
        rep.tau_mean = np.array([finite.mean()] * 2)
        rep.tau_q99 = np.array([type7_quantile(finite, 0.99)] * 2)
    rep.survey_replicates = cfg.survey_replicates
    rep.extra = extra or {}
    return rep


def _k_and_m(cfg, taus):
    k = cfg.k or choose_k(taus, cfg.k_quantile, cfg.k_multiplier)
    return k, (cfg.m or 5 * k)


def _logistic_cv_problem(cfg, model, report=None):
    if _cv_variant(cfg) == "covariate":
        return LogisticCvProblem(model, "covariate")
    if report is not None and "laplace_mean" in report.extra:
        fit = (np.asarray(report.extra["laplace_mean"]), np.asarray(report.extra["laplace_cov"]))
    else:
        fit = laplace_fit(model)
    return LogisticCvProblem(model, "tempering", laplace_rwmh_config(fit))


def _tune_logistic_cv(cfg: ExperimentConfig) -> TuningReport:
    """Meeting times of the full-data sampler (lambda = 1); m = 5k."""
    model = _synthetic(cfg)
    ss = np.random.SeedSequence(cfg.seed)
    if _cv_variant(cfg) == "covariate":
        path = model.covariate_path()
        pair = PggKernel(path, 1.0)
        extra = {}
    else:
        fit = laplace_fit(model)
        path = model.cv_tempering_path(np.arange(model.n))
        pair = RwmhKernel(path.target_at(1.0), laplace_rwmh_config(fit))
        extra = {"laplace_mean": fit[0].tolist(), "laplace_cov": fit[1].tolist()}
    taus = np.array([meeting_time(pair, _rng_for(ss, 0, r), cfg.max_iterations)
                     for r in range(cfg.survey_replicates)])
    k, m = _k_and_m(cfg, taus)
    return _fixed_report(cfg, taus, k, m, extra)


def _cv_replicator(problem_fn, n_train_fn, estimand: Estimand):
    def build(cfg: ExperimentConfig, report: TuningReport):
        problem = problem_fn(cfg, report)
        n_train = n_train_fn(problem)
        q = report.proposal

        def one(index: int) -> UpsEstimate:
            est = cv_estimate(problem, n_train, report, replicate_rng(cfg.seed, index), q, cfg.max_iterations)
            est.replicate = index
            return estimand.apply(est)

        return one

    return build


def _tune_leukemia(cfg: ExperimentConfig) -> TuningReport:
    """Meeting times with a random left-out index and lambda ~ U(0, 1)."""
    model = load_leukemia()
    problem = LogisticCvProblem(model, "covariate")
    ss = np.random.SeedSequence(cfg.seed)
    rows = []
    for r in range(cfg.survey_replicates):
        rng = _rng_for(ss, 0, r)
        split = sample_split(model.n, model.n - 1, rng)
        lam = rng.random()
        _, factory = problem.setup(split)
        rows.append((int(split.validation[0]), float(lam), meeting_time(factory(lam), rng, cfg.max_iterations)))
    taus = np.array([t for _, _, t in rows])
    k, m = _k_and_m(cfg, taus)
    return _fixed_report(cfg, taus, k, m, {"index_survey": rows})


def _tune_linear_fixed(loader, n_train_fn):
    def tune(cfg: ExperimentConfig) -> TuningReport:
        model = loader()
        ss = np.random.SeedSequence(cfg.seed)
        rows = []
        for r in range(cfg.survey_replicates):
            rng = _rng_for(ss, 0, r)
            split = sample_split(model.n, n_train_fn(model), rng)
            lam = rng.random() if cfg.experiment != "mammal-mse" else 0.0
            pair = LinregGibbsKernel(model, split.train, split.validation, lam)
            left = int(split.validation[0]) if split.n_validation == 1 else -1
            rows.append((left, float(lam), meeting_time(pair, rng, cfg.max_iterations)))
        taus = np.array([t for _, _, t in rows])
        k, m = _k_and_m(cfg, taus)
        return _fixed_report(cfg, taus, k, m, {"index_survey": rows})

    return tune


def _replicate_mammal_mse(cfg: ExperimentConfig, report: TuningReport):
    model = load_mammals()
    k, m = int(report.k[0]), int(report.m[0])
    ecfg = EstimatorConfig(k, m, cfg.max_iterations)

    def one(index: int) -> UpsEstimate:
        est = mse_cv_estimate(model, model.n // 2, ecfg, replicate_rng(cfg.seed, index))
        est.replicate = index
        return est

    return one


def _estimand_name(name):
    return lambda cfg: name


REGISTRY: dict[str, Experiment] = {
    "normal": Experiment(
        "normal", _tune_normal,
        lambda cfg, rep: _standard_replicator(normal_translation_path(NORMAL_SHIFT), _normal_factory,
                                              Estimand("r01"))(cfg, rep),
        _estimand_name("r01"), ("meetings", "sqrtmeansquare", "qopt"),
    ),
    "doublewell": Experiment(
        "doublewell",
        _tune_factory_based(lambda c: doublewell_path(), lambda c, r: _doublewell_factory()),
        lambda cfg, rep: _standard_replicator(doublewell_path(), _doublewell_factory, Estimand("r01"))(cfg, rep),
        _estimand_name("r01"), ("meetings", "sqrtmeansquare", "qopt"),
    ),
    "logistic-evidence": Experiment(
        "logistic-evidence", _tune_logistic_evidence, _replicate_logistic_evidence,
        _estimand_name("log_z1_plus_n_log2"), ("meetings", "sqrtmeansquare", "qopt"),
    ),
    "logistic-cv": Experiment(
        "logistic-cv", _tune_logistic_cv,
        # reported on the log-predictive scale, log p(V | T)
        _cv_replicator(lambda cfg, rep: _logistic_cv_problem(cfg, _synthetic(cfg), rep),
                       lambda p: p.n - 1, Estimand("log_predictive", sign=1.0)),
        _estimand_name("log_predictive"), ("meetings", "cv"),
    ),
    "leukemia": Experiment(
        "leukemia", _tune_leukemia,
        _cv_replicator(lambda cfg, rep: LogisticCvProblem(load_leukemia(), "covariate"),
                       lambda p: p.n - 1, Estimand("log_predictive", sign=1.0)),
        _estimand_name("log_predictive"), ("meetingtimes", "cvindex", "cv"),
    ),
    "mammal-mse": Experiment(
        "mammal-mse", _tune_linear_fixed(load_mammals, lambda mod: mod.n // 2), _replicate_mammal_mse,
        _estimand_name("mse_cv"), ("meetings", "cv"),
    ),
    "mammal-logscore": Experiment(
        "mammal-logscore", _tune_linear_fixed(load_mammals, lambda mod: mod.n // 2),
        _cv_replicator(lambda cfg, rep: LinearCvProblem(load_mammals()), lambda p: p.n // 2,
                       Estimand("cv", sign=-1.0)),
        _estimand_name("cv"), ("meetings", "cv"),
    ),
    "stackloss": Experiment(
        "stackloss", _tune_linear_fixed(load_stackloss, lambda mod: mod.n - 1),
        _cv_replicator(lambda cfg, rep: LinearCvProblem(load_stackloss()), lambda p: p.n - 1,
                       Estimand("cv", sign=-1.0)),
        _estimand_name("cv"), ("meetingtimes", "cvindex", "cv"),
    ),
}


def get(name: str) -> Experiment:
    try:
        return REGISTRY[name]
    except KeyError:
        raise ConfigError(f"unknown experiment {name!r}; choose from {', '.join(EXPERIMENTS)}") from None


def run_tune(cfg: ExperimentConfig) -> TuningReport:
    report = get(cfg.experiment).tune(cfg)
    report.extra = {**report.extra, "config": cfg.to_dict()}
    return report


_WORKER = {}


def _worker_init(cfg_dict, report_dict):
    cfg = ExperimentConfig(**cfg_dict)
    report = TuningReport.from_dict(report_dict)
    _WORKER["one"] = get(cfg.experiment).replicator(cfg, report)


def _worker_run(index):
    return _WORKER["one"](index)


def run_estimates(cfg: ExperimentConfig, report: TuningReport, indices=None) -> list[UpsEstimate]:
    """Replicates 0..M-1 (or ``indices``), sorted by replicate index."""
    indices = list(range(cfg.replicates)) if indices is None else list(indices)
    if cfg.workers <= 1:
        one = get(cfg.experiment).replicator(cfg, report)
        return [one(i) for i in indices]
    from concurrent.futures import ProcessPoolExecutor

    with ProcessPoolExecutor(cfg.workers, initializer=_worker_init,
                             initargs=(cfg.to_dict(), report.to_dict())) as pool:
        out = list(pool.map(_worker_run, indices, chunksize=max(1, len(indices) // (8 * cfg.workers))))
    return sorted(out, key=lambda e: e.replicate)


# ------------------------------------------------------------------ outputs

ESTIMATE_FIELDS = ("replicate_index", "lambda", "estimate", "raw_e_hat", "q_density", "tau",
                   "cost_units", "split_left_out_index")
HIST_BINS = 50


def fmt(x) -> str:
    """Full double precision (17 significant digits)."""
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def estimate_row(est: UpsEstimate) -> list[str]:
    return [fmt(est.replicate), fmt(est.lam), fmt(est.estimate), fmt(est.raw_e_hat), fmt(est.q_density),
            fmt(est.tau), fmt(est.cost_units), fmt(est.left_out)]


def figure_tables(experiment: str, report: TuningReport | None, estimates: list[UpsEstimate]) -> dict:
    """Panel name -> (header, rows) for every figure panel of ``experiment``."""
    panels = get(experiment).figures
    tables = {}
    for panel in panels:
        if panel == "meetings":
            rows = []
            if report is not None and report.meeting_times is not None:
                for l, taus in enumerate(report.meeting_times):
                    rows += [[fmt(l), fmt(report.grid[l]), fmt(int(t))] for t in taus]
            tables[panel] = (("grid_index", "lambda", "tau"), rows)
        elif panel == "meetingtimes":
            survey = [] if report is None else report.extra.get("index_survey", [])
            tables[panel] = (("left_out_index", "lambda", "tau"),
                             [[fmt(int(i)), fmt(lam), fmt(int(t))] for i, lam, t in survey])
        elif panel == "sqrtmeansquare":
            rows = [] if report is None else [[fmt(g), fmt(s)] for g, s in zip(report.grid, report.sqrt_m2)]
            tables[panel] = (("lambda", "sqrt_m2"), rows)
        elif panel == "qopt":
            tables[panel] = (("lambda", "estimate"), [[fmt(e.lam), fmt(e.estimate)] for e in estimates])
        elif panel == "cvindex":
            tables[panel] = (("left_out_index", "estimate"),
                             [[fmt(e.left_out), fmt(e.estimate)] for e in estimates])
        elif panel == "cv":
            rows = []
            if estimates:
                counts, edges = np.histogram([e.estimate for e in estimates], bins=HIST_BINS)
                rows = [[fmt(edges[i]), fmt(edges[i + 1]), fmt(int(c))] for i, c in enumerate(counts)]
            tables[panel] = (("bin_low", "bin_high", "count"), rows)
    return tables
