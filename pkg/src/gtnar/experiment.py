"""Simulation protocol: configs, dataset generation and Monte Carlo replicates."""

from __future__ import annotations

import json
import logging
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from joblib import Parallel, delayed

from ._rng import RNG_ALGORITHM, make_rng, spawn_seeds
from .estimator import fit, fit_oracle, make_design
from .exceptions import GTNARError
from .inference import Replicate, coefficient_inference, simulation_metrics
from .model import GroupedParameters, example_parameters, gen_covariates, simulate
from .networks import GroupAssignment, gen_powerlaw, gen_sbm, read_edge_csv, sample_memberships
from .selection import select

logger = logging.getLogger(__name__)

MAX_FAILURE_RATE = 0.2


@dataclass
class ExperimentConfig:
    """Settings for dataset generation and benchmarking.

    ``networks`` holds one spec per mode: ``{"type": "sbm"}``,
    ``{"type": "powerlaw", "exponent": 2.5}`` or ``{"type": "file", "path": ...}``.
    ``settings`` lists extra ``(dims, n_times)`` points for the benchmark;
    when empty only the top-level sizes are run.
    """

    dims: tuple
    n_times: int
    n_groups: tuple
    g_max: tuple | None = None
    parameters: str | None = None
    networks: list = field(default_factory=list)
    n_covariates: tuple | None = None
    noise_sd: float = 1.0
    burn_in: int = 0
    replicates: int = 1
    seed: int | None = 0
    kappa: float | None = None
    out: str | None = None
    oracle: bool = True
    select: bool = False
    settings: list = field(default_factory=list)

    def __post_init__(self):
        self.dims = tuple(int(n) for n in self.dims)
        if self.seed is None:
            self.seed = int(np.random.SeedSequence().entropy % 2**63)
        q = len(self.dims)
        self.n_groups = tuple(int(g) for g in self.n_groups)
        if self.n_covariates is None:
            self.n_covariates = (3,) * q
        self.n_covariates = tuple(int(p) for p in self.n_covariates)
        if self.g_max is not None:
            self.g_max = tuple(int(g) for g in self.g_max)
        if not self.networks:
            self.networks = [{"type": "sbm"} for _ in range(q)]
        if q == 0 or any(n < 1 for n in self.dims):
            raise ValueError(f"mode sizes must be positive, got {self.dims}")
        for name in ("n_groups", "n_covariates") + (("g_max",) if self.g_max else ()):
            if len(getattr(self, name)) != q:
                raise ValueError(f"{name} must have one entry per mode ({q})")
        if any(g < 1 for g in self.n_groups) or any(g > n for g, n in zip(self.n_groups, self.dims)):
            raise ValueError(f"group counts must lie in [1, N_l], got {self.n_groups}")
        if self.n_times < 2:
            raise ValueError("n_times must be at least 2")
        if self.replicates < 1:
            raise ValueError("replicates must be at least 1")
        if self.noise_sd < 0:
            raise ValueError("noise_sd must be non-negative")
        if len(self.networks) != q:
            raise ValueError(f"need one network spec per mode ({q})")
        for spec in self.networks:
            if spec.get("type") not in ("sbm", "powerlaw", "file"):
                raise ValueError(f"unknown network type {spec.get('type')!r}")
            if spec["type"] == "file" and not Path(spec.get("path", "")).is_file():
                raise FileNotFoundError(f"network file not found: {spec.get('path')}")
        if self.parameters is not None and not Path(self.parameters).is_file():
            raise FileNotFoundError(f"parameter file not found: {self.parameters}")

    @classmethod
    def from_dict(cls, d: dict, base_dir=None) -> "ExperimentConfig":
        from .io import validate_json

        validate_json(d, "config")
        d = dict(d)
        if base_dir is not None:
            base = Path(base_dir)
            if d.get("parameters"):
                d["parameters"] = str(base / d["parameters"])
            d["networks"] = [
                dict(s, path=str(base / s["path"])) if s.get("type") == "file" else s for s in d.get("networks", [])
            ]
        return cls(**d)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        path = Path(path)
        if not path.is_file():
            raise FileNotFoundError(f"config not found: {path}")
        with path.open() as fh:
            return cls.from_dict(json.load(fh), base_dir=path.parent)

    def to_dict(self) -> dict:
        d = asdict(self)
        for k in ("dims", "n_groups", "n_covariates", "g_max"):
            if d[k] is not None:
                d[k] = list(d[k])
        return d

    def with_setting(self, dims, n_times) -> "ExperimentConfig":
        d = asdict(self)
        d.update(dims=tuple(dims), n_times=int(n_times), settings=[])
        if tuple(dims) != self.dims:
            d["networks"] = [s for s in self.networks if s["type"] != "file"] or None
            if any(s["type"] == "file" for s in self.networks):
                raise ValueError("file networks cannot be resized across settings")
        return ExperimentConfig(**d)

    def true_parameters(self) -> GroupedParameters:
        if self.parameters is None:
            return example_parameters(self.n_groups, self.n_covariates, self.noise_sd)
        from .io import read_params_json

        p = read_params_json(self.parameters)
        if p.n_groups != self.n_groups or p.n_covariates != self.n_covariates:
            raise ValueError(
                f"parameter file has groups {p.n_groups} and covariates {p.n_covariates}, "
                f"config says {self.n_groups} and {self.n_covariates}"
            )
        return GroupedParameters(p.lambdas, p.zetas, p.alpha, self.noise_sd)


def balanced_memberships(n, n_groups, seed=None, max_tries=1000) -> GroupAssignment:
    """Uniform labels, redrawn until every group is non-empty."""
    rng = make_rng(seed)
    for _ in range(max_tries):
        mem = sample_memberships(n, n_groups, seed=rng)
        if np.all(mem.sizes > 0):
            return mem
    raise ValueError(f"could not draw {n_groups} non-empty groups from {n} nodes")


def make_network(spec: dict, n: int, memberships: GroupAssignment, seed):
    kind = spec["type"]
    if kind == "sbm":
        return gen_sbm(n, memberships, spec.get("p_in"), spec.get("p_out"), seed=seed)
    if kind == "powerlaw":
        return gen_powerlaw(n, spec.get("exponent", 2.5), spec.get("multiplier", 4), seed=seed)
    return read_edge_csv(spec["path"], n=n)


@dataclass
class Truth:
    params: GroupedParameters
    memberships: list
    networks: list
    seeds: dict


def make_truth(config: ExperimentConfig, seed=None) -> Truth:
    """Group labels and networks, held fixed across replicates."""
    seed = config.seed if seed is None else seed
    q = len(config.dims)
    mem_seeds = spawn_seeds([seed, 0], q)
    net_seeds = spawn_seeds([seed, 1], q)
    params = config.true_parameters()
    memberships = [balanced_memberships(n, g, s) for n, g, s in zip(config.dims, config.n_groups, mem_seeds)]
    networks = [
        make_network(spec, n, m, s) for spec, n, m, s in zip(config.networks, config.dims, memberships, net_seeds)
    ]
    return Truth(params, memberships, networks, {"memberships": mem_seeds, "networks": net_seeds})


def draw_panel(config: ExperimentConfig, truth: Truth, seed):
    """Fresh covariates and noise for one replicate."""
    cov_seed, noise_seed = spawn_seeds(seed, 2)
    steps = config.burn_in + config.n_times
    cov = gen_covariates(config.n_covariates, config.dims, steps, cov_seed)
    series = simulate(truth.params, truth.networks, truth.memberships, cov, config.n_times, config.burn_in, noise_seed)
    if config.burn_in:
        cov = cov.tail(config.n_times)
    return series, cov, {"covariates": cov_seed, "noise": noise_seed}


def generate_dataset(config: ExperimentConfig, out_dir=None) -> Path:
    """Write one simulated bundle (networks, covariates, series, truth, manifest)."""
    from . import __version__
    from .io import write_dataset

    out_dir = out_dir or config.out
    if out_dir is None:
        raise ValueError("no output directory given")
    truth = make_truth(config)
    series, cov, panel_seeds = draw_panel(config, truth, [config.seed, 2])
    meta = {
        "seed": config.seed,
        "seeds": {**truth.seeds, **panel_seeds},
        "generators": {
            "networks": [s["type"] for s in config.networks],
            "memberships": "uniform",
            "covariates": "standard_normal",
            "parameters": config.parameters or "example_parameters",
        },
        "rng": RNG_ALGORITHM,
        "library_version": __version__,
        "config": config.to_dict(),
    }
    return write_dataset(out_dir, series, truth.networks, cov, truth.memberships, truth.params, meta)


def run_replicate(config: ExperimentConfig, truth: Truth, seed, oracle=None, do_select=None, fit_options=None):
    """Simulate one panel and fit it at the true group counts (plus oracle/selection)."""
    fit_options = dict(fit_options or {})
    oracle = config.oracle if oracle is None else oracle
    do_select = config.select if do_select is None else do_select
    series, cov, _ = draw_panel(config, truth, seed)
    design = make_design(series, truth.networks, cov)
    fit_seed, sel_seed = spawn_seeds([seed, 1], 2)
    res = fit(design, config.n_groups, seed=fit_seed, **fit_options)
    inf = coefficient_inference(res)
    orc = orc_inf = None
    if oracle:
        orc = fit_oracle(design, truth.memberships)
        orc_inf = coefficient_inference(orc)
    chosen = None
    if do_select:
        g_max = config.g_max or tuple(min(5, n) for n in config.dims)
        chosen = select(design, g_max, kappa=config.kappa, seed=sel_seed, **fit_options).chosen
    return Replicate(res, inf, orc, orc_inf, chosen)


def _safe_replicate(config, truth, seed, fit_options):
    try:
        return run_replicate(config, truth, seed, fit_options=fit_options), None
    except GTNARError as exc:
        return None, str(exc)


@dataclass
class SettingResult:
    dims: tuple
    n_times: int
    metrics: object
    failures: int
    errors: list
    seconds: float


def run_setting(config: ExperimentConfig, jobs=1, fit_options=None, seed=None) -> SettingResult:
    seed = config.seed if seed is None else seed
    truth = make_truth(config, seed)
    seeds = spawn_seeds([seed, 3], config.replicates)
    start = time.perf_counter()
    out = Parallel(n_jobs=jobs)(delayed(_safe_replicate)(config, truth, s, fit_options) for s in seeds)
    elapsed = time.perf_counter() - start
    reps = [r for r, _ in out if r is not None]
    errors = [e for _, e in out if e is not None]
    if len(errors) >= MAX_FAILURE_RATE * config.replicates:
        raise GTNARError(
            f"{len(errors)} of {config.replicates} replicates failed at dims={config.dims}, "
            f"T={config.n_times}; first error: {errors[0]}"
        )
    candidates = None
    if config.select:
        g_max = config.g_max or tuple(min(5, n) for n in config.dims)
        candidates = [list(range(1, g + 1)) for g in g_max]
    metrics = simulation_metrics(reps, truth.params, truth.memberships, candidates)
    return SettingResult(config.dims, config.n_times, metrics, len(errors), errors, elapsed)


def run_benchmark(config: ExperimentConfig, jobs=1, fit_options=None) -> list[SettingResult]:
    """Run every setting; networks and labels are fixed within a setting."""
    points = config.settings or [{"dims": config.dims, "n_times": config.n_times}]
    results = []
    for k, pt in enumerate(points):
        cfg = config.with_setting(pt.get("dims", config.dims), pt.get("n_times", config.n_times))
        logger.info("setting %d: dims=%s T=%d, R=%d", k + 1, cfg.dims, cfg.n_times, cfg.replicates)
        results.append(run_setting(cfg, jobs, fit_options, seed=spawn_seeds([config.seed, 10 + k], 1)[0]))
    return results
