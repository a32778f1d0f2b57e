"""Experiment orchestration: configs, per-trial records, CSV output.

Each trial is pure given its derived seed, so any grid point of any
sweep can be reproduced in isolation: the per-trial seed is
``derive_seed(base_seed, experiment_id, N, d, trial)`` with the
experiment ids listed in ``EXPERIMENT_IDS``.  A failed trial never
aborts a sweep; its record carries the error string instead of metrics.

Outputs per run: one records CSV, one summary CSV, a ``config.json``
sidecar with the fully resolved configuration (deterministic), and a
``manifest.json`` with code version and wall-clock time (the one
intentionally non-reproducible file).
"""

from __future__ import annotations

import csv
import dataclasses
import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .deloc import rearrangement_norm
from .errors import InvalidParams, SpeclocError
from .patterns import PATTERN_KINDS, generate_pattern
from .rng import derive_seed
from .sampler import DENSE_CAP_DEFAULT, sample_matrix
from .semicircle import dyson_residual_check
from .spectral import esd_histogram, full_spectrum, operator_norm, top_eigenvector
from .sphere import sphere_deloc_probability, write_sphere_csv
from .subspace import construct_delocalized_candidate

EXPERIMENTS = ("transition_sweep", "norm_phase", "esd_check", "deloc_construct",
               "sphere_baseline", "resolvent_check")
EXPERIMENT_IDS = {name: i + 1 for i, name in enumerate(EXPERIMENTS)}

THREADS_ENV_VAR = "SPECLOC_THREADS"


@dataclass
class ExperimentConfig:
    """Resolved parameters of one experiment run.

    All fields have defaults except ``experiment``; a JSON config may set
    any subset.  ``epsilon=None`` means the per-(N, d) default window
    width; nu/kappa defaults sit inside the sphere baseline's delocalized
    band so a sphere-like candidate passes comfortably.
    """

    experiment: str
    pattern: str = "band"
    N_grid: tuple[int, ...] = (512,)
    d_grid: tuple[int, ...] = (33,)
    trials: int = 5
    base_seed: int = 0
    epsilon: float | None = None
    nu: float = 0.02
    kappa: float = 0.5
    gamma: float | None = None
    delta: float | None = None
    n_candidates: int = 32
    nu_grid: tuple[float, ...] = (0.001, 0.01, 0.1)
    z_re: float = 0.5
    z_im: float = 1.0
    n_bins: int = 64
    tol: float = 1e-8
    loops: bool = True
    output_dir: str = "."
    dense_cap: int = DENSE_CAP_DEFAULT
    threads: int = 1

    def __post_init__(self):
        self.N_grid = tuple(int(x) for x in self.N_grid)
        self.d_grid = tuple(int(x) for x in self.d_grid)
        self.nu_grid = tuple(float(x) for x in self.nu_grid)
        self.validate()

    def validate(self) -> None:
        problems = []
        if self.experiment not in EXPERIMENTS:
            problems.append(f"experiment {self.experiment!r} not in {EXPERIMENTS}")
        if self.pattern not in PATTERN_KINDS:
            problems.append(f"pattern {self.pattern!r} not in {PATTERN_KINDS}")
        if not self.N_grid or not self.d_grid:
            problems.append("N_grid and d_grid must be nonempty")
        if any(n < 1 for n in self.N_grid) or any(d < 1 for d in self.d_grid):
            problems.append("grid entries must be positive")
        if self.trials < 1:
            problems.append("trials must be >= 1")
        if not 0.0 < self.nu < 1.0:
            problems.append(f"nu must lie in (0, 1), got {self.nu}")
        if not 0.0 < self.kappa < 1.0:
            problems.append(f"kappa must lie in (0, 1), got {self.kappa}")
        if self.epsilon is not None and self.epsilon <= 0:
            problems.append("epsilon must be positive when given")
        if self.n_candidates < 1:
            problems.append("n_candidates must be >= 1")
        if self.tol <= 0:
            problems.append("tol must be positive")
        if self.threads < 1:
            problems.append("threads must be >= 1")
        if problems:
            raise InvalidParams("; ".join(problems))

    @classmethod
    def from_json(cls, path: str | Path) -> "ExperimentConfig":
        try:
            payload = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise InvalidParams(f"config {path}: invalid JSON ({exc})") from exc
        if "experiment" not in payload:
            raise InvalidParams(f"config {path}: missing required key 'experiment'")
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(payload) - known
        if unknown:
            raise InvalidParams(f"config {path}: unknown keys {sorted(unknown)}")
        return cls(**payload)

    def resolved(self) -> dict:
        """JSON-serializable dict of every field, for the sidecar."""
        out = dataclasses.asdict(self)
        out["N_grid"] = list(self.N_grid)
        out["d_grid"] = list(self.d_grid)
        out["nu_grid"] = list(self.nu_grid)
        return out


@dataclass
class TrialRecord:
    """One trial's identity plus a flat name -> number map of measurements."""

    experiment: str
    pattern: str
    N: int
    d: int
    trial: int
    seed: int
    metrics: dict[str, float] = field(default_factory=dict)
    error: str | None = None


def trial_seed(cfg: ExperimentConfig, n: int, d: int, trial: int) -> int:
    """The documented per-trial seed derivation."""
    return derive_seed(cfg.base_seed, EXPERIMENT_IDS[cfg.experiment], n, d, trial)


def _pattern_for(cfg: ExperimentConfig, n: int, d: int, seed: int):
    return generate_pattern(cfg.pattern, n, d, seed=derive_seed(seed, 1),
                            loops=cfg.loops)


def _run_grid(cfg: ExperimentConfig, one_trial) -> list[TrialRecord]:
    """Run one_trial over the (N, d, trial) grid, tolerating failures.

    Trials run independently (optionally on a thread pool) and are
    aggregated in deterministic (N, d, trial) order.
    """
    tasks = [(n, d, t) for n in cfg.N_grid for d in cfg.d_grid
             for t in range(cfg.trials)]

    def run(task):
        n, d, t = task
        seed = trial_seed(cfg, n, d, t)
        rec = TrialRecord(experiment=cfg.experiment, pattern=cfg.pattern,
                          N=n, d=d, trial=t, seed=seed)
        try:
            rec.metrics = one_trial(n, d, seed)
        except SpeclocError as exc:
            rec.error = f"{type(exc).__name__}: {exc}"
        return rec

    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            return list(pool.map(run, tasks))
    return [run(task) for task in tasks]


def _median(values) -> float:
    return float(np.median(values)) if len(values) else math.nan


def _grid_summary(cfg: ExperimentConfig, records: list[TrialRecord],
                  stats: dict[str, str]) -> list[dict]:
    """Per-(N, d) reductions; stats maps output column -> 'median:key' etc."""
    rows = []
    for n in cfg.N_grid:
        for d in cfg.d_grid:
            grp = [r for r in records if r.N == n and r.d == d and r.error is None]
            row = {"N": n, "d": d, "d_over_logN": d / math.log(n) if n > 1 else math.inf,
                   "ok_trials": len(grp)}
            for col, spec_ in stats.items():
                op, key = spec_.split(":")
                vals = [r.metrics[key] for r in grp if key in r.metrics]
                if op == "median":
                    row[col] = _median(vals)
                elif op == "mean":
                    row[col] = float(np.mean(vals)) if vals else math.nan
                elif op == "std":
                    row[col] = float(np.std(vals, ddof=1)) if len(vals) > 1 else math.nan
            rows.append(row)
    return rows


def run_transition_sweep(cfg: ExperimentConfig):
    """Localization witness vs constructed candidate across the (N, d) grid.

    Per trial: operator norm, the rearrangement mass of the exact top
    eigenvector at floor(nu N) (the localization witness), and the
    candidate construction's achieved ratio and kappa.  The summary's
    medians expose the crossover as d/log N sweeps through 1.
    """
    def one_trial(n, d, seed):
        p = _pattern_for(cfg, n, d, seed)
        m = sample_matrix(p, derive_seed(seed, 2))
        norm = operator_norm(m, cfg.tol, max_iter=2000)
        L = max(1, math.floor(cfg.nu * n))
        _, vtop = top_eigenvector(m, tol=cfg.tol, max_iter=2000)
        wit = rearrangement_norm(vtop, L)
        metrics = {"norm": norm, "top_norm_L": wit, "top_norm_L_sq": wit * wit}
        _, rep = construct_delocalized_candidate(
            m, cfg.nu, cfg.kappa, cfg.n_candidates, derive_seed(seed, 3),
            epsilon=cfg.epsilon, dense_cap=cfg.dense_cap, tol=cfg.tol)
        metrics.update(ratio=rep.ratio_achieved, kappa_achieved=rep.kappa_achieved,
                       m_dim=float(rep.m), epsilon_used=rep.epsilon_used)
        return metrics

    records = _run_grid(cfg, one_trial)
    summary = _grid_summary(cfg, records, {
        "median_top_norm_L_sq": "median:top_norm_L_sq",
        "median_kappa_achieved": "median:kappa_achieved",
        "median_ratio": "median:ratio",
        "median_norm": "median:norm",
    })
    return records, summary


def run_norm_phase(cfg: ExperimentConfig):
    """Operator norm statistics against the sqrt(d) / sqrt(2 log N) scalings."""
    def one_trial(n, d, seed):
        p = _pattern_for(cfg, n, d, seed)
        m = sample_matrix(p, derive_seed(seed, 2))
        norm = operator_norm(m, cfg.tol, max_iter=2000)
        return {"norm": norm,
                "norm_over_sqrt_d": norm / math.sqrt(d),
                "norm_over_sqrt_2logN": norm / math.sqrt(2.0 * math.log(n))}

    records = _run_grid(cfg, one_trial)
    summary = _grid_summary(cfg, records, {
        "mean_norm": "mean:norm",
        "std_norm": "std:norm",
        "mean_norm_over_sqrt_d": "mean:norm_over_sqrt_d",
        "mean_norm_over_sqrt_2logN": "mean:norm_over_sqrt_2logN",
    })
    return records, summary


def run_esd_check(cfg: ExperimentConfig):
    """KS distance of the scaled empirical spectrum to the semicircle law."""
    def one_trial(n, d, seed):
        p = _pattern_for(cfg, n, d, seed)
        m = sample_matrix(p, derive_seed(seed, 2))
        sd = full_spectrum(m, vectors=False, dense_cap=cfg.dense_cap)
        hist = esd_histogram(sd, cfg.n_bins)
        return {"ks": hist.ks_semicircle}

    records = _run_grid(cfg, one_trial)
    summary = _grid_summary(cfg, records, {"median_ks": "median:ks"})
    return records, summary


def run_deloc_construct(cfg: ExperimentConfig):
    """Candidate construction alone, for the delocalized-regime experiments."""
    def one_trial(n, d, seed):
        p = _pattern_for(cfg, n, d, seed)
        m = sample_matrix(p, derive_seed(seed, 2))
        _, rep = construct_delocalized_candidate(
            m, cfg.nu, cfg.kappa, cfg.n_candidates, derive_seed(seed, 3),
            epsilon=cfg.epsilon, dense_cap=cfg.dense_cap, tol=cfg.tol)
        return {"ratio": rep.ratio_achieved, "kappa_achieved": rep.kappa_achieved,
                "m_dim": float(rep.m), "epsilon_used": rep.epsilon_used,
                "proj_diag_max": rep.proj_diag_max, "proj_diag_min": rep.proj_diag_min}

    records = _run_grid(cfg, one_trial)
    summary = _grid_summary(cfg, records, {
        "median_ratio": "median:ratio",
        "median_kappa_achieved": "median:kappa_achieved",
        "median_m_dim": "median:m_dim",
    })
    return records, summary


def run_resolvent_check(cfg: ExperimentConfig):
    """Averaged-resolvent Dyson residual per (N, d); trials = sample count."""
    z = complex(cfg.z_re, cfg.z_im)
    records = []
    for n in cfg.N_grid:
        for d in cfg.d_grid:
            seed = trial_seed(cfg, n, d, 0)
            rec = TrialRecord(experiment=cfg.experiment, pattern=cfg.pattern,
                              N=n, d=d, trial=0, seed=seed)
            try:
                p = _pattern_for(cfg, n, d, seed)
                m = sample_matrix(p, derive_seed(seed, 2))
                rep = dyson_residual_check(m, z, cfg.trials, derive_seed(seed, 3),
                                           dense_cap=cfg.dense_cap)
                rec.metrics = {"max_abs_deviation": rep.max_abs_deviation,
                               "mc_std_max": rep.mc_std_max, "bound": rep.bound,
                               "holds": float(rep.holds)}
            except SpeclocError as exc:
                rec.error = f"{type(exc).__name__}: {exc}"
            records.append(rec)
    summary = _grid_summary(cfg, records, {
        "mean_max_abs_deviation": "mean:max_abs_deviation",
        "mean_bound": "mean:bound",
    })
    return records, summary


_RECORD_COLUMNS = {
    "transition_sweep": ("norm", "top_norm_L", "top_norm_L_sq", "ratio",
                         "kappa_achieved", "m_dim", "epsilon_used"),
    "norm_phase": ("norm", "norm_over_sqrt_d", "norm_over_sqrt_2logN"),
    "esd_check": ("ks",),
    "deloc_construct": ("ratio", "kappa_achieved", "m_dim", "epsilon_used",
                        "proj_diag_max", "proj_diag_min"),
    "resolvent_check": ("max_abs_deviation", "mc_std_max", "bound", "holds"),
}

_RUNNERS = {
    "transition_sweep": run_transition_sweep,
    "norm_phase": run_norm_phase,
    "esd_check": run_esd_check,
    "deloc_construct": run_deloc_construct,
    "resolvent_check": run_resolvent_check,
}


def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(x)
    return str(x)


def write_records_csv(records: list[TrialRecord], columns, path: str | Path) -> None:
    head = ["experiment", "pattern", "N", "d", "trial", "seed", *columns, "error"]
    with open(path, "w", newline="\n") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(head)
        for r in records:
            row = [r.experiment, r.pattern, r.N, r.d, r.trial, r.seed]
            row.extend(_fmt(r.metrics[c]) if c in r.metrics else "" for c in columns)
            row.append(r.error or "")
            w.writerow(row)


def write_summary_csv(summary: list[dict], path: str | Path) -> None:
    if not summary:
        Path(path).write_text("")
        return
    head = list(summary[0].keys())
    with open(path, "w", newline="\n") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(head)
        for row in summary:
            w.writerow([_fmt(row[k]) for k in head])


def run_experiment(cfg: ExperimentConfig) -> dict[str, Path]:
    """Dispatch, run, and persist one experiment; returns the output paths."""
    out_dir = Path(cfg.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    started = time.time()
    paths = {"config": out_dir / "config.json"}
    paths["config"].write_text(json.dumps(cfg.resolved(), sort_keys=True, indent=2) + "\n")

    if cfg.experiment == "sphere_baseline":
        result = sphere_deloc_probability(cfg.N_grid[0], cfg.kappa, cfg.nu_grid,
                                          cfg.trials, trial_seed(cfg, cfg.N_grid[0], 1, 0))
        paths["records"] = out_dir / "sphere_baseline.csv"
        write_sphere_csv(result, paths["records"])
    else:
        records, summary = _RUNNERS[cfg.experiment](cfg)
        paths["records"] = out_dir / f"{cfg.experiment}.csv"
        paths["summary"] = out_dir / f"{cfg.experiment}_summary.csv"
        write_records_csv(records, _RECORD_COLUMNS[cfg.experiment], paths["records"])
        write_summary_csv(summary, paths["summary"])

    manifest = {"experiment": cfg.experiment, "version": __version__,
                "wall_clock_seconds": time.time() - started}
    paths["manifest"] = out_dir / "manifest.json"
    paths["manifest"].write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n")
    return paths


def effective_threads(requested: int | None) -> int:
    """--threads resolution; the environment variable wins when set."""
    env = os.environ.get(THREADS_ENV_VAR)
    if env is not None:
        try:
            return max(1, int(env))
        except ValueError:
            raise InvalidParams(f"{THREADS_ENV_VAR}={env!r} is not an integer")
    return max(1, requested or 1)
