"""Uniform random unit vectors: the delocalization baseline.

A uniform point on the sphere is the normalization of a standard
Gaussian vector.  The Monte Carlo driver estimates, per nu on a grid,
the probability that such a vector is (nu*n, kappa)-delocalized together
with the mean and spread of its rearrangement mass, the quantities whose
nu ~ kappa^2 / log(e/kappa) phase boundary the experiments probe.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DegenerateDraw, InvalidParams
from .rng import derive_seed, generator

_RETRY_MAX = 3


def sample_sphere(n: int, seed: int) -> np.ndarray:
    """Uniform unit vector in R^n: normalized i.i.d. standard normals."""
    if n < 1:
        raise InvalidParams(f"n must be positive, got {n}")
    for attempt in range(_RETRY_MAX):
        g = generator(derive_seed(seed, attempt)).standard_normal(n)
        nrm = np.linalg.norm(g)
        if nrm > 1e-30:
            return g / nrm
    raise DegenerateDraw(f"all {_RETRY_MAX} Gaussian draws had negligible norm")


@dataclass(frozen=True)
class SphereBaselineResult:
    """Per-nu delocalization frequencies and rearrangement-mass moments."""

    n: int
    kappa: float
    nu_grid: np.ndarray
    deloc_probability: np.ndarray
    mean_norm_sq: np.ndarray   # Monte Carlo E ||V||_(nu n)^2 per nu
    std_norm_sq: np.ndarray
    trials: int
    seed: int


def sphere_deloc_probability(n: int, kappa: float, nu_grid, trials: int,
                             seed: int) -> SphereBaselineResult:
    """Estimate P[V in D_(nu n, kappa)] for each nu over seeded trials.

    One sorted pass per trial serves the whole nu grid.
    """
    if not 0.0 < kappa < 1.0:
        raise InvalidParams(f"kappa must lie in (0, 1), got {kappa}")
    if trials < 1:
        raise InvalidParams(f"trials must be positive, got {trials}")
    nu_grid = np.asarray(nu_grid, dtype=float)
    if np.any(nu_grid <= 1.0 / n) or np.any(nu_grid >= 1.0):
        raise InvalidParams(f"every nu must lie in (1/n, 1), got {nu_grid}")

    Ls = np.floor(nu_grid * n).astype(int)
    norm_sq = np.empty((trials, nu_grid.size))
    for t in range(trials):
        v = sample_sphere(n, derive_seed(seed, t))
        sq_desc = np.sort(v * v)[::-1]
        prefix = np.concatenate([[0.0], np.cumsum(sq_desc)])
        norm_sq[t] = prefix[Ls]

    deloc = (norm_sq <= kappa * kappa).mean(axis=0)
    return SphereBaselineResult(
        n=n, kappa=kappa, nu_grid=nu_grid,
        deloc_probability=deloc,
        mean_norm_sq=norm_sq.mean(axis=0),
        std_norm_sq=norm_sq.std(axis=0, ddof=1) if trials > 1 else np.zeros(nu_grid.size),
        trials=trials, seed=seed)


def write_sphere_csv(result: SphereBaselineResult, path: str | Path) -> None:
    lines = ["nu,deloc_probability,mean_norm_sq,std_norm_sq"]
    for i, nu in enumerate(result.nu_grid):
        lines.append(f"{float(nu)!r},{float(result.deloc_probability[i])!r},"
                     f"{float(result.mean_norm_sq[i])!r},{float(result.std_norm_sq[i])!r}")
    Path(path).write_text("\n".join(lines) + "\n", newline="\n")
