"""Delocalization metrics for unit vectors.

The central quantity is the decreasing-rearrangement norm: the l2 mass
of the floor(L) largest-magnitude coordinates.  A unit vector is
(L, kappa)-delocalized when that mass is at most kappa, which matches
the worst-case-over-subsets definition because the top-L coordinate set
is the maximizing subset.

L may be passed as a real (e.g. nu * N from a sweep); it is floored
exactly once, here at the module boundary.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DimensionError, InvalidParams

_UNIT_ATOL = 1e-8


def _check_unit(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or v.size == 0:
        raise DimensionError(f"expected a 1-D vector, got shape {v.shape}")
    nrm = float(np.linalg.norm(v))
    if abs(nrm - 1.0) > _UNIT_ATOL:
        raise InvalidParams(f"vector is not unit norm (||v||2 = {nrm!r})")
    return v


def _floor_L(L, n: int) -> int:
    Lf = int(np.floor(L))
    if not 1 <= Lf <= n:
        raise DimensionError(f"need 1 <= floor(L) <= N, got L={L}, N={n}")
    return Lf


def rearrangement_norm(v, L) -> float:
    """l2 mass of the floor(L) largest-magnitude coordinates of unit v.

    Uses partial selection, O(N) expected, no full sort.
    """
    v = _check_unit(v)
    Lf = _floor_L(L, v.size)
    if Lf >= v.size:
        return float(np.linalg.norm(v))
    a = np.abs(v)
    top = np.partition(a, v.size - Lf)[v.size - Lf:]
    return float(np.sqrt(np.sum(top * top)))


def is_delocalized(v, L, kappa: float) -> bool:
    """True iff no set of floor(L) coordinates carries more than kappa^2 mass."""
    if not 0.0 < kappa < 1.0:
        raise InvalidParams(f"kappa must lie in (0, 1), got {kappa}")
    return rearrangement_norm(v, L) <= kappa


def lq_deloc_bound(v, L: int, q: float) -> float:
    """Certified kappa from the lq norm: L^(1/2 - 1/q) * ||v||_q.

    Any kappa at or above the returned value makes v (L, kappa)-delocalized;
    q = 2 gives the vacuous certificate 1 for unit v.
    """
    v = _check_unit(v)
    if q < 2:
        raise InvalidParams(f"q must be >= 2, got {q}")
    Lf = _floor_L(L, v.size)
    norm_q = float(np.sum(np.abs(v) ** q) ** (1.0 / q))
    return Lf ** (0.5 - 1.0 / q) * norm_q


def approx_top_ratio(m, v, norm: float) -> float:
    """||X v||2 / ||X|| for unit v; v is (1-eps)-approximate iff >= 1-eps.

    ``norm`` must be the precomputed operator norm of the raw matrix
    (see :func:`specloc.spectral.operator_norm`); the product uses the raw
    values so the ratio is well defined regardless of m.scale.
    """
    v = _check_unit(v)
    if v.size != m.n:
        raise DimensionError(f"vector length {v.size} != N = {m.n}")
    if norm <= 0:
        raise InvalidParams(f"operator norm must be positive, got {norm}")
    return float(np.linalg.norm(m._csr @ v)) / norm


def peak_flat_split(v, L) -> tuple[np.ndarray, np.ndarray]:
    """Split v = v_plus + v_minus at the threshold floor(L)^(-1/2).

    v_plus keeps the coordinates with |v_i| at or above the threshold
    (there are at most floor(L) of them for unit v, since floor(L)+1
    such coordinates would carry more than unit mass) and v_minus the
    rest, so ||v_minus||_inf <= floor(L)^(-1/2).  Boundary ties go to
    v_plus; either convention satisfies both guarantees.
    """
    v = _check_unit(v)
    Lf = _floor_L(L, v.size)
    peaks = np.abs(v) >= Lf ** -0.5
    v_plus = np.where(peaks, v, 0.0)
    v_minus = np.where(peaks, 0.0, v)
    return v_plus, v_minus


def cube_norm_upper_bound(m) -> float:
    """Certified bound on sup over the unit cube of ||X w||2.

    Row sums dominate: ||X w||2^2 <= sum_x (sum_y |X_xy|)^2 for any
    ||w||_inf <= 1.
    """
    row_abs_sums = np.abs(m._csr).sum(axis=1)
    return float(np.sqrt(np.sum(np.square(np.asarray(row_abs_sums).ravel()))))


def cube_norm_probe(m, n_probes: int, seed: int) -> float:
    """Lower-bound probe: max ||X w||2 over random sign vectors w."""
    from .rng import generator

    gen = generator(seed)
    best = 0.0
    for _ in range(n_probes):
        w = gen.integers(0, 2, size=m.n) * 2.0 - 1.0
        best = max(best, float(np.linalg.norm(m._csr @ w)))
    return best


@dataclass(frozen=True)
class DelocProfile:
    """Rearrangement norms of one unit vector over a grid of L values."""

    vector_id: str
    L_grid: np.ndarray
    norms: np.ndarray
    lq_norms: dict[float, float] | None = None

    def is_delocalized_at(self, L, kappa: float) -> bool:
        idx = int(np.searchsorted(self.L_grid, int(np.floor(L))))
        if idx >= self.L_grid.size or self.L_grid[idx] != int(np.floor(L)):
            raise InvalidParams(f"L={L} not on the profile grid")
        return bool(self.norms[idx] <= kappa)


def deloc_profile(v, L_grid, vector_id: str = "", qs=None) -> DelocProfile:
    """Profile ||v||_(L) over a grid of L with one sort and prefix sums."""
    v = _check_unit(v)
    Ls = np.unique(np.floor(np.asarray(L_grid)).astype(int))
    if Ls.size == 0 or Ls[0] < 1 or Ls[-1] > v.size:
        raise DimensionError(f"L grid must lie in [1, {v.size}]")
    sq_desc = np.sort(v * v)[::-1]
    prefix = np.concatenate([[0.0], np.cumsum(sq_desc)])
    norms = np.sqrt(prefix[Ls])
    lq = None
    if qs is not None:
        a = np.abs(v)
        lq = {float(q): float(np.sum(a ** q) ** (1.0 / q)) for q in qs}
    return DelocProfile(vector_id=vector_id, L_grid=Ls, norms=norms, lq_norms=lq)


def write_profile_csv(profile: DelocProfile, path: str | Path) -> None:
    lines = ["L,norm_L"]
    lines.extend(f"{int(L)},{float(x)!r}" for L, x in zip(profile.L_grid, profile.norms))
    Path(path).write_text("\n".join(lines) + "\n", newline="\n")
