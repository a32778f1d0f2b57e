"""Gaussian sampling on a sparsity pattern, with O(N*d) matrix-vector products.

The sampled matrix is symmetric with one i.i.d. standard normal per
canonical edge; the (y, x) entry is the same number as (x, y) by
construction, not by a second draw.  Values are assigned in canonical
edge order from a Philox stream keyed by the seed, so the result does
not depend on how the caller iterates the pattern and two samplings with
the same (pattern, seed) agree bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import cached_property
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .errors import CapExceeded, DimensionMismatch, InvalidParams
from .patterns import SparsityPattern
from .rng import generator

DENSE_CAP_DEFAULT = 4096


@dataclass(frozen=True)
class GaussianSparseMatrix:
    """A sampled symmetric matrix on a fixed sparsity pattern.

    ``edge_index`` holds the canonical (u <= v) edges in sorted order and
    ``values[i]`` is the Gaussian drawn for ``edge_index[i]``.  ``scale``
    multiplies the matrix in :meth:`matvec` and :meth:`to_dense`
    (1 for the raw matrix, d**-0.5 for the normalized one); analysis
    routines in :mod:`specloc.spectral` always address the raw values and
    apply their own normalization explicitly.
    """

    pattern: SparsityPattern
    edge_index: np.ndarray  # (m, 2) int64, canonical order
    values: np.ndarray      # (m,) float64
    seed: int
    scale: float = 1.0

    @property
    def n(self) -> int:
        return self.pattern.n_vertices

    def normalized(self) -> "GaussianSparseMatrix":
        """The d**-0.5-scaled view of the same sampled values."""
        return replace(self, scale=self.pattern.degree ** -0.5)

    @cached_property
    def _csr(self) -> sp.csr_matrix:
        """Compressed-row storage of the raw (unscaled) matrix, both triangles."""
        u, v = self.edge_index[:, 0], self.edge_index[:, 1]
        off = u != v
        rows = np.concatenate([u, v[off]])
        cols = np.concatenate([v, u[off]])
        data = np.concatenate([self.values, self.values[off]])
        return sp.csr_matrix((data, (rows, cols)), shape=(self.n, self.n))

    @cached_property
    def _dense_raw(self) -> np.ndarray:
        """Dense mirror of the raw matrix; built once, bitwise symmetric."""
        a = np.zeros((self.n, self.n))
        u, v = self.edge_index[:, 0], self.edge_index[:, 1]
        a[u, v] = self.values
        a[v, u] = self.values
        return a

    def value_of(self, x: int, y: int) -> float:
        """Entry (x, y) of the raw matrix; 0.0 off the pattern."""
        return float(self._csr[x, y])


def sample_matrix(p: SparsityPattern, seed: int) -> GaussianSparseMatrix:
    """Draw one standard normal per edge of ``p``, keyed by ``seed``."""
    edges = np.array(p.sorted_edges(), dtype=np.int64).reshape(-1, 2)
    values = generator(seed).standard_normal(len(edges))
    return GaussianSparseMatrix(pattern=p, edge_index=edges, values=values, seed=seed)


def from_values(p: SparsityPattern, values, seed: int = 0,
                scale: float = 1.0) -> GaussianSparseMatrix:
    """Build a matrix with explicit edge values (test fixtures, overrides).

    ``values`` is either an array aligned with the canonical edge order or
    a mapping ``{(u, v): value}`` covering every edge.
    """
    edges = np.array(p.sorted_edges(), dtype=np.int64).reshape(-1, 2)
    if isinstance(values, dict):
        vals = np.array([values[(int(u), int(v))] for u, v in edges], dtype=float)
    else:
        vals = np.asarray(values, dtype=float)
        if vals.shape != (len(edges),):
            raise InvalidParams(
                f"expected {len(edges)} edge values, got shape {vals.shape}")
    return GaussianSparseMatrix(pattern=p, edge_index=edges, values=vals,
                                seed=seed, scale=scale)


def matvec(m: GaussianSparseMatrix, v: np.ndarray) -> np.ndarray:
    """scale * X @ v in O(N*d); raises DimensionMismatch on length mismatch."""
    v = np.asarray(v)
    if v.shape != (m.n,):
        raise DimensionMismatch(f"vector has shape {v.shape}, expected ({m.n},)")
    out = m._csr @ v
    return out if m.scale == 1.0 else m.scale * out


def dense_unscaled(m: GaussianSparseMatrix, dense_cap: int = DENSE_CAP_DEFAULT) -> np.ndarray:
    """The cached dense mirror of the raw matrix; do not mutate the result."""
    if m.n > dense_cap:
        raise CapExceeded(f"N={m.n} exceeds dense cap {dense_cap}")
    return m._dense_raw


def to_dense(m: GaussianSparseMatrix, dense_cap: int = DENSE_CAP_DEFAULT) -> np.ndarray:
    """Dense symmetric array equal entrywise to the sparse representation."""
    raw = dense_unscaled(m, dense_cap)
    return raw.copy() if m.scale == 1.0 else m.scale * raw


def dump_matrix(m: GaussianSparseMatrix, path: str | Path) -> None:
    """ASCII debug dump: "N d seed" header, then "x y value" per edge.

    Values carry 17 significant digits, enough to round-trip float64 for
    cross-language comparison.
    """
    lines = [f"{m.n} {m.pattern.degree} {m.seed}"]
    lines.extend(f"{u} {v} {val:.17g}"
                 for (u, v), val in zip(m.edge_index.tolist(), m.values.tolist()))
    Path(path).write_text("\n".join(lines) + "\n", newline="\n")
