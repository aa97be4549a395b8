"""RDM construction from activation matrices, vectorization, averaging.

Each dissimilarity is computed once per condition pair (upper triangle) and
mirrored, so the output is symmetric exactly, not merely within tolerance.
Accumulation order inside a pair is fixed, which keeps results bit-identical
regardless of how callers batch or parallelize over pairs.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .core import RDM
from .errors import (
    ConditionMismatch,
    ConstantRow,
    EmptyInput,
    NonFiniteValue,
    TooFewConditions,
    ZeroNormRow,
)

__all__ = ["METRICS", "DEFAULT_METRIC", "compute_rdm", "flatten_upper", "average_rdms"]

METRICS = ("correlation", "euclidean", "cosine")
DEFAULT_METRIC = "correlation"


def _pair_correlation(matrix: np.ndarray, iu: tuple[np.ndarray, np.ndarray]) -> np.ndarray:
    centered = matrix - matrix.mean(axis=1, keepdims=True)
    sq = np.einsum("ij,ij->i", centered, centered)
    if np.any(sq == 0.0):
        row = int(np.flatnonzero(sq == 0.0)[0])
        raise ConstantRow(f"row {row} is constant; correlation distance undefined")
    dots = np.einsum("ij,ij->i", centered[iu[0]], centered[iu[1]])
    # single sqrt of the product keeps exact cases (scaled rows, reversals) exact
    r = dots / np.sqrt(sq[iu[0]] * sq[iu[1]])
    # |r| can exceed 1 by an ulp; clamp so distances stay in [0, 2]
    return 1.0 - np.clip(r, -1.0, 1.0)


def _pair_euclidean(matrix: np.ndarray, iu: tuple[np.ndarray, np.ndarray]) -> np.ndarray:
    diff = matrix[iu[0]] - matrix[iu[1]]
    return np.sqrt(np.einsum("ij,ij->i", diff, diff))


def _pair_cosine(matrix: np.ndarray, iu: tuple[np.ndarray, np.ndarray]) -> np.ndarray:
    norms = np.sqrt(np.einsum("ij,ij->i", matrix, matrix))
    if np.any(norms == 0.0):
        row = int(np.flatnonzero(norms == 0.0)[0])
        raise ZeroNormRow(f"row {row} has zero norm; cosine distance undefined")
    dots = np.einsum("ij,ij->i", matrix[iu[0]], matrix[iu[1]])
    c = dots / (norms[iu[0]] * norms[iu[1]])
    return 1.0 - np.clip(c, -1.0, 1.0)


_PAIR_FUNCS = {
    "correlation": _pair_correlation,
    "euclidean": _pair_euclidean,
    "cosine": _pair_cosine,
}


def compute_rdm(
    matrix: np.ndarray,
    condition_ids: Sequence[str],
    metric: str = DEFAULT_METRIC,
) -> RDM:
    """Build an RDM from an [n_conditions x n_features] activation matrix.

    Parameters
    ----------
    matrix : array_like
        One row per condition. Correlation needs >= 2 features and
        non-constant rows; cosine needs non-zero rows; euclidean takes any
        d >= 1.
    condition_ids : sequence of str
        Names for the rows, in row order.
    metric : {"correlation", "euclidean", "cosine"}
        correlation is 1 - Pearson(row_i, row_j), cosine is
        1 - cos(row_i, row_j), euclidean the plain L2 distance.
    """
    if metric not in _PAIR_FUNCS:
        raise ValueError(f"unknown metric {metric!r}; choose one of {METRICS}")
    mat = np.asarray(matrix, dtype=np.float64)
    if mat.ndim != 2:
        raise TooFewConditions(f"expected a 2-d matrix, got shape {mat.shape}")
    n, d = mat.shape
    if n < 3:
        raise TooFewConditions(f"need >= 3 conditions, got {n}")
    if d < 1:
        raise TooFewConditions(f"rows need at least one feature, got shape {mat.shape}")
    if metric == "correlation" and d < 2:
        raise ConstantRow("correlation metric needs >= 2 features per row")
    if not np.all(np.isfinite(mat)):
        i, j = np.argwhere(~np.isfinite(mat))[0]
        raise NonFiniteValue(f"activation matrix: non-finite value at row {i}, col {j}")
    iu = np.triu_indices(n, k=1)
    dists = _PAIR_FUNCS[metric](mat, iu)
    values = np.zeros((n, n), dtype=np.float64)
    values[iu] = dists
    values[(iu[1], iu[0])] = dists
    return RDM(condition_ids=tuple(condition_ids), values=values)


def flatten_upper(rdm: RDM) -> np.ndarray:
    """Vectorize the strict upper triangle in row-major pair order.

    Order is (0,1), (0,2), ..., (0,n-1), (1,2), ...; length n(n-1)/2.
    """
    iu = np.triu_indices(rdm.n_conditions, k=1)
    return np.array(rdm.values[iu], dtype=np.float64)


def average_rdms(rdms: Sequence[RDM]) -> RDM:
    """Element-wise mean of RDMs sharing one condition set."""
    rdms = tuple(rdms)
    if not rdms:
        raise EmptyInput("cannot average zero RDMs")
    ref_ids = rdms[0].condition_ids
    for k, rdm in enumerate(rdms):
        if rdm.condition_ids != ref_ids:
            raise ConditionMismatch(f"RDM {k} condition ids differ from RDM 0")
    stacked = np.stack([r.values for r in rdms], axis=0)
    return RDM(condition_ids=ref_ids, values=stacked.mean(axis=0))
