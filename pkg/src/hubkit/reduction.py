"""In-sample hubness reduction: NICDM, ICDM and unit-sphere projection.

ICDM repeatedly rescales every dissimilarity by ``mu_bar / sqrt(mu_i mu_j)``
where ``mu_i`` is the mean distance from point ``i`` to its K nearest
neighbors. Because each step multiplies by per-point factors, the result after
T steps is ``d_ij * delta_i * delta_j`` and only the ``delta`` vector needs to
be stored.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .io import VectorSet
from .knn import DissimilarityView, NeighborTable, knn_query

__all__ = ["DegenerateInputError", "ScalingState", "mean_knn_distance", "nicdm",
           "icdm", "sphere_project", "scaled_view"]

log = logging.getLogger(__name__)

# cache the raw distance matrix when it fits in this many float64 entries
RAW_CACHE_ENTRIES = 64_000_000


class DegenerateInputError(ValueError):
    """Zero or non-finite neighborhood statistics (e.g. duplicated points)."""


@dataclass(frozen=True)
class ScalingState:
    """Outcome of ICDM on one point set.

    Attributes
    ----------
    deltas : ndarray
        Per-point factors; the secondary dissimilarity is ``d_ij * deltas[i] * deltas[j]``.
    mu_final, mu_bar_final : ndarray, float
        Mean K-NN distances (and their average) under the final scaled view.
    disparity_trace : ndarray
        ``sum_i |mu_i - mu_bar|`` at t = 0..iters.
    K, iters : int
    neighbors : NeighborTable
        K-NN table of the final scaled view.
    """

    deltas: np.ndarray
    mu_final: np.ndarray
    mu_bar_final: float
    disparity_trace: np.ndarray
    K: int
    iters: int
    neighbors: Optional[NeighborTable] = field(default=None, repr=False, compare=False)


def _check_mu(mu: np.ndarray, where: str = "") -> None:
    bad = np.flatnonzero(~(mu > 0) | ~np.isfinite(mu))
    if bad.size:
        i = int(bad[0])
        raise DegenerateInputError(
            f"mean neighbor distance of point {i} is {mu[i]!r}{where}; "
            "remove duplicated points or lower K")


def mean_knn_distance(view: DissimilarityView, K: int) -> np.ndarray:
    """Mean dissimilarity from each point to its K nearest (non-self) neighbors."""
    if not view.exclude_self:
        raise ValueError("mean_knn_distance expects a self view (exclude_self=True)")
    mu = knn_query(view, K).dists.mean(axis=1)
    _check_mu(mu)
    return mu


def nicdm(D, K: int) -> np.ndarray:
    """Non-iterative contextual dissimilarity on a symmetric distance matrix.

    Returns ``D_ij * mu_bar / sqrt(mu_i * mu_j)``.
    """
    D = np.asarray(D, dtype=np.float64)
    n = D.shape[0]
    if D.ndim != 2 or D.shape[1] != n:
        raise ValueError("D must be a square matrix")
    if not 1 <= K <= n - 1:
        raise ValueError(f"K={K} out of range [1, {n - 1}]")
    if not np.allclose(D, D.T, rtol=1e-12, atol=0) or np.any(np.diag(D) != 0):
        raise ValueError("D must be symmetric with a zero diagonal")
    off = D.copy()
    np.fill_diagonal(off, np.inf)
    mu = np.sort(np.partition(off, K - 1, axis=1)[:, :K], axis=1).mean(axis=1)
    _check_mu(mu)
    inv = 1.0 / np.sqrt(mu)
    return D * mu.mean() * inv[:, None] * inv[None, :]


def scaled_view(vs, deltas, raw=None) -> DissimilarityView:
    """Self view of ``vs`` under ``d_ij * deltas[i] * deltas[j]``."""
    return DissimilarityView(vs, base_scale=deltas, query_scale=deltas, raw=raw)


def icdm(vs: VectorSet, K: int, iters: int = 10, *, cache_raw: Optional[bool] = None) -> ScalingState:
    """Iterative contextual dissimilarity measure.

    Each iteration computes ``mu_i`` and ``mu_bar`` from the current scaled
    view (neighbor sets are re-evaluated) and multiplies ``delta_i`` by
    ``sqrt(mu_bar / mu_i)``. The factors are accumulated in log space.

    Parameters
    ----------
    vs : VectorSet
    K : int
        Neighborhood size, ``1 <= K <= n - 1``.
    iters : int
        Number of updates T (>= 1).
    cache_raw : bool, optional
        Keep the full raw distance matrix in memory. By default it is cached
        when it holds at most ``RAW_CACHE_ENTRIES`` values.
    """
    n = vs.n
    if not 1 <= K <= n - 1:
        raise ValueError(f"K={K} out of range [1, {n - 1}]")
    if iters < 1:
        raise ValueError(f"iters must be >= 1, got {iters}")
    if cache_raw is None:
        cache_raw = n * n <= RAW_CACHE_ENTRIES
    view = DissimilarityView(vs)
    if cache_raw:
        view = view.with_raw()

    log_delta = np.zeros(n)
    trace = []
    for t in range(iters + 1):
        deltas = np.exp(log_delta)
        table = knn_query(view.rescaled(deltas, deltas), K)
        mu = table.dists.mean(axis=1)
        _check_mu(mu, f" at iteration {t}")
        mu_bar = float(mu.mean())
        trace.append(float(np.abs(mu - mu_bar).sum()))
        log.debug("icdm t=%d disparity=%.6g", t, trace[-1])
        if t == iters:
            break
        log_delta = log_delta + 0.5 * (np.log(mu_bar) - np.log(mu))
        if not np.all(np.isfinite(log_delta)):
            raise DegenerateInputError(f"non-finite scaling factor at iteration {t}")

    deltas.setflags(write=False)
    return ScalingState(deltas=deltas, mu_final=mu, mu_bar_final=mu_bar,
                        disparity_trace=np.array(trace), K=K, iters=iters,
                        neighbors=table)


def sphere_project(vs: VectorSet) -> VectorSet:
    """Project every row onto the unit sphere."""
    norms = np.linalg.norm(vs.data, axis=1)
    zero = np.flatnonzero(norms == 0)
    if zero.size:
        raise DegenerateInputError(f"row {int(zero[0])} has zero norm")
    return VectorSet(vs.data / norms[:, None], label=f"sphere({vs.label})")
