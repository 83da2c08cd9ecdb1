"""Exact Euclidean dissimilarities and brute-force k-nearest-neighbor search.

Dissimilarities may carry per-point multiplicative factors on either side,
``diss(q, b) = euclid(q, b) * query_scale[q] * base_scale[b]``, which is how
the scaled (secondary) views produced by ICDM and GICDM are represented.

Neighbors are exact. Ties are broken by ascending base index, so a table is
fully determined by its inputs regardless of chunking or thread count.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
from scipy.spatial.distance import cdist

from .io import VectorSet

__all__ = ["DissimilarityView", "NeighborTable", "pairwise_dissimilarity",
           "knn_query", "kth_neighbor_distance", "euclidean_matrix", "n_workers"]

# block budget in float64 entries (~64 MB)
_BLOCK_ENTRIES = 8_000_000


def n_workers() -> int:
    """Worker count, capped by ``HUBKIT_THREADS`` when set."""
    env = os.environ.get("HUBKIT_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ValueError(f"HUBKIT_THREADS must be an integer, got {env!r}") from None
    return os.cpu_count() or 1


def _as_array(x) -> np.ndarray:
    if isinstance(x, VectorSet):
        return x.data
    return np.asarray(x, dtype=np.float64)


def euclidean_matrix(query, base) -> np.ndarray:
    """Full Euclidean distance matrix between the rows of two point sets."""
    q, b = _as_array(query), _as_array(base)
    if q.shape[1] != b.shape[1]:
        raise ValueError(f"dimension mismatch: query d={q.shape[1]}, base d={b.shape[1]}")
    return cdist(q, b)


@dataclass(frozen=True)
class DissimilarityView:
    """Pairwise dissimilarities between a query set and a base set.

    Parameters
    ----------
    base, query : VectorSet or ndarray
        Point sets. ``query`` defaults to ``base``.
    base_scale, query_scale : ndarray, optional
        Per-point multiplicative factors; absent means all ones.
    exclude_self : bool, optional
        Ignore the diagonal in neighbor queries. Defaults to ``True`` when
        ``query`` is ``base``.
    raw : ndarray, optional
        Precomputed unscaled Euclidean matrix (query rows x base columns),
        reused to avoid recomputation across scaled views.
    """

    base: object
    query: object = None
    base_scale: Optional[np.ndarray] = None
    query_scale: Optional[np.ndarray] = None
    exclude_self: Optional[bool] = None
    raw: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.query is None:
            object.__setattr__(self, "query", self.base)
        if self.exclude_self is None:
            object.__setattr__(self, "exclude_self", self.query is self.base)
        qa, ba = _as_array(self.query), _as_array(self.base)
        if qa.ndim != 2 or ba.ndim != 2:
            raise ValueError("query and base must be 2-D")
        if qa.shape[1] != ba.shape[1]:
            raise ValueError(f"dimension mismatch: query d={qa.shape[1]}, base d={ba.shape[1]}")
        if self.exclude_self and qa.shape[0] != ba.shape[0]:
            raise ValueError("exclude_self requires query and base of equal size")
        for name, n in (("base_scale", ba.shape[0]), ("query_scale", qa.shape[0])):
            s = getattr(self, name)
            if s is not None:
                s = np.asarray(s, dtype=np.float64)
                if s.shape != (n,):
                    raise ValueError(f"{name} must have shape ({n},), got {s.shape}")
                if not np.all(np.isfinite(s)) or np.any(s < 0):
                    raise ValueError(f"{name} must be finite and non-negative")
                object.__setattr__(self, name, s)
        if self.raw is not None and self.raw.shape != (qa.shape[0], ba.shape[0]):
            raise ValueError("raw matrix shape does not match query x base")

    @property
    def n_query(self) -> int:
        return _as_array(self.query).shape[0]

    @property
    def n_base(self) -> int:
        return _as_array(self.base).shape[0]

    def rescaled(self, base_scale=None, query_scale=None) -> "DissimilarityView":
        """Same point sets (and cached raw matrix) with new scale factors."""
        return replace(self, base_scale=base_scale, query_scale=query_scale)

    def with_raw(self) -> "DissimilarityView":
        """Copy of this view with the unscaled matrix precomputed."""
        if self.raw is not None:
            return self
        return replace(self, raw=euclidean_matrix(self.query, self.base))

    def block(self, start: int, stop: int) -> np.ndarray:
        """Dissimilarities for query rows ``start:stop`` against every base point."""
        if self.raw is not None:
            blk = self.raw[start:stop].copy()
        else:
            blk = cdist(_as_array(self.query)[start:stop], _as_array(self.base))
        if self.query_scale is not None:
            blk *= self.query_scale[start:stop, None]
        if self.base_scale is not None:
            blk *= self.base_scale[None, :]
        return blk


def _row_chunks(n_rows: int, n_cols: int):
    step = max(1, _BLOCK_ENTRIES // max(1, n_cols))
    return [(s, min(s + step, n_rows)) for s in range(0, n_rows, step)]


def _map_chunks(fn, chunks):
    workers = min(n_workers(), len(chunks))
    if workers <= 1:
        return [fn(c) for c in chunks]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, chunks))


def pairwise_dissimilarity(view: DissimilarityView) -> np.ndarray:
    """Dense ``n_query x n_base`` dissimilarity matrix of ``view``."""
    chunks = _row_chunks(view.n_query, view.n_base)
    blocks = _map_chunks(lambda c: view.block(*c), chunks)
    return np.vstack(blocks)


@dataclass(frozen=True)
class NeighborTable:
    """k nearest base points of every query point, closest first."""

    k: int
    indices: np.ndarray
    dists: np.ndarray
    n_query: int
    n_base: int

    def kth(self, k=None) -> np.ndarray:
        """Distance to the ``k``-th neighbor (1-based, default: the table's k)."""
        k = self.k if k is None else k
        return self.dists[:, k - 1]


def _select_rows(blk: np.ndarray, k: int, col_ids: np.ndarray):
    """k smallest per row with ascending-index tie-break."""
    n_rows, n_cols = blk.shape
    if k == n_cols:
        cand = np.broadcast_to(col_ids, blk.shape).copy()
    else:
        cand = np.argpartition(blk, k - 1, axis=1)[:, :k]
    vals = np.take_along_axis(blk, cand, axis=1)
    order = np.lexsort((cand, vals), axis=-1)
    cand = np.take_along_axis(cand, order, axis=1)
    vals = np.take_along_axis(vals, order, axis=1)
    if k < n_cols:
        # a tie at the k-th value may hide a lower index outside the partition
        thr = vals[:, -1:]
        ambiguous = np.flatnonzero((blk <= thr).sum(axis=1) != k)
        for r in ambiguous:
            full = np.lexsort((col_ids, blk[r]))[:k]
            cand[r] = full
            vals[r] = blk[r, full]
    return cand, vals


def knn_query(view: DissimilarityView, k: int) -> NeighborTable:
    """Exact ``k`` nearest base points for every query point of ``view``.

    Rows are sorted by dissimilarity, ties by ascending base index. With
    ``exclude_self`` the query's own index never appears.
    """
    k = int(k)
    limit = view.n_base - (1 if view.exclude_self else 0)
    if not 1 <= k <= limit:
        raise ValueError(f"k={k} out of range [1, {limit}]")
    col_ids = np.arange(view.n_base)

    def run(chunk):
        start, stop = chunk
        blk = view.block(start, stop)
        if view.exclude_self:
            rows = np.arange(stop - start)
            blk[rows, rows + start] = np.inf
        return _select_rows(blk, k, col_ids)

    parts = _map_chunks(run, _row_chunks(view.n_query, view.n_base))
    indices = np.vstack([p[0] for p in parts]).astype(np.int64)
    dists = np.vstack([p[1] for p in parts])
    return NeighborTable(k=k, indices=indices, dists=dists,
                         n_query=view.n_query, n_base=view.n_base)


def kth_neighbor_distance(view: DissimilarityView, k: int) -> np.ndarray:
    """``NND_k`` of every query point under ``view``."""
    return knn_query(view, k).kth()
