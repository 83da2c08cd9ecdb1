"""Out-of-sample ICDM for generated points, with multi-scale filtering.

ICDM is run on the real set only. Each generated point ``g`` then receives
its own factor

    delta_g = mu_bar_eq / mean_{k <= K+1}( delta_r[nn_k] * d(g, x_nn_k) )

where the K+1 real neighbors are ranked by ``delta_r[i] * d(g, x_i)``. The
point is kept only if ``delta_g`` is consistent with the factors of its real
neighbors at every scale; consistency is judged against the q-quantile of the
same statistic over the real points themselves.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np

from .io import VectorSet
from .knn import DissimilarityView, knn_query
from .reduction import DegenerateInputError, ScalingState, icdm

__all__ = ["GicdmResult", "GicdmViews", "delta_out_of_sample", "out_of_sample_deltas",
           "real_reference_ratios", "nearest_rank_quantile", "run_gicdm", "gicdm_view",
           "default_scales"]

VARIANTS = ("multi", "single", "unfiltered")


def default_scales(k: int = 5):
    """(K1, K2) used for a metric with neighborhood size ``k``: 2k and 10*2k."""
    K1 = 2 * k
    return K1, 10 * K1


def nearest_rank_quantile(values, q: float) -> float:
    """Smallest value with at least a fraction ``q`` of samples at or below it."""
    v = np.sort(np.asarray(values, dtype=np.float64))
    if v.size == 0:
        raise ValueError("quantile of an empty sample")
    if not 0 < q < 1:
        raise ValueError(f"q must lie in (0, 1), got {q}")
    rank = max(1, math.ceil(q * v.size))
    return float(v[rank - 1])


def real_reference_ratios(state: ScalingState) -> np.ndarray:
    """``|mean(delta of K neighbors) - delta_i| / mean(...)`` for every real point."""
    nbr = state.neighbors.indices[:, :state.K]
    ref = state.deltas[nbr].mean(axis=1)
    return np.abs(ref - state.deltas) / ref


def out_of_sample_deltas(state: ScalingState, real, points):
    """Vectorised ``delta_out_of_sample`` over the rows of ``points``.

    Rows are processed independently, so a point's outputs do not depend on
    which other points are in the batch.

    Returns
    -------
    delta_g, ratio_g, neighbor_mean, neighbors : ndarray
    """
    real_arr = real.data if isinstance(real, VectorSet) else np.asarray(real, dtype=np.float64)
    pts = points.data if isinstance(points, VectorSet) else np.atleast_2d(np.asarray(points, dtype=np.float64))
    K = state.K
    if K + 1 > real_arr.shape[0]:
        raise ValueError(f"need at least K+1={K + 1} real points")
    view = DissimilarityView(real_arr, query=pts, base_scale=state.deltas, exclude_self=False)
    table = knn_query(view, K + 1)
    denom = table.dists.mean(axis=1)
    zero = np.flatnonzero(denom <= 0)
    if zero.size:
        raise DegenerateInputError(
            f"generated point {int(zero[0])} coincides with its K+1 nearest real points")
    delta_g = state.mu_bar_final / denom
    nbr_mean = state.deltas[table.indices].mean(axis=1)
    ratio = np.abs(nbr_mean - delta_g) / nbr_mean
    return delta_g, ratio, nbr_mean, table.indices


def delta_out_of_sample(state: ScalingState, real, g, K: Optional[int] = None):
    """Scaling factor of one generated point ``g`` against an ICDM-scaled real set.

    Returns ``(delta_g, context)`` where ``context`` holds the K+1 neighbor
    indices, their mean factor and the relative discrepancy ratio.
    """
    if K is not None and K != state.K:
        raise ValueError(f"state was computed with K={state.K}, not {K}")
    g = np.asarray(g, dtype=np.float64).reshape(1, -1)
    delta_g, ratio, nbr_mean, nbrs = out_of_sample_deltas(state, real, g)
    return float(delta_g[0]), {"neighbors": nbrs[0], "neighbor_mean": float(nbr_mean[0]),
                               "ratio": float(ratio[0])}


@dataclass
class GicdmResult:
    """Per-scale real states, generated factors/ratios and the keep mask."""

    K1: int
    K2: int
    q: float
    real_state: Dict[int, ScalingState]
    ratio_r: Dict[int, np.ndarray]
    thresholds: Dict[int, float]
    delta_g: Dict[int, np.ndarray]
    ratio_g: Dict[int, np.ndarray]
    keep_mask: np.ndarray = field(init=False)

    def __post_init__(self):
        self.keep_mask = self.mask("multi")

    @property
    def scales(self):
        return (self.K1, self.K2)

    def scale_mask(self, K: int) -> np.ndarray:
        return self.ratio_g[K] <= self.thresholds[K]

    def mask(self, variant: str = "multi") -> np.ndarray:
        """Keep mask for ``multi`` (both scales), ``single`` (K1) or ``unfiltered``."""
        if variant == "multi":
            return self.scale_mask(self.K1) & self.scale_mask(self.K2)
        if variant == "single":
            return self.scale_mask(self.K1)
        if variant == "unfiltered":
            return np.ones_like(self.ratio_g[self.K1], dtype=bool)
        raise ValueError(f"unknown variant {variant!r}; expected one of {VARIANTS}")

    def summary(self) -> dict:
        kept = int(self.keep_mask.sum())
        return {"K1": self.K1, "K2": self.K2, "q": self.q,
                "kept": kept, "filtered": int(self.keep_mask.size - kept),
                "thresholds": {str(K): self.thresholds[K] for K in self.scales},
                "mu_bar_final": {str(K): self.real_state[K].mu_bar_final for K in self.scales}}


def run_gicdm(real: VectorSet, gen: VectorSet, K1: int = 10, K2: Optional[int] = None,
              q: float = 0.95, iters: int = 10,
              real_states: Optional[Dict[int, ScalingState]] = None) -> GicdmResult:
    """Full GICDM: ICDM on ``real`` at two scales, out-of-sample factors for ``gen``.

    Parameters
    ----------
    real, gen : VectorSet
    K1, K2 : int
        Neighborhood sizes, ``K2 > K1 >= 1``. ``K2`` defaults to ``10 * K1``.
    q : float
        Quantile of the real ratios used as the filtering threshold.
    iters : int
        ICDM iterations.
    real_states : dict, optional
        Precomputed ``{K: ScalingState}`` for ``real`` (reused, not recomputed).
    """
    K2 = 10 * K1 if K2 is None else K2
    if not 1 <= K1 < K2:
        raise ValueError(f"need K2 > K1 >= 1, got K1={K1}, K2={K2}")
    if not 0 < q < 1:
        raise ValueError(f"q must lie in (0, 1), got {q}")
    if real.d != gen.d:
        raise ValueError(f"dimension mismatch: real d={real.d}, gen d={gen.d}")
    if K2 + 1 > real.n:
        raise ValueError(f"K2={K2} needs at least {K2 + 1} real points, got {real.n}")
    states, ratio_r, thr, delta_g, ratio_g = {}, {}, {}, {}, {}
    for K in (K1, K2):
        st = (real_states or {}).get(K)
        if st is None:
            st = icdm(real, K, iters)
        elif st.K != K:
            raise ValueError(f"supplied state for K={K} was computed with K={st.K}")
        states[K] = st
        ratio_r[K] = real_reference_ratios(st)
        thr[K] = nearest_rank_quantile(ratio_r[K], q)
        delta_g[K], ratio_g[K], _, _ = out_of_sample_deltas(st, real, gen)
    return GicdmResult(K1=K1, K2=K2, q=q, real_state=states, ratio_r=ratio_r,
                       thresholds=thr, delta_g=delta_g, ratio_g=ratio_g)


@dataclass(frozen=True)
class GicdmViews:
    """Scaled views for metric evaluation plus the generated keep mask."""

    real_real: DissimilarityView
    real_gen: DissimilarityView
    gen_gen: DissimilarityView
    mask: np.ndarray


def gicdm_view(result: GicdmResult, real: VectorSet, gen: VectorSet,
               variant: str = "multi") -> GicdmViews:
    """Views ``real<->real``, ``real<->gen`` and ``gen<->gen`` under scale-K1 factors.

    ``real_gen`` has real points as queries (rows) and generated points as base
    (columns). Generated-generated dissimilarities use ``d * delta_g * delta_g``.
    """
    dr = result.real_state[result.K1].deltas
    dg = result.delta_g[result.K1]
    return GicdmViews(
        real_real=DissimilarityView(real, base_scale=dr, query_scale=dr),
        real_gen=DissimilarityView(gen, query=real, base_scale=dg, query_scale=dr,
                                   exclude_self=False),
        gen_gen=DissimilarityView(gen, base_scale=dg, query_scale=dg),
        mask=result.mask(variant),
    )
