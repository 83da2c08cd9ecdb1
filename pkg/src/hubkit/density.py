"""Local density estimate from the mean K-NN distance.

    p(x_i) ~ 1 / (N V_d mu_i^d) * ((1/K) sum_{k<=K} k^(1/d))^d

Everything raised to the power d is handled in log space.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .knn import DissimilarityView
from .reduction import mean_knn_distance

__all__ = ["DensityEstimate", "unit_ball_volume", "log_unit_ball_volume", "knn_density"]


def log_unit_ball_volume(d) -> float:
    return (d / 2) * math.log(math.pi) - float(gammaln(d / 2 + 1))


def unit_ball_volume(d) -> float:
    """Volume of the unit ball in ``d`` dimensions."""
    return math.exp(log_unit_ball_volume(d))


@dataclass(frozen=True)
class DensityEstimate:
    log_values: np.ndarray
    K: int
    d: int
    log_v_d: float

    @property
    def values(self) -> np.ndarray:
        return np.exp(self.log_values)

    @property
    def v_d(self) -> float:
        return math.exp(self.log_v_d)


def knn_density(view: DissimilarityView, K: int, d=None) -> DensityEstimate:
    """Per-point density estimate under ``view`` (a self view).

    ``d`` defaults to the ambient dimension of the view's points.
    """
    if d is None:
        base = view.base.data if hasattr(view.base, "data") else np.asarray(view.base)
        d = base.shape[1]
    mu = mean_knn_distance(view, K)
    n = mu.shape[0]
    log_vd = log_unit_ball_volume(d)
    log_corr = d * math.log(np.mean(np.arange(1, K + 1) ** (1.0 / d)))
    log_p = -math.log(n) - log_vd - d * np.log(mu) + log_corr
    return DensityEstimate(log_values=log_p, K=K, d=int(d), log_v_d=log_vd)
