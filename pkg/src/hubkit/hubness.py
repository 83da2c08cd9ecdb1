"""k-occurrence statistics: hub score and antihub ratio."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .knn import NeighborTable

__all__ = ["OccurrenceProfile", "k_occurrence", "hub_score", "antihub_ratio",
           "occurrence_histogram", "hubness_report"]


@dataclass(frozen=True)
class OccurrenceProfile:
    """Per-point k-occurrence counts ``O_k(x)``."""

    k: int
    counts: np.ndarray

    @property
    def n(self) -> int:
        return self.counts.shape[0]


def k_occurrence(table: NeighborTable) -> OccurrenceProfile:
    """Count how often each point appears in the other points' neighbor lists.

    The table must be self-referential (query set == base set, self excluded).
    """
    if table.n_query != table.n_base:
        raise ValueError("k-occurrence needs a table whose query set is its base set")
    own = np.arange(table.n_query)[:, None]
    if np.any(table.indices == own):
        raise ValueError("table contains self-neighbors; build it with exclude_self=True")
    counts = np.bincount(table.indices.ravel(), minlength=table.n_base)
    return OccurrenceProfile(k=table.k, counts=counts.astype(np.int64))


def hub_score(profile: OccurrenceProfile, q: float = 0.01) -> float:
    """Mean k-occurrence of the ``floor(q*n)`` most frequent points, over k.

    Uniform occurrence gives 1. Ties at the cutoff are resolved by ascending
    point index (which does not change the value).
    """
    if not 0 < q <= 1:
        raise ValueError(f"q must lie in (0, 1], got {q}")
    top = int(np.floor(q * profile.n))
    if top < 1:
        raise ValueError(f"top set is empty: floor({q} * {profile.n}) = 0")
    # stable sort on -count keeps ascending index among equal counts
    order = np.argsort(-profile.counts, kind="stable")[:top]
    return float(profile.counts[order].sum() / (profile.k * top))


def antihub_ratio(profile: OccurrenceProfile) -> float:
    """Fraction of points that are nobody's k-nearest neighbor."""
    return float(np.count_nonzero(profile.counts == 0) / profile.n)


def occurrence_histogram(profile: OccurrenceProfile) -> np.ndarray:
    """``hist[o]`` = number of points with k-occurrence ``o``."""
    return np.bincount(profile.counts)


def hubness_report(profile: OccurrenceProfile, q: float = 0.01) -> dict:
    hist = occurrence_histogram(profile)
    return {
        "k": profile.k,
        "q": q,
        "n": profile.n,
        "h1": hub_score(profile, q),
        "antihub_ratio": antihub_ratio(profile),
        "max_occurrence": int(profile.counts.max()),
        "histogram": [int(h) for h in hist],
    }
