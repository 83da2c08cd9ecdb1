"""Ball-membership fidelity and coverage metrics.

Every metric is built from closed balls ``B(x, NND_k(x))``:

* real radii come from the real<->real view,
* generated radii from the gen<->gen view restricted to kept points,
* membership tests use the real<->gen view.

A keep mask (from GICDM filtering) removes generated points from every ball
membership test, but they stay in the denominators.

The clipped variants are a reconstruction: real radii are clipped at their
median and the score is divided by the same statistic computed between two
disjoint halves of the real set, so a perfect generator scores about 1.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .knn import DissimilarityView, kth_neighbor_distance, pairwise_dissimilarity

__all__ = ["MetricReport", "BallGeometry", "ball_geometry", "METRICS", "compute_metric",
           "precision", "density", "recall", "coverage", "sym_precision", "sym_recall",
           "clipped_density", "clipped_coverage", "half_split_normalizer"]

METRICS = ("precision", "density", "recall", "coverage", "sym_precision", "sym_recall",
           "clipped_density", "clipped_coverage")


@dataclass
class MetricReport:
    metric: str
    value: float
    k: int
    n_real: int
    n_gen: int
    corrected: bool = False
    filtered_count: int = 0
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = asdict(self)
        d.update(d.pop("extra"))
        return d


def _subset_view(view: DissimilarityView, idx) -> DissimilarityView:
    """Self view restricted to the points ``idx``."""
    base = view.base.data if hasattr(view.base, "data") else np.asarray(view.base)
    sub = lambda s: None if s is None else s[idx]
    raw = None if view.raw is None else view.raw[np.ix_(idx, idx)]
    return DissimilarityView(base[idx], base_scale=sub(view.base_scale),
                             query_scale=sub(view.query_scale), raw=raw)


@dataclass
class BallGeometry:
    """Radii and cross dissimilarities shared by all metrics.

    ``cross[i, j]`` is the dissimilarity between real point ``i`` and
    generated point ``j``. ``gen_radii`` is NaN for filtered points, and
    ``None`` when fewer than ``k + 1`` generated points are kept.
    """

    k: int
    real_radii: np.ndarray
    cross: np.ndarray
    mask: np.ndarray
    gen_radii: Optional[np.ndarray]
    corrected: bool = False

    @property
    def n_real(self) -> int:
        return self.cross.shape[0]

    @property
    def n_gen(self) -> int:
        return self.cross.shape[1]

    def report(self, name, value, **extra) -> MetricReport:
        return MetricReport(metric=name, value=float(value), k=self.k, n_real=self.n_real,
                            n_gen=self.n_gen, corrected=self.corrected,
                            filtered_count=int(self.n_gen - self.mask.sum()), extra=extra)


def ball_geometry(real_view: DissimilarityView, gen_view: Optional[DissimilarityView],
                  cross_view: DissimilarityView, k: int = 5, mask=None,
                  corrected: bool = False) -> BallGeometry:
    """Precompute radii and the real x gen dissimilarity matrix.

    ``cross_view`` must have real points as queries and generated points as
    base. ``gen_view`` may be ``None`` when no generated-side metric is needed.
    """
    n = real_view.n_query
    if not 1 <= k <= n - 1:
        raise ValueError(f"k={k} out of range [1, {n - 1}]")
    cross = pairwise_dissimilarity(cross_view)
    if cross.shape[0] != n:
        raise ValueError("cross_view must have the real points as queries")
    m = cross.shape[1]
    mask = np.ones(m, dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
    if mask.shape != (m,):
        raise ValueError(f"mask must have shape ({m},)")
    real_radii = kth_neighbor_distance(real_view, k)
    gen_radii = None
    if gen_view is not None:
        if m < k + 1:
            raise ValueError(f"generated-side radii need at least k+1={k + 1} points, got {m}")
        kept = np.flatnonzero(mask)
        if kept.size >= k + 1:
            gen_radii = np.full(m, np.nan)
            gen_radii[kept] = kth_neighbor_distance(_subset_view(gen_view, kept), k)
    return BallGeometry(k=k, real_radii=real_radii, cross=cross, mask=mask,
                        gen_radii=gen_radii, corrected=corrected)


# -- raw statistics on a geometry ------------------------------------------

def _inside_real(g: BallGeometry, radii=None) -> np.ndarray:
    radii = g.real_radii if radii is None else radii
    return (g.cross <= radii[:, None]) & g.mask[None, :]


def _precision(g):
    return np.count_nonzero(_inside_real(g).any(axis=0)) / g.n_gen


def _density(g, radii=None):
    return np.count_nonzero(_inside_real(g, radii)) / (g.k * g.n_gen)


def _coverage(g, radii=None):
    return np.count_nonzero(_inside_real(g, radii).any(axis=1)) / g.n_real


def _need_gen_radii(g):
    if g.gen_radii is None and g.mask.sum() >= g.k + 1:
        raise ValueError("geometry was built without a gen<->gen view")
    return g.gen_radii


def _recall(g):
    gr = _need_gen_radii(g)
    if gr is None:  # fewer than k+1 kept generated points: no balls
        return 0.0
    inside = (g.cross <= gr[None, :]) & g.mask[None, :]
    return np.count_nonzero(inside.any(axis=1)) / g.n_real


def _c_precision(g):
    gr = _need_gen_radii(g)
    if gr is None:
        return 0.0
    nearest = g.cross.min(axis=0)
    hit = g.mask & (nearest <= np.where(g.mask, gr, -np.inf))
    return np.count_nonzero(hit) / g.n_gen


def _c_recall(g):
    if not g.mask.any():
        return 0.0
    nearest = g.cross[:, g.mask].min(axis=1)
    return np.count_nonzero(nearest <= g.real_radii) / g.n_real


def _clipped_radii(radii):
    return np.minimum(radii, np.median(radii))


def half_split_normalizer(real_view: DissimilarityView, k: int, statistic: str,
                          seed: int = 0) -> float:
    """Clipped statistic of one random half of the real set against the other.

    Both halves are taken from ``real_view`` (including any scaling factors),
    so the normalizer lives in the same geometry as the score it normalizes.
    """
    n = real_view.n_query
    if n % 2:
        raise ValueError(f"half-split normalizer needs an even number of real points, got {n}")
    perm = np.random.Generator(np.random.Philox(seed)).permutation(n)
    a, b = np.sort(perm[: n // 2]), np.sort(perm[n // 2:])
    base = real_view.base.data if hasattr(real_view.base, "data") else np.asarray(real_view.base)
    s = real_view.base_scale
    view_a = _subset_view(real_view, a)
    cross = DissimilarityView(base[b], query=base[a],
                              base_scale=None if s is None else s[b],
                              query_scale=None if s is None else s[a], exclude_self=False)
    g = ball_geometry(view_a, None, cross, k)
    radii = _clipped_radii(g.real_radii)
    value = _density(g, radii) if statistic == "density" else _coverage(g, radii)
    if value <= 0:
        raise ValueError(f"degenerate normalizer: real-vs-real clipped {statistic} is 0")
    return value


# -- public metric functions -----------------------------------------------

def _geometry(real_view, gen_view, cross_view, k, mask, corrected=False):
    return ball_geometry(real_view, gen_view, cross_view, k, mask, corrected)


def precision(real_view, gen_view, cross_view, k=5, mask=None) -> MetricReport:
    """Fraction of generated points inside at least one real k-NN ball."""
    g = _geometry(real_view, None, cross_view, k, mask)
    return g.report("precision", _precision(g))


def density(real_view, gen_view, cross_view, k=5, mask=None) -> MetricReport:
    """Mean number of real k-NN balls containing a generated point, over k."""
    g = _geometry(real_view, None, cross_view, k, mask)
    return g.report("density", _density(g))


def recall(real_view, gen_view, cross_view, k=5, mask=None) -> MetricReport:
    """Fraction of real points inside at least one generated k-NN ball."""
    g = _geometry(real_view, gen_view, cross_view, k, mask)
    return g.report("recall", _recall(g))


def coverage(real_view, gen_view, cross_view, k=5, mask=None) -> MetricReport:
    """Fraction of real balls containing at least one generated point."""
    g = _geometry(real_view, None, cross_view, k, mask)
    return g.report("coverage", _coverage(g))


def sym_precision(real_view, gen_view, cross_view, k=5, mask=None) -> MetricReport:
    g = _geometry(real_view, gen_view, cross_view, k, mask)
    p, cp = _precision(g), _c_precision(g)
    return g.report("sym_precision", min(p, cp), precision=p, complement=cp)


def sym_recall(real_view, gen_view, cross_view, k=5, mask=None) -> MetricReport:
    g = _geometry(real_view, gen_view, cross_view, k, mask)
    r, cr = _recall(g), _c_recall(g)
    return g.report("sym_recall", min(r, cr), recall=r, complement=cr)


def _clipped(name, statistic, real_view, gen_view, cross_view, k, mask, normalizer, split_seed):
    g = _geometry(real_view, None, cross_view, k, mask)
    return _clipped_from_geometry(g, name, statistic, real_view, normalizer, split_seed)


def _clipped_from_geometry(g, name, statistic, real_view, normalizer, split_seed):
    radii = _clipped_radii(g.real_radii)
    raw = _density(g, radii) if statistic == "density" else _coverage(g, radii)
    if normalizer is None:
        normalizer = half_split_normalizer(real_view, g.k, statistic, split_seed)
    elif normalizer <= 0:
        raise ValueError("normalizer must be positive")
    return g.report(name, raw / normalizer, unnormalized=raw, normalizer=normalizer,
                    split_seed=split_seed, clipped_variant="reconstructed")


def clipped_density(real_view, gen_view, cross_view, k=5, mask=None,
                    normalizer=None, split_seed=0) -> MetricReport:
    """Density with real radii clipped at their median, normalized by a real half split."""
    return _clipped("clipped_density", "density", real_view, gen_view, cross_view, k, mask,
                    normalizer, split_seed)


def clipped_coverage(real_view, gen_view, cross_view, k=5, mask=None,
                     normalizer=None, split_seed=0) -> MetricReport:
    """Coverage with real radii clipped at their median, normalized by a real half split."""
    return _clipped("clipped_coverage", "coverage", real_view, gen_view, cross_view, k, mask,
                    normalizer, split_seed)


def compute_metric(name: str, g: BallGeometry, real_view=None, split_seed: int = 0,
                   normalizer=None) -> MetricReport:
    """Evaluate metric ``name`` on a precomputed geometry."""
    if name == "precision":
        return g.report(name, _precision(g))
    if name == "density":
        return g.report(name, _density(g))
    if name == "recall":
        return g.report(name, _recall(g))
    if name == "coverage":
        return g.report(name, _coverage(g))
    if name == "sym_precision":
        p, cp = _precision(g), _c_precision(g)
        return g.report(name, min(p, cp), precision=p, complement=cp)
    if name == "sym_recall":
        r, cr = _recall(g), _c_recall(g)
        return g.report(name, min(r, cr), recall=r, complement=cr)
    if name in ("clipped_density", "clipped_coverage"):
        if real_view is None and normalizer is None:
            raise ValueError(f"{name} needs the real view or an explicit normalizer")
        stat = name.split("_", 1)[1]
        return _clipped_from_geometry(g, name, stat, real_view, normalizer, split_seed)
    raise ValueError(f"unknown metric {name!r}; expected one of {METRICS}")
