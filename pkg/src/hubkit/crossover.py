"""Crossover dimension of a standard Gaussian sample.

For X_1..X_N ~ N(0, I_d) the squared distance from X_1 to another sample,
conditioned on ``||X_1||^2 = r``, is noncentral chi-square with ``d`` degrees
of freedom and noncentrality ``r``. The k-th nearest squared distance is the
k-th order statistic of N-1 such draws, so

    P(NND_k^2 <= t) = int_0^inf P(Bin(N-1, F_{chi2_d(r)}(t)) >= k) f_{chi2_d}(r) dr.

The crossover dimension d* solves P(NND_k^2 <= d) = 1/2 for continuous d.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

__all__ = ["chisq_pdf", "chisq_cdf", "noncentral_chisq_cdf", "binom_survival",
           "median_nnd_cdf_at_mean", "crossover_dimension", "CrossoverProblem",
           "QuadratureMismatch", "NoSignChange"]

TRUNC_SD = 12.0
NODES = 512
JACOBI_BELOW = 8.0


class QuadratureMismatch(ArithmeticError):
    """512- and 1024-node quadratures disagree beyond tolerance."""


class NoSignChange(ValueError):
    """The root bracket does not contain a crossover."""


@dataclass(frozen=True)
class CrossoverProblem:
    n: int
    k: int
    root_tol: float = 0.01
    nodes: int = NODES
    bracket: tuple = (1.0, 4096.0)

    def __post_init__(self):
        if not (self.n >= self.k + 1 and self.k >= 1):
            raise ValueError(f"need n >= k + 1 >= 2, got n={self.n}, k={self.k}")


def chisq_pdf(r, d):
    """Chi-square density with (real) ``d`` degrees of freedom, evaluated in log space."""
    r = np.asarray(r, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        logp = ((d / 2 - 1) * np.log(r) - r / 2
                - (d / 2) * math.log(2.0) - special.gammaln(d / 2))
        out = np.where(r > 0, np.exp(logp), 0.0)
    return out if out.ndim else float(out)


def chisq_cdf(x, d):
    """Central chi-square CDF via the regularized lower incomplete gamma."""
    x = np.asarray(x, dtype=np.float64)
    return special.gammainc(d / 2, np.maximum(x, 0) / 2)


def _poisson_window(m):
    """Lowest index and width of a Poisson(m) window missing < 1e-12 of the mass.

    Uses ``a = 8 sqrt(m) + 40`` on both sides; the Chernoff bound
    ``exp(-a^2 / (2 (m + a/3)))`` is below 1e-13 per tail for every m >= 0.
    """
    m = np.asarray(m, dtype=np.float64)
    a = 8.0 * np.sqrt(m) + 40.0
    lo = np.maximum(0.0, np.floor(m - a))
    hi = np.ceil(m + a)
    return lo, int(np.max(hi - lo)) + 1


def noncentral_chisq_cdf(x, d, lam):
    """Noncentral chi-square CDF as a Poisson mixture of central CDFs.

    ``sum_j Pois(j; lam/2) * F_{chi2_{d+2j}}(x)``, summed over a window of j
    that leaves less than 1e-12 of the Poisson mass outside. ``x`` and ``lam``
    broadcast against each other.
    """
    x, lam = np.broadcast_arrays(np.asarray(x, dtype=np.float64),
                                 np.asarray(lam, dtype=np.float64))
    if np.any(lam < 0):
        raise ValueError("noncentrality must be non-negative")
    shape = x.shape
    xf, mf = x.ravel(), lam.ravel() / 2
    lo, width = _poisson_window(mf)
    j = lo[:, None] + np.arange(width)[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        logw = np.where(mf[:, None] > 0,
                        -mf[:, None] + j * np.log(mf[:, None]) - special.gammaln(j + 1),
                        np.where(j == 0, 0.0, -np.inf))
    terms = np.exp(logw) * special.gammainc(d / 2 + j, np.maximum(xf, 0.0)[:, None] / 2)
    out = np.minimum(1.0, terms.sum(axis=1)).reshape(shape)
    return out if out.ndim else float(out)


def binom_survival(n, p, k):
    """``P(Bin(n, p) >= k)`` via the regularized incomplete beta ``I_p(k, n-k+1)``."""
    n = int(n)
    p = np.asarray(p, dtype=np.float64)
    k = int(k)
    if k <= 0:
        res = np.ones_like(p)
    elif k > n:
        res = np.zeros_like(p)
    else:
        res = special.betainc(k, n - k + 1, np.clip(p, 0.0, 1.0))
    return res if res.ndim else float(res)


def _integral(d: float, n: int, k: int, t: float, nodes: int) -> float:
    # In u = sqrt(r) the chi-square weight is u^(d-1) exp(-u^2/2) / (2^(d/2-1) Gamma(d/2)).
    # For small d the u^(d-1) factor is not smooth at 0, so it is absorbed into a
    # Gauss-Jacobi weight; otherwise Gauss-Legendre on the truncated range.
    sd = math.sqrt(2 * d)
    r_lo = max(0.0, d - TRUNC_SD * sd)
    r_hi = d + TRUNC_SD * sd
    u_lo, u_hi = math.sqrt(r_lo), math.sqrt(r_hi)
    log_norm = -(d / 2 - 1) * math.log(2.0) - special.gammaln(d / 2)
    half = 0.5 * (u_hi - u_lo)
    if d < JACOBI_BELOW:
        x, w = special.roots_jacobi(nodes, 0.0, d - 1)
        u = half * (x + 1)
        logf = d * math.log(half) - u * u / 2 + log_norm
    else:
        x, w = np.polynomial.legendre.leggauss(nodes)
        u = half * x + 0.5 * (u_hi + u_lo)
        logf = math.log(half) + (d - 1) * np.log(u) - u * u / 2 + log_norm
    p = noncentral_chisq_cdf(t, d, u * u)
    return float(np.sum(w * np.exp(logf) * binom_survival(n - 1, p, k)))


def median_nnd_cdf_at_mean(d: float, n: int, k: int, nodes: int = NODES,
                           check: bool = True) -> float:
    """``P(NND_k^2 <= d)`` for n standard Gaussian points in dimension ``d``.

    Gaussian quadrature over ``r`` in ``d +- 12 sqrt(2d)`` (clipped at 0);
    with ``check`` the result is recomputed with twice the nodes and must
    agree within 1e-8.
    """
    if d <= 0:
        raise ValueError("d must be positive")
    CrossoverProblem(n, k)
    val = _integral(d, n, k, d, nodes)
    if check:
        val2 = _integral(d, n, k, d, 2 * nodes)
        if abs(val - val2) > 1e-8:
            raise QuadratureMismatch(
                f"quadrature disagreement {abs(val - val2):.2e} at d={d}, n={n}, k={k}")
        val = val2
    return min(1.0, max(0.0, val))


def crossover_dimension(n: int, k: int, root_tol: float = 0.01,
                        bracket=(1.0, 4096.0), check: bool = True):
    """Continuous dimension where the median squared k-NN distance equals d.

    Bisection on ``P(NND_k^2 <= d) - 1/2`` inside ``bracket``.

    Returns
    -------
    d_star : float
    residual : float
        ``P(NND_k^2 <= d_star) - 1/2``.
    """
    CrossoverProblem(n, k, root_tol)
    f = lambda d: median_nnd_cdf_at_mean(d, n, k, check=check) - 0.5
    lo, hi = float(bracket[0]), float(bracket[1])
    f_lo, f_hi = f(lo), f(hi)
    if f_lo == 0:
        return lo, 0.0
    if f_hi == 0:
        return hi, 0.0
    if np.sign(f_lo) == np.sign(f_hi):
        raise NoSignChange(
            f"no sign change in [{lo}, {hi}] for n={n}, k={k} "
            f"(residuals {f_lo:.3g}, {f_hi:.3g})")
    while hi - lo > root_tol:
        mid = 0.5 * (lo + hi)
        f_mid = f(mid)
        if f_mid == 0:
            return mid, 0.0
        if np.sign(f_mid) == np.sign(f_lo):
            lo, f_lo = mid, f_mid
        else:
            hi, f_hi = mid, f_mid
    mid = 0.5 * (lo + hi)
    return mid, f(mid)
