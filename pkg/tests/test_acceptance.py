"""Acceptance gate: one PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py -v``; the lines are printed in the
terminal summary (and immediately with ``-s``).
"""
import math
import time

import numpy as np
import pytest
from scipy import integrate

from hubkit.crossover import binom_survival, chisq_pdf, crossover_dimension, noncentral_chisq_cdf
from hubkit.density import knn_density
from hubkit.evaluation import BENCH_DIMS, bench_hypersphere
from hubkit.gicdm import run_gicdm
from hubkit.hubness import antihub_ratio, hub_score, k_occurrence
from hubkit.io import VectorSet
from hubkit.knn import DissimilarityView, knn_query, pairwise_dissimilarity
from hubkit import metrics as M
from hubkit.reduction import icdm, nicdm
from hubkit.synth import ScenarioSpec, gen_gaussian, gen_sphere_surface

import oracles
from conftest import ACCEPTANCE_LINES

pytestmark = pytest.mark.slow


def record(num, title, ok, detail):
    line = f"criterion {num}: {'PASS' if ok else 'FAIL'} {title} ({detail})"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def hubness(vs, k=5, q=0.01):
    p = k_occurrence(knn_query(DissimilarityView(vs), k))
    return hub_score(p, q), antihub_ratio(p)


def gaussian(d, n, seed, role="real"):
    return gen_gaussian(ScenarioSpec("gaussian", d=d, n=n, seed=seed), role)


def test_c01_hypersphere_failure_and_fix():
    t0 = time.perf_counter()
    rows = bench_hypersphere(BENCH_DIMS, n=2000, seed=0, k=5, K1=10, K2=100, q=0.95, iters=10)
    elapsed = time.perf_counter() - t0
    val = {(r["d"], r["metric"], r["variant"]): r["value"] for r in rows}
    base = ("precision", "density", "recall", "coverage")
    raw512 = [val[(512, m, "raw")] for m in base]
    fix512 = [val[(512, m, "multi_scale")] for m in base]
    low = [val[(4, m, v)] for m in base for v in ("raw", "multi_scale")]
    ok = (min(raw512) > 0.05 and max(fix512) <= 0.01 and max(low) <= 0.05 and elapsed < 600)
    record(1, "hypersphere failure/fix", ok,
           f"d=512 raw={np.round(raw512, 3).tolist()} gicdm={np.round(fix512, 3).tolist()}; "
           f"d=4 max={max(low):.3f}; sweep {elapsed:.0f}s")


def test_c02_ablation_ordering(d_star):
    d = round(d_star(2000, 10)[0])
    per = {"unfiltered": [], "single_scale": [], "multi_scale": []}
    for seed in range(3):
        for r in bench_hypersphere([d], n=2000, seed=seed, k=5, metrics=["precision"]):
            if r["variant"] in per:
                per[r["variant"]].append(r["value"])
    u, s, m = (float(np.mean(per[v])) for v in ("unfiltered", "single_scale", "multi_scale"))
    record(2, "ablation ordering", u >= s >= m and m <= 0.01,
           f"d={d}: unfiltered={u:.3f} single={s:.3f} multi={m:.3f}")


def test_c03_hubness_emergence():
    vals = []
    ok = True
    for seed in range(3):
        h4, a4 = hubness(gaussian(4, 20000, seed))
        h32, a32 = hubness(gaussian(32, 20000, seed))
        ok &= 1.8 <= h4 <= 2.8 and a4 < 0.01 and h32 > 3.0 and a32 > 0.02
        vals.append(f"s{seed}: d4 h={h4:.2f} A={a4:.4f} d32 h={h32:.2f} A={a32:.4f}")
    record(3, "hubness emergence", ok, "; ".join(vals))


@pytest.fixture(scope="module")
def icdm_case():
    x = gaussian(32, 5000, 0)
    return x, icdm(x, 20, 10)


def _iterated_matrix(x, K, T):
    D = pairwise_dissimilarity(DissimilarityView(x))
    D = np.maximum(D, D.T)
    for _ in range(T):
        off = D.copy()
        np.fill_diagonal(off, np.inf)
        mu = np.partition(off, K - 1, axis=1)[:, :K].mean(axis=1)
        del off
        s = np.sqrt(mu.mean() / mu)
        D *= s[:, None]
        D *= s[None, :]
    return D


def test_c04_icdm_eliminates_hubness(icdm_case):
    x, st_ = icdm_case
    view = DissimilarityView(x, base_scale=st_.deltas, query_scale=st_.deltas)
    p = k_occurrence(knn_query(view, 5))
    h, a = hub_score(p, 0.01), antihub_ratio(p)
    it = _iterated_matrix(x, 20, 10)
    fact = pairwise_dissimilarity(view)
    off = ~np.eye(x.n, dtype=bool)
    rel = float(np.max(np.abs(fact[off] - it[off]) / it[off]))
    tr = st_.disparity_trace
    record(4, "ICDM eliminates hubness", h < 2.0 and a <= 0.01 and tr[-1] < tr[0] and rel <= 1e-9,
           f"h={h:.3f} A={a:.4f} S0={tr[0]:.1f} ST={tr[-1]:.3f} factorization rel err={rel:.1e}")


def test_c05_sphere_no_hubness():
    h, a = hubness(gen_sphere_surface(ScenarioSpec("sphere_surface", d=32, n=20000, seed=0)))
    record(5, "sphere has no hubness", h < 3 and a < 0.02, f"h={h:.3f} A={a:.4f}")


def test_c06_density_uniformization(icdm_case):
    x, st_ = icdm_case
    est = knn_density(DissimilarityView(x, base_scale=st_.deltas, query_scale=st_.deltas), 20)
    raw = knn_density(DissimilarityView(x), 20)
    ratio = float(np.exp(est.log_values.max() - est.log_values.min()))
    raw_ratio = float(np.exp(raw.log_values.max() - raw.log_values.min()))
    record(6, "density uniformization", ratio < 1.5, f"max/min={ratio:.3f} (raw {raw_ratio:.3g})")


def test_c07_crossover_solver(d_star):
    times, ds = {}, {}
    for nk in ((100, 5), (1000, 5), (10000, 5), (1000, 50)):
        t0 = time.perf_counter()
        ds[nk] = crossover_dimension(*nk)[0]
        times[nk] = time.perf_counter() - t0
    inc = ds[(100, 5)] < ds[(1000, 5)] < ds[(10000, 5)]
    dec = ds[(1000, 5)] > ds[(1000, 50)]
    d = round(ds[(1000, 5)])
    rng = np.random.default_rng(2024)
    hits = 0
    for _ in range(2000):
        pts = rng.standard_normal((1000, d))
        sq = ((pts[1:] - pts[0]) ** 2).sum(axis=1)
        hits += np.partition(sq, 4)[4] <= d
    frac = hits / 2000
    slow = max(times.values())
    record(7, "crossover solver", inc and dec and 0.45 <= frac <= 0.55 and slow < 30,
           "d*=" + ", ".join(f"{k}:{v:.2f}" for k, v in ds.items())
           + f"; MC at d={d}: {frac:.3f}; max solve {slow:.1f}s")


def test_c08_gicdm_desiderata():
    real, gen = gaussian(16, 2000, 0), gaussian(16, 2000, 0, "generated")
    full = run_gicdm(real, gen, 10, 100)
    pick = [0, 17, 999, 1998]
    sub = run_gicdm(real, gen.subset(pick), 10, 100)
    alone = run_gicdm(real, gen.subset([17]), 10, 100)
    indep = (all(np.array_equal(sub.delta_g[K], full.delta_g[K][pick]) for K in (10, 100))
             and np.array_equal(sub.keep_mask, full.keep_mask[pick])
             and alone.delta_g[10][0] == full.delta_g[10][17]
             and bool(alone.keep_mask[0]) == bool(full.keep_mask[17]))
    solo = icdm(real, 10, 10)
    pure = (solo.deltas.tobytes() == full.real_state[10].deltas.tobytes()
            and solo.mu_final.tobytes() == full.real_state[10].mu_final.tobytes()
            and solo.disparity_trace.tobytes() == full.real_state[10].disparity_trace.tobytes())
    rates = [float(full.keep_mask.mean())]
    for seed in range(1, 10):
        r, g = gaussian(16, 2000, seed), gaussian(16, 2000, seed, "generated")
        rates.append(float(run_gicdm(r, g, 10, 100).keep_mask.mean()))
    record(8, "GICDM desiderata", indep and pure and min(rates) >= 0.85,
           f"independence={indep} purity={pure} keep rate min={min(rates):.3f} "
           f"mean={np.mean(rates):.3f}")


def test_c09_oracle_equivalence():
    rng = np.random.default_rng(99)
    bad = []
    for inst in range(25):
        n, m, d = int(rng.integers(8, 51)), int(rng.integers(8, 51)), int(rng.integers(1, 6))
        real, gen = rng.normal(size=(n, d)), rng.normal(0.5, 1.2, size=(m, d))
        k = int(rng.integers(1, min(n, m) - 1))
        mask = rng.uniform(size=m) < 0.85
        Drr, Dgg, Drg = (oracles.dist_matrix(real, real), oracles.dist_matrix(gen, gen),
                         oracles.dist_matrix(real, gen))
        rv, gv = DissimilarityView(VectorSet(real)), DissimilarityView(VectorSet(gen))
        cv = DissimilarityView(VectorSet(gen), query=VectorSet(real), exclude_self=False)
        expect = oracles.metric_suite(Drr, Dgg, Drg, k, mask)
        for name, v in expect.items():
            got = getattr(M, name)(rv, gv, cv, k, mask).value
            if not (got == v or abs(got - v) <= 1e-12 * abs(v)):
                bad.append((inst, name))
        counts = oracles.k_occurrence(oracles.knn_full_sort(Drr, k, True), n)
        if k_occurrence(knn_query(rv, k)).counts.tolist() != counts:
            bad.append((inst, "k_occurrence"))
        got = nicdm(np.array(Drr), k)
        want = np.array(oracles.nicdm(Drr, k))
        if not np.allclose(got, want, rtol=1e-12, atol=0):
            bad.append((inst, "nicdm"))
    record(9, "oracle equivalence", not bad, f"25 instances, mismatches={bad[:5]}")


def test_c10_special_functions():
    triples = [(10.0, 5, 3.0), (2.0, 1, 0.5), (40.0, 30, 8.0), (25.0, 12, 20.0), (3.0, 2, 1.0)]
    rng = np.random.default_rng(7)
    zs = []
    for x, d, lam in triples:
        shift = np.zeros(d)
        shift[0] = math.sqrt(lam)
        hits = 0
        for _ in range(20):
            z = rng.standard_normal((50_000, d)) + shift
            hits += np.count_nonzero((z * z).sum(axis=1) <= x)
        p = hits / 1_000_000
        zs.append(abs(noncentral_chisq_cdf(x, d, lam) - p) / math.sqrt(p * (1 - p) / 1_000_000))
    btrip = [(20, 0.3, 7), (1, 0.5, 1), (50, 0.01, 3), (100, 0.5, 50), (200, 0.02, 1),
             (30, 0.9, 29), (999, 0.003, 5), (60, 0.25, 40), (10, 0.7, 0), (400, 0.1, 30)]
    berr = max(abs(binom_survival(*t) - oracles.binom_sf(*t)) / oracles.binom_sf(*t) for t in btrip)
    integral = integrate.quad(chisq_pdf, 0, 200, args=(10,), epsabs=1e-13, epsrel=1e-13, limit=400)[0]
    ok = max(zs) <= 3 and berr <= 1e-12 and abs(integral - 1) <= 1e-8
    record(10, "special functions", ok,
           f"ncx2 max |z|={max(zs):.2f}; binom max rel err={berr:.1e}; pdf integral-1={integral - 1:.1e}")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v", "-p", "no:cacheprovider"]))
