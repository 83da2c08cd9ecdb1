import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hubkit import metrics as M
from hubkit.evaluation import evaluate, expand_metric_names
from hubkit.io import VectorSet
from hubkit.knn import DissimilarityView
from hubkit.synth import ScenarioSpec, gen_gaussian

import oracles

UNCLIPPED = ("precision", "density", "recall", "coverage", "sym_precision", "sym_recall")


def views(real, gen, dr=None, dg=None):
    real, gen = VectorSet(real), VectorSet(gen)
    return (DissimilarityView(real, base_scale=dr, query_scale=dr),
            DissimilarityView(gen, base_scale=dg, query_scale=dg),
            DissimilarityView(gen, query=real, base_scale=dg, query_scale=dr, exclude_self=False))


def instance(seed):
    rng = np.random.default_rng(seed)
    n = 2 * int(rng.integers(4, 26))
    m = int(rng.integers(7, 51))
    d = int(rng.integers(1, 6))
    real = rng.normal(size=(n, d))
    gen = rng.normal(loc=rng.uniform(0, 1), size=(m, d))
    scaled = bool(rng.integers(0, 2))
    dr = rng.uniform(0.5, 2, n) if scaled else None
    dg = rng.uniform(0.5, 2, m) if scaled else None
    mask = rng.uniform(size=m) < 0.8 if rng.integers(0, 2) else np.ones(m, bool)
    k = int(rng.integers(1, 6))
    return real, gen, dr, dg, mask, k


@pytest.mark.parametrize("seed", range(25))
def test_all_metrics_match_membership_oracle(seed):
    real, gen, dr, dg, mask, k = instance(seed)
    rv, gv, cv = views(real, gen, dr, dg)
    Drr = oracles.dist_matrix(real, real, dr, dr)
    Dgg = oracles.dist_matrix(gen, gen, dg, dg)
    Drg = oracles.dist_matrix(real, gen, dr, dg)
    expect = oracles.metric_suite(Drr, Dgg, Drg, k, mask)
    for name in UNCLIPPED:
        got = getattr(M, name)(rv, gv, cv, k, mask).value
        assert got == pytest.approx(expect[name], rel=1e-12, abs=0), name

    n = len(real)
    perm = np.random.Generator(np.random.Philox(seed)).permutation(n)
    a, b = sorted(perm[: n // 2]), sorted(perm[n // 2:])
    try:
        cd, cc = oracles.clipped_pair(Drr, Drg, k, mask, a, b)
    except ZeroDivisionError:
        with pytest.raises(ValueError):
            M.clipped_density(rv, gv, cv, k, mask, split_seed=seed)
        return
    assert M.clipped_density(rv, gv, cv, k, mask, split_seed=seed).value == pytest.approx(cd, rel=1e-12)
    assert M.clipped_coverage(rv, gv, cv, k, mask, split_seed=seed).value == pytest.approx(cc, rel=1e-12)


def test_identical_sets_score_one():
    x = np.random.default_rng(0).normal(size=(40, 3))
    rv, gv, cv = views(x, x)
    for name in ("precision", "recall", "coverage", "sym_precision", "sym_recall"):
        assert getattr(M, name)(rv, gv, cv, 5).value == 1.0, name


def test_isolated_pairs_density_closed_balls():
    # each real ball holds its own twin and, being closed, its partner's twin
    base = np.array([[0.0, 0.0], [1.0, 0.0]])
    x = np.vstack([base + [100.0 * i, 0] for i in range(5)])
    assert M.density(*views(x, x), 1).value == 2.0


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 10_000), k=st.integers(1, 8))
def test_identical_sets_density_is_k_plus_one_over_k(seed, k):
    x = np.random.default_rng(seed).normal(size=(30, 3))
    assert M.density(*views(x, x), k).value == pytest.approx((k + 1) / k, rel=1e-12)


@pytest.mark.parametrize("name", list(UNCLIPPED) + ["clipped_density", "clipped_coverage"])
def test_far_sets_score_zero(name):
    rng = np.random.default_rng(1)
    real = rng.normal(size=(40, 3))
    gen = rng.normal(size=(30, 3)) + 1000.0
    assert getattr(M, name)(*views(real, gen), 5).value == 0.0


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 10_000), c=st.sampled_from([0.01, 3.0, 50.0]))
def test_common_rescaling_invariance(seed, c):
    rng = np.random.default_rng(seed)
    real = rng.integers(0, 5, size=(30, 2)).astype(float)
    gen = rng.integers(0, 5, size=(20, 2)).astype(float) + 0.5
    for name in UNCLIPPED:
        a = getattr(M, name)(*views(real, gen), 3).value
        b = getattr(M, name)(*views(c * real, c * gen), 3).value
        assert a == b, name


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 10_000), k=st.integers(1, 6))
def test_precision_bounds(seed, k):
    rng = np.random.default_rng(seed)
    real = rng.normal(size=(20, 3))
    gen = rng.normal(size=(15, 3))
    assert 0 <= M.precision(*views(real, gen), k).value <= 1
    assert M.precision(*views(real, real), k).value == 1.0


def test_all_false_mask():
    rng = np.random.default_rng(2)
    x = rng.normal(size=(30, 3))
    mask = np.zeros(30, bool)
    for name in ("precision", "density", "coverage", "recall", "sym_precision", "sym_recall"):
        rep = getattr(M, name)(*views(x, x), 5, mask)
        assert rep.value == 0.0 and rep.filtered_count == 30 and rep.n_gen == 30


def test_few_kept_points_give_zero_recall():
    x = np.random.default_rng(3).normal(size=(30, 3))
    mask = np.zeros(30, bool)
    mask[:3] = True
    assert M.recall(*views(x, x), 5, mask).value == 0.0


def test_generated_side_needs_k_plus_one():
    rng = np.random.default_rng(4)
    with pytest.raises(ValueError):
        M.recall(*views(rng.normal(size=(20, 2)), rng.normal(size=(4, 2))), 5)


def test_reports_flag_reconstruction():
    x = np.random.default_rng(5).normal(size=(40, 3))
    rep = M.clipped_density(*views(x, x), 5)
    assert rep.to_dict()["clipped_variant"] == "reconstructed"


def test_clipped_metrics_on_identical_distributions():
    vals = {"clipped_density": [], "clipped_coverage": []}
    for seed in range(10):
        x = gen_gaussian(ScenarioSpec("gaussian", d=8, n=4000, seed=seed))
        real, gen = x.subset(np.arange(0, 2000)), x.subset(np.arange(2000, 4000))
        reps, _ = evaluate(real, gen, ["clipped"], 5, split_seed=seed)
        for r in reps:
            vals[r.metric].append(r.value)
    for name, v in vals.items():
        assert 0.9 <= np.mean(v) <= 1.1, (name, v)


def test_metric_aliases():
    assert expand_metric_names(["sym", "precision", "clipped"]) == [
        "sym_precision", "sym_recall", "precision", "clipped_density", "clipped_coverage"]
    with pytest.raises(ValueError):
        expand_metric_names(["fidelity"])


def test_evaluate_uses_shared_geometry():
    rng = np.random.default_rng(6)
    real, gen = VectorSet(rng.normal(size=(40, 3))), VectorSet(rng.normal(size=(35, 3)))
    reps, _ = evaluate(real, gen, ["all"], 4)
    rv, gv, cv = views(real.data, gen.data)
    for r in reps:
        if r.metric in UNCLIPPED:
            assert r.value == getattr(M, r.metric)(rv, gv, cv, 4).value
