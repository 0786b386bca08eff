"""Screening statistics, the Lasso path, FOSS and the exhaustive oracle.

Oracles. Pearson on the 4x2 toy: x2 deviations (.4, -.4, .3, -.3), y deviations
(-1.5, -.5, .5, 1.5) give sum of products -0.7, so |r| = 0.7 / sqrt(0.5 * 5).
Distance covariance as a V-statistic is S1 + S2 - 2 S3 with S1 = mean |dx||dy|,
S2 = mean |dx| mean |dy| and S3 = mean_{i,j,l} |x_i - x_l||y_j - y_l|.
"""

import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import named_report

from screenlab.core import InputError, TooManySubsets, VariableSet
from screenlab.sampling import SeededStream
from screenlab.screeners import (
    dcsis_scores,
    exhaustive_best_subset,
    foss_screen,
    kkt_residual,
    lambda_max,
    lasso_cv,
    lasso_path,
    lasso_screen,
    screen,
    sirs_scores,
    sis_scores,
    subset_rss,
    top_m,
)

# ---------------------------------------------------------------- marginal


def test_sis_examples():
    X = np.array([[0.1, 0.9], [0.2, 0.1], [0.3, 0.8], [0.4, 0.2]])
    s = sis_scores(X, [1, 2, 3, 4])
    assert s[0] == pytest.approx(1.0, abs=1e-12)
    assert s[1] == pytest.approx(0.7 / np.sqrt(2.5), abs=1e-12)
    np.testing.assert_array_equal(sis_scores(X, np.full(4, 2.0)), 0.0)


def test_sis_perfect_and_constant_column(rng):
    X = rng.random((20, 3))
    X[:, 2] = 0.3
    s = sis_scores(X, 5 * X[:, 0])
    assert s[0] == pytest.approx(1.0, abs=1e-12)
    assert s[2] == 0.0


def _sirs_brute(X, y):
    n, p = X.shape
    Xs = (X - X.mean(0)) / X.std(0)
    out = np.zeros(p)
    for j in range(p):
        tot = 0.0
        for k in range(n):
            inner = sum(Xs[i, j] * (y[i] < y[k]) for i in range(n)) / n
            tot += inner**2
        out[j] = tot / n
    return out


def test_sirs_matches_double_loop(rng):
    X, y = rng.random((4, 3)), rng.normal(size=4)
    np.testing.assert_allclose(sirs_scores(X, y), _sirs_brute(X, y), atol=1e-14)
    # ties in y
    X, y = rng.random((9, 2)), rng.integers(0, 3, 9).astype(float)
    np.testing.assert_allclose(sirs_scores(X, y), _sirs_brute(X, y), atol=1e-14)


def test_sirs_monotone_invariance_and_constant(rng):
    X, y = rng.random((30, 5)), rng.normal(size=30)
    np.testing.assert_array_equal(sirs_scores(X, y), sirs_scores(X, y**3 + 2))
    np.testing.assert_array_equal(sirs_scores(X, np.ones(30)), 0.0)


def _dcor_brute(x, y):
    def dcov2(a, b):
        da = np.abs(a[:, None] - a[None, :])
        db = np.abs(b[:, None] - b[None, :])
        s1 = np.mean(da * db)
        s2 = da.mean() * db.mean()
        s3 = np.mean([da[i, l] * db[j, l] for i in range(len(a)) for j in range(len(a)) for l in range(len(a))])
        return s1 + s2 - 2 * s3

    return np.sqrt(dcov2(x, y) / np.sqrt(dcov2(x, x) * dcov2(y, y)))


def test_dcsis_matches_brute_force(rng):
    X, y = rng.random((5, 3)), rng.normal(size=5)
    expect = [_dcor_brute(X[:, j], y) for j in range(3)]
    np.testing.assert_allclose(dcsis_scores(X, y), expect, atol=1e-12)
    # chunking does not change the answer
    np.testing.assert_array_equal(dcsis_scores(X, y, chunk=1), dcsis_scores(X, y, chunk=3))


def test_dcsis_identity_and_degenerate(rng):
    X = rng.random((30, 2))
    assert dcsis_scores(X, X[:, 1])[1] == pytest.approx(1.0, abs=1e-10)
    np.testing.assert_array_equal(dcsis_scores(X, np.ones(30)), 0.0)
    X[:, 0] = 0.5
    assert dcsis_scores(X, rng.normal(size=30))[0] == 0.0


def test_dcsis_independent_noise_is_small():
    gen = np.random.default_rng(3)
    X, y = gen.random((10_000, 2)), gen.random(10_000)
    assert np.all(dcsis_scores(X, y) < 0.05)


def test_marginal_minimum_sizes(rng):
    with pytest.raises(InputError):
        sis_scores(rng.random((2, 3)), [1.0, 2.0])
    with pytest.raises(InputError):
        dcsis_scores(rng.random((3, 3)), [1.0, 2.0, 3.0])


def test_top_m_examples():
    assert top_m([0.1, 0.9, 0.5], 2).indices == (2, 3)
    assert top_m([0.3, 0.3, 0.3], 2).indices == (1, 2)
    assert top_m([0.3, 0.1, 0.2], 3).indices == (1, 2, 3)
    with pytest.raises(InputError):
        top_m([0.1], 2)


# ---------------------------------------------------------------- invariances


def _instance(seed):
    gen = np.random.default_rng(seed)
    n, p = int(gen.integers(12, 30)), int(gen.integers(4, 10))
    X = gen.random((n, p))
    y = X[:, 0] + 2 * X[:, 1] ** 2 + 0.3 * gen.normal(size=n)
    return gen, X, y


# 1000 cases split across the five screeners
CASES = {"sis": 250, "sirs": 250, "dcsis": 250, "lasso": 125, "foss": 125}


@pytest.mark.parametrize("method", list(CASES))
def test_column_permutation_equivariance(method):
    for seed in range(CASES[method]):
        gen, X, y = _instance(seed)
        p = X.shape[1]
        M = int(gen.integers(1, min(p, X.shape[0] - 1)))
        perm = gen.permutation(p)
        a = screen(X, y, M, method, SeededStream(seed), folds=3)
        b = screen(X[:, perm], y, M, method, SeededStream(seed), folds=3)
        mapped = VariableSet.of(int(perm[j - 1]) + 1 for j in b.selected)
        assert mapped == a.selected, (method, seed)


def _order(s):
    return np.lexsort((np.arange(len(s)), -np.round(s, 12)))


@pytest.mark.parametrize("fn", [sis_scores, dcsis_scores])
def test_affine_response_rank_invariance(fn):
    for seed in range(100):
        gen, X, y = _instance(seed)
        a, c = float(gen.choice([-1, 1]) * gen.uniform(0.1, 10)), float(gen.normal())
        np.testing.assert_array_equal(_order(fn(X, y)), _order(fn(X, a * y + c)))


def test_sirs_monotone_rank_invariance():
    for seed in range(100):
        _, X, y = _instance(seed)
        for g in (np.exp, lambda v: v**3 + 2, np.arctan):
            np.testing.assert_array_equal(_order(sirs_scores(X, y)), _order(sirs_scores(X, g(y))))


# ---------------------------------------------------------------- Lasso


def test_lambda_max_kills_everything(rng):
    X, y = rng.random((30, 6)), rng.normal(size=30)
    lm = lambda_max(X, y)
    for fit in lasso_path(X, y, [lm * 2, lm]):
        assert not np.any(fit.coefficients) and len(fit.active) == 0
    assert len(lasso_path(X, y, [lm * 0.9])[0].active) >= 1


def test_single_column_soft_threshold(rng):
    x = rng.random((40, 1))
    y = 3 * x[:, 0] + rng.normal(size=40)
    xs = (x[:, 0] - x.mean()) / x.std()
    z = xs @ (y - y.mean()) / 40
    for lam in (abs(z) * 0.8, abs(z) * 0.3, abs(z) * 0.01):
        fit = lasso_path(x, y, [lam])[0]
        expect = np.sign(z) * max(abs(z) - lam, 0.0) / x.std()
        assert fit.coefficients[0] == pytest.approx(expect, abs=1e-9)


def test_path_kkt_and_active_growth():
    gen = np.random.default_rng(11)
    X = gen.random((60, 40))
    y = X[:, :5] @ np.arange(1, 6) + gen.normal(size=60)
    fits = lasso_path(X, y)
    assert len(fits) == 100
    assert max(kkt_residual(X, y, f) for f in fits) < 1e-6
    sizes = np.array([len(f.active) for f in fits])
    assert np.mean(np.diff(sizes) >= 0) >= 0.95


@pytest.mark.parametrize("shape", [(100, 200), (50, 100), (30, 5)])
def test_kkt_on_cv_fits(shape):
    gen = np.random.default_rng(shape[1])
    for r in range(5):
        X = gen.random(shape)
        y = np.sin(3 * X[:, 0]) + X[:, 1] * X[:, 2] + 0.1 * gen.normal(size=shape[0])
        cv = lasso_cv(X, y, 10, SeededStream(r))
        assert kkt_residual(X, y, cv.fit) < 1e-6


def test_grid_must_decrease(rng):
    X, y = rng.random((10, 3)), rng.normal(size=10)
    with pytest.raises(InputError):
        lasso_path(X, y, [0.1, 0.2])


def test_lasso_exact_sparse_recovery():
    gen = np.random.default_rng(4)
    X = gen.random((200, 20))
    y = 2 * X[:, 0] - 3 * X[:, 2]
    out = lasso_screen(X, y, 2, 10, SeededStream(1))
    assert out.selected.indices == (1, 3)


def test_lasso_single_column(rng):
    x = rng.random((20, 1))
    out = lasso_screen(x, x[:, 0] + 0.1 * rng.normal(size=20), 1, 5, SeededStream(0))
    assert out.selected.indices == (1,)
    # pure noise: the padded selection is {1} whatever the penalty
    out = lasso_screen(x, rng.normal(size=20), 1, 5, SeededStream(0), pad=True)
    assert out.selected.indices == (1,)


def test_lasso_trims_and_pads(rng):
    X = rng.random((80, 30))
    y = X[:, :10] @ np.linspace(1, 3, 10)
    out = lasso_screen(X, y, 4, 5, SeededStream(2))
    assert len(out.selected) == 4 and out.info["active_size"] > 4
    big = np.abs(out.scores)
    assert min(big[j - 1] for j in out.selected) >= np.sort(big)[-4]
    noise = rng.normal(size=80)
    assert len(lasso_screen(X, noise, 10, 5, SeededStream(2), pad=True).selected) == 10


def test_lasso_cv_deterministic(rng):
    X, y = rng.random((40, 30)), rng.normal(size=40)
    a, b = lasso_cv(X, y, 5, SeededStream(9)), lasso_cv(X, y, 5, SeededStream(9))
    np.testing.assert_array_equal(a.cv_error, b.cv_error)
    np.testing.assert_array_equal(a.fit.coefficients, b.fit.coefficients)


# ---------------------------------------------------------------- FOSS


def _swap_gain(X, y, S):
    """Largest RSS decrease from any single exchange, by brute force."""
    cur = subset_rss(X, y, S)
    best = 0.0
    for i in S:
        for j in set(range(X.shape[1])) - set(S):
            best = max(best, cur - subset_rss(X, y, [k for k in S if k != i] + [j]))
    return best


def test_foss_local_optimality_and_monotone():
    for seed in range(10):
        gen = np.random.default_rng(seed)
        X = gen.random((30, 12))
        y = X[:, 0] - X[:, 3] + X[:, 5] * X[:, 7] + 0.2 * gen.normal(size=30)
        out = foss_screen(X, y, 4, [12, 11])
        S = list(out.selected.zero_based())
        assert _swap_gain(X, y, S) <= 1e-10
        h = out.info["rss_history"]
        assert all(b < a for a, b in zip(h, h[1:]))
        assert out.info["rss"] <= out.info["init_rss"] + 1e-10
        assert out.info["rss"] == pytest.approx(subset_rss(X, y, S), rel=1e-12)


def test_foss_full_set(rng):
    X, y = rng.random((20, 5)), rng.normal(size=20)
    out = foss_screen(X, y, 5)
    assert out.selected == VariableSet.full(5)
    Z = np.column_stack([np.ones(20), X])
    r = y - Z @ np.linalg.lstsq(Z, y, rcond=None)[0]
    assert out.info["rss"] == pytest.approx(r @ r, rel=1e-10)


def test_foss_errors(rng):
    X, y = rng.random((6, 10)), rng.normal(size=6)
    with pytest.raises(InputError):
        foss_screen(X, y, 6)
    with pytest.raises(InputError):
        foss_screen(X, y, 2, [11])


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6))
def test_foss_never_worse_than_padded_init(seed):
    gen = np.random.default_rng(seed)
    X = gen.random((25, 15))
    y = gen.normal(size=25)
    init = list(gen.choice(15, 3, replace=False) + 1)
    out = foss_screen(X, y, 5, init)
    assert out.info["rss"] <= out.info["init_rss"] + 1e-10


def test_exhaustive_examples(rng):
    X = rng.random((20, 5))
    assert exhaustive_best_subset(X, X[:, 1], 1).indices == (2,)
    assert exhaustive_best_subset(X, rng.normal(size=20), 5) == VariableSet.full(5)
    X6, y6 = rng.random((30, 6)), rng.normal(size=30)
    assert exhaustive_best_subset(X6, y6, 2) == exhaustive_best_subset(X6, y6, 2, reverse=True)


def test_exhaustive_matches_enumeration(rng):
    X, y = rng.random((30, 6)), rng.normal(size=30)
    best = min(itertools.combinations(range(6), 3), key=lambda S: subset_rss(X, y, S))
    assert exhaustive_best_subset(X, y, 3).zero_based().tolist() == list(best)


def test_exhaustive_tie_is_lexicographic(rng):
    X = rng.random((15, 4))
    X[:, 3] = X[:, 1]
    assert exhaustive_best_subset(X, X[:, 1], 1).indices == (2,)
    assert exhaustive_best_subset(X, X[:, 1], 1, reverse=True).indices == (2,)


def test_exhaustive_limit():
    with pytest.raises(TooManySubsets):
        exhaustive_best_subset(np.random.default_rng(0).random((50, 40)), np.zeros(50), 10)


def test_screen_dispatch(rng):
    X, y = rng.random((30, 10)), rng.normal(size=30)
    with pytest.raises(InputError):
        screen(X, y, 3, "elastic")
    with pytest.raises(InputError):
        screen(X, y, 11, "sis")
    assert screen(X, y, 3, "L-SIS").method == "sis"
    out = screen(X, y, 3, "foss", SeededStream(1), folds=5)
    assert len(out.selected) == 3 and "active_size" in out.info


@pytest.mark.slow
def test_foss_not_behind_lasso_on_yang():
    c = named_report("yang").coverage
    assert c["foss"] >= c["lasso"] - 0.02
