import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from hdgauss.classifiers import (DegenerateFeatureError, LabeledDataset,
                                 LdaRule, bh_select, classify, fit_diag_qda,
                                 fit_fisher_pseudo, fit_lda_fdr_known_cov,
                                 fit_naive_lda, pooled_covariance)
from hdgauss.gaussian import ClassificationProblem, angle_alpha, optimal_frontier
from hdgauss.risk import draw_training_set


def test_bh_hand_example():
    res = bh_select([5.0, 0.1, -0.2], [1, 1, 1], 0.05)
    assert res.k_fdr == 1 and res.selected == (0,)
    assert res.threshold == 5.0
    # rank-1 threshold z(0.05/6) from the quantile oracle
    assert stats.norm.isf(0.05 / 6) == pytest.approx(2.394, abs=1e-3)


def test_bh_edges():
    res = bh_select(np.zeros(4), np.ones(4), 0.01)
    assert res.k_fdr == 0 and res.selected == () and res.threshold == np.inf
    for b in (1e-6, 0.2, 0.49):
        assert bh_select([100, 100, 100], [1, 1, 1], b).selected == (0, 1, 2)
    with pytest.raises(ValueError):
        bh_select([1.0], [0.0], 0.1)
    with pytest.raises(ValueError):
        bh_select([1.0], [1.0], 0.5)
    with pytest.raises(ValueError):
        bh_select([np.nan], [1.0], 0.1)


@given(st.integers(0, 10**6), st.floats(0.001, 0.2), st.floats(1.0, 2.4))
def test_bh_monotone_and_equivariant(seed, b, factor):
    rng = np.random.default_rng(seed)
    t = rng.normal(size=40) * rng.choice([0.5, 4.0], 40)
    sd = rng.uniform(0.5, 2.0, 40)
    small = bh_select(t, sd, b)
    big = bh_select(t, sd, min(b * factor, 0.499))
    assert set(small.selected) <= set(big.selected)
    assert len(small.selected) == small.k_fdr
    perm = rng.permutation(40)
    permuted = bh_select(t[perm], sd[perm], b)
    assert sorted(perm[list(permuted.selected)]) == list(small.selected)
    if small.k_fdr:
        assert np.all(np.abs(t / sd)[list(small.selected)] >= small.std_threshold)


def test_bh_fdr_under_full_null():
    rng = np.random.default_rng(5)
    fdp = [bh_select(rng.standard_normal(500), 1.0, 0.01).k_fdr > 0 for _ in range(400)]
    # under the full null FDP is 1 when anything is selected, 0 otherwise
    m = np.mean(fdp)
    assert m <= 0.01 + 3 * np.sqrt(0.01 * 0.99 / 400)


def test_fdr_lda_finds_large_coordinates():
    p = 100
    m = np.zeros(p)
    m[[3, 17, 42, 64, 90]] = 3.0
    prob = ClassificationProblem.shared(m / 2, -m / 2, np.eye(p))
    hits = 0
    for seed in range(50):
        rule = fit_lda_fdr_known_cov(draw_training_set(prob, 60, seed), np.eye(p))
        hits += {3, 17, 42, 64, 90} <= set(rule.selected)
        off = np.setdiff1d(np.arange(p), rule.selected)
        assert np.all(rule.normal[off] == 0)
    assert hits >= 49


def test_fdr_lda_edge_cases():
    x = np.ones((2, 3))
    rule = fit_lda_fdr_known_cov(LabeledDataset(x, [1, 0]), np.eye(3))
    assert rule.degenerate and np.all(classify(rule, np.random.default_rng(0).normal(size=(4, 3))) == 1)
    data = LabeledDataset.from_classes(np.ones((200, 1)) * 0.5, -np.ones((200, 1)) * 0.5)
    assert fit_lda_fdr_known_cov(data, np.eye(1)).selected == (0,)
    with pytest.raises(ValueError, match="n1=0"):
        fit_lda_fdr_known_cov(LabeledDataset(x, [0, 0]), np.eye(3))
    with pytest.raises(ValueError):
        fit_lda_fdr_known_cov(data, np.eye(1), b_p=0.6)


def test_holdout_center_uses_other_half():
    rng = np.random.default_rng(1)
    data = LabeledDataset.from_classes(rng.normal(size=(10, 3)) + 1, rng.normal(size=(10, 3)))
    rule = fit_lda_fdr_known_cov(data, np.eye(3), holdout_center=True, b_p=0.2)
    expected = 0.5 * (data.rows(1)[5:].mean(axis=0) + data.rows(0)[5:].mean(axis=0))
    assert np.allclose(rule.center, expected)


def test_diag_qda_variance_only():
    rng = np.random.default_rng(11)
    x1 = rng.normal(size=(200, 20))
    x1[:, 0] *= 2.0
    x0 = rng.normal(size=(200, 20))
    rule = fit_diag_qda(LabeledDataset.from_classes(x1, x0), 0.01)
    assert 0 in rule.var_selected and rule.mean_selected == ()
    assert not rule.is_affine
    assert np.count_nonzero(rule.a_hat) == len(rule.var_selected)


def test_diag_qda_formulas_by_hand():
    rng = np.random.default_rng(2)
    x1 = rng.normal(size=(30, 3)) * [1, 3, 1] + [4, 0, 0]
    x0 = rng.normal(size=(30, 3))
    rule = fit_diag_qda(LabeledDataset.from_classes(x1, x0), 0.05)
    v1, v0 = x1.var(axis=0, ddof=1), x0.var(axis=0, ddof=1)
    d = x1.mean(axis=0) - x0.mean(axis=0)
    for q in rule.mean_selected:
        assert rule.g_hat[q] == pytest.approx(0.5 * (1 / v1[q] + 1 / v0[q]) * d[q])
    off = 0.0
    for q in rule.var_selected:
        a = 1 / v1[q] - 1 / v0[q]
        assert rule.a_hat[q] == pytest.approx(a)
        off += a * d[q] ** 2 / 8 + 0.5 * np.log(v1[q] / v0[q])
    assert rule.offset == pytest.approx(off)
    x = rng.normal(size=(7, 3))
    assert np.allclose(rule.value(x), rule.frontier().value(x))


def test_diag_qda_null_and_affine_reduction():
    rng = np.random.default_rng(3)
    frac = []
    for _ in range(200):
        data = LabeledDataset(rng.normal(size=(40, 50)), np.repeat([1, 0], 20))
        rule = fit_diag_qda(data, 0.01)
        frac.append((len(rule.mean_selected) + len(rule.var_selected)) / 100)
        if rule.is_affine:
            assert rule.offset == 0.0
    assert np.mean(frac) <= 0.01


def test_diag_qda_empty_selection_is_constant():
    data = LabeledDataset(np.random.default_rng(0).normal(size=(6, 2)), [1, 1, 1, 0, 0, 0])
    rule = fit_diag_qda(data, 1e-9)
    assert rule.mean_selected == () and rule.var_selected == ()
    assert np.all(classify(rule, np.random.default_rng(1).normal(size=(10, 2))) == 1)


def test_diag_qda_degenerate_feature():
    x = np.random.default_rng(0).normal(size=(6, 3))
    x[:3, 1] = 2.0
    with pytest.raises(DegenerateFeatureError, match="coordinate 1"):
        fit_diag_qda(LabeledDataset(x, [1, 1, 1, 0, 0, 0]))


def test_fisher_pseudo_examples():
    data = LabeledDataset([[1.0], [3.0], [0.0], [-2.0]], [1, 1, 0, 0])
    v = pooled_covariance(data)[0, 0]
    assert v == pytest.approx((1 + 1 + 1 + 1) / 4)
    assert fit_fisher_pseudo(data).normal[0] == pytest.approx(3.0 / v)
    same = LabeledDataset(np.ones((4, 3)), [1, 1, 0, 0])
    assert np.all(fit_fisher_pseudo(same).normal == 0)


def test_fisher_pseudo_angle_at_desk_scale():
    p, r = 200, 2.0
    m = np.zeros(p)
    m[0] = r
    prob = ClassificationProblem.shared(m / 2, -m / 2, np.eye(p))
    f = optimal_frontier(prob).normal
    angles = [angle_alpha(f, fit_fisher_pseudo(draw_training_set(prob, 20, s)).normal,
                          np.eye(p)) for s in range(30)]
    assert np.mean(angles) >= np.arccos(np.sqrt(20 / 200))


def test_naive_lda():
    rng = np.random.default_rng(4)
    cov = np.array([[2.0, 0.3], [0.3, 1.0]])
    prob = ClassificationProblem.shared([1, 0.5], [-1, 0], cov)
    rule = fit_naive_lda(draw_training_set(prob, 10**6, 9), cov)
    f = optimal_frontier(prob).normal
    assert np.linalg.norm(rule.normal - f) <= 0.01 * np.linalg.norm(f)
    x1, x0 = rng.normal(size=(1, 2)), rng.normal(size=(1, 2))
    one = fit_naive_lda(LabeledDataset.from_classes(x1, x0), cov)
    assert np.allclose(one.normal, np.linalg.solve(cov, (x1 - x0)[0]))


def test_classify_ties_and_bayes():
    prob = ClassificationProblem.shared([1, 0], [-1, 0], np.eye(2))
    f = optimal_frontier(prob)
    assert classify(f, [1, 0]) == 1 and classify(f, [0, 0]) == 1
    assert classify(f, [-0.1, 5]) == 0
    with pytest.raises(ValueError, match="dimension"):
        classify(f, [1, 2, 3])


@given(st.integers(0, 10**6), st.floats(1e-3, 1e3))
def test_classify_scale_invariant(seed, beta):
    rng = np.random.default_rng(seed)
    rule = LdaRule(rng.normal(size=5), rng.normal(size=5))
    x = rng.normal(size=(50, 5))
    assert np.array_equal(classify(rule, x), classify(rule.scaled(beta), x))


def test_dataset_validation():
    with pytest.raises(ValueError, match="row 1"):
        LabeledDataset(np.zeros((2, 2)), [1, 2])
    with pytest.raises(ValueError):
        LabeledDataset(np.zeros((2, 2)), [1])
