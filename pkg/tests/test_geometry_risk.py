import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate, stats

from hdgauss.classifiers import LdaRule, fit_diag_qda
from hdgauss.experiments import embed_geometry
from hdgauss.gaussian import ClassificationProblem, optimal_frontier
from hdgauss.geometry import PlaneGeometry, learning_error_lda_2d, plane_geometry, wedge_mass
from hdgauss.risk import (affine_risks, draw_training_set, expected_risk_sweep,
                          monte_carlo_risks, weighted_risk_affine)

from conftest import random_spd


def oracle_learning_error(g, gh, alpha, d0):
    """1-D conditional integral; alpha may be negative (mirrored plane)."""
    c, s = np.cos(alpha), np.sin(alpha)
    kappa = d0 / gh
    # class 1: a >= 0 and c a + s b < kappa; class 0: a < 0 and c a + s b >= kappa
    def hat_prob(a):
        t = (kappa - c * a) / abs(s)
        return stats.norm.sf(t)
    p1 = integrate.quad(lambda a: stats.norm.pdf(a - g / 2) * stats.norm.cdf(
        (kappa - c * a) / abs(s)), 0, np.inf, epsabs=1e-13, epsrel=1e-12)[0]
    p0 = integrate.quad(lambda a: stats.norm.pdf(a + g / 2) * hat_prob(a), -np.inf, 0,
                        epsabs=1e-13, epsrel=1e-12)[0]
    return 0.5 * p1 + 0.5 * p0


def test_learning_error_examples():
    assert learning_error_lda_2d(PlaneGeometry(2.0, 1.0, 0.0, 0.0)) == 0.0
    assert learning_error_lda_2d(PlaneGeometry(0.0, 1.0, np.pi / 2, 0.0)) == pytest.approx(
        0.25, abs=1e-12)
    for a in (0.3, 1.0, 2.5):
        assert learning_error_lda_2d(PlaneGeometry(0.0, 1.0, a, 0.0)) == pytest.approx(
            a / (2 * np.pi), abs=1e-12)


@given(st.floats(0, 5), st.floats(0.2, 3), st.floats(0.01, np.pi - 0.01), st.floats(-3, 3))
def test_learning_error_matches_oracle_and_mirror(g, gh, alpha, ratio):
    d0 = ratio * gh
    r = learning_error_lda_2d(PlaneGeometry(g, gh, alpha, d0))
    assert r == pytest.approx(oracle_learning_error(g, gh, alpha, d0), abs=1e-9)
    assert r == pytest.approx(oracle_learning_error(g, gh, -alpha, d0), abs=1e-9)
    assert 0.0 <= r <= 1.0


def test_collinear_cases_match_oracle_limit():
    for alpha in (0.0, np.pi):
        for d0 in (-0.7, 0.0, 0.4):
            r = learning_error_lda_2d(PlaneGeometry(1.5, 2.0, alpha, d0))
            near = learning_error_lda_2d(PlaneGeometry(1.5, 2.0, abs(alpha - 1e-7) if alpha else 1e-7, d0))
            assert r == pytest.approx(near, abs=1e-6)


def test_wedge_mass_full_plane_quadrants():
    assert wedge_mass([0, 0], [0, 0], 0, np.pi / 2) == pytest.approx(0.25, abs=1e-13)
    assert wedge_mass([0, 0], [0, 0], 0, 2 * np.pi) == pytest.approx(1.0, abs=1e-12)
    # half-plane {x >= 1} from apex (1, 0)
    assert wedge_mass([1, 0], [0, 0], -np.pi / 2, np.pi / 2) == pytest.approx(
        stats.norm.sf(1), abs=1e-12)


def test_plane_geometry_from_embedding():
    prob, rule = embed_geometry(1.7, 0.8, 1.1, 0.3, 7, 5)
    geom = plane_geometry(optimal_frontier(prob), rule, prob.cov)
    assert geom.g_norm == pytest.approx(1.7) and geom.ghat_norm == pytest.approx(0.8)
    assert geom.alpha == pytest.approx(1.1) and geom.d0 == pytest.approx(0.3)
    assert geom.e_perp == pytest.approx(0.8 * np.sin(1.1))
    assert np.allclose(geom.y_plus, [0.3 / geom.e_perp, 0.85])
    assert np.allclose(geom.y_minus, geom.y_plus - [0, 1.7])
    assert geom.u == pytest.approx(np.tan(1.1) * 0.3 / geom.e_perp)


def test_weighted_risk_examples():
    prob = ClassificationProblem.shared([1, 0], [-1, 0], np.eye(2))
    f = optimal_frontier(prob)
    assert weighted_risk_affine(f, prob) == pytest.approx(0.15865525393145707, abs=1e-15)
    assert weighted_risk_affine(LdaRule([0, 0], [0, 0]), prob) == 0.5
    assert weighted_risk_affine(LdaRule(-f.normal, f.center), prob) == pytest.approx(
        0.8413447460685429, abs=1e-15)


def test_monte_carlo_examples():
    prob = ClassificationProblem.shared([1, 0, 0], [-1, 0, 0], np.eye(3))
    f = optimal_frontier(prob)
    rep = monte_carlo_risks(f, prob, 200_000, 1, project="none")
    assert rep.learning_error == 0.0 and rep.excess == 0.0
    flip = LdaRule(-f.normal, f.center)
    rep = monte_carlo_risks(flip, prob, 10**6, 2, project="none")
    assert abs(rep.learning_error - 0.841345) <= 3 * rep.learning_std_error
    assert rep.excess <= rep.learning_error


def test_monte_carlo_deterministic_across_workers(monkeypatch):
    rng = np.random.default_rng(3)
    prob = ClassificationProblem.shared(rng.normal(size=4), rng.normal(size=4), random_spd(rng, 4))
    rule = LdaRule(rng.normal(size=4), rng.normal(size=4))
    a = monte_carlo_risks(rule, prob, 300_000, 9, project="none", workers=1)
    b = monte_carlo_risks(rule, prob, 300_000, 9, project="none", workers=4)
    monkeypatch.setenv("HDGAUSS_THREADS", "2")
    c = monte_carlo_risks(rule, prob, 300_000, 9, project="none")
    assert a == b == c


@given(st.integers(0, 10**6))
def test_excess_never_exceeds_learning_error(seed):
    rng = np.random.default_rng(seed)
    p = 3
    prob = ClassificationProblem.general(rng.normal(size=p), random_spd(rng, p),
                                         rng.normal(size=p), random_spd(rng, p))
    data = draw_training_set(prob, 20, seed)
    rule = fit_diag_qda(data, 0.3)
    rep = monte_carlo_risks(rule, prob, 20_000, seed)
    assert rep.excess <= rep.learning_error


def test_projection_matches_full_sampling():
    prob, rule = embed_geometry(2.0, 1.3, 0.9, -0.4, 12, 1)
    a = monte_carlo_risks(rule, prob, 10**6, 5)
    b = monte_carlo_risks(rule, prob, 10**6, 5, project="none")
    exact = affine_risks(rule, prob)
    for rep in (a, b):
        assert abs(rep.weighted_risk - exact.weighted_risk) <= 3 * rep.mc_std_error
        assert abs(rep.learning_error - exact.learning_error) <= max(1e-3, 3 * rep.learning_std_error)


@given(st.integers(0, 10**6), st.floats(0.01, 100))
def test_dilation_invariance(seed, beta):
    rng = np.random.default_rng(seed)
    prob = ClassificationProblem.shared(rng.normal(size=3), rng.normal(size=3), random_spd(rng, 3))
    rule = LdaRule(rng.normal(size=3), rng.normal(size=3))
    a, b = affine_risks(rule, prob), affine_risks(rule.scaled(beta), prob)
    assert a.weighted_risk == pytest.approx(b.weighted_risk, abs=1e-12)
    assert a.learning_error == pytest.approx(b.learning_error, abs=1e-10)


def test_sweep_deterministic():
    prob = ClassificationProblem.shared([0.5, 0, 0], [-0.5, 0, 0], np.eye(3))
    from hdgauss.classifiers import fit_naive_lda
    fit = lambda data, pr: fit_naive_lda(data, pr.cov)
    a = expected_risk_sweep(fit, prob, [8, 16], 1, 3)
    b = expected_risk_sweep(fit, prob, [8, 16], 1, 3)
    assert a == b
    assert [r["n"] for r in a[0]] == [8, 16]
