import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate, stats

from hdgauss.concentration import (DivergenceError, InapplicableBoundError, QuadChaos,
                                   chaos_from_quadratic, chaos_of_difference,
                                   chaos_sample, domain_decomposition_bound,
                                   gaussian_half_line_expectation, laurent_massart_check,
                                   lipschitz_check, lipschitz_tail_bound,
                                   perturbation_bound, small_ball_bound_3,
                                   small_ball_bound_two_roots,
                                   small_ball_exponents, small_ball_probability,
                                   symmetric_difference_mc)
from hdgauss.gaussian import GaussianMeasure, QuadraticFrontier

from conftest import random_spd


def test_chaos_derived_quantities():
    q = QuadChaos(1.0, [3.0, -4.0], [0.5, -2.0, 1.0])
    assert q.n1 == 4 and q.n2 == 2
    assert q.sigma == pytest.approx(np.sqrt(2 * (0.25 + 4 + 1) + 9 + 16))
    with pytest.raises(ValueError):
        QuadChaos(np.inf, [], [])


def test_chaos_sample_examples():
    assert np.all(chaos_sample(QuadChaos(5.0, [], []), 100, 1) == 5.0)
    x = chaos_sample(QuadChaos(0.0, [3.0, 4.0], []), 10**6, 2)
    assert x.std() == pytest.approx(5.0, rel=0.01)
    assert np.array_equal(chaos_sample(QuadChaos(0.3, [1.0], [2.0]), 1000, [4, 5]),
                          chaos_sample(QuadChaos(0.3, [1.0], [2.0]), 1000, [4, 5]))


@given(st.integers(0, 10**6))
def test_chaos_sample_moments(seed):
    rng = np.random.default_rng(seed)
    q = QuadChaos(rng.normal(), rng.normal(size=3), rng.normal(size=4))
    n = 200_000
    x = chaos_sample(q, n, seed)
    assert abs(x.mean() - q.mean) <= 4 * q.sigma / np.sqrt(n)
    # variance band from the fourth moment of the sample
    var_se = np.sqrt(np.mean((x - x.mean()) ** 4) / n)
    assert abs(x.var() - q.sigma**2) <= 4 * var_se


def test_chaos_from_quadratic_matches_direct_values(rng):
    p = 3
    a = rng.normal(size=(p, p))
    f = QuadraticFrontier(a + a.T, rng.normal(size=p), rng.normal(size=p), 0.4)
    mean, cov = rng.normal(size=p), random_spd(rng, p)
    q = chaos_from_quadratic(f, mean, cov)
    x = GaussianMeasure(mean, cov).from_standard(rng.standard_normal((300_000, p)))
    v = f.value(x)
    assert q.mean == pytest.approx(v.mean(), abs=4 * v.std() / np.sqrt(v.size))
    assert q.sigma == pytest.approx(v.std(), rel=0.02)
    f2 = QuadraticFrontier(f.quad, f.linear + 1, f.center, 0.0)
    d = chaos_of_difference(f2, f, mean, cov)
    assert np.allclose(d.quad_coeffs, 0, atol=1e-12)


def test_small_ball_3_examples():
    q = QuadChaos(0.0, [], [1.0])
    assert small_ball_bound_3(q, 0.0) == 0
    assert small_ball_bound_3(q, 0.1) == pytest.approx(np.sqrt(0.1 / np.pi))
    assert small_ball_bound_3(q, 0.4) == pytest.approx(2 * small_ball_bound_3(q, 0.1))
    probs, ses = small_ball_probability(q, [0.1], 10**6, 3)
    oracle = stats.chi2.cdf(1.1, 1) - stats.chi2.cdf(0.9, 1)
    assert oracle == pytest.approx(0.04852, abs=1e-5)
    assert abs(probs[0] - oracle) <= 3 * ses[0]
    with pytest.raises(InapplicableBoundError):
        small_ball_bound_3(QuadChaos(1.0, [1.0], []), 0.1)


@given(st.integers(0, 10**6))
def test_small_ball_3_holds(seed):
    rng = np.random.default_rng(seed)
    q = QuadChaos(rng.normal(), rng.normal(size=2), rng.normal(size=3))
    eps = np.array([1e-3, 1e-2, 0.1, 1.0])
    probs, ses = small_ball_probability(q, eps, 100_000, seed)
    for e, pr, se in zip(eps, probs, ses):
        assert pr <= small_ball_bound_two_roots(q, e) + 3 * se + 1e-12


def test_small_ball_3_fails_for_square():
    """q = xi^2: P(xi^2 <= eps) ~ sqrt(2 eps/pi) exceeds sqrt(eps/pi)."""
    q = QuadChaos(1.0, [], [1.0])
    eps = 0.01
    exact = stats.chi2.cdf(eps, 1)
    assert exact == pytest.approx(0.0797, abs=1e-4)
    assert exact > small_ball_bound_3(q, eps)
    assert exact <= small_ball_bound_two_roots(q, eps)


def test_small_ball_exponents_table():
    eps = np.array([0.5, 0.1, 0.01, 0.001])
    q = QuadChaos(-1.0, [], [1.0])  # xi^2 - 2
    rows = small_ball_exponents([q, QuadChaos(0.0, [], [1.0])], eps, 10**6, 7)
    first = [r for r in rows if r["family_index"] == 0]
    oracle = stats.chi2.cdf(2.5, 1) - stats.chi2.cdf(1.5, 1)
    assert oracle == pytest.approx(0.10683, abs=1e-5)
    assert abs(first[0]["probability"] - oracle) <= 3 * first[0]["std_error"]
    probs = [r["probability"] for r in first]
    assert probs == sorted(probs, reverse=True)
    # point-3 sharpness: P(|xi^2 - 1| <= eps)/sqrt(eps) -> 2 f_chi2(1) sqrt(eps)/sqrt(eps) ~ const
    second = [r for r in rows if r["family_index"] == 1]
    for r in second:
        assert r["probability"] <= r["envelope_point3"] + 1e-15


def test_laurent_massart_examples():
    rows = laurent_massart_check([1.0], [2.0], 10**6, 1)
    assert rows[0]["upper_tail"] <= np.exp(-2) + 3 * rows[0]["upper_se"]
    rows = laurent_massart_check([1.0], [0.0], 10**5, 1)
    assert rows[0]["bound"] == 1.0
    d = np.ones(100) / 10
    r = laurent_massart_check(d, [3.0], 10**6, 2)[0]
    assert r["upper_tail"] <= np.exp(-4.5) + 3 * r["upper_se"]
    assert r["lower_tail"] <= np.exp(-4.5) + 3 * r["lower_se"]
    with pytest.raises(ValueError):
        laurent_massart_check([1.0, -1.0], [1.0], 10, 0)


def test_lipschitz_examples():
    assert lipschitz_tail_bound(1.0, 3.0) == pytest.approx(2 * np.exp(-4.5))
    assert lipschitz_tail_bound(1.0, 0.0) == 2.0
    assert lipschitz_tail_bound(2.0, 6.0) == lipschitz_tail_bound(1.0, 3.0)
    assert 2 * stats.norm.cdf(-3) <= lipschitz_tail_bound(1.0, 3.0)
    a = np.array([1.0, 2.0, 2.0])
    rows = lipschitz_check(lambda x: x @ a, 3.0, 3, [1.5, 3.0, 9.0], 10**6, 4, center=0.0)
    for r in rows:
        exact = 2 * stats.norm.sf(r["s"] / 3.0)
        assert abs(r["tail"] - exact) <= 4 * r["se"] + 1e-12
        assert r["tail"] <= r["bound"] + 3 * r["se"]


def test_half_line_expectation_oracle():
    g = lambda x: (x / np.sqrt(0.5) + 1) ** 0.5
    oracle = 2 * integrate.quad(lambda x: g(x) * stats.norm.pdf(x), 0, np.inf)[0]
    assert gaussian_half_line_expectation(g) == pytest.approx(oracle, rel=1e-10)
    assert gaussian_half_line_expectation(lambda x: x**4) == pytest.approx(3.0, rel=1e-10)
    with pytest.raises(DivergenceError):
        gaussian_half_line_expectation(lambda x: np.exp(x * x))


def test_domain_decomposition_examples():
    assert domain_decomposition_bound(lambda s: 0 * s, 1, 1, 1, 1, 0.0, 0.5) == 0.0
    q = 0.5
    expect = 2 * integrate.quad(lambda x: (x / np.sqrt(1 - q) + 1) ** 0.5 * stats.norm.pdf(x),
                                0, np.inf)[0]
    oracle = np.sqrt(2 * np.pi / (1 - q)) * 0.5 * expect
    assert domain_decomposition_bound(lambda s: s, 1, 1, 1, 1, 0.0, q) == pytest.approx(
        oracle, rel=1e-9)
    vals = [domain_decomposition_bound(lambda s: s, c0, 1, 1, 1, m, q)
            for c0, m in ((1, 0), (1, 0.5), (2, 0.5))]
    assert vals == sorted(vals)
    with pytest.raises(DivergenceError):
        domain_decomposition_bound(lambda s: np.exp(s * s), 1, 1, 1, 4, 0.0, 0.5)


def test_perturbation_pipeline():
    rng = np.random.default_rng(8)
    p = 5
    f = QuadraticFrontier(np.diag(rng.uniform(0.5, 1.5, p)), rng.normal(size=p), np.zeros(p), 0.2)
    measure = GaussianMeasure(np.zeros(p), np.eye(p))
    b = rng.normal(size=(p, p))
    mc, bounds = [], []
    for eps in (0.1, 0.01, 0.001):
        fh = QuadraticFrontier(f.quad + eps * (b + b.T), f.linear + eps, f.center, 0.2 + eps)
        mc.append(symmetric_difference_mc(f, fh, measure, 400_000, 3)[0])
        bounds.append(perturbation_bound(f, fh, measure.mean, measure.covariance).bound)
    assert mc == sorted(mc, reverse=True)
    assert all(m <= b for m, b in zip(mc, bounds))
    with pytest.raises(InapplicableBoundError):
        perturbation_bound(QuadraticFrontier(np.zeros((p, p)), np.ones(p), np.zeros(p)),
                           f, measure.mean, measure.covariance)
