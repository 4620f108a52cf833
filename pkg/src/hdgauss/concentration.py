"""Order-two Gaussian chaos: sampling, small-ball and tail bounds, and the
domain-decomposition bound on the Gaussian mass of V_f symmetric-difference V_{f+delta}.

A chaos is q = c + sum_i alpha_i xi_i + sum_i beta_i (xi_i^2 - 1) with xi_i
i.i.d. standard normal.
"""

from dataclasses import dataclass

import warnings

import numpy as np
from scipy import integrate, stats

from . import linalg

CHUNK_ROWS = 1 << 15


class InapplicableBoundError(ValueError):
    """The bound's hypotheses cannot hold for this input."""


class DivergenceError(RuntimeError):
    """A Gaussian expectation does not converge numerically."""


@dataclass(frozen=True, eq=False)
class QuadChaos:
    constant: float
    linear_coeffs: np.ndarray
    quad_coeffs: np.ndarray

    def __post_init__(self):
        a = np.atleast_1d(np.asarray(self.linear_coeffs, dtype=float))
        b = np.atleast_1d(np.asarray(self.quad_coeffs, dtype=float))
        if a.ndim != 1 or b.ndim != 1:
            raise ValueError("chaos coefficients must be vectors")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))
                and np.isfinite(self.constant)):
            raise ValueError("chaos coefficients must be finite")
        object.__setattr__(self, "constant", float(self.constant))
        object.__setattr__(self, "linear_coeffs", a)
        object.__setattr__(self, "quad_coeffs", b)

    @property
    def length(self):
        return max(self.linear_coeffs.size, self.quad_coeffs.size)

    def _padded(self):
        k = self.length
        a = np.zeros(k)
        b = np.zeros(k)
        a[:self.linear_coeffs.size] = self.linear_coeffs
        b[:self.quad_coeffs.size] = self.quad_coeffs
        return a, b

    @property
    def n1(self):
        return float(np.max(np.abs(self.linear_coeffs), initial=0.0))

    @property
    def n2(self):
        return float(np.max(np.abs(self.quad_coeffs), initial=0.0))

    @property
    def sigma(self):
        """Standard deviation (sum 2 beta_i^2 + alpha_i^2)^(1/2)."""
        return float(np.sqrt(2 * np.sum(self.quad_coeffs**2)
                             + np.sum(self.linear_coeffs**2)))

    @property
    def mean(self):
        return self.constant

    @property
    def l2_norm(self):
        return float(np.hypot(self.constant, self.sigma))

    def evaluate(self, xi):
        a, b = self._padded()
        xi = np.asarray(xi, dtype=float)
        return self.constant + xi @ a + (xi * xi - 1.0) @ b


def chaos_from_polynomial(quad, lin, const, mean, cov):
    """Chaos form of x'Px + b'x + c0 under X ~ N(mean, cov)."""
    quad = linalg.as_symmetric(quad, "quad")
    lin = np.asarray(lin, dtype=float)
    mean = np.asarray(mean, dtype=float)
    root = linalg.sqrtm(cov)
    lam, u = linalg.eigh(root @ quad @ root)
    lin_z = root @ (2.0 * quad @ mean + lin)
    c = float(mean @ quad @ mean + lin @ mean + const + np.sum(lam))
    return QuadChaos(c, u.T @ lin_z, lam)


def chaos_from_quadratic(frontier, mean, cov):
    """Chaos form of a QuadraticFrontier's value under N(mean, cov)."""
    return chaos_from_polynomial(*frontier.polynomial(), mean, cov)


def chaos_of_difference(f_hat, f, mean, cov):
    """Chaos form of delta = f_hat - f under N(mean, cov)."""
    p1, b1, c1 = f_hat.polynomial()
    p0, b0, c0 = f.polynomial()
    return chaos_from_polynomial(p1 - p0, b1 - b0, c1 - c0, mean, cov)


def _entropy(seed):
    if isinstance(seed, (list, tuple)):
        return [int(v) % (1 << 64) for v in seed]
    return [int(seed) % (1 << 64)]


def _chunks(seed, count, tag=0):
    base = _entropy(seed)
    for j, start in enumerate(range(0, count, CHUNK_ROWS)):
        rng = np.random.default_rng(np.random.SeedSequence(base + [tag, j]))
        yield rng, min(CHUNK_ROWS, count - start)


def chaos_sample(q, count, seed):
    """``count`` i.i.d. draws of the chaos; deterministic per seed."""
    count = int(count)
    a, b = q._padded()
    out = np.empty(count)
    pos = 0
    for rng, size in _chunks(seed, count):
        if q.length:
            xi = rng.standard_normal((size, q.length))
            out[pos:pos + size] = q.constant + xi @ a + (xi * xi - 1.0) @ b
        else:
            out[pos:pos + size] = q.constant
        pos += size
    return out


def binomial_se(prob, n):
    return float(np.sqrt(max(prob * (1.0 - prob), 0.0) / n))


def small_ball_bound_3(q, eps):
    """sqrt(eps / (pi n2(q))), a bound on P(|q| <= eps) for any chaos."""
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    if q.n2 == 0.0:
        raise InapplicableBoundError("chaos has no quadratic part (n2 = 0)")
    return float(np.sqrt(eps / (np.pi * q.n2)))


def small_ball_bound_two_roots(q, eps):
    """2 sqrt(eps / (pi n2(q))): the single-coordinate interval bound counting
    both roots of the quadratic in the coordinate with the largest |beta_i|.

    ``small_ball_bound_3`` is half of this and fails for q = xi^2 at small eps,
    where P(xi^2 <= eps) ~ sqrt(2 eps / pi).
    """
    return 2.0 * small_ball_bound_3(q, eps)


def small_ball_probability(q, eps_grid, n_samples, seed):
    """Empirical P(|q| <= eps) and binomial standard errors on one sample."""
    abs_q = np.abs(chaos_sample(q, n_samples, seed))
    eps_grid = np.asarray(eps_grid, dtype=float)
    probs = np.array([np.count_nonzero(abs_q <= e) for e in eps_grid]) / n_samples
    return probs, np.array([binomial_se(p, n_samples) for p in probs])


SMALL_BALL_EXPONENTS = {"mean": 2.0 / 7.0, "second_moment": 1.0 / 3.0, "point3": 0.5}


def small_ball_exponents(q_family, eps_grid, n_samples, seed):
    """Empirical small-ball probabilities with fitted power envelopes.

    For each chaos and each exponent b in {2/7, 1/3, 1/2} the constant is the
    smallest K with P(|q| <= eps) <= K eps^b on the grid; the envelope column
    is K eps^b. Only the shape is meaningful: the constants in the
    corresponding inequalities are not explicit.
    """
    rows = []
    for k, q in enumerate(q_family):
        probs, ses = small_ball_probability(q, eps_grid, n_samples, [int(seed), k])
        consts = {name: float(np.max(probs / np.power(eps_grid, b)))
                  for name, b in SMALL_BALL_EXPONENTS.items()}
        for e, pr, se in zip(eps_grid, probs, ses):
            row = {"family_index": k, "eps": float(e), "probability": float(pr),
                   "std_error": float(se), "abs_mean": abs(q.mean),
                   "second_moment": q.l2_norm**2}
            for name, b in SMALL_BALL_EXPONENTS.items():
                row[f"envelope_{name}"] = consts[name] * float(e) ** b
            rows.append(row)
    return rows


def laurent_massart_thresholds(d, s):
    """(upper, lower) deviation thresholds for q_D(x) = <Dx, x> under N(0, I).

    Uses ||q_D||_{L2} = sqrt(2 sum d^2 + (sum d)^2), the norm of the
    uncentered form.
    """
    d = np.asarray(d, dtype=float)
    norm = np.sqrt(2.0 * np.sum(d * d) + np.sum(d) ** 2)
    return 0.5 * s * norm + s * s * np.max(np.abs(d)), -0.5 * s * norm


def laurent_massart_check(d, s_grid, n_samples, seed):
    """Empirical tails of q_D - E q_D against exp(-s^2/2), nonnegative d only."""
    d = np.atleast_1d(np.asarray(d, dtype=float))
    if not np.any(d):
        raise ValueError("d must be nonzero")
    if np.any(d < 0):
        raise ValueError("weights d must be nonnegative")
    centered = np.empty(int(n_samples))
    pos = 0
    for rng, size in _chunks(seed, int(n_samples)):
        xi = rng.standard_normal((size, d.size))
        centered[pos:pos + size] = (xi * xi - 1.0) @ d
        pos += size
    rows = []
    for s in s_grid:
        up, low = laurent_massart_thresholds(d, s)
        pu = np.count_nonzero(centered >= up) / n_samples
        pl = np.count_nonzero(centered <= low) / n_samples
        rows.append({"s": float(s), "upper_tail": pu, "lower_tail": pl,
                     "upper_se": binomial_se(pu, n_samples),
                     "lower_se": binomial_se(pl, n_samples),
                     "bound": float(np.exp(-0.5 * s * s)),
                     "upper_threshold": float(up), "lower_threshold": float(low)})
    return rows


def lipschitz_tail_bound(lip_norm, s):
    """2 exp(-s^2 / (2 N^2)) for a functional with Lipschitz constant N."""
    if lip_norm <= 0:
        raise ValueError("lip_norm must be positive")
    return float(2.0 * np.exp(-s * s / (2.0 * lip_norm**2)))


def lipschitz_check(functional, lip_norm, dim, s_grid, n_samples, seed, center=None):
    """Two-sided tails P(|f(xi) - E f| >= s) under N(0, I_dim) against
    2 exp(-s^2/(2 N^2)). ``center`` defaults to the sample mean of f."""
    n_samples = int(n_samples)
    vals = np.empty(n_samples)
    pos = 0
    for rng, size in _chunks(seed, n_samples, tag=1):
        vals[pos:pos + size] = functional(rng.standard_normal((size, dim)))
        pos += size
    vals -= vals.mean() if center is None else center
    rows = []
    for s in s_grid:
        prob = np.count_nonzero(np.abs(vals) >= s) / n_samples
        rows.append({"s": float(s), "tail": prob, "se": binomial_se(prob, n_samples),
                     "bound": lipschitz_tail_bound(lip_norm, s)})
    return rows


def gaussian_half_line_expectation(fun):
    """E[fun(|xi|)] = 2 int_0^inf fun(x) phi(x) dx for xi ~ N(0, 1).

    Adaptive quadrature on the half line; the even extension fun(|x|) has a
    kink at 0 that Gauss-Hermite rules resolve poorly. Raises
    DivergenceError when fun(x) phi(x) is not decaying far out or the
    integral is not finite.
    """
    def integrand(x):
        with np.errstate(over="ignore", invalid="ignore"):
            return float(fun(np.asarray(x, dtype=float))) * stats.norm.pdf(x)
    far = [integrand(x) for x in (20.0, 30.0, 40.0)]
    if not all(np.isfinite(far)) or not (far[0] >= far[1] >= far[2]) or far[2] > 1e-12:
        raise DivergenceError(
            "Gaussian expectation diverges: integrand does not decay "
            f"(values {far} at x = 20, 30, 40); h grows too fast")
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            value, err = integrate.quad(integrand, 0.0, np.inf, epsabs=1e-13,
                                        epsrel=1e-11, limit=200)
        except integrate.IntegrationWarning as exc:
            raise DivergenceError(f"Gaussian expectation did not converge: {exc}") from None
    if not np.isfinite(value):
        raise DivergenceError("Gaussian expectation is not finite")
    return 2.0 * value


def domain_decomposition_bound(h_delta, c0, c1, c2, beta, mean_delta, q):
    """Bound on P(X in V_f sym-diff V_{f+delta}) from tail and small-ball hypotheses.

    Hypotheses: P(|delta - E delta| >= c0 h(s)) <= c1 exp(-s^2/2) and
    P(|f| <= eps) <= c2 eps^beta. Value:
    c1^(1-q) c2 |E delta|^(q beta) + sqrt(2 pi/(1-q)) (c2 c1^(1-q)/2)
    E[(c0 h(|xi|/sqrt(1-q) + 1) + |E delta|)^(q beta)].
    """
    if not 0.0 < q < 1.0:
        raise ValueError("q must lie in (0, 1)")
    if beta <= 0:
        raise ValueError("beta must be positive")
    m = abs(float(mean_delta))
    qb = q * beta
    scale = c2 * c1 ** (1.0 - q)
    expect = gaussian_half_line_expectation(
        lambda x: (c0 * np.asarray(h_delta(x / np.sqrt(1.0 - q) + 1.0)) + m) ** qb)
    return float(scale * m**qb + np.sqrt(2.0 * np.pi / (1.0 - q)) * 0.5 * scale * expect)


@dataclass(frozen=True)
class PerturbationBound:
    bound: float
    mean_delta: float
    centered_norm: float
    c0: float
    c1: float
    c2: float
    beta: float
    q: float

    def to_dict(self):
        return dict(self.__dict__)


def perturbation_bound(f, f_hat, mean, cov, q=0.5):
    """Domain-decomposition bound for delta = f_hat - f under N(mean, cov).

    Tail hypothesis: h(s) = sqrt(2)(s + s^2)||delta - E delta||_{L2} with
    c0 = 2, c1 = 4 (linear part via the Lipschitz bound, quadratic part via
    the chi-square bound, each with constant 2, combined over two pieces).
    Small-ball hypothesis: beta = 1/2, c2 = 2/sqrt(pi n2(f)) from
    ``small_ball_bound_two_roots``.
    """
    chaos_f = chaos_from_quadratic(f, mean, cov)
    delta = chaos_of_difference(f_hat, f, mean, cov)
    c2 = 2.0 / np.sqrt(np.pi * chaos_f.n2) if chaos_f.n2 > 0 else np.inf
    if not np.isfinite(c2):
        raise InapplicableBoundError("f has no quadratic part under this measure")
    norm = delta.sigma
    c0, c1, beta = 2.0, 4.0, 0.5
    value = domain_decomposition_bound(
        lambda s: np.sqrt(2.0) * (s + s * s) * norm, c0, c1, c2, beta, delta.mean, q)
    return PerturbationBound(value, delta.mean, norm, c0, c1, float(c2), beta, q)


def symmetric_difference_mc(f, f_hat, measure, n_samples, seed):
    """Monte Carlo P(sign of f and f_hat disagree) under ``measure``; (estimate, se)."""
    hits = 0
    n_samples = int(n_samples)
    for rng, size in _chunks(seed, n_samples):
        x = measure.from_standard(rng.standard_normal((size, measure.dim)))
        hits += int(np.count_nonzero((f.value(x) >= 0) != (f_hat.value(x) >= 0)))
    prob = hits / n_samples
    return prob, binomial_se(prob, n_samples)
