"""Gaussian measures on R^p, optimal frontier functions and L2(gamma_C) geometry.

Conventions: class 1 is ``P_1 = N(mu_1, C_1)``, class 0 is ``P_0 = N(mu_0, C_0)``,
both classes carry weight 1/2, and a frontier value ``>= 0`` means class 1.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import linalg, normal
from .linalg import DEFAULT_CONDITION_CAP


class ContractError(ValueError):
    """An operation was called outside its documented preconditions."""


class DegenerateDirectionError(ValueError):
    """A direction has zero L2(gamma_C) norm where a nonzero one is needed."""


def _frozen(a, ndim=None):
    a = np.array(a, dtype=float)
    if ndim == 1:
        a = np.atleast_1d(a)
    elif ndim == 2:
        a = np.atleast_2d(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class GaussianMeasure:
    mean: np.ndarray
    covariance: np.ndarray

    def __post_init__(self):
        mean = _frozen(self.mean, 1)
        cov = linalg.as_symmetric(self.covariance, "covariance")
        if cov.shape != (mean.size, mean.size):
            raise ValueError(
                f"covariance shape {cov.shape} does not match mean length {mean.size}")
        linalg.check_psd(cov)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "covariance", _frozen(cov))

    @property
    def dim(self):
        return self.mean.size

    @cached_property
    def sqrt_cov(self):
        return linalg.sqrtm(self.covariance)

    @cached_property
    def _diag_root(self):
        d = linalg.diagonal_of(self.covariance)
        return None if d is None else np.sqrt(np.clip(d, 0.0, None))

    def from_standard(self, z):
        """Map standard normal rows z to draws mean + z C^{1/2}."""
        root = self._diag_root
        if root is not None:
            return self.mean + z * root
        return self.mean + z @ self.sqrt_cov


@dataclass(frozen=True, eq=False)
class ClassificationProblem:
    class1: GaussianMeasure
    class0: GaussianMeasure
    equal_covariance: bool = False

    def __post_init__(self):
        if self.class1.dim != self.class0.dim:
            raise ValueError(
                f"dimension mismatch: class1 has p={self.class1.dim}, "
                f"class0 has p={self.class0.dim}")
        if self.equal_covariance and not np.array_equal(
                self.class1.covariance, self.class0.covariance):
            raise ValueError("equal_covariance set but the covariances differ")

    @classmethod
    def shared(cls, mean1, mean0, cov):
        """Equal-covariance problem; both classes hold the same matrix."""
        m1 = GaussianMeasure(mean1, cov)
        return cls(m1, GaussianMeasure(mean0, m1.covariance), equal_covariance=True)

    @classmethod
    def general(cls, mean1, cov1, mean0, cov0):
        return cls(GaussianMeasure(mean1, cov1), GaussianMeasure(mean0, cov0))

    @property
    def dim(self):
        return self.class1.dim

    @property
    def m10(self):
        return self.class1.mean - self.class0.mean

    @property
    def s10(self):
        return 0.5 * (self.class1.mean + self.class0.mean)

    @property
    def cov(self):
        """The shared covariance (equal-covariance problems only)."""
        if not self.equal_covariance:
            raise ContractError("problem has unequal covariances")
        return self.class1.covariance


def _as_points(x, p):
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != p:
        raise ValueError(f"dimension mismatch: expected p={p}, got {x.shape[-1]}")
    return x


@dataclass(frozen=True, eq=False)
class AffineFrontier:
    """x -> <normal, x - center>."""

    normal: np.ndarray
    center: np.ndarray

    def __post_init__(self):
        normal_ = _frozen(self.normal, 1)
        center = _frozen(self.center, 1)
        if normal_.shape != center.shape:
            raise ValueError(
                f"normal (len {normal_.size}) and center (len {center.size}) differ")
        object.__setattr__(self, "normal", normal_)
        object.__setattr__(self, "center", center)

    @property
    def dim(self):
        return self.normal.size

    @property
    def degenerate(self):
        return not np.any(self.normal)

    def value(self, x):
        x = _as_points(x, self.dim)
        return (x - self.center) @ self.normal

    def as_quadratic(self):
        return QuadraticFrontier(np.zeros((self.dim, self.dim)), self.normal,
                                 self.center, 0.0)


@dataclass(frozen=True, eq=False)
class QuadraticFrontier:
    """x -> -1/2 <quad (x-center), x-center> + <linear, x-center> - offset."""

    quad: np.ndarray
    linear: np.ndarray
    center: np.ndarray
    offset: float = 0.0

    def __post_init__(self):
        quad = linalg.as_symmetric(self.quad, "quad")
        linear = _frozen(self.linear, 1)
        center = _frozen(self.center, 1)
        if quad.shape != (linear.size, linear.size) or center.shape != linear.shape:
            raise ValueError("quad, linear and center dimensions disagree")
        object.__setattr__(self, "quad", _frozen(quad))
        object.__setattr__(self, "linear", linear)
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "offset", float(self.offset))

    @property
    def dim(self):
        return self.linear.size

    def value(self, x):
        y = _as_points(x, self.dim) - self.center
        return (-0.5 * np.einsum("...i,ij,...j->...", y, self.quad, y)
                + y @ self.linear - self.offset)

    def polynomial(self):
        """Expanded form (P, b, c0) with value(x) = x'Px + b'x + c0."""
        qc = self.quad @ self.center
        quad_part = -0.5 * self.quad
        lin_part = qc + self.linear
        const = -0.5 * self.center @ qc - self.linear @ self.center - self.offset
        return quad_part, lin_part, float(const)


def sample(measure, count, seed):
    """Draw ``count`` i.i.d. rows from ``measure``; bit-identical per (seed, count)."""
    if count < 0:
        raise ValueError("count must be nonnegative")
    rng = np.random.default_rng(seed)
    return measure.from_standard(rng.standard_normal((int(count), measure.dim)))


def affine_frontier(problem, cap=DEFAULT_CONDITION_CAP):
    """Optimal frontier of an equal-covariance problem: F = C^{-1} m, s = (mu1+mu0)/2."""
    if not problem.equal_covariance:
        raise ContractError("affine_frontier requires equal covariances")
    return AffineFrontier(linalg.solve_spd(problem.cov, problem.m10, cap=cap,
                                           name="covariance"), problem.s10)


def quadratic_frontier(problem, cap=DEFAULT_CONDITION_CAP):
    """Log-likelihood ratio log(dP1/dP0) written around s10.

    The offset is (1/8)<A m, m> + 1/2 log det(C0^{-1} C1); with this sign
    the frontier equals log p1(x) - log p0(x) exactly.
    """
    c1 = problem.class1.covariance
    c0 = problem.class0.covariance
    inv1 = linalg.inv(c1, cap=cap, name="class-1 covariance")
    inv0 = linalg.inv(c0, cap=cap, name="class-0 covariance")
    m = problem.m10
    quad = inv1 - inv0
    linear = 0.5 * (inv1 + inv0) @ m
    logdet_ratio = (linalg.logdet(c1, cap=cap, name="class-1 covariance")
                    - linalg.logdet(c0, cap=cap, name="class-0 covariance"))
    offset = 0.125 * m @ quad @ m + 0.5 * logdet_ratio
    return QuadraticFrontier(0.5 * (quad + quad.T), linear, problem.s10, offset)


def optimal_frontier(problem):
    """Affine frontier for equal covariances, quadratic otherwise.

    Cached on the problem, which is immutable.
    """
    cached = problem.__dict__.get("_optimal_frontier")
    if cached is None:
        cached = (affine_frontier(problem) if problem.equal_covariance
                  else quadratic_frontier(problem))
        problem.__dict__["_optimal_frontier"] = cached
    return cached


def w_operator(c1, c0, cap=DEFAULT_CONDITION_CAP):
    """W_10 = I - C1^{1/2} C0^{-1} C1^{1/2}."""
    c1 = linalg.as_symmetric(c1, "c1")
    c0 = linalg.as_symmetric(c0, "c0")
    root1 = linalg.sqrtm(c1)
    w = np.eye(c1.shape[0]) - root1 @ linalg.inv(c0, cap=cap, name="c0") @ root1
    return 0.5 * (w + w.T)


def l2_gamma_inner(a, b, cov):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    cov = np.atleast_2d(np.asarray(cov, dtype=float))
    if not (a.shape == b.shape == (cov.shape[0],)):
        raise ValueError(
            f"dimension mismatch: vectors {a.shape}, {b.shape}, covariance {cov.shape}")
    return float(a @ cov @ b)


def l2_gamma_norm(v, cov):
    """||v||_{L2(gamma_C)} = ||C^{1/2} v||."""
    return float(np.sqrt(max(l2_gamma_inner(v, v, cov), 0.0)))


def angle_alpha(f, f_hat, cov):
    """L2(gamma_C) angle in [0, pi] between two frontier normals.

    Evaluated as atan2(||f|| ||proj_{f-perp} f_hat||, <f_hat, f>), which is
    the arctan form on (0, pi/2) and keeps full precision near 0 and pi.
    """
    nf = l2_gamma_norm(f, cov)
    nh = l2_gamma_norm(f_hat, cov)
    if nf == 0.0 or nh == 0.0:
        raise DegenerateDirectionError(
            "angle undefined: a direction has zero L2(gamma_C) norm")
    f = np.asarray(f, dtype=float)
    f_hat = np.asarray(f_hat, dtype=float)
    inner = l2_gamma_inner(f_hat, f, cov)
    perp = f_hat - (inner / nf**2) * f
    return float(np.arctan2(nf * l2_gamma_norm(perp, cov), inner))


@dataclass(frozen=True)
class Separation:
    r: float
    bayes_risk: float
    l1_distance: float


def separation(problem, cap=DEFAULT_CONDITION_CAP):
    """r = ||C^{-1/2} m||, Bayes risk Phi(-r/2) and L1 distance 2 Phi(r/2) - 1."""
    frontier = (optimal_frontier(problem) if cap == DEFAULT_CONDITION_CAP
                else affine_frontier(problem, cap=cap))
    r = float(np.sqrt(max(problem.m10 @ frontier.normal, 0.0)))
    bayes = float(normal.cdf(-0.5 * r))
    return Separation(r=r, bayes_risk=bayes, l1_distance=1.0 - 2.0 * bayes)
