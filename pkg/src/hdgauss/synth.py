"""Synthetic problem generators: sparse whitened mean differences in l^q balls,
structured covariances, and noisy curves read in an orthonormal Haar basis.
"""

from dataclasses import asdict, dataclass, field

import numpy as np

from . import linalg
from .classifiers import LabeledDataset
from .gaussian import ClassificationProblem, GaussianMeasure

COVARIANCE_KINDS = ("identity", "diagonal", "toeplitz", "random_spd")
NOISE_KINDS = ("white", "ar1")
BALL_SLACK = 1e-6


class InfeasibleSpecError(ValueError):
    """No vector meets the requested norm constraints."""


@dataclass(frozen=True)
class ProblemSpec:
    """Parameters of a generated problem.

    ``covariance_params`` depends on the kind: ``diagonal`` takes optional
    ``values`` (else entries are drawn in [low, high]); ``toeplitz`` takes
    ``rho`` or an explicit first-row ``sequence``; ``random_spd`` takes an
    eigenvalue range [low, high]. When ``equal_cov`` is false the class-0
    covariance is C^{1/2} D C^{1/2} with D diagonal in [low0, high0].
    """

    p: int
    q_sparsity: float = 1.0
    radius_R: float = 10.0
    separation_r: float = 2.0
    covariance_kind: str = "identity"
    covariance_params: dict = field(default_factory=dict)
    equal_cov: bool = True
    seed: int = 0

    def __post_init__(self):
        if int(self.p) != self.p or self.p < 1:
            raise ValueError(f"p must be a positive integer, got {self.p}")
        if not 0.0 < self.q_sparsity < 2.0:
            raise ValueError(f"q_sparsity must lie in (0, 2), got {self.q_sparsity}")
        if self.radius_R <= 0 or self.separation_r <= 0:
            raise ValueError("radius_R and separation_r must be positive")
        if self.covariance_kind not in COVARIANCE_KINDS:
            raise ValueError(f"covariance_kind must be one of {COVARIANCE_KINDS}, "
                             f"got {self.covariance_kind!r}")

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        known = set(cls.__dataclass_fields__)
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown ProblemSpec field(s): {sorted(extra)}")
        return cls(**d)


def _ratio(profile, q):
    return np.linalg.norm(profile) / np.sum(profile**q) ** (1.0 / q)


def sparse_profile(p, q, ratio_needed, q_tilde=None):
    """Decreasing magnitudes i^(-1/q_tilde) with ||v||_2 / ||v||_q >= ratio_needed.

    Starts from q_tilde = 0.9 q and bisects toward sparser profiles when the
    ratio is too small; falls back to a single spike (ratio 1).
    """
    i = np.arange(1, p + 1, dtype=float)
    qt = 0.9 * q if q_tilde is None else float(q_tilde)
    make = lambda t: i ** (-1.0 / t)
    if _ratio(make(qt), q) >= ratio_needed:
        return make(qt), qt
    lo, hi = 1e-3, qt
    if _ratio(make(lo), q) < ratio_needed:
        spike = np.zeros(p)
        spike[0] = 1.0
        return spike, 0.0
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if _ratio(make(mid), q) >= ratio_needed:
            lo = mid
        else:
            hi = mid
    return make(lo), lo


def make_covariance(kind, p, params, rng):
    params = dict(params or {})
    if kind == "identity":
        return np.eye(p)
    if kind == "diagonal":
        if "values" in params:
            d = np.asarray(params["values"], dtype=float)
            if d.shape != (p,):
                raise ValueError(f"diagonal values need length {p}, got {d.shape}")
        else:
            d = rng.uniform(params.get("low", 0.5), params.get("high", 2.0), p)
        if np.any(d <= 0):
            raise ValueError("diagonal covariance entries must be positive")
        return np.diag(d)
    if kind == "toeplitz":
        from scipy.linalg import toeplitz
        if "sequence" in params:
            seq = np.asarray(params["sequence"], dtype=float)
            if seq.size < p:
                seq = np.concatenate([seq, np.zeros(p - seq.size)])
            seq = seq[:p]
        else:
            rho = float(params.get("rho", 0.5))
            if not -1.0 < rho < 1.0:
                raise ValueError(f"toeplitz rho must lie in (-1, 1), got {rho}")
            seq = rho ** np.arange(p)
        cov = toeplitz(seq)
        if np.linalg.eigvalsh(cov)[0] <= 0:
            raise ValueError("toeplitz sequence is not positive definite")
        return cov
    if kind == "random_spd":
        q_mat, r_mat = np.linalg.qr(rng.standard_normal((p, p)))
        q_mat = q_mat * np.sign(np.diag(r_mat))
        lam = rng.uniform(params.get("low", 0.5), params.get("high", 2.0), p)
        cov = (q_mat * lam) @ q_mat.T
        return 0.5 * (cov + cov.T)
    raise ValueError(f"unknown covariance kind {kind!r}")


def make_problem(spec):
    """Equal-prior problem with theta = C^{-1/2} m in the l^q ball of radius R.

    theta has ||theta||_2 = r exactly and sum |theta_i|^q <= R^q; signs and
    positions are random. mu1 = m/2, mu0 = -m/2.
    """
    p, q, big_r, r = int(spec.p), spec.q_sparsity, spec.radius_R, spec.separation_r
    if r > big_r:
        raise InfeasibleSpecError(
            f"infeasible: ||theta||_2 >= r = {r} forces ||theta||_q >= r > R = {big_r} "
            f"(binding constraint: radius_R)")
    rng = np.random.default_rng(spec.seed)
    # aim slightly inside the ball so membership survives the covariance round-trip
    profile, _ = sparse_profile(p, q, r / (big_r * (1.0 - BALL_SLACK)))
    theta = r * profile / np.linalg.norm(profile)
    theta = theta * rng.choice([-1.0, 1.0], p)
    theta = theta[rng.permutation(p)]
    cov = make_covariance(spec.covariance_kind, p, spec.covariance_params, rng)
    d = linalg.diagonal_of(cov)
    m = np.sqrt(d) * theta if d is not None else linalg.sqrtm(cov) @ theta
    if spec.equal_cov:
        return ClassificationProblem.shared(0.5 * m, -0.5 * m, cov)
    params = spec.covariance_params or {}
    scale = rng.uniform(params.get("low0", 0.5), params.get("high0", 2.0), p)
    root = np.diag(np.sqrt(d)) if d is not None else linalg.sqrtm(cov)
    cov0 = root @ np.diag(scale) @ root
    return ClassificationProblem.general(0.5 * m, cov, -0.5 * m, 0.5 * (cov0 + cov0.T))


def whitened_mean_difference(problem):
    """theta = C1^{-1/2} m, recomputed from the problem alone."""
    cov = problem.class1.covariance
    d = linalg.diagonal_of(cov)
    if d is not None:
        return problem.m10 / np.sqrt(d)
    return linalg.inv_sqrtm(cov) @ problem.m10


def _check_length(n):
    if n < 1 or n & (n - 1):
        raise ValueError(f"length must be a power of two, got {n}")


def haar_dwt(x):
    """Orthonormal Haar transform along the last axis.

    Output order: the scaling coefficient, then details from coarsest to finest.
    """
    a = np.asarray(x, dtype=float)
    _check_length(a.shape[-1])
    details = []
    while a.shape[-1] > 1:
        even, odd = a[..., 0::2], a[..., 1::2]
        details.append((even - odd) / np.sqrt(2.0))
        a = (even + odd) / np.sqrt(2.0)
    return np.concatenate([a] + details[::-1], axis=-1)


def haar_idwt(c):
    """Inverse of ``haar_dwt``."""
    c = np.asarray(c, dtype=float)
    n = c.shape[-1]
    _check_length(n)
    a = c[..., :1]
    pos = 1
    while pos < n:
        d = c[..., pos:2 * pos]
        out = np.empty(c.shape[:-1] + (2 * pos,))
        out[..., 0::2] = (a + d) / np.sqrt(2.0)
        out[..., 1::2] = (a - d) / np.sqrt(2.0)
        a = out
        pos *= 2
    return a


def haar_matrix(n):
    """Rows are the Haar basis vectors, so haar_dwt(x) = H @ x."""
    return haar_dwt(np.eye(n)).T


@dataclass(frozen=True)
class CurveSpec:
    """Two classes of noisy curves sampled on a grid of ``length`` points.

    ``class_means`` holds two callables on [0, 1) or two vectors of length
    ``length``. ``noise_scale`` is one value or a (class 1, class 0) pair.
    """

    length: int
    class_means: tuple
    noise_cov_kind: str = "white"
    noise_scale: object = 1.0
    rho: float = 0.5
    n_per_class: int = 50
    seed: int = 0

    def __post_init__(self):
        _check_length(int(self.length))
        if self.noise_cov_kind not in NOISE_KINDS:
            raise ValueError(f"noise_cov_kind must be one of {NOISE_KINDS}")
        if len(self.class_means) != 2:
            raise ValueError("class_means needs exactly two entries (class 1, class 0)")
        if self.n_per_class < 1:
            raise ValueError("n_per_class must be positive")

    def to_dict(self):
        out = asdict(self)
        out["class_means"] = [np.asarray(m, dtype=float).tolist()
                              for m in self.mean_vectors()]
        return out

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d["class_means"] = tuple(d["class_means"])
        return cls(**d)

    def mean_vectors(self):
        t = np.arange(self.length) / self.length
        out = []
        for m in self.class_means:
            v = np.asarray(m(t) if callable(m) else m, dtype=float)
            if v.shape != (self.length,):
                raise ValueError(f"class mean must have length {self.length}, got {v.shape}")
            out.append(v)
        return out

    def noise_covariances(self):
        scales = np.broadcast_to(np.asarray(self.noise_scale, dtype=float), (2,))
        if self.noise_cov_kind == "white":
            base = np.eye(self.length)
        else:
            from scipy.linalg import toeplitz
            base = toeplitz(self.rho ** np.arange(self.length))
        return [s * s * base for s in scales]


def curve_problem(spec):
    """The exact Gaussian problem of ``synth_curves`` in wavelet coordinates."""
    h = haar_matrix(spec.length)
    (m1, m0), (c1, c0) = spec.mean_vectors(), spec.noise_covariances()
    rot = lambda c: 0.5 * (h @ c @ h.T + (h @ c @ h.T).T)
    if np.array_equal(c1, c0):
        return ClassificationProblem.shared(h @ m1, h @ m0, rot(c1))
    return ClassificationProblem.general(h @ m1, rot(c1), h @ m0, rot(c0))


def synth_curves(spec):
    """Noisy curves per class mapped to Haar coefficients, labels attached."""
    ss1, ss0 = np.random.SeedSequence(int(spec.seed)).spawn(2)
    (m1, m0), (c1, c0) = spec.mean_vectors(), spec.noise_covariances()
    n = int(spec.n_per_class)
    x1 = GaussianMeasure(m1, c1).from_standard(
        np.random.default_rng(ss1).standard_normal((n, spec.length)))
    x0 = GaussianMeasure(m0, c0).from_standard(
        np.random.default_rng(ss0).standard_normal((n, spec.length)))
    return LabeledDataset.from_classes(haar_dwt(x1), haar_dwt(x0))
