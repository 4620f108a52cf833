"""Plug-in classification rules: FDR-thresholded LDA, diagonal FDR-QDA and two
dense baselines (pseudo-inverse Fisher rule and known-covariance naive LDA).

Every rule exposes ``value(x)``; ``classify`` returns 1 where the value is
``>= 0`` and 0 elsewhere.
"""

from dataclasses import dataclass, field

import numpy as np

from . import linalg, normal
from .gaussian import QuadraticFrontier, _as_points, _frozen

DEFAULT_BP = 0.01


class DegenerateFeatureError(ValueError):
    """A coordinate has zero empirical variance in some class."""


@dataclass(frozen=True, eq=False)
class LabeledDataset:
    features: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.features, dtype=float)
        if x.ndim != 2:
            raise ValueError(f"features must be a 2-D array, got shape {x.shape}")
        y = np.asarray(self.labels)
        if y.shape != (x.shape[0],):
            raise ValueError(
                f"labels length {y.shape} does not match {x.shape[0]} feature rows")
        bad = ~np.isin(y, (0, 1))
        if np.any(bad):
            raise ValueError(f"labels must be 0 or 1; row {int(np.argmax(bad))} "
                             f"has {y[np.argmax(bad)]!r}")
        object.__setattr__(self, "features", _frozen(x))
        object.__setattr__(self, "labels", _frozen(y.astype(np.int64)))

    @property
    def dim(self):
        return self.features.shape[1]

    @property
    def n(self):
        return self.features.shape[0]

    def rows(self, label):
        return self.features[self.labels == label]

    def counts(self):
        return int(np.sum(self.labels == 1)), int(np.sum(self.labels == 0))

    def require(self, per_class):
        n1, n0 = self.counts()
        if min(n1, n0) < per_class:
            raise ValueError(
                f"each class needs at least {per_class} observation(s); "
                f"got n1={n1}, n0={n0}")
        return n1, n0

    @classmethod
    def from_classes(cls, x1, x0):
        x1 = np.atleast_2d(np.asarray(x1, dtype=float))
        x0 = np.atleast_2d(np.asarray(x0, dtype=float))
        labels = np.concatenate([np.ones(len(x1), int), np.zeros(len(x0), int)])
        return cls(np.vstack([x1, x0]), labels)


@dataclass(frozen=True)
class BhResult:
    k_fdr: int
    threshold: float
    std_threshold: float
    selected: tuple

    def to_dict(self):
        return {"k_fdr": self.k_fdr, "threshold": self.threshold,
                "std_threshold": self.std_threshold, "selected": list(self.selected)}


def _check_bp(b_p):
    if not 0.0 < b_p < 0.5:
        raise ValueError(f"b_p must lie in (0, 1/2), got {b_p}")


def bh_select(statistics, null_sd, b_p=DEFAULT_BP):
    """Benjamini-Hochberg step-up selection on standardized two-sided statistics.

    ``threshold`` is |statistic| (unstandardized) at rank k_fdr and
    ``std_threshold`` the standardized value there; both are +inf when
    nothing is selected.
    """
    _check_bp(b_p)
    stats = np.atleast_1d(np.asarray(statistics, dtype=float))
    sd = np.broadcast_to(np.asarray(null_sd, dtype=float), stats.shape)
    if not np.all(np.isfinite(stats)):
        raise ValueError("statistics must be finite")
    if np.any(~(sd > 0)):
        raise ValueError(f"null_sd must be strictly positive (coordinate "
                         f"{int(np.argmax(~(sd > 0)))})")
    p = stats.size
    t = np.abs(stats) / sd
    order = np.argsort(-t, kind="stable")
    ranks = np.arange(1, p + 1)
    passing = np.nonzero(t[order] >= normal.upper_quantile(b_p * ranks / (2.0 * p)))[0]
    if passing.size == 0:
        return BhResult(0, np.inf, np.inf, ())
    k = int(passing[-1]) + 1
    t_k = t[order[k - 1]]
    # step-up maximality makes t_(k) > t_(k+1), so this picks exactly k indices
    selected = tuple(int(i) for i in np.nonzero(t >= t_k)[0])
    return BhResult(k, float(np.abs(stats[order[k - 1]])), float(t_k), selected)


@dataclass(frozen=True, eq=False)
class LdaRule:
    """Affine rule x -> <normal, x - center>.

    ``selected`` is None for dense fits; for thresholding fits it lists the
    kept coordinates of the whitened mean difference.
    """

    normal: np.ndarray
    center: np.ndarray
    selected: tuple = None
    procedure: str = "custom"
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "normal", _frozen(self.normal, 1))
        object.__setattr__(self, "center", _frozen(self.center, 1))
        if self.normal.shape != self.center.shape:
            raise ValueError("normal and center must have equal length")
        if self.selected is not None:
            object.__setattr__(self, "selected", tuple(int(i) for i in self.selected))

    @property
    def dim(self):
        return self.normal.size

    @property
    def degenerate(self):
        return not np.any(self.normal)

    def value(self, x):
        return (_as_points(x, self.dim) - self.center) @ self.normal

    def scaled(self, beta):
        return LdaRule(beta * self.normal, self.center, self.selected,
                       self.procedure, dict(self.info))


@dataclass(frozen=True, eq=False)
class DiagQdaRule:
    means1: np.ndarray
    means0: np.ndarray
    var1: np.ndarray
    var0: np.ndarray
    mean_selected: tuple
    var_selected: tuple
    g_hat: np.ndarray
    a_hat: np.ndarray
    offset: float
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("means1", "means0", "var1", "var0", "g_hat", "a_hat"):
            object.__setattr__(self, name, _frozen(getattr(self, name), 1))
        object.__setattr__(self, "mean_selected", tuple(int(i) for i in self.mean_selected))
        object.__setattr__(self, "var_selected", tuple(int(i) for i in self.var_selected))
        object.__setattr__(self, "offset", float(self.offset))

    procedure = "diag-qda"

    @property
    def dim(self):
        return self.g_hat.size

    @property
    def center(self):
        return 0.5 * (self.means1 + self.means0)

    @property
    def is_affine(self):
        return not self.var_selected

    def value(self, x):
        y = _as_points(x, self.dim) - self.center
        return -0.5 * (y * y) @ self.a_hat + y @ self.g_hat - self.offset

    def frontier(self):
        return QuadraticFrontier(np.diag(self.a_hat), self.g_hat, self.center, self.offset)


def _class_means(data):
    return data.rows(1).mean(axis=0), data.rows(0).mean(axis=0)


def _cov_power(cov, p, power):
    """v -> C^power v, with a shortcut for diagonal C."""
    cov = linalg.as_symmetric(cov, "cov")
    if cov.shape != (p, p):
        raise ValueError(f"dimension mismatch: cov {cov.shape} vs data p={p}")
    d = linalg.diagonal_of(cov)
    if d is not None:
        linalg.check_condition(d, linalg.DEFAULT_CONDITION_CAP, "cov")
        scale = d ** power
        return lambda v: scale * v
    m = (linalg.inv_sqrtm(cov, name="cov") if power == -0.5
         else linalg.inv(cov, name="cov"))
    return lambda v: m @ v


def fit_lda_fdr_known_cov(data, cov, center_known=None, b_p=DEFAULT_BP,
                          holdout_center=False):
    """FDR-thresholded LDA with known covariance.

    The whitened mean difference y = C^{-1/2}(xbar1 - xbar0) has null sd
    sqrt(1/n1 + 1/n0) in each coordinate; coordinates kept by ``bh_select``
    survive and F_hat = C^{-1/2} y_thresholded. With ``holdout_center`` the
    center is estimated on the second half of each class and the normal on
    the first half, making the two independent.
    """
    _check_bp(b_p)
    whiten = _cov_power(cov, data.dim, -0.5)
    x1, x0 = data.rows(1), data.rows(0)
    if holdout_center:
        data.require(2)
        h1, h0 = len(x1) // 2, len(x0) // 2
        x1, x1c = x1[:h1], x1[h1:]
        x0, x0c = x0[:h0], x0[h0:]
        center = 0.5 * (x1c.mean(axis=0) + x0c.mean(axis=0))
    else:
        data.require(1)
        center = 0.5 * (x1.mean(axis=0) + x0.mean(axis=0))
    if center_known is not None:
        center = np.asarray(center_known, dtype=float)
    n1, n0 = len(x1), len(x0)
    y = whiten(x1.mean(axis=0) - x0.mean(axis=0))
    bh = bh_select(y, np.full(y.size, np.sqrt(1.0 / n1 + 1.0 / n0)), b_p)
    y_thr = np.zeros_like(y)
    idx = list(bh.selected)
    y_thr[idx] = y[idx]
    info = {"b_p": b_p, "n1": n1, "n0": n0, **bh.to_dict()}
    info.pop("selected")
    return LdaRule(whiten(y_thr), center, bh.selected, "fdr-lda", info)


def fit_diag_qda(data, b_p=DEFAULT_BP):
    """Diagonal QDA with FDR selection of mean and variance differences."""
    _check_bp(b_p)
    n1, n0 = data.require(2)
    x1, x0 = data.rows(1), data.rows(0)
    mu1, mu0 = x1.mean(axis=0), x0.mean(axis=0)
    v1, v0 = x1.var(axis=0, ddof=1), x0.var(axis=0, ddof=1)
    for label, v in ((1, v1), (0, v0)):
        zero = np.nonzero(~(v > 0))[0]
        if zero.size:
            raise DegenerateFeatureError(
                f"coordinate {int(zero[0])} has zero variance in class {label}")
    scale = np.sqrt(0.5 * (1.0 / v1 + 1.0 / v0))
    y = scale * (mu1 - mu0)
    y_sd = np.sqrt((1 + v1 / v0) / (2 * n1) + (1 + v0 / v1) / (2 * n0))
    w = v1 - v0
    w_sd = np.sqrt(2 * v1**2 / (n1 - 1) + 2 * v0**2 / (n0 - 1))
    mean_bh = bh_select(y, y_sd, b_p)
    var_bh = bh_select(w, w_sd, b_p)
    g_hat = np.zeros(data.dim)
    a_hat = np.zeros(data.dim)
    ms, vs = list(mean_bh.selected), list(var_bh.selected)
    g_hat[ms] = scale[ms] * y[ms]
    a_hat[vs] = 1.0 / v1[vs] - 1.0 / v0[vs]
    offset = float(np.sum(0.125 * a_hat[vs] * (mu1[vs] - mu0[vs]) ** 2
                          + 0.5 * np.log(v1[vs] / v0[vs])))
    info = {"b_p": b_p, "n1": n1, "n0": n0,
            "mean_k_fdr": mean_bh.k_fdr, "mean_threshold": mean_bh.threshold,
            "var_k_fdr": var_bh.k_fdr, "var_threshold": var_bh.threshold}
    return DiagQdaRule(mu1, mu0, v1, v0, mean_bh.selected, var_bh.selected,
                       g_hat, a_hat, offset, info)


def pooled_covariance(data):
    """Within-class scatter divided by n (each class centered at its own mean)."""
    x1, x0 = data.rows(1), data.rows(0)
    r = np.vstack([x1 - x1.mean(axis=0), x0 - x0.mean(axis=0)])
    return r.T @ r / data.n


def fit_fisher_pseudo(data, tol=linalg.PINV_TOL):
    """Fisher rule with the Moore-Penrose inverse of the pooled covariance."""
    data.require(1)
    if data.n < 2:
        raise ValueError("fit_fisher_pseudo needs n >= 2")
    mu1, mu0 = _class_means(data)
    normal_ = linalg.pinv(pooled_covariance(data), tol) @ (mu1 - mu0)
    return LdaRule(normal_, 0.5 * (mu1 + mu0), None, "fisher", {"n": data.n})


def fit_naive_lda(data, cov, center_known=None):
    """Dense plug-in rule F_hat = C^{-1}(xbar1 - xbar0) with C known."""
    data.require(1)
    solve = _cov_power(cov, data.dim, -1.0)
    mu1, mu0 = _class_means(data)
    normal_ = solve(mu1 - mu0)
    center = 0.5 * (mu1 + mu0) if center_known is None else center_known
    return LdaRule(normal_, center, None, "naive-lda", {"n": data.n})


def classify(rule, x):
    """Label(s) in {0, 1}; frontier value exactly 0 goes to class 1."""
    return (np.asarray(rule.value(x)) >= 0).astype(np.int64)
