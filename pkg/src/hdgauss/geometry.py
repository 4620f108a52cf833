"""Two-dimensional reduction of the learning error of an affine rule.

For an equal-covariance problem, whitening and projecting onto the plane
spanned by the true and estimated normals leaves a standard Gaussian in
coordinates (a, b): ``a`` runs along the true normal, the class means sit at
(+-g/2, 0), the optimal region is {a >= 0} and the estimated region is
{cos(alpha) a + sin(alpha) b >= kappa} with kappa = d0 / ||F_hat||.
Both error regions are wedges of opening alpha, and the Gaussian measure of
a wedge has a closed-form radial integral, leaving one angular integral.
"""

from dataclasses import dataclass

import numpy as np
from scipy import special

from . import normal
from .gaussian import angle_alpha, l2_gamma_norm

SQRT_2PI = np.sqrt(2.0 * np.pi)
COLLINEAR_SIN = 1e-12
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(32)
_GL_FINE_NODES, _GL_FINE_WEIGHTS = np.polynomial.legendre.leggauss(64)


class QuadratureError(RuntimeError):
    """Adaptive quadrature did not reach the requested tolerance."""


@dataclass(frozen=True)
class PlaneGeometry:
    g_norm: float
    ghat_norm: float
    alpha: float
    d0: float

    @property
    def e_perp(self):
        """||projection of F_hat orthogonal to F||_{L2(gamma_C)}."""
        return self.ghat_norm * np.sin(self.alpha)

    @property
    def inner(self):
        """<F, F_hat>_{L2(gamma_C)}."""
        return self.g_norm * self.ghat_norm * np.cos(self.alpha)

    @property
    def kappa(self):
        return self.d0 / self.ghat_norm

    @property
    def y_plus(self):
        e = self.e_perp
        yh = self.d0 / e if e > 0 else np.copysign(np.inf, self.d0) if self.d0 else 0.0
        return np.array([yh, 0.5 * self.g_norm])

    @property
    def y_minus(self):
        return self.y_plus - np.array([0.0, self.g_norm])

    @property
    def u(self):
        """tan(alpha) * d0 / e_perp, written so it stays finite at alpha = 0."""
        c = np.cos(self.alpha)
        if c == 0.0:
            return np.copysign(np.inf, self.d0) if self.d0 else 0.0
        return self.d0 / (self.ghat_norm * c)

    def to_dict(self):
        return {"g_norm": self.g_norm, "ghat_norm": self.ghat_norm,
                "alpha": self.alpha, "d0": self.d0, "e_perp": float(self.e_perp),
                "y_plus": [float(v) for v in self.y_plus],
                "y_minus": [float(v) for v in self.y_minus], "u": float(self.u)}


def plane_geometry(frontier, hat, cov):
    """Geometry of an estimated affine rule ``hat`` against the optimal ``frontier``."""
    f = frontier.normal
    f_hat = hat.normal
    return PlaneGeometry(
        g_norm=l2_gamma_norm(f, cov),
        ghat_norm=l2_gamma_norm(f_hat, cov),
        alpha=angle_alpha(f, f_hat, cov),
        d0=float(f_hat @ (np.asarray(hat.center) - np.asarray(frontier.center))),
    )


def _ray_mass(w, theta):
    """Angular density of the N(0, I_2) mass of the ray family {w + rho*omega(theta)}.

    Integrating over theta gives the Gaussian measure of a wedge with apex
    at offset ``w`` from the mean. Uses the cross product for |w|^2 - t^2
    so far-away apexes keep their precision.
    """
    ox, oy = np.cos(theta), np.sin(theta)
    t = w[0] * ox + w[1] * oy
    c2 = (w[0] * oy - w[1] * ox) ** 2
    out = np.empty_like(t)
    pos = t >= 0
    tp = t[pos]
    out[pos] = np.exp(-0.5 * (c2[pos] + tp * tp)) * (
        1.0 - tp * SQRT_2PI * 0.5 * special.erfcx(tp / np.sqrt(2.0)))
    tn = t[~pos]
    out[~pos] = (np.exp(-0.5 * (c2[~pos] + tn * tn))
                 - tn * SQRT_2PI * np.exp(-0.5 * c2[~pos]) * normal.cdf(-tn))
    return out / (2.0 * np.pi)


def _gl(fun, lo, hi, nodes, weights):
    half = 0.5 * (hi - lo)
    return half * np.dot(weights, fun(0.5 * (hi + lo) + half * nodes))


def _adaptive(fun, lo, hi, tol, depth=0, max_depth=40):
    coarse = _gl(fun, lo, hi, _GL_NODES, _GL_WEIGHTS)
    fine = _gl(fun, lo, hi, _GL_FINE_NODES, _GL_FINE_WEIGHTS)
    err = abs(fine - coarse)
    if err <= tol:
        return fine, err
    if depth >= max_depth:
        raise QuadratureError(
            f"angular quadrature stalled on [{lo:.6g}, {hi:.6g}] with error {err:.3e}")
    mid = 0.5 * (lo + hi)
    left, e1 = _adaptive(fun, lo, mid, 0.5 * tol, depth + 1, max_depth)
    right, e2 = _adaptive(fun, mid, hi, 0.5 * tol, depth + 1, max_depth)
    return left + right, e1 + e2


def wedge_mass(apex, mean, theta_lo, theta_hi, tol=1e-12):
    """N(mean, I_2) mass of {apex + rho*omega(theta): rho >= 0, theta in [lo, hi]}."""
    w = np.asarray(apex, dtype=float) - np.asarray(mean, dtype=float)
    if theta_hi <= theta_lo:
        return 0.0
    cuts = _breakpoints(w, theta_lo, theta_hi)
    pieces = [_adaptive(lambda th: _ray_mass(w, th), a, b, tol / (len(cuts) - 1))[0]
              for a, b in zip(cuts, cuts[1:])]
    return float(min(max(sum(pieces), 0.0), 1.0))


def _breakpoints(w, lo, hi):
    """Panel edges around the direction from the apex to the mean.

    Seen from an apex at distance |w|, the Gaussian mass fills an angular
    window of width about 1/|w|; without these cuts a far apex leaves the
    whole mass between quadrature nodes.
    """
    dist = float(np.hypot(w[0], w[1]))
    cuts = {lo, hi}
    if dist > 1.0:
        toward = np.arctan2(-w[1], -w[0])
        width = 1.0 / dist
        for shift in (-2 * np.pi, 0.0, 2 * np.pi):
            for k in (-256, -64, -16, -4, -1, 0, 1, 4, 16, 64, 256):
                t = toward + shift + k * width
                if lo < t < hi:
                    cuts.add(t)
    return sorted(cuts)


def _learning_error_collinear(geom):
    g2 = 0.5 * geom.g_norm
    kappa = geom.kappa
    if geom.alpha < 0.5 * np.pi:
        # estimated region {a >= kappa}
        p1 = normal.cdf(kappa - g2) - normal.cdf(-g2) if kappa > 0 else 0.0
        p0 = normal.cdf(g2) - normal.cdf(kappa + g2) if kappa < 0 else 0.0
    else:
        # estimated region {a <= -kappa}
        p1 = normal.sf(max(0.0, -kappa) - g2)
        p0 = normal.cdf(min(0.0, -kappa) + g2)
    return 0.5 * float(p1) + 0.5 * float(p0)


def learning_error_lda_2d(geom, tol=1e-12):
    """Learning error R = 1/2 P1(V minus V_hat) + 1/2 P0(V_hat minus V) of an affine rule."""
    if geom.ghat_norm <= 0.0:
        # constant rule: V_hat is everything, so R = P0(V)/2
        return 0.5 * float(normal.sf(0.5 * geom.g_norm))
    alpha = float(geom.alpha)
    s = np.sin(alpha)
    # below 1e-12 the collinear value is exact to O(sin(alpha)) and the apex
    # kappa/sin(alpha) would overflow
    if s < COLLINEAR_SIN or alpha >= np.pi:
        return _learning_error_collinear(geom)
    apex = np.array([0.0, geom.kappa / s])
    g2 = 0.5 * geom.g_norm
    w1 = wedge_mass(apex, (g2, 0.0), -0.5 * np.pi, alpha - 0.5 * np.pi, tol)
    w0 = wedge_mass(apex, (-g2, 0.0), 0.5 * np.pi, 0.5 * np.pi + alpha, tol)
    return 0.5 * w1 + 0.5 * w0
