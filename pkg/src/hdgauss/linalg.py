"""Symmetric-matrix functions through a single eigendecomposition.

Square roots clamp eigenvalues at zero; inverses refuse matrices whose
condition number exceeds a cap; the Moore-Penrose pseudo-inverse treats
eigenvalues below ``tol * lambda_max`` as kernel.
"""

import numpy as np

DEFAULT_CONDITION_CAP = 1e12
PINV_TOL = 1e-10
SYMMETRY_RTOL = 1e-12
PSD_RTOL = 1e-10


class IllConditionedError(ValueError):
    """Matrix is singular or too badly conditioned to invert."""


class NotPSDError(ValueError):
    """Matrix has an eigenvalue clearly below zero."""


def as_symmetric(a, name="matrix"):
    a = np.atleast_2d(np.asarray(a, dtype=float))
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"{name} must be square, got shape {a.shape}")
    scale = max(np.max(np.abs(a)), np.finfo(float).tiny)
    asym = np.max(np.abs(a - a.T))
    if asym > SYMMETRY_RTOL * scale:
        raise ValueError(
            f"{name} is not symmetric (max |A - A^T| = {asym:.3e})")
    return a


def eigh(a):
    """Eigendecomposition of the symmetrized matrix, ascending eigenvalues."""
    a = np.asarray(a, dtype=float)
    return np.linalg.eigh(0.5 * (a + a.T))


def check_psd(a, name="covariance"):
    """Return (eigenvalues, eigenvectors); raise NotPSDError if not PSD."""
    w, v = eigh(a)
    lam_max = max(w[-1], 0.0) if w.size else 0.0
    if w.size and w[0] < -PSD_RTOL * max(lam_max, np.finfo(float).tiny):
        raise NotPSDError(
            f"{name} is not positive semi-definite: eigenvalue "
            f"{w[0]:.6e} (largest {lam_max:.6e})")
    return w, v


def sqrtm(a):
    """Symmetric square root with eigenvalues clamped at zero."""
    w, v = check_psd(a)
    return (v * np.sqrt(np.clip(w, 0.0, None))) @ v.T


def check_condition(w, cap, name):
    lam_max = np.max(np.abs(w))
    lam_min = np.min(w)
    if lam_min <= 0.0 or lam_max == 0.0 or lam_max / lam_min > cap:
        cond = np.inf if lam_min <= 0.0 else lam_max / lam_min
        raise IllConditionedError(
            f"{name} is singular or ill-conditioned "
            f"(condition number {cond:.3e} > cap {cap:.1e})")


def inv(a, cap=DEFAULT_CONDITION_CAP, name="matrix"):
    w, v = eigh(a)
    check_condition(w, cap, name)
    return (v / w) @ v.T


def inv_sqrtm(a, cap=DEFAULT_CONDITION_CAP, name="matrix"):
    w, v = eigh(a)
    check_condition(w, cap, name)
    return (v / np.sqrt(w)) @ v.T


def logdet(a, cap=DEFAULT_CONDITION_CAP, name="matrix"):
    w, _ = eigh(a)
    check_condition(w, cap, name)
    return float(np.sum(np.log(w)))


def pinv(a, tol=PINV_TOL):
    """Moore-Penrose pseudo-inverse of a symmetric PSD matrix.

    Eigenvalues at or below ``tol * lambda_max`` are treated as zero, so
    the zero matrix maps to the zero matrix.
    """
    w, v = eigh(a)
    lam_max = np.max(np.abs(w)) if w.size else 0.0
    if lam_max == 0.0:
        return np.zeros_like(np.asarray(a, dtype=float))
    keep = w > tol * lam_max
    w_inv = np.zeros_like(w)
    w_inv[keep] = 1.0 / w[keep]
    return (v * w_inv) @ v.T


def diagonal_of(a):
    """The diagonal of ``a`` if ``a`` is exactly diagonal, else None."""
    a = np.asarray(a, dtype=float)
    d = np.diag(a)
    return None if np.count_nonzero(a - np.diag(d)) else d


def solve_spd(a, b, cap=DEFAULT_CONDITION_CAP, name="matrix"):
    """a^{-1} b for symmetric positive definite ``a`` (diagonal shortcut)."""
    d = diagonal_of(a)
    if d is not None:
        check_condition(d, cap, name)
        return np.asarray(b, dtype=float) / d
    return inv(a, cap=cap, name=name) @ b
