"""Standard normal CDF and quantiles.

Every normal probability or quantile used in the package goes through this
module so that there is a single numerical source for them.
"""

import numpy as np
from scipy import special


def cdf(x):
    """Standard normal CDF Phi(x)."""
    return special.ndtr(x)


def sf(x):
    """Upper tail 1 - Phi(x), accurate for large x."""
    return special.ndtr(-np.asarray(x, dtype=float))


def ppf(p):
    """Inverse CDF Phi^{-1}(p)."""
    return special.ndtri(p)


def upper_quantile(alpha):
    """z(alpha) = Phi^{-1}(1 - alpha), the upper-tail quantile.

    Computed as -Phi^{-1}(alpha) so tiny alpha keeps full precision.
    """
    return -special.ndtri(alpha)


def interval_mass(a):
    """gamma_1([0, a]) = Phi(|a|) - 1/2 for a standard normal."""
    return special.ndtr(np.abs(a)) - 0.5


def pdf(x):
    x = np.asarray(x, dtype=float)
    return np.exp(-0.5 * x * x) / np.sqrt(2.0 * np.pi)
