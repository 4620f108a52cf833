"""Evaluators for the excess-risk and learning-error bounds.

Each evaluator returns ``BoundReport`` records. A bound whose hypotheses
fail is still computed (for diagnostics) but flagged ``applicable=False``;
upper bounds above 1 are flagged ``vacuous``.
"""

from dataclasses import asdict, dataclass, field

import numpy as np

from . import linalg, normal
from .gaussian import l2_gamma_inner, l2_gamma_norm

SQRT_PI = np.sqrt(np.pi)


@dataclass(frozen=True)
class BoundReport:
    name: str
    value: float
    applicable: bool
    side: str
    inputs: dict = field(default_factory=dict)

    @property
    def vacuous(self):
        return self.side == "upper" and self.value > 1.0

    def to_dict(self):
        out = asdict(self)
        out["vacuous"] = self.vacuous
        return out


def _report(name, value, applicable, side, **inputs):
    return BoundReport(name, float(value), bool(applicable), side,
                       {k: (float(v) if isinstance(v, (float, np.floating)) else v)
                        for k, v in inputs.items()})


def excess_bound_terms(frontier, hat, cov):
    """(E, ||F||) where E = 4||F||/(sqrt(pi)||F_hat||) |d0| + ||F - F_hat||."""
    f, f_hat = frontier.normal, hat.normal
    g = l2_gamma_norm(f, cov)
    gh = l2_gamma_norm(f_hat, cov)
    d0 = float(f_hat @ (np.asarray(hat.center) - np.asarray(frontier.center)))
    shift = 0.0 if d0 == 0.0 else (4.0 * g / (SQRT_PI * gh)) * abs(d0)
    return shift + l2_gamma_norm(f - f_hat, cov), g, gh, d0


def bound_theorem_lda(frontier, hat, problem):
    """Upper bounds on the excess risk of an affine plug-in rule.

    ``upper_basic`` = E/||F||; ``upper_refined`` multiplies it by
    exp(-||F||^2/32) and needs |d0| <= |<F_hat, F>|/4 and alpha <= pi/4.
    """
    cov = problem.cov
    e, g, gh, d0 = excess_bound_terms(frontier, hat, cov)
    if g == 0.0:
        raise ValueError("bound_theorem_lda needs a nondegenerate optimal frontier")
    basic = e / g
    inner = l2_gamma_inner(hat.normal, frontier.normal, cov)
    cos_alpha = inner / (g * gh) if gh > 0 else 0.0
    refined_ok = gh > 0 and abs(d0) <= 0.25 * abs(inner) and cos_alpha >= np.cos(np.pi / 4)
    refined = np.exp(-g * g / 32.0) * basic
    common = dict(E=e, g_norm=g, ghat_norm=gh, d0=d0, inner=inner)
    return [_report("upper_basic", basic, True, "upper", **common),
            _report("upper_refined", refined, refined_ok, "upper", **common)]


def _gamma1(x):
    return float(normal.interval_mass(x))


def bounds_theorem_geometric(geom):
    """Case-selected lower and upper bounds on R from (alpha, d0, ||F||).

    For alpha >= pi/2 only the lower bound 1/2 is emitted. Otherwise R <= 1/2
    holds and |d0| versus |<F, F_hat>| picks among the four cases; the d0 = 0
    case also carries the case-1 pair, whose hypothesis it satisfies.
    """
    alpha, d0, g = float(geom.alpha), float(geom.d0), float(geom.g_norm)
    inputs = dict(alpha=alpha, d0=d0, g_norm=g, ghat_norm=float(geom.ghat_norm))
    if not 0.0 <= alpha <= np.pi:
        raise ValueError(f"alpha must lie in [0, pi], got {alpha}")
    if alpha >= 0.5 * np.pi:
        return [_report("obtuse_lower", 0.5, True, "lower", case="obtuse", **inputs)]
    inner = abs(geom.inner)
    ratio = abs(d0) / inner if inner > 0 else (0.0 if d0 == 0 else np.inf)
    u = abs(geom.u)
    tan = np.tan(alpha)
    sector = alpha / (2.0 * np.pi)
    upper_wide = sector + _gamma1((1.0 + tan) * u)
    out = [_report("half_upper", 0.5, True, "upper", case="acute", **inputs)]
    if d0 == 0.0:
        out.append(_report("case4_lower", np.exp(-g * g / 8.0) * sector, True, "lower",
                           case=4, **inputs))
    if ratio <= 0.25:
        case = 1
        lower = np.exp(-g * g / 8.0) * 0.25 * (sector + 0.5 * _gamma1(u))
        upper = np.exp(-(g * np.cos(alpha)) ** 2 / 32.0) * upper_wide
    elif ratio <= 0.5:
        case = 2
        lower = np.exp(-g * g / 2.0) * 0.25 * (0.5 * _gamma1(g / 4.0) + sector)
        upper = upper_wide
    else:
        case = 3
        lower = alpha / (4.0 * np.pi) + 0.25 * _gamma1(g / 2.0)
        upper = upper_wide
    out.append(_report(f"case{case}_lower", lower, True, "lower", case=case,
                       ratio=ratio, **inputs))
    out.append(_report(f"case{case}_upper", upper, True, "upper", case=case,
                       ratio=ratio, **inputs))
    return out


def well_separated_diagnostic(geom):
    """Regime predicted for large ||F|| cos(alpha): R -> 0 when 2|d0|/|<F, F_hat>| < 1,
    R eventually >= 1/8 when it exceeds 1. Reported only, never asserted."""
    inner = abs(geom.inner)
    ratio = 2.0 * abs(geom.d0) / inner if inner > 0 else np.inf
    if not 0.0 < geom.alpha < 0.5 * np.pi:
        regime = "outside"
    elif ratio < 1.0:
        regime = "vanishing"
    elif ratio > 1.0:
        regime = "at_least_one_eighth"
    else:
        regime = "boundary"
    return {"ratio": float(ratio), "regime": regime,
            "separation_cos": float(geom.g_norm * np.cos(geom.alpha))}


def bound_prop_incons(n, p, r):
    """Lower bound arccos(sqrt(n/p))/(2 pi) exp(-r^2/8) on E[R] of the pseudo-inverse rule."""
    if p <= 0 or n < 0:
        raise ValueError("need p > 0 and n >= 0")
    arg = np.sqrt(n / p)
    ok = arg <= 1.0
    value = np.arccos(arg) / (2 * np.pi) * np.exp(-r * r / 8.0) if ok else 0.0
    return _report("prop_incons_lower", value, ok, "lower", n=n, p=p, r=r, arg=arg)


def bound_prop_errlin(n, p, r):
    """Lower bound arccos((sqrt(n) r + 1)/sqrt(p-3))/(2 pi) exp(-r^2/8) for the naive rule."""
    if p <= 3:
        raise ValueError("bound_prop_errlin needs p > 3")
    arg = (np.sqrt(n) * r + 1.0) / np.sqrt(p - 3.0)
    ok = arg <= 1.0
    value = np.arccos(arg) / (2 * np.pi) * np.exp(-r * r / 8.0) if ok else 0.0
    return _report("prop_errlin_lower", value, ok, "lower", n=n, p=p, r=r, arg=arg)


def bound_reverse(r, learning_error):
    """Lower bound min{sqrt(2 pi)/512 r e^{r^2/8} R^2, R/8} on the excess risk."""
    if not 0.0 <= learning_error <= 1.0:
        raise ValueError(f"learning_error must lie in [0, 1], got {learning_error}")
    quad = np.sqrt(2 * np.pi) / 512.0 * r * np.exp(r * r / 8.0) * learning_error**2
    value = min(quad, learning_error / 8.0)
    return _report("reverse_lower", value, True, "lower", r=r, R=learning_error)


def quadratic_l2_norm_sq(frontier, mean, cov):
    """E[f(X)^2] for X ~ N(mean, cov) and f a QuadraticFrontier."""
    cov = np.asarray(cov, dtype=float)
    a = frontier.quad
    b = np.asarray(mean, dtype=float) - frontier.center
    # value(mean + y) = -1/2 y'Ay + (G - A b)'y + value(mean)
    lin = frontier.linear - a @ b
    const = float(frontier.value(np.asarray(mean, dtype=float)))
    ac = a @ cov
    m = const - 0.5 * np.trace(ac)
    return 0.5 * np.sum(ac * ac.T) + lin @ cov @ lin + m * m


def perturbation(true_f, hat_f):
    """(delta0, deltaL, deltaQ) with hat(x) = true(x) + delta0 + <deltaL, x - s>
    - 1/2 <deltaQ (x - s), x - s>, s the center of ``true_f``."""
    s = true_f.center
    e = hat_f.center - s
    a_hat = hat_f.quad
    delta_q = a_hat - true_f.quad
    delta_l = hat_f.linear - true_f.linear + 0.5 * (a_hat + a_hat.T) @ e
    delta_0 = (true_f.offset - hat_f.offset - hat_f.linear @ e - 0.5 * e @ a_hat @ e)
    return float(delta_0), delta_l, delta_q


def qda_perturbation_sum(true_f, hat_f, ref_cov):
    """S = 1/2 ||C dA||_HS^2 + ||C^{1/2} deltaL||^2 + 2 delta0^2 + 1/2 tr(C dA)^2."""
    cov = linalg.as_symmetric(ref_cov, "ref_cov")
    delta_0, delta_l, delta_q = perturbation(true_f, hat_f)
    cd = cov @ delta_q
    return float(0.5 * np.sum(cd * cd) + delta_l @ cov @ delta_l
                 + 2.0 * delta_0**2 + 0.5 * np.trace(cd) ** 2)


def bound_qda_corollary(true_f, hat_f, ref_cov, r, q, c1):
    """c1 * S^(q/3); applicable when ||L||^2 in L2(N(s, C)) exceeds r.

    The constant c1 is the caller's: no explicit value exists for it. The
    bare sum S is returned in ``inputs`` for constant-free checks.
    """
    if not 0.0 < q < 1.0:
        raise ValueError("q must lie in (0, 1)")
    s = qda_perturbation_sum(true_f, hat_f, ref_cov)
    norm_sq = quadratic_l2_norm_sq(true_f, true_f.center, ref_cov)
    delta_0, _, _ = perturbation(true_f, hat_f)
    return _report("qda_corollary_upper", c1 * s ** (q / 3.0), norm_sq > r, "upper",
                   S=s, norm_sq=norm_sq, delta0=delta_0, q=q, c1=c1, r=r)
