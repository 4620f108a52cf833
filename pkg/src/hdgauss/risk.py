"""Weighted misclassification risk, excess risk and learning error.

With class weights 1/2, C(g) = 1/2 P1(g = 0) + 1/2 P0(g = 1), the excess is
C(g) - C(g*) and the learning error R(g) is the weighted probability that g
errs where the optimal rule g* is right.
"""

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from . import normal
from .classifiers import LdaRule, classify
from .gaussian import (AffineFrontier, ContractError, l2_gamma_norm,
                       optimal_frontier, separation)
from .geometry import PlaneGeometry, learning_error_lda_2d, plane_geometry

DEFAULT_MC_SAMPLES = 1_000_000
CHUNK_ROWS = 1 << 16


@dataclass(frozen=True)
class RiskReport:
    weighted_risk: float
    excess: float
    learning_error: float
    method: str
    mc_std_error: float = None
    n_samples: int = None
    bayes_risk: float = None
    excess_std_error: float = None
    learning_std_error: float = None

    def to_dict(self):
        return asdict(self)


def worker_count():
    """Thread cap from HDGAUSS_THREADS (0 or unset means one per CPU)."""
    raw = os.environ.get("HDGAUSS_THREADS", "0").strip() or "0"
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"HDGAUSS_THREADS must be an integer, got {raw!r}") from None
    if n < 0:
        raise ValueError("HDGAUSS_THREADS must be >= 0")
    return n or (os.cpu_count() or 1)


def _is_affine(rule):
    return isinstance(rule, (LdaRule, AffineFrontier))


def _class_error_probs(normal_, center, problem):
    """(P1(value < 0), P0(value >= 0)) for an affine rule under equal covariances."""
    cov = problem.cov
    nh = l2_gamma_norm(normal_, cov)
    shift1 = float(normal_ @ (problem.class1.mean - center))
    shift0 = float(normal_ @ (problem.class0.mean - center))
    if nh == 0.0:
        return float(shift1 < 0), float(shift0 >= 0)
    return float(normal.cdf(-shift1 / nh)), float(normal.cdf(shift0 / nh))


def weighted_risk_affine(rule, problem):
    """Exact C(g) of an affine rule on an equal-covariance problem."""
    if not problem.equal_covariance:
        raise ContractError("weighted_risk_affine needs equal covariances; "
                            "use monte_carlo_risks")
    if rule.normal.shape != problem.m10.shape:
        raise ValueError(f"dimension mismatch: rule p={rule.normal.size}, "
                         f"problem p={problem.dim}")
    e1, e0 = _class_error_probs(rule.normal, rule.center, problem)
    return 0.5 * e1 + 0.5 * e0


def affine_risks(rule, problem):
    """Closed-form C(g) and excess plus quadrature learning error for an affine rule."""
    risk = weighted_risk_affine(rule, problem)
    bayes = separation(problem).bayes_risk
    frontier = optimal_frontier(problem)
    if frontier.degenerate:
        # g* is the constant class 1, right on class 1 only
        learning = 0.5 * _class_error_probs(rule.normal, rule.center, problem)[0]
    elif l2_gamma_norm(rule.normal, problem.cov) == 0.0:
        learning = learning_error_lda_2d(
            PlaneGeometry(l2_gamma_norm(frontier.normal, problem.cov), 0.0, 0.0, 0.0))
    else:
        learning = learning_error_lda_2d(plane_geometry(frontier, rule, problem.cov))
    return RiskReport(weighted_risk=risk, excess=risk - bayes, learning_error=learning,
                      method="quadrature_2d", bayes_risk=bayes)


def _projection_sampler(rule, frontier, measure, cov):
    """Sampler of (rule value, optimal value) for affine rules: an exact 2-D law."""
    a = np.vstack([rule.normal, frontier.normal])
    mean = np.array([rule.normal @ (measure.mean - rule.center),
                     frontier.normal @ (measure.mean - frontier.center)])
    gram = a @ cov @ a.T
    w, v = np.linalg.eigh(0.5 * (gram + gram.T))
    root = (v * np.sqrt(np.clip(w, 0.0, None))) @ v.T

    def draw(rng, size):
        vals = mean + rng.standard_normal((size, 2)) @ root
        return vals[:, 0] >= 0, vals[:, 1] >= 0
    return draw


def _full_sampler(rule, frontier, measure):
    def draw(rng, size):
        x = measure.from_standard(rng.standard_normal((size, measure.dim)))
        return classify(rule, x) == 1, classify(frontier, x) == 1
    return draw


def _chunk_counts(draw, label, seed, chunk_index, size):
    rng = np.random.default_rng(np.random.SeedSequence([seed, label, chunk_index]))
    says1, opt1 = draw(rng, size)
    if label == 1:
        err, opt_err = ~says1, ~opt1
    else:
        err, opt_err = says1, opt1
    return np.array([np.count_nonzero(err), np.count_nonzero(opt_err),
                     np.count_nonzero(err & ~opt_err), np.count_nonzero(~err & opt_err)],
                    dtype=np.int64)


def monte_carlo_risks(rule, problem, n_samples=DEFAULT_MC_SAMPLES, seed=0,
                      project="auto", workers=None):
    """Monte Carlo estimates of C(g), excess and R(g) on one shared sample stream.

    Half the budget goes to each class. The stream is cut into fixed-size
    chunks seeded by (seed, class, chunk index), so results do not depend on
    the number of worker threads. With ``project="auto"`` an affine rule on
    an equal-covariance problem samples the exact joint law of the two
    frontier values instead of full p-dimensional points; ``project="none"``
    always samples points in R^p.
    """
    if project not in ("auto", "none"):
        raise ValueError("project must be 'auto' or 'none'")
    if rule.dim != problem.dim:
        raise ValueError(f"dimension mismatch: rule p={rule.dim}, problem p={problem.dim}")
    n_samples = int(n_samples)
    if n_samples < 2:
        raise ValueError("n_samples must be at least 2")
    seed = int(seed) % (1 << 64)
    frontier = optimal_frontier(problem)
    projected = (project == "auto" and problem.equal_covariance and _is_affine(rule))
    n_per = {1: n_samples // 2, 0: n_samples - n_samples // 2}
    tasks = []
    for label, measure in ((1, problem.class1), (0, problem.class0)):
        draw = (_projection_sampler(rule, frontier, measure, problem.cov) if projected
                else _full_sampler(rule, frontier, measure))
        n = n_per[label]
        for j, start in enumerate(range(0, n, CHUNK_ROWS)):
            tasks.append((draw, label, j, min(CHUNK_ROWS, n - start)))
    n_workers = workers or worker_count()
    run = lambda t: (t[1], _chunk_counts(t[0], t[1], seed, t[2], t[3]))
    if n_workers > 1 and len(tasks) > 1:
        with ThreadPoolExecutor(n_workers) as pool:
            results = list(pool.map(run, tasks))
    else:
        results = [run(t) for t in tasks]
    counts = {1: np.zeros(4, np.int64), 0: np.zeros(4, np.int64)}
    for label, c in results:
        counts[label] += c
    return _report(counts, n_per, "monte_carlo")


def _report(counts, n_per, method):
    risk = bayes = excess = learning = 0.0
    var_risk = var_excess = var_learning = 0.0
    for label in (1, 0):
        n = n_per[label]
        e, es, a, b = (float(v) / n for v in counts[label])
        risk += 0.5 * e
        bayes += 0.5 * es
        excess += 0.5 * (a - b)
        learning += 0.5 * a
        var_risk += 0.25 * e * (1 - e) / n
        var_excess += 0.25 * ((a + b) - (a - b) ** 2) / n
        var_learning += 0.25 * a * (1 - a) / n
    return RiskReport(weighted_risk=risk, excess=excess, learning_error=learning,
                      method=method, mc_std_error=float(np.sqrt(var_risk)),
                      n_samples=int(n_per[1] + n_per[0]), bayes_risk=bayes,
                      excess_std_error=float(np.sqrt(max(var_excess, 0.0))),
                      learning_std_error=float(np.sqrt(var_learning)))


def draw_training_set(problem, n, seed):
    """n labelled draws, n//2 from class 1 and the rest from class 0."""
    from .classifiers import LabeledDataset
    from .gaussian import sample
    n1 = n // 2
    s1, s0 = np.random.SeedSequence(seed if isinstance(seed, (list, tuple))
                                    else int(seed) % (1 << 64)).spawn(2)
    return LabeledDataset.from_classes(sample(problem.class1, n1, s1),
                                       sample(problem.class0, n - n1, s0))


def evaluate_rule(rule, problem, n_mc=DEFAULT_MC_SAMPLES, seed=0):
    """Exact risks for affine rules on equal-covariance problems, Monte Carlo otherwise."""
    if problem.equal_covariance and _is_affine(rule):
        return affine_risks(rule, problem)
    return monte_carlo_risks(rule, problem, n_mc, seed)


def expected_risk_sweep(fit_procedure, problem, n_values, replicates, seed,
                        n_mc=DEFAULT_MC_SAMPLES):
    """Fit ``replicates`` rules per training size and tabulate their risks.

    ``problem`` is a ClassificationProblem or a callable mapping a replicate
    seed to one. ``fit_procedure(data, problem)`` returns a rule. Returns
    (summary rows, per-replicate rows); both are lists of dicts.
    """
    from .bounds import bound_theorem_lda
    raw, summary = [], []
    for i, n in enumerate(n_values):
        for j in range(replicates):
            rep_seed = [int(seed) % (1 << 64), i, j]
            prob = problem(rep_seed) if callable(problem) else problem
            rule = fit_procedure(draw_training_set(prob, int(n), rep_seed), prob)
            report = evaluate_rule(rule, prob, n_mc, rep_seed[0] + 7919 * (i + 1) + j)
            row = {"n": int(n), "replicate": j, "excess": report.excess,
                   "learning_error": report.learning_error,
                   "weighted_risk": report.weighted_risk, "method": report.method}
            if prob.equal_covariance and _is_affine(rule):
                row["upper_basic"] = bound_theorem_lda(
                    optimal_frontier(prob), rule, prob)[0].value
            raw.append(row)
        rows = [r for r in raw if r["n"] == int(n)]
        ex = np.array([r["excess"] for r in rows])
        le = np.array([r["learning_error"] for r in rows])
        entry = {"n": int(n), "replicates": replicates,
                 "median_excess": float(np.median(ex)), "mean_excess": float(ex.mean()),
                 "median_learning_error": float(np.median(le)),
                 "mean_learning_error": float(le.mean())}
        if "upper_basic" in rows[0]:
            entry["median_upper_basic"] = float(np.median([r["upper_basic"] for r in rows]))
        summary.append(entry)
    return summary, raw
