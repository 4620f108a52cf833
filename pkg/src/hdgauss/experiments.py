"""Scripted experiments behind the command line.

Each runner takes a validated spec dict and returns an ``ExperimentResult``:
table rows, assertion records and named artifacts (rules). Runners do no
file I/O apart from reading dataset or rule paths named in the spec.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy import special

from . import concentration as conc
from .bounds import bounds_theorem_geometric
from .classifiers import (DEFAULT_BP, LdaRule, fit_diag_qda, fit_fisher_pseudo,
                          fit_lda_fdr_known_cov, fit_naive_lda)
from .gaussian import ClassificationProblem, optimal_frontier, separation
from .geometry import PlaneGeometry, learning_error_lda_2d
from .risk import (DEFAULT_MC_SAMPLES, draw_training_set, evaluate_rule,
                   expected_risk_sweep, monte_carlo_risks)
from .synth import ProblemSpec, make_problem

KINDS = ("fit", "predict", "bound_check", "rate_sweep", "tail_check", "geometry_sweep")
PROCEDURES = ("fdr-lda", "diag-qda", "fisher", "naive-lda")
SANDWICH_SLACK = 1e-9


class SpecError(ValueError):
    """Experiment spec fails validation."""


@dataclass
class ExperimentResult:
    kind: str
    rows: list
    assertions: list = field(default_factory=list)
    artifacts: dict = field(default_factory=dict)

    @property
    def failures(self):
        return [a for a in self.assertions if not a["passed"]]

    @property
    def passed(self):
        return not self.failures


def _assertion(name, passed, observed, bound, sigma=None, **configuration):
    return {"name": name, "passed": bool(passed), "observed": float(observed),
            "bound": float(bound), "sigma": None if sigma is None else float(sigma),
            "configuration": configuration}


def fit_rule(procedure, data, cov=None, center=None, b_p=DEFAULT_BP):
    """Dispatch to a fitting procedure by name."""
    if procedure not in PROCEDURES:
        raise SpecError(f"procedure must be one of {PROCEDURES}, got {procedure!r}")
    if procedure in ("fdr-lda", "naive-lda") and cov is None:
        cov = np.eye(data.dim)
    if procedure == "fdr-lda":
        return fit_lda_fdr_known_cov(data, cov, center_known=center, b_p=b_p)
    if procedure == "naive-lda":
        return fit_naive_lda(data, cov, center_known=center)
    if procedure == "fisher":
        return fit_fisher_pseudo(data)
    return fit_diag_qda(data, b_p=b_p)


def embed_geometry(g_norm, ghat_norm, alpha, d0, p, seed, cov_kind="random"):
    """A p-dimensional equal-covariance problem and affine rule with the given
    plane geometry (||F||, ||F_hat||, alpha, d0)."""
    if p < 2:
        raise ValueError("embedding needs p >= 2")
    rng = np.random.default_rng(seed)
    basis, _ = np.linalg.qr(rng.standard_normal((p, 2)))
    u1, u2 = basis[:, 0], basis[:, 1]
    if cov_kind == "identity":
        cov = np.eye(p)
        root = inv_root = np.eye(p)
    else:
        q_mat, _ = np.linalg.qr(rng.standard_normal((p, p)))
        lam = rng.uniform(0.5, 2.0, p)
        cov = (q_mat * lam) @ q_mat.T
        cov = 0.5 * (cov + cov.T)
        root = (q_mat * np.sqrt(lam)) @ q_mat.T
        inv_root = (q_mat / np.sqrt(lam)) @ q_mat.T
    m = root @ (g_norm * u1)
    center = rng.standard_normal(p)
    problem = ClassificationProblem.shared(center + 0.5 * m, center - 0.5 * m, cov)
    f_hat = inv_root @ (ghat_norm * (np.cos(alpha) * u1 + np.sin(alpha) * u2))
    shift = d0 * f_hat / (f_hat @ f_hat) if ghat_norm > 0 else np.zeros(p)
    return problem, LdaRule(f_hat, problem.s10 + shift)


def default_geometric_grid():
    """Configurations covering the four acute cases and obtuse angles.

    d0 is given as a multiple of |<F, F_hat>| for acute angles and of
    ||F|| ||F_hat|| otherwise.
    """
    return {"g_norm": [0.0, 0.5, 1.0, 2.0, 4.0],
            "ghat_norm": [1.0, 2.5],
            "alpha": [0.05, 0.3, 0.7, 1.0, 1.3, 1.5, 1.7, 2.3, 3.0],
            "d0_ratio": [0.0, 0.2, -0.25, 0.4, -0.5, 0.8, -2.0]}


def _grid_configs(grid):
    for g in grid["g_norm"]:
        for gh in grid["ghat_norm"]:
            for a in grid["alpha"]:
                for ratio in grid["d0_ratio"]:
                    ref = abs(g * gh * np.cos(a)) if a < 0.5 * np.pi else g * gh
                    yield PlaneGeometry(float(g), float(gh), float(a), float(ratio * ref))


def run_bound_check(spec):
    grid = {**default_geometric_grid(), **spec.get("grid", {})}
    rows, asserts = [], []
    for geom in _grid_configs(grid):
        learning = learning_error_lda_2d(geom)
        config = {"g_norm": geom.g_norm, "ghat_norm": geom.ghat_norm,
                  "alpha": geom.alpha, "d0": geom.d0}
        for b in bounds_theorem_geometric(geom):
            ok = None
            if b.applicable:
                if b.side == "lower":
                    ok = learning >= b.value - SANDWICH_SLACK
                else:
                    ok = learning <= min(b.value, 1.0) + SANDWICH_SLACK
                asserts.append(_assertion(f"sandwich:{b.name}", ok, learning, b.value,
                                          side=b.side, **config))
            rows.append({**config, "learning_error": learning, "bound": b.name,
                         "side": b.side, "value": b.value, "applicable": b.applicable,
                         "vacuous": b.vacuous, "holds": ok})
    return ExperimentResult("bound_check", rows, asserts)


def run_geometry_sweep(spec, seed):
    """Quadrature learning error on a list of configurations, optionally
    checked against full-dimensional Monte Carlo."""
    configs = spec.get("configs")
    if configs is None:
        configs = random_geometry_configs(int(spec.get("count", 30)), seed)
    n_mc = int(spec.get("evaluation", {}).get("n_samples", 0))
    rows, asserts = [], []
    for k, c in enumerate(configs):
        geom = PlaneGeometry(float(c["g_norm"]), float(c.get("ghat_norm", 1.0)),
                             float(c["alpha"]), float(c["d0"]))
        row = {"index": k, **geom.to_dict(), "learning_error": learning_error_lda_2d(geom)}
        row.pop("y_plus")
        row.pop("y_minus")
        if n_mc:
            p = int(c.get("p", 10))
            problem, rule = embed_geometry(geom.g_norm, geom.ghat_norm, geom.alpha,
                                           geom.d0, p, [int(seed), k])
            rep = monte_carlo_risks(rule, problem, n_mc, seed=int(seed) + k, project="none")
            tol = max(1e-3, 3 * rep.learning_std_error)
            row.update(p=p, mc_learning_error=rep.learning_error,
                       mc_std_error=rep.learning_std_error)
            asserts.append(_assertion("quadrature_vs_mc",
                                      abs(rep.learning_error - row["learning_error"]) <= tol,
                                      rep.learning_error, row["learning_error"],
                                      rep.learning_std_error, index=k, p=p))
        rows.append(row)
    return ExperimentResult("geometry_sweep", rows, asserts)


def random_geometry_configs(count, seed):
    rng = np.random.default_rng([int(seed), 101])
    out = []
    for _ in range(count):
        g = float(rng.uniform(0.0, 4.0))
        gh = float(rng.uniform(0.3, 3.0))
        alpha = float(rng.uniform(0.0, np.pi))
        d0 = float(rng.uniform(-1.0, 1.0) * g * gh)
        out.append({"g_norm": g, "ghat_norm": gh, "alpha": alpha, "d0": d0,
                    "p": int(rng.integers(2, 51))})
    return out


def _problem(spec, seed_default):
    if "problem" not in spec:
        return None
    d = dict(spec["problem"])
    d.setdefault("seed", seed_default)
    try:
        return make_problem(ProblemSpec.from_dict(d))
    except TypeError as exc:
        raise SpecError(f"problem: {exc}") from None


def run_fit(spec, seed, load_dataset=None):
    fit = spec.get("fit", {})
    procedure = fit.get("procedure", "fdr-lda")
    b_p = float(fit.get("b_p", DEFAULT_BP))
    problem = _problem(spec, seed)
    if problem is not None:
        n = int(fit.get("n_train", 100))
        data = draw_training_set(problem, n, [int(seed), 1])
        cov = problem.class1.covariance if problem.equal_covariance else None
        center = problem.s10 if fit.get("center_known") else None
    elif "dataset" in spec:
        data = load_dataset(spec["dataset"])
        cov, center = None, None
    else:
        raise SpecError("fit needs a 'problem' or a 'dataset'")
    rule = fit_rule(procedure, data, cov, center, b_p)
    row = {"procedure": procedure, "n": data.n, "p": data.dim, "b_p": b_p}
    row.update({k: v for k, v in getattr(rule, "info", {}).items()
                if not isinstance(v, (list, tuple))})
    if problem is not None:
        n_mc = int(spec.get("evaluation", {}).get("n_samples", DEFAULT_MC_SAMPLES))
        rep = evaluate_rule(rule, problem, n_mc, seed)
        row.update(weighted_risk=rep.weighted_risk, excess=rep.excess,
                   learning_error=rep.learning_error, method=rep.method,
                   bayes_risk=separation(problem).bayes_risk
                   if problem.equal_covariance else rep.bayes_risk)
    return ExperimentResult("fit", [row], [], {"rule": rule})


def run_predict(spec, seed, load_rule=None):
    problem = _problem(spec, seed)
    if problem is None:
        raise SpecError("predict needs a 'problem'")
    rule_ref = spec.get("rule", "bayes")
    rule = optimal_frontier(problem) if rule_ref == "bayes" else load_rule(rule_ref)
    n_mc = int(spec.get("evaluation", {}).get("n_samples", DEFAULT_MC_SAMPLES))
    rep = monte_carlo_risks(rule, problem, n_mc, seed, project="none")
    row = {"rule": rule_ref, "n_samples": rep.n_samples, "error_rate": rep.weighted_risk,
           "std_error": rep.mc_std_error, "learning_error": rep.learning_error}
    asserts = []
    if rule_ref == "bayes" and problem.equal_covariance:
        target = separation(problem).bayes_risk
        row["bayes_risk_exact"] = target
        asserts.append(_assertion("bayes_error_rate",
                                  abs(rep.weighted_risk - target) <= 3 * rep.mc_std_error,
                                  rep.weighted_risk, target, rep.mc_std_error))
    return ExperimentResult("predict", [row], asserts)


def run_rate_sweep(spec, seed):
    problem = _problem(spec, seed)
    if problem is None:
        raise SpecError("rate_sweep needs a 'problem'")
    fit = spec.get("fit", {})
    procedures = fit.get("procedures", [fit.get("procedure", "fdr-lda")])
    b_p = float(fit.get("b_p", DEFAULT_BP))
    center = problem.s10 if fit.get("center_known") else None
    cov = problem.class1.covariance if problem.equal_covariance else None
    ev = spec.get("evaluation", {})
    n_values = [int(n) for n in spec.get("n_values", [32, 64, 128, 256])]
    reps = int(ev.get("replicates", 20))
    n_mc = int(ev.get("n_samples", DEFAULT_MC_SAMPLES))
    rows, medians = [], {}
    for k, proc in enumerate(procedures):
        if proc not in PROCEDURES:
            raise SpecError(f"unknown procedure {proc!r}")
        summary, _ = expected_risk_sweep(
            lambda data, prob, proc=proc: fit_rule(proc, data, cov, center, b_p),
            problem, n_values, reps, int(seed), n_mc)
        for r in summary:
            rows.append({"procedure": proc, **r})
            medians[(proc, r["n"])] = r["median_excess"]
    asserts = []
    mono = spec.get("assert_monotone", procedures[0])
    if mono:
        seq = [medians[(mono, n)] for n in n_values]
        for a, b, n in zip(seq, seq[1:], n_values[1:]):
            asserts.append(_assertion("median_excess_decreasing", b < a, b, a,
                                      procedure=mono, n=n))
    for cmp in spec.get("assert_better", []):
        n = int(cmp["n"])
        good, bad = medians[(cmp["better"], n)], medians[(cmp["worse"], n)]
        asserts.append(_assertion("median_excess_better", good < bad, good, bad,
                                  better=cmp["better"], worse=cmp["worse"], n=n))
    return ExperimentResult("rate_sweep", rows, asserts)


def _expected_norm(p):
    """E||xi|| for xi ~ N(0, I_p)."""
    return float(np.sqrt(2.0) * np.exp(special.gammaln((p + 1) / 2) - special.gammaln(p / 2)))


def run_tail_check(spec, seed):
    """Laurent-Massart, Lipschitz and small-ball checks within 3 sigma."""
    n = int(spec.get("evaluation", {}).get("n_samples", DEFAULT_MC_SAMPLES))
    rng = np.random.default_rng([int(seed), 202])
    rows, asserts = [], []
    lm = spec.get("laurent_massart", {})
    s_grid = lm.get("s", [0.5, 1.0, 2.0, 3.0])
    for k, p in enumerate(lm.get("p_values", [1, 10, 200])):
        d = rng.uniform(0.0, 1.0, int(p))
        for r in conc.laurent_massart_check(d, s_grid, n, [int(seed), 1, k]):
            for side in ("upper", "lower"):
                obs, se = r[f"{side}_tail"], r[f"{side}_se"]
                ok = obs <= r["bound"] + 3 * se
                rows.append({"check": f"laurent_massart_{side}", "p": int(p), "s": r["s"],
                             "empirical": obs, "std_error": se, "bound": r["bound"],
                             "holds": ok})
                asserts.append(_assertion(f"laurent_massart_{side}", ok, obs, r["bound"],
                                          se, p=int(p), s=r["s"]))
    lip = spec.get("lipschitz", {})
    lip_s = lip.get("s", [0.5, 1.0, 2.0, 3.0])
    p_lip = int(lip.get("p", 20))
    a = rng.standard_normal(p_lip)
    checks = [("linear", lambda x: x @ a, float(np.linalg.norm(a)), 0.0),
              ("euclidean_norm", lambda x: np.linalg.norm(x, axis=1), 1.0,
               _expected_norm(p_lip))]
    for k, (name, fun, lip_norm, center) in enumerate(checks):
        for r in conc.lipschitz_check(fun, lip_norm, p_lip, [s * lip_norm for s in lip_s],
                                      n, [int(seed), 2, k], center=center):
            ok = r["tail"] <= r["bound"] + 3 * r["se"]
            rows.append({"check": f"lipschitz_{name}", "p": p_lip, "s": r["s"],
                         "empirical": r["tail"], "std_error": r["se"],
                         "bound": r["bound"], "holds": ok})
            asserts.append(_assertion(f"lipschitz_{name}", ok, r["tail"], r["bound"],
                                      r["se"], p=p_lip, s=r["s"]))
    sb = spec.get("small_ball", {})
    eps_grid = sb.get("eps", [0.001, 0.01, 0.1, 0.5, 1.0])
    # the first member, q = xi^2, is the sharp one-coordinate case
    family = [conc.QuadChaos(1.0, [], [1.0])]
    for _ in range(int(sb.get("count", 3))):
        size = int(rng.integers(1, 6))
        family.append(conc.QuadChaos(float(rng.normal()), rng.normal(size=size),
                                     rng.normal(size=size)))
    bounds = {"small_ball_3": conc.small_ball_bound_3,
              "small_ball_two_roots": conc.small_ball_bound_two_roots}
    for k, q in enumerate(family):
        probs, ses = conc.small_ball_probability(q, eps_grid, n, [int(seed), 3, k])
        for e, pr, se in zip(eps_grid, probs, ses):
            for name, fun in bounds.items():
                bound = fun(q, e)
                ok = pr <= bound + 3 * se
                rows.append({"check": name, "p": q.length, "s": float(e),
                             "empirical": float(pr), "std_error": float(se),
                             "bound": bound, "holds": ok})
                asserts.append(_assertion(name, ok, pr, bound, se, index=k,
                                          eps=float(e)))
    return ExperimentResult("tail_check", rows, asserts)


def validate(spec):
    if not isinstance(spec, dict):
        raise SpecError("spec must be a JSON object")
    kind = spec.get("kind")
    if kind not in KINDS:
        raise SpecError(f"kind must be one of {KINDS}, got {kind!r}")
    seed = spec.get("master_seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        raise SpecError("master_seed must be a nonnegative integer")
    b_p = spec.get("fit", {}).get("b_p")
    if b_p is not None and not 0.0 < float(b_p) < 0.5:
        raise SpecError(f"fit.b_p must lie in (0, 1/2), got {b_p}")
    return kind, seed


def run_experiment(spec, load_dataset=None, load_rule=None):
    kind, seed = validate(spec)
    try:
        if kind == "bound_check":
            return run_bound_check(spec)
        if kind == "geometry_sweep":
            return run_geometry_sweep(spec, seed)
        if kind == "fit":
            return run_fit(spec, seed, load_dataset)
        if kind == "predict":
            return run_predict(spec, seed, load_rule)
        if kind == "rate_sweep":
            return run_rate_sweep(spec, seed)
        return run_tail_check(spec, seed)
    except (KeyError, TypeError) as exc:
        raise SpecError(f"invalid {kind} spec: {exc!r}") from None
