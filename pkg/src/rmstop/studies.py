"""Simulation studies expressed as :class:`~rmstop.harness.StudyConfig` objects.

Studies 5 and 6 monitor single series and live in :mod:`rmstop.ingest`.
"""

import math
from dataclasses import replace

import numpy as np

from . import benchmarks as bm
from .errors import ConfigError
from .harness import Cell, ReplicationOutcome, StudyConfig
from .logistic import (
    detect_separation,
    fit_ridge_logistic,
    predict_prob,
    predictive_width,
    simulate_logistic_scenario,
)
from .quasi_rm import PerturbationSpec
from .scorecard import (
    ScorecardConfig,
    ScoreTrace,
    evaluate_rules,
    evaluate_rules_lazy,
    increments,
)
from .targets import gaussian_posterior_mean, running_mean_reverse_defect
from .uncertainty import gaussian_width, jeffreys_beta_width, jeffreys_gamma_width

DEFAULT_SEED = 20240917
R_SOURCES = ("reverse_defect", "increment")
STUDY_IDS = (1, 2, 3, 4, 7)


def _stability(s, n, m, source):
    if source == "reverse_defect":
        return running_mean_reverse_defect(s, n)
    if source == "increment":
        return increments(m)
    raise ConfigError(f"r source must be one of {R_SOURCES}, got {source!r}")


def _taus(reports):
    return {r.rule: r.tau for r in reports}


def _max_finite(values):
    arr = np.asarray(values, dtype=float)
    arr = arr[np.isfinite(arr)]
    return float(arr.max()) if arr.size else 0.0


def _fmt_g(x):
    return f"{x:.3g}"


def _exact_extras(cell, outcomes):
    same = np.mean([o.taus["rm"] == o.taus["two_cond"] for o in outcomes]) * 100.0
    return (
        ("r_source", cell.params["r_source"]),
        ("max_r", _fmt_g(max(o.diagnostics["max_r"] for o in outcomes))),
        ("max_increment", _fmt_g(max(o.diagnostics["max_increment"] for o in outcomes))),
        ("pct_rm_eq_2cond", f"{same:.1f}"),
    )


def _scorecard(params):
    return ScorecardConfig(epsilon=params["epsilon"], width_max=params["width_max"],
                           eta=params["eta"], n_min=params["n_min"], n_max=params["n_max"],
                           alpha=params["alpha"], probability_scale=params.get("probability_scale", True))


def _validate_scorecard(cell):
    _scorecard(cell.params)


# Study 1: Bernoulli rare events

def simulate_bernoulli(cell, rngs):
    p = cell.params
    cfg = _scorecard(p)
    sprt = bm.SprtConfig.for_epsilon(p["epsilon"])
    n = np.arange(1, cfg.n_max + 1)
    out = []
    for rng in rngs:
        y = (rng.random(cfg.n_max) < p["p"]).astype(float)
        s = np.cumsum(y)
        m = s / n
        r = _stability(s, n, m, p["r_source"])
        reports = evaluate_rules_lazy(
            m, m, r, lambda i: jeffreys_beta_width(s[i], i + 1, cfg.alpha).width, cfg, mle=m)
        taus = _taus(reports)
        taus["sprt"] = bm.sprt_bernoulli_run(y, sprt).tau
        zero = {rep.rule: rep.stopped and rep.mle_at_tau == 0.0 for rep in reports}
        stop = taus["rm"] or cfg.n_max
        out.append(ReplicationOutcome(
            taus=taus, mle_zero={"rm": zero["rm"]},
            diagnostics={"max_r": _max_finite(r[:stop]),
                         "max_increment": _max_finite(increments(m)[:stop])}))
    return out


def study1(reps=1000, seed=DEFAULT_SEED, ps=(0.001, 0.005, 0.010, 0.050), epsilons=(0.005, 0.010),
           r_source="reverse_defect", n_max=5000):
    cells = []
    for eps in epsilons:
        for prob in ps:
            params = dict(p=prob, epsilon=eps, width_max=0.02, eta=1e-6, n_min=30, n_max=n_max,
                          alpha=0.05, r_source=r_source)
            cells.append(Cell(labels=(("p", prob), ("eps", eps)), params=params, truth=prob, epsilon=eps))
    return StudyConfig(1, "Bernoulli rare events", tuple(cells), reps, seed,
                       ("boundary_only", "two_cond", "rm", "sprt"), simulate_bernoulli,
                       validate_cell=_validate_scorecard, cell_extras=_exact_extras,
                       metadata={"r_source": r_source, "width": "jeffreys_beta_equal_tailed"})


# Study 2: ridge logistic regression

def simulate_logistic(cell, rngs):
    p = cell.params
    cfg = _scorecard(p)
    d = p["d"]
    x0 = np.zeros(d)
    out = []
    for rng in rngs:
        design = simulate_logistic_scenario(d, p["rho"], cfg.n_max, rng, ridge=p["ridge"])
        size = cfg.n_max
        m = np.full(size, np.nan)
        b = np.full(size, np.inf)
        width = np.full(size, np.inf)
        beta = None
        last = size
        start = max(cfg.n_min - 1, 1)
        for n in range(start, size + 1):
            sub = design.head(n)
            fit = fit_ridge_logistic(sub, init=beta)
            beta = fit.coefficients
            i = n - 1
            m[i] = predict_prob(beta, x0)
            b[i] = min(m[i], 1.0 - m[i])
            width[i] = predictive_width(fit, sub, x0, cfg.alpha)
            if n >= cfg.n_min and b[i] <= cfg.epsilon and width[i] <= cfg.width_max \
                    and abs(m[i] - m[i - 1]) <= cfg.eta:
                last = n
                break
        r = increments(m[:last])
        r[np.isnan(r)] = np.inf
        trace = ScoreTrace(n=np.arange(1, last + 1), m=m[:last], b=b[:last],
                           width=width[:last], r=r)
        reports = evaluate_rules(trace, cfg)
        separated = detect_separation(design.head(p["n_sep"]))
        out.append(ReplicationOutcome(taus=_taus(reports),
                                      diagnostics={"separated": float(separated)}))
    return out


def _logistic_extras(cell, outcomes):
    pct = 100.0 * np.mean([o.diagnostics["separated"] for o in outcomes])
    return (("pct_sep", f"{pct:.1f}"), ("n_sep", cell.params["n_sep"]))


def _validate_logistic(cell):
    _validate_scorecard(cell)
    if cell.params["n_sep"] > cell.params["n_max"]:
        raise ConfigError("separation snapshot beyond the horizon")


def study2(reps=1000, seed=DEFAULT_SEED, scenarios=((3, 0.01), (3, 0.005), (20, 0.01)), n_sep=100):
    cells = []
    for d, rho in scenarios:
        params = dict(d=d, rho=rho, ridge=1.0, epsilon=0.05, width_max=0.05, eta=0.01, n_min=30,
                      n_max=500 if d <= 3 else 1000, alpha=0.05, n_sep=n_sep)
        cells.append(Cell(labels=(("d", d), ("rho", rho)), params=params, truth=rho, epsilon=0.05))
    return StudyConfig(2, "ridge logistic regression", tuple(cells), reps, seed,
                       ("boundary_only", "two_cond", "rm"), simulate_logistic,
                       validate_cell=_validate_logistic, cell_extras=_logistic_extras,
                       metadata={"r_source": "increment", "width": "delta_method",
                                 "x0": "origin", "ridge_on_intercept": True})


# Study 3: Gaussian negative control

def simulate_normal(cell, rngs):
    p = cell.params
    cfg = _scorecard(p)
    n = np.arange(1, cfg.n_max + 1)
    z = gaussian_width(0, 1.0, cfg.alpha) / 2.0
    width = 2.0 * z / np.sqrt(n / p["sigma2"] + 1.0)
    out = []
    for rng in rngs:
        x = p["mu"] + math.sqrt(p["sigma2"]) * rng.standard_normal(cfg.n_max)
        s = np.cumsum(x)
        m = gaussian_posterior_mean(s / n, n, p["sigma2"])
        r = _stability(s, n, s / n, p["r_source"])
        trace = ScoreTrace(n=n, m=m, b=np.abs(m), width=width, r=r)
        reports = evaluate_rules(trace, cfg)
        taus = _taus(reports)
        taus["cusum"] = bm.cusum_normal_run(x, p["k"], p["h"]).tau
        stop = taus["rm"] or cfg.n_max
        out.append(ReplicationOutcome(
            taus=taus, diagnostics={"max_r": _max_finite(r[:stop]),
                                    "max_increment": _max_finite(increments(s / n)[:stop])}))
    return out


def _normal_extras(cell, outcomes):
    return _exact_extras(cell, outcomes) + (("cusum_h", f"{cell.params['h']:.4f}"),)


def study3(reps=1000, seed=DEFAULT_SEED, mus=(0.0, 0.01, 0.02, 0.05, 0.10), k=0.025, arl0=500.0,
           h=None, calibration_seed=1, r_source="reverse_defect"):
    if h is None:
        h, _ = bm.calibrated_threshold(bm.NormalCusumModel(k), arl0, seed=calibration_seed)
    cells = []
    for mu in mus:
        params = dict(mu=mu, sigma2=1.0, epsilon=0.05, width_max=0.05, eta=1e-6, n_min=30,
                      n_max=3000, alpha=0.05, probability_scale=False, k=k, h=h, r_source=r_source)
        cells.append(Cell(labels=(("mu", mu),), params=params, truth=mu, epsilon=0.05))
    return StudyConfig(3, "Gaussian calibration", tuple(cells), reps, seed,
                       ("boundary_only", "two_cond", "rm", "cusum"), simulate_normal,
                       validate_cell=_validate_scorecard, cell_extras=_normal_extras,
                       metadata={"r_source": r_source, "cusum_k": k, "cusum_h": h, "arl0": arl0})


# Study 4: Poisson surveillance

def simulate_poisson(cell, rngs):
    p = cell.params
    cfg = _scorecard(p)
    sprt = bm.SprtConfig.for_epsilon(p["epsilon"])
    n = np.arange(1, cfg.n_max + 1)
    out = []
    for rng in rngs:
        x = rng.poisson(p["lam"], cfg.n_max).astype(float)
        s = np.cumsum(x)
        m = s / n
        r = _stability(s, n, m, p["r_source"])
        reports = evaluate_rules_lazy(
            m, m, r,
            lambda i: jeffreys_gamma_width(s[i], i + 1, cfg.alpha, p["prior_rate"]).width,
            cfg, mle=m)
        taus = _taus(reports)
        taus["sprt"] = bm.sprt_poisson_run(x, sprt).tau
        taus["cusum"] = bm.cusum_poisson_run(x, p["epsilon"], 2.0 * p["epsilon"], p["h"]).tau
        rm = reports.rm
        stop = taus["rm"] or cfg.n_max
        out.append(ReplicationOutcome(
            taus=taus, mle_zero={"rm": rm.stopped and rm.mle_at_tau == 0.0},
            diagnostics={"max_r": _max_finite(r[:stop]),
                         "max_increment": _max_finite(increments(m)[:stop])}))
    return out


def _poisson_extras(cell, outcomes):
    return _exact_extras(cell, outcomes) + (
        ("cusum_h", f"{cell.params['h']:.4f}"), ("cusum_arl0_est", f"{cell.params['arl0_est']:.1f}"))


def study4(reps=1000, seed=DEFAULT_SEED, lams=(0.001, 0.005, 0.010, 0.050), epsilons=(0.005, 0.010),
           arl0=500.0, calibration_seed=1, prior_rate=0.0, r_source="reverse_defect", n_max=5000):
    thresholds = {}
    for eps in epsilons:
        model = bm.PoissonCusumModel(eps, 2.0 * eps)
        thresholds[eps] = bm.calibrated_threshold(model, arl0, seed=calibration_seed, strict=False)
    cells = []
    for eps in epsilons:
        h, arl = thresholds[eps]
        for lam in lams:
            params = dict(lam=lam, epsilon=eps, width_max=0.02, eta=1e-6, n_min=30, n_max=n_max,
                          alpha=0.05, prior_rate=prior_rate, h=h, arl0_est=arl, r_source=r_source)
            cells.append(Cell(labels=(("lam", lam), ("eps", eps)), params=params, truth=lam, epsilon=eps))
    return StudyConfig(4, "Poisson surveillance", tuple(cells), reps, seed,
                       ("boundary_only", "two_cond", "rm", "sprt", "cusum"), simulate_poisson,
                       validate_cell=_validate_scorecard, cell_extras=_poisson_extras,
                       metadata={"r_source": r_source, "prior_rate": prior_rate, "arl0": arl0})


# Study 7: quasi reverse-martingale perturbations

CHECKPOINTS = (100, 500, 2000)


def simulate_perturbation(cell, rngs):
    p = cell.params
    cfg = _scorecard(p)
    spec = PerturbationSpec(p["scenario"], p["parameter"], p["p_base"], cfg.n_max)
    ys = np.vstack([spec.observations(rng) for rng in rngs])
    paths = spec.transform(ys)
    out = []
    for y, m in zip(ys, paths):
        s = np.cumsum(y)
        r = increments(m)
        reports = evaluate_rules_lazy(
            m, np.minimum(m, 1.0 - m), r,
            lambda i: jeffreys_beta_width(s[i], i + 1, cfg.alpha).width, cfg)
        diag = {f"r{c}": float(r[c - 1]) for c in CHECKPOINTS if c <= cfg.n_max}
        out.append(ReplicationOutcome(taus=_taus(reports), diagnostics=diag))
    return out


def _perturbation_extras(cell, outcomes):
    pairs = []
    for c in CHECKPOINTS:
        key = f"r{c}"
        if key in outcomes[0].diagnostics:
            pairs.append((key, f"{np.median([o.diagnostics[key] for o in outcomes]):.3g}"))
    same = np.mean([o.taus["rm"] == o.taus["two_cond"] for o in outcomes]) * 100.0
    pairs.append(("pct_rm_eq_2cond", f"{same:.1f}"))
    return tuple(pairs)


VARIANTS = (("A", 0.0), ("A", 0.3), ("A", 1.0), ("B", 1.0), ("B", 0.75), ("B", 0.5),
            ("C", 0.0), ("C", 0.5), ("C", 2.0))
_PARAM_NAME = {"A": "sigma", "B": "gamma", "C": "kappa"}


def study7(reps=1000, seed=DEFAULT_SEED, variants=VARIANTS, p_base=0.01, n_max=2000):
    cells = []
    for scenario, value in variants:
        params = dict(scenario=scenario, parameter=value, p_base=p_base, epsilon=0.05,
                      width_max=0.05, eta=0.01, n_min=30, n_max=n_max, alpha=0.05)
        PerturbationSpec(scenario, value, p_base, n_max)
        cells.append(Cell(labels=(("scenario", scenario), (_PARAM_NAME[scenario], value)),
                          params=params, truth=p_base, epsilon=0.05))
    return StudyConfig(7, "quasi reverse-martingale perturbations", tuple(cells), reps, seed,
                       ("boundary_only", "two_cond", "rm"), simulate_perturbation,
                       validate_cell=_validate_scorecard, cell_extras=_perturbation_extras,
                       metadata={"r_source": "increment", "p_base": p_base,
                                 "width": "jeffreys_beta_equal_tailed"})


# Error control under a containment width condition

def simulate_containment(cell, rngs):
    p = cell.params
    cfg = _scorecard(p)
    n = np.arange(1, cfg.n_max + 1)
    out = []
    for rng in rngs:
        y = (rng.random(cfg.n_max) < p["p"]).astype(float)
        s = np.cumsum(y)
        m = s / n
        reports = evaluate_rules_lazy(
            m, m, np.zeros(cfg.n_max),
            lambda i: jeffreys_beta_width(s[i], i + 1, cfg.alpha).upper, cfg)
        out.append(ReplicationOutcome(taus=_taus(reports)))
    return out


def error_control_study(reps=2000, seed=DEFAULT_SEED, epsilon=0.05, alpha=0.05, n_max=2000,
                        n_min=30):
    """Declare only when the Jeffreys interval lies inside ``[0, epsilon]``; truth is ``2 epsilon``.

    The width condition is expressed through the upper endpoint: ``width_max``
    is set to ``epsilon`` and the width callback returns the upper endpoint.
    """
    params = dict(p=2.0 * epsilon, epsilon=epsilon, width_max=epsilon, eta=math.inf, n_min=n_min,
                  n_max=n_max, alpha=alpha)
    cell = Cell(labels=(("p", 2.0 * epsilon), ("eps", epsilon)), params=params,
                truth=2.0 * epsilon, epsilon=epsilon)
    return StudyConfig(0, "error control by interval containment", (cell,), reps, seed,
                       ("boundary_only", "rm"), simulate_containment,
                       validate_cell=_validate_scorecard,
                       metadata={"width": "jeffreys_upper_endpoint", "alpha": alpha})


BUILDERS = {1: study1, 2: study2, 3: study3, 4: study4, 7: study7}


def build_study(study_id, reps=1000, seed=DEFAULT_SEED):
    """Configuration for a Monte Carlo study by number."""
    if study_id not in BUILDERS:
        raise ConfigError(f"Monte Carlo studies are {sorted(BUILDERS)}; studies 5 and 6 use the monitor command")
    return BUILDERS[study_id](reps=reps, seed=seed)


def with_reps(config: StudyConfig, reps):
    return replace(config, reps=reps)
