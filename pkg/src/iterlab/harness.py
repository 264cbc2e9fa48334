"""Experiment registry, configuration and deterministic replication.

Each experiment maps (params, seed) to a CSV-serializable result and a
per-replica summary; an aggregator turns replica summaries into a verdict
against the experiment's band.
"""
from __future__ import annotations

import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from . import identification as ident
from . import kernels as kern
from . import lln
from . import montecarlo as mc
from . import processes as proc
from . import regression as reg
from . import sa
from .summability import StepSequence, WeightSequence, conjugate_steps
from .trace import table_to_csv


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Experiment:
    id: str
    description: str
    anchor: str
    defaults: dict
    run: Callable[[dict, int], tuple[str, dict]]
    aggregate: Callable[[dict, list], tuple[dict, bool | None]] | None = None
    default_replicas: int = 1


@dataclass(frozen=True)
class ExperimentConfig:
    id: str
    params: dict
    seed: int = 0
    replicas: int = 1
    out: str | None = None
    overrides: tuple = ()

    def resolved(self) -> dict:
        return {"id": self.id, "params": self.params, "seed": self.seed,
                "replicas": self.replicas, "overrides": list(self.overrides)}


REGISTRY: dict[str, Experiment] = {}


def register(id, description, anchor, defaults, aggregate=None, replicas=1):
    def deco(fn):
        if id in REGISTRY:
            raise ValueError(f"duplicate experiment id {id!r}")
        REGISTRY[id] = Experiment(id, description, anchor, defaults, fn, aggregate, replicas)
        return fn

    return deco


def list_experiments() -> list[tuple[str, str, str]]:
    return [(e.id, e.description, e.anchor) for e in sorted(REGISTRY.values(), key=lambda e: e.id)]


# configuration -----------------------------------------------------------------

def _check_type(path: str, default, value):
    if isinstance(default, bool):
        ok = isinstance(value, bool)
        want = "bool"
    elif isinstance(default, int):
        ok = isinstance(value, int) and not isinstance(value, bool)
        want = "int"
    elif isinstance(default, float):
        ok = isinstance(value, (int, float)) and not isinstance(value, bool)
        want = "number"
        if ok:
            value = float(value)
    elif isinstance(default, str):
        ok, want = isinstance(value, str), "string"
    elif isinstance(default, list):
        ok, want = isinstance(value, list), "list"
    elif isinstance(default, dict):
        if not isinstance(value, dict):
            raise ConfigError(f"{path}: expected object, got {type(value).__name__}")
        return _merge(path, default, value)
    elif default is None:
        ok, want = True, "any"
    else:
        ok, want = False, type(default).__name__
    if not ok:
        raise ConfigError(f"{path}: expected {want}, got {type(value).__name__}")
    return value


def _merge(path: str, defaults: dict, given: dict) -> dict:
    out = dict(defaults)
    for k, v in given.items():
        if k not in defaults:
            raise ConfigError(f"{path}.{k}: unknown key")
        out[k] = _check_type(f"{path}.{k}", defaults[k], v)
    return out


def _coerce_flag(default, text: str):
    if isinstance(default, bool):
        return text.lower() in ("1", "true", "yes")
    if isinstance(default, int):
        return int(text)
    if isinstance(default, float):
        return float(text)
    if isinstance(default, (list, dict)) or default is None:
        return json.loads(text)
    return text


def parse_config(exp_id: str, file=None, overrides: dict | None = None,
                 seed: int | None = None, replicas: int | None = None,
                 out: str | None = None) -> ExperimentConfig:
    """Resolve defaults, then the JSON file, then flag overrides (flags win).

    Overrides are given as strings (from ``--set key=value``) or typed values.
    """
    if exp_id not in REGISTRY:
        raise KeyError(exp_id)
    exp = REGISTRY[exp_id]
    data = {}
    if file is not None:
        text = Path(file).read_text().strip()
        data = json.loads(text) if text else {}
        if not isinstance(data, dict):
            raise ConfigError("config: expected a JSON object")
    file_params = data.pop("params", {})
    for k in list(data):
        if k not in ("seed", "replicas"):
            raise ConfigError(f"config.{k}: unknown key")
    params = _merge("params", exp.defaults, file_params)
    applied = []
    for k, v in (overrides or {}).items():
        if k not in exp.defaults:
            raise ConfigError(f"params.{k}: unknown key")
        if isinstance(v, str) and not isinstance(exp.defaults[k], str):
            try:
                v = _coerce_flag(exp.defaults[k], v)
            except (ValueError, json.JSONDecodeError):
                raise ConfigError(f"params.{k}: cannot parse {v!r}") from None
        params[k] = _check_type(f"params.{k}", exp.defaults[k], v)
        applied.append(k)
    if seed is None:
        seed = data.get("seed")
    if seed is None:
        seed = int(os.environ.get("ITERLAB_SEED", "0"))
    if not isinstance(seed, int):
        raise ConfigError("config.seed: expected int")
    reps = replicas if replicas is not None else data.get("replicas", exp.default_replicas)
    if not isinstance(reps, int) or reps < 1:
        raise ConfigError("config.replicas: expected positive int")
    return ExperimentConfig(exp_id, params, int(seed), int(reps), out, tuple(applied))


def replica_seed(seed: int, r: int, replicas: int) -> int:
    return seed if replicas == 1 else proc.mix_seed(seed, r)


@dataclass
class RunResult:
    summary: dict
    csv: list = field(default_factory=list)  # csv text per replica
    passed: bool | None = None


def _run_one(args):
    exp_id, params, seed = args
    return REGISTRY[exp_id].run(params, seed)


def run_experiment(config: ExperimentConfig, jobs: int | None = None) -> RunResult:
    """Run all replicas; replica r always gets the same seed, so the
    reduction does not depend on scheduling. ``jobs`` defaults to the CPU count."""
    exp = REGISTRY[config.id]
    seeds = [replica_seed(config.seed, r, config.replicas) for r in range(config.replicas)]
    jobs = min(jobs or os.cpu_count() or 1, len(seeds))
    tasks = [(config.id, config.params, s) for s in seeds]
    if jobs > 1:
        with ProcessPoolExecutor(jobs) as pool:
            outs = list(pool.map(_run_one, tasks))
    else:
        outs = [_run_one(t) for t in tasks]
    per = [dict(summ, seed=s) for (_, summ), s in zip(outs, seeds)]
    texts = [text for text, _ in outs]
    agg, passed = ({}, None) if exp.aggregate is None else exp.aggregate(config.params, per)
    summary = {"id": config.id, "anchor": exp.anchor, "config": config.resolved(),
               "per_replica": per, "aggregate": agg}
    if passed is not None:
        summary["pass"] = bool(passed)
    result = RunResult(_jsonable(summary), texts, passed)
    if config.out is not None:
        d = Path(config.out)
        d.mkdir(parents=True, exist_ok=True)
        for r, text in enumerate(texts):
            name = f"{config.id}.csv" if r == 0 else f"{config.id}.r{r}.csv"
            (d / name).write_text(text)
        (d / f"{config.id}.json").write_text(json.dumps(result.summary, indent=2, sort_keys=True) + "\n")
    return result


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.floating, float)):
        f = float(v)
        return f if math.isfinite(f) else repr(f)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    if isinstance(v, np.ndarray):
        return _jsonable(v.tolist())
    return v


def _fraction_band(key: str, limit: float, need: float):
    """Pass when at least ``need`` of the replicas have summary[key] <= limit."""

    def agg(params, per):
        vals = [p[key] for p in per]
        inside = sum(v <= limit for v in vals)
        frac = inside / len(vals)
        return ({"inside": inside, "of": len(vals), "band": limit, "required_fraction": need,
                 "median": float(np.median(vals))}, frac >= need)

    return agg


# experiments -------------------------------------------------------------------

@register("summ-conjugacy", "Step sequences conjugate to standard weight families",
          "conjugacy table of the Riesz method",
          {"families": ["const", "linear", "square", "exp:0.5", "geom:0.3"], "horizon": 50})
def _summ(p, seed):
    rows = []
    worst = 0.0
    for fam in p["families"]:
        w = WeightSequence.parse(fam)
        mu = conjugate_steps(w, p["horizon"]).prefix(p["horizon"])
        i = np.arange(p["horizon"], dtype=float)
        closed = {
            "const": 1 / (i + 1), "linear": 2 / (i + 2),
            "square": 6 * (i + 1) / ((i + 2) * (2 * i + 3)),
        }.get(fam)
        if fam.startswith("exp:"):
            a = float(fam[4:])
            closed = (math.exp(a) - 1) / (math.exp(a) - np.exp(-i * a))
            closed[0] = 1.0
        if fam.startswith("geom:"):
            closed = np.where(i == 0, 1.0, float(fam[5:]))
        dev = float(np.max(np.abs(mu - closed))) if closed is not None else float("nan")
        worst = max(worst, dev)
        rows += [(fam, int(k), mu[k]) for k in range(p["horizon"])]
    return table_to_csv(["family", "index", "mu"], rows), {"max_deviation_from_closed_form": worst}


def _lln_run(dist, weights, center, p, seed):
    tr = lln.lln_trace(lln.LLNConfig(dist, weights, center, None, p["horizon"], p["thin"]), seed)
    return tr.to_csv(), {"final_abs": float(abs(tr.final[0])), "diverged": tr.diverged}


@register("lln-wlln-signed-pareto", "Weighted means of symmetric Pareto(1.05) draws, weights (i+1)^2",
          "WLLN example with signed Pareto variables",
          {"gamma": 1.05, "horizon": 1_000_000, "thin": 1000},
          aggregate=_fraction_band("final_abs", 0.2, 0.8), replicas=10)
def _wlln(p, seed):
    return _lln_run(proc.SignedPareto(p["gamma"]), WeightSequence.square(), None, p, seed)


@register("lln-slln-pareto", "Centered Pareto(5/4) weighted means with record table",
          "SLLN example with Pareto variables and records",
          {"gamma": 1.25, "horizon": 2_000_000, "thin": 2000})
def _slln(p, seed):
    g = p["gamma"]
    x = proc.SampleStream(proc.Pareto(g), seed).sample(p["horizon"])
    mu = conjugate_steps(WeightSequence.square(), p["horizon"]).prefix(p["horizon"])
    from .summability import _riesz_recursion

    y = _riesz_recursion(x - g / (g - 1), mu)
    rec = proc.record_table(x)
    idx = np.arange(p["thin"], p["horizon"] + 1, p["thin"])
    text = table_to_csv(["step", "mean"], zip(idx, y[idx - 1]))
    return text, {"final_abs": float(abs(y[-1])), "records": len(rec),
                  "last_record": list(rec[-1])}


@register("clt-exp-blocks", "Standardized block sums of Exp(1) draws",
          "CLT example with histograms of block sums",
          {"block": 100, "blocks": 1000, "bins": 40},
          aggregate=_fraction_band("tv", 0.15, 1.0))
def _clt(p, seed):
    h = lln.clt_block_histogram(proc.Exponential(1.0), p["block"], p["blocks"], p["bins"], seed)
    return h.to_csv(), {"tv": h.tv}


def _lil_agg(params, per):
    if params["dist"] == "normal":
        inside = sum(v["late_exceedances"] == 0 for v in per)
        return {"matching": inside, "of": len(per)}, inside >= math.ceil(0.9 * len(per))
    # heavy-tailed sums exceed only through rare large jumps, so a majority is asked for
    inside = sum(v["late_exceedances"] > 0 for v in per)
    return {"matching": inside, "of": len(per)}, inside > len(per) / 2


@register("lil-envelope", "Partial sums against the iterated-logarithm envelope",
          "LIL simulation, normal and sqrt-Cauchy increments",
          {"dist": "normal", "horizon": 1_000_000, "epsilon": 0.5, "late_from": 10_000, "thin": 1000},
          aggregate=_lil_agg, replicas=10)
def _lil(p, seed):
    dist = proc.Normal() if p["dist"] == "normal" else proc.SqrtCauchy()
    rep = lln.lil_envelope_report(dist, p["horizon"], p["epsilon"], seed, late_from=p["late_from"])
    x = proc.SampleStream(dist, seed).sample(p["horizon"])
    S = np.cumsum(x)
    n = np.arange(1, p["horizon"] + 1)
    env = lln.lil_envelope(n, rep.sigma)
    k = n % p["thin"] == 0
    text = table_to_csv(["n", "S", "upper", "lower"], zip(n[k], S[k], env[k], -env[k]))
    return text, {"exceedances": rep.exceedances, "late_exceedances": rep.late_exceedances,
                  "last_exceedance": rep.last_exceedance, "inner_band_fraction": rep.inner_band_fraction}


def _gclt_agg(params, per):
    vals = [v["final"] for v in per]
    med = float(np.median(vals))
    inside = sum(abs(v - 1) <= 0.15 for v in vals)
    return {"median": med, "inside": inside, "of": len(vals)}, (
        abs(med - 1) <= 0.15 and inside >= math.ceil(0.5 * len(vals)))


@register("gclt-normal", "Log-averaged indicator means for Gaussian partial sums",
          "almost-sure global CLT, half-line windows",
          {"x": 1.0, "horizon": 100_000, "thin": 100}, aggregate=_gclt_agg, replicas=10)
def _gclt(p, seed):
    tr = lln.gclt_as_trace(proc.Normal(), p["x"], p["horizon"], seed, thin=p["thin"])
    return tr.to_csv(), {"final": float(tr.final[0])}


@register("jamison-capacity", "N(x) for several weight families",
          "Jamison criterion N(x)", {"families": ["const", "linear", "square"],
                                      "grid": [0.5, 1.3, 2.0, 7.5, 10.0, 100.0], "horizon": 10_000})
def _jam(p, seed):
    rows = []
    for fam in p["families"]:
        for x, N, r in lln.jamison_capacity(WeightSequence.parse(fam), p["grid"], p["horizon"]):
            rows.append((fam, x, N, r))
    return table_to_csv(["family", "x", "N", "N_over_x"], rows), {"rows": len(rows)}


@register("conditions-variance", "Variance-series conditions for mean convergence",
          "conditions of the quasi-stationary LLN theorem",
          {"alpha": 6 / 7, "horizon": 100_000})
def _cond_var(p, seed):
    a = p["alpha"]
    rep = lln.variance_condition_report(lambda n: n**a, StepSequence.harmonic(), p["horizon"],
                                        var_mean=lambda n: 9 / (a + 1) * n ** (a - 1))
    s = rep.summary()
    return table_to_csv(["condition", "value", "trend", "verdict"],
                        [(k, v["value"], v["trend"], v["verdict"]) for k, v in s.items()]), s


@register("conditions-orthogonal", "Coefficient conditions for orthogonal series",
          "Rademacher-Menchoff, Tandori and block conditions",
          {"family": "power:0.75", "horizon": 100_000})
def _cond_orth(p, seed):
    i = np.arange(1, p["horizon"] + 1, dtype=float)
    head, _, arg = p["family"].partition(":")
    if head == "power":
        c = i ** -float(arg)
    elif head == "sqrtlog":
        with np.errstate(divide="ignore"):
            c = np.where(i > 1, 1 / (np.sqrt(i) * np.log2(np.maximum(i, 2))), 0.0)
    else:
        raise ConfigError(f"params.family: unknown family {p['family']!r}")
    s = lln.orthogonal_coeff_conditions(c).summary()
    return table_to_csv(["condition", "value", "trend", "verdict"],
                        [(k, v["value"], v["trend"], v["verdict"]) for k, v in s.items()]), s


def _mc_agg(params, per):
    inside = sum(v["abs_error"] <= params["eps"] for v in per)
    need = 0.95 if len(per) >= 20 else 1.0
    return {"inside": inside, "of": len(per)}, inside >= math.ceil(need * len(per))


@register("mc-sqrt", "Monte Carlo integral of sqrt(1 - x^4) on [0,1] at the planned n",
          "Monte Carlo section, sample-size plan", {"eps": 0.01, "conf": 0.98, "rounding": "stepwise"},
          aggregate=_mc_agg)
def _mc(p, seed):
    plan = mc.plan_sample_size(p["eps"], p["conf"], mc.sqrt_quartic_variance_bound(), p["rounding"])
    res = mc.mc_integrate(mc.sqrt_quartic, [(0.0, 1.0)], plan.n_required, seed)
    exact = mc.reference_integral(mc.sqrt_quartic)
    text = table_to_csv(["n", "estimate", "stderr", "reference"],
                        [(plan.n_required, res.estimate, res.stderr, exact)])
    return text, {"n": plan.n_required, "estimate": res.estimate, "abs_error": abs(res.estimate - exact)}


@register("mc-pond", "Capture-recapture estimate of the unmarked population",
          "fish-pond example", {"M": 900, "N": 100, "catches": 10_000},
          aggregate=lambda p, per: ({"inside": sum(abs(v["estimate"] - p["M"]) <= 0.1 * p["M"] for v in per)},
                                    sum(abs(v["estimate"] - p["M"]) <= 0.1 * p["M"] for v in per)
                                    >= math.ceil(0.9 * len(per))))
def _pond(p, seed):
    est = mc.simulate_pond(p["M"], p["N"], p["catches"], seed)
    return table_to_csv(["M", "estimate"], [(p["M"], est)]), {"estimate": est}


def _rm(p, seed):
    prob = sa.SAProblem(1, sa.drift_from_config("exp-damped", theta=3.0, rate=p["rate"]),
                        proc.Normal(0.0, p["sigma"]), theta=3.0)
    tr = sa.robbins_monro(prob, sa.StepPlan(StepSequence.harmonic()), [p["x0"]], p["horizon"], seed)
    return tr.to_csv(), {"final": float(tr.final[0]), "abs_error": float(abs(tr.final[0] - 3.0))}


register("sa-rm-damped", "Robbins-Monro root of (x-3)exp(-0.1(x-3))",
         "first stochastic approximation example",
         {"rate": 0.1, "x0": 0.0, "sigma": 2.0, "horizon": 5000},
         aggregate=_fraction_band("abs_error", 0.2, 0.8), replicas=10)(_rm)

register("sa-rm-plateau", "Robbins-Monro on the fast-decaying drift (x-3)exp(-(x-3))",
         "example with a small drift far from the root",
         {"rate": 1.0, "x0": 1.0, "sigma": 2.0, "horizon": 5000},
         aggregate=lambda p, per: ({"far": sum(v["abs_error"] > 1 for v in per)},
                                   sum(v["abs_error"] > 1 for v in per) >= math.ceil(0.5 * len(per))),
         replicas=10)(_rm)


def _spacing(beta):
    return StepSequence(lambda i: np.maximum(np.asarray(i, float), 1.0) ** (-beta), f"c:{beta}")


@register("sa-kw", "Kiefer-Wolfowitz minimization of (x-2)^2 with N(0,1) noise",
          "Kiefer-Wolfowitz procedure", {"theta": 2.0, "x0": 0.0, "horizon": 10_000, "c_beta": 0.25},
          aggregate=_fraction_band("abs_error", 0.2, 0.8), replicas=10)
def _kw(p, seed):
    th = p["theta"]
    tr = sa.kiefer_wolfowitz(lambda x: (x - th) ** 2,
                             sa.StepPlan(StepSequence.harmonic(), _spacing(p["c_beta"])),
                             p["x0"], p["horizon"], seed, proc.Normal())
    return tr.to_csv(), {"final": float(tr.final[0]), "abs_error": float(abs(tr.final[0] - th))}


QUANTILE_TARGET = 2.0 * 1.0364333894937898  # 2 * Phi^{-1}(0.85)


def _q_agg(params, per):
    med = float(np.median([v["abs_error"] for v in per]))
    return {"median_abs_error": med, "band": 0.08}, med <= 0.08


@register("sa-quantile", "Tracking the 0.85 quantile of N(0, sd 2)", "quantile example",
          {"alpha": 0.85, "sigma": 2.0, "beta": 0.75, "horizon": 5000, "z0": 0.0},
          aggregate=_q_agg, replicas=20)
def _quant(p, seed):
    from scipy import special

    target = p["sigma"] * float(special.ndtri(p["alpha"]))
    tr = sa.quantile_track(proc.Normal(0.0, p["sigma"]), p["alpha"], StepSequence.power(p["beta"]),
                           p["z0"], p["horizon"], seed)
    return tr.to_csv(), {"final": float(tr.final[0]), "abs_error": float(abs(tr.final[0] - target))}


@register("sa-clt", "Asymptotic variance of sqrt(n)(X_n - theta) for a linear drift",
          "SA central limit theorem", {"B": 1.0, "a": 1.0, "sigma": 1.0, "replicas": 1000,
                                       "horizon": 10_000},
          aggregate=lambda p, per: ({"rel_error": per[0]["rel_error"]}, per[0]["rel_error"] <= 0.15))
def _saclt(p, seed):
    v = sa.asymptotic_variance_check(p["B"], p["a"], p["sigma"], p["replicas"], p["horizon"], seed)
    return table_to_csv(["empirical", "theoretical", "rel_error"],
                        [(v.empirical, v.theoretical, v.rel_error)]), {
        "empirical": v.empirical, "theoretical": v.theoretical, "rel_error": v.rel_error}


MIXTURE = proc.NormalMixture((0.25, 0.75), (0.0, 4.0), (1.0, 0.5))


@register("density-uniform", "Batch triangular-kernel density of U(0,1)", "first density example",
          {"n": 5000, "beta": 0.5, "grid": 512},
          aggregate=_fraction_band("l1", 0.2, 1.0))
def _dens_u(p, seed):
    x = proc.SampleStream(proc.Uniform(0.0, 1.0), seed).sample(p["n"])
    h = p["n"] ** -p["beta"]
    g = np.linspace(-0.5, 1.5, p["grid"])
    est = kern.batch_density(x, kern.builtin_kernel("triangular"), h, g)
    l1, l2 = kern.density_error(est, proc.Uniform(0.0, 1.0).pdf)
    return est.to_csv(), {"l1": l1, "l2": l2}


@register("density-mixture-recursive", "Recursive Cauchy-kernel density of a normal mixture",
          "recursive density example, h_i = i^-0.35", {"n": 3000, "beta": 0.35, "grid": 512},
          replicas=1)
def _dens_mix(p, seed):
    x = proc.SampleStream(MIXTURE, seed).sample(p["n"])
    g = np.linspace(-4.0, 8.0, p["grid"])
    k = kern.builtin_kernel("cauchy")
    st = kern.recursive_density(x, k, kern.power_bandwidth(p["beta"]), g)
    est = st.as_grid_function()
    batch = kern.batch_density(x, k, p["n"] ** -p["beta"], g)
    l1 = kern.density_error(est, MIXTURE.pdf)[0]
    l1b = kern.density_error(batch, MIXTURE.pdf)[0]
    return est.to_csv(), {"l1_recursive": l1, "l1_batch": l1b}


@register("cdf-discrete", "Epanechnikov kernel cdf of a four-point law", "kernel cdf remark",
          {"n": 6000, "beta": 0.4}, aggregate=_fraction_band("abs_error_at_1", 0.05, 1.0))
def _cdf(p, seed):
    d = proc.Discrete((-1.0, 0.0, 2.0, 3.0), (1 / 8, 4 / 8, 2 / 8, 1 / 8))
    x = proc.SampleStream(d, seed).sample(p["n"])
    g = np.linspace(-4.0, 6.0, 201)
    est = kern.cdf_estimate(x, kern.builtin_kernel("epanechnikov"), p["n"] ** -p["beta"], g)
    at1 = float(kern.cdf_estimate(x, kern.builtin_kernel("epanechnikov"), p["n"] ** -p["beta"],
                                  [1.0]).values[0])
    return est.to_csv(), {"value_at_1": at1, "abs_error_at_1": abs(at1 - 5 / 8)}


def _reg_data(truth, n, seed):
    s = proc.SampleStream(proc.Normal(0.0, 2.0), seed).sample(2 * n)
    x, xi = s[:n], s[n:]
    return x, reg.TRUTHS[truth](x) + 0.5 * xi


@register("regress-batch", "Batch Epanechnikov regression of x^2 and clipped identity",
          "regression example", {"truth": "square", "n": 1000, "beta": 0.4},
          aggregate=lambda p, per: ({"max_error": max(v["error"] for v in per)},
                                    all(v["error"] <= (0.5 if p["truth"] == "square" else 0.3)
                                        for v in per)))
def _reg_batch(p, seed):
    x, y = _reg_data(p["truth"], p["n"], seed)
    g = np.linspace(-2.0, 2.0, 201)
    est = reg.batch_regression(x, y, kern.builtin_kernel("epanechnikov"), p["n"] ** -p["beta"], g)
    d = np.abs(est.values - reg.TRUTHS[p["truth"]](g))[est.valid]
    err = float(d.max()) if p["truth"] == "square" else float(np.trapezoid(
        np.where(est.valid, np.abs(est.values - reg.TRUTHS[p["truth"]](g)), 0.0), g))
    return est.to_csv(), {"error": err}


@register("regress-recursive", "Recursive regression of a clipped sine under a mixture design",
          "recursive regression example",
          {"n": 5000, "beta": 0.35, "kernel": "cauchy", "region": [-1.5, 5.0]},
          aggregate=lambda p, per: ({"ratio": per[0]["l1_recursive"] / per[0]["l1_batch"]},
                                    all(v["l1_recursive"] <= 1.5 * v["l1_batch"] for v in per)))
def _reg_rec(p, seed):
    x = proc.SampleStream(MIXTURE, seed).sample(p["n"])
    y = reg.clipped_sine(x) + proc.SampleStream(proc.Normal(), proc.mix_seed(seed, 1)).sample(p["n"])
    g = np.linspace(p["region"][0], p["region"][1], 261)
    k = kern.builtin_kernel(p["kernel"])
    est = reg.evaluate_ratio(reg.recursive_regression(x, y, k, kern.power_bandwidth(p["beta"]), g))
    batch = reg.batch_regression(x, y, k, p["n"] ** -p["beta"], g)
    truth = reg.clipped_sine(g)

    def l1(e):
        return float(np.trapezoid(np.where(e.valid, np.abs(e.values - truth), 0.0), g))

    return est.to_csv(), {"l1_recursive": l1(est), "l1_batch": l1(batch),
                          "weighted_mean_deviation": est.meta["weighted_mean_deviation"]}


AR3 = (1.6, -1.475, 0.7605)


@register("ident-ar3", "LMS identification of an AR(3) system", "AR(3) identification",
          {"horizon": 100_000, "thin": 100}, aggregate=_fraction_band("final_error", 0.15, 0.8),
          replicas=10)
def _ident_lms(p, seed):
    y = proc.simulate_series(proc.AR(AR3, proc.Normal()), seed, p["horizon"])
    run = ident.identify_lms(y, 3, StepSequence.harmonic(), horizon=p["horizon"], truth=AR3)
    tr = run.trace
    keep = (tr.steps % p["thin"] == 0)
    keep[-1] = True
    text = table_to_csv(["step", "b0", "b1", "b2"],
                        [(int(s), *row) for s, row in zip(tr.steps[keep], tr.states[keep])])
    return text, {"final": run.final, "final_error": run.final_error}


@register("ident-ar3-normalized", "Normalized (second-moment) identification of AR(3)",
          "AR(3) identification, normalized procedure", {"horizon": 30_000, "thin": 100},
          aggregate=_fraction_band("final_error", 0.1, 0.8), replicas=10)
def _ident_norm(p, seed):
    y = proc.simulate_series(proc.AR(AR3, proc.Normal()), seed, p["horizon"])
    run = ident.identify_normalized(y, 3, horizon=p["horizon"], truth=AR3)
    tr = run.trace
    keep = (tr.steps % p["thin"] == 0)
    keep[-1] = True
    text = table_to_csv(["step", "a0", "a1", "a2"],
                        [(int(s), *row) for s, row in zip(tr.steps[keep], tr.states[keep])])
    return text, {"final": run.final, "final_error": run.final_error, "flags": list(run.flags)}


@register("ident-ar1", "Ratio estimator of an AR(1) coefficient", "AR(1) identification example",
          {"alpha": 0.99, "noise_sd": 3.0, "n": 300_000, "thin": 1000},
          aggregate=_fraction_band("abs_error", 0.01, 1.0))
def _ident_ar1(p, seed):
    y = proc.simulate_series(proc.AR((p["alpha"],), proc.Normal(0.0, p["noise_sd"])), seed, p["n"])
    run = ident.ar1_ratio_estimate(y)
    tr = run.trace
    keep = (tr.steps % p["thin"] == 0)
    keep[-1] = True
    text = table_to_csv(["step", "a"], zip(tr.steps[keep], tr.states[keep, 0]))
    return text, {"final": float(run.final[0]), "abs_error": float(abs(run.final[0] - p["alpha"]))}


def kink_series(p: float, n: int, seed: int, ar=(0.5, -0.2), ma=(0.3, 0.1), sd=1.0):
    noise = proc.SampleStream(proc.ARMA(ar, ma, proc.Normal(0.0, sd)), seed).sample(n)
    return ident.simulate_kink_system(p, noise)


@register("ident-scalar", "Parameter of the kinked scalar system under ARMA(2,2) noise",
          "scalar nonlinear identification example",
          {"p": 0.9, "q0": 0.5, "n": 5000, "ar": [0.5, -0.2], "ma": [0.3, 0.1], "sd": 1.0},
          aggregate=_fraction_band("abs_error", 0.1, 0.7), replicas=10)
def _ident_scalar(p, seed):
    y = kink_series(p["p"], p["n"], seed, p["ar"], p["ma"], p["sd"])
    run = ident.identify_scalar_nonlinear(y, StepSequence.harmonic(), p["q0"], truth=p["p"])
    fin = float(run.final[0])
    return run.trace.to_csv(), {"final": fin, "abs_error": abs(fin - p["p"]),
                                "eta_mean": float(run.trace.column("eta_mean")[-1])}


def nonparam_series(n, seed, fmap, correlated=False, sd_fn=None):
    z = proc.SampleStream(proc.Normal(), seed).sample(n)
    if sd_fn is not None:
        z = z * sd_fn(np.arange(1, n + 1))
    if correlated:
        z = ident.ma_noise(z)
    x = [0.0]
    for e in z.tolist():
        x.append(float(fmap(x[-1])) + e)
    return np.array(x)


def _np_errors(x, fmap, p):
    g = np.linspace(p["region"][0], p["region"][1], 201)
    est = ident.identify_nonparametric(x, kern.builtin_kernel(p["kernel"]),
                                       kern.power_bandwidth(p["beta"]), g)
    d = np.where(est.valid, np.abs(est.values - fmap(g)), 0.0)
    return est, {"l1_error": float(np.trapezoid(d, g)), "sup_error": float(d.max())}


def _noise_sd(kind):
    if kind == "sin2":
        return lambda i: np.sqrt(1 + np.sin(i) ** 2)
    if kind == "unit":
        return None
    raise ConfigError(f"params.noise: unknown noise {kind!r}")


@register("ident-nonparam", "Nonparametric recovery of the kinked map (p = 0.9)",
          "nonparametric identification example",
          {"n": 6000, "beta": 0.5, "p": 0.9, "kernel": "cauchy", "noise": "sin2",
           "correlated": False, "region": [-2.5, 0.65]})
def _ident_np(p, seed):
    pp = p["p"]

    def fmap(v):
        return ident.kink_map(v, pp)

    x = nonparam_series(p["n"], seed, fmap, p["correlated"], _noise_sd(p["noise"]))
    est, errs = _np_errors(x, fmap, p)
    return est.to_csv(), errs


@register("ident-nonparam-fourseg", "Nonparametric recovery of a four-segment map",
          "second nonparametric identification example",
          {"n": 6000, "beta": 0.5, "kernel": "cauchy", "noise": "sin2", "correlated": False,
           "region": [-2.5, -0.2]},
          aggregate=_fraction_band("sup_error", 0.3, 0.7), replicas=10)
def _ident_np4(p, seed):
    x = nonparam_series(p["n"], seed, ident.four_segment_map, p["correlated"], _noise_sd(p["noise"]))
    est, errs = _np_errors(x, ident.four_segment_map, p)
    return est.to_csv(), errs
