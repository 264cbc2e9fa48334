"""Command line entry point.

``iterlab <experiment-id> [--config f.json] [--seed S] [--replicas R] [--out dir] [--assert]``
runs a registered experiment; the tool subcommands (summ, sample, lln, ...)
expose the library operations directly.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import harness
from . import identification as ident
from . import kernels as kern
from . import lln
from . import montecarlo as mc
from . import processes as proc
from . import regression as reg
from . import sa
from .summability import StepSequence, WeightSequence, conjugate_steps
from .trace import table_to_csv


def _json_arg(text: str):
    """Inline JSON or a path to a JSON file."""
    p = Path(text)
    if p.exists():
        return json.loads(p.read_text())
    return json.loads(text)


def _steps(text: str) -> StepSequence:
    head, _, arg = text.partition(":")
    if head == "harmonic":
        return StepSequence.harmonic(float(arg) if arg else 1.0)
    if head == "power":
        return StepSequence.power(float(arg))
    if head == "const":
        return StepSequence.constant(float(arg))
    raise ValueError(f"unknown step rule {text!r} (harmonic[:a], power:beta, const:q)")


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    return int(os.environ.get("ITERLAB_SEED", "0"))


def _emit(text: str, out: str | None):
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text)


def _print_json(obj):
    print(json.dumps(harness._jsonable(obj), indent=2, sort_keys=True))


def _dist(spec) -> proc.Distribution:
    if isinstance(spec, str):
        spec = _json_arg(spec)
    return proc.parse_distribution(spec)


# tool subcommands ----------------------------------------------------------------

def cmd_summ(a):
    w = WeightSequence.parse(a.family)
    mu = conjugate_steps(w, a.horizon).prefix(a.horizon)
    lw = w.log_prefix(a.horizon)
    _emit(table_to_csv(["index", "log_alpha", "mu"], zip(range(a.horizon), lw, mu)), a.out)


def cmd_sample(a):
    spec = proc.parse_process(_json_arg(a.spec))
    x = proc.SampleStream(spec, _seed(a)).sample(a.n)
    _emit(table_to_csv(["index", "value"], zip(range(1, a.n + 1), x)), a.out)


def cmd_lln(a):
    spec = proc.parse_process(_json_arg(a.spec))
    cfg = lln.LLNConfig(spec, WeightSequence.parse(a.weights), a.center, None, a.horizon, a.thin)
    _emit(lln.lln_trace(cfg, _seed(a)).to_csv(), a.out)


def cmd_clt(a):
    h = lln.clt_block_histogram(_dist(a.spec), a.block, a.blocks, a.bins, _seed(a))
    _emit(h.to_csv(), a.out)
    print(f"total variation to N(0,1): {h.tv:.6f}", file=sys.stderr)


def cmd_lil(a):
    rep = lln.lil_envelope_report(_dist(a.spec), a.horizon, a.epsilon, _seed(a), late_from=a.late_from)
    _print_json(rep.__dict__)


def cmd_gclt(a):
    tr = lln.gclt_as_trace(_dist(a.spec), a.x, a.horizon, _seed(a), thin=a.thin)
    _emit(tr.to_csv(), a.out)


def cmd_conditions(a):
    if a.kind == "variance":
        p = a.exponent
        rep = lln.variance_condition_report(lambda n: n**p, StepSequence.harmonic(), a.horizon)
    else:
        i = np.arange(1, a.horizon + 1, dtype=float)
        rep = lln.orthogonal_coeff_conditions(i ** -a.exponent)
    s = rep.summary()
    _emit(table_to_csv(["condition", "value", "trend", "verdict"],
                       [(k, v["value"], v["trend"], v["verdict"]) for k, v in s.items()]), a.out)
    _print_json(s)


def _problem_from(cfg: dict) -> tuple[sa.SAProblem, np.ndarray]:
    drift = cfg.get("drift", {"name": "linear"})
    f = sa.drift_from_config(drift["name"], **drift.get("params", {}))
    noise = proc.parse_distribution(cfg["noise"]) if cfg.get("noise") else None
    x0 = np.atleast_1d(np.asarray(cfg.get("x0", 0.0), float))
    theta = drift.get("params", {}).get("theta")
    return sa.SAProblem(x0.size, f, noise, theta=None if theta is None else [theta] * x0.size), x0


def cmd_sa(a):
    cfg = _json_arg(a.config) if a.config else {}
    prob, x0 = _problem_from(cfg)
    plan = sa.StepPlan(_steps(cfg.get("steps", "harmonic")))
    horizon = cfg.get("horizon", 5000)
    region = cfg.get("projection")
    if region is None:
        tr = sa.robbins_monro(prob, plan, x0, horizon, _seed(a))
    else:
        if "ball" in region:
            reg_ = sa.Ball(region["ball"]["center"], region["ball"]["radius"])
        elif "box" in region:
            reg_ = sa.Box(region["box"]["lo"], region["box"]["hi"])
        else:
            raise ValueError("projection must be {'ball': ...} or {'box': ...}")
        tr = sa.projected_run(prob, plan, reg_, x0, horizon, _seed(a))
    _emit(tr.to_csv(), a.out)


def cmd_kw(a):
    cfg = _json_arg(a.config) if a.config else {}
    th = float(cfg.get("theta", 2.0))
    noise = proc.parse_distribution(cfg["noise"]) if cfg.get("noise") else None
    beta = float(cfg.get("spacing_beta", 0.25))
    c = StepSequence(lambda i: np.maximum(np.asarray(i, float), 1.0) ** (-beta), f"c:{beta}")
    plan = sa.StepPlan(_steps(cfg.get("steps", "harmonic")), c)
    tr = sa.kiefer_wolfowitz(lambda x: (x - th) ** 2, plan, float(cfg.get("x0", 0.0)),
                             cfg.get("horizon", 10_000), _seed(a), noise)
    _emit(tr.to_csv(), a.out)


def cmd_quantile(a):
    cfg = _json_arg(a.config) if a.config else {}
    dist = proc.parse_distribution(cfg.get("dist", {"kind": "Normal", "mean": 0.0, "stddev": 2.0}))
    tr = sa.quantile_track(dist, cfg.get("alpha", 0.85), _steps(cfg.get("steps", "power:0.75")),
                           cfg.get("z0", 0.0), cfg.get("horizon", 5000), _seed(a))
    _emit(tr.to_csv(), a.out)


def cmd_density(a):
    x = proc.SampleStream(_dist(a.spec), _seed(a)).sample(a.n)
    k = kern.builtin_kernel(a.kernel)
    grid = kern.default_grid(x, a.n ** -a.beta, a.grid)
    if a.mode == "batch":
        est = kern.batch_density(x, k, a.n ** -a.beta, grid)
    else:
        est = kern.recursive_density(x, k, kern.power_bandwidth(a.beta), grid).as_grid_function()
    _emit(est.to_csv(), a.out)


def cmd_cdf(a):
    x = proc.SampleStream(_dist(a.spec), _seed(a)).sample(a.n)
    h = a.n ** -a.beta
    grid = kern.default_grid(x, h, a.grid)
    _emit(kern.cdf_estimate(x, kern.builtin_kernel(a.kernel), h, grid).to_csv(), a.out)


def cmd_hist(a):
    x = proc.SampleStream(_dist(a.spec), _seed(a)).sample(a.n)
    edges = np.linspace(a.lo, a.hi, a.cells + 1)
    _emit(kern.histogram(x, edges).to_csv(), a.out)


def cmd_regress(a):
    s = proc.SampleStream(proc.Normal(0.0, 2.0), _seed(a)).sample(2 * a.n)
    x, y = s[: a.n], reg.TRUTHS[a.truth](s[: a.n]) + 0.5 * s[a.n:]
    k = kern.builtin_kernel(a.kernel)
    grid = np.linspace(-2.0, 2.0, a.grid)
    if a.mode == "batch":
        est = reg.batch_regression(x, y, k, a.n ** -a.beta, grid)
    else:
        est = reg.evaluate_ratio(reg.recursive_regression(x, y, k, kern.power_bandwidth(a.beta), grid))
    _emit(est.to_csv(), a.out)


def cmd_ident(a):
    cfg = _json_arg(a.config) if a.config else {}
    seed = _seed(a)
    n = cfg.get("n", 30_000)
    if a.method in ("lms", "rls"):
        coeffs = tuple(cfg.get("coeffs", harness.AR3))
        y = proc.simulate_series(proc.AR(coeffs, proc.Normal(0.0, cfg.get("sd", 1.0))), seed, n)
        if a.method == "lms":
            run = ident.identify_lms(y, len(coeffs), _steps(cfg.get("steps", "harmonic")),
                                     horizon=n, truth=coeffs)
        else:
            run = ident.identify_normalized(y, len(coeffs), horizon=n, truth=coeffs)
        tr = run.trace
    elif a.method == "scalar":
        p = cfg.get("p", 0.9)
        y = harness.kink_series(p, n, seed, cfg.get("ar", (0.5, -0.2)), cfg.get("ma", (0.3, 0.1)),
                                cfg.get("sd", 1.0))
        run = ident.identify_scalar_nonlinear(y, _steps(cfg.get("steps", "harmonic")),
                                              cfg.get("q0", 0.5), truth=p)
        tr = run.trace
    else:
        p = cfg.get("p", 0.9)
        x = harness.nonparam_series(n, seed, lambda v: ident.kink_map(v, p),
                                    cfg.get("correlated", False))
        grid = np.linspace(*cfg.get("region", (-2.5, 0.65)), 201)
        est = ident.identify_nonparametric(x, kern.builtin_kernel(cfg.get("kernel", "cauchy")),
                                           kern.power_bandwidth(cfg.get("beta", 0.5)), grid)
        _emit(est.to_csv(), a.out)
        return
    _emit(tr.to_csv(), a.out)
    if run.final_error is not None:
        print(f"final_error: {run.final_error:.6g}", file=sys.stderr)


MC_FUNCTIONS = {
    "sqrt-quartic": (mc.sqrt_quartic, mc.sqrt_quartic_variance_bound),
}


def cmd_mc(a):
    f, vb = MC_FUNCTIONS[a.fn]
    plan = mc.plan_sample_size(a.eps, a.conf, vb(), a.rounding)
    res = mc.mc_integrate(f, [(0.0, 1.0)], plan.n_required, _seed(a))
    _print_json({"plan": plan.__dict__, "estimate": res.estimate, "stderr": res.stderr,
                 "reference": mc.reference_integral(f)})


def _tool_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="iterlab")
    sub = p.add_subparsers(dest="cmd", required=True)

    def add(name, fn, *specs):
        sp = sub.add_parser(name)
        for flag, kw in specs:
            sp.add_argument(flag, **kw)
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--out", default=None)
        sp.set_defaults(handler=fn)
        return sp

    normal = '{"kind": "Normal"}'
    add("list", None)
    add("summ", cmd_summ, ("--family", dict(default="const")), ("--horizon", dict(type=int, default=50)))
    add("sample", cmd_sample, ("--spec", dict(required=True)), ("--n", dict(type=int, default=1000)))
    add("lln", cmd_lln, ("--spec", dict(required=True)), ("--weights", dict(default="const")),
        ("--center", dict(type=float, default=None)), ("--horizon", dict(type=int, default=10_000)),
        ("--thin", dict(type=int, default=1)))
    add("clt", cmd_clt, ("--spec", dict(default='{"kind": "Exponential"}')),
        ("--block", dict(type=int, default=100)), ("--blocks", dict(type=int, default=1000)),
        ("--bins", dict(type=int, default=40)))
    add("lil", cmd_lil, ("--spec", dict(default=normal)), ("--horizon", dict(type=int, default=10**6)),
        ("--epsilon", dict(type=float, default=0.5)), ("--late-from", dict(type=int, default=10_000)))
    add("gclt", cmd_gclt, ("--spec", dict(default=normal)), ("--x", dict(type=float, default=1.0)),
        ("--horizon", dict(type=int, default=100_000)), ("--thin", dict(type=int, default=100)))
    add("conditions", cmd_conditions, ("--kind", dict(choices=["variance", "orthogonal"], default="variance")),
        ("--exponent", dict(type=float, default=6 / 7)), ("--horizon", dict(type=int, default=100_000)))
    for name, fn in (("sa", cmd_sa), ("kw", cmd_kw), ("quantile", cmd_quantile)):
        add(name, fn, ("--config", dict(default=None)))
    dens = (("--spec", dict(default=normal)), ("--n", dict(type=int, default=1000)),
            ("--beta", dict(type=float, default=0.35)), ("--grid", dict(type=int, default=512)))
    add("density", cmd_density, ("--mode", dict(choices=["batch", "recursive"], default="batch")),
        ("--kernel", dict(default="epanechnikov", choices=kern.BUILTIN_NAMES)), *dens)
    add("cdf", cmd_cdf, ("--kernel", dict(default="epanechnikov", choices=kern.BUILTIN_NAMES)), *dens)
    add("hist", cmd_hist, ("--spec", dict(default=normal)), ("--n", dict(type=int, default=1000)),
        ("--lo", dict(type=float, default=-3.0)), ("--hi", dict(type=float, default=3.0)),
        ("--cells", dict(type=int, default=12)))
    add("regress", cmd_regress, ("--mode", dict(choices=["batch", "recursive"], default="batch")),
        ("--truth", dict(default="square", choices=sorted(reg.TRUTHS))),
        ("--n", dict(type=int, default=1000)), ("--beta", dict(type=float, default=0.4)),
        ("--kernel", dict(default="epanechnikov", choices=kern.BUILTIN_NAMES)),
        ("--grid", dict(type=int, default=201)))
    add("ident", cmd_ident, ("--method", dict(choices=["lms", "rls", "scalar", "nonparam"], default="lms")),
        ("--config", dict(default=None)))
    add("mc", cmd_mc, ("--fn", dict(default="sqrt-quartic", choices=sorted(MC_FUNCTIONS))),
        ("--eps", dict(type=float, default=0.01)), ("--conf", dict(type=float, default=0.98)),
        ("--rounding", dict(choices=["stepwise", "exact"], default="stepwise")))
    return p


TOOLS = ("list", "summ", "sample", "lln", "clt", "lil", "gclt", "conditions", "sa", "kw", "quantile",
         "density", "cdf", "hist", "regress", "ident", "mc")


def _print_registry(stream=None):
    stream = stream or sys.stdout
    rows = harness.list_experiments()
    width = max(len(r[0]) for r in rows)
    for id_, desc, anchor in rows:
        print(f"{id_:<{width}}  {desc}  [{anchor}]", file=stream)


def _experiment_main(argv) -> int:
    p = argparse.ArgumentParser(prog="iterlab <experiment-id>")
    p.add_argument("id")
    p.add_argument("--config", default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--replicas", type=int, default=None)
    p.add_argument("--out", default=None)
    p.add_argument("--jobs", type=int, default=None)
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    p.add_argument("--assert", dest="check", action="store_true")
    a = p.parse_args(argv)
    if a.id not in harness.REGISTRY:
        print(f"unknown experiment {a.id!r}; registered experiments:", file=sys.stderr)
        _print_registry(sys.stderr)
        return 2
    overrides = {}
    for item in a.set:
        k, sep, v = item.partition("=")
        if not sep:
            print(f"--set expects KEY=VALUE, got {item!r}", file=sys.stderr)
            return 2
        overrides[k] = v
    try:
        cfg = harness.parse_config(a.id, a.config, overrides, a.seed, a.replicas, a.out)
    except harness.ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    res = harness.run_experiment(cfg, a.jobs)
    print(json.dumps({"id": cfg.id, "aggregate": res.summary["aggregate"],
                      "pass": res.summary.get("pass")}, sort_keys=True))
    if a.check and res.passed is False:
        return 1
    return 0


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    if not argv or argv[0] in ("-h", "--help"):
        _tool_parser().print_help()
        print("\nexperiments:")
        _print_registry()
        return 0
    if argv[0] not in TOOLS:
        return _experiment_main(argv)
    a = _tool_parser().parse_args(argv)
    if a.cmd == "list":
        _print_registry()
        return 0
    a.handler(a)
    return 0


if __name__ == "__main__":
    sys.exit(main())
