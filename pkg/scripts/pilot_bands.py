"""Replicate the seed-count bands over more seeds than the registry default.

Prints, per experiment, how many replicas land inside the band. This is the
evidence behind the band decisions in the decision ledger.

    python3 scripts/pilot_bands.py --replicas 30
"""
import argparse

from iterlab import harness

BANDED = ["ident-ar3", "ident-ar3-normalized", "ident-scalar", "ident-nonparam-fourseg",
          "lln-wlln-signed-pareto", "sa-rm-damped", "sa-kw", "sa-quantile", "gclt-normal",
          "lil-envelope"]


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--replicas", type=int, default=30)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=None)
    a = p.parse_args()
    for exp_id in BANDED:
        cfg = harness.parse_config(exp_id, seed=a.seed, replicas=a.replicas)
        res = harness.run_experiment(cfg, a.jobs)
        print(f"{exp_id:28s} pass={res.passed}  {res.summary['aggregate']}", flush=True)
    cfg = harness.parse_config("lil-envelope", overrides={"dist": "sqrtcauchy"}, seed=a.seed,
                               replicas=a.replicas)
    res = harness.run_experiment(cfg, a.jobs)
    print(f"{'lil-envelope sqrtcauchy':28s} pass={res.passed}  {res.summary['aggregate']}")


if __name__ == "__main__":
    main()
