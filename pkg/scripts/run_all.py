"""Run every registered experiment with its defaults and write CSV/JSON outputs.

    python3 scripts/run_all.py --out runs --seed 0
"""
import argparse
import json
import time

from iterlab import harness


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--out", default="runs")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=None)
    p.add_argument("--only", nargs="*", default=None, help="experiment ids to run")
    a = p.parse_args()
    ids = a.only or [r[0] for r in harness.list_experiments()]
    status = {}
    for exp_id in ids:
        t = time.perf_counter()
        res = harness.run_experiment(harness.parse_config(exp_id, seed=a.seed, out=a.out), a.jobs)
        status[exp_id] = res.passed
        print(f"{exp_id:28s} {time.perf_counter() - t:6.1f}s  pass={res.passed}  "
              f"{json.dumps(res.summary['aggregate'])[:120]}", flush=True)
    failed = [k for k, v in status.items() if v is False]
    print(f"\n{len(ids)} experiments, {len(failed)} outside their band: {failed}")


if __name__ == "__main__":
    main()
