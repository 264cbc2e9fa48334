"""Batch regression errors over seeds for both readings of the N(0,2) design.

    python3 scripts/regression_pilot.py --seeds 10
"""
import argparse

import numpy as np

from iterlab import kernels as kern
from iterlab import processes as proc
from iterlab import regression as reg


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--seeds", type=int, default=10)
    p.add_argument("--n", type=int, default=1000)
    a = p.parse_args()
    k = kern.builtin_kernel("epanechnikov")
    g = np.linspace(-2, 2, 201)
    for sd in (2.0, 2**0.5):
        for truth in ("square", "clipped-identity"):
            sup, l1 = [], []
            for s in range(a.seeds):
                z = proc.SampleStream(proc.Normal(0.0, sd), s).sample(2 * a.n)
                x, xi = z[: a.n], z[a.n:]
                est = reg.batch_regression(x, reg.TRUTHS[truth](x) + 0.5 * xi, k, a.n**-0.4, g)
                d = np.abs(est.values - reg.TRUTHS[truth](g))
                sup.append(d.max())
                l1.append(np.trapezoid(d, g))
            print(f"sd={sd:.3f} {truth:17s} sup {np.round(sup, 3)}\n{'':24s} L1  {np.round(l1, 3)}")


if __name__ == "__main__":
    main()
