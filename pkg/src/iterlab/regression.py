"""Batch and recursive kernel regression on a grid."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .kernels import DensityState, Kernel, _kernel_sum, recursive_density_update
from .trace import GridFunction

TAU_REL = 1e-8


def _threshold(den: np.ndarray) -> float:
    """Masking threshold relative to the grid-average denominator."""
    scale = float(np.mean(den)) if den.size else 0.0
    return TAU_REL * scale


def batch_regression(x, y, kernel: Kernel, h: float, grid) -> GridFunction:
    """sum Y_i K((x - X_i)/h) / sum K((x - X_i)/h), masked where the denominator is tiny."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    if not h > 0:
        raise ValueError("bandwidth must be positive")
    grid = np.asarray(grid, float)
    den = _kernel_sum(grid, x, kernel, h)
    num = _kernel_sum(grid, x, kernel, h, weights=y)
    mask = den > max(_threshold(den), 0.0)
    if not mask.any():
        warnings.warn("all grid points masked")
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.where(mask, num / np.where(mask, den, 1.0), np.nan)
    return GridFunction(grid, r, mask, meta={"kernel": kernel.name, "h": h, "n": int(x.size)})


@dataclass(frozen=True)
class RegressionState:
    """Q_n and phi_n on the grid plus what is needed to check the
    weighted-mean form R_{n+1} = (1 - M_n) R_n + M_n Y_{n+1}."""

    density: DensityState
    q: np.ndarray
    weight_sum: np.ndarray  # sum_{i<=n} (1/h_i) K((x - X_i)/h_i)
    prev_ratio: np.ndarray | None = None
    prev_mask: np.ndarray | None = None
    last_weight: np.ndarray | None = None
    last_y: float | None = None

    @staticmethod
    def empty(grid, bandwidth) -> "RegressionState":
        d = DensityState.empty(grid, bandwidth)
        return RegressionState(d, np.zeros_like(d.grid), np.zeros_like(d.grid))

    @property
    def grid(self):
        return self.density.grid

    @property
    def phi(self):
        return self.density.values

    @property
    def count(self):
        return self.density.count


def _ratio(state: RegressionState):
    den = state.phi
    mask = den > _threshold(den) if state.count else np.zeros(den.shape, bool)
    mask &= den > 0
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.where(mask, state.q / np.where(mask, den, 1.0), np.nan)
    return r, mask


def recursive_regression_update(state: RegressionState, x: float, y: float,
                                kernel: Kernel) -> RegressionState:
    """Q_{n+1} = (1 - mu_n) Q_n + mu_n (1/h_{n+1}) Y K((. - x)/h_{n+1}), mu_n = 1/(n+1)."""
    if not (math.isfinite(x) and math.isfinite(y)):
        raise ValueError("non-finite pair")
    n1 = state.count + 1
    h = float(state.density.bandwidth(n1))
    kw = kernel.pdf((state.grid - x) / h) / h
    mu = 1.0 / n1
    prev, pmask = _ratio(state)
    return RegressionState(
        density=recursive_density_update(state.density, x, kernel),
        q=(1.0 - mu) * state.q + mu * y * kw,
        weight_sum=state.weight_sum + kw,
        prev_ratio=prev, prev_mask=pmask, last_weight=kw, last_y=float(y),
    )


def recursive_regression(x, y, kernel: Kernel, bandwidth, grid) -> RegressionState:
    state = RegressionState.empty(grid, bandwidth)
    for a, b in zip(np.asarray(x, float).tolist(), np.asarray(y, float).tolist()):
        state = recursive_regression_update(state, a, b, kernel)
    return state


def evaluate_ratio(state: RegressionState) -> GridFunction:
    """R_n = Q_n / phi_n with mask, plus the weighted-mean form check.

    ``meta['weighted_mean_deviation']`` is the max over points valid before
    and after the last update of |R_n - ((1 - M) R_{n-1} + M Y_n)| with
    M = (1/h_n) K_n / sum_{i<=n} (1/h_i) K_i. For n = 1 the previous ratio
    is undefined and the check compares R_1 with Y_1 directly.
    """
    r, mask = _ratio(state)
    dev = 0.0
    if state.count >= 1 and state.last_weight is not None:
        with np.errstate(divide="ignore", invalid="ignore"):
            M = np.where(state.weight_sum > 0, state.last_weight / state.weight_sum, 0.0)
        if state.count == 1:
            both = mask
            alt = np.full_like(r, state.last_y)
        else:
            both = mask & state.prev_mask
            alt = (1 - M) * np.where(both, state.prev_ratio, 0.0) + M * state.last_y
        if both.any():
            dev = float(np.max(np.abs(r[both] - alt[both])))
    return GridFunction(state.grid, r, mask, meta={"n": state.count,
                                                   "weighted_mean_deviation": dev})


def closed_form_sums(x, y, kernel: Kernel, bandwidth, grid):
    """(1/n) sum (1/h_i) Y_i K_i and (1/n) sum (1/h_i) K_i evaluated directly."""
    x = np.asarray(x, float)
    h = bandwidth(np.arange(1, x.size + 1))
    num = _kernel_sum(grid, x, kernel, h, weights=y) / x.size
    den = _kernel_sum(grid, x, kernel, h) / x.size
    return num, den


# test regression functions -------------------------------------------------

def square(x):
    return np.asarray(x, float) ** 2


def clipped_identity(x):
    return np.clip(np.asarray(x, float), -1.0, 1.0)


def clipped_sine(x):
    x = np.asarray(x, float)
    h = np.pi / 2
    return np.where(x < -h, -1 + 0.2 * (x + h), np.where(x > h, 1 + 0.2 * (x - h), np.sin(x)))


TRUTHS = {"square": square, "clipped-identity": clipped_identity, "clipped-sine": clipped_sine}
