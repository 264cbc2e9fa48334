"""Run logs and grid-sampled estimates, both serializable to CSV.

Floats are written with ``repr`` so that a CSV file round-trips bit-exactly
and two runs with the same seed produce byte-identical files.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


@dataclass(frozen=True)
class Trace:
    """Step-indexed log of a recursion.

    ``states`` has shape (len(steps), d). ``aux`` maps a column name to an
    array aligned with ``steps``. ``diverged`` is set when the run was frozen
    at the first non-finite (or cut-off) state.
    """

    steps: np.ndarray
    states: np.ndarray
    aux: Mapping[str, np.ndarray] = field(default_factory=dict)
    diverged: bool = False
    meta: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self):
        steps = np.asarray(self.steps, dtype=np.int64)
        states = np.asarray(self.states, dtype=float)
        if states.ndim == 1:
            states = states[:, None]
        if states.shape[0] != steps.shape[0]:
            raise ValueError("steps and states length mismatch")
        if steps.size > 1 and np.any(np.diff(steps) <= 0):
            raise ValueError("trace indices must be strictly increasing")
        aux = {}
        for k, v in self.aux.items():
            v = np.asarray(v, dtype=float)
            if v.shape != (steps.shape[0],):
                raise ValueError(f"aux column {k!r} misaligned")
            aux[k] = v
        if not self.diverged and not np.all(np.isfinite(states)):
            raise ValueError("non-finite state in a trace not flagged as diverged")
        object.__setattr__(self, "steps", steps)
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "aux", aux)
        object.__setattr__(self, "meta", dict(self.meta))

    def __len__(self) -> int:
        return int(self.steps.shape[0])

    @property
    def dim(self) -> int:
        return int(self.states.shape[1])

    @property
    def final(self) -> np.ndarray:
        return self.states[-1].copy()

    @property
    def values(self) -> np.ndarray:
        """State column for scalar traces, the full state array otherwise."""
        return self.states[:, 0] if self.dim == 1 else self.states

    def column(self, name: str) -> np.ndarray:
        return self.aux[name]

    def header(self) -> list[str]:
        return ["step"] + [f"state_{j}" for j in range(self.dim)] + list(self.aux)

    def rows(self):
        cols = [self.aux[k] for k in self.aux]
        for i in range(len(self)):
            yield [str(int(self.steps[i]))] + [_fmt(v) for v in self.states[i]] + [
                _fmt(c[i]) for c in cols
            ]

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.header())
        w.writerows(self.rows())
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text


@dataclass(frozen=True)
class GridFunction:
    """Function estimate sampled on a grid; ``mask`` marks valid points."""

    x: np.ndarray
    values: np.ndarray
    mask: np.ndarray | None = None
    meta: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if x.shape != v.shape or x.ndim != 1:
            raise ValueError("grid and values must be 1-d and aligned")
        m = None
        if self.mask is not None:
            m = np.asarray(self.mask, dtype=bool)
            if m.shape != x.shape:
                raise ValueError("mask misaligned")
            v = np.where(m, v, np.nan)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "mask", m)
        object.__setattr__(self, "meta", dict(self.meta))

    @property
    def valid(self) -> np.ndarray:
        return np.ones(self.x.shape, bool) if self.mask is None else self.mask

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        if self.mask is None:
            w.writerow(["x", "value"])
            for a, b in zip(self.x, self.values):
                w.writerow([_fmt(a), _fmt(b)])
        else:
            w.writerow(["x", "value", "mask"])
            for a, b, m in zip(self.x, self.values, self.mask):
                w.writerow([_fmt(a), _fmt(b) if m else "NA", "1" if m else "0"])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text


def table_to_csv(header, rows, path=None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) if not isinstance(v, str) else v for v in r])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text
