"""Seeded random sources: iid families and AR/ARMA series.

Every variate is produced by inverse transform from a fixed number of
uniforms, so a stream's output depends only on (spec, seed, position) and
sample(a) followed by sample(b) equals sample(a + b) bitwise.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import special, stats

_TINY_U = 2.0**-54
MASK64 = (1 << 64) - 1


def mix_seed(seed: int, r: int) -> int:
    """SplitMix64-style mixing of (seed, replica) into a 64-bit seed."""
    z = (int(seed) * 0x9E3779B97F4A7C15 + int(r) + 0x632BE59BD9B4E019) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(int(seed) & MASK64))


def _open(u):
    return np.where(u == 0.0, _TINY_U, u)


class Distribution:
    """Base class. Subclasses define ``n_uniforms`` and ``from_uniforms``."""

    n_uniforms = 1

    def from_uniforms(self, u: np.ndarray) -> np.ndarray:  # u shape (n, k)
        raise NotImplementedError

    def draw(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return self.from_uniforms(rng.random((n, self.n_uniforms)))

    @property
    def mean(self) -> float:
        return float("nan")

    @property
    def std(self) -> float:
        return float("nan")

    def truncated_moments(self, K: float):
        """(P(|X| > K), E[X; |X| <= K], E[X^2; |X| <= K])."""
        warnings.warn(f"{type(self).__name__}: truncated moments by quadrature")
        from scipy import integrate

        lo, hi = -K, K
        p_in = integrate.quad(self.pdf, lo, hi, limit=200)[0]
        m1 = integrate.quad(lambda t: t * self.pdf(t), lo, hi, limit=200)[0]
        m2 = integrate.quad(lambda t: t * t * self.pdf(t), lo, hi, limit=200)[0]
        return max(0.0, 1.0 - p_in), m1, m2

    def to_dict(self) -> dict:
        d = {"kind": type(self).__name__}
        d.update({k: (list(v) if isinstance(v, tuple) else v) for k, v in self.__dict__.items()})
        return d


@dataclass(frozen=True)
class Normal(Distribution):
    mean_: float = 0.0
    stddev: float = 1.0

    def __post_init__(self):
        if not self.stddev > 0:
            raise ValueError("stddev must be positive")

    def from_uniforms(self, u):
        return self.mean_ + self.stddev * special.ndtri(_open(u[:, 0]))

    @property
    def mean(self):
        return self.mean_

    @property
    def std(self):
        return self.stddev

    def pdf(self, x):
        return stats.norm.pdf(x, self.mean_, self.stddev)

    def cdf(self, x):
        return special.ndtr((np.asarray(x) - self.mean_) / self.stddev)

    def truncated_moments(self, K):
        m, s = self.mean_, self.stddev
        a, b = (-K - m) / s, (K - m) / s
        pa, pb = stats.norm.pdf(a), stats.norm.pdf(b)
        p_in = special.ndtr(b) - special.ndtr(a)
        m1 = m * p_in + s * (pa - pb)
        m2 = (m * m + s * s) * p_in + 2 * m * s * (pa - pb) + s * s * (a * pa - b * pb)
        return float(1 - p_in), float(m1), float(m2)

    def to_dict(self):
        return {"kind": "Normal", "mean": self.mean_, "stddev": self.stddev}


@dataclass(frozen=True)
class Exponential(Distribution):
    rate: float = 1.0

    def __post_init__(self):
        if not self.rate > 0:
            raise ValueError("rate must be positive")

    def from_uniforms(self, u):
        return -np.log1p(-u[:, 0]) / self.rate

    @property
    def mean(self):
        return 1.0 / self.rate

    @property
    def std(self):
        return 1.0 / self.rate

    def pdf(self, x):
        x = np.asarray(x, float)
        return np.where(x >= 0, self.rate * np.exp(-self.rate * np.maximum(x, 0)), 0.0)

    def truncated_moments(self, K):
        lam = self.rate
        e = np.exp(-lam * K)
        m1 = (1 - e * (1 + lam * K)) / lam
        m2 = (2 - e * (lam * lam * K * K + 2 * lam * K + 2)) / lam**2
        return float(e), float(m1), float(m2)


@dataclass(frozen=True)
class Uniform(Distribution):
    lo: float = 0.0
    hi: float = 1.0

    def __post_init__(self):
        if not self.hi > self.lo:
            raise ValueError("need lo < hi")

    def from_uniforms(self, u):
        return self.lo + (self.hi - self.lo) * u[:, 0]

    @property
    def mean(self):
        return 0.5 * (self.lo + self.hi)

    @property
    def std(self):
        return (self.hi - self.lo) / np.sqrt(12.0)

    def pdf(self, x):
        x = np.asarray(x, float)
        return np.where((x >= self.lo) & (x <= self.hi), 1.0 / (self.hi - self.lo), 0.0)

    def truncated_moments(self, K):
        a, b = max(self.lo, -K), min(self.hi, K)
        w = self.hi - self.lo
        if b <= a:
            return 1.0, 0.0, 0.0
        p_in = (b - a) / w
        return 1 - p_in, (b * b - a * a) / (2 * w), (b**3 - a**3) / (3 * w)


@dataclass(frozen=True)
class Pareto(Distribution):
    """P(X > x) = x^{-gamma} for x >= 1."""

    gamma: float = 1.0

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")

    def from_uniforms(self, u):
        # 1-u lies in (0,1], same law as u
        return (1.0 - u[:, 0]) ** (-1.0 / self.gamma)

    @property
    def mean(self):
        g = self.gamma
        return g / (g - 1) if g > 1 else float("inf")

    @property
    def std(self):
        g = self.gamma
        return float(np.sqrt(g / ((g - 1) ** 2 * (g - 2)))) if g > 2 else float("inf")

    def pdf(self, x):
        x = np.asarray(x, float)
        return np.where(x >= 1, self.gamma * np.maximum(x, 1) ** (-self.gamma - 1), 0.0)

    def truncated_moments(self, K):
        g = self.gamma
        if K < 1:
            return 1.0, 0.0, 0.0

        def part(p):  # gamma * int_1^K x^{p-gamma-1} dx
            e = p - g
            return g * np.log(K) if e == 0 else g * (K**e - 1) / e

        return float(K**-g), float(part(1)), float(part(2))


@dataclass(frozen=True)
class SignedPareto(Distribution):
    """S * Z with S = +-1 equiprobable and Z ~ Pareto(gamma)."""

    gamma: float = 1.0
    n_uniforms = 2

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")

    def from_uniforms(self, u):
        s = np.where(u[:, 0] < 0.5, -1.0, 1.0)
        return s * (1.0 - u[:, 1]) ** (-1.0 / self.gamma)

    @property
    def mean(self):
        return 0.0 if self.gamma > 1 else float("nan")

    @property
    def std(self):
        g = self.gamma
        return float(np.sqrt(g / (g - 2))) if g > 2 else float("inf")

    def pdf(self, x):
        x = np.abs(np.asarray(x, float))
        return 0.5 * np.where(x >= 1, self.gamma * np.maximum(x, 1) ** (-self.gamma - 1), 0.0)

    def truncated_moments(self, K):
        p, _, m2 = Pareto(self.gamma).truncated_moments(K)
        return p, 0.0, m2


@dataclass(frozen=True)
class SqrtCauchy(Distribution):
    """sgn(C) sqrt(|C|) for standard Cauchy C; symmetric, infinite variance."""

    def from_uniforms(self, u):
        c = np.tan(np.pi * (u[:, 0] - 0.5))
        return np.sign(c) * np.sqrt(np.abs(c))

    @property
    def mean(self):
        return 0.0

    @property
    def std(self):
        return float("inf")

    def pdf(self, x):
        x = np.asarray(x, float)
        return 2 * np.abs(x) / (np.pi * (1 + x**4))

    def to_dict(self):
        return {"kind": "SqrtCauchy"}


@dataclass(frozen=True)
class Discrete(Distribution):
    points: tuple = (0.0,)
    probs: tuple = (1.0,)

    def __post_init__(self):
        pts = tuple(float(v) for v in self.points)
        pr = tuple(float(v) for v in self.probs)
        if len(pts) != len(pr) or not pts:
            raise ValueError("points and probabilities must align")
        if min(pr) < 0 or abs(sum(pr) - 1.0) > 1e-12:
            raise ValueError("probabilities must be nonnegative and sum to 1")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "probs", pr)

    def from_uniforms(self, u):
        cum = np.cumsum(self.probs)
        cum[-1] = 1.0
        k = np.searchsorted(cum, u[:, 0], side="right")
        return np.asarray(self.points)[np.minimum(k, len(self.points) - 1)]

    @property
    def mean(self):
        return float(np.dot(self.points, self.probs))

    @property
    def std(self):
        p, x = np.asarray(self.probs), np.asarray(self.points)
        return float(np.sqrt(np.dot(p, (x - self.mean) ** 2)))

    def truncated_moments(self, K):
        p, x = np.asarray(self.probs), np.asarray(self.points)
        inside = np.abs(x) <= K
        return float(p[~inside].sum()), float(np.dot(p[inside], x[inside])), float(
            np.dot(p[inside], x[inside] ** 2))


@dataclass(frozen=True)
class NormalMixture(Distribution):
    weights: tuple = (1.0,)
    means: tuple = (0.0,)
    stddevs: tuple = (1.0,)
    n_uniforms = 2

    def __post_init__(self):
        w = tuple(float(v) for v in self.weights)
        m = tuple(float(v) for v in self.means)
        s = tuple(float(v) for v in self.stddevs)
        if not len(w) == len(m) == len(s) or not w:
            raise ValueError("mixture components must align")
        if min(w) < 0 or abs(sum(w) - 1.0) > 1e-12:
            raise ValueError("mixture weights must be nonnegative and sum to 1")
        if min(s) <= 0:
            raise ValueError("stddevs must be positive")
        for k, v in (("weights", w), ("means", m), ("stddevs", s)):
            object.__setattr__(self, k, v)

    def from_uniforms(self, u):
        cum = np.cumsum(self.weights)
        cum[-1] = 1.0
        k = np.minimum(np.searchsorted(cum, u[:, 0], side="right"), len(cum) - 1)
        z = special.ndtri(_open(u[:, 1]))
        return np.asarray(self.means)[k] + np.asarray(self.stddevs)[k] * z

    @property
    def mean(self):
        return float(np.dot(self.weights, self.means))

    @property
    def std(self):
        w, m, s = map(np.asarray, (self.weights, self.means, self.stddevs))
        return float(np.sqrt(np.dot(w, s**2 + m**2) - self.mean**2))

    def pdf(self, x):
        x = np.asarray(x, float)[..., None]
        w, m, s = map(np.asarray, (self.weights, self.means, self.stddevs))
        return np.sum(w * np.exp(-0.5 * ((x - m) / s) ** 2) / (s * np.sqrt(2 * np.pi)), axis=-1)

    def truncated_moments(self, K):
        out = np.zeros(3)
        for w, m, s in zip(self.weights, self.means, self.stddevs):
            out += w * np.array(Normal(m, s).truncated_moments(K))
        return tuple(float(v) for v in out)


@dataclass(frozen=True)
class Shifted(Distribution):
    """base + shift; used for centered heavy-tailed samples."""

    base: Distribution = field(default_factory=Normal)
    shift: float = 0.0

    @property
    def n_uniforms(self):
        return self.base.n_uniforms

    def from_uniforms(self, u):
        return self.base.from_uniforms(u) + self.shift

    @property
    def mean(self):
        return self.base.mean + self.shift

    @property
    def std(self):
        return self.base.std

    def pdf(self, x):
        return self.base.pdf(np.asarray(x) - self.shift)

    def to_dict(self):
        return {"kind": "Shifted", "base": self.base.to_dict(), "shift": self.shift}


_KINDS = {c.__name__: c for c in (Normal, Exponential, Uniform, Pareto, SignedPareto,
                                   SqrtCauchy, Discrete, NormalMixture)}


def parse_distribution(d: dict) -> Distribution:
    d = dict(d)
    kind = d.pop("kind")
    if kind == "Normal":
        if "variance" in d:
            return Normal(d.get("mean", 0.0), float(np.sqrt(d["variance"])))
        return Normal(d.get("mean", 0.0), d.get("stddev", 1.0))
    if kind == "Shifted":
        return Shifted(parse_distribution(d["base"]), d.get("shift", 0.0))
    if kind not in _KINDS:
        raise ValueError(f"unknown distribution kind {kind!r}")
    return _KINDS[kind](**d)


# processes ---------------------------------------------------------------


@dataclass(frozen=True)
class IID:
    dist: Distribution


@dataclass(frozen=True)
class AR:
    """y_{i+1} = sum_j coeffs[j] y_{i-j} + noise_{i+1}."""

    coeffs: tuple
    noise: Distribution
    init: tuple | None = None
    burn_in: int = 0

    def __post_init__(self):
        c = tuple(float(v) for v in self.coeffs)
        if not c or not all(np.isfinite(c)):
            raise ValueError("AR coefficients must be finite and nonempty")
        init = tuple(float(v) for v in (self.init or (0.0,) * len(c)))
        if len(init) != len(c):
            raise ValueError("init length must match AR order")
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "init", init)


@dataclass(frozen=True)
class ARMA:
    """y_{i+1} = sum_j ar[j] y_{i-j} + z_{i+1} + sum_j ma[j] z_{i-j}."""

    ar: tuple
    ma: tuple
    noise: Distribution
    init: tuple | None = None
    burn_in: int = 0

    def __post_init__(self):
        ar = tuple(float(v) for v in self.ar)
        ma = tuple(float(v) for v in self.ma)
        if not all(np.isfinite(ar + ma)):
            raise ValueError("coefficients must be finite")
        init = tuple(float(v) for v in (self.init or (0.0,) * len(ar)))
        if len(init) != len(ar):
            raise ValueError("init length must match AR order")
        object.__setattr__(self, "ar", ar)
        object.__setattr__(self, "ma", ma)
        object.__setattr__(self, "init", init)


def parse_process(d: dict):
    kind = d.get("kind", "IID")
    if kind == "IID":
        return IID(parse_distribution(d["dist"]))
    if kind == "AR":
        return AR(tuple(d["coeffs"]), parse_distribution(d["noise"]), d.get("init"),
                  int(d.get("burn_in", 0)))
    if kind == "ARMA":
        return ARMA(tuple(d["ar"]), tuple(d.get("ma", ())), parse_distribution(d["noise"]),
                    d.get("init"), int(d.get("burn_in", 0)))
    # bare distribution dict
    return IID(parse_distribution(d))


class SampleStream:
    """Stateful single-consumer stream over a process spec."""

    def __init__(self, spec, seed: int):
        if isinstance(spec, Distribution):
            spec = IID(spec)
        self.spec = spec
        self.seed = int(seed)
        self.position = 0
        self._rng = make_rng(seed)
        self.noise_log: list[np.ndarray] = []
        self._keep_noise = False
        if isinstance(spec, (AR, ARMA)):
            ar = spec.coeffs if isinstance(spec, AR) else spec.ar
            self._ylags = list(reversed(spec.init))  # most recent first
            self._zlags = [0.0] * (0 if isinstance(spec, AR) else len(spec.ma))
            self._ar = ar
            if spec.burn_in:
                self._advance(spec.burn_in)

    def keep_noise(self, flag: bool = True) -> "SampleStream":
        self._keep_noise = flag
        return self

    def _noise(self, n):
        return self.spec.noise.draw(self._rng, n)

    def _advance(self, n: int) -> np.ndarray:
        z = self._noise(n)
        if self._keep_noise:
            self.noise_log.append(z.copy())
        out = np.empty(n)
        ar = self._ar
        ma = getattr(self.spec, "ma", ())
        yl, zl = self._ylags, self._zlags
        q, r = len(ar), len(ma)
        zs = z.tolist()
        for i in range(n):
            v = zs[i]
            for j in range(q):
                v += ar[j] * yl[j]
            for j in range(r):
                v += ma[j] * zl[j]
            out[i] = v
            if q:
                yl.insert(0, v)
                yl.pop()
            if r:
                zl.insert(0, zs[i])
                zl.pop()
        return out

    def sample(self, n: int) -> np.ndarray:
        if n < 1:
            raise ValueError("n must be >= 1")
        if isinstance(self.spec, IID):
            out = self.spec.dist.draw(self._rng, n)
        else:
            out = self._advance(n)
        self.position += n
        return out


def simulate_series(spec, seed: int, n: int) -> np.ndarray:
    """AR/ARMA initial values (oldest first) followed by n fresh samples."""
    init = np.asarray(getattr(spec, "init", ()) or (), dtype=float)
    if getattr(spec, "burn_in", 0):
        init = np.zeros(0)
    return np.concatenate((init, SampleStream(spec, seed).sample(n)))


def sample(stream: SampleStream, n: int) -> np.ndarray:
    return stream.sample(n)


@dataclass(frozen=True)
class StationarityReport:
    stationary: bool
    moduli: np.ndarray
    ill_conditioned: bool = False


def ar_stationarity(coeffs: Sequence[float]) -> StationarityReport:
    c = np.asarray(coeffs, dtype=float)
    if c.size == 0:
        raise ValueError("empty coefficient vector")
    poly = np.concatenate(([1.0], -c))
    roots = np.roots(poly) if np.any(c != 0) else np.zeros(c.size)
    if roots.size < c.size:  # trailing zero coefficients drop roots at 0
        roots = np.concatenate((roots, np.zeros(c.size - roots.size)))
    ill = c.size > 20
    if ill:
        warnings.warn("high-order AR polynomial: root moduli may be inaccurate")
    mod = np.sort(np.abs(roots))
    return StationarityReport(bool(np.all(mod < 1)), mod, ill)


def empirical_autocovariance(x, max_lag: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    n = x.size
    if max_lag >= n:
        raise ValueError("max_lag must be < len(x)")
    d = x - x.mean()
    return np.array([np.dot(d[: n - k], d[k:]) / (n - k) for k in range(max_lag + 1)])


def record_table(x) -> list[tuple[int, float]]:
    """Successive strict running-maximum records as (1-based index, value)."""
    x = np.asarray(x, dtype=float)
    if x.size == 0:
        raise ValueError("empty input")
    out = [(1, float(x[0]))]
    best = x[0]
    for i in range(1, x.size):
        if x[i] > best:
            best = x[i]
            out.append((i + 1, float(best)))
    return out
