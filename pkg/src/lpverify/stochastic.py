"""Seeded samplers, product random variables and weighted Monte Carlo.

Every draw comes from a :class:`SampleStream`, a value-like (seed, path)
pair.  Monte Carlo runs are cut into fixed-size blocks, block ``k`` drawing
from ``stream.child(k)``, so results do not depend on how many worker
threads process the blocks.
"""
from __future__ import annotations

import math
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError, StatisticsError
from .specfun import G, AnalyticStrip, MomentFunction, beta, gamma, phi, psi

BLOCK_SIZE = 1 << 16
MIN_ESS_FRACTION = 0.01


def _key(name) -> int:
    if isinstance(name, (int, np.integer)):
        if name < 0:
            raise ValueError("stream keys must be non-negative")
        return int(name)
    return zlib.crc32(str(name).encode())


@dataclass(frozen=True)
class SampleStream:
    """A reproducible random source identified by a seed and a split lineage."""

    seed: int
    path: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "seed", int(self.seed) % (1 << 64))
        object.__setattr__(self, "path", tuple(_key(k) for k in self.path))

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=self.path)
        return np.random.Generator(np.random.PCG64(ss))

    def child(self, key) -> "SampleStream":
        return SampleStream(self.seed, self.path + (_key(key),))

    def split(self, k: int) -> list["SampleStream"]:
        return [self.child(i) for i in range(k)]


def _as_stream(stream) -> SampleStream:
    return stream if isinstance(stream, SampleStream) else SampleStream(int(stream))


# --- base samplers -------------------------------------------------------

def sample_gaussian(stream, size=None):
    return _as_stream(stream).generator().standard_normal(size)


def _positive_stable(gen: np.random.Generator, p: float, size):
    # Kanter's representation; E exp(-t X) = exp(-t^p)
    u = gen.uniform(0.0, math.pi, size)
    w = gen.standard_exponential(size)
    a = (np.sin(p * u) ** p * np.sin((1 - p) * u) ** (1 - p) / np.sin(u)) ** (1 / (1 - p))
    return (a / w) ** ((1 - p) / p)


def _symmetric_stable(gen: np.random.Generator, p: float, size):
    # Chambers-Mallows-Stuck with skewness 0; E exp(itX) = exp(-|t|^p)
    if p == 2.0:
        return math.sqrt(2.0) * gen.standard_normal(size)
    v = gen.uniform(-0.5 * math.pi, 0.5 * math.pi, size)
    if p == 1.0:
        return np.tan(v)
    w = gen.standard_exponential(size)
    return (np.sin(p * v) / np.cos(v) ** (1 / p)) * (np.cos((1 - p) * v) / w) ** ((1 - p) / p)


def _symmetric_stable_product(gen: np.random.Generator, p: float, size):
    # psi_p = sqrt(2 phi_{p/2}) * gamma
    sub = np.ones(size) if p == 2.0 else _positive_stable(gen, p / 2, size)
    return np.sqrt(2.0 * sub) * gen.standard_normal(size)


def sample_positive_stable(p: float, stream, size=None):
    if not 0.0 < p < 1.0:
        raise DomainError(f"positive stable sampler needs 0 < p < 1, got {p}")
    return _positive_stable(_as_stream(stream).generator(), p, size)


def sample_symmetric_stable(p: float, stream, size=None, method: str = "direct"):
    """Symmetric p-stable draws, by CMS (``method="direct"``) or as sqrt(2 phi_{p/2}) gamma."""
    if not 0.0 < p <= 2.0:
        raise DomainError(f"symmetric stable sampler needs 0 < p <= 2, got {p}")
    gen = _as_stream(stream).generator()
    if method == "direct":
        return _symmetric_stable(gen, p, size)
    if method == "product":
        return _symmetric_stable_product(gen, p, size)
    raise ValueError(f"unknown method {method!r}")


# --- laws with closed-form moments ---------------------------------------

class Law:
    """Base distribution: a sampler plus z -> E|X|^z on a strip."""

    signed = False
    strip = AnalyticStrip()

    def draw(self, gen: np.random.Generator, size: int) -> np.ndarray:
        raise NotImplementedError

    def moment(self, z):
        raise NotImplementedError


@dataclass(frozen=True)
class Gaussian(Law):
    signed = True
    strip = AnalyticStrip(-1.0, math.inf)

    def draw(self, gen, size):
        return gen.standard_normal(size)

    def moment(self, z):
        return G(z)


@dataclass(frozen=True)
class PositiveStable(Law):
    p: float

    def __post_init__(self):
        if not 0.0 < self.p < 1.0:
            raise DomainError(f"PositiveStable needs 0 < p < 1, got {self.p}")

    @property
    def strip(self):
        return AnalyticStrip(-math.inf, self.p)

    def draw(self, gen, size):
        return _positive_stable(gen, self.p, size)

    def moment(self, z):
        return phi(self.p, z)


@dataclass(frozen=True)
class SymmetricStable(Law):
    p: float
    signed = True

    def __post_init__(self):
        if not 0.0 < self.p <= 2.0:
            raise DomainError(f"SymmetricStable needs 0 < p <= 2, got {self.p}")

    @property
    def strip(self):
        return AnalyticStrip(-1.0, math.inf if self.p == 2.0 else self.p)

    def draw(self, gen, size):
        return _symmetric_stable(gen, self.p, size)

    def moment(self, z):
        return psi(self.p, z)


@dataclass(frozen=True)
class BetaPower(Law):
    """B**exponent with B ~ Beta(alpha, beta)."""

    alpha: float
    beta: float
    exponent: float

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta > 0):
            raise DomainError("BetaPower needs alpha, beta > 0")

    @property
    def strip(self):
        if self.exponent == 0:
            return AnalyticStrip()
        edge = -self.alpha / self.exponent
        return AnalyticStrip(edge, math.inf) if self.exponent > 0 else AnalyticStrip(-math.inf, edge)

    def draw(self, gen, size):
        x = gen.standard_gamma(self.alpha, size)
        y = gen.standard_gamma(self.beta, size)
        return (x / (x + y)) ** self.exponent

    def moment(self, z):
        ez = self.exponent * np.asarray(z, dtype=complex)
        return beta(self.alpha + ez, self.beta) / beta(self.alpha, self.beta)


@dataclass(frozen=True)
class Constant(Law):
    c: float

    def __post_init__(self):
        if not self.c > 0:
            raise DomainError("Constant needs c > 0")

    def draw(self, gen, size):
        return np.full(size, float(self.c))

    def moment(self, z):
        zz = np.asarray(z, dtype=complex)
        res = np.exp(zz * math.log(self.c))
        return complex(res) if res.ndim == 0 else res


@dataclass(frozen=True)
class Factor:
    """|X|**power for X ~ base, optionally under the tilted law dP' ∝ |X|**tilt dP.

    Symmetric bases keep their sign when ``power == 1``.
    """

    base: Law
    power: float = 1.0
    tilt: float = 0.0

    def __post_init__(self):
        if self.tilt != 0.0 and not self.base.strip.contains(self.tilt):
            raise DomainError(f"tilt {self.tilt} outside the moment strip of {self.base}")
        if self.power == 0.0:
            raise DomainError("Factor power must be nonzero")

    @property
    def signed(self) -> bool:
        return self.base.signed and self.power == 1.0

    @property
    def strip(self) -> AnalyticStrip:
        lo, hi = self.base.strip.lower, self.base.strip.upper
        lo, hi = (lo - self.tilt) / self.power, (hi - self.tilt) / self.power
        return AnalyticStrip(min(lo, hi), max(lo, hi))

    def moment(self, z):
        z = np.asarray(z, dtype=complex)
        num = self.base.moment(self.power * z + self.tilt)
        if self.tilt == 0.0:
            return num
        return num / self.base.moment(self.tilt)

    def draw(self, gen, size):
        """Values and log importance weights."""
        x = self.base.draw(gen, size)
        ax = np.abs(x)
        val = ax ** self.power
        if self.signed:
            val = np.copysign(val, x)
        logw = self.tilt * np.log(ax) if self.tilt != 0.0 else None
        return val, logw


@dataclass(frozen=True)
class ProductRV:
    """scale * product of independent factors, with its closed-form moment function."""

    factors: tuple
    scale: float = 1.0
    label: str = ""
    moment: MomentFunction = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(self.factors))
        strip = AnalyticStrip()
        for f in self.factors:
            strip = strip.intersect(f.strip)
        object.__setattr__(self, "moment", MomentFunction(self._moment, strip))

    def _moment(self, z):
        zz = np.asarray(z, dtype=complex)
        res = np.exp(zz * math.log(self.scale)) * np.ones_like(zz)
        for f in self.factors:
            res = res * np.asarray(f.moment(zz))
        return complex(res) if res.ndim == 0 else res

    @property
    def weighted(self) -> bool:
        return any(f.tilt != 0.0 for f in self.factors)

    @property
    def symmetric(self) -> bool:
        return any(f.signed for f in self.factors)

    def sample(self, stream, size: int):
        """``size`` draws and their (unnormalized) importance weights, or None."""
        stream = _as_stream(stream)
        val = np.full(size, float(self.scale))
        logw = None
        for i, f in enumerate(self.factors):
            v, lw = f.draw(stream.child(i).generator(), size)
            val = val * v
            if lw is not None:
                logw = lw if logw is None else logw + lw
        if logw is None:
            return val, None
        # weights are only used in self-normalized ratios, so rescale freely
        return val, np.exp(logw - np.max(logw))


# --- Monte Carlo ----------------------------------------------------------

@dataclass(frozen=True)
class MCEstimate:
    mean: complex | float
    stderr: float
    n: int
    weighted: bool = False
    ess: float | None = None

    def __post_init__(self):
        if not self.stderr >= 0:
            raise ValueError("stderr must be >= 0")


@dataclass
class _Moments:
    """Per-column sufficient statistics of a weighted sample, mergeable across blocks."""

    sw: float
    sw2: float
    mean: np.ndarray
    m2: np.ndarray  # sum w^2 |y - mean|^2
    c1: np.ndarray  # sum w^2 (y - mean)
    n: int

    @classmethod
    def of(cls, y: np.ndarray, w: np.ndarray | None):
        if w is None:
            w = np.ones(y.shape[0])
        sw = float(w.sum())
        sw2 = float((w * w).sum())
        mean = (w[:, None] * y).sum(axis=0) / sw
        d = y - mean
        w2 = (w * w)[:, None]
        return cls(sw, sw2, mean, (w2 * np.abs(d) ** 2).sum(axis=0), (w2 * d).sum(axis=0), y.shape[0])

    @staticmethod
    def merge(parts: Sequence["_Moments"]) -> "_Moments":
        sw = sum(p.sw for p in parts)
        sw2 = sum(p.sw2 for p in parts)
        mean = sum(p.sw * p.mean for p in parts) / sw
        m2 = 0.0
        c1 = 0.0
        for p in parts:
            shift = p.mean - mean
            m2 = m2 + p.m2 + 2.0 * np.real(np.conj(shift) * p.c1) + np.abs(shift) ** 2 * p.sw2
            c1 = c1 + p.c1 + shift * p.sw2
        return _Moments(sw, sw2, mean, m2, c1, sum(p.n for p in parts))


def run_blocks(draw: Callable[[SampleStream, int], object], n: int, stream, workers: int = 1,
               block_size: int = BLOCK_SIZE) -> list:
    """Call ``draw(stream.child(k), size_k)`` for each block and return results in block order."""
    if n < 1:
        raise StatisticsError("need at least one sample")
    stream = _as_stream(stream)
    sizes = [block_size] * (n // block_size)
    if n % block_size:
        sizes.append(n % block_size)
    jobs = [(stream.child(k), s) for k, s in enumerate(sizes)]
    if workers <= 1 or len(jobs) == 1:
        return [draw(s, m) for s, m in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda job: draw(*job), jobs))


def mc_expectation(sampler: Callable[[SampleStream, int], tuple], n: int, stream, workers: int = 1,
                   block_size: int = BLOCK_SIZE) -> list[MCEstimate]:
    """Self-normalized estimates of the columns of ``Y`` from ``sampler(stream, size) -> (Y, W)``.

    ``Y`` has shape (size,) or (size, k); ``W`` is None for plain Monte Carlo.
    Standard errors use the delta method for the ratio sum(W Y)/sum(W).
    """
    weighted = False

    def block(s, m):
        nonlocal weighted
        y, w = sampler(s, m)
        if w is not None:
            weighted = True
        y = np.asarray(y)
        return _Moments.of(y.reshape(m, -1), w)

    stats = _Moments.merge(run_blocks(block, n, stream, workers, block_size))
    ess = stats.sw ** 2 / stats.sw2
    if weighted and ess < MIN_ESS_FRACTION * n:
        raise StatisticsError(f"effective sample size {ess:.1f} below {MIN_ESS_FRACTION} n")
    se = np.sqrt(np.maximum(stats.m2, 0.0)) / stats.sw
    out = []
    for mu, e in zip(stats.mean, se):
        mu = complex(mu) if np.iscomplexobj(stats.mean) else float(mu)
        out.append(MCEstimate(mu, float(e), n, weighted, float(ess) if weighted else None))
    return out


def _power(x: np.ndarray, z):
    """|x|**z, real when z is real."""
    ax = np.abs(x)
    if isinstance(z, complex) and z.imag != 0.0:
        return np.exp(z * np.log(ax))
    return ax ** float(np.real(z))


def rv_expectation(rv: ProductRV, fun: Callable[[np.ndarray], np.ndarray], n: int, stream,
                   workers: int = 1) -> list[MCEstimate]:
    """E'[fun(X)] for X ~ rv; ``fun`` maps (size,) draws to (size,) or (size, k)."""
    def sampler(s, m):
        x, w = rv.sample(s, m)
        return fun(x), w

    return mc_expectation(sampler, n, stream, workers)


def moment_estimate(rv: ProductRV, z, n: int, stream, workers: int = 1) -> MCEstimate:
    """Monte Carlo estimate of E|X|^z."""
    rv.moment.strip.check(z)
    z = complex(z) if np.iscomplexobj(z) else float(z)
    return rv_expectation(rv, lambda x: _power(x, z), n, stream, workers)[0]


def moment_estimates(rv: ProductRV, zs, n: int, stream, workers: int = 1) -> list[MCEstimate]:
    """Several moments from one common sample."""
    zs = [complex(z) for z in zs]
    for z in zs:
        rv.moment.strip.check(z)
    return rv_expectation(rv, lambda x: np.stack([_power(x, z) for z in zs], axis=1), n, stream, workers)


# --- constructions --------------------------------------------------------

def existence_h_factors(p: float) -> tuple[tuple, float]:
    if not 1.0 <= p < 2.0:
        raise DomainError(f"existence h needs 1 <= p < 2, got {p}")
    if p == 1.0:
        return (), 2.0
    base = PositiveStable(1.0 / p)
    f = Factor(base, power=1.0 / (2.0 * p))
    g = Factor(base, power=1.0 / (2.0 * p), tilt=-0.5)
    return (f, g), 2.0 ** (1.0 / p)


def existence_h_moment(p: float, z):
    """(p / (2 Gamma(p/2))) Gamma((p-z)/2) Gamma(-z/2) / Gamma(-z/p)."""
    z = np.asarray(z, dtype=complex)
    if p == 1.0:
        return np.exp(z * math.log(2.0))
    return (p / (2.0 * gamma(p / 2.0))) * gamma((p - z) / 2.0) * gamma(-z / 2.0) / gamma(-z / p)


def build_existence_h(p: float) -> ProductRV:
    """Positive h with E h^z = (p/(2 Gamma(p/2))) Gamma((p-z)/2) Gamma(-z/2) / Gamma(-z/p).

    h = 2^(1/p) f g with f = phi_{1/p}^(1/(2p)) and g the same power under
    the law tilted by phi_{1/p}^(-1/2).  For p = 1, h = 2.
    """
    factors, scale = existence_h_factors(p)
    if not factors:
        factors = (Factor(Constant(1.0)),)
    return ProductRV(factors, scale, label=f"existence_h(p={p:g})")


def _H_closed(m, p, q, r, z):
    z = np.asarray(z, dtype=complex)
    a = p + m - 1.0
    res = G(a - z) * G(z) / G(a)
    if r != 2.0:
        res = res * phi(r / 2, z / 2) * phi(r / 2, (p - z) / 2) / phi(r / 2, p / 2)
    return res


def build_h(m: int, p: float, q: float, r: float) -> ProductRV:
    """Symmetric h = (1/2) f1 f2 f3 f4 psi_q with E|h|^z equal to

    G(p+m-1-z) G(z) Phi_{r/2}(z/2) Phi_{r/2}((p-z)/2) / (G(p+m-1) Phi_{r/2}(p/2)).
    """
    if not (int(m) == m and m >= 1):
        raise DomainError(f"m must be a positive integer, got {m}")
    if not (q > 0 and p + m <= q < r <= 2.0 and q >= 1.0):
        raise DomainError(f"build_h needs 1 <= q, p+m <= q < r <= 2; got p={p}, m={m}, q={q}, r={r}")
    f1, scale = existence_h_factors(q)
    factors = list(f1)
    if p + m < q:
        factors.append(Factor(BetaPower((p + m) / 2.0, (q - p - m) / 2.0, -0.5)))
    if r < 2.0:
        base = PositiveStable(r / 2.0)
        factors.append(Factor(base, power=0.5))
        factors.append(Factor(base, power=-0.5, tilt=p / 2.0))
    factors.append(Factor(SymmetricStable(q)))
    return ProductRV(tuple(factors), 0.5 * scale, label=f"h(m={m},p={p:g},q={q:g},r={r:g})")


def H_moment(m: int, p: float, q: float, r: float) -> MomentFunction:
    """Closed form of E|h|^z for ``build_h(m, p, q, r)`` on -1 < Re z < p + m."""
    return MomentFunction(lambda z: _H_closed(m, p, q, r, z), AnalyticStrip(-1.0, p + m))
