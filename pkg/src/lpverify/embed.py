"""Concrete embeddings of l_2^m (+)_N l_q^n into L_p and Monte Carlo for both sides.

Points of the direct sum are vectors of length m + n: the first m
coordinates live in X = l_2^m, the last n in Y = l_q^n.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

import numpy as np

from .absnorm import AbsoluteNorm, LqNorm, parse_norm
from .errors import DimensionError, DomainError, ParamError, RankError
from .specfun import G
from .stochastic import (MCEstimate, ProductRV, SampleStream, SymmetricStable, _as_stream,
                         _power, build_h, mc_expectation, run_blocks, _symmetric_stable)

RANK_TOL = 1e-8
CLIP_QUANTILE = 1.0 - 1e-6


@dataclass(frozen=True)
class DirectSumSpace:
    m: int
    n: int
    q: float
    N: AbsoluteNorm

    def __post_init__(self):
        if self.m < 0 or self.n < 1:
            raise DimensionError(f"need m >= 0 and n >= 1, got m={self.m}, n={self.n}")
        if not 1.0 <= self.q <= 2.0:
            raise DomainError(f"q must lie in [1, 2], got {self.q}")

    @property
    def dim(self) -> int:
        return self.m + self.n

    def norm_x(self, x):
        x = np.asarray(x, dtype=float)
        return np.sqrt(np.sum(x * x, axis=-1))

    def norm_y(self, y):
        y = np.asarray(y, dtype=float)
        return np.sum(np.abs(y) ** self.q, axis=-1) ** (1.0 / self.q)

    def norm(self, v):
        """Norm of (..., m + n) arrays."""
        v = np.asarray(v, dtype=float)
        if v.shape[-1] != self.dim:
            raise DimensionError(f"expected vectors of length {self.dim}, got {v.shape[-1]}")
        return self.N(self.norm_x(v[..., :self.m]), self.norm_y(v[..., self.m:]))

    def descriptor(self) -> str:
        return f"l2:{self.m}+lq:{self.q:g}:{self.n}@{self.N.descriptor()}"


def parse_space(text: str) -> DirectSumSpace:
    """Parse "l2:<m>+lq:<q>:<n>@r:<r>" (the outer norm may also be any norm descriptor)."""
    mt = re.fullmatch(r"\s*l2:(\d+)\+lq:([0-9.eE+-]+):(\d+)@(.+?)\s*", text)
    if mt is None:
        raise ParamError(f"bad space descriptor {text!r}")
    m, q, n, outer = int(mt.group(1)), float(mt.group(2)), int(mt.group(3)), mt.group(4)
    N = LqNorm(float(outer[2:])) if outer.startswith("r:") else parse_norm(outer)
    return DirectSumSpace(m, n, q, N)


def direct_sum_norm(space: DirectSumSpace, x, y) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape[-1] != space.m or y.shape[-1] != space.n:
        raise DimensionError(f"x needs length {space.m} and y length {space.n}")
    return space.N(space.norm_x(x), space.norm_y(y))


@dataclass(frozen=True)
class GaussianProcessSpec:
    """xi = sum_j gamma_j x_j for the rows x_j of ``vectors``."""

    vectors: np.ndarray
    rank_certificate: float = field(init=False)
    largest_singular: float = field(init=False)

    def __post_init__(self):
        v = np.atleast_2d(np.asarray(self.vectors, dtype=float))
        object.__setattr__(self, "vectors", v)
        sv = np.linalg.svd(v, compute_uv=False)
        smallest = sv[-1] if v.shape[0] >= v.shape[1] else 0.0
        object.__setattr__(self, "rank_certificate", float(smallest))
        object.__setattr__(self, "largest_singular", float(sv[0]))

    @classmethod
    def identity(cls, d: int) -> "GaussianProcessSpec":
        return cls(np.eye(d))

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    @property
    def full_rank(self) -> bool:
        return self.rank_certificate > RANK_TOL * self.largest_singular

    @property
    def rank(self) -> int:
        sv = np.linalg.svd(self.vectors, compute_uv=False)
        return int(np.sum(sv > RANK_TOL * sv[0]))

    def require_full_rank(self):
        if not self.full_rank:
            raise RankError(f"Gaussian process is not of full rank (certificate {self.rank_certificate:.3g})")

    def sample(self, gen: np.random.Generator, size: int) -> np.ndarray:
        return gen.standard_normal((size, self.vectors.shape[0])) @ self.vectors


def _norm_fn(space):
    if isinstance(space, DirectSumSpace):
        return space.norm
    if isinstance(space, AbsoluteNorm):
        return lambda v: space(v[..., 0], v[..., 1])
    return space


def gaussian_norm_moment(spec: GaussianProcessSpec, space, z, n: int, stream, weight=None,
                         workers: int = 1) -> MCEstimate:
    """E[weight(gamma) ||xi||^z]; ``space`` is a DirectSumSpace, AbsoluteNorm or norm callable."""
    if not complex(z).real > -spec.rank:
        raise DomainError(f"E||xi||^z needs Re z > -rank = {-spec.rank}, got {z}")
    norm = _norm_fn(space)
    z = complex(z) if np.iscomplexobj(z) else float(z)

    def sampler(s, m):
        g = s.generator().standard_normal((m, spec.vectors.shape[0]))
        val = _power(norm(g @ spec.vectors), z)
        if weight is not None:
            val = val * weight(g)
        return val, None

    return mc_expectation(sampler, n, stream, workers)[0]


def spherical_ratio_sample(m: int, x, stream, size=None):
    """R x = (x . gamma) / |gamma| for gamma standard Gaussian in R^m."""
    x = np.asarray(x, dtype=float)
    if m < 1 or x.shape != (m,):
        raise DimensionError(f"x must have shape ({m},)")
    gen = _as_stream(stream).generator()
    g = gen.standard_normal((1 if size is None else size, m))
    out = (g @ x) / np.sqrt(np.sum(g * g, axis=1))
    return float(out[0]) if size is None else out


def stable_embedding_sample(q: float, y, stream, size=None):
    """S y = sum_j y_j zeta_j with zeta_j iid symmetric q-stable, so S y ~ ||y||_q psi_q."""
    if not 0.0 < q <= 2.0:
        raise DomainError(f"stable embedding needs 0 < q <= 2, got {q}")
    y = np.atleast_1d(np.asarray(y, dtype=float))
    gen = _as_stream(stream).generator()
    zeta = _symmetric_stable(gen, q, (1 if size is None else size, y.size))
    out = zeta @ y
    return float(out[0]) if size is None else out


# --- embedding models -----------------------------------------------------

def theta_for(p: float, m: int) -> float:
    """theta > 0 with theta^p = G(p+m-1) / G(m-1)."""
    ratio = G(p + m - 1.0).real / G(m - 1.0).real
    return ratio ** (1.0 / p)


@dataclass(frozen=True)
class EmbeddingModel:
    """T(x + y) = theta (R x + S y) on l_2^m (+)_r l_q^n.

    Case 2: R x = (x . u) with u uniform on the sphere, S y = (g/2) sum y_j zeta_j
    where h = (g/2) psi_q is the variable of ``build_h(m, p, q, r)``.
    Case 1 (m = 1, p > 0): theta = 1, T(a + y) = a + S y.
    """

    space: DirectSumSpace
    p: float
    theta: float
    h: ProductRV
    mode: str

    @property
    def g(self) -> ProductRV:
        """h with its stable factor removed (keeps the 1/2 scale)."""
        fs = tuple(f for f in self.h.factors if not isinstance(f.base, SymmetricStable))
        return ProductRV(fs, self.h.scale)

    def components(self, vectors, stream, size: int):
        """Per-sample (R x_j, S y_j) parts of T v_j / theta for rows v_j, plus weights."""
        vectors = np.atleast_2d(np.asarray(vectors, dtype=float))
        m, n = self.space.m, self.space.n
        if vectors.shape[1] != m + n:
            raise DimensionError(f"vectors must have length {m + n}")
        stream = _as_stream(stream)
        gen = stream.child("R").generator()
        gam = gen.standard_normal((size, m))
        u = gam / np.sqrt(np.sum(gam * gam, axis=1, keepdims=True))
        a = u @ vectors[:, :m].T
        gv, w = self.g.sample(stream.child("g"), size)
        zeta = _symmetric_stable(stream.child("zeta").generator(), self.space.q, (size, n))
        b = gv[:, None] * (zeta @ vectors[:, m:].T)
        return a, b, w


def case1_model(p: float, q: float, r: float) -> EmbeddingModel:
    if not p > 0:
        raise DomainError("Case 1 needs p > 0")
    h = build_h(1, p, q, r)
    return EmbeddingModel(DirectSumSpace(1, 1, q, LqNorm(r)), p, 1.0, h, "case1_standard")


def case2_model(p: float, m: int, q: float, r: float, n: int) -> EmbeddingModel:
    if not (p < 0 and p + m > 0):
        raise DomainError(f"Case 2 needs p < 0 < p + m, got p={p}, m={m}")
    h = build_h(m, p, q, r)
    theta = theta_for(p, m)
    return EmbeddingModel(DirectSumSpace(m, n, q, LqNorm(r)), p, theta, h, "case2_gaussian")


def case1_lhs(p: float, q: float, r: float, t, n: int, stream, workers: int = 1):
    """E'|1 + t h|^p for h = build_h(1, p, q, r); one sample shared by all t.

    Returns a single MCEstimate for scalar t, else a list.
    """
    if not p > 0:
        raise DomainError("Case 1 needs p > 0")
    h = build_h(1, p, q, r)
    ts = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(ts < 0):
        raise DomainError("t must be >= 0")

    def sampler(s, m):
        x, w = h.sample(s, m)
        return np.abs(1.0 + x[:, None] * ts[None, :]) ** p, w

    out = mc_expectation(sampler, n, stream, workers)
    return out[0] if np.ndim(t) == 0 else out


def case1_rhs(p: float, r: float, t):
    return (1.0 + np.asarray(t, dtype=float) ** r) ** (p / r)


def _clipped_estimates(sampler, n, stream, workers, quantile=CLIP_QUANTILE):
    """Plain or weighted estimates of the columns of Y, capped at their ``quantile``."""
    parts = run_blocks(sampler, n, stream, workers)
    y = np.concatenate([p[0] for p in parts])
    w = None if parts[0][1] is None else np.concatenate([p[1] for p in parts])
    cap = np.quantile(y, quantile, axis=0, method="higher")
    clipped = y > cap
    y = np.minimum(y, cap)
    est = mc_expectation(lambda s, m: (y, w), y.shape[0], 0, block_size=max(1, y.shape[0]))
    return [MCEstimate(e.mean, e.stderr, n, e.weighted, e.ess) for e in est], clipped.mean(axis=0)


@dataclass(frozen=True)
class IdentityEstimate:
    t: float
    lhs: MCEstimate
    rhs: MCEstimate
    clip_rate_lhs: float
    clip_rate_rhs: float


def case2_identity(model: EmbeddingModel, spec: GaussianProcessSpec, t, n: int, stream,
                   workers: int = 1, clip: bool = True):
    """Both sides of E||xi_X + t xi_Y||^p = theta^p E'[(sum_j T(x_j + t y_j)^2)^(p/2)].

    The sides use disjoint sub-streams.  Returns (lhs, rhs) for scalar t, else
    a list of IdentityEstimate.
    """
    if model.mode != "case2_gaussian":
        raise DomainError("case2_identity needs a case2_gaussian model")
    if spec.dim != model.space.dim:
        raise DimensionError(f"spec vectors have length {spec.dim}, space has {model.space.dim}")
    spec.require_full_rank()
    ts = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(ts <= 0):
        raise DomainError("t must be > 0")
    p, m = model.p, model.space.m
    stream = _as_stream(stream)

    def lhs_sampler(s, size):
        a, b, w = model.components(spec.vectors, s, size)
        tot = np.stack([np.sum((a + tt * b) ** 2, axis=1) for tt in ts], axis=1)
        return model.theta ** p * tot ** (p / 2.0), w

    def rhs_sampler(s, size):
        xi = spec.sample(s.generator(), size)
        vals = [model.space.N(model.space.norm_x(xi[:, :m]), tt * model.space.norm_y(xi[:, m:])) for tt in ts]
        return np.stack(vals, axis=1) ** p, None

    if clip:
        lhs, cl = _clipped_estimates(lhs_sampler, n, stream.child("lhs"), workers)
        rhs, cr = _clipped_estimates(rhs_sampler, n, stream.child("rhs"), workers)
    else:
        lhs = mc_expectation(lhs_sampler, n, stream.child("lhs"), workers)
        rhs = mc_expectation(rhs_sampler, n, stream.child("rhs"), workers)
        cl = cr = np.zeros(ts.size)
    res = [IdentityEstimate(float(tt), a, b, float(x), float(y)) for tt, a, b, x, y in zip(ts, lhs, rhs, cl, cr)]
    if np.ndim(t) == 0:
        return res[0].lhs, res[0].rhs
    return res


def boundedness_sweep(spec: GaussianProcessSpec, space, u: float, direction, scales, n: int, stream,
                      workers: int = 1) -> list[MCEstimate]:
    """E||s x + xi||^u for s in ``scales`` with a common Gaussian sample."""
    if not -spec.rank < u < 0:
        raise DomainError(f"u must lie in ({-spec.rank}, 0)")
    norm = _norm_fn(space)
    x = np.asarray(direction, dtype=float)
    scales = list(scales)

    def sampler(s, m):
        xi = spec.sample(s.generator(), m)
        return np.stack([norm(xi + c * x) ** u for c in scales], axis=1), None

    return mc_expectation(sampler, n, stream, workers)
