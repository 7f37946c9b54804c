"""Numerical Mellin transforms Mf(z) = int_0^inf t^(-1-z) f(t) dt."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError, QuadratureError, StatisticsError
from .quadrature import _half_line_nodes, de_quad, nodes
from .stochastic import BLOCK_SIZE, Constant, Factor, ProductRV, SampleStream, _Moments, run_blocks

# nested estimates use a shorter node range: t in ~(1e-37, 1e37)
NESTED_X_MAX = 4.0
NESTED_LEVEL = 4


@dataclass(frozen=True)
class MellinResult:
    value: complex
    abs_error_estimate: float
    stderr: float = 0.0
    quad_error: float = 0.0

    def __post_init__(self):
        if not self.abs_error_estimate >= 0:
            raise ValueError("abs_error_estimate must be >= 0")


@dataclass(frozen=True)
class StripEstimate:
    """Numeric bracket lower < Re z < upper of the convergence strip."""

    lower: float
    upper: float
    confidence: str = "numeric"

    @property
    def empty(self) -> bool:
        return not self.lower < self.upper

    def contains(self, z) -> bool:
        return self.lower < complex(z).real < self.upper


def _mellin_integrand(f, z):
    def integrand(t, logt, gap):
        ft = np.asarray(f(t), dtype=complex)
        # log space keeps t^(-1-z) from overflowing where f vanishes
        return np.exp((-1.0 - z) * logt + np.log(ft))
    return integrand


def mellin(f: Callable[[np.ndarray], np.ndarray], z, tol: float = 1e-10) -> MellinResult:
    """Mf(z) by double-exponential quadrature.

    Raises DomainError when the quadrature fails and ``z`` lies outside the
    detected strip, QuadratureError when it fails for another reason.
    """
    z = complex(z)
    try:
        res = de_quad(_mellin_integrand(f, z), domain="half", tol=tol, rel_tol=tol)
    except QuadratureError:
        strip = detect_strip(f)
        if not strip.contains(z):
            raise DomainError(f"z={z} outside the detected strip ({strip.lower:.3g}, {strip.upper:.3g})") from None
        raise
    return MellinResult(complex(res.value), res.error, 0.0, res.error)


def _tail_slope(f, logt: np.ndarray):
    with np.errstate(divide="ignore", invalid="ignore"):
        y = np.log(np.abs(np.asarray(f(np.exp(logt)), dtype=float)))
    if np.any(np.isneginf(y)):
        return -math.inf
    if not np.all(np.isfinite(y)):
        return math.nan
    return float(np.polyfit(logt, y, 1)[0])


def detect_strip(f: Callable[[np.ndarray], np.ndarray], probe_grid: Sequence[float] | None = None,
                 decades: float = 2.0, slope_tol: float = 0.05) -> StripEstimate:
    """Bracket the convergence strip from power-law fits of |f| near 0 and infinity.

    ``probe_grid`` gives the two probe points (small, large), default
    (1e-8, 1e8).  Each end is fitted over ``decades`` decades; when the slope
    of a second, more extreme window differs by more than ``slope_tol`` the
    tail is taken to decay faster than any power and that side of the strip
    is infinite.
    """
    lo_t, hi_t = (1e-8, 1e8) if probe_grid is None else probe_grid
    span = decades * math.log(10.0)
    k = 21

    def window(center_log):
        return np.linspace(center_log - span / 2, center_log + span / 2, k)

    def exponent(center_log, direction):
        a = _tail_slope(f, window(center_log))
        b = _tail_slope(f, window(center_log + direction * span))
        if math.isnan(a) or math.isnan(b):
            return math.nan
        if b == -math.inf or (abs(a - b) > slope_tol and (b - a) * direction < 0):
            # faster than any power toward the endpoint
            return -direction * math.inf
        if abs(a - b) > slope_tol:
            return math.nan
        return b

    # near 0: f ~ t^a0 converges for Re z < a0; near inf: f ~ t^a1 for Re z > a1
    a0 = exponent(math.log(lo_t), -1.0)
    a1 = exponent(math.log(hi_t), 1.0)
    if math.isnan(a0) or math.isnan(a1):
        return StripEstimate(math.nan, math.nan)
    return StripEstimate(a1, a0)


# --- nested Monte Carlo inside quadrature --------------------------------

def _sampler(rv):
    if rv is None:
        rv = ProductRV((Factor(Constant(1.0)),))
    if isinstance(rv, ProductRV):
        return rv.sample
    return rv


def mellin_of_expectations(
    family: Callable[[np.ndarray, np.ndarray], np.ndarray],
    rv,
    zs: Sequence,
    n: int,
    stream,
    level: int = NESTED_LEVEL,
    x_max: float = NESTED_X_MAX,
    workers: int = 1,
    node_chunk: int = 24,
    max_stderr: float | None = None,
    block_size: int = BLOCK_SIZE // 4,
    random_shift: bool = False,
) -> list[MellinResult]:
    """int_0^inf t^(-1-z) E[family(t, X)] dt for each z in ``zs``.

    One sample set is shared by all quadrature nodes and all z (common random
    numbers).  ``family(t, x)`` receives t of shape (1, k) and the draws of
    shape (m, 1) (or whatever ``rv`` yields, with a trailing axis added) and
    returns an (m, k) array.  ``rv`` is a ProductRV, a callable
    ``(stream, m) -> (x, weights)``, or None for a deterministic family.

    The quadrature error is the change from the half-resolution node set;
    ``abs_error_estimate`` adds 4 standard errors to it.

    With ``random_shift`` every sample gets its own node grid, offset by a
    uniform fraction of the step in the DE variable.  The estimate is then
    unbiased for the truncated integral even when the family has a singularity
    at a fixed t that a fixed grid would keep hitting in the same way.
    """
    zs = [complex(z) for z in zs]
    t, logt, _, w = nodes("half", level=level, x_max=x_max)
    coarse = np.zeros(t.size, dtype=bool)
    # the level grid is two symmetric halves; every other abscissa forms level-1
    half = t.size // 2
    idx = np.arange(half) - half // 2
    coarse[:half] = idx % 2 == 0
    coarse[half:] = idx % 2 == 0
    c_fine = np.stack([w * np.exp((-1.0 - z) * logt) for z in zs])          # (nz, k)
    c_coarse = np.where(coarse, 2.0 * c_fine, 0.0)
    draw = _sampler(rv)
    if rv is None:
        n = 1

    h = 2.0 ** -level
    k = np.arange(-int(math.floor(x_max / h)), int(math.floor(x_max / h)))
    k_parity = np.concatenate([k % 2] * 2)

    def shifted(s, m):
        gen = s.child("shift").generator()
        u = gen.random(m)
        # a random parity keeps the half-resolution subset uniformly shifted too
        parity = gen.integers(0, 2, m)
        ts, lts, _, ws = _half_line_nodes(((k[None, :] + u[:, None]) * h).ravel())
        shape = (2, m, k.size)
        ts, lts, ws = (a.reshape(shape).transpose(1, 0, 2).reshape(m, -1) for a in (ts, lts, ws))
        cf = np.stack([h * ws * np.exp((-1.0 - z) * lts) for z in zs])            # (nz, m, k)
        keep = k_parity[None, :] == parity[:, None]
        return ts, cf, np.where(keep, 2.0 * cf, 0.0)

    def block(s, m):
        x, wts = draw(s, m)
        x = np.asarray(x)
        xs = x[:, None] if x.ndim == 1 else x[:, None, ...]
        acc = np.zeros((m, 2 * len(zs)), dtype=complex)
        if random_shift:
            ts, cf, cc = shifted(s, m)
            for lo in range(0, ts.shape[1], node_chunk):
                sl = slice(lo, lo + node_chunk)
                vals = np.asarray(family(ts[:, sl], xs), dtype=float)
                acc[:, :len(zs)] += np.einsum("mk,zmk->mz", vals, cf[:, :, sl])
                acc[:, len(zs):] += np.einsum("mk,zmk->mz", vals, cc[:, :, sl])
            return _Moments.of(acc, wts)
        for lo in range(0, t.size, node_chunk):
            sl = slice(lo, lo + node_chunk)
            vals = np.asarray(family(t[None, sl], xs), dtype=float)
            acc[:, :len(zs)] += vals @ c_fine[:, sl].T
            acc[:, len(zs):] += vals @ c_coarse[:, sl].T
        return _Moments.of(acc, wts)

    stats = _Moments.merge(run_blocks(block, n, stream, workers, block_size))
    se = np.sqrt(np.maximum(stats.m2, 0.0)) / stats.sw
    out = []
    nz = len(zs)
    for j in range(nz):
        fine, crude = stats.mean[j], stats.mean[nz + j]
        qerr = float(abs(fine - crude))
        stderr = float(se[j])
        if max_stderr is not None and stderr > max_stderr:
            raise StatisticsError(f"inner Monte Carlo stderr {stderr:.2e} exceeds {max_stderr:.2e}")
        out.append(MellinResult(complex(fine), qerr + 4.0 * stderr, stderr, qerr))
    return out


def mellin_of_expectation(family, rv, z, n: int, stream, **kw) -> MellinResult:
    return mellin_of_expectations(family, rv, [z], n, stream, **kw)[0]
