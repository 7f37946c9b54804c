"""Complex Gamma-type functions and the Gaussian/stable moment functions.

Everything is evaluated in log space and exponentiated once.  Inputs may be
Python scalars or numpy arrays; scalar in, ``complex`` out.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import loggamma

from .errors import DomainError, PoleError

_LOG_PI = math.log(math.pi)
_LOG2 = math.log(2.0)
POLE_TOL = 1e-12


class AnalyticContinuationWarning(UserWarning):
    """A moment function was evaluated outside the strip where it is a moment."""


@dataclass(frozen=True)
class AnalyticStrip:
    """Open vertical strip ``lower < Re z < upper``."""

    lower: float = -math.inf
    upper: float = math.inf

    def __post_init__(self):
        if not self.lower < self.upper:
            raise DomainError(f"empty strip ({self.lower}, {self.upper})")

    def contains(self, z) -> bool:
        re = np.real(np.asarray(z))
        return bool(np.all((re > self.lower) & (re < self.upper)))

    def check(self, z, what: str = "argument"):
        if not self.contains(z):
            raise DomainError(f"{what} {z!r} outside strip {self.lower} < Re z < {self.upper}")

    def intersect(self, other: "AnalyticStrip") -> "AnalyticStrip":
        return AnalyticStrip(max(self.lower, other.lower), min(self.upper, other.upper))


@dataclass(frozen=True)
class MomentFunction:
    """A closed-form ``z -> E|X|^z`` together with the strip where it is valid."""

    evaluator: Callable
    strip: AnalyticStrip
    removable_points: tuple = field(default=())

    def __call__(self, z):
        self.strip.check(z)
        return self.evaluator(z)


def _out(z_in, res):
    return complex(res) if np.ndim(z_in) == 0 else res


def log_gamma(z):
    """Principal branch of log Gamma(z) for complex z (scipy's ``loggamma``)."""
    zz = np.asarray(z, dtype=complex)
    if np.any(_is_pole(zz)):
        raise PoleError(f"log_gamma: pole at {z!r}")
    return _out(z, loggamma(zz))


def gamma(z):
    return _out(z, np.exp(np.asarray(log_gamma(z))))


def log_beta(w, z):
    w = np.asarray(w, dtype=complex)
    z = np.asarray(z, dtype=complex)
    return np.asarray(log_gamma(w)) + np.asarray(log_gamma(z)) - np.asarray(log_gamma(w + z))


def _is_pole(z: np.ndarray) -> np.ndarray:
    k = np.round(z.real)
    return (np.abs(z - k) < POLE_TOL) & (k <= 0)


def beta(w, z):
    """Euler Beta function Gamma(w)Gamma(z)/Gamma(w+z), continued to all non-pole arguments.

    Where only Gamma(w+z) is at a pole the value is 0.
    """
    ww, zz = np.broadcast_arrays(np.asarray(w, dtype=complex), np.asarray(z, dtype=complex))
    zero = _is_pole(ww + zz) & ~_is_pole(ww) & ~_is_pole(zz)
    res = np.zeros(ww.shape, dtype=complex)
    ok = ~zero
    if np.any(ok):
        res[ok] = np.exp(log_beta(ww[ok], zz[ok]))
    return complex(res) if res.ndim == 0 else res


def G(z):
    """E|gamma|^z for a standard Gaussian gamma: pi^(-1/2) 2^(z/2) Gamma((z+1)/2)."""
    zz = np.asarray(z, dtype=complex)
    if np.any(zz.real <= -1.0):
        warnings.warn(f"G evaluated at Re z <= -1 ({z!r}); value is a continuation",
                      AnalyticContinuationWarning, stacklevel=2)
    res = np.exp(-0.5 * _LOG_PI + 0.5 * zz * _LOG2 + np.asarray(log_gamma((zz + 1.0) / 2.0)))
    return _out(z, res)


def G_duplicated(z):
    """The duplication-formula form 2^(-z/2) * 2 Gamma(z) / Gamma(z/2) of ``G``.

    Kept separate as an independent cross-check; it has spurious 0/0 points at
    z = 0, -2, -4, ... where ``PoleError`` is raised.
    """
    zz = np.asarray(z, dtype=complex)
    res = np.exp(-0.5 * zz * _LOG2 + _LOG2 + np.asarray(log_gamma(zz)) - np.asarray(log_gamma(zz / 2.0)))
    return _out(z, res)


def duplication_residual(z):
    """|Gamma(z) - 2^(z-1) pi^(-1/2) Gamma(z/2) Gamma((z+1)/2)| / |Gamma(z)|."""
    zz = np.asarray(z, dtype=complex)
    lhs = np.asarray(log_gamma(zz))
    rhs = ((zz - 1.0) * _LOG2 - 0.5 * _LOG_PI
           + np.asarray(log_gamma(zz / 2.0)) + np.asarray(log_gamma((zz + 1.0) / 2.0)))
    # |e^a - e^b| / |e^a| = |1 - e^(b-a)|
    res = np.abs(-np.expm1(rhs - lhs))
    return float(res) if np.ndim(z) == 0 else res


def phi(p: float, z):
    """E[phi_p^z] for the positive p-stable law with Laplace transform exp(-t^p).

    Written as Gamma(1 - z/p) / Gamma(1 - z), which equals
    Gamma(-z/p) / (p Gamma(-z)) and has no 0/0 at z = 0.  ``p = 1`` is the
    degenerate law at 1, so the result is identically 1.
    """
    if not 0.0 < p <= 1.0:
        raise DomainError(f"phi: p={p} not in (0, 1]")
    zz = np.asarray(z, dtype=complex)
    if p == 1.0:
        return _out(z, np.ones_like(zz))
    if np.any(zz.real >= p):
        raise DomainError(f"phi: need Re z < p={p}, got {z!r}")
    res = np.exp(np.asarray(log_gamma(1.0 - zz / p)) - np.asarray(log_gamma(1.0 - zz)))
    return _out(z, res)


def psi(p: float, z):
    """E|psi_p|^z for the symmetric p-stable law exp(-|t|^p): 2^(z/2) Phi_{p/2}(z/2) G(z)."""
    if not 0.0 < p <= 2.0:
        raise DomainError(f"psi: p={p} not in (0, 2]")
    zz = np.asarray(z, dtype=complex)
    upper = math.inf if p == 2.0 else p
    if np.any((zz.real <= -1.0) | (zz.real >= upper)):
        raise DomainError(f"psi: need -1 < Re z < {p}, got {z!r}")
    res = np.exp(0.5 * zz * _LOG2) * np.asarray(phi(p / 2.0, zz / 2.0)) * np.asarray(G(zz))
    return _out(z, res)


def gaussian_moment() -> MomentFunction:
    return MomentFunction(G, AnalyticStrip(-1.0, math.inf))


def positive_stable_moment(p: float) -> MomentFunction:
    upper = math.inf if p == 1.0 else p
    return MomentFunction(lambda z: phi(p, z), AnalyticStrip(-math.inf, upper), removable_points=(0.0,))


def symmetric_stable_moment(p: float) -> MomentFunction:
    upper = math.inf if p == 2.0 else p
    return MomentFunction(lambda z: psi(p, z), AnalyticStrip(-1.0, upper))
