"""Normalized absolute norms on the plane and their two-variable transforms.

``F_N(w, z) = int_0^inf t^(-z-1) N(1,t)^(w+z) dt`` and its regularized
version ``F~_N`` (the l_inf part subtracted) are evaluated in closed form for
l_q and l_inf and by double-exponential quadrature for custom norms.
``M_{p,N}(z) = F_N(p - z, z)`` is the Mellin transform of ``t -> N(1,t)^p``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DomainError, ParamError, QuadratureError
from .quadrature import de_quad, nodes
from .specfun import beta

CLOSED_FORM = "closed_form"
QUADRATURE = "quadrature"
REGULARIZED = "regularized_continuation"


@dataclass(frozen=True)
class TransformValue:
    value: complex
    method: str
    abs_error_estimate: float

    def __post_init__(self):
        if not self.abs_error_estimate >= 0:
            raise ValueError("abs_error_estimate must be >= 0")

    def __complex__(self):
        return complex(self.value)


class AbsoluteNorm:
    """Normalized absolute norm N on R^2 with smoothness certificates.

    ``r``/``C`` certify ``N(1,t)^r <= 1 + C t^r`` and ``s``/``C2`` certify
    ``N(t,1)^s <= 1 + C2 t^s`` for 0 < t <= 1.
    """

    name = "abstract"
    # True where log_one_t is accurate relative to log N(1,t) - log max(1,t)
    accurate_log = False
    r: float
    s: float
    C: float
    C2: float

    def __call__(self, a, b):
        a = np.abs(np.asarray(a, dtype=float))
        b = np.abs(np.asarray(b, dtype=float))
        big = np.maximum(a, b)
        with np.errstate(divide="ignore", invalid="ignore"):
            lo = np.where(big > 0, np.minimum(a, b) / np.where(big > 0, big, 1.0), 0.0)
            u = np.where(a >= b, 1.0, lo)
            v = np.where(a >= b, lo, 1.0)
            out = big * self._unit(u, v)
        res = np.where(big > 0, out, 0.0)
        return float(res) if res.ndim == 0 else res

    def _unit(self, u, v):
        """N(u, v) for max(u, v) == 1."""
        raise NotImplementedError

    def log_one_t(self, logt: np.ndarray) -> np.ndarray:
        """log N(1, t) computed from log t without overflow."""
        logt = np.asarray(logt, dtype=float)
        small = logt <= 0
        t_lo = np.exp(np.minimum(logt, 0.0))
        t_hi = np.exp(-np.maximum(logt, 0.0))
        lo = np.log(self._unit(np.ones_like(t_lo), t_lo))
        hi = np.maximum(logt, 0.0) + np.log(self._unit(t_hi, np.ones_like(t_hi)))
        return np.where(small, lo, hi)

    @property
    def symmetric(self) -> bool:
        return False

    def swapped(self) -> "AbsoluteNorm":
        return SwappedNorm(self)

    def descriptor(self) -> str:
        return self.name

    def __repr__(self):
        return f"<{type(self).__name__} {self.descriptor()}>"


class LqNorm(AbsoluteNorm):
    accurate_log = True

    def __init__(self, q: float):
        if not 1.0 <= q < math.inf:
            raise DomainError(f"l_q norm needs 1 <= q < inf, got {q}")
        self.q = float(q)
        self.r = self.s = self.q
        self.C = self.C2 = 1.0
        self.name = f"lq:{q:g}"

    def _unit(self, u, v):
        q = self.q
        return (u ** q + v ** q) ** (1.0 / q)

    def log_one_t(self, logt):
        logt = np.asarray(logt, dtype=float)
        q = self.q
        return np.maximum(logt, 0.0) + np.log1p(np.exp(-q * np.abs(logt))) / q

    @property
    def symmetric(self):
        return True

    def __eq__(self, other):
        return isinstance(other, LqNorm) and other.q == self.q

    def __hash__(self):
        return hash(("lq", self.q))


class LinfNorm(AbsoluteNorm):
    accurate_log = True
    name = "linf"
    r = s = math.inf
    C = C2 = 1.0

    def _unit(self, u, v):
        return np.maximum(u, v)

    def log_one_t(self, logt):
        return np.maximum(np.asarray(logt, dtype=float), 0.0)

    @property
    def symmetric(self):
        return True

    def __eq__(self, other):
        return isinstance(other, LinfNorm)

    def __hash__(self):
        return hash("linf")


class CustomNorm(AbsoluteNorm):
    """User norm ``evaluator(a, b)`` (vectorized, for a, b >= 0) with certified exponents."""

    def __init__(self, name: str, evaluator: Callable, r: float, s: float, C: float, C2: float,
                 symmetric: bool = False):
        if not (1.0 <= r < math.inf and 1.0 <= s < math.inf and C > 0 and C2 > 0):
            raise DomainError("custom norm needs 1 <= r, s < inf and C, C' > 0")
        self.name = f"custom:{name}"
        self.evaluator = evaluator
        self.r, self.s, self.C, self.C2 = float(r), float(s), float(C), float(C2)
        self._symmetric = symmetric

    def _unit(self, u, v):
        return np.asarray(self.evaluator(u, v), dtype=float)

    @property
    def symmetric(self):
        return self._symmetric


class SwappedNorm(AbsoluteNorm):
    """N'(s, t) = N(t, s)."""

    def __init__(self, base: AbsoluteNorm):
        self.base = base
        self.r, self.s, self.C, self.C2 = base.s, base.r, base.C2, base.C
        self.name = f"swap({base.descriptor()})"
        self.accurate_log = base.accurate_log

    def _unit(self, u, v):
        return self.base._unit(v, u)

    def log_one_t(self, logt):
        logt = np.asarray(logt, dtype=float)
        # N(t, 1) = t N(1, 1/t)
        return logt + self.base.log_one_t(-logt)

    @property
    def symmetric(self):
        return self.base.symmetric


CUSTOM_NORMS: dict[str, CustomNorm] = {}


def register_custom_norm(norm: CustomNorm) -> CustomNorm:
    CUSTOM_NORMS[norm.name.split(":", 1)[1]] = norm
    return norm


# average of l_1.5 and l_3; C = 0.86 bounds sup_t (N(1,t)^1.5 - 1)/t^1.5 ~ 0.8571
register_custom_norm(CustomNorm(
    "mix",
    lambda a, b: 0.5 * ((a ** 1.5 + b ** 1.5) ** (1 / 1.5) + (a ** 3 + b ** 3) ** (1 / 3)),
    r=1.5, s=1.5, C=0.86, C2=0.86, symmetric=True,
))


def parse_norm(text: str) -> AbsoluteNorm:
    """Parse "lq:<q>", "linf" or "custom:<name>"."""
    text = text.strip()
    if text == "linf":
        return LinfNorm()
    kind, _, arg = text.partition(":")
    if kind == "lq":
        try:
            return LqNorm(float(arg))
        except ValueError as exc:
            raise ParamError(f"bad norm descriptor {text!r}") from exc
    if kind == "custom":
        try:
            return CUSTOM_NORMS[arg]
        except KeyError:
            raise ParamError(f"unknown custom norm {arg!r}") from None
    raise ParamError(f"bad norm descriptor {text!r}")


def verify_norm(N: AbsoluteNorm, n_grid: int = 400, seed: int = 0) -> None:
    """Spot-check normalization, monotonicity and the smoothness certificates.

    Raises DomainError on the first violation.
    """
    if abs(N(1.0, 0.0) - 1.0) > 1e-12 or abs(N(0.0, 1.0) - 1.0) > 1e-12:
        raise DomainError(f"{N!r} is not normalized")
    rng = np.random.default_rng(seed)
    s, t = rng.uniform(0, 3, (2, n_grid))
    u, v = s * rng.uniform(0, 1, n_grid), t * rng.uniform(0, 1, n_grid)
    if np.any(N(u, v) > N(s, t) * (1 + 1e-12)):
        raise DomainError(f"{N!r} is not monotone")
    tt = np.logspace(-8, 0, n_grid)
    if math.isfinite(N.r) and np.any(N(1.0, tt) ** N.r > (1 + N.C * tt ** N.r) * (1 + 1e-12)):
        raise DomainError(f"{N!r} violates N(1,t)^r <= 1 + C t^r")
    if math.isfinite(N.s) and np.any(N(tt, 1.0) ** N.s > (1 + N.C2 * tt ** N.s) * (1 + 1e-12)):
        raise DomainError(f"{N!r} violates N(t,1)^s <= 1 + C' t^s")


def norm_eval(N: AbsoluteNorm, a, b):
    return N(a, b)


def _near(x: complex, y: float = 0.0) -> bool:
    return abs(complex(x) - y) < 1e-12


def _quad(fun, tol):
    res = de_quad(fun, domain="half", tol=tol, rel_tol=tol, strict=False)
    if not res.error <= max(tol, tol * abs(res.value)):
        raise QuadratureError(f"F_N quadrature error {res.error:.2e} exceeds tolerance {tol:.1e}")
    return res


def F_N_direct(N: AbsoluteNorm, w, z, tol: float = 1e-10) -> TransformValue:
    """F_N(w, z) by quadrature of its defining integral (Re w, Re z < 0)."""
    w, z = complex(w), complex(z)
    if not (w.real < 0 and z.real < 0):
        raise DomainError(f"direct F_N needs Re w, Re z < 0, got w={w}, z={z}")

    def integrand(t, logt, gap):
        return np.exp((-z - 1.0) * logt + (w + z) * N.log_one_t(logt))

    res = _quad(integrand, tol)
    return TransformValue(complex(res.value), QUADRATURE, res.error)


def F_N_reg(N: AbsoluteNorm, w, z, tol: float = 1e-10) -> TransformValue:
    """Regularized transform int t^(-z-1) (N(1,t)^(w+z) - max(1,t)^(w+z)) dt.

    Analytic on Re w < s, Re z < r; equals F_N + 1/w + 1/z.
    """
    w, z = complex(w), complex(z)
    if not (w.real < N.s and z.real < N.r):
        raise DomainError(f"F~_N needs Re w < s={N.s}, Re z < r={N.r}; got w={w}, z={z}")
    if isinstance(N, LinfNorm):
        return TransformValue(0j, CLOSED_FORM, 0.0)
    lam = w + z

    def integrand(t, logt, gap):
        logmax = np.maximum(logt, 0.0)
        # combine in log space: t^(-z-1) alone overflows near t = 0
        em1 = np.expm1(lam * (N.log_one_t(logt) - logmax)).astype(complex)
        return np.exp((-z - 1.0) * logt + lam * logmax + np.log(em1))

    res = _quad(integrand, tol)
    err = res.error
    if not N.accurate_log:
        err += _rounding_floor(N, lam, z)
    return TransformValue(complex(res.value), QUADRATURE, err)


def _rounding_floor(N: AbsoluteNorm, lam: complex, z: complex) -> float:
    """Size of the cancellation noise in N(1,t)^lam - max(1,t)^lam.

    A black-box norm gives log N(1,t) - log max(1,t) only to ~eps absolute,
    which matters when max(1,t)^lam grows faster than the difference decays.
    """
    t, logt, _, w = nodes("half", level=5)
    logmax = np.maximum(logt, 0.0)
    live = np.expm1(lam * (N.log_one_t(logt) - logmax)) != 0
    with np.errstate(over="ignore", invalid="ignore"):
        scale = np.abs(w * np.exp((-z - 1.0) * logt + lam * logmax))
    return float(4 * np.finfo(float).eps * abs(lam) * np.sum(scale[live & np.isfinite(scale)]))


def F_q_closed(q: float, w, z):
    """(1/q) B(-w/q, -z/q), vectorized."""
    return np.asarray(beta(-np.asarray(w) / q, -np.asarray(z) / q)) / q


def F_N(N: AbsoluteNorm, w, z, tol: float = 1e-10) -> TransformValue:
    """F_N(w, z); closed form for l_q and l_inf, quadrature otherwise.

    Outside Re w, Re z < 0 the value is the continuation through F~_N, which
    requires Re w < s, Re z < r and w, z != 0.  Inside, whichever integral
    representation is further from its boundary is used.
    """
    w, z = complex(w), complex(z)
    direct = w.real < 0 and z.real < 0
    if not direct:
        if not (w.real < N.s and z.real < N.r):
            raise DomainError(f"F_N needs Re w < s={N.s}, Re z < r={N.r}; got w={w}, z={z}")
        if _near(w) or _near(z):
            raise DomainError("F_N has poles at w = 0 and z = 0")
    if isinstance(N, LqNorm):
        return TransformValue(complex(F_q_closed(N.q, w, z)), CLOSED_FORM, 0.0)
    if isinstance(N, LinfNorm):
        return TransformValue(-1.0 / z - 1.0 / w, CLOSED_FORM, 0.0)
    # near w = 0 or z = 0 the direct integrand decays too slowly for the
    # truncated node set, so use whichever representation has more room
    direct_margin = min(-w.real, -z.real)
    reg_margin = min(N.s - w.real, N.r - z.real)
    if direct and direct_margin >= reg_margin:
        return F_N_direct(N, w, z, tol)
    reg = F_N_reg(N, w, z, tol)
    return TransformValue(reg.value - 1.0 / w - 1.0 / z, REGULARIZED, reg.abs_error_estimate)


def M_pq_closed(p: float, q: float, z):
    """(1/q) B((z-p)/q, -z/q), vectorized."""
    z = np.asarray(z)
    return np.asarray(beta((z - p) / q, -z / q)) / q


def M_pN(p: float, N: AbsoluteNorm, z, tol: float = 1e-10) -> TransformValue:
    """Mellin transform of t -> N(1,t)^p, i.e. F_N(p - z, z).

    Needs p < r.  Admissible z: Re z < r, Re(p - z) < s, z not in {0, p}.
    """
    z = complex(z)
    if not p < N.r:
        raise DomainError(f"M_pN needs p < r={N.r}, got p={p}")
    if not (z.real < N.r and p - z.real < N.s):
        raise DomainError(f"M_pN: z={z} outside {p - N.s} < Re z < {N.r}")
    if _near(z) or _near(z, p):
        raise DomainError("M_pN has poles at z = 0 and z = p")
    if isinstance(N, LqNorm):
        return TransformValue(complex(M_pq_closed(p, N.q, z)), CLOSED_FORM, 0.0)
    if isinstance(N, LinfNorm):
        return TransformValue(p / (z * (z - p)), CLOSED_FORM, 0.0)
    return F_N(N, p - z, z, tol)


def _ratio_direct(p, N, z, tol):
    num = M_pN(p, N, z, tol)
    den = complex(M_pq_closed(p, 2.0, z))
    return num.value / den


def mellin_ratio(p: float, N: AbsoluteNorm, z, tol: float = 1e-10, step: float = 1e-3) -> complex:
    """M_{p,N}(z) / M_{p,2}(z) on p - min(s,2) < Re z < min(r,2).

    The points z = 0 and z = p are removable with value 1.  Elsewhere within
    1e-6 of them the value is obtained by Richardson extrapolation of
    symmetric averages at z +- step and z +- 2 step.
    """
    z = complex(z)
    lo, hi = p - min(N.s, 2.0), min(N.r, 2.0)
    if not lo < z.real < hi:
        raise DomainError(f"mellin_ratio: z={z} outside {lo} < Re z < {hi}")
    if isinstance(N, LqNorm) and N.q == 2.0:
        return 1.0 + 0j
    # both transforms have the same simple pole at 0 and at p, so the limit is 1
    if _near(z) or _near(z, p):
        return 1.0 + 0j
    if abs(z) < 1e-6 or abs(z - p) < 1e-6:
        def sym(h):
            return 0.5 * (_ratio_direct(p, N, z + h, tol) + _ratio_direct(p, N, z - h, tol))
        return (4.0 * sym(step) - sym(2 * step)) / 3.0
    return _ratio_direct(p, N, z, tol)


def mellin_ratio_direct_quadrature(p: float, N: AbsoluteNorm, z, tol: float = 1e-10) -> TransformValue:
    """Ratio with both transforms from their defining integrals (p < Re z < 0, p < 0)."""
    z = complex(z)
    if not p < z.real < 0:
        raise DomainError(f"direct ratio needs {p} < Re z < 0, got {z}")
    num = F_N_direct(N, p - z, z, tol)
    den = F_N_direct(LqNorm(2.0), p - z, z, tol)
    val = num.value / den.value
    err = abs(val) * (num.abs_error_estimate / abs(num.value) + den.abs_error_estimate / abs(den.value))
    return TransformValue(val, QUADRATURE, err)


def second_derivative_sweep(p: float, N: AbsoluteNorm, rs) -> dict[str, np.ndarray]:
    """|M_{p,N}(r)/M_{p,2}(r)|, M_{p,2}(r) and (2-r)M_{p,2}(r) along real r -> 2."""
    rs = np.asarray(rs, dtype=float)
    ratio = np.array([abs(mellin_ratio(p, N, r)) for r in rs])
    m2 = np.real(np.asarray(M_pq_closed(p, 2.0, rs.astype(complex))))
    return {"r": rs, "ratio": ratio, "m2": m2, "scaled_m2": (2.0 - rs) * m2}
