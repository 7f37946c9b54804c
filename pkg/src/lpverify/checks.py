"""Named verification procedures, each producing a CheckReport.

A check compares estimates against references.  Each comparison is turned
into a normalized discrepancy

    d = k |estimate - reference| / (k * stderr + det_tol)

with k = tol_sigma, so d <= tol_sigma exactly when the difference is within
k standard errors plus the deterministic tolerance.  For purely
deterministic comparisons this is k |diff| / det_tol.
"""
from __future__ import annotations

import json
import math
import time
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from . import absnorm, embed, mellin, specfun, stochastic
from .absnorm import LqNorm, parse_norm
from .errors import LpVerifyError, ParamError
from .quadrature import de_quad
from .specfun import G
from .stochastic import SampleStream

SCHEMA = 1
DEFAULT_TOL_SIGMA = 4.0
DEFAULT_QUAD_TOL = 1e-8


def _enc(v):
    if isinstance(v, complex):
        return [v.real, v.imag]
    if isinstance(v, float) and not math.isfinite(v):
        return None
    return v


def _dec_value(v):
    if isinstance(v, list):
        return complex(v[0], v[1])
    return v


@dataclass
class CheckSpec:
    name: str
    params: dict = field(default_factory=dict)
    samples: int | None = None
    tol_sigma: float = DEFAULT_TOL_SIGMA
    quad_tol: float = DEFAULT_QUAD_TOL
    seed: int = 0

    @classmethod
    def from_dict(cls, d: dict) -> "CheckSpec":
        unknown = set(d) - {"name", "params", "samples", "tol_sigma", "quad_tol", "seed"}
        if unknown or "name" not in d:
            raise ParamError(f"bad CheckSpec keys: {sorted(unknown) or 'missing name'}")
        return cls(d["name"], dict(d.get("params") or {}), d.get("samples"),
                   float(d.get("tol_sigma", DEFAULT_TOL_SIGMA)), float(d.get("quad_tol", DEFAULT_QUAD_TOL)),
                   int(d.get("seed", 0)))

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class Estimate:
    label: str
    value: complex | float
    stderr: float


@dataclass(frozen=True)
class Reference:
    label: str
    value: complex | float
    provenance: str  # closed_form | quadrature | mc


@dataclass
class CheckReport:
    name: str
    params: dict
    status: str
    estimates: list
    references: list
    max_discrepancy_sigma: float
    seed: int
    runtime_ms: float | None = None
    max_quad_error: float = 0.0
    notes: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "params": self.params,
            "status": self.status,
            "estimates": [[e.label, _enc(e.value), _enc(e.stderr)] for e in self.estimates],
            "references": [[r.label, _enc(r.value), r.provenance] for r in self.references],
            "max_discrepancy_sigma": _enc(self.max_discrepancy_sigma),
            "seed": self.seed,
            "runtime_ms": self.runtime_ms,
            "max_quad_error": _enc(self.max_quad_error),
            "notes": list(self.notes),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CheckReport":
        inf = lambda v: math.inf if v is None else v  # noqa: E731
        return cls(
            name=d["name"],
            params=d["params"],
            status=d["status"],
            estimates=[Estimate(a, _dec_value(b), inf(c)) for a, b, c in d["estimates"]],
            references=[Reference(a, _dec_value(b), c) for a, b, c in d["references"]],
            max_discrepancy_sigma=inf(d["max_discrepancy_sigma"]),
            seed=d["seed"],
            runtime_ms=d.get("runtime_ms"),
            max_quad_error=inf(d.get("max_quad_error", 0.0)),
            notes=list(d.get("notes", [])),
        )


def reports_to_json(reports: list[CheckReport]) -> str:
    body = {"schema": SCHEMA, "reports": [r.to_dict() for r in sorted(reports, key=lambda r: r.name)]}
    return json.dumps(body, indent=2, sort_keys=False, allow_nan=False) + "\n"


def reports_from_json(text: str) -> list[CheckReport]:
    body = json.loads(text)
    if body.get("schema") != SCHEMA:
        raise ParamError(f"unsupported report schema {body.get('schema')!r}")
    return [CheckReport.from_dict(d) for d in body["reports"]]


class _Recorder:
    """Collects estimates, references and discrepancies while a check runs."""

    def __init__(self, spec: CheckSpec):
        self.k = spec.tol_sigma
        self.quad_tol = spec.quad_tol
        self.estimates: list[Estimate] = []
        self.references: list[Reference] = []
        self.notes: list[str] = []
        self.max_d = 0.0
        self.max_quad = 0.0

    def _d(self, diff: float, stderr: float, det_tol: float) -> float:
        denom = self.k * stderr + det_tol
        if denom == 0.0:
            return 0.0 if diff == 0.0 else math.inf
        return self.k * diff / denom

    def compare(self, label, value, stderr, ref, provenance="closed_form", det_tol=0.0, ref_stderr=0.0):
        value = _clean(value)
        ref = _clean(ref)
        self.estimates.append(Estimate(label, value, float(stderr)))
        self.references.append(Reference(label, ref, provenance))
        diff = abs(complex(value) - complex(ref))
        d = self._d(diff, math.hypot(stderr, ref_stderr), det_tol)
        self.max_d = max(self.max_d, d)
        return d

    def mc(self, label, est: stochastic.MCEstimate, ref, provenance="closed_form", det_tol=0.0):
        return self.compare(label, est.mean, est.stderr, ref, provenance, det_tol)

    def mc_pair(self, label, lhs: stochastic.MCEstimate, rhs: stochastic.MCEstimate, det_tol=0.0):
        """Two independent Monte Carlo estimates of the same quantity."""
        self.estimates.append(Estimate(label + ":rhs", _clean(rhs.mean), float(rhs.stderr)))
        return self.compare(label, lhs.mean, lhs.stderr, rhs.mean, "mc", det_tol, rhs.stderr)

    def quad(self, err: float):
        self.max_quad = max(self.max_quad, float(err))

    def require(self, label: str, ok: bool):
        if not ok:
            self.notes.append(f"condition failed: {label}")
            self.max_d = math.inf

    def note(self, text: str):
        self.notes.append(text)


def _clean(v):
    v = complex(v)
    return v.real if v.imag == 0.0 else v


def _z(v):
    """Parameter value -> number (strings like "0.25+0.5j" allowed)."""
    if isinstance(v, str):
        return _clean(complex(v.replace(" ", "")))
    if isinstance(v, (list, tuple)) and len(v) == 2:
        return _clean(complex(v[0], v[1]))
    return v


# --- checks ---------------------------------------------------------------

def check_duplication(spec, rec, stream, n, p):
    re = np.linspace(p["re_min"], p["re_max"], p["grid"])
    im = np.linspace(-p["im_max"], p["im_max"], p["grid"])
    z = (re[:, None] + 1j * im[None, :]).ravel()
    res = specfun.duplication_residual(z)
    worst = int(np.argmax(res))
    rec.compare("max duplication residual", float(res[worst]), 0.0, 0.0, "closed_form", p["tol"])
    rec.note(f"worst grid point {_clean(z[worst])}")
    for zz in (5.0, 0.5, complex(3.7, 1.2)):
        rec.compare(f"duplication residual z={zz}", specfun.duplication_residual(zz), 0.0, 0.0,
                    "closed_form", p["tol"])
    # both G formulas, relative difference on the same grid (where Gamma(z/2) is finite)
    g1, g2 = np.asarray(G(z)), np.asarray(specfun.G_duplicated(z))
    rel = np.abs(g1 - g2) / np.abs(g1)
    rec.compare("max relative |G - G_duplicated|", float(rel.max()), 0.0, 0.0, "closed_form", p["tol"])


def check_moment_samplers(spec, rec, stream, n, p):
    laws = [
        ("gaussian", stochastic.Gaussian(), p["gaussian_z"]),
        (f"positive_stable({p['positive_p']})", stochastic.PositiveStable(p["positive_p"]), p["positive_z"]),
        (f"symmetric_stable({p['symmetric_p']})", stochastic.SymmetricStable(p["symmetric_p"]), p["symmetric_z"]),
    ]
    for name, law, zs in laws:
        rv = stochastic.ProductRV((stochastic.Factor(law),))
        zs = [_z(z) for z in zs]
        ests = stochastic.moment_estimates(rv, zs, n, stream.child(name))
        for z, e in zip(zs, ests):
            rec.mc(f"E|{name}|^{z}", e, law.moment(z))


def check_gaussian_ratio_lemma(spec, rec, stream, n, p):
    for i, (m, w, z) in enumerate(p["triples"]):
        m = int(m)
        w, z = _z(w), _z(z)

        def sampler(s, size, m=m, w=w, z=z):
            g = s.generator().standard_normal((size, m))
            r2 = np.sum(g * g, axis=1)
            return stochastic._power(g[:, 0], w) * np.exp(0.5 * z * np.log(r2)), None

        est = stochastic.mc_expectation(sampler, n, stream.child(i))[0]
        ref = G(w) * G(w + z + m - 1) / G(w + m - 1)
        rec.mc(f"E|g1|^w |g|^z (m={m}, w={w}, z={z})", est, ref)


def _symmetrized(w, z, tol):
    lam = w + z

    def f(t, logt, gap):
        return 0.5 * np.exp((-z - 1.0) * logt) * (np.exp(lam * np.log1p(t)) + np.exp(lam * np.log(np.abs(gap))))

    return de_quad(f, domain="half", tol=tol, rel_tol=tol, max_level=10)


def check_symmetrize(spec, rec, stream, n, p):
    for w, z in p["points"]:
        w, z = _z(w), _z(z)
        res = _symmetrized(w, z, 0.1 * spec.quad_tol)
        rec.quad(res.error)
        ref = G(w + z) * absnorm.F_q_closed(2.0, w, z) / (G(w) * G(z))
        tol = p["near_boundary_tol"] if complex(w + z).real < -0.9 else p["tol"]
        rec.compare(f"Q({w}, {z})", res.value, 0.0, complex(ref), "closed_form", tol)
        swapped = _symmetrized(z, w, 0.1 * spec.quad_tol)
        rec.quad(swapped.error)
        rec.compare(f"Q({z}, {w}) vs Q({w}, {z})", swapped.value, 0.0, res.value, "quadrature", tol)


_PAIRS = {
    "constants": lambda gen, m: (np.full(m, 1.5), np.full(m, 0.7)),
    "independent": lambda gen, m: tuple(np.abs(gen.standard_normal((2, m)))),
    "dependent": lambda gen, m: (lambda g: (np.abs(g), np.abs(g + 1.0)))(gen.standard_normal(m)),
}


def check_independent_lemma(spec, rec, stream, n, p):
    for variant, (w, z) in (("0", p["point0"]), ("1", p["point1"])):
        w, z = float(w), float(z)
        lam = w + z
        for pair in p["pairs"]:
            make = _PAIRS[pair]

            def draw(s, m, make=make):
                f, g = make(s.generator(), m)
                return np.stack([f, g], axis=1), None

            if variant == "0":
                def family(t, x):
                    f, g = x[..., 0], x[..., 1]
                    return (f * f + t * t * g * g) ** (lam / 2.0)
                factor = absnorm.F_q_closed(2.0, w, z)
            else:
                def family(t, x):
                    f, g = x[..., 0], x[..., 1]
                    return 0.5 * (np.abs(f + t * g) ** lam + np.abs(f - t * g) ** lam)
                factor = G(lam) * absnorm.F_q_closed(2.0, w, z) / (G(w) * G(z))
            label = f"({variant}) {pair} w={w} z={z}"
            # random shifts: for constant pairs |f - tg| is singular at the same t in every sample
            lhs = mellin.mellin_of_expectation(family, draw, z, n, stream.child(("lhs", variant, pair)),
                                               level=p["level"], random_shift=True)

            def mixed(s, m, make=make):
                f, g = make(s.generator(), m)
                return f ** w * g ** z, None

            rhs = stochastic.mc_expectation(mixed, n, stream.child(("rhs", variant, pair)))[0]
            ref = complex(factor) * rhs.mean
            rec.compare(label, lhs.value, lhs.stderr, ref, "mc", p["quad_allowance"] + lhs.quad_error,
                        abs(complex(factor)) * rhs.stderr)


def _mellinh_family(p_exp: float):
    def S(v):
        v = np.abs(v)
        with np.errstate(divide="ignore", invalid="ignore"):
            direct = 0.5 * (np.abs(1 + v) ** p_exp + np.abs(1 - v) ** p_exp) - 1.0
        series = 0.5 * p_exp * (p_exp - 1) * v * v * (1 + (p_exp - 2) * (p_exp - 3) / 12 * v * v)
        return np.where(v < 1e-3, series, direct)

    def family(t, x):
        # symmetrized |1+th|^p - max(1,t)^p minus the mean-zero term (|h|^p - H(p)) t^p 1{t>1},
        # written without cancellation: S(th) for t <= 1, |th|^p S(1/(th)) beyond
        tx = t * np.abs(x)
        with np.errstate(divide="ignore", invalid="ignore"):
            big = tx ** p_exp * S(1.0 / tx)
        return np.where(t <= 1.0, S(tx), big)

    return family


def mellinh_rhs(p_exp, H, z):
    return G(p_exp) * absnorm.M_pq_closed(p_exp, 2.0, z) * H(z) / (G(p_exp - z) * G(z)) + p_exp / (z * (p_exp - z))


def check_mellinh(spec, rec, stream, n, p):
    pe, q, r = p["p"], p["q"], p["r"]
    h = stochastic.build_h(1, pe, q, r)
    H = stochastic.H_moment(1, pe, q, r)
    Hp = H(pe).real
    zs = [_z(z) for z in p["z_points"]]
    res = mellin.mellin_of_expectations(_mellinh_family(pe), h, zs, n, stream.child("h"), level=p["level"])
    # (H(p) - 1) t^p 1{t>1} is left out of the family; its transform is (H(p)-1)/(z-p)
    for z, rr in zip(zs, res):
        val = rr.value + (Hp - 1.0) / (z - pe)
        rec.compare(f"Mellin z={z}", val, rr.stderr, complex(mellinh_rhs(pe, H, z)), "closed_form",
                    p["quad_allowance"] + rr.quad_error)
    if any(0 < complex(z).real < pe for z in zs):
        rec.note("z in (0, p) also exercises the endpoint variant of the transform identity")
    # degenerate h = 2 from the existence construction at exponent 1
    pd, zd = p["degenerate_p"], _z(p["degenerate_z"])
    dh = stochastic.build_existence_h(1.0)

    def fam_d(t, x):
        # |1+tx|^p - max(1,t)^p for x > 0, free of cancellation at both ends
        tt = np.broadcast_to(t, np.broadcast(t, x).shape)
        small = np.expm1(pd * np.log1p(tt * x))
        large = np.exp(pd * np.log(tt)) * np.expm1(pd * np.log(x + 1.0 / tt))
        return np.where(tt <= 1.0, small, large)

    rd = mellin.mellin_of_expectation(fam_d, dh, zd, 1, stream.child("degenerate"), level=p["level"])
    ref = 2.0 ** zd * absnorm.M_pq_closed(pd, 1.0, zd) + pd / (zd * (pd - zd))
    rec.compare(f"h=2 shift, p={pd}, z={zd}", rd.value, 0.0, complex(ref), "closed_form",
                p["quad_allowance"] + rd.quad_error)


def check_absolute_prop(spec, rec, stream, n, p):
    x = np.asarray(p["x"], dtype=float)
    y = np.asarray(p["y"], dtype=float)
    for desc in p["norms"]:
        N = parse_norm(desc)
        space = embed.DirectSumSpace(len(x), len(y), p["q"], N)
        nx, ny = space.norm_x(x), space.norm_y(y)
        for w, z in p["points"]:
            w, z = _z(w), _z(z)
            for scale in (1.0, 2.0):
                xx = scale * x
                # t = t0 s puts a possible kink of N (at |x| = t|y|) on the split point s = 1
                t0 = scale * nx / ny

                def f(s, logs, gap, xx=xx, w=w, z=z, t0=t0):
                    v = np.concatenate([np.broadcast_to(xx, (s.size, xx.size)), (t0 * s)[:, None] * y[None, :]],
                                       axis=1)
                    return np.exp((-z - 1.0) * logs + (w + z) * np.log(space.norm(v)))

                res = de_quad(f, domain="half", tol=0.1 * spec.quad_tol, rel_tol=0.1 * spec.quad_tol,
                              max_level=10)
                rec.quad(res.error)
                lhs = complex(res.value) * t0 ** (-z)
                F = absnorm.F_N(N, w, z, tol=spec.quad_tol * 0.1)
                rec.quad(F.abs_error_estimate)
                ref = F.value * (scale * nx) ** w * ny ** z
                rec.compare(f"{desc} w={w} z={z} |x|x{scale:g}", lhs, 0.0, ref, F.method, p["tol"])


def check_p_neg_prop(spec, rec, stream, n, p):
    pe, m, q, nn = p["p"], int(p["m"]), p["q"], int(p["n"])
    zs = [float(z) for z in p["z_points"]]
    basis = np.eye(m + nn)
    gx = embed.GaussianProcessSpec(np.eye(m))
    gy = embed.GaussianProcessSpec(np.eye(nn))
    # Gaussian sides do not depend on r: estimate once per z
    ex = [embed.gaussian_norm_moment(gx, lambda v: np.sqrt(np.sum(v * v, axis=-1)), pe - z, n,
                                     stream.child(("xi", z))) for z in zs]
    ey = [embed.gaussian_norm_moment(gy, lambda v: np.sum(np.abs(v) ** q, axis=-1) ** (1 / q), z, n,
                                     stream.child(("eta", z))) for z in zs]
    for r in p["rs"]:
        model = embed.case2_model(pe, m, q, float(r), nn)

        def sampler(s, size, model=model):
            a, b, w = model.components(basis, s, size)
            sx = np.sum(a[:, :m] ** 2, axis=1)
            sy = np.sum(b[:, m:] ** 2, axis=1)
            cols = [model.theta ** pe * sx ** ((pe - z) / 2) * sy ** (z / 2) for z in zs]
            return np.stack(cols, axis=1), w

        lhs = stochastic.mc_expectation(sampler, n, stream.child(("lhs", r)))
        N = LqNorm(float(r))
        for z, L, X, Y in zip(zs, lhs, ex, ey):
            ratio = absnorm.mellin_ratio(pe, N, z).real
            ref = ratio * X.mean * Y.mean
            ref_se = abs(ratio) * math.hypot(X.stderr * Y.mean, Y.stderr * X.mean)
            rec.compare(f"r={r} z={z}", L.mean, L.stderr, ref, "mc", 0.0, ref_se)
    if any(abs(z) < 0.05 for z in zs):
        rec.note("z near 0: both sides approach E||xi||^p")


def check_p_pos_prop(spec, rec, stream, n, p):
    for i, (pe, r) in enumerate(p["cases"]):
        pe, r = float(pe), float(r)
        points = [tuple(float(v) for v in wz) for wz in p["points"]]

        def sampler(s, size, pe=pe, r=r):
            gen = s.generator()
            sub = np.ones(size) if pe == r else stochastic._positive_stable(gen, pe / r, size)
            eta = stochastic._symmetric_stable(gen, r, (size, 2))
            scale = sub ** (1.0 / r)
            tx, ty = scale * eta[:, 0], scale * eta[:, 1]
            return np.stack([np.abs(tx) ** w * np.abs(ty) ** z for w, z in points], axis=1), None

        ests = stochastic.mc_expectation(sampler, n, stream.child(i))
        N = LqNorm(r)
        for (w, z), e in zip(points, ests):
            ref = (2.0 ** ((w + z) / 2) * absnorm.F_N(N, w, z).value * G(w) * G(z)
                   * specfun.phi(pe / 2, (w + z) / 2) / absnorm.F_q_closed(2.0, w, z))
            rec.mc(f"p={pe} r={r} w={w} z={z}", e, complex(ref))


def check_main_example_pos(spec, rec, stream, n, p):
    pe, q, r = p["p"], p["q"], p["r"]
    ts = [float(t) for t in p["ts"]]
    ests = embed.case1_lhs(pe, q, r, ts, n, stream)
    for t, e in zip(ts, ests):
        rec.mc(f"t={t}", e, float(embed.case1_rhs(pe, r, t)))
    # a 2^(z/2) factor in E|h|^z would mean sqrt(2) h; the largest t tells the two apart
    t_big, e_big = max(zip(ts, ests), key=lambda te: te[0])
    alt = float(embed.case1_rhs(pe, r, math.sqrt(2.0) * t_big))
    rec.note(f"h normalized so that E|h|^p = 1; with an extra 2^(z/2) in E|h|^z the t={t_big} value "
             f"would be {alt:.6g}, {abs(e_big.mean - alt) / e_big.stderr:.0f} sigma from the estimate")
    zero = embed.case1_lhs(pe, q, r, 0.0, min(n, 1000), stream.child("t0"))
    rec.compare("t=0", zero.mean, zero.stderr, 1.0, "closed_form", 1e-15)


def check_main_example_neg(spec, rec, stream, n, p):
    model = embed.case2_model(p["p"], int(p["m"]), p["q"], p["r"], int(p["n"]))
    gspec = embed.GaussianProcessSpec.identity(model.space.dim)
    rec.compare("theta^p G(m-1) - G(p+m-1)", model.theta ** model.p * G(model.space.m - 1.0).real,
                0.0, G(model.p + model.space.m - 1.0).real, "closed_form", 1e-10)
    res = embed.case2_identity(model, gspec, [float(t) for t in p["ts"]], n, stream)
    for r in res:
        rec.mc_pair(f"t={r.t}", r.lhs, r.rhs)
        if r.clip_rate_lhs or r.clip_rate_rhs:
            rec.note(f"t={r.t}: clipped fraction lhs {r.clip_rate_lhs:.2e}, rhs {r.clip_rate_rhs:.2e}")


def check_second_derivative(spec, rec, stream, n, p):
    pe = p["p"]
    rs = [float(r) for r in p["rs"]]
    sweep = absnorm.second_derivative_sweep(pe, parse_norm(p["norm"]), rs)
    ratio = sweep["ratio"]
    for r, v in zip(rs, ratio):
        rec.estimates.append(Estimate(f"|ratio| r={r}", float(v), 0.0))
    rec.require("ratio strictly decreasing", bool(np.all(np.diff(ratio) < 0)))
    rec.require(f"final/initial < {p['max_final_ratio']}", ratio[-1] / ratio[0] < p["max_final_ratio"])
    control = absnorm.second_derivative_sweep(pe, LqNorm(2.0), rs)["ratio"]
    for r, v in zip(rs, control):
        rec.compare(f"l2 control r={r}", float(v), 0.0, 1.0, "closed_form", 1e-10)
    scaled = sweep["scaled_m2"]
    for r, v in zip(rs, scaled):
        rec.estimates.append(Estimate(f"(2-r) M_p2(r) r={r}", float(v), 0.0))
    rec.require("(2-r) M_p2(r) bounded", bool(np.all(np.abs(scaled) <= p["scaled_bound"])))
    rec.require("M_p2(r) diverges", abs(sweep["m2"][-1]) > 100 * abs(sweep["m2"][0]))


def check_continuation(spec, rec, stream, n, p):
    pe = p["p"]
    # inner tolerance below quad_tol: de_quad may stop on a relative criterion
    qt = 0.1 * spec.quad_tol
    gen = stream.generator()
    for desc in p["norms"]:
        N = parse_norm(desc)
        pts = gen.uniform(pe + 0.1, -0.1, p["n_points"]) + 1j * gen.uniform(-1.0, 1.0, p["n_points"])
        for z in pts:
            z = complex(round(z.real, 6), round(z.imag, 6))
            reg = absnorm.F_N_reg(N, pe - z, z, tol=qt)
            rec.quad(reg.abs_error_estimate)
            via_reg = (reg.value - 1.0 / (pe - z) - 1.0 / z) / complex(absnorm.M_pq_closed(pe, 2.0, z))
            direct = absnorm.mellin_ratio_direct_quadrature(pe, N, z, tol=qt)
            rec.quad(direct.abs_error_estimate)
            rec.compare(f"{desc} z={z}", via_reg, 0.0, direct.value, "quadrature", p["tol"])
        at0 = absnorm.mellin_ratio(pe, N, 0.0)
        rec.compare(f"{desc} removable z=0", at0, 0.0, 1.0, "closed_form", p["tol"])
        atp = absnorm.mellin_ratio(pe, N, pe)
        rec.compare(f"{desc} removable z=p", atp, 0.0, 1.0, "closed_form", p["tol"])
    for desc in p["beta_norms"]:
        N = parse_norm(desc)
        for z in p["continued_z"]:
            z = _z(z)
            reg = absnorm.F_N_reg(N, pe - z, z, tol=qt)
            rec.quad(reg.abs_error_estimate)
            via_reg = (reg.value - 1.0 / (pe - z) - 1.0 / z) / complex(absnorm.M_pq_closed(pe, 2.0, z))
            closed = absnorm.mellin_ratio(pe, N, z)
            rec.compare(f"{desc} continued z={z}", via_reg, 0.0, closed, "closed_form", p["tol"])


@dataclass(frozen=True)
class CheckInfo:
    name: str
    func: Callable
    defaults: dict
    samples: int
    summary: str


REGISTRY: dict[str, CheckInfo] = {}


def _register(name, func, defaults, samples, summary):
    REGISTRY[name] = CheckInfo(name, func, defaults, samples, summary)


_register("check-duplication", check_duplication,
          {"re_min": 0.1, "re_max": 10.0, "im_max": 10.0, "grid": 10, "tol": 1e-10}, 0,
          "Legendre duplication residual and the two Gaussian-moment formulas")
_register("check-moment-samplers", check_moment_samplers,
          {"gaussian_z": [1.0, 0.5, -0.5], "positive_p": 0.5, "positive_z": [-1.0, 0.25, -2.0],
           "symmetric_p": 1.0, "symmetric_z": [0.5, -0.5, 0.25]}, 10**6,
          "sampler moments against G, Phi_p, Psi_p")
_register("check-gaussian-ratio-lemma", check_gaussian_ratio_lemma,
          {"triples": [[2, 0.0, 2.0], [2, 1.0, -1.0], [3, 0.5, -0.5], [4, -0.5, "-1+0.5j"]]}, 10**6,
          "E|g1|^w |g|^z = G(w) G(w+z+m-1) / G(w+m-1)")
_register("check-symmetrize", check_symmetrize,
          {"points": [[-0.3, -0.4], [-0.3, -0.3], [-0.45, -0.5], ["-0.2+0.3j", -0.35]],
           "tol": 1e-6, "near_boundary_tol": 1e-5}, 0,
          "symmetrized |1 +- t| transform against G(w+z) F_2(w,z) / (G(w) G(z))")
_register("check-independent-lemma", check_independent_lemma,
          {"point0": [-0.3, -0.4], "point1": [-0.2, -0.25],
           "pairs": ["constants", "independent", "dependent"], "level": 4, "quad_allowance": 1e-6}, 250_000,
          "nested transforms of (f^2 + t^2 g^2) and |f +- t g| against F_2 mixed moments")
_register("check-mellinh", check_mellinh,
          {"p": 0.5, "q": 1.5, "r": 2.0, "z_points": [-0.3, 0.25, "0.25+0.5j"], "level": 4,
           "quad_allowance": 1e-6, "degenerate_p": 0.5, "degenerate_z": 0.75}, 10**6,
          "Mellin transform of E|1+th|^p - max(1,t)^p")
_register("check-absolute-prop", check_absolute_prop,
          {"norms": ["lq:2", "linf", "lq:1.5", "custom:mix"], "q": 1.5, "x": [0.6, -0.8], "y": [1.0, 0.5],
           "points": [[-1.0, -1.0], [-0.3, -0.6], ["-0.5+0.3j", -0.4]], "tol": 1e-6}, 0,
          "int t^(-z-1) ||x+ty||^(w+z) dt = F_N(w,z) ||x||^w ||y||^z")
_register("check-p-neg-prop", check_p_neg_prop,
          {"p": -0.5, "m": 2, "q": 1.5, "n": 2, "rs": [2.0, 1.8], "z_points": [-0.25, -0.1, -0.4, -0.02]},
          10**6, "mixed moments of a Gaussian embedding of l_2^m (+)_r l_q^n")
_register("check-p-pos-prop", check_p_pos_prop,
          {"cases": [[0.8, 1.5], [0.5, 2.0]], "points": [[-0.3, -0.4], [-0.4, -0.3], [-0.35, -0.35]]}, 10**6,
          "mixed moments of a p-stable embedding of l_r^2")
_register("check-main-example-pos", check_main_example_pos,
          {"p": 0.5, "q": 1.5, "r": 2.0, "ts": [0.1, 0.5, 1.0, 2.0, 5.0, 10.0]}, 10**6,
          "E'|1+th|^p = (1+t^r)^(p/r)")
_register("check-main-example-neg", check_main_example_neg,
          {"p": -0.5, "m": 2, "q": 1.5, "r": 2.0, "n": 2, "ts": [0.5, 1.0, 2.0]}, 10**6,
          "Gaussian embedding identity for l_2^m (+)_r l_q^n, p < 0")
_register("check-second-derivative", check_second_derivative,
          {"p": -1.0, "norm": "lq:3", "rs": [1.5, 1.9, 1.99, 1.999], "max_final_ratio": 0.2,
           "scaled_bound": 1.0}, 0,
          "|M_{p,N}(r) / M_{p,2}(r)| -> 0 as r -> 2")
_register("check-continuation", check_continuation,
          {"p": -1.0, "norms": ["lq:1.5", "custom:mix"], "n_points": 10, "beta_norms": ["lq:1.5", "lq:3"],
           "continued_z": [1.2, "1.1+0.4j"], "tol": 1e-6}, 0,
          "regularized continuation of M_{p,N}/M_{p,2}")


def check_names() -> list[str]:
    return sorted(REGISTRY)


def _validate(info: CheckInfo, params: dict) -> dict:
    unknown = set(params) - set(info.defaults)
    if unknown:
        raise ParamError(f"{info.name}: unknown parameters {sorted(unknown)}")
    merged = dict(info.defaults)
    for k, v in params.items():
        d = info.defaults[k]
        if isinstance(d, bool) or d is None:
            merged[k] = v
        elif isinstance(d, (int, float)) and (isinstance(v, bool) or not isinstance(v, (int, float))):
            raise ParamError(f"{info.name}: parameter {k} must be a number")
        elif isinstance(d, str) and not isinstance(v, str):
            raise ParamError(f"{info.name}: parameter {k} must be a string")
        elif isinstance(d, list) and not isinstance(v, list):
            raise ParamError(f"{info.name}: parameter {k} must be a list")
        else:
            merged[k] = v
    return merged


def validate_spec(spec: CheckSpec) -> tuple[CheckInfo, dict, int]:
    """Registry entry, merged parameters and sample count; ParamError if invalid."""
    info = REGISTRY.get(spec.name)
    if info is None:
        raise ParamError(f"unknown check {spec.name!r}")
    params = _validate(info, spec.params)
    if not spec.tol_sigma > 0 or not spec.quad_tol > 0:
        raise ParamError("tol_sigma and quad_tol must be positive")
    n = info.samples if spec.samples is None else int(spec.samples)
    if info.samples and n < 1:
        raise ParamError("samples must be >= 1")
    return info, params, n


def run_check(spec: CheckSpec, timings: bool = False) -> CheckReport:
    """Run one check; module errors become a failed report, ParamError propagates."""
    info, params, n = validate_spec(spec)
    rec = _Recorder(spec)
    stream = SampleStream(spec.seed, (spec.name,))
    start = time.perf_counter()
    try:
        with np.errstate(all="ignore"):
            info.func(spec, rec, stream, n, params)
    except ParamError:
        raise
    except (LpVerifyError, ArithmeticError, ValueError) as exc:
        rec.note(f"error: {type(exc).__name__}: {exc}")
        rec.max_d = math.inf
    elapsed = (time.perf_counter() - start) * 1e3
    ok = rec.max_d <= spec.tol_sigma and rec.max_quad <= spec.quad_tol
    if rec.max_quad > spec.quad_tol:
        rec.note(f"quadrature error {rec.max_quad:.2e} exceeds quad_tol {spec.quad_tol:.1e}")
    if info.samples:
        params = dict(params, samples=n)
    return CheckReport(spec.name, params, "pass" if ok else "fail", rec.estimates, rec.references,
                       rec.max_d, spec.seed, round(elapsed, 3) if timings else None, rec.max_quad, rec.notes)
