"""Command-line front end: list, run and sweep the verification checks.

Reports go to ``--out`` (or stdout) as JSON; sweeps as CSV.  Human-readable
summaries go to stderr.  Exit status is 0 when everything passes, 1 when a
check fails and 2 for invalid parameters.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

from . import absnorm, embed
from .checks import REGISTRY, CheckReport, CheckSpec, check_names, reports_to_json, run_check, validate_spec
from .errors import LpVerifyError, ParamError
from .stochastic import SampleStream

PROFILE_CAPS = {"quick": 10**5, "full": 10**7}
SEED_ENV = "LPVERIFY_SEED"


@dataclass
class RunConfig:
    checks: list
    jobs: int = 1
    out_path: str | None = None
    profile: str = "full"

    def __post_init__(self):
        if self.jobs < 1:
            raise ParamError("--jobs must be >= 1")
        if self.profile not in PROFILE_CAPS:
            raise ParamError(f"unknown profile {self.profile!r}")


def default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None or raw.strip() == "":
        return 0
    try:
        return int(raw)
    except ValueError:
        raise ParamError(f"{SEED_ENV} must be an integer, got {raw!r}") from None


def _parse_param(text: str) -> tuple[str, object]:
    key, sep, value = text.partition("=")
    if not sep or not key:
        raise ParamError(f"--param expects key=value, got {text!r}")
    try:
        return key, json.loads(value)
    except json.JSONDecodeError:
        return key, value


def _load_config(path: str) -> list[dict]:
    try:
        with open(path, encoding="utf-8") as fh:
            body = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ParamError(f"cannot read config {path}: {exc}") from None
    if not isinstance(body, list) or not all(isinstance(d, dict) for d in body):
        raise ParamError("config must be a JSON array of check objects")
    return body


def _specs(args, names: list[str]) -> list[CheckSpec]:
    """CheckSpecs from config entries and names, with global flags applied on top."""
    entries = _load_config(args.config) if args.config else []
    params = dict(_parse_param(p) for p in args.param or [])
    if names:
        entries = [e for e in entries if e.get("name") in names] + \
                  [{"name": n} for n in names if n not in {e.get("name") for e in entries}]
    specs = []
    for entry in entries:
        spec = CheckSpec.from_dict(entry)
        if "seed" not in entry:
            spec.seed = default_seed()
        if params:
            spec.params = {**spec.params, **params}
        if args.seed is not None:
            spec.seed = args.seed
        if args.samples is not None:
            spec.samples = args.samples
        if args.tol_sigma is not None:
            spec.tol_sigma = args.tol_sigma
        if args.quad_tol is not None:
            spec.quad_tol = args.quad_tol
        specs.append(spec)
    return specs


def _apply_profile(spec: CheckSpec, profile: str) -> CheckSpec:
    info, _, n = validate_spec(spec)
    if not info.samples:
        return replace(spec, samples=None)
    return replace(spec, samples=min(n, PROFILE_CAPS[profile]))


def execute(config: RunConfig, timings: bool = False) -> list[CheckReport]:
    """Run every check of ``config``; reports come back sorted by name."""
    specs = [_apply_profile(s, config.profile) for s in config.checks]
    names = [s.name for s in specs]
    if len(set(names)) != len(names):
        raise ParamError("each check may appear only once per run")
    if config.jobs == 1 or len(specs) <= 1:
        reports = [run_check(s, timings) for s in specs]
    else:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            reports = list(pool.map(run_check, specs, [timings] * len(specs)))
    return sorted(reports, key=lambda r: r.name)


def _write(text: str, path: str | None):
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _summarize(reports: list[CheckReport]):
    for r in reports:
        d = r.max_discrepancy_sigma
        dtxt = "inf" if d == float("inf") else f"{d:.3g}"
        print(f"{r.status:4s}  {r.name:28s} max discrepancy {dtxt} sigma", file=sys.stderr)
        for note in r.notes:
            print(f"      {note}", file=sys.stderr)
    failed = sum(not r.passed for r in reports)
    print(f"{len(reports) - failed}/{len(reports)} checks passed", file=sys.stderr)


def cmd_list(args=None) -> str:
    lines = []
    for name in check_names():
        info = REGISTRY[name]
        kind = f"Monte Carlo, {info.samples} samples" if info.samples else "deterministic"
        lines.append(f"{name}  ({kind})  {info.summary}")
        for key, value in info.defaults.items():
            lines.append(f"    {key} = {json.dumps(value)}")
    return "\n".join(lines) + "\n"


def _run(args, names: list[str]) -> int:
    config = RunConfig(_specs(args, names), args.jobs, args.out, args.profile)
    if not config.checks:
        raise ParamError("no checks selected")
    reports = execute(config, timings=args.timings)
    _write(reports_to_json(reports), config.out_path)
    _summarize(reports)
    return 0 if all(r.passed for r in reports) else 1


def cmd_run(args) -> int:
    if not args.check and not args.config:
        raise ParamError("run needs --check or --config")
    return _run(args, args.check or [])


def cmd_all(args) -> int:
    return _run(args, check_names())


# --- sweeps ----------------------------------------------------------------

SWEEP_DEFAULTS = {
    "second-derivative": {"p": -1.0, "norm": "lq:3", "values": [1.5, 1.9, 1.99, 1.999]},
    "case1": {"p": 0.5, "q": 1.5, "r": 2.0, "values": [0.1, 0.5, 1.0, 2.0, 5.0, 10.0]},
    "case2": {"p": -0.5, "m": 2, "q": 1.5, "r": 2.0, "n": 2, "values": [0.5, 1.0, 2.0]},
}


def sweep_table(kind: str, params: dict, values, samples: int, seed: int) -> tuple[list[str], list[list]]:
    """Header and rows of a sweep table."""
    if kind not in SWEEP_DEFAULTS:
        raise ParamError(f"unknown sweep {kind!r}")
    unknown = set(params) - (set(SWEEP_DEFAULTS[kind]) - {"values"})
    if unknown:
        raise ParamError(f"sweep {kind}: unknown parameters {sorted(unknown)}")
    p = {**SWEEP_DEFAULTS[kind], **params}
    values = [float(v) for v in values]
    stream = SampleStream(seed, ("sweep", kind))
    if kind == "second-derivative":
        header = ["r", "ratio", "m2", "scaled_m2"]
        if not values:
            return header, []
        res = absnorm.second_derivative_sweep(float(p["p"]), absnorm.parse_norm(p["norm"]), values)
        return header, [list(row) for row in zip(*(res[k].tolist() for k in header))]
    if kind == "case1":
        header = ["t", "lhs", "rhs", "stderr"]
        if not values:
            return header, []
        ests = embed.case1_lhs(float(p["p"]), float(p["q"]), float(p["r"]), values, samples, stream)
        rhs = embed.case1_rhs(float(p["p"]), float(p["r"]), values)
        return header, [[t, e.mean, float(r), e.stderr] for t, e, r in zip(values, ests, rhs)]
    header = ["t", "lhs", "rhs", "stderr", "rhs_stderr"]
    if not values:
        return header, []
    model = embed.case2_model(float(p["p"]), int(p["m"]), float(p["q"]), float(p["r"]), int(p["n"]))
    gspec = embed.GaussianProcessSpec.identity(model.space.dim)
    res = embed.case2_identity(model, gspec, values, samples, stream)
    return header, [[r.t, r.lhs.mean, r.rhs.mean, r.lhs.stderr, r.rhs.stderr] for r in res]


def cmd_sweep(args) -> int:
    params = dict(_parse_param(p) for p in args.param or [])
    values = args.values if args.values is not None else SWEEP_DEFAULTS.get(args.kind, {}).get("values", [])
    seed = default_seed() if args.seed is None else args.seed
    samples = min(10**6 if args.samples is None else args.samples, PROFILE_CAPS[args.profile])
    if samples < 1:
        raise ParamError("samples must be >= 1")
    header, rows = sweep_table(args.kind, params, values, samples, seed)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows([[repr(float(v)) for v in row] for row in rows])
    _write(buf.getvalue(), args.out)
    print(f"sweep {args.kind}: {len(rows)} rows", file=sys.stderr)
    return 0


# --- argument parsing -------------------------------------------------------

def _common(sub: argparse.ArgumentParser, sweep: bool = False):
    sub.add_argument("--seed", type=int, default=None, help=f"master seed (default: ${SEED_ENV} or 0)")
    sub.add_argument("--samples", type=int, default=None, help="Monte Carlo sample count")
    sub.add_argument("--out", default=None, help="output file (default: stdout)")
    sub.add_argument("--profile", choices=sorted(PROFILE_CAPS), default="full",
                     help="quick caps samples at 1e5, full at 1e7")
    sub.add_argument("--param", action="append", metavar="KEY=VALUE", help="override a parameter (JSON value)")
    if sweep:
        return
    sub.add_argument("--tol-sigma", type=float, default=None)
    sub.add_argument("--quad-tol", type=float, default=None)
    sub.add_argument("--jobs", type=int, default=1, help="checks run concurrently")
    sub.add_argument("--config", default=None, help="JSON array of CheckSpec objects")
    sub.add_argument("--timings", action="store_true", help="record runtime_ms in reports")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lpverify", description=__doc__.splitlines()[0])
    subs = parser.add_subparsers(dest="command", required=True)
    subs.add_parser("list", help="list checks and their parameters")
    run = subs.add_parser("run", help="run selected checks")
    run.add_argument("--check", action="append", help="check name (repeatable)")
    _common(run)
    _common(subs.add_parser("all", help="run every check"))
    sweep = subs.add_parser("sweep", help="write a CSV table")
    sweep.add_argument("kind", choices=sorted(SWEEP_DEFAULTS))
    sweep.add_argument("--values", type=float, nargs="*", default=None, help="r or t grid")
    _common(sweep, sweep=True)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "list":
            sys.stdout.write(cmd_list(args))
            return 0
        if args.command == "run":
            return cmd_run(args)
        if args.command == "all":
            return cmd_all(args)
        return cmd_sweep(args)
    except ParamError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except LpVerifyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
