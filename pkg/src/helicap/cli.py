"""``helicap`` command line: helicity, Stokes, recognition, capacity, pipeline and suite runs.

Every command prints one JSON report. ``--out`` appends it as a line to a
JSONL file. Exit status is 0 when every check in the report passes, 1 when
some check fails and 2 for usage or input errors.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import jsonschema

from . import __version__
from . import capacity as cap
from .counterexample import counterexample_witness
from .geometry import GeometryError, QuadratureSpec, parse_region, shell, sphere
from .helicity import (STOKES_RTOL, ExactFormWitness, HelicityError, HelicityProfile,
                       boundary_helicity_profile, helicity, stokes_helicity_check)
from .recognition import (DEFAULT_CAP, KEY_LEMMA_TOL, RecognitionError, compute_C0, compute_C1,
                          compute_C2, feasible_spectrum, verify_key_lemma, verify_recognition)
from .suite import run_property_suites

EXIT_PASS, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

PROFILE_SCHEMA = {
    "type": "object",
    "required": ["n", "components"],
    "properties": {
        "k": {"type": ["integer", "null"], "minimum": 1},
        "n": {"type": "integer", "minimum": 2},
        "components": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["label", "h"],
                "properties": {"label": {"type": "string"}, "h": {"type": "number"}},
            },
        },
    },
}

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "quad_order": {"type": "integer", "minimum": 1},
        "cap": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer"},
        "out": {"type": ["string", "null"]},
        "workers": {"type": "integer", "minimum": 1},
        "tolerances": {
            "type": "object",
            "additionalProperties": {"type": "number", "exclusiveMinimum": 0},
        },
    },
}


class UsageError(ValueError):
    pass


@dataclass
class RunConfig:
    quad_order: int = 32
    cap: int = DEFAULT_CAP
    seed: int = 0
    out: str | None = None
    workers: int = 1
    tolerances: dict = field(default_factory=lambda: {"stokes": STOKES_RTOL, "key_lemma": KEY_LEMMA_TOL})

    def __post_init__(self):
        if any(not v > 0 for v in self.tolerances.values()):
            raise UsageError("tolerances must be positive")

    @property
    def quadrature(self) -> QuadratureSpec:
        return QuadratureSpec(order=self.quad_order)

    @classmethod
    def from_file(cls, path: str) -> RunConfig:
        data = _load_json(path)
        try:
            jsonschema.validate(data, CONFIG_SCHEMA)
        except jsonschema.ValidationError as exc:
            raise UsageError(f"{path}: config field {_path(exc)}: {exc.message}") from None
        tol = {**cls().tolerances, **data.pop("tolerances", {})}
        return cls(tolerances=tol, **data)


def _path(exc: jsonschema.ValidationError) -> str:
    return "/".join(str(p) for p in exc.absolute_path) or "<root>"


def _load_json(path: str):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None


def cmd_load_profile(path: str) -> HelicityProfile:
    """Read and validate a profile; errors name the offending line or field."""
    data = _load_json(path)
    try:
        jsonschema.validate(data, PROFILE_SCHEMA)
        return HelicityProfile.from_json(data)
    except jsonschema.ValidationError as exc:
        raise UsageError(f"{path}: field {_path(exc)}: {exc.message}") from None
    except HelicityError as exc:
        raise UsageError(f"{path}: {exc}") from None


def cmd_emit_profile(p: HelicityProfile, path: str) -> None:
    Path(path).write_text(p.dumps() + "\n")


# ---------------------------------------------------------------------------
# reports


def _clean(x):
    """JSON-safe copy with non-finite floats spelled out."""
    if isinstance(x, float) and not math.isfinite(x):
        return "inf" if x > 0 else ("-inf" if x < 0 else "nan")
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    return x


def make_report(command: Sequence[str], config: RunConfig, inputs: dict, outputs: dict,
                checks: dict, seconds: float) -> dict:
    return _clean({
        "command": list(command),
        "config": asdict(config),
        "seed": config.seed,
        "inputs": inputs,
        "outputs": outputs,
        "checks": {k: bool(v) for k, v in checks.items()},
        "pass": all(checks.values()),
        "timing": {"seconds": seconds},
    })


def _write_csv(path: str, header: Sequence[str], rows: Sequence[Sequence]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


# ---------------------------------------------------------------------------
# commands; each returns (inputs, outputs, checks)


def _region_text(args) -> str:
    """``--region shell --r 1 --R 2`` and ``--region shell:1,2`` name the same region."""
    if ":" in args.region:
        return args.region
    params = [v for v in (args.r, args.R) if v is not None]
    if args.params:
        params += [float(v) for v in args.params.split(",")]
    return args.region + (":" + ",".join(repr(float(v)) for v in params) if params else "")


def _region(args):
    try:
        return parse_region(_region_text(args), args.dim)
    except (ValueError, TypeError) as exc:
        raise UsageError(str(exc)) from None


def run_helicity(args, cfg: RunConfig):
    w = ExactFormWitness.standard(args.dim)
    inputs = {"region": _region_text(args), "dim": args.dim}
    if args.region.startswith("sphere"):
        _, _, r = inputs["region"].partition(":")
        h = helicity(sphere(args.dim, float(r or 1.0)), w, cfg.quadrature)
        return inputs, {"helicity": h, "over_pi^n": h / math.pi ** w.n}, {}
    p = boundary_helicity_profile(_region(args), w, cfg.quadrature)
    if args.profile_out:
        cmd_emit_profile(p, args.profile_out)
    return inputs, {"profile": p.to_json()}, {"maxipotent": True, "positive_total": p.total() > 0}


def run_stokes(args, cfg: RunConfig):
    res = stokes_helicity_check(_region(args), ExactFormWitness.standard(args.dim), cfg.quadrature)
    out = {"volume_integral": res.lhs, "boundary_helicity_sum": res.rhs, "components": res.components,
           "relative_residual": res.relative_residual}
    return {"region": _region_text(args), "dim": args.dim}, out, {"stokes": res.passed(cfg.tolerances["stokes"])}


def run_recognition(args, cfg: RunConfig):
    p = cmd_load_profile(args.profile)
    inputs = {"profile": p.to_json()}
    if args.action == "c0":
        return inputs, {"C1": compute_C1(p), "C2": compute_C2(p), "C0": compute_C0(p)}, {"C0_below_1": compute_C0(p) < 1}
    if args.action == "keylemma":
        rep = verify_key_lemma(p, cfg.cap, cfg.workers)
        return inputs, rep.to_json(), {"key_lemma": rep.worst_violator_cmax <= rep.c0 + cfg.tolerances["key_lemma"]}
    if args.action == "verify":
        rep = verify_recognition(p, cfg.cap, cfg.workers)
        return inputs, rep.to_json(), {"recognition": rep.passed}
    spectrum = feasible_spectrum(p, cfg.cap, cfg.workers)
    c0 = compute_C0(p)
    rows = [(iv.lo, iv.hi, iv.lo_closed, iv.hi_closed, iv.hi > c0) for iv in spectrum]
    if args.emit_csv:
        _write_csv(args.emit_csv, ("lo", "hi", "lo_closed", "hi_closed", "reaches_above_C0"), rows)
    return inputs, {"C0": c0, "spectrum": [str(iv) for iv in spectrum]}, {}


def run_capacity(args, cfg: RunConfig):
    if args.action == "counterexample":
        rep = counterexample_witness()
        checks = rep.pop("checks")
        return {}, rep, checks
    if args.action == "axioms":
        dims = (4, 6) if args.suite == "full" else (args.dim,)
        out, checks, rows = {}, {}, []
        for dim in dims:
            rep = cap.axiom_suite(dim)
            out[f"dim{dim}"] = rep.to_json()
            checks[f"axioms_dim{dim}"] = rep.passed
            if args.emit_csv:
                engine = cap.RuleEngine(cap.intermediates(dim) + cap.default_catalog(dim))
                rows += [(dim, str(d), str(t), engine.bound(d, t).lower, engine.bound(d, t).upper)
                         for d in engine.domains for t in engine.domains]
        if args.emit_csv:
            _write_csv(args.emit_csv, ("dim", "domain", "target", "lower", "upper"), rows)
        return {"suite": args.suite}, out, checks
    try:
        target = cap.parse_domain(args.to, args.dim)
        source = cap.parse_domain(args.source, args.dim) if args.source else None
    except cap.CapacityError as exc:
        raise UsageError(str(exc)) from None
    inputs = {"from": str(source) if source else None, "to": str(target)}
    if args.action == "thinness":
        verdict, w, c = cap.thinness_check(target)
        return inputs, {"verdict": verdict, "width": w.to_json(), "c_D(Z)": c.to_json()}, {"consistent": w.consistent() and c.consistent()}
    if args.action == "normalization":
        verdict, b = cap.normalization_check(target)
        return inputs, {"verdict": verdict, "c_base(Z)": b.to_json()}, {"consistent": b.consistent()}
    if source is None:
        b = cap.gromov_width_bounds(target)
    elif args.cbar:
        b = cap.cbar_bounds(source, target)
    else:
        b = cap.embedding_capacity_bounds(source, target)
    if args.emit_csv:
        _write_csv(args.emit_csv, ("from", "to", "lower", "upper"), [(inputs["from"] or "Ball(1)", str(target), b.lower, b.upper)])
    return inputs, b.to_json(), {"consistent": b.consistent()}


def cmd_pipeline_shell(r: float, R: float, n: int, cfg: RunConfig | None = None) -> tuple[dict, dict, dict]:
    """Shell profile from quadrature, then C0, the Key Lemma and the recognition verdict."""
    cfg = cfg or RunConfig()
    if not 0 < r < R:
        raise UsageError(f"need 0 < r < R, got r={r}, R={R}")
    if n < 2:
        raise UsageError("helicity needs n >= 2")
    region = shell(2 * n, r, R)
    w = ExactFormWitness.standard(2 * n)
    stokes = stokes_helicity_check(region, w, cfg.quadrature)
    profile = boundary_helicity_profile(region, w, cfg.quadrature)
    key = verify_key_lemma(profile, cfg.cap, cfg.workers)
    rec = verify_recognition(profile, cfg.cap, cfg.workers)
    inner = dict(profile.components)["inner"]
    forced = rec.forced_c
    residual = (forced ** n - 1.0) * abs(inner) if forced is not None else math.nan
    outputs = {
        "profile": profile.to_json(),
        "profile_over_pi^n": {k: v / math.pi ** n for k, v in profile.components},
        "stokes_relative_residual": stokes.relative_residual,
        "C0": compute_C0(profile),
        "key_lemma": key.to_json(),
        "recognition": rec.to_json(),
        "forced_C": forced,
        "wraparound_residual_volume": residual,
    }
    checks = {
        "stokes": stokes.passed(cfg.tolerances["stokes"]),
        "key_lemma": key.worst_violator_cmax <= key.c0 + cfg.tolerances["key_lemma"],
        "recognition": rec.passed,
        "forced_C_is_1": forced == 1.0,
        "wraparound_residual_zero": residual == 0.0,
    }
    return {"r": r, "R": R, "n": n}, outputs, checks


def run_pipeline(args, cfg: RunConfig):
    return cmd_pipeline_shell(args.r, args.R, args.n, cfg)


def cmd_property_suite(seed: int, count: int) -> tuple[dict, dict, dict]:
    rep = run_property_suites(seed, count)
    return {"count": count}, rep["suites"], {name: s["pass"] for name, s in rep["suites"].items()}


def run_suite(args, cfg: RunConfig):
    return cmd_property_suite(cfg.seed, args.count)


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with RunConfig fields")
    common.add_argument("--quad-order", type=int, help="Gauss-Legendre points per axis (default 32)")
    common.add_argument("--cap", type=int, help="enumeration cap for assignments (default 1e7)")
    common.add_argument("--seed", type=int, help="seed for randomized suites (default 0)")
    common.add_argument("--workers", type=int, help="processes for assignment enumeration")
    common.add_argument("--out", help="append the JSON report to this JSONL file")

    parser = argparse.ArgumentParser(prog="helicap", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    region = argparse.ArgumentParser(add_help=False)
    region.add_argument("--region", required=True,
                        help="ball, shell, ellipsoid or sphere; parameters inline (shell:1,2) or via flags")
    region.add_argument("--r", type=float, help="radius (inner radius for shells)")
    region.add_argument("--R", type=float, help="outer radius for shells")
    region.add_argument("--params", help="comma-separated parameters, e.g. ellipsoid semi-axes")
    region.add_argument("--dim", type=int, default=4)

    p = sub.add_parser("helicity", help="helicity of catalog hypersurfaces")
    hsub = p.add_subparsers(dest="action", required=True)
    q = hsub.add_parser("compute", parents=[common, region], help="boundary helicity profile of a region")
    q.add_argument("--profile-out", help="write the profile JSON here")
    q.set_defaults(run=run_helicity)

    p = sub.add_parser("stokes", parents=[common, region], help="Stokes' theorem for helicity on a region")
    p.set_defaults(run=run_stokes)

    p = sub.add_parser("recognition", help="separation constants and feasibility analysis")
    rsub = p.add_subparsers(dest="action", required=True)
    for action in ("c0", "keylemma", "verify", "spectrum"):
        q = rsub.add_parser(action, parents=[common])
        q.add_argument("profile", help="profile JSON file")
        if action == "spectrum":
            q.add_argument("--emit-csv", help="write the spectrum intervals as CSV")
        q.set_defaults(run=run_recognition)

    p = sub.add_parser("capacity", help="capacity bounds, axioms and the slit-shell witness")
    csub = p.add_subparsers(dest="action", required=True)
    q = csub.add_parser("bounds", parents=[common], help="c_from(to); Gromov width when --from is omitted")
    q.add_argument("--from", dest="source", help="domain, e.g. ball:1 or shell:1,2@0.5")
    q.add_argument("--to", required=True)
    q.add_argument("--dim", type=int, default=4)
    q.add_argument("--cbar", action="store_true", help="report max{c_from, w}")
    q.add_argument("--emit-csv")
    q.set_defaults(run=run_capacity)
    for action in ("thinness", "normalization"):
        q = csub.add_parser(action, parents=[common])
        q.add_argument("to", metavar="domain")
        q.add_argument("--dim", type=int, default=4)
        q.set_defaults(run=run_capacity, source=None, cbar=False, emit_csv=None)
    q = csub.add_parser("axioms", parents=[common], help="conformality, monotonicity and consistency")
    q.add_argument("--suite", choices=("full", "single"), default="full")
    q.add_argument("--dim", type=int, default=4)
    q.add_argument("--emit-csv", help="write the pairwise bounds table as CSV")
    q.set_defaults(run=run_capacity)
    q = csub.add_parser("counterexample", parents=[common], help="slit shell flow witness")
    q.set_defaults(run=run_capacity)

    p = sub.add_parser("pipeline", parents=[common], help="shell profile through to the recognition verdict")
    p.add_argument("shape", choices=("shell",))
    p.add_argument("--r", type=float, default=1.0)
    p.add_argument("--R", type=float, default=2.0)
    p.add_argument("--n", type=int, default=2)
    p.set_defaults(run=run_pipeline)

    p = sub.add_parser("suite", parents=[common], help="randomized property suites")
    p.add_argument("--count", type=int, default=100)
    p.set_defaults(run=run_suite)
    return parser


def resolve_config(args) -> RunConfig:
    cfg = RunConfig.from_file(args.config) if args.config else RunConfig()
    for name in ("quad_order", "cap", "seed", "out", "workers"):
        value = getattr(args, name, None)
        if value is not None:
            setattr(cfg, name, value)
    if cfg.quad_order < 1 or cfg.cap < 1 or cfg.workers < 1:
        raise UsageError("--quad-order, --cap and --workers must be positive")
    return cfg


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    run: Callable = args.run
    try:
        cfg = resolve_config(args)
        start = time.perf_counter()
        inputs, outputs, checks = run(args, cfg)
        seconds = time.perf_counter() - start
    except (UsageError, RecognitionError, GeometryError, HelicityError, cap.CapacityError, ValueError) as exc:
        print(f"helicap: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    report = make_report(["helicap", *argv], cfg, inputs, outputs, checks, seconds)
    text = json.dumps(report, indent=2, sort_keys=True)
    print(text)
    if cfg.out:
        with open(cfg.out, "a") as fh:
            fh.write(json.dumps(report, sort_keys=True) + "\n")
    return EXIT_PASS if report["pass"] else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
