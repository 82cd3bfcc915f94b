"""Command-line front end.

Subcommands: charx, verify, table, density, flow, grassmann, radial.
Reports are JSON (schema 1) or CSV; identical config + seed gives
byte-identical output apart from the timestamp, which --no-timestamp
suppresses.  Exit codes: 0 ok, 2 check failure, 3 solver/domain error,
4 config error.
"""

from __future__ import annotations

import argparse
import datetime
import json
import math
import sys

import numpy as np

from . import flow as fl
from . import radial as rad
from . import riesz, subeq
from .errors import DomainError, InvariantError, NumericalError, RieszlabError, SolverError

SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_CHECK_FAILED = 2
EXIT_SOLVER = 3
EXIT_CONFIG = 4


class ConfigError(Exception):
    pass


# ---------------------------------------------------------------------------
# family / field registries addressable from the command line
# ---------------------------------------------------------------------------

_FAMILY_PARAMS = {
    "p": (),
    "p-convex": ("p",),
    "laplacian": (),
    "sigma-k": ("k",),
    "pdelta": ("delta",),
    "min-max": ("p",),
    "min-2": ("p",),
    "dual-min-max": ("p",),
    "dual-min-2": ("p",),
    "trace-power": ("k", "q"),
    "subaffine": (),
    "largest-convex": ("p",),
    "full-space": (),
}


def build_family(name: str, n: int, variant: str | None, args) -> subeq.Subequation:
    if name not in _FAMILY_PARAMS:
        raise ConfigError(f"unknown family {name!r}; known: {sorted(_FAMILY_PARAMS)}")
    params = {}
    for key in _FAMILY_PARAMS[name]:
        value = getattr(args, key.replace("-", "_"), None)
        if value is None:
            raise ConfigError(f"family {name!r} needs --{key}")
        params[key] = int(value) if key == "k" else float(value)
    if variant == "complex":
        return subeq.complex_lift(name, n, **params)
    if variant == "quaternionic":
        return subeq.quaternionic_lift(name, n, **params)
    f = subeq.builtin(name, n, **params)
    if getattr(args, "regularize", None):
        f = subeq.uniform_elliptic_regularization(f, float(args.regularize))
    return f


def closed_form_characteristic(name: str, n: int, variant: str | None, args) -> float | None:
    """Catalog closed form for the increasing characteristic, if known."""
    p = getattr(args, "p", None)
    base = None
    if name == "p":
        base = 1.0
    elif name == "p-convex" and p is not None:
        base = float(p)
    elif name == "laplacian":
        base = float(n)
    elif name == "sigma-k" and getattr(args, "k", None) is not None:
        base = n / float(args.k)
    elif name == "pdelta" and getattr(args, "delta", None) is not None:
        d = float(args.delta)
        base = n * (1.0 + d) / (n + d)
    elif name == "trace-power" and getattr(args, "k", None) is not None and getattr(args, "q", None):
        base = 1.0 + (float(args.k) - 1.0) ** (1.0 / float(args.q))
    elif name in ("min-max", "min-2", "largest-convex") and p is not None:
        base = float(p)
    elif name == "subaffine":
        base = math.inf
    if base is None:
        return None
    if getattr(args, "regularize", None):
        d = float(args.regularize)
        base = base * n * (1.0 + d) / (n + d * base)
    if variant == "complex":
        base *= 2.0
    elif variant == "quaternionic":
        base *= 4.0
    return base


def build_field(name: str, args) -> fl.ScalarField:
    n = args.n
    theta = getattr(args, "theta", None) or 1.0
    p = getattr(args, "p", None)
    if name == "riesz":
        return fl.riesz_kernel_field(theta, float(p), n)
    if name == "radial-perturbed":
        base = fl.riesz_kernel_field(theta, float(p), n)
        return fl.plus_quadratic_field(base, 2.0)
    if name == "log-coord":
        return fl.log_modulus_coordinate_field(n // 2)
    if name == "partial-kernel":
        return fl.partial_kernel_field(float(p), int(getattr(args, "m", None) or 1), n)
    if name == "newtonian":
        masses = [(theta, np.zeros(n))]
        offset = getattr(args, "offset", None)
        if offset:
            second = np.zeros(n)
            second[0] = float(offset)
            masses.append((float(getattr(args, "theta2", None) or 1.0), second))
        return fl.newtonian_potential_field(float(p), masses, n)
    if name == "smooth":
        return fl.quadratic_field(1.0, n)
    if name == "two-kernel":
        a = np.zeros(n)
        a[0] = float(getattr(args, "offset", None) or 1.0)
        return fl.newtonian_potential_field(float(p), [(1.0, np.zeros(n)), (1.0, a)], n)
    if name == "zero":
        return fl.zero_field(n)
    raise ConfigError(f"unknown field {name!r}")


_PROFILES = {
    "kernel": lambda p: rad.kernel_profile(p),
    "kernel-plus-square": lambda p: rad.RadialProfile(
        fn=lambda r: np.asarray(riesz.kernel(riesz.KernelSpec(p=p), r)) + r**2,
        name="kernel+r^2",
    ),
    "max-kernel-const": lambda p: rad.RadialProfile(
        fn=lambda r: np.maximum(np.asarray(riesz.kernel(riesz.KernelSpec(p=p), r)), -0.5),
        name="max(kernel,-1/2)",
    ),
    "linear": lambda p: rad.RadialProfile(fn=lambda r: np.asarray(r, dtype=float), name="t"),
    "reciprocal": lambda p: rad.RadialProfile(fn=lambda r: 1.0 / np.asarray(r, dtype=float),
                                              name="1/t"),
    "shifted-square": lambda p: rad.RadialProfile(fn=lambda r: (np.asarray(r) - 1.0) ** 2,
                                                  name="(t-1)^2"),
}


# ---------------------------------------------------------------------------
# output plumbing
# ---------------------------------------------------------------------------


def _sanitize(obj):
    """Strict-JSON floats: non-finite values become strings."""
    if isinstance(obj, dict):
        return {k: _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return "inf" if obj > 0 else ("-inf" if obj < 0 else "nan")
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def emit(payload: dict, args) -> None:
    payload = {"schema": SCHEMA_VERSION, **payload}
    if not args.no_timestamp:
        payload["timestamp"] = datetime.datetime.now(datetime.timezone.utc).isoformat()
    if args.format == "json":
        text = json.dumps(_sanitize(payload), indent=2, sort_keys=True)
    else:
        text = _to_csv(payload)
    if args.out:
        with open(args.out, "w") as handle:
            handle.write(text + "\n")
    else:
        print(text)


def _fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.9g}"
    return str(x)


def _to_csv(payload: dict) -> str:
    rows = payload.get("rows")
    if rows is None:
        raise ConfigError("csv output is only available for tabular commands")
    header = payload["columns"]
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_charx(args) -> int:
    tokens = args.family if isinstance(args.family, list) else [args.family]
    variant = args.variant
    if len(tokens) == 2 and tokens[0] in ("complex", "quaternionic"):
        variant, tokens = tokens[0], tokens[1:]
    if len(tokens) != 1:
        raise ConfigError(f"bad family spec {' '.join(tokens)!r}")
    args.family = tokens[0]
    args.variant = variant
    f = build_family(args.family, args.n, args.variant, args)
    pair = riesz.characteristic_pair(f, tol=args.tol, check_directions=args.check_directions,
                                     seed=args.seed)
    record = {
        "command": "charx",
        "family": f.name,
        "n": f.n,
        **pair.to_dict(),
    }
    closed = closed_form_characteristic(args.family, args.n, args.variant, args)
    if closed is not None:
        record["closed_form"] = closed
        if math.isfinite(closed) and math.isfinite(pair.p):
            record["residual"] = abs(pair.p - closed)
        else:
            record["residual"] = 0.0 if closed == pair.p else math.inf
    emit(record, args)
    return EXIT_OK


_SUITES = ("positivity", "cone", "invariance", "mp", "ue", "sandwich")


def cmd_verify(args) -> int:
    f = build_family(args.family, args.n, args.variant, args)
    suites = args.suite
    if not suites:
        # the applicable default set: ellipticity only for pdelta, the
        # sandwich only when the characteristic is finite
        suites = ["positivity", "cone", "invariance", "mp", "sandwich"]
        if args.family == "pdelta":
            suites.append("ue")
    reports = []
    for suite in suites:
        if suite == "positivity":
            reports.append(subeq.check_positivity(f, args.samples, args.seed))
        elif suite == "cone":
            reports.append(subeq.check_cone(f, args.samples, args.seed))
        elif suite == "invariance":
            reports.append(subeq.check_st_invariance(f, args.samples, args.seed))
        elif suite == "mp":
            reports.append(subeq.check_maximum_principle(f))
        elif suite == "ue":
            if args.family != "pdelta":
                raise ConfigError("--suite ue applies to the pdelta family")
            reports.append(subeq.check_uniform_ellipticity(args.delta, args.n,
                                                           args.samples, args.seed))
        elif suite == "sandwich":
            p, _ = riesz.increasing_characteristic(f, tol=args.tol)
            if math.isinf(p):
                reports.append(subeq.PropertyReport(
                    "sandwich", 0, 0.0, 0.0, passed=True, skipped=True,
                    note="infinite characteristic: no finite sandwich"))
            else:
                reports.append(riesz.sandwich_check(f, p, args.samples, args.seed))
        else:
            raise ConfigError(f"unknown suite {suite!r}; known: {_SUITES}")
    emit({"command": "verify", "family": f.name, "n": f.n,
          "reports": [r.to_dict() for r in reports]}, args)
    return EXIT_OK if all(r.passed or r.skipped for r in reports) else EXIT_CHECK_FAILED


def catalog_rows(tol: float = 1e-9):
    """Closed-form catalog used by the table command and the acceptance suite."""
    entries = [
        ("sigma-k", {"k": 2}, 4, 4 / 2),
        ("sigma-k", {"k": 3}, 6, 6 / 3),
        ("sigma-k", {"k": 1}, 5, 5.0),
        ("p-convex", {"p": 1.0}, 4, 1.0),
        ("p-convex", {"p": 2.5}, 5, 2.5),
        ("p-convex", {"p": 4.0}, 4, 4.0),
        ("pdelta", {"delta": 0.5}, 3, 3 * 1.5 / 3.5),
        ("pdelta", {"delta": 1.0}, 3, 1.5),
        ("pdelta", {"delta": 3.0}, 3, 3 * 4.0 / 6.0),
        ("trace-power", {"k": 4, "q": 3.0}, 4, 1.0 + 3.0 ** (1.0 / 3.0)),
        ("trace-power", {"k": 3, "q": 5.0}, 4, 1.0 + 2.0 ** (1.0 / 5.0)),
        ("min-max", {"p": 3.0}, 4, 3.0),
        ("min-2", {"p": 3.0}, 4, 3.0),
        ("largest-convex", {"p": 2.0}, 4, 2.0),
    ]
    rows = []
    for family, params, n, closed in entries:
        f = subeq.builtin(family, n, **params)
        p, _ = riesz.increasing_characteristic(f, tol=tol)
        rows.append((family, params, n, p, closed))
    # uniformly elliptic regularization of p-convex
    base = subeq.builtin("p-convex", 4, p=2.0)
    reg = subeq.uniform_elliptic_regularization(base, 1.0)
    p, _ = riesz.increasing_characteristic(reg, tol=tol)
    rows.append(("regularized(p-convex)", {"p": 2.0, "delta": 1.0}, 4,
                 p, 2.0 * 4 * 2.0 / (4 + 1.0 * 2.0)))
    # complex and quaternionic lifts
    cf = subeq.complex_lift("p-convex", 3, p=1.0)
    p, _ = riesz.increasing_characteristic(cf, tol=tol)
    rows.append(("complex(p-convex)", {"p": 1.0}, 3, p, 2.0))
    qf = subeq.quaternionic_lift("p", 2)
    p, _ = riesz.increasing_characteristic(qf, tol=tol)
    rows.append(("quaternionic(p)", {}, 2, p, 4.0))
    return rows


def cmd_table(args) -> int:
    rows = []
    for family, params, n, computed, closed in catalog_rows(args.tol):
        label = ";".join(f"{k}={v:g}" for k, v in sorted(params.items()))
        rows.append((family, label, n, computed, closed, abs(computed - closed)))
    payload = {
        "command": "table",
        "columns": ["family", "params", "n", "computed_p", "closed_form_p", "residual"],
        "rows": rows,
    }
    emit(payload, args)
    return EXIT_OK


def cmd_density(args) -> int:
    field = build_field(args.field, args)
    radii = np.asarray(args.radii, dtype=float) if args.radii else fl.default_radii()
    quad = fl.sphere_quad(field.n, args.quad, args.seed)
    center = np.zeros(field.n)
    if args.center is not None:
        center = np.asarray(args.center, dtype=float)
    if args.mass:
        report = fl.mass_density(field, center, args.p, radii=radii, quad=quad)
    else:
        report = fl.densities(field, center, args.p, radii=radii, quad=quad)
    if args.curve_out:
        _write_curve_csv(args.curve_out, field, center, radii, quad, args.p)
    emit({"command": "density", "field": field.name, **report.to_dict()}, args)
    return EXIT_OK


def _write_curve_csv(path: str, field, center, radii, quad, p: float) -> None:
    lines = ["kind,r,value,quotient"]
    for kind in ("M", "S", "V"):
        curve = fl.average_curve(field, kind, center, radii, quad)
        for r, value, quotient in curve.to_csv_rows(p):
            lines.append(f"{kind},{_fmt(r)},{_fmt(value)},{_fmt(quotient)}")
    with open(path, "w") as handle:
        handle.write("\n".join(lines) + "\n")


def cmd_flow(args) -> int:
    field = build_field(args.field, args)
    candidate = build_field(args.candidate, args)
    radii = np.asarray(args.radii, dtype=float) if args.radii else 0.5 ** np.arange(11)
    spec = fl.FlowSpec(p=args.p, radii=radii)
    quad = fl.sphere_quad(field.n, args.quad, args.seed)
    record = fl.tangent_experiment(field, spec, candidate, metric=args.metric,
                                   tol=args.conv_tol, beta=args.beta, quad=quad)
    emit({"command": "flow", "field": field.name, "candidate": candidate.name,
          **record.to_dict()}, args)
    return EXIT_OK if record.converged else EXIT_CHECK_FAILED


def _parse_grassmann_spec(spec: str):
    # accepts gPrN, e.g. g2r3 for 2-planes in R^3
    spec = spec.strip().lower()
    if not spec.startswith("g") or "r" not in spec:
        raise ConfigError("grassmann spec must look like g2r3")
    try:
        p_str, n_str = spec[1:].split("r", 1)
        return int(p_str), int(n_str)
    except ValueError as exc:
        raise ConfigError(f"bad grassmann spec {spec!r}") from exc


def cmd_grassmann(args) -> int:
    p, n = _parse_grassmann_spec(args.sample)
    sample = subeq.sample_grassmannian(n, p, count=args.planes, seed=args.seed,
                                       angle_tol=args.angle_tol)
    payload = {"command": "grassmann", "n": n, "p": p, "planes": len(sample.planes)}
    status = EXIT_OK
    if args.transitivity:
        rng = np.random.default_rng(args.seed)
        x = np.asarray(args.x, dtype=float) if args.x else rng.standard_normal(n)
        y = np.asarray(args.y, dtype=float) if args.y else rng.standard_normal(n)
        result = subeq.transitivity_check(sample, x, y)
        payload["transitivity"] = result.to_dict()
        status = EXIT_OK if result.found else EXIT_CHECK_FAILED
    if args.charx:
        f = subeq.geometric(sample)
        value, bracket = riesz.increasing_characteristic(f, tol=args.tol)
        payload["charx"] = {"p": value, "bracket": bracket, "closed_form": float(p),
                            "residual": abs(value - p)}
    emit(payload, args)
    return status


def cmd_radial(args) -> int:
    if args.profile not in _PROFILES:
        raise ConfigError(f"unknown profile {args.profile!r}; known: {sorted(_PROFILES)}")
    profile = _PROFILES[args.profile](args.p)
    grid = np.geomspace(args.grid_min, args.grid_max, args.grid_points)
    classification = rad.classify_profile(profile, grid)
    payload = {
        "command": "radial",
        "profile": profile.name,
        "p": args.p,
        "classification": classification.to_dict(),
    }
    convexity = rad.kp_convexity_test(profile, args.p, grid)
    payload["kp_convexity"] = convexity.to_dict()
    if convexity.passed:
        radii = rad.geometric_radii(args.grid_max / 2.0, 8)
        theta, bracket = rad.one_var_density(profile, args.p, radii)
        payload["density"] = {"theta": theta, "bracket": bracket}
    emit(payload, args)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser and config handling
# ---------------------------------------------------------------------------


def _add_common(sub):
    sub.add_argument("--n", type=int, default=3, help="ambient dimension")
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--tol", type=float, default=1e-9)
    sub.add_argument("--quad", type=int, default=None, help="sphere sample size")
    sub.add_argument("--out", type=str, default=None)
    sub.add_argument("--format", choices=("json", "csv"), default="json")
    sub.add_argument("--no-timestamp", action="store_true")
    sub.add_argument("--config", type=str, default=None,
                     help="JSON file with defaults; flags override")


def _add_family_params(sub):
    sub.add_argument("--p", type=float, default=None)
    sub.add_argument("--k", type=int, default=None)
    sub.add_argument("--q", type=float, default=None)
    sub.add_argument("--delta", type=float, default=None)
    sub.add_argument("--regularize", type=float, default=None,
                     help="wrap in the uniformly elliptic regularization")
    sub.add_argument("--variant", choices=("complex", "quaternionic"), default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rieszlab",
        description="Characteristics, verification suites and flow/density experiments "
                    "for cone subequations",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    sub = subparsers.add_parser("charx", help="compute the characteristic pair")
    sub.add_argument("family", nargs="+",
                     help="family name, optionally prefixed by 'complex' or 'quaternionic'")
    _add_family_params(sub)
    sub.add_argument("--check-directions", type=int, default=0)
    _add_common(sub)
    sub.set_defaults(func=cmd_charx)

    sub = subparsers.add_parser("verify", help="run structural property suites")
    sub.add_argument("family")
    _add_family_params(sub)
    sub.add_argument("--suite", action="append", choices=_SUITES, default=None)
    sub.add_argument("--samples", type=int, default=200)
    _add_common(sub)
    sub.set_defaults(func=cmd_verify)

    sub = subparsers.add_parser("table", help="closed-form characteristic catalog")
    _add_common(sub)
    sub.set_defaults(func=cmd_table)

    sub = subparsers.add_parser("density", help="density estimation for a field")
    sub.add_argument("field")
    sub.add_argument("--p", type=float, required=True)
    sub.add_argument("--theta", type=float, default=None)
    sub.add_argument("--m", type=int, default=None)
    sub.add_argument("--offset", type=float, default=None)
    sub.add_argument("--theta2", type=float, default=None)
    sub.add_argument("--center", type=float, nargs="+", default=None)
    sub.add_argument("--radii", type=float, nargs="+", default=None)
    sub.add_argument("--mass", action="store_true", help="mass density via the flux formula")
    sub.add_argument("--curve-out", type=str, default=None,
                     help="dump the average curves as CSV (kind, r, value, quotient)")
    _add_common(sub)
    sub.set_defaults(func=cmd_density)

    sub = subparsers.add_parser("flow", help="tangential flow convergence experiment")
    sub.add_argument("field")
    sub.add_argument("--p", type=float, required=True)
    sub.add_argument("--candidate", type=str, default="riesz")
    sub.add_argument("--conv-tol", type=float, default=1e-3,
                     help="distance threshold declaring convergence")
    sub.add_argument("--metric", choices=("l1", "sup", "holder"), default="sup")
    sub.add_argument("--beta", type=float, default=None)
    sub.add_argument("--theta", type=float, default=None)
    sub.add_argument("--m", type=int, default=None)
    sub.add_argument("--offset", type=float, default=None)
    sub.add_argument("--theta2", type=float, default=None)
    sub.add_argument("--radii", type=float, nargs="+", default=None)
    _add_common(sub)
    sub.set_defaults(func=cmd_flow)

    sub = subparsers.add_parser("grassmann", help="plane-sample experiments")
    sub.add_argument("sample", help="spec like g2r3")
    sub.add_argument("--planes", type=int, default=None)
    sub.add_argument("--angle-tol", type=float, default=1e-3)
    sub.add_argument("--transitivity", action="store_true")
    sub.add_argument("--charx", action="store_true")
    sub.add_argument("--x", type=float, nargs="+", default=None)
    sub.add_argument("--y", type=float, nargs="+", default=None)
    _add_common(sub)
    sub.set_defaults(func=cmd_grassmann)

    sub = subparsers.add_parser("radial", help="one-variable profile classification")
    sub.add_argument("profile")
    sub.add_argument("--p", type=float, default=3.0)
    sub.add_argument("--grid-min", type=float, default=0.05)
    sub.add_argument("--grid-max", type=float, default=2.0)
    sub.add_argument("--grid-points", type=int, default=64)
    _add_common(sub)
    sub.set_defaults(func=cmd_radial)

    return parser


def apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> argparse.Namespace:
    """Parse argv, then fill unset values from --config.  Unknown config
    keys are rejected; explicit flags win over file values."""
    args = parser.parse_args(argv)
    if not getattr(args, "config", None):
        return args
    try:
        with open(args.config) as handle:
            raw = json.load(handle)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    known = {k for k in vars(args)} - {"func", "config", "command"}
    unknown = [k for k in raw if k.replace("-", "_") not in known]
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    defaults = {}
    for action in parser._subparsers._group_actions[0].choices[args.command]._actions:
        if action.dest != "help":
            defaults[action.dest] = action.default
    explicit = {
        key: value for key, value in vars(args).items()
        if key in defaults and value != defaults.get(key)
    }
    for key, value in raw.items():
        dest = key.replace("-", "_")
        if dest not in explicit:
            setattr(args, dest, value)
    return args


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = apply_config(parser, sys.argv[1:] if argv is None else list(argv))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DomainError, InvariantError, SolverError, NumericalError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except RieszlabError as exc:  # pragma: no cover - safety net
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
