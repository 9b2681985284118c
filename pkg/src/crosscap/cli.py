"""Command line front end.

Subcommands: analyze (full pipeline to a JSON report), selfint (trace the
self-intersection curve to CSV), mesh (sample the surface to CSV),
transport (apply a congruence motion to the computed normal form), and
classify (symmetry verdicts only).

Requests live in a JSON file (--map); command line flags override its
fields.  Reports are byte-stable: fixed field order and fixed float
formatting with 17 significant digits.  Exit codes: 0 success, 1 input
error, 2 no result.
"""

from __future__ import annotations

import argparse
import itertools
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .double_points import (
    curve_to_csv,
    trace_double_points,
    transversality_check,
)
from .errors import (
    ContractViolationError,
    CrossCapError,
    DegenerateFrameError,
    JetDomainError,
    NotInvertibleError,
    NotSingularPointError,
    ParseError,
    RankZeroError,
    SeedFailureError,
    SolveInconsistentError,
    StepCollapseError,
    SymmetryAbsentError,
    UnboundParameterError,
    WhitneyFailError,
)
from .expressions import eval_map_point, parse_map_definition
from .locate import align_kernel, find_singular_points
from .normal_form import (
    MAX_ORDER,
    CongruenceMotion,
    characteristic_invariants,
    reduce_to_normal_form,
    transport_normal_form,
)
from .symmetry import classify_symmetries

TANGENCY_ANGLE = 1e-3

_DEFAULTS = {
    "order": 6,
    "grid": 20,
    "box": [-1.0, 1.0, -1.0, 1.0],
    "tol_singular": 1e-9,
    "tol_symmetry": 1e-8,
    "span": 1.0,
    "step": 0.01,
}


class _InputError(Exception):
    """Invalid request or flags; maps to E_PARSE and exit code 1."""


def _error_code(exc: Exception) -> str:
    if isinstance(exc, (ParseError, UnboundParameterError, JetDomainError)):
        return "E_PARSE"
    if isinstance(exc, (NotSingularPointError, RankZeroError)):
        return "E_NOT_CROSSCAP"
    if isinstance(exc, WhitneyFailError):
        return "E_WHITNEY"
    if isinstance(
        exc, (SolveInconsistentError, NotInvertibleError, DegenerateFrameError)
    ):
        return "E_SOLVE"
    if isinstance(exc, (SeedFailureError, StepCollapseError)):
        return "E_SEED"
    return "E_PARSE"


# -- stable serialization ------------------------------------------------------


def _fmt_float(x: float) -> str:
    x = float(x)
    if not np.isfinite(x):
        raise ContractViolationError("report fields must be finite")
    if x == 0.0:
        x = 0.0  # normalize -0.0
    return format(x, ".17g")


def _serialize(value, indent: int = 0) -> str:
    pad = "  " * indent
    if isinstance(value, dict):
        if not value:
            return "{}"
        rows = [
            f'{pad}  {json.dumps(str(key))}: {_serialize(item, indent + 1)}'
            for key, item in value.items()
        ]
        return "{\n" + ",\n".join(rows) + f"\n{pad}}}"
    if isinstance(value, (list, tuple)):
        items = list(value)
        if not items:
            return "[]"
        if all(isinstance(x, (int, float, np.integer, np.floating)) for x in items):
            return "[" + ", ".join(_serialize(x) for x in items) + "]"
        rows = [f"{pad}  {_serialize(item, indent + 1)}" for item in items]
        return "[\n" + ",\n".join(rows) + f"\n{pad}]"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return _fmt_float(value)
    if isinstance(value, str):
        return json.dumps(value)
    if value is None:
        return "null"
    raise TypeError(f"cannot serialize {type(value).__name__}")


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _emit_error(code: str, message: str, out: str | None) -> None:
    payload = _serialize({"error": {"code": code, "message": message}}) + "\n"
    _emit(payload, out)
    print(f"error [{code}]: {message}", file=sys.stderr)


# -- request handling ----------------------------------------------------------


def _parse_number_list(text: str, count: int, what: str) -> list[float]:
    parts = text.split(",")
    if len(parts) != count:
        raise _InputError(f"{what} needs {count} comma-separated numbers: {text!r}")
    try:
        return [float(p) for p in parts]
    except ValueError:
        raise _InputError(f"{what} has a non-numeric entry: {text!r}") from None


def _parse_param_flag(text: str) -> tuple[str, float | list[float]]:
    if "=" not in text:
        raise _InputError(f"--param expects name=value, got {text!r}")
    name, _, raw = text.partition("=")
    name = name.strip()
    if not name:
        raise _InputError(f"--param expects name=value, got {text!r}")
    try:
        values = [float(p) for p in raw.split(",")]
    except ValueError:
        raise _InputError(f"--param {name}: non-numeric value {raw!r}") from None
    return name, values[0] if len(values) == 1 else values


def _load_request(args: argparse.Namespace) -> dict:
    raw: dict = {}
    if args.map:
        path = Path(args.map)
        if not path.exists():
            raise _InputError(f"map file not found: {args.map}")
        try:
            raw = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise _InputError(f"map file is not valid JSON: {exc}") from None
        if not isinstance(raw, dict):
            raise _InputError("map file must contain a JSON object")
    else:
        raise _InputError("--map FILE is required")

    components = raw.get("components")
    if (
        not isinstance(components, list)
        or len(components) != 3
        or not all(isinstance(c, str) for c in components)
    ):
        raise _InputError('request "components" must be a list of three strings')

    parameters = dict(raw.get("parameters") or {})
    for name, value in getattr(args, "param", None) or []:
        parameters[name] = value
    for name, value in parameters.items():
        ok_scalar = isinstance(value, (int, float)) and not isinstance(value, bool)
        ok_list = isinstance(value, list) and all(
            isinstance(x, (int, float)) and not isinstance(x, bool) for x in value
        )
        if not (ok_scalar or ok_list):
            raise _InputError(f"parameter {name!r} must be a number or number list")

    tolerances = dict(raw.get("tolerances") or {})
    request = {
        "components": components,
        "parameters": parameters,
        "order": args.order if args.order is not None else raw.get("order", _DEFAULTS["order"]),
        "point": raw.get("point"),
        "box": raw.get("box"),
        "grid": args.grid if args.grid is not None else raw.get("grid", _DEFAULTS["grid"]),
        "tolerances": {
            "singular": tolerances.get("singular", _DEFAULTS["tol_singular"]),
            "symmetry": tolerances.get("symmetry", _DEFAULTS["tol_symmetry"]),
        },
        "outputs": list(raw.get("outputs") or ["report"]),
        "span": raw.get("span", _DEFAULTS["span"]),
        "step": raw.get("step", _DEFAULTS["step"]),
    }
    if args.point is not None:
        request["point"] = _parse_number_list(args.point, 2, "--point")
    if args.box is not None:
        request["box"] = _parse_number_list(args.box, 4, "--box")
    if request["box"] is None:
        request["box"] = list(_DEFAULTS["box"])
    if args.tol_singular is not None:
        request["tolerances"]["singular"] = args.tol_singular
    if args.tol_symmetry is not None:
        request["tolerances"]["symmetry"] = args.tol_symmetry
    if getattr(args, "span", None) is not None:
        request["span"] = args.span
    if getattr(args, "step", None) is not None:
        request["step"] = args.step

    order = request["order"]
    if not isinstance(order, int) or not (3 <= order <= MAX_ORDER):
        raise _InputError(f"order must be an integer in [3, {MAX_ORDER}], got {order!r}")
    grid = request["grid"]
    if not isinstance(grid, int) or grid < 2:
        raise _InputError(f"grid must be an integer >= 2, got {grid!r}")
    box = request["box"]
    if (
        not isinstance(box, list)
        or len(box) != 4
        or not all(isinstance(x, (int, float)) for x in box)
    ):
        raise _InputError("box must be four numbers [umin, umax, vmin, vmax]")
    if not (box[0] < box[1] and box[2] < box[3]):
        raise _InputError("box must satisfy umin < umax and vmin < vmax")
    request["box"] = [float(x) for x in box]
    point = request["point"]
    if point is not None:
        if not (
            isinstance(point, list)
            and len(point) == 2
            and all(isinstance(x, (int, float)) for x in point)
        ):
            raise _InputError("point must be two numbers [u, v]")
        request["point"] = [float(x) for x in point]
    for key in ("singular", "symmetry"):
        tol = request["tolerances"][key]
        if not isinstance(tol, (int, float)) or tol <= 0.0:
            raise _InputError(f"tolerance {key!r} must be positive")
        request["tolerances"][key] = float(tol)
    for key in ("span", "step"):
        val = request[key]
        if not isinstance(val, (int, float)) or val <= 0.0:
            raise _InputError(f"{key} must be positive")
        request[key] = float(val)
    return request


def _sweep_combinations(parameters: dict) -> list[dict[str, float]]:
    """Cartesian product over list-valued parameters, ordered by name."""
    names = sorted(parameters)
    pools = []
    for name in names:
        value = parameters[name]
        pools.append([float(x) for x in value] if isinstance(value, list) else [float(value)])
    return [dict(zip(names, combo)) for combo in itertools.product(*pools)]


def _require_scalar_parameters(request: dict, command: str) -> dict[str, float]:
    combos = _sweep_combinations(request["parameters"])
    if len(combos) != 1:
        raise _InputError(f"{command} does not support parameter sweeps")
    return combos[0]


# -- report assembly -----------------------------------------------------------


def _vector(arr) -> list[float]:
    return [float(x) for x in np.asarray(arr).reshape(-1)]


def _symmetry_payload(report) -> dict:
    verdicts = {}
    for j in (1, 2, 3):
        verdict = report.verdicts[j]
        verdicts[f"T{j}"] = {
            "holds": verdict.holds,
            "residual": verdict.residual,
            "condition": verdict.condition_text,
        }
    return {
        "order": report.order,
        "tolerance": report.residual_tolerance,
        "verdicts": verdicts,
    }


def _cross_cap_payload(cert, nf, sym_report) -> dict:
    a_list = []
    n = nf.working_order
    for degree in range(n + 1):
        for j in range(degree, -1, -1):
            a_list.append({"j": j, "k": degree - j, "value": nf.a[j, degree - j]})
    b_list = [{"k": k, "value": nf.b[k]} for k in range(3, n + 1)]
    return {
        "point": [cert.point[0], cert.point[1]],
        "residual": cert.residual,
        "kernel_angle": cert.kernel_angle,
        "whitney_det": cert.whitney_det,
        "frame": {
            "origin": _vector(nf.frame.origin),
            "e1": _vector(nf.frame.e1),
            "e2": _vector(nf.frame.e2),
            "e3": _vector(nf.frame.e3),
        },
        "a_coefficients": a_list,
        "b_coefficients": b_list,
        "invariants": characteristic_invariants(nf),
        "reconstruction_residual": nf.reconstruction_residual,
        "symmetry": _symmetry_payload(sym_report),
    }


def _candidate_points(defn, request, combo) -> tuple[list, list]:
    """Explicit point or grid search results, plus any warnings."""
    if request["point"] is not None:
        return [tuple(request["point"])], []
    candidates = find_singular_points(
        defn,
        tuple(request["box"]),
        request["grid"],
        request["tolerances"]["singular"],
        combo,
    )
    if not candidates:
        return [], [
            {
                "code": "E_SEED",
                "message": "no singular points found in the search box",
            }
        ]
    return [c.point for c in candidates], []


def _analyze_entry(defn, request, combo, trim: str | None = None, motion=None) -> dict:
    """Run locate + certify + reduce + classify for one parameter binding."""
    warnings: list[dict] = []
    cross_caps: list[dict] = []
    points, warnings_seed = _candidate_points(defn, request, combo)
    warnings.extend(warnings_seed)
    for point in points:
        try:
            cert = align_kernel(
                defn,
                point,
                request["order"],
                request["tolerances"]["singular"],
                combo,
            )
            nf = reduce_to_normal_form(cert, request["order"])
            sym_report = classify_symmetries(nf, request["tolerances"]["symmetry"])
        except CrossCapError as exc:
            warnings.append(
                {
                    "code": _error_code(exc),
                    "message": f"point ({point[0]:.6g}, {point[1]:.6g}): {exc}",
                }
            )
            continue
        payload = _cross_cap_payload(cert, nf, sym_report)
        if trim == "classify":
            payload = {
                "point": payload["point"],
                "whitney_det": payload["whitney_det"],
                "symmetry": payload["symmetry"],
            }
        elif trim == "transport":
            moved = transport_normal_form(nf, motion)
            moved_inv = characteristic_invariants(moved)
            base_inv = payload["invariants"]
            diff = max(
                abs(base_inv[key] - moved_inv[key]) for key in base_inv
            ) / max(1.0, max(abs(x) for x in base_inv.values()))
            transported = {
                "motion": motion.tag,
                "invariants": moved_inv,
                "fixed_point": diff <= request["tolerances"]["symmetry"],
                "difference": diff,
            }
            payload = {
                "point": payload["point"],
                "whitney_det": payload["whitney_det"],
                "invariants": payload["invariants"],
                "transported": transported,
            }
        cross_caps.append(payload)
    return {
        "parameters": combo,
        "status": "ok" if cross_caps else "no_cross_cap",
        "cross_caps": cross_caps,
        "warnings": warnings,
    }


def _request_echo(request: dict) -> dict:
    return {
        "components": request["components"],
        "parameters": request["parameters"],
        "order": request["order"],
        "point": request["point"],
        "box": request["box"],
        "grid": request["grid"],
        "tolerances": {
            "singular": request["tolerances"]["singular"],
            "symmetry": request["tolerances"]["symmetry"],
        },
        "outputs": request["outputs"],
        "span": request["span"],
        "step": request["step"],
    }


def _run_report_command(args, trim: str | None = None) -> int:
    request = _load_request(args)
    motion = None
    if trim == "transport":
        motion = CongruenceMotion.from_tag(args.motion)
    defn = parse_map_definition(request["components"], {}, request["order"])
    entries = []
    certified = 0
    for combo in _sweep_combinations(request["parameters"]):
        entry = _analyze_entry(defn, request, combo, trim=trim, motion=motion)
        certified += len(entry["cross_caps"])
        entries.append(entry)
    report = {
        "version": __version__,
        "request": _request_echo(request),
        "entries": entries,
    }
    _emit(_serialize(report) + "\n", args.out)
    return 0 if certified > 0 else 2


def cmd_analyze(args) -> int:
    return _run_report_command(args, trim=None)


def cmd_classify(args) -> int:
    return _run_report_command(args, trim="classify")


def cmd_transport(args) -> int:
    return _run_report_command(args, trim="transport")


def cmd_selfint(args) -> int:
    request = _load_request(args)
    defn = parse_map_definition(request["components"], {}, request["order"])
    combo = _require_scalar_parameters(request, "selfint")
    points, seed_warnings = _candidate_points(defn, request, combo)
    if not points:
        message = seed_warnings[0]["message"] if seed_warnings else "no seed"
        _emit_error("E_SEED", message, None)
        return 2
    try:
        cert = align_kernel(
            defn,
            points[0],
            request["order"],
            request["tolerances"]["singular"],
            combo,
        )
        curve = trace_double_points(
            defn, cert, request["span"], request["step"], combo
        )
    except CrossCapError as exc:
        _emit_error(_error_code(exc), str(exc), None)
        return 2
    angles = transversality_check(defn, curve, combo)
    if angles.size and float(angles.min()) < TANGENCY_ANGLE:
        print(
            f"warning: near-tangential sheets (min angle {angles.min():.3e} rad)",
            file=sys.stderr,
        )
    _emit(curve_to_csv(curve), args.out)
    return 0


def cmd_mesh(args) -> int:
    request = _load_request(args)
    defn = parse_map_definition(request["components"], {}, request["order"])
    combo = _require_scalar_parameters(request, "mesh")
    umin, umax, vmin, vmax = request["box"]
    grid = request["grid"]
    lines = ["u,v,x,y,z"]
    for u in np.linspace(umin, umax, grid):
        for v in np.linspace(vmin, vmax, grid):
            image = eval_map_point(defn, float(u), float(v), combo)
            fields = (float(u), float(v), image[0], image[1], image[2])
            lines.append(",".join(_fmt_float(x) for x in fields))
    _emit("\n".join(lines) + "\n", args.out)
    return 0


# -- argument parsing ----------------------------------------------------------


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        raise _InputError(message)


def _add_common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--map", metavar="FILE", help="request JSON file")
    parser.add_argument("--order", type=int, default=None, metavar="N")
    parser.add_argument("--point", default=None, metavar="U,V")
    parser.add_argument("--box", default=None, metavar="UMIN,UMAX,VMIN,VMAX")
    parser.add_argument("--grid", type=int, default=None, metavar="N")
    parser.add_argument("--tol-singular", type=float, default=None, metavar="X")
    parser.add_argument("--tol-symmetry", type=float, default=None, metavar="X")
    parser.add_argument("--out", default=None, metavar="FILE")
    parser.add_argument(
        "--param",
        action="append",
        type=_parse_param_flag,
        default=None,
        metavar="NAME=VALUE",
        help="bind a parameter; comma lists sweep (repeatable)",
    )


def _build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(
        prog="crosscap",
        description="cross cap normal forms, invariants, symmetries and "
        "self-intersection curves",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, func, extra in (
        ("analyze", cmd_analyze, ()),
        ("selfint", cmd_selfint, ("span", "step")),
        ("mesh", cmd_mesh, ()),
        ("transport", cmd_transport, ("motion",)),
        ("classify", cmd_classify, ()),
    ):
        p = sub.add_parser(name)
        _add_common_flags(p)
        if "span" in extra:
            p.add_argument("--span", type=float, default=None, metavar="X")
            p.add_argument("--step", type=float, default=None, metavar="X")
        if "motion" in extra:
            p.add_argument(
                "--motion",
                required=True,
                choices=["T0", "T1", "T2", "T3"],
                help="congruence motion to apply",
            )
        p.set_defaults(func=func)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except _InputError as exc:
        _emit_error("E_PARSE", str(exc), None)
        return 1
    except (ParseError, UnboundParameterError, JetDomainError) as exc:
        _emit_error("E_PARSE", str(exc), None)
        return 1
    except ContractViolationError as exc:
        _emit_error("E_PARSE", str(exc), None)
        return 1
    except SymmetryAbsentError as exc:
        _emit_error("E_SOLVE", str(exc), None)
        return 2


if __name__ == "__main__":
    sys.exit(main())
