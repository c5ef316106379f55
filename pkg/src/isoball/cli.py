"""Command-line front end. Every command prints one JSON report.

Exit codes: 0 all checks pass, 1 a check failed, 2 invalid input, 3 a numeric
operation rejected its input.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys

import numpy as np

from . import __version__
from .domains import KernelSpec, bergman_kernel, det_minor_expansion, kahler_potential
from .errors import Rejection
from .maps import IsometryMap, map_from_json
from .monodromy import branch_points, sheeting_report
from .solver import UnitaryMatrix, solve_isometry, u_zeta, unitary_map_from_json
from .verify import (
    DEFAULT_RADII,
    check_functional_equation,
    check_metric_pullback,
    check_polarized,
    check_properness,
    check_series_solution,
    congruence_test,
    polarized_pairs,
    rational_rigidity_check,
    sample_grid,
)

SCHEMA = "isoball/1"
COMMANDS = ("construct", "solve", "verify", "polarize", "metric", "proper", "sheeting", "congruence",
            "kernel-check", "rigidity")


class ValidationError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        _emit({"schema": SCHEMA, "error": {"type": "validation", "message": message}}, None)
        sys.exit(2)


def jsonable(obj):
    """Recursively convert numpy and complex values; non-finite floats become null."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (complex, np.complexfloating)):
        return [jsonable(float(obj.real)), jsonable(float(obj.imag))]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj) if math.isfinite(obj) else None
    return obj


def _emit(report: dict, path: str | None) -> None:
    text = json.dumps(jsonable(report), indent=2, sort_keys=True) + "\n"
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _load_json(text: str, what: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"malformed JSON for {what}: {exc}") from None


def _complex(v, what: str) -> complex:
    if isinstance(v, (list, tuple)) and len(v) == 2:
        return complex(float(v[0]), float(v[1]))
    if isinstance(v, (int, float)):
        return complex(v)
    if isinstance(v, str):
        try:
            return complex(v.replace(" ", ""))
        except ValueError:
            pass
    raise ValidationError(f"{what} must be a number, [re, im] or a complex literal, got {v!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="isoball", description="Holomorphic isometries from the disk into product domains.")
    parser.add_argument("--version", action="version", version=f"isoball {__version__}")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--input", help="JSON request file, or - for stdin; flags override its fields")
    parser.add_argument("--map", help="map descriptor JSON")
    parser.add_argument("--other", help="second map descriptor JSON (congruence)")
    parser.add_argument("--zeta", help="parameter of the explicit 3x3 unitary family")
    parser.add_argument("--unitary", help="unitary matrix as row-major [[re, im], ...] JSON")
    parser.add_argument("--kernel", help="kernel descriptor JSON (kernel-check)")
    parser.add_argument("--order", type=int, help="series truncation order (default 64)")
    parser.add_argument("--constants", help="conformal constants of the target factors, JSON list")
    parser.add_argument("--k", type=float, help="source normalizing constant")
    parser.add_argument("--components", help="component indices for proper, JSON list")
    parser.add_argument("--samples", type=int, help="sample count (default 500)")
    parser.add_argument("--radius", type=float, help="sampling radius")
    parser.add_argument("--tol", type=float, help="pass tolerance")
    parser.add_argument("--output", help="write the report to this path instead of stdout")
    parser.add_argument("--emit-samples", dest="emit_samples", help="CSV dump of (w, residual) pairs")
    return parser


def _config(args) -> dict:
    cfg: dict = {}
    if args.input:
        text = sys.stdin.read() if args.input == "-" else _read(args.input)
        doc = _load_json(text, "--input")
        if not isinstance(doc, dict):
            raise ValidationError("--input must hold a JSON object")
        cfg.update(doc)
    for key in ("map", "other", "unitary", "kernel", "constants", "components"):
        value = getattr(args, key)
        if value is not None:
            cfg[key] = _load_json(value, f"--{key}")
    if args.zeta is not None:
        cfg["zeta"] = args.zeta
    for key in ("order", "k", "samples", "radius", "tol"):
        value = getattr(args, key)
        if value is not None:
            cfg[key] = value
    return cfg


def _read(path: str) -> str:
    try:
        with open(path) as fh:
            return fh.read()
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc}") from None


def _map(cfg: dict, key: str = "map") -> IsometryMap:
    if key not in cfg:
        raise ValidationError(f"missing {key} descriptor")
    try:
        return map_from_json(cfg[key])
    except Rejection:
        raise
    except (ValueError, KeyError, TypeError) as exc:
        raise ValidationError(f"bad {key} descriptor: {exc}") from None


def _space(f: IsometryMap, cfg: dict):
    if "constants" not in cfg:
        return f.target
    c = cfg["constants"]
    if not isinstance(c, list) or len(c) != len(f.target.factors):
        raise ValidationError(f"constants must be a list of {len(f.target.factors)} numbers")
    try:
        return f.target.with_constants([float(x) for x in c])
    except (ValueError, TypeError) as exc:
        raise ValidationError(str(exc)) from None


def _int(cfg: dict, key: str, default: int, minimum: int = 1) -> int:
    v = cfg.setdefault(key, default)
    if not isinstance(v, int) or isinstance(v, bool) or v < minimum:
        raise ValidationError(f"{key} must be an integer >= {minimum}")
    return v


def _float(cfg: dict, key: str, default: float) -> float:
    v = cfg.setdefault(key, default)
    if not isinstance(v, (int, float)) or isinstance(v, bool) or not math.isfinite(v):
        raise ValidationError(f"{key} must be a finite number")
    return float(v)


def _unitary(cfg: dict):
    if "zeta" in cfg:
        zeta = _complex(cfg["zeta"], "zeta")
        cfg["zeta"] = [zeta.real, zeta.imag]
        return u_zeta(zeta), zeta
    if "unitary" in cfg:
        try:
            return UnitaryMatrix.from_json(cfg["unitary"]), None
        except Rejection:
            raise
        except (ValueError, TypeError, IndexError) as exc:
            raise ValidationError(f"bad unitary matrix: {exc}") from None
    raise ValidationError("solve needs --zeta or --unitary")


def _write_samples(path: str, points, residuals) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["w_re", "w_im", "residual"])
        for w, r in zip(points, residuals):
            w = complex(w[0] if np.ndim(w) else w)
            writer.writerow([repr(w.real), repr(w.imag), repr(float(r))])


# commands -----------------------------------------------------------------------

def cmd_construct(cfg):
    f = _map(cfg)
    try:
        bp = branch_points(f)
    except Rejection:
        bp = None
    fe = check_functional_equation(f, tol=_float(cfg, "tol", 1e-10), samples=_int(cfg, "samples", 500))
    return {
        "map": f.to_json(),
        "target": f.target.to_json(),
        "source_constant": f.source_constant,
        "dim": f.dim,
        "branch_points": None if bp is None else sorted(bp, key=lambda z: (round(z.real, 12), round(z.imag, 12))),
        "functional_equation": fe.to_json(),
    }, fe.passed, fe


def cmd_solve(cfg):
    U, zeta = _unitary(cfg)
    order = _int(cfg, "order", 64, minimum=2)
    tol = _float(cfg, "tol", 1e-8)
    solved = solve_isometry(U, order)
    pointwise = check_series_solution(solved, samples=_int(cfg, "samples", 500),
                                      radius=_float(cfg, "radius", 0.7), tol=tol)
    ok = solved.coefficient_residual <= 1e-10 and pointwise.passed
    return {"solved": solved.to_json(), "pointwise": pointwise.to_json()}, ok, pointwise


def cmd_verify(cfg):
    f = _map(cfg)
    space = _space(f, cfg)
    k = _float(cfg, "k", f.source_constant)
    rep = check_functional_equation(f, space, k=k, samples=_int(cfg, "samples", 500), tol=_float(cfg, "tol", 1e-10),
                                    radius=_float(cfg, "radius", 0.9))
    return rep.to_json(), rep.passed, rep


def cmd_polarize(cfg):
    f = _map(cfg)
    space = _space(f, cfg)
    k = _float(cfg, "k", f.source_constant)
    pairs = polarized_pairs(_int(cfg, "samples", 500), radius=_float(cfg, "radius", 0.6))
    rep = check_polarized(f, space, pairs, k=k, tol=_float(cfg, "tol", 1e-10))
    return rep.to_json(), rep.passed, rep


def cmd_metric(cfg):
    f = _map(cfg)
    space = _space(f, cfg)
    k = _float(cfg, "k", f.source_constant)
    pts = sample_grid(_int(cfg, "samples", 500), _float(cfg, "radius", 0.8))
    rep = check_metric_pullback(f, space, pts, k=k, tol=_float(cfg, "tol", 1e-5))
    return rep.to_json(), rep.passed, rep


def cmd_proper(cfg):
    f = _map(cfg)
    comps = cfg.setdefault("components", list(range(f.dim)))
    if not isinstance(comps, list) or not comps or any(not isinstance(c, int) or not 0 <= c < f.dim for c in comps):
        raise ValidationError(f"components must be a non-empty list of indices below {f.dim}")
    radii = cfg.setdefault("radii", list(DEFAULT_RADII))
    rep = check_properness(lambda w: f(w)[..., comps], radii, gate=_float(cfg, "tol", 0.01))
    return rep.to_json(), rep.proper, None


def cmd_sheeting(cfg):
    f = _map(cfg)
    k = _float(cfg, "k", f.source_constant)
    rep = sheeting_report(f, k)
    ok = not rep.orbit_overflow and all(rep.identities.values())
    return rep.to_json(), ok, None


def _solved_map(cfg, key):
    doc = cfg.get(key)
    if not isinstance(doc, dict) or doc.get("kind") != "unitary":
        raise ValidationError(f"{key} must be a unitary map descriptor")
    try:
        return unitary_map_from_json(doc)
    except Rejection:
        raise
    except (ValueError, TypeError, IndexError) as exc:
        raise ValidationError(f"bad {key} descriptor: {exc}") from None


def cmd_congruence(cfg):
    verdict = congruence_test(_solved_map(cfg, "map"), _solved_map(cfg, "other"))
    return verdict.to_json(), verdict.verdict != "inconclusive", None


def _random_point(spec: KernelSpec, rng: np.random.Generator) -> np.ndarray:
    z = rng.normal(size=spec.dim) + 1j * rng.normal(size=spec.dim)
    if spec.kind == "type1":
        p, q = spec.shape
        z = z / np.linalg.norm(z.reshape(p, q), 2)
    elif spec.kind == "polydisk":
        return rng.uniform(0, 0.95, spec.dim) * np.exp(2j * np.pi * rng.uniform(size=spec.dim))
    else:
        z = z / np.linalg.norm(z)
    scale = 0.7 if spec.kind == "type4" else 0.95
    return rng.uniform(0, scale) * z


def cmd_kernel_check(cfg):
    if "kernel" not in cfg:
        raise ValidationError("missing kernel descriptor")
    try:
        spec = KernelSpec.from_json(cfg["kernel"])
    except Rejection:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"bad kernel descriptor: {exc}") from None
    count = _int(cfg, "samples", 200)
    tol = _float(cfg, "tol", 1e-12)
    seed = _int(cfg, "seed", 0, minimum=0)
    rng = np.random.default_rng(seed)
    residuals = []
    for _ in range(count):
        Z = _random_point(spec, rng)
        if spec.kind == "type1":
            lhs, rhs = det_minor_expansion(Z.reshape(spec.shape))
            residuals.append(abs(lhs - rhs))
        else:
            # kernel must equal c_D * exp(-m * potential)
            K = bergman_kernel(spec, Z)
            phi = kahler_potential(spec, Z)
            residuals.append(abs(K - spec.c_D * math.exp(-spec.exponent * phi)) / K)
    origin = np.zeros(spec.dim, dtype=complex)
    ok = max(residuals) <= tol and abs(kahler_potential(spec, origin)) <= tol
    report = {
        "check": "kernel",
        "kernel": spec.to_json(),
        "exponent": spec.exponent,
        "identity": "det minor expansion" if spec.kind == "type1" else "kernel vs potential",
        "tolerance": tol,
        "max_residual": max(residuals),
        "mean_residual": float(np.mean(residuals)),
        "sample_count": count,
        "potential_at_origin": kahler_potential(spec, origin),
        "pass": ok,
    }
    return report, ok, None


def cmd_rigidity(cfg):
    f = _map(cfg)
    rep = rational_rigidity_check(f, _space(f, cfg), tol=_float(cfg, "tol", 1e-10))
    ok = not rep["contradiction"] and rep["verdict"] != "undetermined"
    return rep, ok, None


HANDLERS = {
    "construct": cmd_construct,
    "solve": cmd_solve,
    "verify": cmd_verify,
    "polarize": cmd_polarize,
    "metric": cmd_metric,
    "proper": cmd_proper,
    "sheeting": cmd_sheeting,
    "congruence": cmd_congruence,
    "kernel-check": cmd_kernel_check,
    "rigidity": cmd_rigidity,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    envelope = {"schema": SCHEMA, "command": args.command}
    try:
        cfg = _config(args)
        result, ok, residual_report = HANDLERS[args.command](cfg)
    except ValidationError as exc:
        envelope["error"] = {"type": "validation", "message": str(exc)}
        _emit(envelope, args.output)
        return 2
    except Rejection as exc:
        envelope["error"] = {"type": "rejection", "operation": exc.operation, "message": exc.reason}
        _emit(envelope, args.output)
        return 3
    envelope.update(config=cfg, report=result, **{"pass": bool(ok)})
    if args.emit_samples:
        if residual_report is None or residual_report.samples is None:
            envelope["error"] = {"type": "validation", "message": f"--emit-samples is not available for {args.command}"}
            _emit(envelope, args.output)
            return 2
        _write_samples(args.emit_samples, residual_report.samples, residual_report.residuals)
        envelope["samples_csv"] = args.emit_samples
    _emit(envelope, args.output)
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
