"""Command line entry point.

Usage::

    finsleravg <command> CONFIG.json [--output json|table] [--domain D]
               [--point I] [--direction "1,0"] [--tol T]

Exit codes: 0 every check passed, 1 mathematical failure (signature,
admissibility, degenerate metric), 2 usage or configuration error.
"""

import argparse
import json
import sys
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from . import expr as ex
from .averaging import AveragingError, InadmissibleFieldError, NotPositiveDefiniteError, average_lorentzian_metric, check_timelike_condition
from .config import ConfigError, RunConfig
from .connection import DOMAINS, average_connection, compare_levi_civita
from .finsler import (
    DegenerateMetricError,
    FiberPoint,
    SlitBundleError,
    causal_character,
    chern_batch,
    count_negative,
    verify_structure,
)
from .quadrature import EmptyHyperboloidError, sphere_grid

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(ValueError):
    pass


def jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    return obj


@dataclass
class RunReport:
    command: str
    records: list
    passed: bool
    config: dict
    version: str = __version__
    messages: list = field(default_factory=list)

    def to_dict(self):
        return jsonable(
            {
                "command": self.command,
                "version": self.version,
                "passed": self.passed,
                "messages": self.messages,
                "config": self.config,
                "records": self.records,
            }
        )

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, indent=2, allow_nan=False) + "\n"

    @classmethod
    def from_json(cls, text):
        d = json.loads(text)
        return cls(d["command"], d["records"], d["passed"], d["config"], d["version"], d["messages"])


# ---------------------------------------------------------------------------
# commands


def cmd_verify(cfg):
    lag = cfg.build_lagrangian()
    X = cfg.build_field()
    tol = cfg.tolerances
    directions, _ = sphere_grid(cfg.n - 1, cfg.verify_resolution)
    records, passed = [], True
    for i, x in enumerate(cfg.points):
        sample = [FiberPoint(x, y) for y in directions]
        rep = verify_structure(lag, sample, tol=tol["structure"], det_tol=tol["degenerate"])
        violations = []
        if not rep.passed:
            bad = rep.failures
            violations.append(
                f"structure: {len(bad)} of {len(rep.points)} directions fail ({bad[0].problems[0]} at y={bad[0].y})"
            )
        rec = {
            "index": i,
            "x": x,
            "structure": {
                "passed": rep.passed,
                "directions": len(rep.points),
                "max_homogeneity": max(p.homogeneity for p in rep.points),
                "max_euler": max(max(p.euler_gradient, p.euler_value, p.euler_quadratic) for p in rep.points),
                "negative_eigenvalues": sorted({p.n_negative for p in rep.points}),
            },
        }
        if lag.mode == "lorentzian":
            tl = check_timelike_condition(lag, X, x, cfg.quadrature.sphere_nodes, tol["timelike"])
            if not tl.passed:
                violations.append("timelike condition g_(x,y)(X,X) < 0 for all y")
            if not tl.weak_passed:
                violations.append("Finsler time orientation L(x,X(x)) < 0")
            rec["timelike"] = {
                "X": tl.X,
                "min_gXX": tl.min_gXX,
                "max_gXX": tl.max_gXX,
                "passed": tl.passed,
                "L_of_X": tl.L_of_X,
                "weak_passed": tl.weak_passed,
            }
        rec["violations"] = violations
        rec["passed"] = not violations
        passed &= rec["passed"]
        records.append(rec)
    return records, passed


def _select(cfg, point):
    if point is None:
        return list(enumerate(cfg.points))
    if not 0 <= point < len(cfg.points):
        raise UsageError(f"--point {point} out of range (config has {len(cfg.points)} points)")
    return [(point, cfg.points[point])]


def cmd_tensors(cfg, point=None, direction=None):
    lag = cfg.build_lagrangian()
    direction = direction if direction is not None else cfg.direction
    if direction is None:
        direction = [1.0] + [0.0] * (cfg.n - 1)
    if len(direction) != cfg.n:
        raise UsageError(f"direction needs {cfg.n} components")
    records = []
    for i, x in _select(cfg, 0 if point is None else point):
        try:
            p = FiberPoint(x, direction)
        except SlitBundleError as exc:
            raise UsageError(str(exc)) from None
        data = chern_batch(lag, p.x, p.y)
        records.append(
            {
                "index": i,
                "x": x,
                "y": p.y,
                "causal_character": causal_character(lag, p, cfg.tolerances["causal"]),
                "g": data.g,
                "negative_eigenvalues": int(count_negative(data.g)),
                "cartan": data.cartan,
                "N": data.N,
                "gamma": data.gamma,
            }
        )
    return records, True


def cmd_average_metric(cfg, point=None):
    lag = cfg.build_lagrangian()
    X = cfg.build_field()
    pts = _select(cfg, point)
    result = average_lorentzian_metric(
        lag, X, [x for _, x in pts], cfg.quadrature.sphere_nodes, V=cfg.build_reference_field()
    )
    records, passed = [], True
    for (i, _), r in zip(pts, result.records):
        ok = r.ell.n_negative == 1 and r.h.n_negative == 0
        passed &= ok
        records.append(
            {
                "index": i,
                "x": r.x,
                "X": r.X,
                "h": r.h.coeffs,
                "ell": r.ell.coeffs,
                "signature": {"h_negative": r.h.n_negative, "ell_negative": r.ell.n_negative},
                "margin": r.margin,
                "error_estimate": r.error_estimate,
                "quadrature": r.metadata,
                "passed": ok,
            }
        )
    return records, passed


def cmd_average_connection(cfg, domain="sphere", point=None):
    if domain not in DOMAINS:
        raise UsageError(f"unknown domain {domain!r}; choose from {DOMAINS}")
    lag = cfg.build_lagrangian()
    X = cfg.build_field()
    records = []
    for i, x in _select(cfg, point):
        res = average_connection(lag, x, domain, cfg.quadrature, orientation=X(x))
        records.append(
            {
                "index": i,
                "x": res.x,
                "domain": domain,
                "gamma": res.gamma,
                "max_torsion": float(np.max(np.abs(res.torsion))),
                "diagnostics": res.diagnostics,
                "quadrature": res.metadata,
            }
        )
    return records, True


def cmd_compare(cfg, domain=None, point=None):
    lag = cfg.build_lagrangian()
    X = cfg.build_field()
    kinds = DOMAINS if domain is None else (domain,)
    records = []
    for i, x in _select(cfg, point):
        rep = compare_levi_civita(lag, X, x, cfg.quadrature, kinds, orientation=X(x), V=cfg.build_reference_field())
        records.append(
            {
                "index": i,
                "x": rep.x,
                "metric": rep.metric,
                "levi_civita": rep.levi_civita,
                "averaged": rep.averaged,
                "max_abs_difference": rep.differences,
                "fd_step": rep.step,
            }
        )
    return records, True


COMMANDS = ("verify", "tensors", "average-metric", "average-connection", "compare")


def run(command, cfg, domain=None, point=None, direction=None):
    if command == "verify":
        records, passed = cmd_verify(cfg)
    elif command == "tensors":
        records, passed = cmd_tensors(cfg, point, direction)
    elif command == "average-metric":
        records, passed = cmd_average_metric(cfg, point)
    elif command == "average-connection":
        records, passed = cmd_average_connection(cfg, domain or "sphere", point)
    elif command == "compare":
        records, passed = cmd_compare(cfg, domain, point)
    else:
        raise UsageError(f"unknown command {command!r}")
    return RunReport(command, records, bool(passed), cfg.to_dict())


# ---------------------------------------------------------------------------
# output


def _fmt(v):
    return f"{v:.10g}"


def _table(value, indent):
    pad = " " * indent
    arr = np.asarray(value, dtype=float)
    if arr.ndim <= 1:
        return pad + "  ".join(_fmt(v) for v in np.atleast_1d(arr))
    if arr.ndim == 2:
        cells = [[_fmt(v) for v in row] for row in arr]
        width = max(len(c) for row in cells for c in row)
        return "\n".join(pad + "  ".join(c.rjust(width) for c in row) for row in cells)
    blocks = []
    for i, sub in enumerate(arr):
        blocks.append(f"{pad}[{i}]\n" + _table(sub, indent + 2))
    return "\n".join(blocks)


def _is_numeric(value):
    try:
        arr = np.asarray(value, dtype=float)
    except (TypeError, ValueError):
        return False
    return arr.ndim >= 1


def render_table(report):
    lines = [f"{report.command}: {'PASS' if report.passed else 'FAIL'}"]
    for msg in report.messages:
        lines.append(f"  ! {msg}")
    for rec in report.records:
        lines.append(f"-- point {rec.get('index')} x = [{', '.join(_fmt(v) for v in rec.get('x', []))}]")
        for key, value in rec.items():
            if key in ("index", "x"):
                continue
            _render_item(lines, key, value, 2)
    return "\n".join(lines) + "\n"


def _render_item(lines, key, value, indent):
    pad = " " * indent
    if isinstance(value, dict):
        lines.append(f"{pad}{key}:")
        for k, v in value.items():
            _render_item(lines, k, v, indent + 2)
    elif isinstance(value, (list, np.ndarray)) and _is_numeric(value) and np.asarray(value).ndim >= 2:
        lines.append(f"{pad}{key}:")
        lines.append(_table(value, indent + 2))
    elif isinstance(value, (list, np.ndarray)) and _is_numeric(value):
        lines.append(f"{pad}{key}: " + _table(value, 0))
    elif isinstance(value, (float, np.floating)):
        lines.append(f"{pad}{key}: {_fmt(value)}")
    else:
        lines.append(f"{pad}{key}: {value}")


# ---------------------------------------------------------------------------
# main


def _parser():
    p = argparse.ArgumentParser(prog="finsleravg", description="Averaged Lorentz-Finsler geometry")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("config", help="JSON config file, or '-' for stdin")
    p.add_argument("--output", choices=("json", "table"))
    p.add_argument("--domain", choices=DOMAINS)
    p.add_argument("--point", type=int)
    p.add_argument("--direction", help="comma-separated fiber coordinates")
    p.add_argument("--tol", type=float, help="override the structure tolerance")
    return p


class _ArgError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _ArgError(message)


def main(argv=None, stdout=None, stderr=None):
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = _parser()
    parser.__class__ = _Parser
    try:
        args = parser.parse_args(argv)
    except _ArgError as exc:
        print(f"usage error: {exc}", file=stderr)
        return EXIT_USAGE
    try:
        text = sys.stdin.read() if args.config == "-" else open(args.config, encoding="utf-8").read()
        cfg = RunConfig.from_json(text)
        if args.output:
            cfg.output = args.output
        if args.tol is not None:
            cfg.tolerances["structure"] = float(args.tol)
        direction = None
        if args.direction is not None:
            try:
                direction = [float(v) for v in args.direction.split(",")]
            except ValueError:
                raise UsageError(f"bad --direction {args.direction!r}") from None
        report = run(args.command, cfg, args.domain, args.point, direction)
    except (OSError, ConfigError, UsageError, ex.ExprSyntaxError) as exc:
        print(f"error: {exc}", file=stderr)
        return EXIT_USAGE
    except (
        AveragingError,
        DegenerateMetricError,
        InadmissibleFieldError,
        NotPositiveDefiniteError,
        EmptyHyperboloidError,
        ex.EvaluationError,
    ) as exc:
        print(f"mathematical failure: {exc}", file=stderr)
        return EXIT_FAIL
    stdout.write(report.to_json() if cfg.output == "json" else render_table(report))
    return EXIT_OK if report.passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())


def main_exit():
    sys.exit(main())
