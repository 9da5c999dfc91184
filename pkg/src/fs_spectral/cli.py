"""``fs-spectral`` command line.

Exit codes: 0 success, 1 numeric failure (a tolerance or condition not
met, or a library error), 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import FsError
from .functional import FsFunctional, condition_report, directional, evaluate, grad
from .minimizer import certify, minimize, newton_path
from .problems import PROBLEMS, build, reproduce
from .ps import check_ps_sequence
from .sequences import CompactEnvelope, TruncatedSequence, fmt, read_sequence_csv, write_sequence_csv
from .transforms import BasisMap

SCHEMA = 1
DEFAULT_SEED = 42


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    subcommand: str
    modes: int | None
    tol: float
    seed: int
    out: str | None


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    return obj


def dump_json(payload: dict) -> str:
    return json.dumps(_jsonable({"schema": SCHEMA, **payload}), sort_keys=True, indent=2) + "\n"


def _emit(payload: dict, out: str | None, name: str = "report.json") -> None:
    text = dump_json(payload)
    if out is None:
        sys.stdout.write(text)
        return
    path = Path(out)
    if path.suffix != ".json":
        path.mkdir(parents=True, exist_ok=True)
        path = path / name
    path.write_text(text)


def _out_dir(out: str | None) -> Path | None:
    if out is None:
        return None
    p = Path(out)
    p.mkdir(parents=True, exist_ok=True)
    return p


# -- inputs ---------------------------------------------------------------------


def _load_functional(args) -> FsFunctional:
    if getattr(args, "problem", None):
        return build(args.problem, args.modes or 64).functional
    if not getattr(args, "functional", None):
        raise UsageError("give --functional spec.json or --problem")
    spec = json.loads(Path(args.functional).read_text())
    return FsFunctional.from_spec(spec, args.modes)


def _bump(t):
    t = np.asarray(t, dtype=float)
    inside = np.abs(t) < 1.0
    out = np.zeros(t.shape)
    out[inside] = np.exp(-1.0 / (1.0 - t[inside] ** 2))
    return out


BUILTIN_FUNCTIONS = {
    "cos": np.cos,
    "sin": np.sin,
    "gauss": lambda t: np.exp(-np.asarray(t, dtype=float) ** 2),
    "bump": _bump,
    "exp": np.exp,
}


def _load_function(text: str):
    """A builtin name, ``poly:c0,c1,...`` or a CSV table with columns t,value."""
    if text in BUILTIN_FUNCTIONS:
        return BUILTIN_FUNCTIONS[text]
    if text.startswith("poly:"):
        coeffs = [float(v) for v in text[5:].split(",") if v]
        return lambda t: np.polynomial.polynomial.polyval(np.asarray(t, dtype=float), coeffs)
    path = Path(text)
    if path.suffix == ".csv" and path.exists():
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        t = np.array([float(r["t"]) for r in rows])
        v = np.array([float(r["value"]) for r in rows])
        order = np.argsort(t)
        spline = CubicSpline(t[order], v[order])
        lo, hi = t.min(), t.max()

        def table(s):
            s = np.asarray(s, dtype=float)
            return np.where((s >= lo) & (s <= hi), spline(np.clip(s, lo, hi)), 0.0)

        return table
    raise UsageError(f"unknown function {text!r}: use {', '.join(BUILTIN_FUNCTIONS)}, poly:c0,c1,... or a t,value CSV")


def _parse_ints(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise UsageError(f"bad integer list {text!r}") from exc


def _read_point_sequence(path: str) -> list[TruncatedSequence]:
    """Rows j,n,value; one point per distinct j, in increasing j."""
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise UsageError(f"{path}: no rows")
    points: dict[int, dict[int, float]] = {}
    for r in rows:
        points.setdefault(int(r["j"]), {})[int(r["n"])] = float(r["value"])
    size = max(max(p) for p in points.values())
    out = []
    for j in sorted(points):
        x = np.zeros(size)
        for n, v in points[j].items():
            x[n - 1] = v
        out.append(TruncatedSequence(x))
    return out


def write_point_sequence(path, points) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["j", "n", "value"])
        for j, p in enumerate(points):
            for n, v in enumerate(np.asarray(p.entries if hasattr(p, "entries") else p), start=1):
                w.writerow([j, n, fmt(v)])


# -- subcommands ------------------------------------------------------------------


def cmd_solve(args, cfg: RunConfig) -> int:
    F = _load_functional(args)
    env = CompactEnvelope.parse(args.envelope)
    report = minimize(F, args.tol, env)
    cert = certify(F, report)
    payload = {"command": "solve", "seed": cfg.seed, "functional": F.to_spec(), "report": report.to_dict()}
    payload["certificate"] = cert.details
    ok = report.max_residual <= args.tol
    if args.probe:
        rng = np.random.default_rng(cfg.seed)
        probe_env = CompactEnvelope()
        worst = min(evaluate(F, probe_env.sample(F.modes, rng)) - report.energy for _ in range(args.probe))
        payload["probe"] = {"samples": args.probe, "min_gap": worst}
        ok = ok and worst >= -1e-12
    out = _out_dir(args.out)
    if out is not None:
        write_sequence_csv(out / "coefficients.csv", report.minimizer, ("n", "value", "residual"), [report.residuals])
    _emit(payload, str(out) if out else None)
    return 0 if ok else 1


def cmd_eval(args, cfg: RunConfig) -> int:
    F = _load_functional(args)
    x = read_sequence_csv(args.point)
    payload = {"command": "eval", "modes": F.modes, "value": evaluate(F, x)}
    if args.direction:
        payload["directional"] = directional(F, x, read_sequence_csv(args.direction))
    _emit(payload, args.out)
    return 0


def cmd_grad(args, cfg: RunConfig) -> int:
    F = _load_functional(args)
    g = grad(F, read_sequence_csv(args.point))
    if args.out:
        write_sequence_csv(args.out, g.entries)
    else:
        sys.stdout.write("n,value\n" + "".join(f"{i},{fmt(v)}\n" for i, v in enumerate(g.entries, start=1)))
    return 0


def cmd_transform(args, cfg: RunConfig) -> int:
    L = BasisMap.parse(args.basis, args.modes or 32, args.nodes)
    if args.inverse:
        x = read_sequence_csv(args.inverse)
        lo, hi = (L.a, L.b) if math.isfinite(L.a) else (-8.0, 8.0)
        t = np.linspace(lo, hi, args.points)
        vals = L.synthesize(x.entries[: L.N], t)
        rows = "t,value\n" + "".join(f"{fmt(a)},{fmt(b)}\n" for a, b in zip(t, vals))
    else:
        x, q = L.analyze_nodes(_load_function(args.function))
        rows = "k,x_k\n" + "".join(f"{k},{fmt(v)}\n" for k, v in enumerate(x.entries, start=1))
    if args.out:
        Path(args.out).write_text(rows)
    else:
        sys.stdout.write(rows)
    return 0


def cmd_diagnose_ps(args, cfg: RunConfig) -> int:
    F = _load_functional(args)
    if args.sequence == "newton":
        points = newton_path(F, args.tol, offset=args.offset)
    else:
        points = _read_point_sequence(args.sequence)
    envelopes = [CompactEnvelope.parse(e) for e in (args.envelope or ["exp:1,1"])]
    report = check_ps_sequence(F, points, envelopes, _parse_ints(args.k))
    _emit({"command": "diagnose-ps", "points": len(points), "report": report.to_dict()}, args.out)
    return 0


def cmd_reproduce(args, cfg: RunConfig) -> int:
    rep = reproduce(args.problem, args.modes or 64, args.tol, args.grid)
    out = _out_dir(args.out)
    payload = {"command": "reproduce", "seed": cfg.seed, "grid": args.grid, **rep.to_dict()}
    if out is not None:
        write_sequence_csv(
            out / "coefficients.csv", rep.solve.minimizer, ("n", "value", "residual"), [rep.solve.residuals]
        )
        if rep.synthesis is not None:
            cols = [s.values for s in rep.synthesis.series]
            header = ["t", "u", "u1", "u2", "u3", "u4"]
            with open(out / "solution.csv", "w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(header)
                for i, t in enumerate(rep.synthesis.grid):
                    w.writerow([fmt(t), *(fmt(c[i]) for c in cols)])
    _emit(payload, str(out) if out else None)
    return 0 if rep.passed else 1


def cmd_check_conditions(args, cfg: RunConfig) -> int:
    F = _load_functional(args)
    report = condition_report(F)
    _emit({"command": "check-conditions", "report": report.to_dict(), "failures": report.failures}, args.out)
    if not report.passed:
        sys.stderr.write("failed: " + ", ".join(report.failures) + "\n")
    return 0 if report.passed else 1


# -- parser -----------------------------------------------------------------------


def _functional_args(p: argparse.ArgumentParser) -> None:
    src = p.add_mutually_exclusive_group()
    src.add_argument("--functional", help="functional spec JSON")
    src.add_argument("--problem", choices=PROBLEMS, help="builtin problem functional")
    p.add_argument("--modes", type=int, help="truncation N (overrides the spec)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fs-spectral", description="F_s-functionals on the sequence space s")
    parser.add_argument("--seed", type=int, default=DEFAULT_SEED)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="minimise a functional")
    _functional_args(p)
    p.add_argument("--tol", type=float, default=1e-12)
    p.add_argument("--envelope", default="exp:1,1")
    p.add_argument("--probe", type=int, default=0, help="random envelope points compared against F(x*)")
    p.add_argument("--out")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("eval", help="evaluate F at a point")
    _functional_args(p)
    p.add_argument("--point", required=True, help="CSV n,value")
    p.add_argument("--direction", help="CSV n,value; adds DF(x)(h)")
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("grad", help="gradient coefficients at a point")
    _functional_args(p)
    p.add_argument("--point", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_grad)

    p = sub.add_parser("transform", help="basis coefficients of a function, or the inverse")
    p.add_argument("--basis", required=True, help="fourier | hermite | sine | chebyshev[:a,b] | dab[:a,b]")
    p.add_argument("--modes", type=int)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--function", help="cos | sin | gauss | bump | exp | poly:c0,c1,... | t,value CSV")
    src.add_argument("--inverse", help="coefficient CSV n,value to synthesise")
    p.add_argument("--points", type=int, default=256)
    p.add_argument("--nodes", type=int, help="fixed quadrature node count")
    p.add_argument("--out")
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("diagnose-ps", help="Palais-Smale diagnostics for a point sequence")
    _functional_args(p)
    p.add_argument("--sequence", required=True, help="CSV j,n,value, or 'newton' for the solver path")
    p.add_argument("--envelope", action="append")
    p.add_argument("--k", default="0,1,2")
    p.add_argument("--tol", type=float, default=1e-12)
    p.add_argument("--offset", type=float, default=1.0, help="start shift for --sequence newton")
    p.add_argument("--out")
    p.set_defaults(func=cmd_diagnose_ps)

    p = sub.add_parser("reproduce", help="solve and synthesise a builtin problem")
    p.add_argument("--problem", required=True, choices=PROBLEMS)
    p.add_argument("--modes", type=int, default=64)
    p.add_argument("--tol", type=float, default=1e-12)
    p.add_argument("--grid", type=int, default=256)
    p.add_argument("--out")
    p.set_defaults(func=cmd_reproduce)

    p = sub.add_parser("check-conditions", help="structural condition report")
    _functional_args(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_check_conditions)
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else 2
    cfg = RunConfig(args.command, getattr(args, "modes", None), getattr(args, "tol", 1e-12), args.seed, getattr(args, "out", None))
    try:
        return args.func(args, cfg)
    except FsError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1
    except (UsageError, ValueError, KeyError, OSError) as exc:
        parser.print_usage(sys.stderr)
        sys.stderr.write(f"error: {exc}\n")
        return 2


def main() -> None:
    sys.exit(run())
