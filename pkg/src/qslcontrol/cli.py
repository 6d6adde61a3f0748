"""
Command-line front end.

Every run writes its data files together with a ``<run>.manifest.json``
holding the resolved configuration, the library version, the seed and a
sha256 of each data file. Nothing time dependent is written, so rerunning a
command with the same flags reproduces the files byte for byte.

Exit codes: 0 ok, 1 failed property (``verify``), 2 usage error,
3 numeric invariant violation.
"""

import argparse
import csv
import hashlib
import json
import logging
import math
import sys
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from . import __version__
from .grape_mct import OptimizeOptions, mct_sweep, optimize
from .lie_toolkit import generate_algebra
from .models import PhaseControlModel, spin_model, su2_model, su3_model, target_for
from .qsl_bounds import classical_limit_table, model_qsl, spinj_phi_perp
from .short_time import short_time_bound

log = logging.getLogger(__name__)

EXIT_OK, EXIT_PROPERTY, EXIT_USAGE, EXIT_INVARIANT = 0, 1, 2, 3

BOUNDS_COLUMNS = ["phi", "s1", "s2", "tau1", "tau2", "tau_unified", "short_time"]
SWEEP_COLUMNS = ["T", "best_J"]
CLASSICAL_COLUMNS = ["J", "phi_perp", "tau2"]


class UsageError(ValueError):
    pass


# =============================================================================
# Parsing helpers
# =============================================================================

def parse_grid(text: str, name: str = "grid") -> List[float]:
    """``start:stop:step`` (stop included), a comma list, or a single number."""
    try:
        if ":" in text:
            parts = [float(p) for p in text.split(":")]
            if len(parts) != 3:
                raise UsageError(f"{name} range must be start:stop:step")
            start, stop, step = parts
            if step <= 0:
                raise UsageError(f"{name} step must be positive")
            n = int(math.floor((stop - start) / step + 1e-9)) + 1
            vals = [round(start + k * step, 12) for k in range(max(n, 0))]
        else:
            vals = [float(p) for p in text.split(",") if p.strip()]
    except ValueError as exc:
        if isinstance(exc, UsageError):
            raise
        raise UsageError(f"cannot parse {name} {text!r}") from exc
    if not vals:
        raise UsageError(f"{name} {text!r} is empty")
    return vals


def build_model(name: str, j: Optional[float]) -> PhaseControlModel:
    if name == "su2":
        return su2_model()
    if name == "su3":
        return su3_model()
    if name == "spinJ":
        if j is None:
            raise UsageError("--model spinJ needs --j")
        return spin_model(j)
    raise UsageError(f"unknown model {name!r}")


def _fmt(x) -> str:
    if x is None or (isinstance(x, float) and not math.isfinite(x)):
        return ""
    return repr(float(x))


def _clean(x):
    """JSON-safe copy: non-finite floats become null."""
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, (float, np.floating)):
        return float(x) if math.isfinite(x) else None
    if isinstance(x, np.integer):
        return int(x)
    return x


# =============================================================================
# Output
# =============================================================================

class RunWriter:
    """Collects the files of one run and writes the manifest last."""

    def __init__(self, out_dir: Path, run_name: str, config: dict):
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.run_name = run_name
        self.config = config
        self.files: Dict[str, str] = {}

    def _record(self, path: Path) -> Path:
        self.files[path.name] = hashlib.sha256(path.read_bytes()).hexdigest()
        return path

    def csv(self, name: str, columns: Sequence[str], rows: Sequence[Sequence]) -> Path:
        path = self.out_dir / name
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(columns)
            for r in rows:
                w.writerow([_fmt(v) if isinstance(v, (float, np.floating)) or v is None else v for v in r])
        return self._record(path)

    def json(self, name: str, payload) -> Path:
        path = self.out_dir / name
        path.write_text(json.dumps(_clean(payload), indent=2, sort_keys=True) + "\n")
        return self._record(path)

    def table(self, stem: str, fmt: str, columns: Sequence[str], rows: Sequence[Sequence]) -> Path:
        if fmt == "json":
            return self.json(stem + ".json", [dict(zip(columns, r)) for r in rows])
        return self.csv(stem + ".csv", columns, rows)

    def finish(self) -> Path:
        manifest = {
            "command": self.run_name,
            "config": self.config,
            "version": __version__,
            "seed": self.config.get("seed"),
            "files": self.files,
        }
        path = self.out_dir / f"{self.run_name}.manifest.json"
        path.write_text(json.dumps(_clean(manifest), indent=2, sort_keys=True) + "\n")
        return path


def _config(args: argparse.Namespace) -> dict:
    return {k: str(v) if isinstance(v, Path) else v for k, v in sorted(vars(args).items()) if k != "func"}


def _phi_tag(phi: float) -> str:
    return f"{phi:.6g}".replace(".", "p")


# =============================================================================
# Commands
# =============================================================================

def cmd_bounds(args) -> int:
    model = build_model(args.model, args.j)
    targets = [t.strip() for t in args.targets.split(",") if t.strip()]
    phis = parse_grid(args.phi, "phi grid")
    if not targets:
        raise UsageError("no targets given")
    writer = RunWriter(args.out, f"bounds_{args.model}", _config(args))
    for name in targets:
        rows = []
        for phi in phis:
            q = model_qsl(model, target_for(model, name, phi))
            st = short_time_bound(model.label, name, phi, model.omega) if phi > 0 else None
            rows.append([phi, q.s1, q.s2, q.tau1, q.tau2, q.tau_unified, st])
        writer.table(f"bounds_{args.model}_{name}", args.format, BOUNDS_COLUMNS, rows)
    writer.finish()
    return EXIT_OK


def _options(args) -> OptimizeOptions:
    return OptimizeOptions(method=args.method, max_iters=args.max_iters)


def cmd_sweep(args) -> int:
    model = build_model(args.model, args.j)
    v = target_for(model, args.target, args.phi)
    st = short_time_bound(model.label, args.target, args.phi, model.omega)
    res = mct_sweep(
        model, v, t_hi=args.thi, t_step=args.tstep, n_seeds=args.seeds, threshold=args.threshold,
        n_ts=args.nts, seed=args.seed, opts=_options(args), patience=args.patience,
        workers=args.workers, t_floor=st,
    )
    q = res.qsl
    payload = {
        "model": model.to_dict(),
        "target": args.target,
        "phi": args.phi,
        "threshold": args.threshold,
        "grid": [{"T": t, "best_J": j} for t, j in res.grid],
        "t_min": res.t_min,
        "t_min_by_threshold": {f"{k:g}": v for k, v in res.t_min_by_threshold.items()},
        "bounds": {"tau1": q.tau1, "tau2": q.tau2, "tau_unified": q.tau_unified, "short_time": st},
    }
    if res.t_min is None:
        payload["warning"] = f"no grid time reached infidelity {args.threshold:g}"
    stem = f"sweep_{args.model}_{args.target}_{_phi_tag(args.phi)}"
    writer = RunWriter(args.out, stem, _config(args))
    writer.json(stem + ".json", payload)
    writer.csv(stem + ".csv", SWEEP_COLUMNS, [[t, j] for t, j in res.grid])
    writer.finish()
    return EXIT_OK


def cmd_mct(args) -> int:
    model = build_model(args.model, args.j)
    v = target_for(model, args.target, args.phi)
    r = optimize(model, v, args.T, args.nts, args.seed, _options(args))
    payload = {
        "model": model.to_dict(),
        "target": args.target,
        "phi": args.phi,
        "T": args.T,
        "final_infidelity": r.final_infidelity,
        "iterations": r.iterations,
        "converged": r.converged,
        "field": r.field.to_dict(),
    }
    stem = f"mct_{args.model}_{args.target}_{_phi_tag(args.phi)}_T{_phi_tag(args.T)}"
    writer = RunWriter(args.out, stem, _config(args))
    writer.json(stem + ".json", payload)
    writer.finish()
    return EXIT_OK


def cmd_lie(args) -> int:
    model = build_model(args.model, args.j)
    report = generate_algebra([model.g_a, model.g_b], labels=["A", "B"])
    stem = f"lie_{args.model}"
    writer = RunWriter(args.out, stem, _config(args))
    writer.json(stem + ".json", report.to_dict())
    writer.finish()
    return EXIT_OK


def cmd_classical(args) -> int:
    js = parse_grid(args.j if ":" not in args.j or args.j.count(":") == 2 else args.j + ":0.5", "J grid")
    rows = [[j, spinj_phi_perp(j), tau] for j, tau in classical_limit_table(js, args.omega)]
    writer = RunWriter(args.out, "classical", _config(args))
    writer.table("classical", args.format, CLASSICAL_COLUMNS, rows)
    writer.finish()
    return EXIT_OK


def cmd_verify(args) -> int:
    from .verify import run_checks

    failures = run_checks(args.seed)
    for name, msg in failures:
        print(f"FAILED {name}: {msg}")
    if failures:
        return EXIT_PROPERTY
    print("all property checks passed")
    return EXIT_OK


# =============================================================================
# Parser
# =============================================================================

def _model_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--model", choices=["su2", "su3", "spinJ"], default="su2")
    p.add_argument("--j", type=float, default=None, help="spin for --model spinJ")


def _opt_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--nts", type=int, default=30, help="number of piecewise-constant steps")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--method", choices=["bfgs", "gd"], default="bfgs")
    p.add_argument("--max-iters", type=int, default=5000)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qslcontrol", description=__doc__.split("\n\n")[0].strip())
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bounds", help="speed-limit times and short-time bounds on a phi grid")
    _model_flags(p)
    p.add_argument("--targets", default="x,z")
    p.add_argument("--phi", required=True, help="start:stop:step, list or value (radians)")
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--out", type=Path, default=Path("."))
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("sweep", help="minimum control time by a continuation sweep")
    _model_flags(p)
    _opt_flags(p)
    p.add_argument("--target", required=True)
    p.add_argument("--phi", type=float, required=True)
    p.add_argument("--seeds", type=int, default=20)
    p.add_argument("--tstep", type=float, default=0.05)
    p.add_argument("--thi", type=float, default=None)
    p.add_argument("--threshold", type=float, default=1e-5)
    p.add_argument("--patience", type=int, default=None)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", type=Path, default=Path("."))
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("mct", help="single optimization at a fixed total time")
    _model_flags(p)
    _opt_flags(p)
    p.add_argument("--target", required=True)
    p.add_argument("--phi", type=float, required=True)
    p.add_argument("--T", type=float, required=True)
    p.add_argument("--out", type=Path, default=Path("."))
    p.set_defaults(func=cmd_mct)

    p = sub.add_parser("lie", help="dynamical Lie algebra report")
    _model_flags(p)
    p.add_argument("--out", type=Path, default=Path("."))
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_lie)

    p = sub.add_parser("classical", help="spin-J speed-limit time at the first orthogonal angle")
    p.add_argument("--j", default="0.5:50", help="start:stop[:step] (step 0.5 by default)")
    p.add_argument("--omega", type=float, default=1.0)
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--out", type=Path, default=Path("."))
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_classical)

    p = sub.add_parser("verify", help="run the invariant checks")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (UsageError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (AssertionError, FloatingPointError) as exc:
        print(f"invariant violated: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
