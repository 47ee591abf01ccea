"""Command-line front end.

Exit codes: 0 success, 1 I/O failure, 2 invalid input, 3 estimation failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import estimator, harness
from .config import scenario_from_config, scenario_to_config
from .errors import LayoutError, ScenarioError, TriadEspritError
from .geometry import validate
from .synth import generate, snapshots_from_csv, snapshots_to_csv

EXIT_OK, EXIT_IO, EXIT_INVALID, EXIT_ESTIMATION = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _load_scenario(path):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise IOError(f"cannot read config {path}: {exc}") from exc
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: invalid JSON: {exc}") from exc
    return scenario_from_config(cfg)


def _write(path, text):
    try:
        Path(path).write_text(text)
    except OSError as exc:
        raise IOError(f"cannot write {path}: {exc}") from exc


def cmd_simulate(args) -> int:
    sc = _load_scenario(args.config)
    if args.seed is not None:
        sc = sc.with_(seed=args.seed)
    snaps = generate(sc)
    out = Path(args.out)
    _write(out, snapshots_to_csv(snaps.y))
    meta = scenario_to_config(sc)
    meta["initial_phases_deg"] = [math.degrees(p) for p in snaps.initial_phases]
    meta["wavelengths"] = [float(w) for w in sc.wavelengths()]
    _write(out.with_name(out.name + ".json"), json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return EXIT_OK


def _layout_from_args(args):
    if args.config:
        return _load_scenario(args.config).layout
    if args.delta_y is None or args.delta_x is None:
        raise UsageError("give --config or --delta-y/--delta-x/--m1/--m2")
    try:
        return validate(args.kind, args.delta_y, args.delta_x, m1=args.m1, m2=args.m2)
    except LayoutError as exc:
        raise UsageError(str(exc)) from exc


def cmd_estimate(args) -> int:
    if args.k not in (1, 2, 3):
        raise UsageError(f"--k must be 1, 2 or 3, got {args.k}")
    layout = _layout_from_args(args)
    try:
        y = snapshots_from_csv(Path(args.input).read_text())
    except OSError as exc:
        raise IOError(f"cannot read {args.input}: {exc}") from exc
    except ValueError as exc:
        raise UsageError(f"{args.input}: {exc}") from exc
    if args.estimate_freq:
        wl = "estimate"
    elif args.wavelengths:
        try:
            wl = [float(x) for x in args.wavelengths.split(",")]
        except ValueError as exc:
            raise UsageError(f"--wavelengths: {exc}") from exc
        if len(wl) != args.k or any(w <= 0 for w in wl):
            raise UsageError(f"--wavelengths needs {args.k} positive values")
    else:
        wl = [1.0] * args.k
    try:
        res = estimator.run_pipeline(y, args.k, layout, wl)
    except TriadEspritError as exc:
        print(json.dumps({"error": type(exc).__name__, "stage": exc.stage, "message": str(exc)}))
        return EXIT_ESTIMATION
    print(json.dumps(res.to_dict(degrees=True), indent=2))
    return EXIT_OK


def cmd_sweep(args) -> int:
    sc = _load_scenario(args.config)
    if args.step <= 0:
        raise UsageError("--step must be positive")
    if args.to < args.start:
        raise UsageError("--to must not be below --from")
    if args.trials < 1:
        raise UsageError("--trials must be at least 1")
    n = int(math.floor((args.to - args.start) / args.step + 1e-9)) + 1
    grid = [args.start + i * args.step for i in range(n)]
    param = "snr_db" if args.param == "snr" else "spacing"
    try:
        spec = harness.SweepSpec(
            scenario=sc,
            param=param,
            grid=grid,
            trials=args.trials,
            snapshots=args.snapshots if args.snapshots is not None else sc.snapshots,
            seed=args.seed if args.seed is not None else sc.seed,
            wavelength_mode="estimate" if args.estimate_freq else "known",
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    reports = harness.run_sweep(spec, workers=args.workers)
    out = Path(args.out)
    _write(out, harness.export_csv(reports))
    _write(out.with_name(out.name + ".json"), harness.spec_json(spec))
    return EXIT_OK


def run_selftest(verbose: bool = True) -> bool:
    """Noiseless round trips of the benchmark scenarios plus the Poynting identity."""
    from .config import benchmark_scenario
    from .manifold import SourceParams, poynting

    ok = True
    rng = np.random.default_rng(12345)
    worst = 0.0
    for _ in range(2000):
        p = SourceParams(rng.uniform(0, 2 * math.pi), rng.uniform(0, math.pi / 2),
                         rng.uniform(0, math.pi / 2), rng.uniform(-math.pi, math.pi))
        c2 = math.cos(p.theta2)
        ref = np.array([c2 * math.cos(p.theta1), c2 * math.sin(p.theta1), math.sin(p.theta2)])
        worst = max(worst, float(np.max(np.abs(poynting(p) - ref))))
    passed = worst <= 1e-12
    ok &= passed
    if verbose:
        print(f"{'PASS' if passed else 'FAIL'} poynting identity (max error {worst:.2e})")

    for kind in ("dipole", "loop"):
        for k in (1, 2, 3):
            sc = benchmark_scenario(k, kind=kind)
            truth = np.array([[p.theta1, p.theta2, p.theta3, p.theta4] for p in sc.true_params()])
            try:
                res = estimator.run_pipeline(generate(sc).y, k, sc.layout, sc.wavelengths())
                u_true = np.array([p.direction for p in sc.true_params()])
                order = list(harness.match_to_truth(res.u, u_true))
                err_u = float(np.max(np.abs(res.u[order] - u_true)))
                diff = res.angles()[order] - truth
                diff[:, [0, 3]] = (diff[:, [0, 3]] + math.pi) % (2 * math.pi) - math.pi
                err_t = float(np.max(np.abs(diff)))
                passed = err_u <= 1e-6 and err_t <= 1e-5
                detail = f"u err {err_u:.1e}, angle err {err_t:.1e}"
            except TriadEspritError as exc:
                passed = False
                detail = f"{type(exc).__name__} at {exc.stage}"
            ok &= passed
            if verbose:
                print(f"{'PASS' if passed else 'FAIL'} noiseless {kind} K={k} ({detail})")
    return bool(ok)


def cmd_selftest(args) -> int:
    return EXIT_OK if run_selftest() else EXIT_ESTIMATION


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="triad-esprit", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="generate a snapshot CSV from a scenario config")
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--seed", type=int)
    s.set_defaults(func=cmd_simulate)

    e = sub.add_parser("estimate", help="estimate directions and polarizations from a snapshot CSV")
    e.add_argument("--in", dest="input", required=True)
    e.add_argument("--k", type=int, required=True)
    e.add_argument("--config", help="scenario config supplying the array layout")
    e.add_argument("--kind", choices=["dipole", "loop"], default="dipole")
    e.add_argument("--delta-y", type=float)
    e.add_argument("--delta-x", type=float)
    e.add_argument("--m1", type=int, default=1)
    e.add_argument("--m2", type=int, default=1)
    g = e.add_mutually_exclusive_group()
    g.add_argument("--wavelengths", help="comma-separated source wavelengths")
    g.add_argument("--estimate-freq", action="store_true")
    e.set_defaults(func=cmd_estimate)

    w = sub.add_parser("sweep", help="Monte Carlo RMSE sweep over SNR or spacing")
    w.add_argument("--config", required=True)
    w.add_argument("--param", choices=["snr", "spacing"], required=True)
    w.add_argument("--from", dest="start", type=float, required=True)
    w.add_argument("--to", type=float, required=True)
    w.add_argument("--step", type=float, required=True)
    w.add_argument("--trials", type=int, default=200)
    w.add_argument("--snapshots", type=int)
    w.add_argument("--seed", type=int)
    w.add_argument("--workers", type=int, default=1)
    w.add_argument("--estimate-freq", action="store_true")
    w.add_argument("--out", required=True)
    w.set_defaults(func=cmd_sweep)

    t = sub.add_parser("selftest", help="run built-in invariant checks")
    t.set_defaults(func=cmd_selftest)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_INVALID
    try:
        return args.func(args)
    except (UsageError, ScenarioError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except IOError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
