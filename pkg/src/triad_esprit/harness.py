"""Monte Carlo sweeps of direction-cosine RMSE."""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
import time
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .errors import TriadEspritError
from .estimator import run_pipeline
from .geometry import ArrayLayout
from .synth import Scenario, generate, trial_seed

PARAMS = ("snr_db", "spacing")

CSV_FIELDS = ["grid_value", "rmse_final", "rmse_coarse", "rmse_fine_only", "failures", "trials", "seed"]


@dataclass(frozen=True)
class SweepSpec:
    """One Monte Carlo sweep.

    ``param`` is ``"snr_db"`` or ``"spacing"``. For ``"spacing"`` a grid value
    ``v`` is the intra-triad spacing ``d1 = d2`` in reference wavelengths, with
    ``delta_x = delta_y = v / 2`` (so ``m1 = m2 = 2``).
    """

    scenario: Scenario
    param: str
    grid: tuple[float, ...]
    trials: int = 200
    snapshots: int = 100
    seed: int = 0
    wavelength_mode: str = "known"

    def __post_init__(self):
        object.__setattr__(self, "grid", tuple(float(g) for g in self.grid))
        if self.param not in PARAMS:
            raise ValueError(f"param must be one of {PARAMS}, got {self.param!r}")
        if not self.grid:
            raise ValueError("grid is empty")
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if self.wavelength_mode not in ("known", "estimate"):
            raise ValueError(f"unknown wavelength mode {self.wavelength_mode!r}")
        if self.param == "spacing" and any(g <= 0 for g in self.grid):
            raise ValueError("spacing grid values must be positive")

    def scenario_at(self, value: float) -> Scenario:
        sc = self.scenario
        if self.param == "snr_db":
            return replace(sc, snr_db=float(value), snapshots=self.snapshots)
        half = float(value) / 2.0
        layout = ArrayLayout(sc.layout.kind, half, half, 2, 2)
        return replace(sc, layout=layout, snapshots=self.snapshots)

    def to_dict(self) -> dict:
        from .config import scenario_to_config

        return {
            "scenario": scenario_to_config(self.scenario),
            "param": self.param,
            "grid": list(self.grid),
            "trials": self.trials,
            "snapshots": self.snapshots,
            "seed": self.seed,
            "wavelength_mode": self.wavelength_mode,
        }


@dataclass
class TrialReport:
    """Aggregate over all trials at one grid value.

    ``rmse_fine_only`` uses the fine estimates resolved with the ambiguity
    integer closest to the truth, i.e. the accuracy attainable without
    disambiguation errors.
    """

    grid_value: float
    rmse_final: float
    rmse_coarse: float
    rmse_fine_only: float
    failures: int
    trials: int
    seed: int
    rmse_final_per_source: list[float] = field(default_factory=list)
    rmse_coarse_per_source: list[float] = field(default_factory=list)
    failure_stages: dict = field(default_factory=dict)
    wall_time: float = 0.0


def rmse(estimates, truth) -> float:
    """Root mean square direction-cosine error over runs.

    ``estimates`` is a sequence of (u_x, u_y); ``truth`` a single (u_x, u_y).
    """
    est = np.asarray(estimates, dtype=float).reshape(-1, 2)
    if est.shape[0] == 0:
        raise ValueError("no estimates")
    err = est - np.asarray(truth, dtype=float)[None, :]
    return float(np.sqrt(np.mean(np.sum(err**2, axis=1))))


def match_to_truth(u_est: np.ndarray, u_true: np.ndarray) -> tuple[int, ...]:
    """Assignment of estimates to true sources minimizing total squared distance.

    Entry ``k`` is the estimate index matched to true source ``k``.
    """
    k = len(u_true)
    best = min(
        itertools.permutations(range(k)),
        key=lambda p: float(np.sum((u_est[list(p)] - u_true) ** 2)),
    )
    return best


def _oracle_fine(fine: float, truth: float, spacing_over_lambda: float) -> float:
    n = round((truth - fine) * spacing_over_lambda)
    return fine + n / spacing_over_lambda


def run_trial(scenario: Scenario, seed: int, wavelength_mode: str = "known"):
    """One generate-then-estimate run.

    Returns ``(final, coarse, fine_only)`` arrays of shape K x 2 in truth
    order, or ``None, stage`` on a pipeline failure.
    """
    snaps = generate(scenario, seed=seed)
    wl = scenario.wavelengths() if wavelength_mode == "known" else "estimate"
    try:
        res = run_pipeline(snaps.y, scenario.num_sources, scenario.layout, wl)
    except TriadEspritError as exc:
        return None, exc.stage or type(exc).__name__
    u_true = np.array([p.direction for p in scenario.true_params()])
    order = list(match_to_truth(res.u, u_true))
    lay = scenario.layout
    final = res.u[order]
    coarse = res.u_coarse[order]
    fine = np.array([
        [
            _oracle_fine(s.u_x_fine, t[0], lay.delta_x / s.wavelength),
            _oracle_fine(s.u_y_fine, t[1], lay.delta_y / s.wavelength),
        ]
        for s, t in zip((res.sources[i] for i in order), u_true)
    ])
    return (final, coarse, fine), None


def _trial_job(args):
    scenario, seed, mode = args
    return run_trial(scenario, seed, mode)


def _rmse_all(arrs: list[np.ndarray], truth: np.ndarray) -> tuple[float, list[float]]:
    if not arrs:
        return math.nan, [math.nan] * len(truth)
    stack = np.stack(arrs)  # trials x K x 2
    per = [rmse(stack[:, k, :], truth[k]) for k in range(len(truth))]
    overall = float(np.sqrt(np.mean(np.square(per))))
    return overall, per


def run_point(spec: SweepSpec, value: float, executor=None) -> TrialReport:
    t0 = time.perf_counter()
    sc = spec.scenario_at(value)
    jobs = [(sc, trial_seed(spec.seed, i), spec.wavelength_mode) for i in range(spec.trials)]
    results = list(executor.map(_trial_job, jobs, chunksize=8)) if executor else [
        _trial_job(j) for j in jobs
    ]
    finals, coarses, fines = [], [], []
    stages = Counter()
    for out, stage in results:
        if out is None:
            stages[stage] += 1
            continue
        finals.append(out[0])
        coarses.append(out[1])
        fines.append(out[2])
    truth = np.array([p.direction for p in sc.true_params()])
    r_final, per_final = _rmse_all(finals, truth)
    r_coarse, per_coarse = _rmse_all(coarses, truth)
    r_fine, _ = _rmse_all(fines, truth)
    return TrialReport(
        grid_value=float(value),
        rmse_final=r_final,
        rmse_coarse=r_coarse,
        rmse_fine_only=r_fine,
        failures=sum(stages.values()),
        trials=spec.trials,
        seed=spec.seed,
        rmse_final_per_source=per_final,
        rmse_coarse_per_source=per_coarse,
        failure_stages=dict(sorted(stages.items())),
        wall_time=time.perf_counter() - t0,
    )


def run_sweep(spec: SweepSpec, workers: int = 1) -> list[TrialReport]:
    """Run every grid point of ``spec``.

    Trial ``i`` uses seed ``trial_seed(spec.seed, i)`` at every grid point, so
    neighbouring points share noise realizations. Results are reduced in
    trial order and do not depend on ``workers``.
    """
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            return [run_point(spec, v, ex) for v in spec.grid]
    return [run_point(spec, v) for v in spec.grid]


def _fmt(x: float) -> str:
    return "nan" if math.isnan(x) else f"{x:.12g}"


def export_csv(reports: Sequence[TrialReport]) -> str:
    """CSV text, one row per grid point; floats carry 12 significant digits."""
    k = max((len(r.rmse_final_per_source) for r in reports), default=0)
    header = list(CSV_FIELDS)
    header += [f"rmse_final_s{i + 1}" for i in range(k)]
    header += [f"rmse_coarse_s{i + 1}" for i in range(k)]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in reports:
        w.writerow(
            [_fmt(r.grid_value), _fmt(r.rmse_final), _fmt(r.rmse_coarse), _fmt(r.rmse_fine_only),
             str(r.failures), str(r.trials), str(r.seed)]
            + [_fmt(x) for x in r.rmse_final_per_source]
            + [_fmt(x) for x in r.rmse_coarse_per_source]
        )
    return buf.getvalue()


def parse_csv(text: str) -> list[dict]:
    """Rows of an :func:`export_csv` file with numeric fields converted."""
    rows = []
    for rec in csv.DictReader(io.StringIO(text)):
        row = {}
        for key, val in rec.items():
            row[key] = int(val) if key in ("failures", "trials", "seed") else float(val)
        rows.append(row)
    return rows


def spec_json(spec: SweepSpec) -> str:
    return json.dumps(spec.to_dict(), indent=2, sort_keys=True) + "\n"
