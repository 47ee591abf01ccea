"""End-to-end acceptance checks, one test per criterion.

A PASS/FAIL line per criterion is printed in the terminal summary (see
conftest.py). Monte Carlo criteria run the full sweeps and take a minute
or so.
"""

import math
import time

import numpy as np

from triad_esprit import estimator as est
from triad_esprit import harness, numerics
from triad_esprit.config import benchmark_scenario
from triad_esprit.geometry import ArrayLayout
from triad_esprit.manifold import SourceParams, poynting
from triad_esprit.synth import Scenario, SourceTruth, generate

from oracles import angle_diff_deg, best_assignment, grid_search, polarization_grid

GRID_STEP_DEG = 0.5


def _report(record, **values):
    for key, val in values.items():
        record(key, val)


def test_criterion_1_poynting_identity(record_property):
    rng = np.random.default_rng(1)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(10_000):
        p = SourceParams(rng.uniform(0, 2 * math.pi), rng.uniform(0, math.pi / 2),
                         rng.uniform(0, math.pi / 2), rng.uniform(-math.pi, math.pi))
        c2 = math.cos(p.theta2)
        ref = (c2 * math.cos(p.theta1), c2 * math.sin(p.theta1), math.sin(p.theta2))
        worst = max(worst, float(np.max(np.abs(poynting(p) - ref))))
    elapsed = time.perf_counter() - t0
    _report(record_property, max_error=worst, seconds=elapsed)
    assert worst <= 1e-12
    assert elapsed < 1.0


def _noiseless_errors(k):
    sc = benchmark_scenario(k)
    res = est.run_pipeline(generate(sc).y, k, sc.layout, sc.wavelengths())
    truth = sc.true_params()
    u_true = np.array([p.direction for p in truth])
    order = list(harness.match_to_truth(res.u, u_true))
    du = float(np.max(np.abs(res.u[order] - u_true)))
    diff = res.angles()[order] - np.array([[p.theta1, p.theta2, p.theta3, p.theta4] for p in truth])
    diff[:, [0, 3]] = (diff[:, [0, 3]] + math.pi) % (2 * math.pi) - math.pi
    return du, float(np.max(np.abs(diff)))


def test_criterion_2_noiseless_exactness(record_property):
    t0 = time.perf_counter()
    du2, da2 = _noiseless_errors(2)
    du3, da3 = _noiseless_errors(3)
    elapsed = time.perf_counter() - t0
    _report(record_property, u_err_2=du2, angle_err_2=da2, u_err_3=du3, angle_err_3=da3)
    assert max(da2, da3) <= 1e-5
    assert max(du2, du3) <= 1e-6
    assert elapsed < 1.0


def _grid_index_gap(estimate_deg, grid_deg, periodic):
    """Grid steps between the grid maximizer and the grid node nearest the estimate."""
    diff = angle_diff_deg(estimate_deg, grid_deg) if periodic else estimate_deg - grid_deg
    return abs(round(diff / GRID_STEP_DEG))


def test_criterion_3_grid_search_oracle(record_property):
    rng = np.random.default_rng(3)
    layout_args = (1.0, 1.0, 1, 2)
    t0 = time.perf_counter()
    worst_gap = 0
    worst_deg = np.zeros(4)
    for i in range(50):
        kind = "dipole" if i % 2 == 0 else "loop"
        layout = ArrayLayout(kind, *layout_args)
        t4 = rng.uniform(20, 160) * rng.choice([-1, 1])
        p = SourceParams.from_degrees(rng.uniform(0, 360), rng.uniform(15, 70),
                                      rng.uniform(15, 75), t4)
        sc = Scenario(layout, (SourceTruth(p, 0.2),), 64)
        y = generate(sc).y
        res = est.run_pipeline(y, 1, layout, [1.0])
        got = np.degrees(res.angles()[0])
        r = est.covariance(y)
        g1, g2, _, _ = grid_search(r, layout, step_deg=GRID_STEP_DEG)
        # polarization grid evaluated at the pipeline's direction
        g3, g4 = polarization_grid(r, layout, res.angles()[0, 0], res.angles()[0, 1],
                                   step_deg=GRID_STEP_DEG)
        gaps = [
            _grid_index_gap(got[0], g1, True),
            _grid_index_gap(got[1], g2, False),
            _grid_index_gap(got[2], g3, False),
            _grid_index_gap(got[3], g4, True),
        ]
        worst_gap = max(worst_gap, max(gaps))
        diffs = np.abs([angle_diff_deg(got[0], g1), got[1] - g2, got[2] - g3,
                        angle_diff_deg(got[3], g4)])
        worst_deg = np.maximum(worst_deg, diffs)
    elapsed = time.perf_counter() - t0
    _report(record_property, worst_grid_steps=worst_gap, worst_deg=worst_deg.tolist(), seconds=elapsed)
    assert worst_gap <= 1
    assert elapsed < 120


def test_criterion_4_snr_trend(record_property):
    grid = list(range(0, 41, 5))
    spec = harness.SweepSpec(benchmark_scenario(2), "snr_db", grid, trials=200, snapshots=100, seed=0)
    t0 = time.perf_counter()
    reports = harness.run_sweep(spec)
    elapsed = time.perf_counter() - t0
    r = np.array([rep.rmse_final for rep in reports])
    violations = int(np.sum(np.diff(r) >= 0))
    slope = (math.log10(r[grid.index(30)]) - math.log10(r[grid.index(10)])) / 2.0
    _report(record_property, rmse=r.tolist(), violations=violations, slope_per_10db=slope,
            failures=sum(rep.failures for rep in reports), seconds=elapsed)
    print(f"\nSNR sweep rmse_final: {np.array2string(r, precision=4)}; slope 10-30 dB = {slope:.3f}")
    assert violations <= 1
    assert -0.7 <= slope <= -0.3
    assert elapsed < 600


def _breakdown_threshold(values, final, coarse):
    """Smallest grid value from which final RMSE stays within 5% of coarse RMSE."""
    close = np.abs(final / coarse - 1.0) <= 0.05
    idx = len(values)
    while idx > 0 and close[idx - 1]:
        idx -= 1
    return values[idx] if idx < len(values) else None, idx


def test_criterion_5_aperture_breakdown(record_property):
    values = [2.0**i for i in range(0, 11)]  # d1 / lambda from 1 to 1024
    spec = harness.SweepSpec(benchmark_scenario(2, snr_db=40), "spacing", values, trials=200,
                             snapshots=100, seed=0)
    t0 = time.perf_counter()
    reports = harness.run_sweep(spec)
    elapsed = time.perf_counter() - t0
    final = np.array([rep.rmse_final for rep in reports])
    coarse = np.array([rep.rmse_coarse for rep in reports])
    threshold, idx = _breakdown_threshold(values, final, coarse)
    violations = int(np.sum(np.diff(final[: max(idx, 1)]) >= 0))
    _report(record_property, final=final.tolist(), coarse=coarse.tolist(),
            threshold=threshold, violations=violations, seconds=elapsed)
    print(f"\nspacing sweep final/coarse: {np.array2string(final / coarse, precision=3)}; "
          f"threshold = {threshold}")
    assert threshold is not None
    assert violations <= 1
    assert 10 <= threshold <= 100
    assert elapsed < 600


def test_criterion_6_disambiguation(record_property):
    rng = np.random.default_rng(6)
    t0 = time.perf_counter()
    bad = 0
    for _ in range(10_000):
        u_true = rng.uniform(-1, 1)
        s = rng.uniform(0.5, 50)
        # fine-grid residual, kept small against the half ambiguity spacing
        resid = float(np.clip(u_true + rng.uniform(-0.1, 0.1) / s, -1, 1)) - u_true
        fine = est.fine_direction_cosine(np.exp(-2j * math.pi * s * (u_true + resid)), s, 1.0)
        n_true = round((u_true + resid - fine) * s)
        bound = 1 / (2 * s) - (abs(resid) + 0.05 / s)
        coarse = u_true + rng.uniform(-bound, bound)
        u, n = est.disambiguate(fine, coarse, s)
        if n != n_true or abs(u - u_true) > abs(resid) + 1e-12:
            bad += 1
    elapsed = time.perf_counter() - t0
    _report(record_property, failures=bad, seconds=elapsed)
    assert bad == 0
    assert elapsed < 1.0


def test_criterion_7_pairing_brute_force(record_property):
    rng = np.random.default_rng(7)
    t0 = time.perf_counter()
    mismatches = 0
    for k in (2, 3):
        for _ in range(1000):
            while True:
                ph = rng.uniform(-math.pi, math.pi, k)
                gaps = [abs((a - b + math.pi) % (2 * math.pi) - math.pi)
                        for i, a in enumerate(ph) for b in ph[i + 1:]]
                if min(gaps) > 0.5:
                    break
            dx = np.exp(1j * (ph[rng.permutation(k)] + rng.uniform(-0.15, 0.15, k)))
            q = np.exp(1j * ph)
            cost = np.abs(q[:, None] - dx[None, :])
            if est.pair_eigenvalues(q, dx) != tuple(best_assignment(cost)):
                mismatches += 1
    elapsed = time.perf_counter() - t0
    _report(record_property, mismatches=mismatches, seconds=elapsed)
    assert mismatches == 0
    assert elapsed < 5.0


def test_criterion_8_numerics_contracts(record_property):
    rng = np.random.default_rng(8)
    t0 = time.perf_counter()
    worst_h = worst_g = 0.0
    for i in range(1000):
        n = 9 if i % 2 == 0 else int(rng.integers(1, 9))
        z = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        a = z + z.conj().T
        w, v = numerics.eig_hermitian(a)
        worst_h = max(worst_h, np.linalg.norm(a @ v - v * w) / np.linalg.norm(a))
    for _ in range(1000):
        n = int(rng.integers(1, 5))
        a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        w, v = numerics.eig_general_small(a)
        worst_g = max(worst_g, np.linalg.norm(a @ v - v * w) / np.linalg.norm(a))
    elapsed = time.perf_counter() - t0
    _report(record_property, hermitian_residual=worst_h, general_residual=worst_g, seconds=elapsed)
    assert worst_h <= 1e-9
    assert worst_g <= 1e-8
    assert elapsed < 10.0


def test_criterion_9_determinism(record_property):
    specs = [
        harness.SweepSpec(benchmark_scenario(2), "snr_db", [0, 20, 40], trials=30, seed=123),
        harness.SweepSpec(benchmark_scenario(3, snr_db=30), "spacing", [2, 64, 512], trials=30, seed=9),
    ]
    same = True
    for spec in specs:
        first = harness.export_csv(harness.run_sweep(spec)).encode()
        second = harness.export_csv(harness.run_sweep(spec)).encode()
        same &= first == second
    record_property("identical", same)
    assert same
