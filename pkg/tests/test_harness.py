import math

import numpy as np
import pytest

from triad_esprit import harness
from triad_esprit.config import benchmark_scenario
from triad_esprit.geometry import ArrayLayout
from triad_esprit.manifold import SourceParams
from triad_esprit.synth import Scenario, SourceTruth


def test_rmse_examples():
    assert harness.rmse([(0.2, 0.3)] * 4, (0.2, 0.3)) == 0.0
    assert math.isclose(harness.rmse([(0.3, 0.4)], (0, 0)), 0.5)
    assert math.isclose(harness.rmse([(0.01, 0), (-0.01, 0)], (0, 0)), 0.01)


def test_rmse_empty():
    with pytest.raises(ValueError):
        harness.rmse([], (0, 0))


def test_match_to_truth():
    truth = np.array([[0.1, 0.2], [0.5, -0.3], [-0.4, 0.0]])
    est = truth[[2, 0, 1]] + 1e-3
    order = harness.match_to_truth(est, truth)
    assert order == (1, 2, 0)


def test_spec_validation():
    sc = benchmark_scenario(1)
    with pytest.raises(ValueError):
        harness.SweepSpec(sc, "bandwidth", [1])
    with pytest.raises(ValueError):
        harness.SweepSpec(sc, "snr_db", [])
    with pytest.raises(ValueError):
        harness.SweepSpec(sc, "spacing", [0])
    with pytest.raises(ValueError):
        harness.SweepSpec(sc, "snr_db", [1], trials=0)


def test_spacing_grid_value_maps_to_layout():
    spec = harness.SweepSpec(benchmark_scenario(2), "spacing", [8])
    lay = spec.scenario_at(8).layout
    assert (lay.d1, lay.d2, lay.delta_x, lay.delta_y) == (8, 8, 4, 4)


def test_nyquist_high_snr_sanity():
    p = SourceParams.from_degrees(30, 15, 45, 90)
    sc = Scenario(ArrayLayout("dipole", 0.5, 0.5, 1, 1), (SourceTruth(p, 0.2),), 100, 60.0)
    rep = harness.run_point(harness.SweepSpec(sc, "snr_db", [60], trials=50), 60)
    assert rep.failures == 0
    assert rep.rmse_final < 1e-4


def test_final_beats_coarse_before_breakdown():
    spec = harness.SweepSpec(benchmark_scenario(2), "snr_db", [20, 30], trials=40, seed=5)
    for rep in harness.run_sweep(spec):
        assert rep.rmse_final < rep.rmse_coarse
        assert rep.rmse_fine_only <= rep.rmse_final + 1e-15


def test_breakdown_final_equals_coarse():
    # d1/lambda = 1024 at 40 dB: the coarse error exceeds half the ambiguity spacing
    spec = harness.SweepSpec(benchmark_scenario(2, snr_db=40), "spacing", [1024], trials=40, seed=2)
    rep = harness.run_sweep(spec)[0]
    assert abs(rep.rmse_final / rep.rmse_coarse - 1) < 0.15
    assert rep.rmse_fine_only < 0.1 * rep.rmse_final


def test_csv_export_shapes():
    assert harness.export_csv([]).splitlines() == [",".join(harness.CSV_FIELDS)]
    spec = harness.SweepSpec(benchmark_scenario(1), "snr_db", [20], trials=5)
    text = harness.export_csv(harness.run_sweep(spec))
    assert len(text.splitlines()) == 2
    row = harness.parse_csv(text)[0]
    assert row["grid_value"] == 20 and row["trials"] == 5 and row["failures"] == 0


def test_sweep_deterministic_and_worker_independent():
    spec = harness.SweepSpec(benchmark_scenario(2), "snr_db", [10, 20], trials=12, seed=77)
    a = harness.export_csv(harness.run_sweep(spec))
    b = harness.export_csv(harness.run_sweep(spec))
    c = harness.export_csv(harness.run_sweep(spec, workers=2))
    assert a == b == c
    d = harness.export_csv(harness.run_sweep(harness.SweepSpec(benchmark_scenario(2), "snr_db", [10, 20],
                                                                trials=12, seed=78)))
    assert d != a


def test_failures_counted_by_stage():
    p = SourceParams.from_degrees(20, 30, 50, 0)
    sc = Scenario(ArrayLayout("dipole", 1, 1, 1, 1), (SourceTruth(p, 0.1),), 32)
    rep = harness.run_point(harness.SweepSpec(sc, "snr_db", [200], trials=3), 200)
    assert rep.failures == 3
    assert rep.failure_stages == {"coarse_angles": 3}
    assert math.isnan(rep.rmse_final)
    assert "nan" in harness.export_csv([rep])


def test_spec_json_round_trips_scenario():
    import json

    spec = harness.SweepSpec(benchmark_scenario(2), "spacing", [2, 4], trials=3)
    data = json.loads(harness.spec_json(spec))
    assert data["grid"] == [2.0, 4.0] and data["param"] == "spacing"
    assert len(data["scenario"]["sources"]) == 2
