"""Random well-posed scenarios for property tests."""

import math

import numpy as np

from triad_esprit.geometry import ArrayLayout
from triad_esprit.manifold import SourceParams
from triad_esprit.synth import Scenario, SourceTruth


def _circ(a, b):
    return abs((a - b + math.pi) % (2 * math.pi) - math.pi)


def _separated(phases, gap):
    return all(_circ(a, b) >= gap for i, a in enumerate(phases) for b in phases[i + 1:])


def random_scenario(rng, k=None, kind=None, snr_db=math.inf, gap=0.3):
    """Scenario whose rotation eigenvalues are distinct and polarization non-degenerate.

    Angles stay a few degrees away from the elevation and polarization
    edges, |sin theta4| >= 0.1, and the y- and x-rotation phases of any two
    sources differ by at least ``gap`` radians.
    """
    k = int(rng.integers(1, 4)) if k is None else k
    kind = kind or ("dipole" if rng.random() < 0.5 else "loop")
    while True:
        lay = ArrayLayout(kind, rng.uniform(0.5, 5), rng.uniform(0.5, 5),
                          int(rng.integers(1, 4)), int(rng.integers(1, 4)))
        freqs = rng.uniform(0.05, 0.45, size=k)
        if k > 1 and np.min(np.abs(np.subtract.outer(freqs, freqs))[np.triu_indices(k, 1)]) < 0.02:
            continue
        srcs = []
        for f in freqs:
            t4 = rng.uniform(-180, 180)
            while abs(math.sin(math.radians(t4))) < 0.1:
                t4 = rng.uniform(-180, 180)
            p = SourceParams.from_degrees(rng.uniform(0, 360), rng.uniform(5, 85),
                                          rng.uniform(5, 85), t4)
            srcs.append(SourceTruth(p, float(f)))
        sc = Scenario(lay, tuple(srcs), 64, snr_db, int(rng.integers(2**32)))
        lam = sc.wavelengths()
        py = [-2 * math.pi * lay.delta_y * s.params.direction.u_y / w for s, w in zip(srcs, lam)]
        px = [-2 * math.pi * lay.delta_x * s.params.direction.u_x / w for s, w in zip(srcs, lam)]
        if _separated(py, gap) and _separated(px, gap):
            return sc
