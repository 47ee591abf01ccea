"""Synthetic narrowband snapshots for the triad arrays.

Each source is a unit-power complex exponential at its own digital
frequency. Noise is circular white Gaussian drawn from numpy's ``PCG64``
bit generator, seeded explicitly per trial.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ScenarioError
from .geometry import ArrayLayout
from .manifold import SourceParams, full_steering

GOLDEN_GAMMA = 0x9E3779B97F4A7C15
_MASK64 = (1 << 64) - 1


def trial_seed(seed: int, trial_index: int) -> int:
    """Independent 64-bit seed for one Monte Carlo trial."""
    return (int(seed) ^ ((int(trial_index) * GOLDEN_GAMMA) & _MASK64)) & _MASK64


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(int(seed) & _MASK64))


@dataclass(frozen=True)
class SourceTruth:
    """Ground truth for one source.

    ``params.wavelength`` is ignored by the generator; the effective
    wavelength is derived from the digital frequencies of the whole scenario.
    ``initial_phase`` of ``None`` means "draw uniformly per trial".
    """

    params: SourceParams
    digital_frequency: float
    initial_phase: float | None = None


@dataclass(frozen=True)
class Scenario:
    layout: ArrayLayout
    sources: tuple[SourceTruth, ...]
    snapshots: int = 100
    snr_db: float = math.inf
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "sources", tuple(self.sources))
        k = len(self.sources)
        if not 1 <= k <= 3:
            raise ScenarioError(f"need between 1 and 3 sources, got {k}", "sources")
        if int(self.snapshots) != self.snapshots or self.snapshots < 9:
            raise ScenarioError(f"need at least 9 snapshots, got {self.snapshots!r}", "snapshots")
        freqs = [s.digital_frequency for s in self.sources]
        for i, f in enumerate(freqs):
            if not 0.0 < f < 0.5:
                raise ScenarioError(f"digital frequency must lie in (0, 0.5), got {f!r}",
                                    f"sources[{i}].frequency")
        if len(set(freqs)) != k:
            raise ScenarioError("digital frequencies must be distinct", "sources")
        if math.isnan(self.snr_db):
            raise ScenarioError("snr_db is NaN", "snr_db")

    @property
    def num_sources(self) -> int:
        return len(self.sources)

    @property
    def noiseless(self) -> bool:
        return math.isinf(self.snr_db) and self.snr_db > 0

    @property
    def noise_variance(self) -> float:
        return 0.0 if self.noiseless else 10.0 ** (-self.snr_db / 10.0)

    def wavelengths(self) -> np.ndarray:
        """Source wavelengths in units of the shortest one."""
        f = np.array([s.digital_frequency for s in self.sources])
        return f.max() / f

    def true_params(self) -> list[SourceParams]:
        """Source parameters with the scenario-derived wavelengths filled in."""
        return [
            replace(s.params, wavelength=float(lam))
            for s, lam in zip(self.sources, self.wavelengths())
        ]

    def steering_matrix(self) -> np.ndarray:
        return np.column_stack([full_steering(p, self.layout) for p in self.true_params()])

    def with_(self, **changes) -> "Scenario":
        return replace(self, **changes)


@dataclass
class SnapshotMatrix:
    y: np.ndarray
    scenario: Scenario | None = None
    noise_variance: float = 0.0
    initial_phases: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def num_snapshots(self) -> int:
        return self.y.shape[1]


def signal_waveform(frequency: float, snapshots: int, initial_phase: float = 0.0) -> np.ndarray:
    """Unit-modulus tone ``exp(j(2 pi f m + psi))`` for m = 0..M-1."""
    if not 0.0 < frequency < 0.5:
        raise ValueError(f"digital frequency must lie in (0, 0.5), got {frequency!r}")
    m = np.arange(snapshots)
    return np.exp(1j * (2.0 * math.pi * frequency * m + initial_phase))


def generate(scenario: Scenario, seed: int | None = None) -> SnapshotMatrix:
    """Draw one 9 x M snapshot matrix.

    Initial phases are drawn first, then the noise, both from a generator
    seeded with ``seed`` (default: ``scenario.seed``).
    """
    rng = make_rng(scenario.seed if seed is None else seed)
    m = int(scenario.snapshots)
    drawn = rng.uniform(0.0, 2.0 * math.pi, size=scenario.num_sources)
    phases = np.array([
        d if s.initial_phase is None else s.initial_phase
        for s, d in zip(scenario.sources, drawn)
    ])
    a = scenario.steering_matrix()
    s = np.vstack([
        signal_waveform(src.digital_frequency, m, ph)
        for src, ph in zip(scenario.sources, phases)
    ])
    y = a @ s
    var = scenario.noise_variance
    if var > 0:
        scale = math.sqrt(var / 2.0)
        y = y + scale * (rng.standard_normal((9, m)) + 1j * rng.standard_normal((9, m)))
    return SnapshotMatrix(y=y, scenario=scenario, noise_variance=var, initial_phases=phases)


def snapshots_to_csv(y: np.ndarray) -> str:
    """One row per antenna; columns alternate real and imaginary parts."""
    y = np.asarray(y)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    header = ["antenna"]
    for m in range(y.shape[1]):
        header += [f"re{m}", f"im{m}"]
    w.writerow(header)
    for i, row in enumerate(y):
        cells = [str(i)]
        for z in row:
            cells += [repr(float(z.real)), repr(float(z.imag))]
        w.writerow(cells)
    return buf.getvalue()


def snapshots_from_csv(text: str) -> np.ndarray:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        raise ValueError("empty snapshot file")
    body = rows[1:] if rows[0] and rows[0][0] == "antenna" else rows
    body = [r for r in body if r]
    data = []
    for r in body:
        vals = np.array([float(x) for x in r[1:]])
        if vals.size % 2:
            raise ValueError("odd number of real/imaginary columns")
        data.append(vals[0::2] + 1j * vals[1::2])
    y = np.array(data)
    if y.ndim != 2 or y.shape[0] != 9:
        raise ValueError(f"expected 9 antenna rows, got shape {y.shape}")
    return y
