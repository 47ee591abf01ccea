"""Joint direction-of-arrival and polarization estimation with sparse,
non-collocated dipole or loop triads."""

from .errors import TriadEspritError
from .estimator import EstimationResult, run_pipeline
from .geometry import ArrayLayout, TriadKind, element_positions, validate
from .manifold import SourceParams, full_steering
from .synth import Scenario, SnapshotMatrix, SourceTruth, generate

__all__ = [
    "ArrayLayout",
    "EstimationResult",
    "Scenario",
    "SnapshotMatrix",
    "SourceParams",
    "SourceTruth",
    "TriadEspritError",
    "TriadKind",
    "element_positions",
    "full_steering",
    "generate",
    "run_pipeline",
    "validate",
]

__version__ = "0.1.0"
