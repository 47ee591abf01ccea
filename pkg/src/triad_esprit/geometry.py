"""Sparse layouts built from three spatially spread dipole or loop triads.

All lengths are in units of the reference wavelength (the shortest source
wavelength). Within a triad the x-, y- and z-oriented elements sit on a line
parallel to the y-axis at offsets ``0``, ``d1`` and ``d1 + d2``. The second
triad is shifted by ``delta_y`` along y, the third by ``delta_x`` along x.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import NonIntegerMultiple, NonPositiveSpacing


class TriadKind(enum.Enum):
    DIPOLE = "dipole"
    LOOP = "loop"


@dataclass(frozen=True)
class ArrayLayout:
    kind: TriadKind
    delta_y: float
    delta_x: float
    m1: int
    m2: int

    def __post_init__(self):
        if not isinstance(self.kind, TriadKind):
            object.__setattr__(self, "kind", TriadKind(self.kind))
        for name in ("delta_y", "delta_x"):
            val = getattr(self, name)
            if not (math.isfinite(val) and val > 0):
                raise NonPositiveSpacing(f"{name} must be positive, got {val!r}")
        for name in ("m1", "m2"):
            val = getattr(self, name)
            if isinstance(val, bool) or int(val) != val or val < 1:
                raise NonIntegerMultiple(f"{name} must be a positive integer, got {val!r}")
            object.__setattr__(self, name, int(val))

    @property
    def d1(self) -> float:
        return self.m1 * self.delta_y

    @property
    def d2(self) -> float:
        return self.m2 * self.delta_y

    @property
    def intra_offsets(self) -> np.ndarray:
        """y-offsets of the x-, y- and z-oriented element inside one triad."""
        return np.array([0.0, self.d1, self.d1 + self.d2])

    def scaled(self, factor: float) -> "ArrayLayout":
        return ArrayLayout(self.kind, self.delta_y * factor, self.delta_x * factor, self.m1, self.m2)


def _multiple_of(d, delta_y, name, rtol=1e-9):
    if not (math.isfinite(d) and d > 0):
        raise NonPositiveSpacing(f"{name} must be positive, got {d!r}")
    ratio = d / delta_y
    m = round(ratio)
    if m < 1 or abs(ratio - m) > rtol * max(1.0, ratio):
        raise NonIntegerMultiple(
            f"{name}={d!r} is not a positive integer multiple of delta_y={delta_y!r}"
        )
    return int(m)


def validate(
    kind,
    delta_y,
    delta_x,
    m1=None,
    m2=None,
    d1=None,
    d2=None,
) -> ArrayLayout:
    """Build an :class:`ArrayLayout` from raw fields.

    Each intra-triad spacing may be given as its integer multiple (``m1``,
    ``m2``) or as a length (``d1``, ``d2``), in which case it must be a
    positive integer multiple of ``delta_y``.
    """
    delta_y = float(delta_y)
    delta_x = float(delta_x)
    if not (math.isfinite(delta_y) and delta_y > 0):
        raise NonPositiveSpacing(f"delta_y must be positive, got {delta_y!r}")
    if not (math.isfinite(delta_x) and delta_x > 0):
        raise NonPositiveSpacing(f"delta_x must be positive, got {delta_x!r}")

    def pick(m, d, name):
        if m is None and d is None:
            raise NonIntegerMultiple(f"one of m{name[-1]} or {name} is required")
        if d is not None:
            md = _multiple_of(float(d), delta_y, name)
            if m is not None and int(m) != md:
                raise NonIntegerMultiple(f"{name}={d!r} disagrees with m{name[-1]}={m!r}")
            return md
        return m

    return ArrayLayout(
        TriadKind(kind) if not isinstance(kind, TriadKind) else kind,
        delta_y,
        delta_x,
        pick(m1, d1, "d1"),
        pick(m2, d2, "d2"),
    )


def element_positions(layout: ArrayLayout) -> np.ndarray:
    """Positions of the nine antennas as a 9x3 array of (x, y, z).

    Rows follow the steering-vector order: triad 1, triad 2, triad 3, each
    listing its x-, y- and z-oriented element.
    """
    offs = layout.intra_offsets
    zeros = np.zeros(3)
    t1 = np.column_stack([zeros, offs, zeros])
    t2 = np.column_stack([zeros, offs + layout.delta_y, zeros])
    t3 = np.column_stack([zeros + layout.delta_x, offs, zeros])
    return np.vstack([t1, t2, t3])
