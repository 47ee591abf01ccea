"""Field responses and steering vectors of the triad arrays."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .geometry import ArrayLayout, TriadKind

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class SourceParams:
    """Direction and polarization of one plane wave (angles in radians).

    ``theta1`` azimuth in [0, 2pi), ``theta2`` elevation in [0, pi/2],
    ``theta3`` auxiliary polarization angle in [0, pi/2], ``theta4``
    polarization phase difference in [-pi, pi). ``wavelength`` is in units of
    the reference wavelength.
    """

    theta1: float
    theta2: float
    theta3: float
    theta4: float
    wavelength: float = 1.0

    def __post_init__(self):
        tol = 1e-12
        if not (-tol <= self.theta1 < TWO_PI + tol):
            raise ValueError(f"theta1 out of [0, 2pi): {self.theta1!r}")
        if not (-tol <= self.theta2 <= math.pi / 2 + tol):
            raise ValueError(f"theta2 out of [0, pi/2]: {self.theta2!r}")
        if not (-tol <= self.theta3 <= math.pi / 2 + tol):
            raise ValueError(f"theta3 out of [0, pi/2]: {self.theta3!r}")
        if not (-math.pi - tol <= self.theta4 < math.pi + tol):
            raise ValueError(f"theta4 out of [-pi, pi): {self.theta4!r}")
        if not (self.wavelength > 0 and math.isfinite(self.wavelength)):
            raise ValueError(f"wavelength must be positive: {self.wavelength!r}")

    @classmethod
    def from_degrees(cls, theta1, theta2, theta3, theta4, wavelength=1.0):
        return cls(
            math.radians(theta1) % TWO_PI,
            math.radians(theta2),
            math.radians(theta3),
            wrap_angle(math.radians(theta4)),
            wavelength,
        )

    @property
    def direction(self) -> "DirectionCosines":
        return direction_cosines(self.theta1, self.theta2)


class DirectionCosines(NamedTuple):
    u_x: float
    u_y: float


def wrap_angle(x):
    """Wrap to [-pi, pi)."""
    return (x + math.pi) % TWO_PI - math.pi


def direction_cosines(theta1, theta2) -> DirectionCosines:
    c2 = math.cos(theta2)
    return DirectionCosines(c2 * math.cos(theta1), c2 * math.sin(theta1))


def e_field(p: SourceParams) -> np.ndarray:
    """Responses of x-, y- and z-oriented short dipoles."""
    s1, c1 = math.sin(p.theta1), math.cos(p.theta1)
    s2, c2 = math.sin(p.theta2), math.cos(p.theta2)
    s3, c3 = math.sin(p.theta3), math.cos(p.theta3)
    ej4 = complex(math.cos(p.theta4), math.sin(p.theta4))
    return np.array(
        [
            c1 * s2 * s3 * ej4 - s1 * c3,
            s1 * s2 * s3 * ej4 + c1 * c3,
            -c2 * s3 * ej4,
        ]
    )


def h_field(p: SourceParams) -> np.ndarray:
    """Responses of x-, y- and z-oriented small loops."""
    s1, c1 = math.sin(p.theta1), math.cos(p.theta1)
    s2, c2 = math.sin(p.theta2), math.cos(p.theta2)
    s3, c3 = math.sin(p.theta3), math.cos(p.theta3)
    ej4 = complex(math.cos(p.theta4), math.sin(p.theta4))
    return np.array(
        [
            -s1 * s3 * ej4 - c1 * s2 * c3,
            c1 * s3 * ej4 - s1 * s2 * c3,
            c2 * c3 + 0j,
        ]
    )


def field_response(p: SourceParams, kind: TriadKind) -> np.ndarray:
    return e_field(p) if kind is TriadKind.DIPOLE else h_field(p)


def triad_manifold(p: SourceParams, layout: ArrayLayout) -> np.ndarray:
    """Response of one non-collocated triad, phase-referenced to its x element."""
    u_y = direction_cosines(p.theta1, p.theta2).u_y
    phase = np.exp(-1j * TWO_PI * u_y * layout.intra_offsets / p.wavelength)
    return field_response(p, layout.kind) * phase


def inter_triad_factors(p: SourceParams, layout: ArrayLayout) -> tuple[complex, complex]:
    """Phase factors (q_y, q_x) of triads 2 and 3 relative to triad 1."""
    u = direction_cosines(p.theta1, p.theta2)
    q_y = np.exp(-1j * TWO_PI * layout.delta_y * u.u_y / p.wavelength)
    q_x = np.exp(-1j * TWO_PI * layout.delta_x * u.u_x / p.wavelength)
    return complex(q_y), complex(q_x)


def full_steering(p: SourceParams, layout: ArrayLayout) -> np.ndarray:
    """Nine-element steering vector ``[a_nc; q_y a_nc; q_x a_nc]``."""
    a_nc = triad_manifold(p, layout)
    q_y, q_x = inter_triad_factors(p, layout)
    return np.kron(np.array([1.0, q_y, q_x]), a_nc)


def poynting(p: SourceParams) -> np.ndarray:
    """``e x conj(h)``; equals the unit vector (u_x, u_y, sin theta2)."""
    return np.real(np.cross(e_field(p), np.conj(h_field(p))))
